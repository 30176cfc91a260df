use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Parser;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use ifm_core::efficiency::{eta_cascade_balanced, eta_ev, eta_mismatch, eta_zeno, zeno_absorption_per_round, Mismatch};
use ifm_core::estimation::{baseline_compare, ensemble_estimate, EfficiencyEstimate, EnsembleConfig, NoiseConfig};
use ifm_core::optics::Reflectivity;
use ifm_core::optimizer::{optimize_reflectivities, verify_prefix_property, OptimizerConfig};
use ifm_core::protocols::Scheme;
use ifm_core::rng::derive_seed;
use ifm_core::robustness::{histogram, robustness_histogram, summarize_std, RobustnessConfig};
use ifm_core::tree::{build_tree, Chain, TreeNode};

use crate::output::{Outputs, RunManifest};
use crate::plot::{self, Figure, Series, Style};

/// Invalid flags or config file; exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

/// Too many flagged estimates or a failed property check; exit code 3.
#[derive(Debug)]
pub struct NumericalFailure(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "numerical failure: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}
impl std::error::Error for NumericalFailure {}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// Flags shared by every experiment. None of them enter the manifest.
#[derive(clap::Args, Debug, Clone, Default)]
pub struct Common {
    /// Directory for CSV, SVG and manifest files.
    #[arg(long, env = "IFM_LAB_OUT", default_value = "ifm-out")]
    pub out_dir: PathBuf,
    /// JSON file with this command's settings; replaces the other flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Full-size trial counts (10^6 robustness trials).
    #[arg(long)]
    pub paper_scale: bool,
}

pub trait Experiment: Serialize + DeserializeOwned + Default {
    const NAME: &'static str;
    fn common(&self) -> &Common;
    fn common_mut(&mut self) -> &mut Common;
    fn seed(&self) -> Option<u64>;
    fn scale_up(&mut self) {}
    fn run(&self, out: &mut Outputs) -> Result<()>;
}

macro_rules! experiment {
    ($t:ty, $name:literal, seed: $seed:expr) => {
        impl Default for $t {
            fn default() -> Self {
                <$t as Parser>::parse_from([$name])
            }
        }

        impl $t {
            fn seed_value(&self) -> Option<u64> {
                #[allow(clippy::redundant_closure_call)]
                ($seed)(self)
            }
        }
    };
}

/// Resolves `--config` and `--paper-scale`, runs, and writes the manifest.
pub fn execute<E: Experiment>(mut args: E) -> Result<PathBuf> {
    if let Some(path) = args.common().config.clone() {
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let mut loaded: E = serde_json::from_str(&text)
            .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        *loaded.common_mut() = args.common().clone();
        args = loaded;
    }
    if args.common().paper_scale {
        args.scale_up();
    }
    run_resolved(args)
}

fn run_resolved<E: Experiment>(args: E) -> Result<PathBuf> {
    let start = Instant::now();
    let mut out = Outputs::new(&args.common().out_dir)?;
    let result = args.run(&mut out);
    if let Err(e) = &result {
        if !e.is::<NumericalFailure>() {
            return Err(result.unwrap_err());
        }
    }
    let manifest = RunManifest {
        command: E::NAME.to_string(),
        config: serde_json::to_value(&args)?,
        seed: args.seed(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: Vec::new(),
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    let path = out.finish(manifest)?;
    result.map(|_| path)
}

#[derive(clap::Args, Debug)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
    /// Where to write the regenerated outputs.
    #[arg(long, env = "IFM_LAB_OUT", default_value = "ifm-replay")]
    pub out_dir: PathBuf,
}

fn replay_as<E: Experiment>(config: serde_json::Value, out_dir: &Path) -> Result<PathBuf> {
    let mut args: E = serde_json::from_value(config).map_err(|e| config_error(format!("manifest config: {e}")))?;
    args.common_mut().out_dir = out_dir.to_path_buf();
    run_resolved(args)
}

pub fn replay(args: &ReplayArgs) -> Result<PathBuf> {
    let m = RunManifest::load(&args.manifest).map_err(|e| config_error(format!("{e:#}")))?;
    let dir = &args.out_dir;
    match m.command.as_str() {
        EvSweepArgs::NAME => replay_as::<EvSweepArgs>(m.config, dir),
        MultiObjectArgs::NAME => replay_as::<MultiObjectArgs>(m.config, dir),
        NoiseRobustnessArgs::NAME => replay_as::<NoiseRobustnessArgs>(m.config, dir),
        OptimalRArgs::NAME => replay_as::<OptimalRArgs>(m.config, dir),
        BaselineArgs::NAME => replay_as::<BaselineArgs>(m.config, dir),
        TreeArgs::NAME => replay_as::<TreeArgs>(m.config, dir),
        ZenoArgs::NAME => replay_as::<ZenoArgs>(m.config, dir),
        other => Err(config_error(format!("unknown command {other:?} in manifest"))),
    }
}

fn check_flagged(estimates: &[EfficiencyEstimate], max_fraction: f64) -> Result<()> {
    let flagged = estimates.iter().filter(|e| e.flagged).count();
    let fraction = flagged as f64 / estimates.len().max(1) as f64;
    if fraction > max_fraction {
        return Err(NumericalFailure(format!(
            "{flagged} of {} estimates had no IFM or absorption clicks (limit {max_fraction})",
            estimates.len()
        ))
        .into());
    }
    Ok(())
}

fn point(e: &EfficiencyEstimate) -> (Option<f64>, Option<f64>) {
    if e.flagged {
        (None, None)
    } else {
        (Some(e.eta_hat), Some(e.std_error))
    }
}

fn default_r_grid() -> Vec<f64> {
    (1..=19).map(|i| (i as f64 * 0.05 * 100.0).round() / 100.0).collect()
}

/// Single-object efficiency against beamsplitter reflectivity.
#[derive(Parser, Debug, Serialize, Deserialize)]
#[command(name = "ev-sweep")]
#[serde(default, deny_unknown_fields)]
pub struct EvSweepArgs {
    /// Reflectivity grid, comma separated, each in (0, 1).
    #[arg(long, value_delimiter = ',', default_values_t = default_r_grid())]
    pub r: Vec<f64>,
    /// Shots per circuit.
    #[arg(long, default_value_t = 1_000_000)]
    pub shots: u64,
    /// Randomized-phase circuits per point.
    #[arg(long, short = 'm', default_value_t = 40)]
    pub circuits: usize,
    /// Gaussian std of the compiled mesh phases.
    #[arg(long, default_value_t = 0.0)]
    pub mesh_sigma: f64,
    /// Relative reflectivity mismatch of the theory band.
    #[arg(long, default_value_t = 0.002)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Exit with code 3 when more than this fraction of points is flagged.
    #[arg(long, default_value_t = 0.2)]
    pub max_flagged_fraction: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

experiment!(EvSweepArgs, "ev-sweep", seed: |s: &EvSweepArgs| Some(s.seed));

#[derive(Serialize)]
struct EvRow {
    scheme: &'static str,
    r: f64,
    eta_hat: Option<f64>,
    std_error: Option<f64>,
    shots: u64,
    m: usize,
    seed: u64,
    flagged: bool,
    eta_theory: f64,
    eta_band_low: Option<f64>,
    eta_band_high: Option<f64>,
}

impl Experiment for EvSweepArgs {
    const NAME: &'static str = "ev-sweep";

    fn common(&self) -> &Common {
        &self.common
    }

    fn common_mut(&mut self) -> &mut Common {
        &mut self.common
    }

    fn seed(&self) -> Option<u64> {
        self.seed_value()
    }

    fn run(&self, out: &mut Outputs) -> Result<()> {
        if self.r.is_empty() {
            return Err(config_error("empty reflectivity grid"));
        }
        if let Some(bad) = self.r.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return Err(config_error(format!("reflectivity {bad} is outside (0, 1)")));
        }
        if self.circuits == 0 {
            return Err(config_error("need at least one circuit"));
        }
        let cfg = EnsembleConfig {
            circuits: self.circuits,
            shots: self.shots,
            noise: NoiseConfig::mesh(self.mesh_sigma),
        };
        let mut rows = Vec::with_capacity(self.r.len());
        let mut estimates = Vec::with_capacity(self.r.len());
        for (i, &r) in self.r.iter().enumerate() {
            let seed = derive_seed(self.seed, &[i as u64]);
            let est = ensemble_estimate(&Scheme::ev(Reflectivity::new(r)?, true), &cfg, seed)?;
            let band = [Mismatch::Plus, Mismatch::Minus].map(|s| eta_mismatch(r, self.epsilon, s).ok());
            let (eta_hat, std_error) = point(&est);
            rows.push(EvRow {
                scheme: "ev",
                r,
                eta_hat,
                std_error,
                shots: self.shots,
                m: self.circuits,
                seed,
                flagged: est.flagged,
                eta_theory: eta_ev(r)?,
                eta_band_low: band.iter().flatten().copied().reduce(f64::min),
                eta_band_high: band.iter().flatten().copied().reduce(f64::max),
            });
            estimates.push(est);
        }
        out.csv("ev_sweep.csv", &rows)?;

        let theory = (1..100).map(|i| i as f64 / 100.0).map(|r| (r, eta_ev(r).unwrap_or(f64::NAN))).collect();
        let band = |sign| {
            (1..100)
                .map(|i| i as f64 / 100.0)
                .filter_map(|r| eta_mismatch(r, self.epsilon, sign).ok().map(|e| (r, e)))
                .collect()
        };
        let measured: Vec<&EvRow> = rows.iter().filter(|r| !r.flagged).collect();
        let series = [
            Series::new("R/(R+1)", theory, Style::Line),
            Series::new(format!("mismatch +{}", self.epsilon), band(Mismatch::Plus), Style::Dashed),
            Series::new(format!("mismatch -{}", self.epsilon), band(Mismatch::Minus), Style::Dashed),
            Series::new(
                "simulated",
                measured.iter().map(|r| (r.r, r.eta_hat.unwrap_or_default())).collect(),
                Style::ErrorBars(measured.iter().map(|r| r.std_error.unwrap_or_default()).collect()),
            ),
        ];
        let fig = Figure {
            title: "Single-object efficiency",
            x_label: "R",
            y_label: "eta",
            log_y: false,
        };
        plot::render(&out.path("ev_sweep.svg"), &fig, &series)?;
        check_flagged(&estimates, self.max_flagged_fraction)
    }
}

/// Simultaneous measurement of `n` objects with a balanced cascade.
#[derive(Parser, Debug, Serialize, Deserialize)]
#[command(name = "multi-object")]
#[serde(default, deny_unknown_fields)]
pub struct MultiObjectArgs {
    #[arg(long, default_value_t = 5)]
    pub n_max: usize,
    /// Largest cascade the simulated chip can hold (at most 8).
    #[arg(long, default_value_t = 5)]
    pub max_objects: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub shots: u64,
    #[arg(long, short = 'm', default_value_t = 40)]
    pub circuits: usize,
    #[arg(long, default_value_t = 0.0)]
    pub mesh_sigma: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.2)]
    pub max_flagged_fraction: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

experiment!(MultiObjectArgs, "multi-object", seed: |s: &MultiObjectArgs| Some(s.seed));

#[derive(Serialize)]
struct MultiRow {
    scheme: String,
    n: usize,
    eta_hat: Option<f64>,
    std_error: Option<f64>,
    shots: u64,
    m: usize,
    seed: u64,
    flagged: bool,
    eta_theory: f64,
    eta_opt: f64,
}

impl Experiment for MultiObjectArgs {
    const NAME: &'static str = "multi-object";

    fn common(&self) -> &Common {
        &self.common
    }

    fn common_mut(&mut self) -> &mut Common {
        &mut self.common
    }

    fn seed(&self) -> Option<u64> {
        self.seed_value()
    }

    fn run(&self, out: &mut Outputs) -> Result<()> {
        if self.max_objects > ifm_core::optimizer::MAX_OBJECTS {
            return Err(config_error(format!("max_objects {} exceeds 8", self.max_objects)));
        }
        if !(1..=self.max_objects).contains(&self.n_max) {
            return Err(config_error(format!("n_max {} is outside 1..={}", self.n_max, self.max_objects)));
        }
        let cfg = EnsembleConfig {
            circuits: self.circuits,
            shots: self.shots,
            noise: NoiseConfig::mesh(self.mesh_sigma),
        };
        let opt_cfg = OptimizerConfig {
            seed: self.seed,
            ..OptimizerConfig::default()
        };
        let mut rows = Vec::new();
        let mut estimates = Vec::new();
        for n in 1..=self.n_max {
            let scheme = Scheme::cascade_present(vec![Reflectivity::HALF; n])?;
            let seed = derive_seed(self.seed, &[n as u64]);
            let est = ensemble_estimate(&scheme, &cfg, seed)?;
            let (eta_hat, std_error) = point(&est);
            rows.push(MultiRow {
                scheme: scheme.id(),
                n,
                eta_hat,
                std_error,
                shots: self.shots,
                m: self.circuits,
                seed,
                flagged: est.flagged,
                eta_theory: eta_cascade_balanced(n as u32),
                eta_opt: optimize_reflectivities(n, &opt_cfg)?.eta_opt,
            });
            estimates.push(est);
        }
        out.csv("multi_object.csv", &rows)?;

        let measured: Vec<&MultiRow> = rows.iter().filter(|r| !r.flagged).collect();
        let series = [
            Series::new("R = 0.5 theory", rows.iter().map(|r| (r.n as f64, r.eta_theory)).collect(), Style::Line),
            Series::new("optimal R", rows.iter().map(|r| (r.n as f64, r.eta_opt)).collect(), Style::Dashed),
            Series::new(
                "simulated",
                measured.iter().map(|r| (r.n as f64, r.eta_hat.unwrap_or_default())).collect(),
                Style::ErrorBars(measured.iter().map(|r| r.std_error.unwrap_or_default()).collect()),
            ),
        ];
        let fig = Figure {
            title: "Multi-object efficiency",
            x_label: "n",
            y_label: "eta",
            log_y: true,
        };
        plot::render(&out.path("multi_object.svg"), &fig, &series)?;
        check_flagged(&estimates, self.max_flagged_fraction)
    }
}

/// Efficiency spread of multimode chains under Gaussian reflectivity noise.
#[derive(Parser, Debug, Serialize, Deserialize)]
#[command(name = "noise-robustness")]
#[serde(default, deny_unknown_fields)]
pub struct NoiseRobustnessArgs {
    /// Mode counts, each in 2..=6.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 3, 4, 5, 6])]
    pub modes: Vec<usize>,
    /// Target efficiencies as fractions of 0.5.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.90, 0.95, 0.99])]
    pub targets: Vec<f64>,
    #[arg(long, default_value_t = 0.03)]
    pub sigma_r: f64,
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    /// Histogram bins over [0, 1].
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

experiment!(NoiseRobustnessArgs, "noise-robustness", seed: |s: &NoiseRobustnessArgs| Some(s.seed));

#[derive(Serialize)]
struct HistRow {
    m: usize,
    eta_target: f64,
    sigma: f64,
    trial_count: usize,
    bin_left: f64,
    bin_right: f64,
    count: u64,
}

#[derive(Serialize)]
struct StdRow {
    m: usize,
    eta_target: f64,
    std: f64,
}

impl Experiment for NoiseRobustnessArgs {
    const NAME: &'static str = "noise-robustness";

    fn common(&self) -> &Common {
        &self.common
    }

    fn common_mut(&mut self) -> &mut Common {
        &mut self.common
    }

    fn seed(&self) -> Option<u64> {
        self.seed_value()
    }

    fn scale_up(&mut self) {
        self.trials = self.trials.max(1_000_000);
    }

    fn run(&self, out: &mut Outputs) -> Result<()> {
        if self.modes.is_empty() || self.targets.is_empty() {
            return Err(config_error("need at least one mode count and one target"));
        }
        let mut hist_rows = Vec::new();
        let mut std_rows = Vec::new();
        for &m in &self.modes {
            for (j, &frac) in self.targets.iter().enumerate() {
                let cfg = RobustnessConfig {
                    m,
                    eta_target_fraction: frac,
                    sigma_r: self.sigma_r,
                    trials: self.trials,
                    seed: derive_seed(self.seed, &[m as u64, j as u64]),
                };
                let mut samples = robustness_histogram(&cfg)?;
                samples.sort_by(f64::total_cmp);
                let eta_target = cfg.eta_target();
                std_rows.push(StdRow {
                    m,
                    eta_target,
                    std: summarize_std(&samples)?,
                });
                for bin in histogram(&samples, self.bins, 0.0, 1.0)? {
                    hist_rows.push(HistRow {
                        m,
                        eta_target,
                        sigma: self.sigma_r,
                        trial_count: self.trials,
                        bin_left: bin.left,
                        bin_right: bin.right,
                        count: bin.count,
                    });
                }
            }
        }
        out.csv("robustness_histogram.csv", &hist_rows)?;
        out.csv("robustness_std.csv", &std_rows)?;

        let series: Vec<Series> = self
            .targets
            .iter()
            .map(|&frac| {
                let target = frac * ifm_core::robustness::ETA_LIMIT;
                let pts = std_rows
                    .iter()
                    .filter(|r| r.eta_target == target)
                    .map(|r| (r.m as f64, r.std))
                    .collect();
                Series::new(format!("target {frac} x 0.5"), pts, Style::Line)
            })
            .collect();
        let fig = Figure {
            title: "Efficiency spread under reflectivity noise",
            x_label: "modes m",
            y_label: "std(eta)",
            log_y: false,
        };
        plot::render(&out.path("robustness_std.svg"), &fig, &series)
    }
}

/// Optimal cascade reflectivities and the prefix property.
#[derive(Parser, Debug, Serialize, Deserialize)]
#[command(name = "optimal-r")]
#[serde(default, deny_unknown_fields)]
pub struct OptimalRArgs {
    #[arg(long, default_value_t = 8)]
    pub n_max: usize,
    /// Domain margin: reflectivities are searched in [delta, 1 - delta].
    #[arg(long, default_value_t = 1e-4)]
    pub delta: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    /// Largest allowed |R_i(n) - R_i(n')|.
    #[arg(long, default_value_t = 1e-2)]
    pub prefix_tolerance: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

experiment!(OptimalRArgs, "optimal-r", seed: |s: &OptimalRArgs| Some(s.seed));

#[derive(Serialize)]
struct OptRow {
    n: usize,
    i: usize,
    r_i_opt: f64,
    boundary_flag: bool,
    eta_opt: f64,
}

#[derive(Serialize)]
struct PrefixRow {
    i: usize,
    n: usize,
    n_prime: usize,
    deviation: f64,
}

impl Experiment for OptimalRArgs {
    const NAME: &'static str = "optimal-r";

    fn common(&self) -> &Common {
        &self.common
    }

    fn common_mut(&mut self) -> &mut Common {
        &mut self.common
    }

    fn seed(&self) -> Option<u64> {
        self.seed_value()
    }

    fn run(&self, out: &mut Outputs) -> Result<()> {
        let cfg = OptimizerConfig {
            delta: self.delta,
            tolerance: self.tolerance,
            restarts: self.restarts,
            seed: self.seed,
            ..OptimizerConfig::default()
        };
        let report = verify_prefix_property(self.n_max, self.prefix_tolerance, &cfg)?;
        let rows: Vec<OptRow> = report
            .results
            .iter()
            .flat_map(|res| {
                res.r_opt.iter().zip(&res.boundary_flags).enumerate().map(|(i, (&r, &flag))| OptRow {
                    n: res.n,
                    i: i + 1,
                    r_i_opt: r,
                    boundary_flag: flag,
                    eta_opt: res.eta_opt,
                })
            })
            .collect();
        out.csv("optimal_r.csv", &rows)?;
        let prefix: Vec<PrefixRow> = report
            .deviations
            .iter()
            .map(|d| PrefixRow {
                i: d.i,
                n: d.n,
                n_prime: d.n_prime,
                deviation: d.deviation,
            })
            .collect();
        out.csv("prefix_property.csv", &prefix)?;

        let series: Vec<Series> = report
            .results
            .iter()
            .map(|res| {
                let pts = res.r_opt.iter().enumerate().map(|(i, &r)| ((i + 1) as f64, r)).collect();
                Series::new(format!("n = {}", res.n), pts, Style::Line)
            })
            .collect();
        let fig = Figure {
            title: "Optimal stage reflectivities",
            x_label: "stage i",
            y_label: "R_i",
            log_y: false,
        };
        plot::render(&out.path("optimal_r.svg"), &fig, &series)?;
        if !report.passed {
            return Err(NumericalFailure(format!(
                "prefix deviation {:.3e} exceeds {}",
                report.max_deviation, self.prefix_tolerance
            ))
            .into());
        }
        Ok(())
    }
}

/// Parses `ev`, `cascade-<n>` or `chain-<m>` into an all-present scheme.
pub fn parse_scheme(id: &str, r: Reflectivity) -> Result<Scheme> {
    let bad = || config_error(format!("unknown scheme {id:?}; expected ev, cascade-<n> or chain-<m>"));
    if id == "ev" {
        return Ok(Scheme::ev(r, true));
    }
    let (kind, size) = id.split_once('-').ok_or_else(bad)?;
    let size: usize = size.parse().map_err(|_| bad())?;
    match kind {
        "cascade" if (1..=8).contains(&size) => Ok(Scheme::cascade_present(vec![r; size])?),
        "chain" if (2..=12).contains(&size) => Ok(Scheme::Chain {
            forward: vec![r; size - 1],
            reverse: vec![r; size - 1],
            present: true,
        }),
        _ => Err(bad()),
    }
}

fn default_schemes() -> Vec<String> {
    std::iter::once("ev".to_string())
        .chain((1..=5).map(|n| format!("cascade-{n}")))
        .collect()
}

/// Object-present against object-removed runs under the same mesh noise.
#[derive(Parser, Debug, Serialize, Deserialize)]
#[command(name = "baseline")]
#[serde(default, deny_unknown_fields)]
pub struct BaselineArgs {
    /// Scheme ids: ev, cascade-<n>, chain-<m>.
    #[arg(long, value_delimiter = ',', default_values_t = default_schemes())]
    pub schemes: Vec<String>,
    #[arg(long, default_value_t = 0.5)]
    pub r: f64,
    #[arg(long, default_value_t = 0.005)]
    pub mesh_sigma: f64,
    /// Shots per configuration; 0 reports exact noisy probabilities.
    #[arg(long, default_value_t = 1_000_000)]
    pub shots: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

experiment!(BaselineArgs, "baseline", seed: |s: &BaselineArgs| Some(s.seed));

#[derive(Serialize)]
struct BaselineRow {
    scheme: String,
    objects: usize,
    p_ifm_present: f64,
    p_ifm_absent: f64,
    p_abs_avg_present: f64,
    p_abs_avg_absent: f64,
    sigma: f64,
    shots: u64,
    seed: u64,
}

impl Experiment for BaselineArgs {
    const NAME: &'static str = "baseline";

    fn common(&self) -> &Common {
        &self.common
    }

    fn common_mut(&mut self) -> &mut Common {
        &mut self.common
    }

    fn seed(&self) -> Option<u64> {
        self.seed_value()
    }

    fn run(&self, out: &mut Outputs) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(config_error("no schemes given"));
        }
        let r = Reflectivity::new(self.r)?;
        let noise = NoiseConfig::mesh(self.mesh_sigma);
        let shots = (self.shots > 0).then_some(self.shots);
        let mut rows = Vec::new();
        for (i, id) in self.schemes.iter().enumerate() {
            let scheme = parse_scheme(id, r)?;
            let seed = derive_seed(self.seed, &[i as u64]);
            let pair = baseline_compare(&scheme, &noise, shots, seed)?;
            rows.push(BaselineRow {
                scheme: scheme.id(),
                objects: scheme.objects(),
                p_ifm_present: pair.present.p_ifm,
                p_ifm_absent: pair.absent.p_ifm,
                p_abs_avg_present: pair.present.p_abs_avg,
                p_abs_avg_absent: pair.absent.p_abs_avg,
                sigma: self.mesh_sigma,
                shots: self.shots,
                seed,
            });
        }
        out.csv("baseline.csv", &rows)
    }
}

/// Binary-tree layout and its chains.
#[derive(Parser, Debug, Serialize, Deserialize)]
#[command(name = "tree")]
#[serde(default, deny_unknown_fields)]
pub struct TreeArgs {
    /// Number of layers k (1..=4).
    #[arg(long, short = 'k', default_value_t = 4)]
    pub layers: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

experiment!(TreeArgs, "tree", seed: |_: &TreeArgs| None);

#[derive(Serialize)]
struct TreeReport<'a> {
    layers: usize,
    signal_modes: usize,
    total_modes: usize,
    depth: usize,
    nodes: &'a [TreeNode],
    chains: &'a [Chain],
    chain_multiset: BTreeMap<usize, usize>,
    partition_multiset: BTreeMap<usize, usize>,
}

#[derive(Serialize)]
struct ChainRow {
    chain: usize,
    length: usize,
    coloured: bool,
    nodes: String,
}

impl Experiment for TreeArgs {
    const NAME: &'static str = "tree";

    fn common(&self) -> &Common {
        &self.common
    }

    fn common_mut(&mut self) -> &mut Common {
        &mut self.common
    }

    fn seed(&self) -> Option<u64> {
        self.seed_value()
    }

    fn run(&self, out: &mut Outputs) -> Result<()> {
        let t = build_tree(self.layers)?;
        let report = TreeReport {
            layers: t.layers,
            signal_modes: t.modes,
            total_modes: t.total_modes(),
            depth: t.depth,
            nodes: &t.nodes,
            chains: &t.chains,
            chain_multiset: t.chain_multiset(),
            partition_multiset: t.partition_multiset(),
        };
        // A closed pipe downstream is not an error for this command.
        let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(&report)?);
        out.json("tree.json", &report)?;
        let rows: Vec<ChainRow> = t
            .chains
            .iter()
            .enumerate()
            .map(|(i, c)| ChainRow {
                chain: i,
                length: c.len(),
                coloured: c.coloured,
                nodes: c.nodes.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" "),
            })
            .collect();
        out.csv("tree_chains.csv", &rows)
    }
}

/// Closed-form multi-pass efficiency.
#[derive(Parser, Debug, Serialize, Deserialize)]
#[command(name = "zeno")]
#[serde(default, deny_unknown_fields)]
pub struct ZenoArgs {
    #[arg(long, default_value_t = 1)]
    pub n_min: u32,
    #[arg(long, default_value_t = 1024)]
    pub n_max: u32,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

experiment!(ZenoArgs, "zeno", seed: |_: &ZenoArgs| None);

#[derive(Serialize)]
struct ZenoRow {
    n: u32,
    absorption_per_round: f64,
    eta: f64,
}

impl Experiment for ZenoArgs {
    const NAME: &'static str = "zeno";

    fn common(&self) -> &Common {
        &self.common
    }

    fn common_mut(&mut self) -> &mut Common {
        &mut self.common
    }

    fn seed(&self) -> Option<u64> {
        self.seed_value()
    }

    fn run(&self, out: &mut Outputs) -> Result<()> {
        if self.n_min < 1 || self.n_min > self.n_max {
            return Err(config_error(format!("need 1 <= n_min <= n_max, got {}..{}", self.n_min, self.n_max)));
        }
        let rows = (self.n_min..=self.n_max)
            .map(|n| {
                Ok(ZenoRow {
                    n,
                    absorption_per_round: zeno_absorption_per_round(n)?,
                    eta: eta_zeno(n)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.csv("zeno.csv", &rows)?;
        let series = [Series::new(
            "cos^2N(pi/2N)",
            rows.iter().map(|r| ((r.n as f64).log10(), r.eta)).collect(),
            Style::Line,
        )];
        let fig = Figure {
            title: "Multi-pass efficiency",
            x_label: "log10 N",
            y_label: "eta",
            log_y: false,
        };
        plot::render(&out.path("zeno.svg"), &fig, &series)
    }
}
