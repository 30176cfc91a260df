//! Shot sampling, efficiency estimates and randomized-phase mitigation.
//!
//! A "noisy run" compiles a circuit onto a rectangular mesh, perturbs the
//! mesh phases, reconstructs the implemented unitary and samples detector
//! clicks from its output distribution. Every random draw comes from a stream
//! derived from one master seed (see [`crate::rng`]), so results do not depend
//! on thread count.

use std::f64::consts::TAU;

use rand::Rng as _;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::mesh::{decompose, perturb_mesh, reconstruct};
use crate::optics::{check_distribution, compose, single_photon_distribution, CircuitSpec};
use crate::protocols::{OutcomeDistribution, Scheme};
use crate::rng::{derive_rng, derive_seed, stream};

/// Slack allowed on `Σp = 1` before a distribution is rejected.
pub const DIST_TOL: f64 = 1e-9;

/// Detector clicks of one circuit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub counts: Vec<u64>,
    pub shots: u64,
    pub seed: u64,
}

/// Efficiency estimate. `flagged` marks a run with no IFM or absorption
/// click at all; its `eta_hat` and `std_error` are then 0 and meaningless.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyEstimate {
    pub eta_hat: f64,
    pub std_error: f64,
    pub m_circuits: usize,
    pub shots_per_circuit: u64,
    pub flagged: bool,
}

impl EfficiencyEstimate {
    fn flagged(m_circuits: usize, shots_per_circuit: u64) -> Self {
        Self {
            eta_hat: 0.0,
            std_error: 0.0,
            m_circuits,
            shots_per_circuit,
            flagged: true,
        }
    }

    /// `|eta_hat − eta| / std_error`; infinite for a flagged or zero-error
    /// estimate that misses.
    pub fn z_score(&self, eta: f64) -> f64 {
        let diff = (self.eta_hat - eta).abs();
        if self.flagged {
            f64::INFINITY
        } else if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Multinomial draw of `shots` clicks over `dist`.
pub fn sample_counts(dist: &[f64], shots: u64, seed: u64) -> Result<ShotRecord> {
    check_distribution(dist, DIST_TOL)?;
    let mut rng = crate::rng::rng_from_seed(seed);
    let mut counts = vec![0u64; dist.len()];
    let mut left = shots;
    let mut mass: f64 = dist.iter().sum();
    for (i, &p) in dist.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == dist.len() {
            counts[i] = left;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = Binomial::new(left, q)
            .map_err(|e| Error::InvalidDistribution(e.to_string()))?
            .sample(&mut rng);
        counts[i] = k;
        left -= k;
        mass -= p;
    }
    Ok(ShotRecord { counts, shots, seed })
}

/// Click frequencies per outcome class.
pub fn outcome_frequencies(record: &ShotRecord, scheme: &Scheme) -> Result<OutcomeDistribution> {
    let n = record.shots.max(1) as f64;
    let freq: Vec<f64> = record.counts.iter().map(|&c| c as f64 / n).collect();
    crate::protocols::classify(scheme, &freq)
}

/// `c_ifm / (c_ifm + Σc_abs)` with the binomial standard error of the
/// conditioned sample.
pub fn estimate_eta(record: &ShotRecord, scheme: &Scheme) -> Result<EfficiencyEstimate> {
    if record.counts.len() != scheme.modes() {
        return Err(Error::LengthMismatch {
            what: "counts vs scheme modes",
            left: record.counts.len(),
            right: scheme.modes(),
        });
    }
    let layout = scheme.layout();
    let sum = |idx: &[usize]| idx.iter().map(|&i| record.counts[i]).sum::<u64>();
    let ifm = sum(&layout.ifm) as f64;
    let abs = sum(&layout.abs) as f64;
    let cond = ifm + abs;
    if cond == 0.0 {
        return Ok(EfficiencyEstimate::flagged(1, record.shots));
    }
    let eta = ifm / cond;
    Ok(EfficiencyEstimate {
        eta_hat: eta,
        std_error: (eta * (1.0 - eta) / cond).sqrt(),
        m_circuits: 1,
        shots_per_circuit: record.shots,
        flagged: false,
    })
}

/// Copies of `circuit` with an independent uniform phase in `[0, 2π)`
/// appended on every mode.
pub fn randomized_phase_ensemble(circuit: &CircuitSpec, m: usize, seed: u64) -> Result<Vec<CircuitSpec>> {
    if m == 0 {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    (0..m)
        .map(|i| {
            let mut rng = derive_rng(seed, &[stream::FINAL_PHASES, i as u64]);
            let mut c = circuit.clone();
            for mode in 0..c.modes() {
                c.ps(mode, rng.random_range(0.0..TAU))?;
            }
            Ok(c)
        })
        .collect()
}

/// Noise applied when a circuit is compiled to hardware.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    /// Gaussian std of every compiled mesh phase.
    pub mesh_sigma: f64,
    /// Detector dark counts. Not modelled; only 0 is accepted.
    pub dark_count_rate: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            mesh_sigma: 0.0,
            dark_count_rate: 0.0,
        }
    }
}

impl NoiseConfig {
    pub fn mesh(sigma: f64) -> Self {
        Self {
            mesh_sigma: sigma,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mesh_sigma >= 0.0 && self.mesh_sigma.is_finite()) {
            return Err(domain("mesh_sigma", self.mesh_sigma, "[0, inf)"));
        }
        if self.dark_count_rate != 0.0 {
            return Err(domain("dark_count_rate", self.dark_count_rate, "{0} (not modelled)"));
        }
        Ok(())
    }
}

/// Output distribution of `circuit` after compilation onto a mesh whose
/// phases carry `N(0, sigma²)` noise drawn from `noise_seed`.
pub fn noisy_distribution(circuit: &CircuitSpec, input: usize, sigma: f64, noise_seed: u64) -> Result<Vec<f64>> {
    let u = compose(circuit)?;
    let mesh = perturb_mesh(&decompose(u.view())?, sigma, noise_seed)?;
    single_photon_distribution(&reconstruct(&mesh)?, input)
}

/// Ensemble size, shots and noise of a mitigated run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub circuits: usize,
    pub shots: u64,
    pub noise: NoiseConfig,
}

/// Per-circuit probability estimates from counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitProbabilities {
    pub p_ifm: f64,
    /// Summed over all absorbers.
    pub p_abs: f64,
}

impl CircuitProbabilities {
    pub fn eta(&self) -> Option<f64> {
        let d = self.p_ifm + self.p_abs;
        (d > 0.0).then(|| self.p_ifm / d)
    }
}

/// Runs the randomized-phase ensemble of `scheme`: each copy is compiled
/// with its own noise draw and sampled with its own shot stream.
pub fn run_ensemble(scheme: &Scheme, config: &EnsembleConfig, seed: u64) -> Result<Vec<CircuitProbabilities>> {
    config.noise.validate()?;
    let circuits = randomized_phase_ensemble(&scheme.circuit()?, config.circuits, seed)?;
    let layout = scheme.layout();
    let n = config.shots.max(1) as f64;
    circuits
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let i = i as u64;
            let noise_seed = derive_seed(seed, &[stream::MESH_NOISE, i]);
            let dist = noisy_distribution(c, scheme.input_mode(), config.noise.mesh_sigma, noise_seed)?;
            let rec = sample_counts(&dist, config.shots, derive_seed(seed, &[stream::SHOTS, i]))?;
            let sum = |idx: &[usize]| idx.iter().map(|&k| rec.counts[k]).sum::<u64>() as f64 / n;
            Ok(CircuitProbabilities {
                p_ifm: sum(&layout.ifm),
                p_abs: sum(&layout.abs),
            })
        })
        .collect()
}

/// Estimate from a single circuit's probabilities, with the binomial error
/// of its `(p_ifm + p_abs) · shots` conditioned clicks.
pub fn single_circuit_estimate(p: &CircuitProbabilities, shots: u64) -> EfficiencyEstimate {
    let cond = (p.p_ifm + p.p_abs) * shots as f64;
    match p.eta() {
        Some(eta) if cond > 0.0 => EfficiencyEstimate {
            eta_hat: eta,
            std_error: (eta * (1.0 - eta) / cond).sqrt(),
            m_circuits: 1,
            shots_per_circuit: shots,
            flagged: false,
        },
        _ => EfficiencyEstimate::flagged(1, shots),
    }
}

fn mean_and_sem(xs: impl Iterator<Item = f64> + Clone, m: f64) -> (f64, f64) {
    let mean = xs.clone().sum::<f64>() / m;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Averages per-circuit probabilities and propagates their standard errors
/// into `η = a / (a + b)`, treating `a` and `b` as independent.
pub fn mitigate(per_circuit: &[CircuitProbabilities], shots_per_circuit: u64) -> Result<EfficiencyEstimate> {
    let m = per_circuit.len();
    if m < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: m });
    }
    let mf = m as f64;
    let (a, sa) = mean_and_sem(per_circuit.iter().map(|p| p.p_ifm), mf);
    let (b, sb) = mean_and_sem(per_circuit.iter().map(|p| p.p_abs), mf);
    let d = a + b;
    if d <= 0.0 {
        return Ok(EfficiencyEstimate::flagged(m, shots_per_circuit));
    }
    let var = (b * b * sa * sa + a * a * sb * sb) / d.powi(4);
    Ok(EfficiencyEstimate {
        eta_hat: a / d,
        std_error: var.sqrt(),
        m_circuits: m,
        shots_per_circuit,
        flagged: false,
    })
}

/// Ensemble run followed by [`mitigate`].
pub fn mitigated_estimate(scheme: &Scheme, config: &EnsembleConfig, seed: u64) -> Result<EfficiencyEstimate> {
    mitigate(&run_ensemble(scheme, config, seed)?, config.shots)
}

/// [`mitigated_estimate`] for `circuits ≥ 2`, [`single_circuit_estimate`]
/// for a single circuit.
pub fn ensemble_estimate(scheme: &Scheme, config: &EnsembleConfig, seed: u64) -> Result<EfficiencyEstimate> {
    let per = run_ensemble(scheme, config, seed)?;
    match per.as_slice() {
        [one] => Ok(single_circuit_estimate(one, config.shots)),
        _ => mitigate(&per, config.shots),
    }
}

/// `P_IFM` and the absorber-averaged `P_abs` of one configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselinePoint {
    pub p_ifm: f64,
    pub p_abs_avg: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselinePair {
    pub present: BaselinePoint,
    pub absent: BaselinePoint,
}

impl BaselinePair {
    /// Present-over-absent ratios `(P_IFM, P_abs)`; infinite when the absent
    /// value is 0.
    pub fn ratios(&self) -> (f64, f64) {
        let ratio = |p: f64, a: f64| if a > 0.0 { p / a } else { f64::INFINITY };
        (
            ratio(self.present.p_ifm, self.absent.p_ifm),
            ratio(self.present.p_abs_avg, self.absent.p_abs_avg),
        )
    }
}

/// Runs `scheme` with every object present and with every object removed,
/// using the same mesh-noise stream for both. With `shots = None` the exact
/// noisy probabilities are returned.
pub fn baseline_compare(scheme: &Scheme, noise: &NoiseConfig, shots: Option<u64>, seed: u64) -> Result<BaselinePair> {
    noise.validate()?;
    let noise_seed = derive_seed(seed, &[stream::MESH_NOISE]);
    let point = |present: bool, tag: u64| -> Result<BaselinePoint> {
        let s = scheme.with_all_objects(present);
        let dist = noisy_distribution(&s.circuit()?, s.input_mode(), noise.mesh_sigma, noise_seed)?;
        let freq = match shots {
            None => dist,
            Some(n) => {
                let rec = sample_counts(&dist, n, derive_seed(seed, &[stream::SHOTS, tag]))?;
                let d = n.max(1) as f64;
                rec.counts.iter().map(|&c| c as f64 / d).collect()
            }
        };
        let o = crate::protocols::classify(&s, &freq)?;
        Ok(BaselinePoint {
            p_ifm: o.ifm,
            p_abs_avg: o.total_abs() / o.abs.len() as f64,
        })
    };
    Ok(BaselinePair {
        present: point(true, 1)?,
        absent: point(false, 0)?,
    })
}
