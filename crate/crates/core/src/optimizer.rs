//! Cascade reflectivity optimisation.
//!
//! Coordinate-wise golden-section ascent of the closed-form cascade
//! efficiency over `[δ, 1 − δ]ⁿ`, started from `R_i = 0.5` and from seeded
//! random points. The best start wins.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::efficiency::{cascade_probabilities, eta_cascade};
use crate::error::{domain, Error, Result};
use crate::rng::{derive_rng, stream};

pub const MAX_OBJECTS: usize = 8;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Domain margin δ.
    pub delta: f64,
    /// Stop once a full coordinate cycle improves η by less than this.
    pub tolerance: f64,
    /// Random starts in addition to the all-0.5 start.
    pub restarts: usize,
    pub seed: u64,
    pub max_cycles: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            delta: 1e-4,
            tolerance: 1e-12,
            restarts: 5,
            seed: 0,
            max_cycles: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub n: usize,
    pub r_opt: Vec<f64>,
    pub eta_opt: f64,
    /// `true` where the coordinate sits on `δ` or `1 − δ`.
    pub boundary_flags: Vec<bool>,
    /// Coordinate cycles of the winning start.
    pub iterations: usize,
}

/// Maximiser of a unimodal `f` on `[lo, hi]`, endpoints included.
fn golden_max(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, xtol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > xtol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    [(mid, f(mid)), (lo, f(lo)), (hi, f(hi))]
        .into_iter()
        .fold((mid, f64::NEG_INFINITY), |best, p| if p.1 > best.1 { p } else { best })
}

fn objective(r: &[f64]) -> f64 {
    eta_cascade(r).unwrap_or(f64::NEG_INFINITY)
}

fn ascend(mut r: Vec<f64>, cfg: &OptimizerConfig) -> (Vec<f64>, f64, usize) {
    let (lo, hi) = (cfg.delta, 1.0 - cfg.delta);
    let mut best = objective(&r);
    let mut cycles = 0;
    while cycles < cfg.max_cycles {
        cycles += 1;
        let before = best;
        for i in 0..r.len() {
            let mut trial = r.clone();
            let (x, fx) = golden_max(
                |x| {
                    trial[i] = x;
                    objective(&trial)
                },
                lo,
                hi,
                1e-11,
            );
            if fx > best {
                r[i] = x;
                best = fx;
            }
        }
        if best - before < cfg.tolerance {
            break;
        }
    }
    (r, best, cycles)
}

fn validate(n: usize, cfg: &OptimizerConfig) -> Result<()> {
    if !(1..=MAX_OBJECTS).contains(&n) {
        return Err(domain("n", n as f64, "1..=8"));
    }
    if !(cfg.delta > 0.0 && cfg.delta <= 0.1) {
        return Err(domain("delta", cfg.delta, "(0, 0.1]"));
    }
    if !(cfg.tolerance > 0.0 && cfg.tolerance.is_finite()) {
        return Err(domain("tolerance", cfg.tolerance, "(0, inf)"));
    }
    Ok(())
}

/// Local maximum of the `n`-stage cascade efficiency.
pub fn optimize_reflectivities(n: usize, cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    validate(n, cfg)?;
    let (lo, hi) = (cfg.delta, 1.0 - cfg.delta);
    let starts: Vec<Vec<f64>> = std::iter::once(vec![0.5; n])
        .chain((0..cfg.restarts).map(|k| {
            let mut rng = derive_rng(cfg.seed, &[stream::RESTARTS, n as u64, k as u64]);
            (0..n).map(|_| rng.random_range(lo..=hi)).collect()
        }))
        .collect();
    let runs: Vec<_> = starts.into_par_iter().map(|s| ascend(s, cfg)).collect();
    // First start wins ties, so the result does not depend on scheduling.
    let (r, eta, cycles) = runs
        .into_iter()
        .reduce(|best, run| if run.1 > best.1 { run } else { best })
        .expect("at least one start");
    if !eta.is_finite() {
        return Err(Error::NonFinite("optimised efficiency"));
    }
    let boundary_flags = r.iter().map(|&x| x == lo || x == hi).collect();
    Ok(OptimizationResult {
        n,
        r_opt: r,
        eta_opt: eta,
        boundary_flags,
        iterations: cycles,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrefixDeviation {
    /// 1-based stage index.
    pub i: usize,
    pub n: usize,
    pub n_prime: usize,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrefixReport {
    pub results: Vec<OptimizationResult>,
    pub deviations: Vec<PrefixDeviation>,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Optimises `n = 1…n_max` and compares `R_i^opt(n)` with `R_i^opt(n')`
/// for every `i ≤ n < n'`.
pub fn verify_prefix_property(n_max: usize, tolerance: f64, cfg: &OptimizerConfig) -> Result<PrefixReport> {
    if !(1..=MAX_OBJECTS).contains(&n_max) {
        return Err(domain("n_max", n_max as f64, "1..=8"));
    }
    let results = (1..=n_max)
        .map(|n| optimize_reflectivities(n, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut deviations = Vec::new();
    for a in &results {
        for b in results.iter().filter(|b| b.n > a.n) {
            for i in 0..a.n {
                deviations.push(PrefixDeviation {
                    i: i + 1,
                    n: a.n,
                    n_prime: b.n,
                    deviation: (a.r_opt[i] - b.r_opt[i]).abs(),
                });
            }
        }
    }
    let max_deviation = deviations.iter().map(|d| d.deviation).fold(0.0, f64::max);
    Ok(PrefixReport {
        results,
        deviations,
        max_deviation,
        tolerance,
        passed: max_deviation < tolerance,
    })
}

/// Outcome of a cascade run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ifm,
    Null,
    /// Absorption by object `i` (0-based).
    Abs(usize),
    /// Light-port exit onto `D_i`, `1 ≤ i < n`.
    Partial(usize),
}

/// Mean number of trials `1/p` until an event of probability `p ∈ (0, 1]`.
pub fn trials_for_probability(p: f64) -> Result<f64> {
    if p == 0.0 {
        return Err(Error::ZeroProbability);
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(domain("p", p, "(0, 1]"));
    }
    Ok(1.0 / p)
}

/// Mean number of single-photon trials before `outcome` occurs once.
pub fn expected_trials(reflectivities: &[f64], outcome: Outcome) -> Result<f64> {
    let p = cascade_probabilities(reflectivities)?;
    let n = reflectivities.len();
    let prob = match outcome {
        Outcome::Ifm => p.p_ifm,
        Outcome::Null => p.p_null,
        Outcome::Abs(i) if i < n => p.p_abs[i],
        Outcome::Partial(i) if (1..n).contains(&i) => p.p_partial[i - 1],
        Outcome::Abs(i) | Outcome::Partial(i) => return Err(Error::ModeOutOfRange { mode: i, modes: n }),
    };
    trials_for_probability(prob)
}
