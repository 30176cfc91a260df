//! Reflectivity-noise Monte Carlo for multimode chains.
//!
//! Every beamsplitter of the chain `U_m` and of its mirror `U_m†` is drawn
//! independently from `N(R_target, σ_R²)` on each trial, so the two halves no
//! longer cancel and the efficiency scatters around its target.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::optics::Reflectivity;
use crate::protocols::Scheme;
use crate::rng::{derive_rng, stream};

/// Ceiling of the single-detector efficiency.
pub const ETA_LIMIT: f64 = 0.5;

/// Draws are clamped to `(CLIP, 1 − CLIP)`.
pub const CLIP: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessConfig {
    /// Signal modes, 2 to 6.
    pub m: usize,
    /// Target efficiency as a fraction of [`ETA_LIMIT`].
    pub eta_target_fraction: f64,
    pub sigma_r: f64,
    pub trials: usize,
    pub seed: u64,
}

impl RobustnessConfig {
    pub fn eta_target(&self) -> f64 {
        self.eta_target_fraction * ETA_LIMIT
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=6).contains(&self.m) {
            return Err(domain("m", self.m as f64, "2..=6"));
        }
        if !(self.eta_target_fraction > 0.0 && self.eta_target_fraction < 1.0) {
            return Err(domain("eta_target_fraction", self.eta_target_fraction, "(0, 1)"));
        }
        if !(self.sigma_r >= 0.0 && self.sigma_r.is_finite()) {
            return Err(domain("sigma_r", self.sigma_r, "[0, inf)"));
        }
        if self.trials == 0 {
            return Err(Error::InsufficientSamples { needed: 1, got: 0 });
        }
        Ok(())
    }
}

/// Equal per-beamsplitter reflectivity giving efficiency `eta_target` on an
/// `m`-mode chain: `T̃ = (1 − 2η)/(1 − η)`, `T = T̃^{1/(m−1)}`.
pub fn target_reflectivity(m: usize, eta_target: f64) -> Result<Reflectivity> {
    if m < 2 {
        return Err(domain("m", m as f64, "m >= 2"));
    }
    if !(eta_target > 0.0 && eta_target < ETA_LIMIT) {
        return Err(domain("eta_target", eta_target, "(0, 0.5)"));
    }
    let t_eff = (1.0 - 2.0 * eta_target) / (1.0 - eta_target);
    let t = t_eff.powf(1.0 / (m - 1) as f64);
    Reflectivity::new(1.0 - t)
}

/// Exact efficiency of a chain whose two halves have the given
/// reflectivities, object present.
pub fn chain_eta(forward: &[Reflectivity], reverse: &[Reflectivity]) -> Result<f64> {
    let s = Scheme::Chain {
        forward: forward.to_vec(),
        reverse: reverse.to_vec(),
        present: true,
    };
    s.outcomes()?.eta().ok_or(Error::ZeroProbability)
}

/// One efficiency sample per trial, in trial order.
pub fn robustness_histogram(config: &RobustnessConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let r = target_reflectivity(config.m, config.eta_target())?.value();
    let k = config.m - 1;
    let normal = Normal::new(r, config.sigma_r).map_err(|_| domain("sigma_r", config.sigma_r, "[0, inf)"))?;
    (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = derive_rng(config.seed, &[stream::TRIALS, trial as u64]);
            let mut draw = || Reflectivity::new(normal.sample(&mut rng).clamp(CLIP, 1.0 - CLIP));
            let forward = (0..k).map(|_| draw()).collect::<Result<Vec<_>>>()?;
            let reverse = (0..k).map(|_| draw()).collect::<Result<Vec<_>>>()?;
            chain_eta(&forward, &reverse)
        })
        .collect()
}

/// Sample standard deviation (`n − 1` denominator).
pub fn summarize_std(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let ss: f64 = samples.iter().map(|x| (x - mean).powi(2)).sum();
    Ok((ss / (n - 1) as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub count: u64,
}

/// Equal-width bins over `[lo, hi]`; the last bin is closed on the right.
/// Samples outside the range are dropped.
pub fn histogram(samples: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(domain("histogram range", hi - lo, "(0, inf)"));
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &x in samples {
        if x < lo || x > hi || x.is_nan() {
            continue;
        }
        let b = (((x - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            left: lo + i as f64 * width,
            right: if i + 1 == bins { hi } else { lo + (i + 1) as f64 * width },
            count,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efficiency::eta_ev_t;
    use approx::assert_abs_diff_eq;

    fn cfg(m: usize, frac: f64, sigma: f64, trials: usize, seed: u64) -> RobustnessConfig {
        RobustnessConfig {
            m,
            eta_target_fraction: frac,
            sigma_r: sigma,
            trials,
            seed,
        }
    }

    #[test]
    fn target_values() {
        assert_abs_diff_eq!(target_reflectivity(2, 0.45).unwrap().value(), 9.0 / 11.0, epsilon = 1e-14);
        let r3 = target_reflectivity(3, 0.45).unwrap();
        assert_abs_diff_eq!(r3.transmission(), (2.0f64 / 11.0).sqrt(), epsilon = 1e-14);
        assert!(target_reflectivity(2, 0.5).is_err());
        assert!(target_reflectivity(2, 0.0).is_err());
        assert!(target_reflectivity(1, 0.3).is_err());
    }

    #[test]
    fn target_round_trip() {
        for m in 2..=6 {
            for frac in [0.5, 0.9, 0.95, 0.99] {
                let eta = frac * ETA_LIMIT;
                let r = target_reflectivity(m, eta).unwrap();
                let t_eff = r.transmission().powi(m as i32 - 1);
                assert_abs_diff_eq!(eta_ev_t(t_eff).unwrap(), eta, epsilon = 1e-12);
                let rs = vec![r; m - 1];
                assert_abs_diff_eq!(chain_eta(&rs, &rs).unwrap(), eta, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn zero_sigma_hits_target() {
        let c = cfg(4, 0.95, 0.0, 50, 1);
        for x in robustness_histogram(&c).unwrap() {
            assert_abs_diff_eq!(x, c.eta_target(), epsilon = 1e-12);
        }
    }

    #[test]
    fn deterministic_and_seed_independent() {
        let a = robustness_histogram(&cfg(3, 0.9, 0.03, 4000, 1)).unwrap();
        assert_eq!(a, robustness_histogram(&cfg(3, 0.9, 0.03, 4000, 1)).unwrap());
        let b = robustness_histogram(&cfg(3, 0.9, 0.03, 4000, 2)).unwrap();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let se = summarize_std(&a).unwrap() / (a.len() as f64).sqrt();
        assert!((mean(&a) - mean(&b)).abs() < 3.0 * std::f64::consts::SQRT_2 * se);
        assert!(a.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn std_closed_forms() {
        assert_eq!(summarize_std(&[0.3; 5]).unwrap(), 0.0);
        assert_abs_diff_eq!(summarize_std(&[0.1, 0.4]).unwrap(), 0.3 / 2f64.sqrt(), epsilon = 1e-15);
        assert!(summarize_std(&[1.0]).is_err());
    }

    #[test]
    fn histogram_bins() {
        let h = histogram(&[0.0, 0.1, 0.5, 0.99, 1.0, 2.0], 2, 0.0, 1.0).unwrap();
        assert_eq!(h.iter().map(|b| b.count).collect::<Vec<_>>(), vec![2, 3]);
        assert_eq!((h[1].left, h[1].right), (0.5, 1.0));
        assert!(histogram(&[], 0, 0.0, 1.0).is_err());
    }

    #[test]
    fn config_checked() {
        assert!(robustness_histogram(&cfg(7, 0.9, 0.03, 10, 1)).is_err());
        assert!(robustness_histogram(&cfg(2, 1.0, 0.03, 10, 1)).is_err());
        assert!(robustness_histogram(&cfg(2, 0.9, 0.03, 0, 1)).is_err());
    }
}
