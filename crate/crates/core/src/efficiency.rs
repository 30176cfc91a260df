//! Closed-form IFM efficiencies.
//!
//! The efficiency of a scheme is `η = P_IFM / (P_IFM + ΣP_abs)`: the fraction
//! of object detections that were interaction-free.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

fn open_unit(name: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(domain(name, v, "(0, 1)"))
    }
}

/// Elitzur-Vaidman efficiency `R / (R + 1)`. The endpoints are rejected:
/// at `R = 0` every photon is absorbed and at `R = 1` none reaches the object.
pub fn eta_ev(r: f64) -> Result<f64> {
    let r = open_unit("R", r)?;
    Ok(r / (r + 1.0))
}

/// The same efficiency in terms of transmission, `(1 − T) / (2 − T)`.
pub fn eta_ev_t(t: f64) -> Result<f64> {
    let t = open_unit("T", t)?;
    Ok((1.0 - t) / (2.0 - t))
}

/// Efficiency of the multimode `U·U†` scheme, with `t = |U_{k,j}|²` the
/// coupling from input mode `j` to the obstructed mode `k`.
pub fn eta_multimode(t: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&t) {
        return Err(domain("t", t, "[0, 1)"));
    }
    Ok((1.0 - t) / (2.0 - t))
}

/// Outcome probabilities of an all-present cascade, from the per-stage
/// rates `P(dark | enter) = RT`, `P(abs | enter) = T`, `P(light | enter) = R²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeProbabilities {
    pub p_ifm: f64,
    pub p_abs: Vec<f64>,
    /// Light-port exits of stages 2…n, landing on D_1…D_{n−1}.
    pub p_partial: Vec<f64>,
    /// Light-port exit of stage 1 (D_0).
    pub p_null: f64,
}

impl CascadeProbabilities {
    pub fn eta(&self) -> f64 {
        let abs: f64 = self.p_abs.iter().sum();
        self.p_ifm / (self.p_ifm + abs)
    }
}

pub fn cascade_probabilities(reflectivities: &[f64]) -> Result<CascadeProbabilities> {
    if reflectivities.is_empty() {
        return Err(Error::LengthMismatch {
            what: "cascade needs at least one stage",
            left: 0,
            right: 1,
        });
    }
    let mut reach = 1.0;
    let mut p_abs = Vec::with_capacity(reflectivities.len());
    let mut light = Vec::with_capacity(reflectivities.len());
    for &r in reflectivities {
        let r = open_unit("R_i", r)?;
        let t = 1.0 - r;
        p_abs.push(reach * t);
        light.push(reach * r * r);
        reach *= r * t;
    }
    let p_null = light[0];
    Ok(CascadeProbabilities {
        p_ifm: reach,
        p_abs,
        p_partial: light[1..].to_vec(),
        p_null,
    })
}

/// Efficiency of the sequential `n`-object cascade.
pub fn eta_cascade(reflectivities: &[f64]) -> Result<f64> {
    Ok(cascade_probabilities(reflectivities)?.eta())
}

/// Cascade efficiency with every stage balanced, `1 / (1 + (2/3)(4ⁿ − 1))`.
pub fn eta_cascade_balanced(n: u32) -> f64 {
    1.0 / (1.0 + (2.0 / 3.0) * (4f64.powi(n as i32) - 1.0))
}

/// Multi-pass (quantum Zeno) efficiency `cos^{2N}(π / 2N)`.
pub fn eta_zeno(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(domain("N", 0.0, "N >= 1"));
    }
    let c = (PI / (2.0 * n as f64)).cos();
    Ok(c.powf(2.0 * n as f64).max(0.0))
}

/// Per-round absorption probability `sin²(π / 2N)` of the multi-pass scheme.
pub fn zeno_absorption_per_round(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(domain("N", 0.0, "N >= 1"));
    }
    Ok((PI / (2.0 * n as f64)).sin().powi(2))
}

/// Direction of the second beamsplitter's relative mismatch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mismatch {
    Plus,
    Minus,
}

impl Mismatch {
    pub fn signum(self) -> f64 {
        match self {
            Mismatch::Plus => 1.0,
            Mismatch::Minus => -1.0,
        }
    }

    /// Second reflectivity `R' = (1 ± ε) R`.
    pub fn second_reflectivity(self, r: f64, epsilon: f64) -> f64 {
        (1.0 + self.signum() * epsilon) * r
    }
}

/// EV efficiency when the second beamsplitter has reflectivity
/// `R' = (1 ± ε) R`: `R(1 − R') / (R(1 − R') − R + 1)`.
pub fn eta_mismatch(r: f64, epsilon: f64, sign: Mismatch) -> Result<f64> {
    let r = open_unit("R", r)?;
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(domain("epsilon", epsilon, "[0, inf)"));
    }
    let r2 = sign.second_reflectivity(r, epsilon);
    if !(0.0..=1.0).contains(&r2) {
        return Err(domain("(1 ± epsilon) R", r2, "[0, 1]"));
    }
    let ifm = r * (1.0 - r2);
    Ok(ifm / (ifm - r + 1.0))
}
