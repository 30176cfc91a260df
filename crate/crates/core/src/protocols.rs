//! IFM schemes as circuits, and classification of their detector outcomes.
//!
//! Objects are always emulated by diversion: a present object is a
//! permutation that swaps the obstructed arm with a dedicated absorber mode,
//! so a click on that mode stands for absorption. Absorber modes are appended
//! after the signal modes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{simulate, CircuitSpec, Reflectivity, UnitaryMatrix};
use crate::tree::TreeLayout;

/// A fully specified IFM experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum Scheme {
    /// Mach-Zehnder on modes (0, 1) with absorber mode 2.
    Ev { r: Reflectivity, present: bool },
    /// `U`, object on `object_mode`, then `U†`; absorber mode `m`.
    Multimode {
        unitary: UnitaryMatrix,
        input: usize,
        object_mode: usize,
        present: bool,
    },
    /// `n` EV stages in sequence; stage `i` acts on signal modes `(i−1, i)`.
    Cascade {
        reflectivities: Vec<Reflectivity>,
        presence: Vec<bool>,
    },
    /// Chained beamsplitters on `m` modes, object on mode `m−1`, then the
    /// mirrored chain. `forward[i]` and `reverse[i]` both act on modes
    /// `(i, i+1)`; they differ only when modelling component errors.
    Chain {
        forward: Vec<Reflectivity>,
        reverse: Vec<Reflectivity>,
        present: bool,
    },
    /// Binary tree of EV units with `2^layers` signal modes.
    Tree {
        layers: usize,
        r: Reflectivity,
        presence: Vec<bool>,
    },
}

/// Detector partition of a scheme's output modes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorLayout {
    pub ifm: Vec<usize>,
    /// One absorber mode per object, in object order.
    pub abs: Vec<usize>,
    pub partial: Vec<usize>,
    pub null: Vec<usize>,
}

/// Probability mass per outcome class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub ifm: f64,
    pub abs: Vec<f64>,
    pub partial: Vec<f64>,
    pub null: f64,
}

impl OutcomeDistribution {
    pub fn total_abs(&self) -> f64 {
        self.abs.iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.ifm + self.null + self.total_abs() + self.partial.iter().sum::<f64>()
    }

    /// `P_IFM / (P_IFM + ΣP_abs)`, or `None` if no object was detected at all.
    pub fn eta(&self) -> Option<f64> {
        let denom = self.ifm + self.total_abs();
        (denom > 0.0).then(|| self.ifm / denom)
    }
}

impl Scheme {
    pub fn ev(r: Reflectivity, present: bool) -> Self {
        Scheme::Ev { r, present }
    }

    pub fn cascade(reflectivities: Vec<Reflectivity>, presence: Vec<bool>) -> Result<Self> {
        let s = Scheme::Cascade {
            reflectivities,
            presence,
        };
        s.validate()?;
        Ok(s)
    }

    /// All-present cascade.
    pub fn cascade_present(reflectivities: Vec<Reflectivity>) -> Result<Self> {
        let n = reflectivities.len();
        Self::cascade(reflectivities, vec![true; n])
    }

    pub fn multimode(unitary: UnitaryMatrix, input: usize, object_mode: usize, present: bool) -> Result<Self> {
        let s = Scheme::Multimode {
            unitary,
            input,
            object_mode,
            present,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Scheme::Ev { .. } => Ok(()),
            Scheme::Multimode {
                unitary,
                input,
                object_mode,
                ..
            } => {
                let m = unitary.dim();
                for &idx in [input, object_mode] {
                    if idx >= m {
                        return Err(Error::ModeOutOfRange { mode: idx, modes: m });
                    }
                }
                Ok(())
            }
            Scheme::Cascade {
                reflectivities,
                presence,
            } => {
                if reflectivities.is_empty() {
                    return Err(Error::LengthMismatch {
                        what: "cascade needs at least one stage",
                        left: 0,
                        right: 1,
                    });
                }
                if reflectivities.len() != presence.len() {
                    return Err(Error::LengthMismatch {
                        what: "reflectivities vs presence mask",
                        left: reflectivities.len(),
                        right: presence.len(),
                    });
                }
                Ok(())
            }
            Scheme::Chain { forward, reverse, .. } => {
                if forward.is_empty() {
                    return Err(Error::LengthMismatch {
                        what: "chain needs at least two modes",
                        left: 0,
                        right: 1,
                    });
                }
                if forward.len() != reverse.len() {
                    return Err(Error::LengthMismatch {
                        what: "forward vs reverse chain",
                        left: forward.len(),
                        right: reverse.len(),
                    });
                }
                Ok(())
            }
            Scheme::Tree { layers, presence, .. } => {
                let nodes = TreeLayout::new(*layers)?.nodes.len();
                if presence.len() != nodes {
                    return Err(Error::LengthMismatch {
                        what: "tree nodes vs presence mask",
                        left: nodes,
                        right: presence.len(),
                    });
                }
                Ok(())
            }
        }
    }

    /// Number of objects (absorber detectors).
    pub fn objects(&self) -> usize {
        match self {
            Scheme::Ev { .. } | Scheme::Multimode { .. } | Scheme::Chain { .. } => 1,
            Scheme::Cascade { reflectivities, .. } => reflectivities.len(),
            Scheme::Tree { presence, .. } => presence.len(),
        }
    }

    /// Number of modes of the circuit, absorbers included.
    pub fn modes(&self) -> usize {
        match self {
            Scheme::Ev { .. } => 3,
            Scheme::Multimode { unitary, .. } => unitary.dim() + 1,
            Scheme::Cascade { reflectivities, .. } => 2 * reflectivities.len() + 1,
            Scheme::Chain { forward, .. } => forward.len() + 2,
            Scheme::Tree { layers, .. } => (1usize << layers) * 2 - 1,
        }
    }

    pub fn input_mode(&self) -> usize {
        match self {
            Scheme::Multimode { input, .. } => *input,
            _ => 0,
        }
    }

    /// The same scheme with every object present (or every object removed).
    pub fn with_all_objects(&self, present: bool) -> Scheme {
        let mut s = self.clone();
        match &mut s {
            Scheme::Ev { present: p, .. } | Scheme::Multimode { present: p, .. } | Scheme::Chain { present: p, .. } => {
                *p = present
            }
            Scheme::Cascade { presence, .. } | Scheme::Tree { presence, .. } => presence.iter_mut().for_each(|p| *p = present),
        }
        s
    }

    pub fn all_present(&self) -> bool {
        match self {
            Scheme::Ev { present, .. } | Scheme::Multimode { present, .. } | Scheme::Chain { present, .. } => *present,
            Scheme::Cascade { presence, .. } | Scheme::Tree { presence, .. } => presence.iter().all(|p| *p),
        }
    }

    /// Short identifier used in CSV output.
    pub fn id(&self) -> String {
        match self {
            Scheme::Ev { .. } => "ev".into(),
            Scheme::Multimode { unitary, .. } => format!("multimode-{}", unitary.dim()),
            Scheme::Cascade { reflectivities, .. } => format!("cascade-{}", reflectivities.len()),
            Scheme::Chain { forward, .. } => format!("chain-{}", forward.len() + 1),
            Scheme::Tree { layers, .. } => format!("tree-{layers}"),
        }
    }

    pub fn circuit(&self) -> Result<CircuitSpec> {
        self.validate()?;
        match self {
            Scheme::Ev { r, present } => build_ev(*r, *present),
            Scheme::Multimode {
                unitary,
                input,
                object_mode,
                present,
            } => build_multimode(unitary, *input, *object_mode, *present),
            Scheme::Cascade {
                reflectivities,
                presence,
            } => build_cascade(reflectivities, presence),
            Scheme::Chain {
                forward,
                reverse,
                present,
            } => build_chain_with_reverse(forward, reverse, *present),
            Scheme::Tree { layers, r, presence } => TreeLayout::new(*layers)?.circuit(*r, presence),
        }
    }

    pub fn layout(&self) -> DetectorLayout {
        match self {
            Scheme::Ev { .. } => DetectorLayout {
                ifm: vec![1],
                abs: vec![2],
                partial: vec![],
                null: vec![0],
            },
            Scheme::Multimode { unitary, input, .. } => {
                let m = unitary.dim();
                DetectorLayout {
                    ifm: (0..m).filter(|k| k != input).collect(),
                    abs: vec![m],
                    partial: vec![],
                    null: vec![*input],
                }
            }
            Scheme::Chain { forward, .. } => {
                let m = forward.len() + 1;
                DetectorLayout {
                    ifm: (1..m).collect(),
                    abs: vec![m],
                    partial: vec![],
                    null: vec![0],
                }
            }
            Scheme::Cascade { reflectivities, .. } => {
                let n = reflectivities.len();
                DetectorLayout {
                    ifm: vec![n],
                    abs: (n + 1..=2 * n).collect(),
                    partial: (1..n).collect(),
                    null: vec![0],
                }
            }
            Scheme::Tree { layers, .. } => {
                let signal = 1usize << layers;
                DetectorLayout {
                    ifm: vec![signal - 1],
                    abs: (signal..2 * signal - 1).collect(),
                    partial: (1..signal - 1).collect(),
                    null: vec![0],
                }
            }
        }
    }

    /// Exact noiseless output distribution.
    pub fn distribution(&self) -> Result<Vec<f64>> {
        simulate(&self.circuit()?, self.input_mode())
    }

    /// Exact noiseless outcome classes.
    pub fn outcomes(&self) -> Result<OutcomeDistribution> {
        classify(self, &self.distribution()?)
    }
}

/// EV interferometer: `BS(R)` on (0, 1), optional diversion of arm 1 to the
/// absorber mode 2, `BS(R)` on (0, 1). Detectors: D_0 light, D_1 dark, D_2
/// absorption.
pub fn build_ev(r: Reflectivity, object_present: bool) -> Result<CircuitSpec> {
    let mut c = CircuitSpec::new(3)?;
    c.bs(0, 1, r)?;
    if object_present {
        c.swap(1, 2)?;
    }
    c.bs(0, 1, r)?;
    Ok(c)
}

/// `U_m` on modes `0…m−1`, optional diversion of mode `k` to absorber mode
/// `m`, then `U_m†`.
pub fn build_multimode(u: &UnitaryMatrix, input: usize, object_mode: usize, object_present: bool) -> Result<CircuitSpec> {
    let m = u.dim();
    for idx in [input, object_mode] {
        if idx >= m {
            return Err(Error::ModeOutOfRange { mode: idx, modes: m });
        }
    }
    // U and U† enter as explicit element sequences via their mesh, so the
    // circuit stays a plain element list.
    let forward = crate::mesh::decompose(u.view())?.to_circuit()?;
    let backward = crate::mesh::decompose(u.adjoint().view())?.to_circuit()?;
    let mut c = CircuitSpec::new(m + 1)?;
    for e in forward.elements() {
        c.push(e.clone())?;
    }
    if object_present {
        c.swap(object_mode, m)?;
    }
    for e in backward.elements() {
        c.push(e.clone())?;
    }
    Ok(c)
}

/// Sequential cascade of `n` EV stages on `2n + 1` modes. Stage `i`
/// (1-based) interferes signal modes `(i−1, i)`; its dark port (mode `i`)
/// feeds stage `i+1`, and a present object diverts mode `i` to absorber
/// mode `n + i` between the two beamsplitters.
pub fn build_cascade(reflectivities: &[Reflectivity], presence: &[bool]) -> Result<CircuitSpec> {
    if reflectivities.len() != presence.len() {
        return Err(Error::LengthMismatch {
            what: "reflectivities vs presence mask",
            left: reflectivities.len(),
            right: presence.len(),
        });
    }
    let n = reflectivities.len();
    if n == 0 {
        return Err(Error::LengthMismatch {
            what: "cascade needs at least one stage",
            left: 0,
            right: 1,
        });
    }
    let mut c = CircuitSpec::new(2 * n + 1)?;
    for (i, (&r, &present)) in reflectivities.iter().zip(presence).enumerate() {
        let stage = i + 1;
        c.bs(stage - 1, stage, r)?;
        if present {
            c.swap(stage, n + stage)?;
        }
        c.bs(stage - 1, stage, r)?;
    }
    Ok(c)
}

/// Chain of `m − 1` beamsplitters, `BS(R_i)` on modes `(i−1, i)` applied in
/// order, so `|U_{m−1,0}|² = Π T_i`; then the optional diversion of mode
/// `m−1` to absorber mode `m`, then the inverse chain.
pub fn build_chain(m: usize, reflectivities: &[Reflectivity], object_present: bool) -> Result<CircuitSpec> {
    if m < 2 {
        return Err(Error::OutOfDomain {
            name: "m",
            value: m as f64,
            domain: "m >= 2",
        });
    }
    if reflectivities.len() != m - 1 {
        return Err(Error::LengthMismatch {
            what: "chain reflectivities vs m - 1",
            left: reflectivities.len(),
            right: m - 1,
        });
    }
    build_chain_with_reverse(reflectivities, reflectivities, object_present)
}

/// As [`build_chain`], with independent reflectivities for the inverse half.
pub fn build_chain_with_reverse(
    forward: &[Reflectivity],
    reverse: &[Reflectivity],
    object_present: bool,
) -> Result<CircuitSpec> {
    if forward.len() != reverse.len() {
        return Err(Error::LengthMismatch {
            what: "forward vs reverse chain",
            left: forward.len(),
            right: reverse.len(),
        });
    }
    let m = forward.len() + 1;
    let mut c = CircuitSpec::new(m + 1)?;
    for (i, &r) in forward.iter().enumerate() {
        c.bs(i, i + 1, r)?;
    }
    if object_present {
        c.swap(m - 1, m)?;
    }
    for (i, &r) in reverse.iter().enumerate().rev() {
        c.bs(i, i + 1, r)?;
    }
    Ok(c)
}

/// Sums `dist` into the outcome classes of `scheme`.
pub fn classify(scheme: &Scheme, dist: &[f64]) -> Result<OutcomeDistribution> {
    if dist.len() != scheme.modes() {
        return Err(Error::LengthMismatch {
            what: "distribution vs scheme modes",
            left: dist.len(),
            right: scheme.modes(),
        });
    }
    let layout = scheme.layout();
    let sum = |idx: &[usize]| idx.iter().map(|&i| dist[i]).sum::<f64>();
    Ok(OutcomeDistribution {
        ifm: sum(&layout.ifm),
        abs: layout.abs.iter().map(|&i| dist[i]).collect(),
        partial: layout.partial.iter().map(|&i| dist[i]).collect(),
        null: sum(&layout.null),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efficiency::{eta_cascade, eta_ev, eta_multimode};
    use crate::haar::haar_unitary;
    use crate::optics::compose;
    use crate::rng::rng_from_seed;
    use approx::assert_abs_diff_eq;

    fn r(v: f64) -> Reflectivity {
        Reflectivity::new(v).unwrap()
    }

    fn assert_dist(actual: &[f64], expected: &[f64]) {
        assert_eq!(actual.len(), expected.len());
        for (a, e) in actual.iter().zip(expected) {
            assert_abs_diff_eq!(a, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn ev_balanced_present() {
        let d = simulate(&build_ev(r(0.5), true).unwrap(), 0).unwrap();
        assert_dist(&d, &[0.25, 0.25, 0.5]);
    }

    #[test]
    fn ev_present_at_point_eight() {
        let d = simulate(&build_ev(r(0.8), true).unwrap(), 0).unwrap();
        assert_dist(&d, &[0.64, 0.16, 0.2]);
        let o = classify(&Scheme::ev(r(0.8), true), &d).unwrap();
        assert_abs_diff_eq!(o.eta().unwrap(), eta_ev(0.8).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn ev_absent_is_dark() {
        for v in [0.0, 0.2, 0.5, 0.9, 1.0] {
            let d = simulate(&build_ev(r(v), false).unwrap(), 0).unwrap();
            assert_dist(&d, &[1.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn ev_classification() {
        let o = classify(&Scheme::ev(r(0.5), true), &[0.1, 0.2, 0.7]).unwrap();
        assert_eq!((o.null, o.ifm, o.abs.clone()), (0.1, 0.2, vec![0.7]));
        assert!(classify(&Scheme::ev(r(0.5), true), &[1.0, 0.0]).is_err());
        let none = classify(&Scheme::ev(r(0.5), true), &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(none.null, 1.0);
        assert_eq!(none.eta(), None);
    }

    #[test]
    fn multimode_two_mode_matches_ev() {
        for v in [0.3, 0.5, 0.8] {
            let mm = Scheme::multimode(crate::optics::bs_unitary(r(v)), 0, 1, true).unwrap();
            let a = mm.outcomes().unwrap();
            let b = Scheme::ev(r(v), true).outcomes().unwrap();
            assert_abs_diff_eq!(a.ifm, b.ifm, epsilon = 1e-12);
            assert_abs_diff_eq!(a.null, b.null, epsilon = 1e-12);
            assert_abs_diff_eq!(a.abs[0], b.abs[0], epsilon = 1e-12);
        }
    }

    #[test]
    fn multimode_haar() {
        let mut rng = rng_from_seed(12);
        let u = haar_unitary(4, &mut rng);
        let t = u.get(2, 1).norm_sqr();
        let s = Scheme::multimode(u.clone(), 1, 2, true).unwrap();
        let o = s.outcomes().unwrap();
        assert_abs_diff_eq!(o.abs[0], t, epsilon = 1e-12);
        assert_abs_diff_eq!(o.eta().unwrap(), eta_multimode(t).unwrap(), epsilon = 1e-12);

        let absent = s.with_all_objects(false).distribution().unwrap();
        assert_abs_diff_eq!(absent[1], 1.0, epsilon = 1e-12);
        assert!(Scheme::multimode(u, 4, 0, true).is_err());
    }

    #[test]
    fn cascade_single_stage_is_ev() {
        let c = build_cascade(&[r(0.7)], &[true]).unwrap();
        assert_eq!(c, build_ev(r(0.7), true).unwrap());
    }

    #[test]
    fn cascade_two_stages() {
        let s = Scheme::cascade_present(vec![r(0.5), r(0.5)]).unwrap();
        let o = s.outcomes().unwrap();
        assert_abs_diff_eq!(o.ifm, 1.0 / 16.0, epsilon = 1e-12);
        assert_abs_diff_eq!(o.abs[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(o.abs[1], 0.125, epsilon = 1e-12);
        assert_abs_diff_eq!(o.null, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(o.partial[0], 1.0 / 16.0, epsilon = 1e-12);
        assert_abs_diff_eq!(o.total(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cascade_missing_first_object() {
        let s = Scheme::cascade(vec![r(0.5), r(0.5)], vec![false, true]).unwrap();
        assert_dist(&s.distribution().unwrap(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn cascade_missing_later_object() {
        // Objects 1 and 2 present, 3 absent: nothing reaches D_3.
        let s = Scheme::cascade(vec![r(0.6), r(0.4), r(0.5)], vec![true, true, false]).unwrap();
        let o = s.outcomes().unwrap();
        assert_abs_diff_eq!(o.ifm, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(o.abs[2], 0.0, epsilon = 1e-12);
        // Stage 3 returns everything that entered it to D_2.
        let entered = 0.6 * 0.4 * 0.4 * 0.6;
        assert_abs_diff_eq!(o.partial[1], entered, epsilon = 1e-12);
    }

    #[test]
    fn cascade_mask_length_checked() {
        assert!(Scheme::cascade(vec![r(0.5)], vec![true, true]).is_err());
        assert!(build_cascade(&[], &[]).is_err());
    }

    #[test]
    fn cascade_matches_closed_form() {
        let rs = [0.3, 0.55, 0.8, 0.45];
        let s = Scheme::cascade_present(rs.iter().map(|&v| r(v)).collect()).unwrap();
        assert_abs_diff_eq!(s.outcomes().unwrap().eta().unwrap(), eta_cascade(&rs).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn chain_two_modes_is_ev() {
        assert_eq!(build_chain(2, &[r(0.35)], true).unwrap(), build_ev(r(0.35), true).unwrap());
        assert!(build_chain(1, &[], true).is_err());
        assert!(build_chain(3, &[r(0.5)], true).is_err());
    }

    #[test]
    fn chain_effective_transmission() {
        let rs = [r(0.3), r(0.6), r(0.45)];
        let m = 4;
        let c = build_chain(m, &rs, false).unwrap();
        // Forward half only.
        let mut fwd = CircuitSpec::new(m + 1).unwrap();
        for (i, &ri) in rs.iter().enumerate() {
            fwd.bs(i, i + 1, ri).unwrap();
        }
        let u = compose(&fwd).unwrap();
        let t: f64 = rs.iter().map(|x| x.transmission()).product();
        assert_abs_diff_eq!(u.get(m - 1, 0).norm_sqr(), t, epsilon = 1e-12);
        assert_dist(&simulate(&c, 0).unwrap(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn chain_three_modes_effective_reflectivity() {
        let (r1, r2) = (0.6, 0.7);
        let s = Scheme::Chain {
            forward: vec![r(r1), r(r2)],
            reverse: vec![r(r1), r(r2)],
            present: true,
        };
        let eff = r1 + r2 - r1 * r2;
        assert_abs_diff_eq!(s.outcomes().unwrap().eta().unwrap(), eta_ev(eff).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn scheme_json_round_trip() {
        let s = Scheme::cascade(vec![r(0.5), r(0.25)], vec![true, false]).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"scheme":"cascade","reflectivities":[0.5,0.25],"presence":[true,false]}"#);
        assert_eq!(serde_json::from_str::<Scheme>(&json).unwrap(), s);
        let o = OutcomeDistribution {
            ifm: 0.25,
            abs: vec![0.5],
            partial: vec![],
            null: 0.25,
        };
        assert_eq!(serde_json::to_string(&o).unwrap(), r#"{"ifm":0.25,"abs":[0.5],"partial":[],"null":0.25}"#);
    }
}
