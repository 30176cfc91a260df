//! Exact single-photon linear optics.
//!
//! A circuit acts on creation operators of `m` spatial modes. Every element
//! is a unitary `m × m` transfer matrix indexed as `U[(output, input)]`, so a
//! photon entering mode `j` leaves mode `i` with amplitude `U[(i, j)]`.
//!
//! Composition convention: elements listed left-to-right are applied
//! first-to-last, so a circuit `[E_1, …, E_k]` has transfer matrix
//! `U = U_k · … · U_1`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use ndarray::{Array1, Array2, ArrayView2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Contract tolerance on `max |U†U − I|` for any composed matrix.
pub const UNITARITY_TOL: f64 = 1e-10;

/// Tolerance on the squared norm of a single-photon state.
pub const NORM_TOL: f64 = 1e-12;

/// Largest mode count the dense engine is tuned for.
pub const MAX_MODES: usize = 32;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Beamsplitter reflectivity `R ∈ [0, 1]`; the transmission is `T = 1 − R`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Reflectivity(f64);

impl Reflectivity {
    pub const HALF: Reflectivity = Reflectivity(0.5);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::InvalidReflectivity(value))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn transmission(self) -> f64 {
        1.0 - self.0
    }
}

impl TryFrom<f64> for Reflectivity {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Reflectivity> for f64 {
    fn from(r: Reflectivity) -> f64 {
        r.0
    }
}

impl fmt::Display for Reflectivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Converts a slice of raw values, failing on the first invalid entry.
pub fn reflectivities(values: &[f64]) -> Result<Vec<Reflectivity>> {
    values.iter().copied().map(Reflectivity::new).collect()
}

/// `max_{i,j} |(A†A − I)_{ij}|`; `f64::INFINITY` for non-square input.
pub fn unitarity_residual(a: ArrayView2<'_, Complex64>) -> f64 {
    let (rows, cols) = a.dim();
    if rows != cols {
        return f64::INFINITY;
    }
    let mut worst = 0.0_f64;
    for i in 0..cols {
        for j in i..cols {
            let mut acc = ZERO;
            for k in 0..rows {
                acc += a[(k, i)].conj() * a[(k, j)];
            }
            if i == j {
                acc -= ONE;
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}

/// Dense `m × m` unitary transfer matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix(Array2<Complex64>);

impl UnitaryMatrix {
    /// Wraps `a`, checking unitarity against [`UNITARITY_TOL`].
    pub fn new(a: Array2<Complex64>) -> Result<Self> {
        Self::with_tolerance(a, UNITARITY_TOL)
    }

    pub fn with_tolerance(a: Array2<Complex64>, tol: f64) -> Result<Self> {
        let (rows, cols) = a.dim();
        if rows != cols {
            return Err(Error::DimensionMismatch {
                expected: rows,
                actual: cols,
            });
        }
        if rows == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                actual: 0,
            });
        }
        let residual = unitarity_residual(a.view());
        if residual < tol {
            Ok(Self(a))
        } else {
            Err(Error::NotUnitary { residual })
        }
    }

    /// For products of matrices that are unitary by construction.
    pub(crate) fn from_array_unchecked(a: Array2<Complex64>) -> Self {
        debug_assert_eq!(a.nrows(), a.ncols());
        Self(a)
    }

    pub fn identity(m: usize) -> Self {
        Self(Array2::eye(m))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn as_array(&self) -> &Array2<Complex64> {
        &self.0
    }

    pub fn view(&self) -> ArrayView2<'_, Complex64> {
        self.0.view()
    }

    pub fn into_inner(self) -> Array2<Complex64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.t().mapv(|z| z.conj()))
    }

    /// `self · rhs`, i.e. `rhs` applied first.
    pub fn dot(&self, rhs: &UnitaryMatrix) -> Result<Self> {
        if self.dim() != rhs.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: rhs.dim(),
            });
        }
        Ok(Self(self.0.dot(&rhs.0)))
    }

    pub fn unitarity_residual(&self) -> f64 {
        unitarity_residual(self.0.view())
    }

    /// Entrywise max-norm distance; infinite when dimensions differ.
    pub fn max_abs_diff(&self, other: &UnitaryMatrix) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
struct UnitaryRepr {
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl Serialize for UnitaryMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows = self.0.rows().into_iter();
        let (re, im) = rows
            .map(|r| (r.iter().map(|z| z.re).collect(), r.iter().map(|z| z.im).collect()))
            .unzip();
        UnitaryRepr {
            dim: self.dim(),
            re,
            im,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for UnitaryMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = UnitaryRepr::deserialize(d)?;
        let m = repr.dim;
        let shaped = repr.re.len() == m
            && repr.im.len() == m
            && repr.re.iter().chain(repr.im.iter()).all(|r| r.len() == m);
        if !shaped {
            return Err(D::Error::custom(format!("expected {m}x{m} re/im arrays")));
        }
        let a = Array2::from_shape_fn((m, m), |(i, j)| Complex64::new(repr.re[i][j], repr.im[i][j]));
        UnitaryMatrix::new(a).map_err(D::Error::custom)
    }
}

/// Beamsplitter `[[√R, √T], [√T, −√R]]`. A reflected photon keeps its mode.
pub fn bs_unitary(r: Reflectivity) -> UnitaryMatrix {
    let (sr, st) = bs_amplitudes(r);
    UnitaryMatrix(ndarray::array![[sr, st], [st, -sr]].mapv(|x| Complex64::new(x, 0.0)))
}

#[inline]
fn bs_amplitudes(r: Reflectivity) -> (f64, f64) {
    // Exact balanced values keep R = 0.5 circuits bit-symmetric.
    if r.0 == 0.5 {
        (FRAC_1_SQRT_2, FRAC_1_SQRT_2)
    } else {
        (r.0.sqrt(), r.transmission().sqrt())
    }
}

/// Single-mode phase `e^{iφ}` as a `1 × 1` matrix.
pub fn phase_unitary(phi: f64) -> UnitaryMatrix {
    UnitaryMatrix(Array2::from_elem((1, 1), Complex64::from_polar(1.0, phi)))
}

/// Places `small` on `target_modes` of an `m`-mode identity. Row/column `a`
/// of `small` lands on mode `target_modes[a]`.
pub fn embed(small: &UnitaryMatrix, target_modes: &[usize], m: usize) -> Result<UnitaryMatrix> {
    if small.dim() != target_modes.len() {
        return Err(Error::DimensionMismatch {
            expected: small.dim(),
            actual: target_modes.len(),
        });
    }
    check_distinct(target_modes, m)?;
    let mut out = Array2::eye(m);
    for (a, &ma) in target_modes.iter().enumerate() {
        for (b, &mb) in target_modes.iter().enumerate() {
            out[(ma, mb)] = small.0[(a, b)];
        }
    }
    Ok(UnitaryMatrix(out))
}

fn check_distinct(modes: &[usize], m: usize) -> Result<()> {
    for (i, &a) in modes.iter().enumerate() {
        if a >= m {
            return Err(Error::ModeOutOfRange { mode: a, modes: m });
        }
        if modes[..i].contains(&a) {
            return Err(Error::DuplicateMode(a));
        }
    }
    Ok(())
}

/// One linear-optical element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Element {
    /// Beamsplitter with `modes[0]` as the first row/column of [`bs_unitary`].
    #[serde(rename = "bs")]
    BeamSplitter { modes: [usize; 2], r: Reflectivity },
    #[serde(rename = "ps")]
    PhaseShifter { mode: usize, phi: f64 },
    /// A photon in mode `i` moves to mode `map[i]`.
    #[serde(rename = "perm")]
    Permutation { map: Vec<usize> },
}

impl Element {
    pub fn bs(a: usize, b: usize, r: Reflectivity) -> Self {
        Element::BeamSplitter { modes: [a, b], r }
    }

    pub fn ps(mode: usize, phi: f64) -> Self {
        Element::PhaseShifter { mode, phi }
    }

    /// Transposition of two modes on an `m`-mode circuit.
    pub fn swap(a: usize, b: usize, m: usize) -> Self {
        let mut map: Vec<usize> = (0..m).collect();
        if a < m && b < m {
            map.swap(a, b);
        }
        Element::Permutation { map }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        match self {
            Element::BeamSplitter { modes, .. } => check_distinct(modes, m),
            Element::PhaseShifter { mode, phi } => {
                if *mode >= m {
                    return Err(Error::ModeOutOfRange { mode: *mode, modes: m });
                }
                if !phi.is_finite() {
                    return Err(Error::NonFinite("phase"));
                }
                Ok(())
            }
            Element::Permutation { map } => {
                if map.len() != m {
                    return Err(Error::InvalidPermutation(m));
                }
                let mut seen = vec![false; m];
                for &t in map {
                    if t >= m || std::mem::replace(&mut seen[t], true) {
                        return Err(Error::InvalidPermutation(m));
                    }
                }
                Ok(())
            }
        }
    }

    /// Full `m × m` matrix of this element.
    pub fn unitary(&self, m: usize) -> Result<UnitaryMatrix> {
        self.validate(m)?;
        match self {
            Element::BeamSplitter { modes, r } => embed(&bs_unitary(*r), modes, m),
            Element::PhaseShifter { mode, phi } => embed(&phase_unitary(*phi), &[*mode], m),
            Element::Permutation { map } => {
                let mut p = Array2::zeros((m, m));
                for (i, &t) in map.iter().enumerate() {
                    p[(t, i)] = ONE;
                }
                Ok(UnitaryMatrix(p))
            }
        }
    }

    /// Applies the element to every column of `rows`, treating the first axis
    /// as the mode index. Assumes a validated element.
    fn apply_rows(&self, a: &mut Array2<Complex64>) {
        match self {
            Element::BeamSplitter { modes: [p, q], r } => {
                let (sr, st) = bs_amplitudes(*r);
                for c in 0..a.ncols() {
                    let (x, y) = (a[(*p, c)], a[(*q, c)]);
                    a[(*p, c)] = x * sr + y * st;
                    a[(*q, c)] = x * st - y * sr;
                }
            }
            Element::PhaseShifter { mode, phi } => {
                let z = Complex64::from_polar(1.0, *phi);
                a.row_mut(*mode).mapv_inplace(|v| v * z);
            }
            Element::Permutation { map } => {
                let src = a.clone();
                for (i, &t) in map.iter().enumerate() {
                    a.row_mut(t).assign(&src.row(i));
                }
            }
        }
    }

    fn apply_amplitudes(&self, v: &mut [Complex64]) {
        match self {
            Element::BeamSplitter { modes: [p, q], r } => {
                let (sr, st) = bs_amplitudes(*r);
                let (x, y) = (v[*p], v[*q]);
                v[*p] = x * sr + y * st;
                v[*q] = x * st - y * sr;
            }
            Element::PhaseShifter { mode, phi } => v[*mode] *= Complex64::from_polar(1.0, *phi),
            Element::Permutation { map } => {
                let src = v.to_vec();
                for (i, &t) in map.iter().enumerate() {
                    v[t] = src[i];
                }
            }
        }
    }
}

/// Ordered list of elements on `modes` optical modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCircuit")]
pub struct CircuitSpec {
    modes: usize,
    elements: Vec<Element>,
}

#[derive(Deserialize)]
struct RawCircuit {
    modes: usize,
    #[serde(default)]
    elements: Vec<Element>,
}

impl TryFrom<RawCircuit> for CircuitSpec {
    type Error = Error;

    fn try_from(raw: RawCircuit) -> Result<Self> {
        let mut c = CircuitSpec::new(raw.modes)?;
        for e in raw.elements {
            c.push(e)?;
        }
        Ok(c)
    }
}

impl CircuitSpec {
    pub fn new(modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                actual: 0,
            });
        }
        Ok(Self {
            modes,
            elements: Vec::new(),
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn push(&mut self, e: Element) -> Result<&mut Self> {
        e.validate(self.modes)?;
        self.elements.push(e);
        Ok(self)
    }

    pub fn bs(&mut self, a: usize, b: usize, r: Reflectivity) -> Result<&mut Self> {
        self.push(Element::bs(a, b, r))
    }

    pub fn ps(&mut self, mode: usize, phi: f64) -> Result<&mut Self> {
        self.push(Element::ps(mode, phi))
    }

    pub fn swap(&mut self, a: usize, b: usize) -> Result<&mut Self> {
        if a >= self.modes {
            return Err(Error::ModeOutOfRange {
                mode: a,
                modes: self.modes,
            });
        }
        if b >= self.modes {
            return Err(Error::ModeOutOfRange {
                mode: b,
                modes: self.modes,
            });
        }
        self.push(Element::swap(a, b, self.modes))
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &CircuitSpec) -> Result<CircuitSpec> {
        if self.modes != next.modes {
            return Err(Error::DimensionMismatch {
                expected: self.modes,
                actual: next.modes,
            });
        }
        let mut out = self.clone();
        out.elements.extend(next.elements.iter().cloned());
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("circuit serialization is infallible")
    }
}

/// Single-photon amplitudes over the mode basis.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotonState {
    amplitudes: Array1<Complex64>,
}

impl PhotonState {
    pub fn new(amplitudes: Array1<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidDistribution(format!("state has squared norm {norm}")));
        }
        Ok(Self { amplitudes })
    }

    /// Photon in mode `j` of `m`.
    pub fn basis(m: usize, j: usize) -> Result<Self> {
        if j >= m {
            return Err(Error::ModeOutOfRange { mode: j, modes: m });
        }
        let mut amplitudes = Array1::zeros(m);
        amplitudes[j] = ONE;
        Ok(Self { amplitudes })
    }

    pub fn modes(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &Array1<Complex64> {
        &self.amplitudes
    }

    pub fn evolve(&self, u: &UnitaryMatrix) -> Result<Self> {
        if u.dim() != self.modes() {
            return Err(Error::DimensionMismatch {
                expected: u.dim(),
                actual: self.modes(),
            });
        }
        Ok(Self {
            amplitudes: u.0.dot(&self.amplitudes),
        })
    }

    /// Propagates element by element without forming the circuit matrix.
    pub fn propagate(&self, circuit: &CircuitSpec) -> Result<Self> {
        if circuit.modes() != self.modes() {
            return Err(Error::DimensionMismatch {
                expected: circuit.modes(),
                actual: self.modes(),
            });
        }
        let mut v = self.amplitudes.to_vec();
        for e in circuit.elements() {
            e.apply_amplitudes(&mut v);
        }
        Ok(Self {
            amplitudes: Array1::from(v),
        })
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| clamp_probability(z.norm_sqr())).collect()
    }
}

#[inline]
fn clamp_probability(p: f64) -> f64 {
    if (-1e-15..0.0).contains(&p) {
        0.0
    } else {
        p
    }
}

/// Transfer matrix of the whole circuit, `U_last · … · U_first`.
pub fn compose(circuit: &CircuitSpec) -> Result<UnitaryMatrix> {
    let m = circuit.modes();
    let mut u = Array2::eye(m);
    for e in circuit.elements() {
        e.validate(m)?;
        e.apply_rows(&mut u);
    }
    Ok(UnitaryMatrix(u))
}

/// `p_i = |U_{i,j}|²` for a photon injected in mode `j`.
pub fn single_photon_distribution(u: &UnitaryMatrix, input_mode: usize) -> Result<Vec<f64>> {
    if input_mode >= u.dim() {
        return Err(Error::ModeOutOfRange {
            mode: input_mode,
            modes: u.dim(),
        });
    }
    Ok(u.0.column(input_mode).iter().map(|z| clamp_probability(z.norm_sqr())).collect())
}

/// Output distribution of `circuit` for a photon in `input_mode`, computed
/// by amplitude propagation.
pub fn simulate(circuit: &CircuitSpec, input_mode: usize) -> Result<Vec<f64>> {
    Ok(PhotonState::basis(circuit.modes(), input_mode)?
        .propagate(circuit)?
        .probabilities())
}

/// Checks that `dist` is a probability vector: finite, nonnegative entries
/// summing to one within `tol`.
pub fn check_distribution(dist: &[f64], tol: f64) -> Result<()> {
    if dist.is_empty() {
        return Err(Error::InvalidDistribution("empty".into()));
    }
    if let Some(p) = dist.iter().find(|p| !p.is_finite() || **p < -1e-15) {
        return Err(Error::InvalidDistribution(format!("entry {p}")));
    }
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > tol {
        return Err(Error::InvalidDistribution(format!("sums to {total}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn r(v: f64) -> Reflectivity {
        Reflectivity::new(v).unwrap()
    }

    #[test]
    fn reflectivity_bounds() {
        assert!(Reflectivity::new(-0.01).is_err());
        assert!(Reflectivity::new(1.01).is_err());
        assert!(Reflectivity::new(f64::NAN).is_err());
        assert_eq!(r(0.3).transmission(), 0.7);
    }

    #[test]
    fn balanced_beamsplitter() {
        let u = bs_unitary(r(0.5));
        let h = FRAC_1_SQRT_2;
        let expect = [[h, h], [h, -h]];
        for (i, row) in expect.iter().enumerate() {
            for (j, &e) in row.iter().enumerate() {
                assert_abs_diff_eq!(u.get(i, j).re, e, epsilon = 1e-15);
                assert_eq!(u.get(i, j).im, 0.0);
            }
        }
    }

    #[test]
    fn mirror_and_swap() {
        let mirror = bs_unitary(r(1.0));
        assert_eq!(mirror.get(0, 0).re, 1.0);
        assert_eq!(mirror.get(1, 1).re, -1.0);
        assert_eq!(mirror.get(0, 1).norm(), 0.0);
        let swap = bs_unitary(r(0.0));
        assert_eq!(swap.get(0, 1).re, 1.0);
        assert_eq!(swap.get(1, 0).re, 1.0);
        assert_eq!(swap.get(0, 0).norm(), 0.0);
    }

    #[test]
    fn phase_values() {
        assert_abs_diff_eq!(phase_unitary(0.0).get(0, 0).re, 1.0);
        let pi = phase_unitary(PI).get(0, 0);
        assert_abs_diff_eq!(pi.re, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pi.im, 0.0, epsilon = 1e-15);
        let half = phase_unitary(PI / 2.0).get(0, 0);
        assert_abs_diff_eq!(half.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(half.im, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn embed_blocks() {
        let id = embed(&UnitaryMatrix::identity(2), &[0, 1], 3).unwrap();
        assert_eq!(id, UnitaryMatrix::identity(3));

        let e = embed(&bs_unitary(r(0.5)), &[1, 2], 3).unwrap();
        assert_eq!(e.get(0, 0), ONE);
        assert_eq!(e.get(0, 1), ZERO);
        assert_abs_diff_eq!(e.get(2, 2).re, -FRAC_1_SQRT_2);
        assert_abs_diff_eq!(e.get(1, 2).re, FRAC_1_SQRT_2);
    }

    #[test]
    fn embed_errors() {
        let bs = bs_unitary(r(0.5));
        assert!(matches!(embed(&bs, &[0], 3), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(embed(&bs, &[1, 1], 3), Err(Error::DuplicateMode(1))));
        assert!(matches!(embed(&bs, &[1, 3], 3), Err(Error::ModeOutOfRange { .. })));
    }

    #[test]
    fn empty_circuit_is_identity() {
        let c = CircuitSpec::new(4).unwrap();
        assert_eq!(compose(&c).unwrap(), UnitaryMatrix::identity(4));
    }

    #[test]
    fn beamsplitter_is_self_inverse() {
        // BS(R) is real symmetric and orthogonal, so BS(R)² = I.
        for v in [0.0, 0.13, 0.5, 0.77, 1.0] {
            let mut c = CircuitSpec::new(2).unwrap();
            c.bs(0, 1, r(v)).unwrap().bs(0, 1, r(v)).unwrap();
            let u = compose(&c).unwrap();
            assert!(u.max_abs_diff(&UnitaryMatrix::identity(2)) < 1e-15);
        }
    }

    #[test]
    fn distribution_of_beamsplitter() {
        let d = single_photon_distribution(&bs_unitary(r(0.3)), 0).unwrap();
        assert_abs_diff_eq!(d[0], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(d[1], 0.7, epsilon = 1e-15);
        assert!(single_photon_distribution(&bs_unitary(r(0.3)), 2).is_err());
        let id = single_photon_distribution(&UnitaryMatrix::identity(4), 0).unwrap();
        assert_eq!(id, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn circuit_validation() {
        let mut c = CircuitSpec::new(3).unwrap();
        assert!(c.bs(0, 3, r(0.5)).is_err());
        assert!(c.bs(1, 1, r(0.5)).is_err());
        assert!(c.ps(5, 0.0).is_err());
        assert!(c.ps(0, f64::INFINITY).is_err());
        assert!(c.push(Element::Permutation { map: vec![0, 0, 1] }).is_err());
        assert!(c.push(Element::Permutation { map: vec![0, 1] }).is_err());
        assert!(c.push(Element::Permutation { map: vec![2, 0, 1] }).is_ok());
        assert!(CircuitSpec::new(0).is_err());
    }

    #[test]
    fn permutation_moves_photon() {
        let mut c = CircuitSpec::new(3).unwrap();
        c.push(Element::Permutation { map: vec![2, 0, 1] }).unwrap();
        assert_eq!(simulate(&c, 0).unwrap(), vec![0.0, 0.0, 1.0]);
        assert_eq!(single_photon_distribution(&compose(&c).unwrap(), 1).unwrap(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn json_shape() {
        let mut c = CircuitSpec::new(3).unwrap();
        c.bs(0, 1, r(0.5)).unwrap().swap(1, 2).unwrap().ps(2, 0.25).unwrap();
        let json = c.to_json();
        assert_eq!(
            json,
            r#"{"modes":3,"elements":[{"kind":"bs","modes":[0,1],"r":0.5},{"kind":"perm","map":[0,2,1]},{"kind":"ps","mode":2,"phi":0.25}]}"#
        );
        let back: CircuitSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        let via_serde: CircuitSpec = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(via_serde, c);
    }

    #[test]
    fn json_rejects_invalid_circuits() {
        let bad_mode = r#"{"modes":2,"elements":[{"kind":"bs","modes":[0,2],"r":0.5}]}"#;
        assert!(serde_json::from_str::<CircuitSpec>(bad_mode).is_err());
        let bad_r = r#"{"modes":2,"elements":[{"kind":"bs","modes":[0,1],"r":1.5}]}"#;
        assert!(serde_json::from_str::<CircuitSpec>(bad_r).is_err());
        let bad_perm = r#"{"modes":2,"elements":[{"kind":"perm","map":[1,1]}]}"#;
        assert!(serde_json::from_str::<CircuitSpec>(bad_perm).is_err());
    }

    #[test]
    fn unitary_serde_round_trip() {
        let u = bs_unitary(r(0.2));
        let s = serde_json::to_string(&u).unwrap();
        let back: UnitaryMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, u);
        let bad = r#"{"dim":2,"re":[[1,1],[0,1]],"im":[[0,0],[0,0]]}"#;
        assert!(serde_json::from_str::<UnitaryMatrix>(bad).is_err());
    }

    #[test]
    fn photon_state_norm_checked() {
        assert!(PhotonState::new(Array1::from(vec![ONE, ONE])).is_err());
        assert!(PhotonState::basis(2, 2).is_err());
    }
}
