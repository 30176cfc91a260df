//! Clements rectangular-mesh compilation.
//!
//! Each MZI on modes `(row, row + 1)` is, in application order,
//! `PS(φ on row) → BS(0.5) → PS(2θ on row) → BS(0.5)`, with the balanced
//! beamsplitter of [`crate::optics::bs_unitary`]. Its transfer matrix is
//!
//! ```text
//! T(θ, φ) = e^{iθ} [[e^{iφ} cos θ,  i sin θ],
//!                   [i e^{iφ} sin θ, cos θ ]]
//! ```
//!
//! so `θ = 0` is the bar (fully reflective) setting and the effective
//! reflectivity of the unit is `cos² θ`. A program lists the MZIs in
//! application order followed by one output phase per mode.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{unitarity_residual, CircuitSpec, Reflectivity, UnitaryMatrix};
use crate::rng::rng_from_seed;

/// Inputs to [`decompose`] must be unitary to this residual.
pub const DECOMPOSE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mzi {
    pub row: usize,
    pub column: usize,
    pub theta: f64,
    pub phi: f64,
}

impl Mzi {
    /// The 2×2 transfer matrix `T(θ, φ)`.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        mzi_matrix(self.theta, self.phi)
    }
}

fn mzi_matrix(theta: f64, phi: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    let g = Complex64::from_polar(1.0, theta);
    let e = Complex64::from_polar(1.0, phi);
    let i = Complex64::i();
    [[g * e * c, g * i * s], [g * i * e * s, g * c]]
}

/// Parameters of a rectangular mesh on `dim` modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeshRepr", into = "MeshRepr")]
pub struct MeshProgram {
    dim: usize,
    mzis: Vec<Mzi>,
    output_phases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MeshRepr {
    dim: usize,
    mzi: Vec<(usize, usize, f64, f64)>,
    out_phases: Vec<f64>,
}

impl From<MeshProgram> for MeshRepr {
    fn from(p: MeshProgram) -> Self {
        MeshRepr {
            dim: p.dim,
            mzi: p.mzis.iter().map(|z| (z.row, z.column, z.theta, z.phi)).collect(),
            out_phases: p.output_phases,
        }
    }
}

impl TryFrom<MeshRepr> for MeshProgram {
    type Error = Error;

    fn try_from(r: MeshRepr) -> Result<Self> {
        let mzis = r
            .mzi
            .into_iter()
            .map(|(row, column, theta, phi)| Mzi {
                row,
                column,
                theta,
                phi,
            })
            .collect();
        MeshProgram::new(r.dim, mzis, r.out_phases)
    }
}

impl MeshProgram {
    /// Validates shape: `dim(dim−1)/2` MZIs on valid rows, `dim` output
    /// phases, all parameters finite. Angles may lie outside the canonical
    /// ranges; see [`MeshProgram::canonicalize`].
    pub fn new(dim: usize, mzis: Vec<Mzi>, output_phases: Vec<f64>) -> Result<Self> {
        let p = Self {
            dim,
            mzis,
            output_phases,
        };
        p.validate()?;
        Ok(p)
    }

    /// Mesh whose reconstruction is the identity.
    pub fn identity(dim: usize) -> Result<Self> {
        decompose(UnitaryMatrix::identity(dim).view())
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.dim;
        if m == 0 {
            return Err(Error::MalformedMesh("zero modes".into()));
        }
        let expected = m * (m - 1) / 2;
        if self.mzis.len() != expected {
            return Err(Error::MalformedMesh(format!(
                "{} MZIs for {m} modes, expected {expected}",
                self.mzis.len()
            )));
        }
        if self.output_phases.len() != m {
            return Err(Error::MalformedMesh(format!(
                "{} output phases for {m} modes",
                self.output_phases.len()
            )));
        }
        for z in &self.mzis {
            if z.row + 1 >= m {
                return Err(Error::MalformedMesh(format!("MZI row {} out of range", z.row)));
            }
            if !(z.theta.is_finite() && z.phi.is_finite()) {
                return Err(Error::MalformedMesh("non-finite MZI phase".into()));
            }
        }
        if self.output_phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::MalformedMesh("non-finite output phase".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mzis(&self) -> &[Mzi] {
        &self.mzis
    }

    pub fn output_phases(&self) -> &[f64] {
        &self.output_phases
    }

    /// True when every θ ∈ [0, π/2] and every φ and output phase ∈ [0, 2π).
    pub fn is_canonical(&self) -> bool {
        let phase_ok = |p: f64| (0.0..TAU).contains(&p);
        self.mzis
            .iter()
            .all(|z| (0.0..=FRAC_PI_2).contains(&z.theta) && phase_ok(z.phi))
            && self.output_phases.iter().copied().all(phase_ok)
    }

    /// Rewrites the program so every angle lies in its canonical range while
    /// realising the same unitary.
    ///
    /// θ has period π. For θ ∈ (π/2, π) the identity
    /// `T(π − x, φ) = −e^{−2ix} Z T(x, φ + π)` with `Z = diag(1, −1)` moves
    /// the excess into output-side phases, which are pushed forward through
    /// later MZIs via `T(θ, φ) diag(d₁, d₂) = d₂ T(θ, φ + arg d₁/d₂)` and
    /// finally absorbed by the output phases.
    pub fn canonicalize(&self) -> MeshProgram {
        let one = Complex64::new(1.0, 0.0);
        let mut pending = vec![one; self.dim];
        let mut mzis = Vec::with_capacity(self.mzis.len());
        for z in &self.mzis {
            let a = z.row;
            let (d1, d2) = (pending[a], pending[a + 1]);
            let mut phi = z.phi + (d1 / d2).arg();
            let mut theta = z.theta.rem_euclid(PI);
            let (mut out_a, mut out_b) = (d2, d2);
            if theta > FRAC_PI_2 {
                let x = PI - theta;
                let w = Complex64::from_polar(1.0, -2.0 * x);
                out_a *= -w;
                out_b *= w;
                theta = x;
                phi += PI;
            }
            pending[a] = out_a;
            pending[a + 1] = out_b;
            mzis.push(Mzi {
                theta,
                phi: wrap_phase(phi),
                ..*z
            });
        }
        let output_phases = self
            .output_phases
            .iter()
            .zip(&pending)
            .map(|(p, d)| wrap_phase(p + d.arg()))
            .collect();
        MeshProgram {
            dim: self.dim,
            mzis,
            output_phases,
        }
    }

    /// The mesh as explicit phase shifters and balanced beamsplitters.
    pub fn to_circuit(&self) -> Result<CircuitSpec> {
        self.validate()?;
        let mut c = CircuitSpec::new(self.dim)?;
        for z in &self.mzis {
            c.ps(z.row, z.phi)?
                .bs(z.row, z.row + 1, Reflectivity::HALF)?
                .ps(z.row, 2.0 * z.theta)?
                .bs(z.row, z.row + 1, Reflectivity::HALF)?;
        }
        for (k, &p) in self.output_phases.iter().enumerate() {
            c.ps(k, p)?;
        }
        Ok(c)
    }
}

/// Wraps into [0, 2π).
fn wrap_phase(p: f64) -> f64 {
    let w = p.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

fn apply_left(u: &mut Array2<Complex64>, a: usize, t: &[[Complex64; 2]; 2]) {
    for c in 0..u.ncols() {
        let (x, y) = (u[(a, c)], u[(a + 1, c)]);
        u[(a, c)] = t[0][0] * x + t[0][1] * y;
        u[(a + 1, c)] = t[1][0] * x + t[1][1] * y;
    }
}

/// `U ← U · T†` acting on columns `(a, a+1)`.
fn apply_right_inverse(u: &mut Array2<Complex64>, a: usize, t: &[[Complex64; 2]; 2]) {
    for r in 0..u.nrows() {
        let (x, y) = (u[(r, a)], u[(r, a + 1)]);
        u[(r, a)] = x * t[0][0].conj() + y * t[0][1].conj();
        u[(r, a + 1)] = x * t[1][0].conj() + y * t[1][1].conj();
    }
}

/// Decomposes `u` into a canonical Clements mesh.
pub fn decompose(u: ArrayView2<'_, Complex64>) -> Result<MeshProgram> {
    let (n, cols) = u.dim();
    if n != cols || n == 0 {
        return Err(Error::DimensionMismatch {
            expected: n.max(1),
            actual: cols,
        });
    }
    let residual = unitarity_residual(u);
    if residual >= DECOMPOSE_TOL {
        return Err(Error::NotUnitary { residual });
    }
    let mut w = u.to_owned();
    // (mode, θ, φ) of each nulling step.
    let mut right: Vec<(usize, f64, f64)> = Vec::new();
    let mut left: Vec<(usize, f64, f64)> = Vec::new();

    for i in 0..n.saturating_sub(1) {
        if i % 2 == 0 {
            for j in 0..=i {
                let (r, a) = (n - 1 - j, i - j);
                let (x, y) = (w[(r, a)], w[(r, a + 1)]);
                let (theta, phi) = if x.norm() == 0.0 {
                    (0.0, 0.0)
                } else {
                    (x.norm().atan2(y.norm()), x.arg() - y.arg() - FRAC_PI_2)
                };
                apply_right_inverse(&mut w, a, &mzi_matrix(theta, phi));
                right.push((a, theta, phi));
            }
        } else {
            for j in 1..=i + 1 {
                let (r, col) = (n + j - i - 2, j - 1);
                let a = r - 1;
                let (x, y) = (w[(a, col)], w[(r, col)]);
                let (theta, phi) = if y.norm() == 0.0 {
                    (0.0, 0.0)
                } else {
                    (y.norm().atan2(x.norm()), y.arg() - x.arg() + FRAC_PI_2)
                };
                apply_left(&mut w, a, &mzi_matrix(theta, phi));
                left.push((a, theta, phi));
            }
        }
    }

    // w is now diagonal: L_p…L_1 U R_1†…R_q† = D. Move each L† through D.
    let mut d: Vec<Complex64> = (0..n).map(|k| w[(k, k)]).collect();
    let mut commuted = Vec::with_capacity(left.len());
    for &(a, theta, phi) in left.iter().rev() {
        let (d1, d2) = (d[a], d[a + 1]);
        if theta == 0.0 {
            // T(0, φ)† D = diag(e^{−iφ} d₁, d₂) · T(0, 0)
            d[a] = d1 * Complex64::from_polar(1.0, -phi);
            commuted.push((a, 0.0, 0.0));
        } else {
            let w2 = Complex64::from_polar(1.0, -2.0 * theta);
            d[a] = -Complex64::from_polar(1.0, -phi) * d2 * w2;
            d[a + 1] = d2 * w2;
            commuted.push((a, theta, (-d1 / d2).arg()));
        }
    }

    // Application order: R_1 … R_q, then L'_p … L'_1.
    let mut depth = vec![0usize; n];
    let mut mzis = Vec::with_capacity(n * (n - 1) / 2);
    for &(a, theta, phi) in right.iter().chain(commuted.iter()) {
        let column = depth[a].max(depth[a + 1]);
        depth[a] = column + 1;
        depth[a + 1] = column + 1;
        mzis.push(Mzi {
            row: a,
            column,
            theta,
            phi: wrap_phase(phi),
        });
    }
    let output_phases = d.iter().map(|z| wrap_phase(z.arg())).collect();
    Ok(MeshProgram {
        dim: n,
        mzis,
        output_phases,
    })
}

/// Transfer matrix of a mesh program. Unitary for any finite parameters.
pub fn reconstruct(mesh: &MeshProgram) -> Result<UnitaryMatrix> {
    mesh.validate()?;
    let mut u = Array2::eye(mesh.dim);
    for z in &mesh.mzis {
        apply_left(&mut u, z.row, &z.matrix());
    }
    for (k, &p) in mesh.output_phases.iter().enumerate() {
        let e = Complex64::from_polar(1.0, p);
        u.row_mut(k).mapv_inplace(|v| v * e);
    }
    Ok(UnitaryMatrix::from_array_unchecked(u))
}

/// Adds independent `N(0, phase_sigma²)` noise to every θ, φ and output
/// phase, then canonicalizes. `phase_sigma = 0` returns the input unchanged.
pub fn perturb_mesh(mesh: &MeshProgram, phase_sigma: f64, rng_seed: u64) -> Result<MeshProgram> {
    if !(phase_sigma >= 0.0 && phase_sigma.is_finite()) {
        return Err(crate::error::domain("phase_sigma", phase_sigma, "[0, inf)"));
    }
    if phase_sigma == 0.0 {
        return Ok(mesh.clone());
    }
    let mut rng = rng_from_seed(rng_seed);
    Ok(add_phase_noise(mesh, phase_sigma, &mut rng).canonicalize())
}

/// The raw (un-canonicalized) noisy program; draw order is θ, φ per MZI in
/// program order, then output phases.
pub(crate) fn add_phase_noise<R: Rng + ?Sized>(mesh: &MeshProgram, sigma: f64, rng: &mut R) -> MeshProgram {
    let normal = Normal::new(0.0, sigma).expect("sigma validated by caller");
    let mzis = mesh
        .mzis
        .iter()
        .map(|z| {
            let theta = z.theta + normal.sample(rng);
            let phi = z.phi + normal.sample(rng);
            Mzi { theta, phi, ..*z }
        })
        .collect();
    let output_phases = mesh.output_phases.iter().map(|p| p + normal.sample(rng)).collect();
    MeshProgram {
        dim: mesh.dim,
        mzis,
        output_phases,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::haar_unitary;
    use crate::optics::{bs_unitary, compose};
    use crate::rng::rng_from_seed;

    #[test]
    fn identity_is_all_bar() {
        for m in 1..=7 {
            let mesh = decompose(UnitaryMatrix::identity(m).view()).unwrap();
            assert_eq!(mesh.mzis().len(), m * (m - 1) / 2);
            assert!(mesh.mzis().iter().all(|z| z.theta == 0.0 && z.phi == 0.0));
            assert!(mesh.output_phases().iter().all(|&p| p == 0.0));
            assert_eq!(reconstruct(&mesh).unwrap(), UnitaryMatrix::identity(m));
        }
    }

    #[test]
    fn single_mzi_reproduces_beamsplitter() {
        for r in [0.0, 0.1, 0.5, 0.83, 1.0] {
            let u = bs_unitary(Reflectivity::new(r).unwrap());
            let mesh = decompose(u.view()).unwrap();
            assert_eq!(mesh.mzis().len(), 1);
            let z = mesh.mzis()[0];
            assert!((z.theta.cos().powi(2) - r).abs() < 1e-12, "R = {r}");
            assert!(reconstruct(&mesh).unwrap().max_abs_diff(&u) < 1e-12);
        }
    }

    #[test]
    fn rectangular_layout() {
        let mut rng = rng_from_seed(3);
        let u = haar_unitary(6, &mut rng);
        let mesh = decompose(u.view()).unwrap();
        assert!(mesh.is_canonical());
        // Rectangular mesh depth equals the mode count.
        let depth = mesh.mzis().iter().map(|z| z.column + 1).max().unwrap();
        assert_eq!(depth, 6);
        for z in mesh.mzis() {
            assert_eq!(z.row % 2, z.column % 2);
        }
    }

    #[test]
    fn mesh_circuit_matches_reconstruct() {
        let mut rng = rng_from_seed(8);
        let u = haar_unitary(5, &mut rng);
        let mesh = decompose(u.view()).unwrap();
        let via_circuit = compose(&mesh.to_circuit().unwrap()).unwrap();
        assert!(via_circuit.max_abs_diff(&reconstruct(&mesh).unwrap()) < 1e-12);
    }

    #[test]
    fn rejects_non_unitary() {
        let mut a = UnitaryMatrix::identity(3).into_inner();
        a[(0, 1)] = Complex64::new(1e-6, 0.0);
        assert!(matches!(decompose(a.view()), Err(Error::NotUnitary { .. })));
        let rect = Array2::<Complex64>::zeros((2, 3));
        assert!(decompose(rect.view()).is_err());
    }

    #[test]
    fn malformed_programs_rejected() {
        let ok = MeshProgram::identity(3).unwrap();
        let mut short = ok.clone();
        short.mzis.pop();
        assert!(reconstruct(&short).is_err());
        let mut bad_row = ok.clone();
        bad_row.mzis[0].row = 2;
        assert!(reconstruct(&bad_row).is_err());
        let mut bad_out = ok.clone();
        bad_out.output_phases.push(0.0);
        assert!(reconstruct(&bad_out).is_err());
        let mut nan = ok;
        nan.mzis[1].phi = f64::NAN;
        assert!(reconstruct(&nan).is_err());
    }

    #[test]
    fn phi_is_two_pi_periodic() {
        let mut rng = rng_from_seed(21);
        let mesh = decompose(haar_unitary(4, &mut rng).view()).unwrap();
        let base = reconstruct(&mesh).unwrap();
        for k in 0..mesh.mzis().len() {
            let mut shifted = mesh.clone();
            shifted.mzis[k].phi += TAU;
            assert!(reconstruct(&shifted).unwrap().max_abs_diff(&base) < 1e-12);
        }
        let mut shifted = mesh.clone();
        shifted.output_phases[2] -= TAU;
        assert!(reconstruct(&shifted).unwrap().max_abs_diff(&base) < 1e-12);
    }

    #[test]
    fn canonicalize_preserves_unitary() {
        let mut rng = rng_from_seed(4);
        let mesh = decompose(haar_unitary(5, &mut rng).view()).unwrap();
        // Large noise pushes many θ out of [0, π/2].
        let wild = add_phase_noise(&mesh, 2.0, &mut rng);
        assert!(!wild.is_canonical());
        let canon = wild.canonicalize();
        assert!(canon.is_canonical());
        let diff = reconstruct(&canon).unwrap().max_abs_diff(&reconstruct(&wild).unwrap());
        assert!(diff < 1e-12, "diff {diff}");
    }

    #[test]
    fn perturbation_contract() {
        let mut rng = rng_from_seed(9);
        let mesh = decompose(haar_unitary(4, &mut rng).view()).unwrap();
        assert_eq!(perturb_mesh(&mesh, 0.0, 1).unwrap(), mesh);
        let a = perturb_mesh(&mesh, 0.05, 77).unwrap();
        let b = perturb_mesh(&mesh, 0.05, 77).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, perturb_mesh(&mesh, 0.05, 78).unwrap());
        assert!(a.is_canonical());
        assert!(perturb_mesh(&mesh, -1.0, 0).is_err());
    }

    #[test]
    fn json_layout() {
        let mesh = MeshProgram::identity(2).unwrap();
        let json = serde_json::to_string(&mesh).unwrap();
        assert_eq!(json, r#"{"dim":2,"mzi":[[0,0,0.0,0.0]],"out_phases":[0.0,0.0]}"#);
        let back: MeshProgram = serde_json::from_str(&json).unwrap();
        assert_eq!(back, mesh);
        assert!(serde_json::from_str::<MeshProgram>(r#"{"dim":3,"mzi":[],"out_phases":[0,0,0]}"#).is_err());
    }
}
