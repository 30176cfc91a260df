//! Haar-distributed random unitaries.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::optics::UnitaryMatrix;

/// Samples an `m × m` unitary from the Haar measure.
///
/// Draws a complex Ginibre matrix and orthonormalises its columns with
/// modified Gram-Schmidt (run twice). Gram-Schmidt yields the QR factor with
/// a positive real diagonal in `R`, which is the phase fix that makes `Q`
/// Haar distributed.
pub fn haar_unitary<R: Rng + ?Sized>(m: usize, rng: &mut R) -> UnitaryMatrix {
    assert!(m > 0, "haar_unitary needs at least one mode");
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut a = Array2::from_shape_fn((m, m), |_| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    });
    for j in 0..m {
        for _pass in 0..2 {
            for k in 0..j {
                let mut proj = Complex64::new(0.0, 0.0);
                for i in 0..m {
                    proj += a[(i, k)].conj() * a[(i, j)];
                }
                for i in 0..m {
                    let qk = a[(i, k)];
                    a[(i, j)] -= proj * qk;
                }
            }
        }
        let norm = a.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        a.column_mut(j).mapv_inplace(|z| z / norm);
    }
    UnitaryMatrix::from_array_unchecked(a)
}
