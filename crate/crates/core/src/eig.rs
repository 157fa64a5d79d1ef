//! Dense complex eigensolver.
//!
//! The Schur form `A = Q T Q*` comes from nalgebra; eigenvectors are then
//! recovered by back-substitution on the triangular factor. Results are
//! sorted by (Re λ, Im λ) and carry a fixed phase convention so repeated
//! runs produce identical output.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 512;

/// `|vᵀv|` below this marks a vector as near-defective for the bilinear product.
pub const DEFECTIVE_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: Complex64,
    /// Right eigenvector, Hermitian-normalized (`Σ|v_k|² = 1`).
    pub vector: CVector,
    /// Unconjugated self-product `vᵀv` of the Hermitian-normalized vector.
    pub bilinear_norm: Complex64,
}

impl EigenPair {
    pub fn near_defective(&self) -> bool {
        self.bilinear_norm.norm() <= DEFECTIVE_THRESHOLD
    }

    /// Left eigenvector of a complex-symmetric matrix: `vᵀ / (vᵀv)`, so that
    /// the bilinear pairing with `vector` equals one. `None` when near-defective.
    pub fn left_vector(&self) -> Option<CVector> {
        (!self.near_defective()).then(|| self.vector.map(|c| c / self.bilinear_norm))
    }
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Residual `‖Av − λv‖₂`.
pub fn residual(a: &CMatrix, value: Complex64, vector: &CVector) -> f64 {
    (a * vector - vector * value).norm()
}

/// Make the largest-modulus component real and positive (first index wins
/// ties within a relative `1e-9`), then normalize to unit 2-norm.
pub fn fix_phase(v: &mut CVector) {
    let norm = v.norm();
    if norm == 0.0 {
        return;
    }
    let biggest = v.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    let pivot = v
        .iter()
        .position(|z| z.norm() >= biggest * (1.0 - 1e-9))
        .expect("non-empty vector");
    let phase = v[pivot] / v[pivot].norm();
    let scale = phase.conj() / norm;
    v.apply(|z| *z *= scale);
    v[pivot] = Complex64::new(v[pivot].re, 0.0);
}

/// Eigen-decompose a dense complex matrix (`n ≤ 512`).
///
/// Every returned pair satisfies `‖Av − λv‖₂ ≤ 1e-9·n·‖A‖_max` with unit `v`;
/// otherwise [`Error::NoConvergence`] carries the worst residual seen.
pub fn eig_dense_complex(a: &CMatrix) -> Result<Vec<EigenPair>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Domain(format!("matrix must be square, got {}x{}", n, a.ncols())));
    }
    if n > MAX_DIM {
        return Err(Error::Domain(format!("matrix dimension {n} exceeds {MAX_DIM}")));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }

    let scale = max_abs(a);
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 100 * n.max(10))
        .ok_or(Error::NoConvergence { worst_residual: f64::INFINITY })?;
    let (q, t) = schur.unpack();

    let mut pairs = Vec::with_capacity(n);
    let mut worst = 0.0_f64;
    for i in 0..n {
        let value = t[(i, i)];
        let mut vector = &q * triangular_eigenvector(&t, i, scale);
        fix_phase(&mut vector);
        worst = worst.max(residual(a, value, &vector));
        let bilinear_norm = vector.iter().map(|z| z * z).sum();
        pairs.push(EigenPair { value, vector, bilinear_norm });
    }

    let bound = 1e-9 * n as f64 * scale.max(f64::MIN_POSITIVE);
    if !(worst <= bound) {
        return Err(Error::NoConvergence { worst_residual: worst });
    }

    pairs.sort_by(|x, y| {
        x.value
            .re
            .total_cmp(&y.value.re)
            .then(x.value.im.total_cmp(&y.value.im))
    });
    Ok(pairs)
}

/// Solve `(T − t_ii) y = 0` with `y_i = 1`, `y_j = 0` for `j > i`.
fn triangular_eigenvector(t: &CMatrix, i: usize, scale: f64) -> CVector {
    let n = t.nrows();
    let lambda = t[(i, i)];
    let small = f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    let mut y = CVector::zeros(n);
    y[i] = Complex64::new(1.0, 0.0);
    for j in (0..i).rev() {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in j + 1..=i {
            acc += t[(j, k)] * y[k];
        }
        let mut denom = t[(j, j)] - lambda;
        if denom.norm() < small {
            denom = Complex64::new(small, 0.0);
        }
        y[j] = -acc / denom;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_input() {
        let d = [c(0.3, -1.0), c(-2.0, 0.5), c(1.0, 0.0)];
        let a = CMatrix::from_diagonal(&CVector::from_row_slice(&d));
        let pairs = eig_dense_complex(&a).unwrap();
        let values: Vec<_> = pairs.iter().map(|p| p.value).collect();
        assert_eq!(values, vec![d[1], d[0], d[2]]);
        for p in &pairs {
            let idx = d.iter().position(|z| *z == p.value).unwrap();
            assert!((p.vector[idx] - c(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn symmetric_dimer() {
        let g = c(0.4, -0.2);
        let a = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), g, g, c(0.0, 0.0)]);
        let pairs = eig_dense_complex(&a).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((pairs[0].value + g).norm() < 1e-14);
        assert!((pairs[1].value - g).norm() < 1e-14);
        assert!((pairs[0].vector[0] - c(h, 0.0)).norm() < 1e-14);
        assert!((pairs[0].vector[1] + c(h, 0.0)).norm() < 1e-14);
        assert!((pairs[1].vector[1] - c(h, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn left_vectors_pair_bilinearly() {
        let a = CMatrix::from_row_slice(
            3,
            3,
            &[c(0.1, -0.5), c(0.3, 0.2), c(-0.4, 0.1), c(0.3, 0.2), c(1.0, -0.2), c(0.7, -0.3), c(-0.4, 0.1), c(0.7, -0.3), c(-0.6, -0.9)],
        );
        let pairs = eig_dense_complex(&a).unwrap();
        for (i, p) in pairs.iter().enumerate() {
            let left = p.left_vector().unwrap();
            for (j, q) in pairs.iter().enumerate() {
                let overlap: Complex64 = left.iter().zip(q.vector.iter()).map(|(x, y)| x * y).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((overlap - c(expect, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn flags_vanishing_bilinear_norm() {
        // rotation-eigenvector-like pair: v = (1, i)/√2 has vᵀv = 0
        let a = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let pairs = eig_dense_complex(&a).unwrap();
        assert!(pairs.iter().all(|p| p.near_defective()));
        assert!(pairs[0].left_vector().is_none());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(eig_dense_complex(&CMatrix::zeros(2, 3)).is_err());
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 0)] = c(f64::NAN, 0.0);
        assert!(eig_dense_complex(&a).is_err());
        assert!(eig_dense_complex(&CMatrix::zeros(0, 0)).unwrap().is_empty());
    }

    #[test]
    fn phase_convention() {
        let mut v = CVector::from_row_slice(&[c(0.0, 2.0), c(1.0, 0.0), c(0.0, -2.0)]);
        fix_phase(&mut v);
        assert!((v[0] - c(2.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!((v.norm() - 1.0).abs() < 1e-15);
    }

    fn random_symmetric(n: usize, seed: u64) -> CMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut a = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                a[(i, j)] = z;
                a[(j, i)] = z;
            }
        }
        a
    }

    /// Characteristic polynomial coefficients `[c_0, …, c_n]`, `c_n = 1`.
    fn faddeev_leverrier(a: &CMatrix) -> Vec<Complex64> {
        let n = a.nrows();
        let mut coeffs = vec![c(0.0, 0.0); n + 1];
        coeffs[n] = c(1.0, 0.0);
        let mut m = CMatrix::zeros(n, n);
        for k in 1..=n {
            m = a * &m + CMatrix::identity(n, n) * coeffs[n - k + 1];
            coeffs[n - k] = -(a * &m).trace() / k as f64;
        }
        coeffs
    }

    #[test]
    fn eigenvalues_are_roots_of_characteristic_polynomial() {
        for seed in 0..5 {
            let a = random_symmetric(8, seed);
            let coeffs = faddeev_leverrier(&a);
            let pairs = eig_dense_complex(&a).unwrap();
            assert_eq!(pairs.len(), 8);
            for p in &pairs {
                let (mut value, mut scale, mut power) = (c(0.0, 0.0), 0.0, c(1.0, 0.0));
                for ck in &coeffs {
                    value += ck * power;
                    scale += ck.norm() * power.norm();
                    power *= p.value;
                }
                assert!(value.norm() <= 1e-10 * scale, "seed {seed}: |p(λ)| = {}", value.norm());
            }
            // power sums against traces of matrix powers
            let mut ak = CMatrix::identity(8, 8);
            for k in 1..=8 {
                ak = &ak * &a;
                let sum: Complex64 = pairs.iter().map(|p| p.value.powi(k)).sum();
                assert!((sum - ak.trace()).norm() <= 1e-10 * ak.norm().max(1.0));
            }
        }
    }
}
