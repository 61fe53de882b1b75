//! Cyclic Jacobi eigensolver for dense Hermitian matrices.

use num_complex::Complex64;

use super::matrix::{ComplexMatrix, ZERO};
use crate::error::{Error, Result};
use crate::tolerances::DEFAULT;

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// `V f(Λ) V*`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &w) in fl.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = v[(i, k)] * w;
                if vik == ZERO {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += vik * v[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|l| l)
    }

    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        self.eigenvectors.col(k)
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn herm_eig(h: &ComplexMatrix) -> Result<SpectralDecomposition> {
    h.ensure_square()?;
    if !h.is_finite() {
        return Err(Error::NonFinite);
    }
    let dev = h.hermitian_deviation();
    if dev > DEFAULT.herm_threshold(h.frobenius_norm()) {
        return Err(Error::NotHermitian(dev));
    }
    Ok(jacobi(&h.hermitian_part()))
}

/// Jacobi on the Hermitian part of `h` without validation; for inner loops
/// whose inputs are Hermitian by construction.
pub fn herm_eig_unchecked(h: &ComplexMatrix) -> SpectralDecomposition {
    jacobi(&h.hermitian_part())
}

fn off_norm_sq(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s
}

fn jacobi(h: &ComplexMatrix) -> SpectralDecomposition {
    let n = h.rows();
    let mut a = h.clone();
    let mut v = ComplexMatrix::identity(n);
    let scale_sq = h.frobenius_norm().powi(2);

    if n > 1 && scale_sq > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let off = off_norm_sq(&a);
            if off <= (f64::EPSILON * f64::EPSILON) * scale_sq * 1e-2 || off == 0.0 {
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

/// Zeroes `a[p][q]` with the unitary rotation `J` acting on columns `p, q`:
/// `J_pp = J_qq = c`, `J_pq = s·e^{iφ}`, `J_qp = −s·e^{−iφ}`, where
/// `a_pq = |a_pq| e^{iφ}`; then `A ← J* A J`, `V ← V J`.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let abs = apq.norm();
    if abs == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Skip rotations that cannot change the diagonal in floating point.
    if abs < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[(p, q)] = ZERO;
        a[(q, p)] = ZERO;
        return;
    }
    let phase = apq / abs;
    let theta = (aqq - app) / (2.0 * abs);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let sp = phase * s;
    let spc = sp.conj();
    let n = a.rows();

    // A ← A J
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * spc;
        a[(k, q)] = akp * sp + akq * c;
    }
    // A ← J* A
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * sp;
        a[(q, k)] = apk * spc + aqk * c;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * spc;
        v[(k, q)] = vkp * sp + vkq * c;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::{I, ONE};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_is_sorted() {
        let d = herm_eig(&ComplexMatrix::from_real_diag(&[2.0, 1.0])).unwrap();
        assert_eq!(d.eigenvalues, vec![1.0, 2.0]);
    }

    #[test]
    fn pauli_x() {
        let x = ComplexMatrix::from_vec(2, 2, vec![ZERO, ONE, ONE, ZERO]).unwrap();
        let d = herm_eig(&x).unwrap();
        assert!((d.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((d.eigenvalues[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn complex_two_by_two() {
        let h = ComplexMatrix::from_vec(2, 2, vec![ONE, I, -I, ONE]).unwrap();
        let d = herm_eig(&h).unwrap();
        assert!(d.eigenvalues[0].abs() < 1e-15);
        assert!((d.eigenvalues[1] - 2.0).abs() < 1e-15);
        assert!(d.reconstruct().distance(&h) < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let h = ComplexMatrix::from_vec(2, 2, vec![ONE, ONE, ZERO, ONE]).unwrap();
        assert!(matches!(herm_eig(&h), Err(Error::NotHermitian(_))));
        let r = ComplexMatrix::zeros(2, 3);
        assert!(matches!(herm_eig(&r), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn degenerate_spectrum() {
        let h = ComplexMatrix::from_vec(
            3,
            3,
            vec![ONE, c(0.0, 0.0), ZERO, ZERO, ONE, ZERO, ZERO, ZERO, c(3.0, 0.0)],
        )
        .unwrap();
        let d = herm_eig(&h).unwrap();
        assert_eq!(d.eigenvalues, vec![1.0, 1.0, 3.0]);
    }
}
