//! Dense complex linear algebra: the matrix type, the Hermitian eigensolver,
//! spectral functions, tensor manipulations and seeded ensembles.

mod eig;
mod matrix;
pub mod random;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use eig::herm_eig_unchecked;
pub use eig::{herm_eig, SpectralDecomposition};
pub use matrix::{dot, vec_norm, ComplexMatrix, I, ONE, ZERO};
pub use random::sample_psd;

use crate::error::{Error, Result};
use crate::tolerances::DEFAULT;

/// Factor dimensions of a tensor product space, outermost first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorLayout {
    pub dims: Vec<usize>,
}

impl TensorLayout {
    pub fn new(dims: impl Into<Vec<usize>>) -> Self {
        Self { dims: dims.into() }
    }

    pub fn bipartite(m: usize, n: usize) -> Self {
        Self { dims: vec![m, n] }
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn check(&self, x: &ComplexMatrix) -> Result<()> {
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::LayoutMismatch(format!("invalid layout {:?}", self.dims)));
        }
        if !x.is_square() || x.rows() != self.total() {
            return Err(Error::LayoutMismatch(format!(
                "layout {:?} (side {}) does not annotate a {}x{} matrix",
                self.dims,
                self.total(),
                x.rows(),
                x.cols()
            )));
        }
        Ok(())
    }

    /// Multi-index digits of a flat index.
    fn digits(&self, mut flat: usize, out: &mut [usize]) {
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = flat % d;
            flat /= d;
        }
    }

    fn flatten(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&x, &d)| acc * d + x)
    }
}

/// `P^t` through the spectral decomposition; `P` must be positive definite.
pub fn frac_power(p: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let eig = herm_eig(p)?;
    let min = eig.min_eigenvalue();
    if min <= DEFAULT.pd {
        return Err(Error::NotPositiveDefinite(min));
    }
    if t == 0.0 {
        return Ok(ComplexMatrix::identity(p.rows()));
    }
    if t == 1.0 {
        return Ok(p.hermitian_part());
    }
    Ok(eig.reconstruct_with(|l| l.powf(t)))
}

/// Frobenius-nearest PSD matrix: clip negative eigenvalues to zero.
pub fn psd_project(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = herm_eig(h)?;
    Ok(eig.reconstruct_with(|l| l.max(0.0)))
}

pub fn psd_project_unchecked(h: &ComplexMatrix) -> ComplexMatrix {
    let eig = herm_eig_unchecked(h);
    if eig.min_eigenvalue() >= 0.0 {
        return h.hermitian_part();
    }
    eig.reconstruct_with(|l| l.max(0.0))
}

/// Transposes the indices of factor `factor` (0-based) of `x`, leaving all
/// other factors untouched.
pub fn partial_transpose(x: &ComplexMatrix, layout: &TensorLayout, factor: usize) -> Result<ComplexMatrix> {
    layout.check(x)?;
    if factor >= layout.dims.len() {
        return Err(Error::LayoutMismatch(format!(
            "factor {} out of range for layout {:?}",
            factor, layout.dims
        )));
    }
    Ok(partial_transpose_unchecked(x, layout, factor))
}

pub fn partial_transpose_unchecked(x: &ComplexMatrix, layout: &TensorLayout, factor: usize) -> ComplexMatrix {
    let n = layout.total();
    let k = layout.dims.len();
    let mut out = ComplexMatrix::zeros(n, n);
    let mut ri = vec![0; k];
    let mut ci = vec![0; k];
    for r in 0..n {
        layout.digits(r, &mut ri);
        for c in 0..n {
            layout.digits(c, &mut ci);
            std::mem::swap(&mut ri[factor], &mut ci[factor]);
            let (r2, c2) = (layout.flatten(&ri), layout.flatten(&ci));
            std::mem::swap(&mut ri[factor], &mut ci[factor]);
            out[(r2, c2)] = x[(r, c)];
        }
    }
    out
}

/// Marginals of a bipartite matrix: `(Tr_2 x, Tr_1 x)`.
pub fn bipartite_marginals(x: &ComplexMatrix, m: usize, n: usize) -> Result<(ComplexMatrix, ComplexMatrix)> {
    TensorLayout::bipartite(m, n).check(x)?;
    let a = ComplexMatrix::from_fn(m, m, |i, j| (0..n).map(|k| x[(i * n + k, j * n + k)]).sum());
    let b = ComplexMatrix::from_fn(n, n, |k, l| (0..m).map(|i| x[(i * n + k, i * n + l)]).sum());
    Ok((a, b))
}

/// Hilbert–Schmidt inner product `Tr(x* y)`.
pub fn hs_inner(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<Complex64> {
    x.ensure_same_shape(y)?;
    Ok(dot(x.as_slice(), y.as_slice()))
}

/// The swap operator on `ℂⁿ ⊗ ℂⁿ`.
pub fn swap(n: usize) -> ComplexMatrix {
    let mut s = ComplexMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            s[(i * n + j, j * n + i)] = ONE;
        }
    }
    s
}

/// Operator norm (largest singular value).
pub fn operator_norm(x: &ComplexMatrix) -> f64 {
    let g = if x.rows() <= x.cols() {
        x * &x.adjoint()
    } else {
        &x.adjoint() * x
    };
    herm_eig_unchecked(&g).max_eigenvalue().max(0.0).sqrt()
}

/// Moore–Penrose pseudo-inverse of a PSD matrix, discarding eigenvalues at
/// or below `cutoff`.
pub fn psd_pseudo_inverse(p: &ComplexMatrix, cutoff: f64) -> ComplexMatrix {
    herm_eig_unchecked(p).reconstruct_with(|l| if l > cutoff { 1.0 / l } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::{hermitian, rng};
    use proptest::prelude::*;

    fn e(n: usize, i: usize, j: usize) -> ComplexMatrix {
        ComplexMatrix::unit(n, i, j)
    }

    #[test]
    fn marginals_of_a_product() {
        let a = sample_psd(2, 1);
        let b = sample_psd(3, 2);
        let (ma, mb) = bipartite_marginals(&a.kron(&b), 2, 3).unwrap();
        assert!(ma.distance(&a.scale(b.trace())) < 1e-12);
        assert!(mb.distance(&b.scale(a.trace())) < 1e-12);
    }

    #[test]
    fn frac_power_diagonal_cases() {
        let p = ComplexMatrix::from_real_diag(&[4.0, 9.0]);
        let r = frac_power(&p, 0.5).unwrap();
        assert!(r.distance(&ComplexMatrix::from_real_diag(&[2.0, 3.0])) < 1e-14);

        let id = ComplexMatrix::identity(3);
        assert!(frac_power(&id, 0.37).unwrap().distance(&id) < 1e-14);

        // sqrt(0.8) = 0.894427190999916, sqrt(0.2) = 0.447213595499958
        let p = ComplexMatrix::from_real_diag(&[0.8, 0.2]);
        let r = frac_power(&p, 0.5).unwrap();
        assert!((r[(0, 0)].re - 0.894_427_190_999_916).abs() < 1e-12);
        assert!((r[(1, 1)].re - 0.447_213_595_499_958).abs() < 1e-12);
    }

    #[test]
    fn frac_power_rejects_singular() {
        let p = ComplexMatrix::from_real_diag(&[1.0, 0.0]);
        assert!(matches!(frac_power(&p, 0.5), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn frac_power_endpoints() {
        let p = sample_psd(4, 3) + ComplexMatrix::identity(4);
        assert_eq!(frac_power(&p, 0.0).unwrap(), ComplexMatrix::identity(4));
        assert!(frac_power(&p, 1.0).unwrap().distance(&p) < 1e-14);
    }

    #[test]
    fn psd_project_examples() {
        let h = ComplexMatrix::from_real_diag(&[1.0, -1.0]);
        assert!(psd_project(&h).unwrap().distance(&ComplexMatrix::from_real_diag(&[1.0, 0.0])) < 1e-15);
        let p = sample_psd(3, 1);
        assert!(psd_project(&p).unwrap().distance(&p) < 1e-12 * p.frobenius_norm());
        let neg = -ComplexMatrix::identity(2);
        assert!(psd_project(&neg).unwrap().frobenius_norm() < 1e-15);
    }

    #[test]
    fn partial_transpose_examples() {
        let layout = TensorLayout::bipartite(2, 2);
        let x = e(2, 0, 1).kron(&e(2, 0, 1));
        let y = partial_transpose(&x, &layout, 1).unwrap();
        assert_eq!(y, e(2, 0, 1).kron(&e(2, 1, 0)));

        // SWAP^{t2} = Σ E_ij ⊗ E_ij = |Φ⟩⟨Φ| with Φ = Σ e_i ⊗ e_i
        let s = partial_transpose(&swap(2), &layout, 1).unwrap();
        let mut expected = ComplexMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                expected += &e(2, i, j).kron(&e(2, i, j));
            }
        }
        assert_eq!(s, expected);
        let eig = herm_eig(&s).unwrap();
        assert!(eig.min_eigenvalue() > -1e-15);
        assert!((eig.max_eigenvalue() - 2.0).abs() < 1e-14);
        assert!((s.trace().re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn partial_transpose_layout_errors() {
        let x = ComplexMatrix::identity(6);
        assert!(partial_transpose(&x, &TensorLayout::bipartite(2, 2), 1).is_err());
        assert!(partial_transpose(&x, &TensorLayout::bipartite(2, 3), 2).is_err());
    }

    #[test]
    fn hs_inner_examples() {
        assert_eq!(hs_inner(&e(2, 0, 0), &e(2, 0, 0)).unwrap(), ONE);
        assert_eq!(hs_inner(&e(2, 0, 0), &e(2, 0, 1)).unwrap(), ZERO);
        let mut r = rng(11);
        let rho = random::faithful_density(3, 0.01, &mut r);
        let omega = frac_power(&rho, 0.5).unwrap();
        assert!((hs_inner(&omega, &omega).unwrap().re - 1.0).abs() < 1e-13);
        assert!(hs_inner(&e(2, 0, 0), &ComplexMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn sample_psd_spectrum() {
        for s in 0..100 {
            let p = sample_psd(4, s);
            let eig = herm_eig(&p).unwrap();
            assert!(eig.min_eigenvalue() >= -1e-12);
        }
    }

    fn herm_strategy() -> impl Strategy<Value = ComplexMatrix> {
        (1usize..=8, any::<u64>()).prop_map(|(n, seed)| hermitian(n, &mut rng(seed)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn eig_reconstructs(h in herm_strategy()) {
            let d = herm_eig(&h).unwrap();
            let n = h.rows();
            prop_assert!(d.reconstruct().distance(&h) <= 1e-11 * h.frobenius_norm());
            let vv = &d.eigenvectors.adjoint() * &d.eigenvectors;
            prop_assert!(vv.distance(&ComplexMatrix::identity(n)) <= 1e-12);
            prop_assert!(d.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn sqrt_squared_is_identity(n in 1usize..=6, seed in any::<u64>()) {
            let p = sample_psd(n, seed) + ComplexMatrix::identity(n).scale_real(0.1);
            let s = frac_power(&p, 0.5).unwrap();
            let back = frac_power(&s, 2.0).unwrap();
            prop_assert!(back.distance(&p) <= 1e-10 * p.frobenius_norm());
        }

        #[test]
        fn psd_projection_is_nearest(n in 1usize..=6, seed in any::<u64>()) {
            let mut r = rng(seed);
            let h = hermitian(n, &mut r);
            let q = random::psd_with_rank(n, n, &mut r);
            let p = psd_project(&h).unwrap();
            prop_assert!(h.distance(&p) <= h.distance(&q) + 1e-10);
            prop_assert!(psd_project(&p).unwrap().distance(&p) <= 1e-12 * (1.0 + p.frobenius_norm()));
        }

        #[test]
        fn partial_transpose_is_isometric_involution(m in 1usize..=3, n in 1usize..=3, seed in any::<u64>()) {
            let layout = TensorLayout::bipartite(m, n);
            let mut r = rng(seed);
            let x = random::ginibre(m * n, m * n, &mut r);
            for f in 0..2 {
                let y = partial_transpose(&x, &layout, f).unwrap();
                prop_assert!((y.trace() - x.trace()).norm() <= 1e-13);
                prop_assert!((y.frobenius_norm() - x.frobenius_norm()).abs() <= 1e-13 * (1.0 + x.frobenius_norm()));
                prop_assert_eq!(partial_transpose(&y, &layout, f).unwrap(), x.clone());
            }
            let h = x.hermitian_part();
            prop_assert!(partial_transpose(&h, &layout, 1).unwrap().hermitian_deviation() == 0.0);
        }

        #[test]
        fn hs_inner_is_positive(n in 1usize..=5, seed in any::<u64>()) {
            let x = random::ginibre(n, n, &mut rng(seed));
            let v = hs_inner(&x, &x).unwrap();
            prop_assert!(v.im.abs() < 1e-14 && v.re >= 0.0);
            prop_assert!((v.re - x.frobenius_norm().powi(2)).abs() <= 1e-12 * v.re.max(1.0));
        }
    }
}
