//! Modular theory of `(M_n(ℂ), ω)` for a faithful state `ω(a) = Tr(ρ a)`.
//!
//! The GNS space is `M_n(ℂ)` with the trace inner product and cyclic vector
//! `Ω = ρ^{1/2}`; vectors are therefore matrices. The operators act on it as
//!
//! | operator | action on `x` |
//! |---|---|
//! | `Δ^t` | `ρ^t x ρ^{−t}` |
//! | `J_m` | `x*` |
//! | `J` | entrywise conjugation in the ρ-eigenbasis |
//! | `U` | transposition in the ρ-eigenbasis |
//! | `τ` | `ρ^{−1/2} x^t ρ^{1/2}`, i.e. `aΩ ↦ a^t Ω` |
//!
//! Transposition `a ↦ a^t` always means transposition in the ρ-eigenbasis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cones;
use crate::error::{Error, Result};
use crate::linalg::{self, dot, random, ComplexMatrix, TensorLayout};
use crate::tolerances::DEFAULT;

/// A density matrix with strictly positive spectrum.
#[derive(Debug, Clone)]
pub struct FaithfulState {
    rho: ComplexMatrix,
}

impl FaithfulState {
    pub fn new(rho: ComplexMatrix) -> Result<Self> {
        rho.ensure_square()?;
        let dev = rho.hermitian_deviation();
        if dev > DEFAULT.herm_threshold(rho.frobenius_norm()) {
            return Err(Error::NotDensity(format!("not Hermitian (deviation {dev:.3e})")));
        }
        let tr = rho.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > DEFAULT.trace {
            return Err(Error::NotDensity(format!("trace {} ≠ 1", tr.re)));
        }
        let rho = rho.hermitian_part();
        let min = linalg::herm_eig(&rho)?.min_eigenvalue();
        if min <= DEFAULT.pd {
            return Err(Error::NotFaithful(min));
        }
        Ok(Self { rho })
    }

    /// The tracial state `I / n`.
    pub fn tracial(n: usize) -> Self {
        Self {
            rho: ComplexMatrix::identity(n).scale_real(1.0 / n as f64),
        }
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.rows()
    }

    /// `ω(a) = Tr(ρ a)`.
    pub fn expectation(&self, a: &ComplexMatrix) -> Complex64 {
        (&self.rho * a).trace()
    }
}

/// Which modular operator `apply_modular` evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModularOperatorKind {
    DeltaPower { t: f64 },
    ModularConjugation,
    Conjugation,
    TranspositionUnitary,
    Tau,
    /// `j(·) = J_m · J_m` on left multiplications: `j(L_a) = R_{a*}`. The
    /// returned matrix is the right multiplier `a*`.
    ModularMorphism,
}

/// Cached modular data for a faithful state, possibly a tensor product of
/// faithful states (then the eigenbasis is the product of the factor
/// eigenbases).
#[derive(Debug, Clone)]
pub struct ModularData {
    state: FaithfulState,
    eigenvalues: Vec<f64>,
    eigenbasis: ComplexMatrix,
    layout: TensorLayout,
    factor_bases: Vec<ComplexMatrix>,
    omega: ComplexMatrix,
    rho_quarter: ComplexMatrix,
    rho_inv_quarter: ComplexMatrix,
    rho_half: ComplexMatrix,
    rho_inv_half: ComplexMatrix,
}

/// Builds the modular data of `ρ`, validating that it is a faithful density
/// matrix.
pub fn build_modular(rho: &ComplexMatrix) -> Result<ModularData> {
    let state = FaithfulState::new(rho.clone())?;
    Ok(ModularData::from_state(state))
}

impl ModularData {
    pub fn from_state(state: FaithfulState) -> Self {
        let eig = linalg::herm_eig_unchecked(state.rho());
        let n = state.dim();
        Self::assemble(
            state,
            eig.eigenvalues,
            eig.eigenvectors.clone(),
            TensorLayout::new(vec![n]),
            vec![eig.eigenvectors],
        )
    }

    pub fn tracial(n: usize) -> Self {
        Self::from_state(FaithfulState::tracial(n))
    }

    fn assemble(
        state: FaithfulState,
        eigenvalues: Vec<f64>,
        eigenbasis: ComplexMatrix,
        layout: TensorLayout,
        factor_bases: Vec<ComplexMatrix>,
    ) -> Self {
        let power = |t: f64| spectral_power(&eigenbasis, &eigenvalues, t);
        let rho_quarter = power(0.25);
        let rho_inv_quarter = power(-0.25);
        let rho_half = power(0.5);
        let rho_inv_half = power(-0.5);
        Self {
            omega: rho_half.clone(),
            state,
            rho_quarter,
            rho_inv_quarter,
            rho_half,
            rho_inv_half,
            eigenvalues,
            eigenbasis,
            layout,
            factor_bases,
        }
    }

    pub fn dim(&self) -> usize {
        self.state.dim()
    }

    pub fn state(&self) -> &FaithfulState {
        &self.state
    }

    pub fn rho(&self) -> &ComplexMatrix {
        self.state.rho()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Columns are the eigenvectors `x_i` of ρ.
    pub fn eigenbasis(&self) -> &ComplexMatrix {
        &self.eigenbasis
    }

    pub fn layout(&self) -> &TensorLayout {
        &self.layout
    }

    pub fn is_tensor(&self) -> bool {
        self.layout.dims.len() > 1
    }

    /// `Ω = ρ^{1/2}`.
    pub fn omega(&self) -> &ComplexMatrix {
        &self.omega
    }

    pub fn rho_quarter(&self) -> &ComplexMatrix {
        &self.rho_quarter
    }

    pub fn rho_inv_quarter(&self) -> &ComplexMatrix {
        &self.rho_inv_quarter
    }

    pub fn rho_half(&self) -> &ComplexMatrix {
        &self.rho_half
    }

    pub fn rho_inv_half(&self) -> &ComplexMatrix {
        &self.rho_inv_half
    }

    /// `ρ^t` for any real `t`.
    pub fn rho_power(&self, t: f64) -> ComplexMatrix {
        if t == 0.25 {
            self.rho_quarter.clone()
        } else if t == -0.25 {
            self.rho_inv_quarter.clone()
        } else if t == 0.5 {
            self.rho_half.clone()
        } else if t == -0.5 {
            self.rho_inv_half.clone()
        } else {
            spectral_power(&self.eigenbasis, &self.eigenvalues, t)
        }
    }

    /// Standard-basis matrix to ρ-eigenbasis coordinates: `W* x W`.
    pub fn to_eigen(&self, x: &ComplexMatrix) -> ComplexMatrix {
        &(&self.eigenbasis.adjoint() * x) * &self.eigenbasis
    }

    /// Inverse of [`to_eigen`](Self::to_eigen).
    pub fn from_eigen(&self, y: &ComplexMatrix) -> ComplexMatrix {
        &(&self.eigenbasis * y) * &self.eigenbasis.adjoint()
    }

    /// `a ↦ a^t`, transposition in the ρ-eigenbasis.
    pub fn transpose(&self, a: &ComplexMatrix) -> ComplexMatrix {
        self.from_eigen(&self.to_eigen(a).transpose())
    }

    /// Entrywise conjugation in the ρ-eigenbasis (the conjugation `J`).
    pub fn conjugate(&self, a: &ComplexMatrix) -> ComplexMatrix {
        self.from_eigen(&self.to_eigen(a).conj())
    }

    pub fn delta_power(&self, t: f64, x: &ComplexMatrix) -> ComplexMatrix {
        let y = self.to_eigen(x);
        let l = &self.eigenvalues;
        let scaled = ComplexMatrix::from_fn(y.rows(), y.cols(), |i, j| y[(i, j)] * (l[i] / l[j]).powf(t));
        self.from_eigen(&scaled)
    }

    /// `I ⊗ U` on a bipartite modular space: transposition of factor 2 in
    /// its own ρ-eigenbasis.
    pub fn partial_u(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.layout.dims.len() != 2 {
            return Err(Error::LayoutMismatch(format!(
                "I ⊗ U needs a 2-factor layout, have {:?}",
                self.layout.dims
            )));
        }
        self.layout.check(x)?;
        let rot = ComplexMatrix::identity(self.layout.dims[0]).kron(&self.factor_bases[1]);
        let y = &(&rot.adjoint() * x) * &rot;
        let t = linalg::partial_transpose_unchecked(&y, &self.layout, 1);
        Ok(&(&rot * &t) * &rot.adjoint())
    }

    /// Modular data of the factor states are not retained; the factor
    /// eigenbases are.
    pub fn factor_basis(&self, k: usize) -> &ComplexMatrix {
        &self.factor_bases[k]
    }
}

fn spectral_power(w: &ComplexMatrix, l: &[f64], t: f64) -> ComplexMatrix {
    let d: Vec<f64> = l.iter().map(|x| x.powf(t)).collect();
    &(w * &ComplexMatrix::from_real_diag(&d)) * &w.adjoint()
}

/// Applies one of the modular operators to the GNS vector `x`.
pub fn apply_modular(md: &ModularData, kind: ModularOperatorKind, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = md.dim();
    if x.rows() != n || x.cols() != n {
        return Err(Error::ShapeMismatch(format!(
            "expected {n}x{n}, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    Ok(match kind {
        ModularOperatorKind::DeltaPower { t } => {
            if !t.is_finite() {
                return Err(Error::InvalidParameter(format!("Δ exponent {t}")));
            }
            md.delta_power(t, x)
        }
        ModularOperatorKind::ModularConjugation | ModularOperatorKind::ModularMorphism => x.adjoint(),
        ModularOperatorKind::Conjugation => md.conjugate(x),
        ModularOperatorKind::TranspositionUnitary => md.transpose(x),
        ModularOperatorKind::Tau => &(md.rho_inv_half() * &md.transpose(x)) * md.rho_half(),
    })
}

/// Modular data of `ρ_A ⊗ ρ_B` with layout `[m, n]`.
pub fn tensor_modular(a: &ModularData, b: &ModularData) -> ModularData {
    let rho = a.rho().kron(b.rho());
    let eigenvalues = a
        .eigenvalues()
        .iter()
        .flat_map(|x| b.eigenvalues().iter().map(move |y| x * y))
        .collect();
    let basis = a.eigenbasis().kron(b.eigenbasis());
    let mut layout = a.layout.dims.clone();
    layout.extend(&b.layout.dims);
    let mut factor_bases = a.factor_bases.clone();
    factor_bases.extend(b.factor_bases.iter().cloned());
    ModularData::assemble(
        FaithfulState { rho },
        eigenvalues,
        basis,
        TensorLayout::new(layout),
        factor_bases,
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityResidual {
    pub name: String,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub samples: usize,
    pub residuals: Vec<IdentityResidual>,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.residuals.iter().find(|r| r.name == name).map(|r| r.residual)
    }

    pub fn all_within(&self, tol: f64) -> bool {
        self.residuals.iter().all(|r| r.residual <= tol)
    }
}

pub const IDENTITY_NAMES: [&str; 13] = [
    "U^2 = I",
    "U = U*",
    "J = U J_m",
    "J J_m = J_m J",
    "J U = U J",
    "J_m U = U J_m",
    "J Δ^t = Δ^t J",
    "τ = U Δ^{1/2}",
    "U Δ = Δ^{-1} U",
    "a^t ξ = J a* J ξ",
    "U L_a U = R_{a^t}",
    "τ(V_0) ⊂ V_0",
    "τ(aΩ) = a^t Ω",
];

/// Evaluates every algebraic identity of the transposition scheme on
/// `samples` random vectors and operators, reporting the worst residual of
/// each.
pub fn check_identities(md: &ModularData, samples: usize, seed: u64) -> IdentityReport {
    let n = md.dim();
    let mut worst = [0.0f64; IDENTITY_NAMES.len()];
    let app = |k: ModularOperatorKind, x: &ComplexMatrix| apply_modular(md, k, x).expect("shape checked");
    use ModularOperatorKind as K;

    for s in 0..samples {
        let mut rng = random::rng(random::derived_seed(seed, s as u64));
        let xi = normalized(random::ginibre(n, n, &mut rng));
        let eta = normalized(random::ginibre(n, n, &mut rng));
        let a = normalized(random::ginibre(n, n, &mut rng));
        let pos = normalized(random::psd_with_rank(n, n, &mut rng));
        let t: f64 = rand::Rng::random_range(&mut rng, -1.0..1.0);

        let u = |x: &ComplexMatrix| app(K::TranspositionUnitary, x);
        let j = |x: &ComplexMatrix| app(K::Conjugation, x);
        let jm = |x: &ComplexMatrix| app(K::ModularConjugation, x);
        let delta = |t: f64, x: &ComplexMatrix| app(K::DeltaPower { t }, x);

        let r = [
            u(&u(&xi)).distance(&xi),
            (dot(u(&xi).as_slice(), eta.as_slice()) - dot(xi.as_slice(), u(&eta).as_slice())).norm(),
            j(&xi).distance(&u(&jm(&xi))),
            j(&jm(&xi)).distance(&jm(&j(&xi))),
            j(&u(&xi)).distance(&u(&j(&xi))),
            jm(&u(&xi)).distance(&u(&jm(&xi))),
            j(&delta(t, &xi)).distance(&delta(t, &j(&xi))),
            app(K::Tau, &xi).distance(&u(&delta(0.5, &xi))),
            u(&delta(1.0, &xi)).distance(&delta(-1.0, &u(&xi))),
            (&md.transpose(&a) * &xi).distance(&j(&(&a.adjoint() * &j(&xi)))),
            u(&(&a * &u(&xi))).distance(&(&xi * &md.transpose(&a))),
            cones::vbeta_residual(md, 0.0, &app(K::Tau, &(&pos * md.omega()))),
            app(K::Tau, &(&a * md.omega())).distance(&(&md.transpose(&a) * md.omega())),
        ];
        for (w, v) in worst.iter_mut().zip(r) {
            *w = w.max(v);
        }
    }

    IdentityReport {
        samples,
        residuals: IDENTITY_NAMES
            .iter()
            .zip(worst)
            .map(|(name, residual)| IdentityResidual {
                name: name.to_string(),
                residual,
            })
            .collect(),
    }
}

fn normalized(x: ComplexMatrix) -> ComplexMatrix {
    let n = x.frobenius_norm();
    x.scale_real(1.0 / n)
}

/// Density matrix `ξ ξ*` of the vector state `ω_ξ(a) = (ξ, a ξ)` for a unit
/// vector `ξ` in the natural cone.
pub fn state_of_cone_vector(md: &ModularData, xi: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = md.dim();
    if xi.rows() != n || xi.cols() != n {
        return Err(Error::ShapeMismatch(format!("expected {n}x{n}")));
    }
    let norm = xi.frobenius_norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized((norm - 1.0).abs()));
    }
    let spec = cones::ConeSpec::natural();
    let m = cones::cone_membership(md, &spec, xi, 1e-9)?;
    if !m.inside {
        return Err(Error::NotInCone(m.residual));
    }
    Ok(xi * &xi.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ONE, ZERO};

    fn diag_state(d: &[f64]) -> ModularData {
        build_modular(&ComplexMatrix::from_real_diag(d)).unwrap()
    }

    #[test]
    fn tracial_delta_is_identity() {
        let md = diag_state(&[0.5, 0.5]);
        let x = random::ginibre(2, 2, &mut random::rng(1));
        let y = apply_modular(&md, ModularOperatorKind::DeltaPower { t: 1.0 }, &x).unwrap();
        assert!(y.distance(&x) < 1e-15);
        let tau = apply_modular(&md, ModularOperatorKind::Tau, &x).unwrap();
        assert!(tau.distance(&x.transpose()) < 1e-15);
    }

    #[test]
    fn omega_is_sqrt_rho() {
        let md = diag_state(&[0.8, 0.2]);
        assert!((md.omega()[(0, 0)].re - 0.894_427_190_999_916).abs() < 1e-12);
        assert!((md.omega()[(1, 1)].re - 0.447_213_595_499_958).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_states() {
        let singular = ComplexMatrix::from_real_diag(&[1.0, 0.0]);
        assert!(matches!(build_modular(&singular), Err(Error::NotFaithful(_))));
        let untraced = ComplexMatrix::from_real_diag(&[0.7, 0.7]);
        assert!(matches!(build_modular(&untraced), Err(Error::NotDensity(_))));
        let skew = ComplexMatrix::from_vec(2, 2, vec![Complex64::new(0.5, 0.0), ONE, ZERO, Complex64::new(0.5, 0.0)]).unwrap();
        assert!(matches!(build_modular(&skew), Err(Error::NotDensity(_))));
    }

    #[test]
    fn named_actions() {
        let md = diag_state(&[0.8, 0.2]);
        let e12 = ComplexMatrix::unit(2, 0, 1);
        let u = apply_modular(&md, ModularOperatorKind::TranspositionUnitary, &e12).unwrap();
        assert_eq!(u, ComplexMatrix::unit(2, 1, 0));
        let jm = apply_modular(&md, ModularOperatorKind::ModularConjugation, &e12).unwrap();
        assert_eq!(jm, ComplexMatrix::unit(2, 1, 0));
        let d = apply_modular(&md, ModularOperatorKind::DeltaPower { t: 1.0 }, &e12).unwrap();
        assert!(d.distance(&e12.scale_real(4.0)) < 1e-14);
        assert!(apply_modular(&md, ModularOperatorKind::Tau, &ComplexMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn identities_hold_for_diagonal_state() {
        let md = diag_state(&[0.8, 0.2]);
        let report = check_identities(&md, 100, 3);
        assert!(report.all_within(1e-10), "{report:?}");
    }

    #[test]
    fn identities_hold_for_random_state() {
        let rho = random::faithful_density(5, 0.02, &mut random::rng(17));
        let md = build_modular(&rho).unwrap();
        let report = check_identities(&md, 50, 4);
        assert!(report.all_within(1e-9), "{report:?}");
    }

    #[test]
    fn delta_is_a_one_parameter_group() {
        let rho = random::faithful_density(4, 0.05, &mut random::rng(2));
        let md = build_modular(&rho).unwrap();
        let x = random::ginibre(4, 4, &mut random::rng(3));
        let lhs = md.delta_power(0.3, &md.delta_power(-0.7, &x));
        let rhs = md.delta_power(-0.4, &x);
        assert!(lhs.distance(&rhs) < 1e-10 * x.frobenius_norm());
    }

    #[test]
    fn conjugations_are_antilinear_isometries() {
        let rho = random::faithful_density(3, 0.05, &mut random::rng(8));
        let md = build_modular(&rho).unwrap();
        let x = random::ginibre(3, 3, &mut random::rng(9));
        let lambda = Complex64::new(0.3, -1.2);
        for kind in [ModularOperatorKind::Conjugation, ModularOperatorKind::ModularConjugation] {
            let kx = apply_modular(&md, kind, &x).unwrap();
            assert!((kx.frobenius_norm() - x.frobenius_norm()).abs() < 1e-13);
            let klx = apply_modular(&md, kind, &x.scale(lambda)).unwrap();
            assert!(klx.distance(&kx.scale(lambda.conj())) < 1e-13);
        }
        let ux = apply_modular(&md, ModularOperatorKind::TranspositionUnitary, &x.scale(lambda)).unwrap();
        assert!(ux.distance(&md.transpose(&x).scale(lambda)) < 1e-13);
    }

    #[test]
    fn tensor_identifications() {
        let half = diag_state(&[0.5, 0.5]);
        let t = tensor_modular(&half, &half);
        assert!(t.rho().distance(&ComplexMatrix::identity(4).scale_real(0.25)) < 1e-15);

        let mut r = random::rng(21);
        let a = build_modular(&random::faithful_density(2, 0.05, &mut r)).unwrap();
        let b = build_modular(&random::faithful_density(3, 0.05, &mut r)).unwrap();
        let ab = tensor_modular(&a, &b);
        assert_eq!(ab.layout().dims, vec![2, 3]);
        assert!(ab.omega().distance(&a.omega().kron(b.omega())) < 1e-13);

        let x = random::ginibre(2, 2, &mut r);
        let y = random::ginibre(3, 3, &mut r);
        let xy = x.kron(&y);
        let lhs = ab.delta_power(0.25, &xy);
        let rhs = a.delta_power(0.25, &x).kron(&b.delta_power(0.25, &y));
        assert!(lhs.distance(&rhs) < 1e-10 * xy.frobenius_norm());
        let jm = apply_modular(&ab, ModularOperatorKind::ModularConjugation, &xy).unwrap();
        assert!(jm.distance(&x.adjoint().kron(&y.adjoint())) < 1e-14);
        let pu = ab.partial_u(&xy).unwrap();
        assert!(pu.distance(&x.kron(&b.transpose(&y))) < 1e-12);
    }

    #[test]
    fn state_of_omega_is_rho() {
        let rho = random::faithful_density(3, 0.05, &mut random::rng(5));
        let md = build_modular(&rho).unwrap();
        let d = state_of_cone_vector(&md, md.omega()).unwrap();
        assert!(d.distance(&rho) < 1e-13);

        let tr = diag_state(&[0.5, 0.5]);
        let e11 = ComplexMatrix::unit(2, 0, 0);
        assert_eq!(state_of_cone_vector(&tr, &e11).unwrap(), e11);

        let sx = ComplexMatrix::from_vec(2, 2, vec![ZERO, ONE, ONE, ZERO]).unwrap().scale_real(1.0 / 2f64.sqrt());
        assert!(matches!(state_of_cone_vector(&tr, &sx), Err(Error::NotInCone(_))));
        assert!(matches!(state_of_cone_vector(&tr, &e11.scale_real(2.0)), Err(Error::NotNormalized(_))));
    }
}
