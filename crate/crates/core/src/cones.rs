//! Cones in the GNS space of a faithful state and their membership tests.
//!
//! Every cone here is the image of a PSD-type cone under a fixed invertible
//! conjugation, so membership is decided on the *reduction* of `ξ`:
//!
//! * `V_β`: `ρ^{−β} ξ ρ^{β−1/2} ⪰ 0`
//! * natural cone `P = V_{1/4}` (and `P_n` on a tensor space): `ρ^{−1/4} ξ ρ^{−1/4} ⪰ 0`
//! * transposed cone `P_n^τ = (I ⊗ U) P_n`: the partial transpose of the
//!   `P_n` reduction on the second factor is PSD
//! * intersection: both
//!
//! The convex hull `co(P_n ∪ P_n^τ)` needs a splitting search and lives in
//! [`hull_membership`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::{self, DykstraParams};
use crate::linalg::{self, random, ComplexMatrix, TensorLayout};
use crate::modular::{self, ModularData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConeSpec {
    Vbeta { beta: f64 },
    Natural,
    NaturalTensor { dims: Vec<usize> },
    TransposedTensor { dims: Vec<usize> },
    Hull { dims: Vec<usize> },
    Intersection { dims: Vec<usize> },
}

impl ConeSpec {
    pub fn vbeta(beta: f64) -> Self {
        Self::Vbeta { beta }
    }

    pub fn natural() -> Self {
        Self::Natural
    }

    pub fn natural_tensor(m: usize, n: usize) -> Self {
        Self::NaturalTensor { dims: vec![m, n] }
    }

    pub fn transposed_tensor(m: usize, n: usize) -> Self {
        Self::TransposedTensor { dims: vec![m, n] }
    }

    pub fn intersection(m: usize, n: usize) -> Self {
        Self::Intersection { dims: vec![m, n] }
    }

    pub fn hull(m: usize, n: usize) -> Self {
        Self::Hull { dims: vec![m, n] }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Vbeta { .. } => "vbeta",
            Self::Natural => "natural",
            Self::NaturalTensor { .. } => "natural-tensor",
            Self::TransposedTensor { .. } => "transposed-tensor",
            Self::Hull { .. } => "hull",
            Self::Intersection { .. } => "intersection",
        }
    }

    pub fn dims(&self) -> Option<&[usize]> {
        match self {
            Self::NaturalTensor { dims }
            | Self::TransposedTensor { dims }
            | Self::Hull { dims }
            | Self::Intersection { dims } => Some(dims),
            _ => None,
        }
    }

    /// Checks the spec itself and its compatibility with `md`.
    pub fn validate(&self, md: &ModularData) -> Result<()> {
        if let Self::Vbeta { beta } = self {
            if !(0.0..=0.5).contains(beta) {
                return Err(Error::InvalidParameter(format!("β = {beta} outside [0, 1/2]")));
            }
        }
        if let Some(dims) = self.dims() {
            if dims.len() != 2 {
                return Err(Error::LayoutMismatch(format!(
                    "tensor cones need a 2-factor layout, got {dims:?}"
                )));
            }
            if md.layout().dims != dims {
                return Err(Error::LayoutMismatch(format!(
                    "cone layout {dims:?} but modular data layout {:?}",
                    md.layout().dims
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MembershipResult {
    pub inside: bool,
    /// Magnitude of the most negative eigenvalue of the tested reduction, or
    /// its Hermitian deviation when that exceeds the tolerance.
    pub residual: f64,
    /// Eigenvector of the most negative eigenvalue (as a column) when outside.
    pub witness: Option<ComplexMatrix>,
}

/// Reductions whose PSD-ness decides membership.
fn reductions(md: &ModularData, spec: &ConeSpec, xi: &ComplexMatrix) -> Result<Vec<ComplexMatrix>> {
    let natural = || md.rho_inv_quarter() * xi * md.rho_inv_quarter();
    Ok(match spec {
        ConeSpec::Vbeta { beta } => vec![&(&md.rho_power(-beta) * xi) * &md.rho_power(beta - 0.5)],
        ConeSpec::Natural | ConeSpec::NaturalTensor { .. } => vec![natural()],
        ConeSpec::TransposedTensor { .. } => vec![md.partial_u(&natural())?],
        ConeSpec::Intersection { .. } => {
            let r = natural();
            let t = md.partial_u(&r)?;
            vec![r, t]
        }
        ConeSpec::Hull { .. } => return Err(Error::HullNotSupportedHere),
    })
}

/// The reduction that the natural cone `P` (or `P_n`) maps to the PSD cone:
/// `ρ^{−1/4} ξ ρ^{−1/4}`.
pub fn natural_reduction(md: &ModularData, xi: &ComplexMatrix) -> ComplexMatrix {
    md.rho_inv_quarter() * xi * md.rho_inv_quarter()
}

fn psd_deficit(r: &ComplexMatrix, tol: f64) -> (f64, Option<ComplexMatrix>) {
    let dev = r.hermitian_deviation();
    if dev > tol {
        return (dev, None);
    }
    let eig = linalg::herm_eig_unchecked(r);
    let min = eig.min_eigenvalue();
    if min >= 0.0 {
        (0.0, None)
    } else {
        (-min, Some(ComplexMatrix::column(&eig.eigenvector(0))))
    }
}

/// Decides `ξ ∈ cone` at tolerance `tol` through the closed-form reductions.
pub fn cone_membership(md: &ModularData, spec: &ConeSpec, xi: &ComplexMatrix, tol: f64) -> Result<MembershipResult> {
    if matches!(spec, ConeSpec::Hull { .. }) {
        return Err(Error::HullNotSupportedHere);
    }
    spec.validate(md)?;
    let n = md.dim();
    if xi.rows() != n || xi.cols() != n {
        return Err(Error::LayoutMismatch(format!(
            "vector is {}x{}, space is {n}x{n}",
            xi.rows(),
            xi.cols()
        )));
    }
    let mut residual = 0.0f64;
    let mut witness = None;
    for r in reductions(md, spec, xi)? {
        let (d, w) = psd_deficit(&r, tol);
        if d > residual {
            residual = d;
            witness = w;
        }
    }
    let inside = residual <= tol;
    Ok(MembershipResult {
        inside,
        residual,
        witness: if inside { None } else { witness },
    })
}

/// `V_β` residual of `ξ` (0 when inside).
pub(crate) fn vbeta_residual(md: &ModularData, beta: f64, xi: &ComplexMatrix) -> f64 {
    let r = &(&md.rho_power(-beta) * xi) * &md.rho_power(beta - 0.5);
    psd_deficit(&r, f64::INFINITY).0.max(r.hermitian_deviation())
}

/// Maps a PSD matrix `g` onto the cone: `V_β ∋ ρ^β g ρ^{1/2−β}`,
/// `P ∋ ρ^{1/4} g ρ^{1/4}`, `P_n^τ ∋ (I ⊗ U)(ρ^{1/4} g ρ^{1/4})`.
/// For the intersection, `g` is first projected onto the PSD and
/// PSD-after-partial-transpose cones.
pub fn cone_point(md: &ModularData, spec: &ConeSpec, g: &ComplexMatrix) -> Result<ComplexMatrix> {
    spec.validate(md)?;
    let lift = |g: &ComplexMatrix| md.rho_quarter() * g * md.rho_quarter();
    Ok(match spec {
        ConeSpec::Vbeta { beta } => &(&md.rho_power(*beta) * g) * &md.rho_power(0.5 - beta),
        ConeSpec::Natural | ConeSpec::NaturalTensor { .. } => lift(g),
        ConeSpec::TransposedTensor { .. } => md.partial_u(&lift(g))?,
        ConeSpec::Intersection { .. } => lift(&project_to_double_psd(md, g)?),
        ConeSpec::Hull { .. } => {
            return Err(Error::UnsupportedKind(
                "hull points are convex combinations; use sample_hull".into(),
            ))
        }
    })
}

/// Projection of a Hermitian `g` onto `{h ⪰ 0, (I ⊗ U) h ⪰ 0}` by Dykstra,
/// followed by an identity shift that absorbs the remaining eigenvalue
/// deficit so the result is a member of both cones.
pub fn project_to_double_psd(md: &ModularData, g: &ComplexMatrix) -> Result<ComplexMatrix> {
    let pu = |x: &ComplexMatrix| md.partial_u(x).expect("layout validated");
    project_double_psd_with(g, pu)
}

pub(crate) fn project_double_psd_with(
    g: &ComplexMatrix,
    transpose: impl Fn(&ComplexMatrix) -> ComplexMatrix,
) -> Result<ComplexMatrix> {
    let n = g.rows();
    let params = DykstraParams::new(1e-6 * g.frobenius_norm().max(1.0), 100);
    let out = feasibility::project_intersection(
        &g.hermitian_part(),
        linalg::psd_project_unchecked,
        |x| transpose(&linalg::psd_project_unchecked(&transpose(x))),
        params,
    );
    let h = out.point.hermitian_part();
    let min_a = linalg::herm_eig_unchecked(&h).min_eigenvalue();
    let min_b = linalg::herm_eig_unchecked(&transpose(&h)).min_eigenvalue();
    let deficit = (-min_a).max(-min_b).max(0.0);
    let scale = h.frobenius_norm().max(f64::MIN_POSITIVE);
    let shift = if deficit > 0.0 { deficit + 1e-13 * scale } else { 0.0 };
    let h = &h + &ComplexMatrix::identity(n).scale_real(shift);
    Ok(h.scale_real(1.0 / h.frobenius_norm().max(f64::MIN_POSITIVE)))
}

/// A random unit-norm member of the cone.
pub fn sample_cone(md: &ModularData, spec: &ConeSpec, seed: u64) -> Result<ComplexMatrix> {
    if matches!(spec, ConeSpec::Hull { .. }) {
        return Err(Error::UnsupportedKind("hull: use sample_hull".into()));
    }
    spec.validate(md)?;
    let g = linalg::sample_psd(md.dim(), seed);
    let xi = cone_point(md, spec, &g)?;
    Ok(normalize(xi))
}

/// A random unit-norm member of `co(P_n ∪ P_n^τ)`: a convex combination of
/// one sample from each cone.
pub fn sample_hull(md: &ModularData, dims: &[usize], seed: u64) -> Result<ComplexMatrix> {
    let (m, n) = two_dims(dims)?;
    let p = sample_cone(md, &ConeSpec::natural_tensor(m, n), seed)?;
    let q = sample_cone(md, &ConeSpec::transposed_tensor(m, n), seed.wrapping_add(0x9e37_79b9))?;
    let lambda: f64 = random::rng(seed ^ 0x5bd1_e995).random_range(0.0..1.0);
    Ok(normalize(p.scale_real(lambda) + q.scale_real(1.0 - lambda)))
}

fn two_dims(dims: &[usize]) -> Result<(usize, usize)> {
    match dims {
        [m, n] => Ok((*m, *n)),
        _ => Err(Error::LayoutMismatch(format!("expected 2 factors, got {dims:?}"))),
    }
}

fn normalize(x: ComplexMatrix) -> ComplexMatrix {
    let n = x.frobenius_norm();
    if n > 0.0 {
        x.scale_real(1.0 / n)
    } else {
        x
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HullMembership {
    #[serde(flatten)]
    pub result: MembershipResult,
    pub iterations: usize,
    pub stalled: bool,
    /// PSD summand of the reduction split (reduction coordinates).
    pub psd_part: ComplexMatrix,
    /// Summand with PSD partial transpose.
    pub transposed_part: ComplexMatrix,
}

/// Decides `ξ ∈ co(P_n ∪ P_n^τ)`: splits the reduction `c = ρ^{−1/4} ξ ρ^{−1/4}`
/// as `a + b` with `a ⪰ 0` and `(I ⊗ U) b ⪰ 0` by Dykstra iteration.
pub fn hull_membership(
    md: &ModularData,
    xi: &ComplexMatrix,
    layout: &TensorLayout,
    tol: f64,
    max_iter: usize,
) -> Result<HullMembership> {
    ConeSpec::Hull {
        dims: layout.dims.clone(),
    }
    .validate(md)?;
    layout.check(xi)?;
    let c = natural_reduction(md, xi);
    let dev = c.hermitian_deviation();
    if dev > tol {
        return Err(Error::NonHermitianReduction(dev));
    }
    let c = c.hermitian_part();
    let pu = |x: &ComplexMatrix| md.partial_u(x).expect("layout validated");
    let split = feasibility::cone_split(
        &c,
        linalg::psd_project_unchecked,
        |x| pu(&linalg::psd_project_unchecked(&pu(x))),
        DykstraParams::new(tol, max_iter),
    );
    let inside = split.converged;
    let witness = if inside {
        None
    } else {
        let w = &(&split.first + &split.second) - &c;
        let norm = w.frobenius_norm();
        (norm > 0.0).then(|| w.scale_real(1.0 / norm))
    };
    Ok(HullMembership {
        result: MembershipResult {
            inside,
            residual: split.residual,
            witness,
        },
        iterations: split.iterations,
        stalled: split.stalled,
        psd_part: split.first,
        transposed_part: split.second,
    })
}

/// Generator `X j_⊗(X) Ω_⊗` with
/// `X = Σ_k a_k ⊗ α(b_k)`, where `α(b) = U L_b U` acts in the commutant.
///
/// Every operator is applied literally as a map on the GNS vectors:
/// `(a ⊗ α(b)) ξ = (I ⊗ U)((a ⊗ b) · (I ⊗ U) ξ)`, and
/// `j_⊗(X) Ω = J_⊗ X J_⊗ Ω` with `J_⊗ ξ = ξ*`.
pub fn commutant_generator(md: &ModularData, terms: &[(ComplexMatrix, ComplexMatrix)]) -> Result<ComplexMatrix> {
    if md.layout().dims.len() != 2 {
        return Err(Error::LayoutMismatch("generator needs a bipartite space".into()));
    }
    let (m, n) = (md.layout().dims[0], md.layout().dims[1]);
    let mut y = ComplexMatrix::zeros(m * n, m * n);
    for (a, b) in terms {
        if a.rows() != m || !a.is_square() || b.rows() != n || !b.is_square() {
            return Err(Error::ShapeMismatch(format!("terms must be {m}x{m} ⊗ {n}x{n}")));
        }
        y += &a.kron(b);
    }
    let x_op = |v: &ComplexMatrix| -> Result<ComplexMatrix> { md.partial_u(&(&y * &md.partial_u(v)?)) };
    let j = |v: &ComplexMatrix| v.adjoint();
    let jxj_omega = j(&x_op(&j(md.omega()))?);
    x_op(&jxj_omega)
}

#[derive(Debug, Clone)]
pub struct GeneratorFit {
    pub terms: Vec<(ComplexMatrix, ComplexMatrix)>,
    pub distance: f64,
}

/// Recovers generator terms `(a_k, b_k)` reproducing a member `ξ` of `P_n^τ`:
/// the `P_n` preimage `(I ⊗ U) ξ = Y Ω Y*` is factored with
/// `Y = ρ^{1/4} g^{1/2} ρ^{−1/4}`, `Y` is expanded over matrix units of the
/// first factor, and the generator is re-evaluated from those terms.
pub fn fit_commutant_generator(md: &ModularData, xi: &ComplexMatrix) -> Result<GeneratorFit> {
    if md.layout().dims.len() != 2 {
        return Err(Error::LayoutMismatch("generator needs a bipartite space".into()));
    }
    let (m, n) = (md.layout().dims[0], md.layout().dims[1]);
    let c = md.partial_u(xi)?;
    let g = linalg::psd_project_unchecked(&natural_reduction(md, &c));
    let z = linalg::herm_eig_unchecked(&g).reconstruct_with(|l| l.max(0.0).sqrt());
    let y = &(md.rho_quarter() * &z) * md.rho_inv_quarter();
    let mut terms = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let block = y.block(n, i, j);
            if block.frobenius_norm() > 0.0 {
                terms.push((ComplexMatrix::unit(m, i, j), block));
            }
        }
    }
    let rebuilt = commutant_generator(md, &terms)?;
    Ok(GeneratorFit {
        distance: rebuilt.distance(xi),
        terms,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub m: usize,
    pub n: usize,
    pub trials: usize,
    pub tracial: bool,
    /// Worst negative eigenvalue of `[a_ij]` over the samples.
    pub max_psd_residual: f64,
    /// Worst negative eigenvalue of the block transpose `[a_ji]`.
    pub max_block_transpose_residual: f64,
    /// Worst `‖Δ^{1/4}[a_ij]Ω − ξ‖_F`.
    pub max_reconstruction_residual: f64,
    pub max_residual: f64,
    pub passed: bool,
    pub note: String,
}

pub const PROBE_NOTE: &str = "Finite-dimensional check only: every sampled element of P_n ∩ P_n^τ is \
written as Δ^{1/4}[a_ij]Ω with [a_ij] and [a_ji] both PSD. The closure question for general \
(infinite-dimensional) algebras is not numerically reachable and is not addressed.";

/// Samples `P_n ∩ P_n^τ` on `M_m ⊗ M_n` and certifies that each sample has
/// the double-PSD form `Δ^{1/4}[a_ij]Ω`, `[a_ij], [a_ji] ⪰ 0`.
///
/// `rho_seed = None` uses tracial states on both factors; otherwise random
/// faithful states drawn from that seed.
pub fn probe_finite_dim_equality(
    m: usize,
    n: usize,
    rho_seed: Option<u64>,
    trials: usize,
    tol: f64,
) -> Result<ProbeReport> {
    if m == 0 || n == 0 || m > 4 || n > 4 {
        return Err(Error::InvalidParameter(format!("probe dimensions must be in 1..=4, got {m}, {n}")));
    }
    let md = match rho_seed {
        None => modular::tensor_modular(&ModularData::tracial(m), &ModularData::tracial(n)),
        Some(seed) => {
            let mut rng = random::rng(seed);
            let a = modular::build_modular(&random::faithful_density(m, 0.02, &mut rng))?;
            let b = modular::build_modular(&random::faithful_density(n, 0.02, &mut rng))?;
            modular::tensor_modular(&a, &b)
        }
    };
    let spec = ConeSpec::intersection(m, n);
    let base = rho_seed.unwrap_or(0).wrapping_mul(31).wrapping_add(1);
    let (mut psd, mut block, mut recon) = (0.0f64, 0.0f64, 0.0f64);
    for t in 0..trials {
        let xi = sample_cone(&md, &spec, random::derived_seed(base, t as u64))?;
        let a = natural_reduction(&md, &xi);
        let a_swapped = md.partial_u(&a)?;
        psd = psd.max(psd_deficit(&a, f64::INFINITY).0);
        block = block.max(psd_deficit(&a_swapped, f64::INFINITY).0);
        let rebuilt = md.delta_power(0.25, &(&a * md.omega()));
        recon = recon.max(rebuilt.distance(&xi));
    }
    let max_residual = psd.max(block).max(recon);
    Ok(ProbeReport {
        m,
        n,
        trials,
        tracial: rho_seed.is_none(),
        max_psd_residual: psd,
        max_block_transpose_residual: block,
        max_reconstruction_residual: recon,
        max_residual,
        passed: max_residual <= tol,
        note: PROBE_NOTE.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{swap, ONE, ZERO};
    use crate::modular::{apply_modular, build_modular, tensor_modular, ModularOperatorKind};

    fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_vec(2, 2, vec![ZERO, ONE, ONE, ZERO]).unwrap()
    }

    fn random_md(n: usize, seed: u64) -> ModularData {
        build_modular(&random::faithful_density(n, 0.05, &mut random::rng(seed))).unwrap()
    }

    #[test]
    fn tracial_natural_cone_is_psd_cone() {
        let md = ModularData::tracial(2);
        let r = cone_membership(&md, &ConeSpec::natural(), &ComplexMatrix::unit(2, 0, 0), 1e-9).unwrap();
        assert!(r.inside);
        assert_eq!(r.residual, 0.0);
        let r = cone_membership(&md, &ConeSpec::natural(), &sigma_x(), 1e-9).unwrap();
        assert!(!r.inside);
        // ρ^{-1/4} σ_x ρ^{-1/4} = √2 σ_x
        assert!((r.residual - 2f64.sqrt()).abs() < 1e-14);
        assert!(r.witness.is_some());
    }

    #[test]
    fn v0_contains_a_omega() {
        let md = build_modular(&ComplexMatrix::from_real_diag(&[0.8, 0.2])).unwrap();
        let a = linalg::sample_psd(2, 7);
        let xi = &a * md.omega();
        assert!(cone_membership(&md, &ConeSpec::vbeta(0.0), &xi, 1e-9).unwrap().inside);
    }

    #[test]
    fn omega_is_in_natural_cone() {
        let md = random_md(3, 1);
        let xi = cone_point(&md, &ConeSpec::natural(), &ComplexMatrix::identity(3)).unwrap();
        assert!(xi.distance(md.omega()) < 1e-14);
        assert!(cone_membership(&md, &ConeSpec::natural(), md.omega(), 1e-12).unwrap().inside);
    }

    #[test]
    fn spec_validation() {
        let md = random_md(2, 2);
        assert!(cone_membership(&md, &ConeSpec::vbeta(0.7), md.omega(), 1e-9).is_err());
        assert!(matches!(
            cone_membership(&md, &ConeSpec::hull(2, 1), md.omega(), 1e-9),
            Err(Error::HullNotSupportedHere)
        ));
        assert!(matches!(
            cone_membership(&md, &ConeSpec::natural_tensor(2, 2), md.omega(), 1e-9),
            Err(Error::LayoutMismatch(_))
        ));
        assert!(matches!(sample_cone(&md, &ConeSpec::hull(2, 2), 0), Err(Error::UnsupportedKind(_))));
    }

    #[test]
    fn samples_are_members() {
        let single = random_md(3, 3);
        let pair = tensor_modular(&random_md(2, 4), &random_md(3, 5));
        let specs = [
            (&single, ConeSpec::vbeta(0.0)),
            (&single, ConeSpec::vbeta(0.125)),
            (&single, ConeSpec::natural()),
            (&single, ConeSpec::vbeta(0.5)),
            (&pair, ConeSpec::natural_tensor(2, 3)),
            (&pair, ConeSpec::transposed_tensor(2, 3)),
            (&pair, ConeSpec::intersection(2, 3)),
        ];
        for (md, spec) in specs {
            for seed in 0..10 {
                let xi = sample_cone(md, &spec, seed).unwrap();
                let r = cone_membership(md, &spec, &xi, 1e-9).unwrap();
                assert!(r.inside, "{spec:?} seed {seed}: {}", r.residual);
            }
        }
    }

    #[test]
    fn transposed_tracial_sample_has_psd_partial_transpose() {
        let md = tensor_modular(&ModularData::tracial(2), &ModularData::tracial(2));
        let xi = sample_cone(&md, &ConeSpec::transposed_tensor(2, 2), 3).unwrap();
        let reduced = natural_reduction(&md, &xi);
        let pt = linalg::partial_transpose(&reduced, &TensorLayout::bipartite(2, 2), 1).unwrap();
        assert!(linalg::herm_eig(&pt).unwrap().min_eigenvalue() >= -1e-10);
    }

    #[test]
    fn u_maps_vbeta_to_complement() {
        let md = random_md(3, 6);
        for beta in [0.0, 0.125, 0.25, 0.375, 0.5] {
            for seed in 0..20 {
                let xi = sample_cone(&md, &ConeSpec::vbeta(beta), seed).unwrap();
                let u = apply_modular(&md, ModularOperatorKind::TranspositionUnitary, &xi).unwrap();
                let r = cone_membership(&md, &ConeSpec::vbeta(0.5 - beta), &u, 1e-8).unwrap();
                assert!(r.inside, "β={beta}: {}", r.residual);
            }
        }
    }

    #[test]
    fn hull_examples() {
        let md = tensor_modular(&ModularData::tracial(2), &ModularData::tracial(2));
        let layout = TensorLayout::bipartite(2, 2);
        // reduction of ξ is 2ξ in the tracial 2⊗2 case
        let psd = linalg::sample_psd(4, 1).scale_real(0.5);
        assert!(hull_membership(&md, &psd, &layout, 1e-8, 5000).unwrap().result.inside);

        let s = swap(2).scale_real(0.5);
        let h = hull_membership(&md, &s, &layout, 1e-8, 5000).unwrap();
        assert!(h.result.inside, "{}", h.result.residual);

        let neg = ComplexMatrix::identity(4).scale_real(-0.5);
        let h = hull_membership(&md, &neg, &layout, 1e-8, 5000).unwrap();
        assert!(!h.result.inside);
        assert!(h.result.residual >= 1.0);
        let w = h.result.witness.unwrap();
        // the witness pairs negatively with the tested reduction
        let c = natural_reduction(&md, &neg);
        assert!(linalg::hs_inner(&w, &c).unwrap().re < 0.0);
    }

    #[test]
    fn hull_samples_are_inside() {
        let md = tensor_modular(&random_md(2, 7), &random_md(2, 8));
        let layout = TensorLayout::bipartite(2, 2);
        for seed in 0..10 {
            let xi = sample_hull(&md, &[2, 2], seed).unwrap();
            let h = hull_membership(&md, &xi, &layout, 1e-8, 5000).unwrap();
            assert!(h.result.inside, "seed {seed}: {} after {}", h.result.residual, h.iterations);
        }
    }

    #[test]
    fn generator_round_trip() {
        let md = tensor_modular(&random_md(2, 9), &random_md(2, 10));
        let mut rng = random::rng(11);
        let terms: Vec<_> = (0..3)
            .map(|_| (random::ginibre(2, 2, &mut rng), random::ginibre(2, 2, &mut rng)))
            .collect();
        let g = commutant_generator(&md, &terms).unwrap();
        let g = g.scale_real(1.0 / g.frobenius_norm());
        let r = cone_membership(&md, &ConeSpec::transposed_tensor(2, 2), &g, 1e-7).unwrap();
        assert!(r.inside, "{}", r.residual);
        let fit = fit_commutant_generator(&md, &g).unwrap();
        assert!(fit.distance < 1e-6, "{}", fit.distance);
    }

    #[test]
    fn probe_examples() {
        let r = probe_finite_dim_equality(2, 2, None, 20, 1e-9).unwrap();
        assert!(r.passed, "{r:?}");
        let empty = probe_finite_dim_equality(2, 2, None, 0, 1e-9).unwrap();
        assert_eq!(empty.trials, 0);
        assert_eq!(empty.max_residual, 0.0);
        assert!(probe_finite_dim_equality(5, 2, None, 1, 1e-9).is_err());
    }

    #[test]
    fn cone_spec_json() {
        let s: ConeSpec = serde_json::from_str(r#"{"kind":"vbeta","beta":0.25}"#).unwrap();
        assert_eq!(s, ConeSpec::vbeta(0.25));
        let s: ConeSpec = serde_json::from_str(r#"{"kind":"hull","dims":[2,2]}"#).unwrap();
        assert_eq!(s, ConeSpec::hull(2, 2));
        assert_eq!(serde_json::to_string(&ConeSpec::natural()).unwrap(), r#"{"kind":"natural"}"#);
    }
}
