//! Linear maps `φ: M_m → M_n` stored by their Choi matrix
//! `C = Σ_ij E_ij ⊗ φ(E_ij)` (input factor outer), and the positivity
//! hierarchy built on it.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cones::{self, ConeSpec};
use crate::error::{Error, Result};
use crate::feasibility::{self, DykstraParams};
use crate::linalg::{self, random, ComplexMatrix, TensorLayout, ONE, ZERO};
use crate::modular::{self, FaithfulState, ModularData};
use crate::tolerances::DEFAULT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapObject {
    pub dim_in: usize,
    pub dim_out: usize,
    pub choi: ComplexMatrix,
    pub label: String,
}

impl MapObject {
    /// Wraps a Choi matrix, which must be Hermitian (so the map preserves
    /// Hermiticity) and of side `m·n`.
    pub fn from_choi(dim_in: usize, dim_out: usize, choi: ComplexMatrix, label: impl Into<String>) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::BadChoi("dimensions must be positive".into()));
        }
        let side = dim_in * dim_out;
        if choi.rows() != side || choi.cols() != side {
            return Err(Error::BadChoi(format!(
                "choi is {}x{}, expected {side}x{side} for {dim_in} -> {dim_out}",
                choi.rows(),
                choi.cols()
            )));
        }
        if !choi.is_finite() {
            return Err(Error::BadChoi("non-finite entries".into()));
        }
        let dev = choi.hermitian_deviation();
        if dev > DEFAULT.herm_threshold(choi.frobenius_norm()) {
            return Err(Error::BadChoi(format!("choi not Hermitian (deviation {dev:.3e})")));
        }
        Ok(Self {
            dim_in,
            dim_out,
            choi,
            label: label.into(),
        })
    }

    /// Choi matrix of the action `f` on matrix units.
    pub fn from_fn(
        dim_in: usize,
        dim_out: usize,
        label: impl Into<String>,
        f: impl Fn(&ComplexMatrix) -> ComplexMatrix,
    ) -> Result<Self> {
        let mut choi = ComplexMatrix::zeros(dim_in * dim_out, dim_in * dim_out);
        for i in 0..dim_in {
            for j in 0..dim_in {
                let image = f(&ComplexMatrix::unit(dim_in, i, j));
                if image.rows() != dim_out || image.cols() != dim_out {
                    return Err(Error::BadChoi(format!("image of E_{i}{j} has wrong shape")));
                }
                choi.set_block(dim_out, i, j, &image);
            }
        }
        Self::from_choi(dim_in, dim_out, choi, label)
    }

    /// `x ↦ Σ_k K_k x K_k*`.
    pub fn from_kraus(kraus: &[ComplexMatrix], label: impl Into<String>) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::BadChoi("no Kraus operators".into()))?;
        let (n, m) = (first.rows(), first.cols());
        if kraus.iter().any(|k| k.rows() != n || k.cols() != m) {
            return Err(Error::BadChoi("Kraus operators of different shapes".into()));
        }
        Self::from_fn(m, n, label, |e| {
            kraus.iter().fold(ComplexMatrix::zeros(n, n), |acc, k| acc + k * e * k.adjoint())
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, format!("identity:{n}"), |e| e.clone()).expect("identity choi")
    }

    /// Choi matrix is SWAP.
    pub fn transposition(n: usize) -> Self {
        Self::from_fn(n, n, format!("transpose:{n}"), |e| e.transpose()).expect("transposition choi")
    }

    /// `a ↦ V a V*`.
    pub fn adjoint_conjugation(v: &ComplexMatrix) -> Self {
        Self::from_kraus(std::slice::from_ref(v), "adu").expect("single Kraus term")
    }

    /// `λ φ + (1 − λ) ψ`.
    pub fn mix(lambda: f64, phi: &MapObject, psi: &MapObject) -> Result<Self> {
        if phi.dim_in != psi.dim_in || phi.dim_out != psi.dim_out {
            return Err(Error::DimensionMismatch(format!(
                "cannot mix {}->{} with {}->{}",
                phi.dim_in, phi.dim_out, psi.dim_in, psi.dim_out
            )));
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter("mixing weight must be finite".into()));
        }
        let choi = phi.choi.scale_real(lambda) + psi.choi.scale_real(1.0 - lambda);
        Self::from_choi(phi.dim_in, phi.dim_out, choi, format!("mix:{lambda}:{}:{}", phi.label, psi.label))
    }

    /// `φ ∘ T`: the Choi matrix with the input factor transposed.
    pub fn compose_t(phi: &MapObject) -> Self {
        let choi = linalg::partial_transpose_unchecked(&phi.choi, &phi.layout(), 0);
        Self {
            dim_in: phi.dim_in,
            dim_out: phi.dim_out,
            choi,
            label: format!("compose-t:{}", phi.label),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn layout(&self) -> TensorLayout {
        TensorLayout::bipartite(self.dim_in, self.dim_out)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            choi: self.choi.scale_real(s),
            ..self.clone()
        }
    }

    pub fn add(&self, other: &MapObject) -> Result<Self> {
        if self.dim_in != other.dim_in || self.dim_out != other.dim_out {
            return Err(Error::DimensionMismatch("cannot add maps of different shapes".into()));
        }
        Ok(Self {
            choi: &self.choi + &other.choi,
            label: format!("{}+{}", self.label, other.label),
            ..self.clone()
        })
    }

    pub fn apply(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        apply_map(self, a)
    }

    /// Hilbert–Schmidt adjoint `φ†`, defined by `Tr(y* φ(x)) = Tr(φ†(y)* x)`.
    pub fn hs_adjoint(&self) -> Self {
        let (m, n) = (self.dim_in, self.dim_out);
        let mut choi = ComplexMatrix::zeros(m * n, m * n);
        // φ†(E_kl)_ij = Tr(C_ij* E_kl) = conj(C_ij[k, l])
        for k in 0..n {
            for l in 0..n {
                let image = ComplexMatrix::from_fn(m, m, |i, j| self.choi[(i * n + k, j * n + l)].conj());
                choi.set_block(m, k, l, &image);
            }
        }
        Self {
            dim_in: n,
            dim_out: m,
            choi,
            label: format!("adjoint:{}", self.label),
        }
    }

    /// `φ ∘ ψ`.
    pub fn compose(&self, psi: &MapObject) -> Result<Self> {
        if psi.dim_out != self.dim_in {
            return Err(Error::DimensionMismatch("composition shapes do not chain".into()));
        }
        Self::from_fn(psi.dim_in, self.dim_out, format!("{}*{}", self.label, psi.label), |e| {
            let inner = psi.apply(e).expect("shape checked");
            self.apply(&inner).expect("shape checked")
        })
    }

    /// `max_ij ‖φ(E_ij) − ψ(E_ij)‖_F`-style distance: Frobenius distance of the Choi matrices.
    pub fn distance(&self, other: &MapObject) -> f64 {
        if self.choi.same_shape(&other.choi) {
            self.choi.distance(&other.choi)
        } else {
            f64::INFINITY
        }
    }

    /// `‖φ(I) − I‖_F`.
    pub fn unitality_residual(&self) -> f64 {
        if self.dim_in != self.dim_out {
            return f64::INFINITY;
        }
        let n = self.dim_in;
        self.apply(&ComplexMatrix::identity(n)).expect("square").distance(&ComplexMatrix::identity(n))
    }
}

/// `φ(a) = Σ_ij a_ij C_ij` with `C_ij` the `(i, j)` block of the Choi matrix.
pub fn apply_map(phi: &MapObject, a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (m, n) = (phi.dim_in, phi.dim_out);
    if a.rows() != m || a.cols() != m {
        return Err(Error::ShapeMismatch(format!("map input is {m}x{m}, got {}x{}", a.rows(), a.cols())));
    }
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..m {
        for j in 0..m {
            let w = a[(i, j)];
            if w == ZERO {
                continue;
            }
            for k in 0..n {
                for l in 0..n {
                    out[(k, l)] += w * phi.choi[(i * n + k, j * n + l)];
                }
            }
        }
    }
    Ok(out)
}

/// `(id_k ⊗ φ)[a_ij] = [φ(a_ij)]` for a `k × k` block matrix with `m × m` blocks.
pub fn apply_blockwise(phi: &MapObject, k: usize, a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (m, n) = (phi.dim_in, phi.dim_out);
    if a.rows() != k * m || a.cols() != k * m {
        return Err(Error::ShapeMismatch(format!("expected {}x{} block matrix", k * m, k * m)));
    }
    let mut out = ComplexMatrix::zeros(k * n, k * n);
    for i in 0..k {
        for j in 0..k {
            out.set_block(n, i, j, &apply_map(phi, &a.block(m, i, j))?);
        }
    }
    Ok(out)
}

/// Builds a map from a registry key:
/// `identity:n`, `transpose:n`, `adu:<matrix-file>`, `mix:λ:<key>:<key>`,
/// `compose-t:<key>`. Nested keys consume tokens left to right, so
/// `mix:0.5:identity:2:transpose:2` is well formed.
pub fn make_map(key: &str, load_matrix: &dyn Fn(&str) -> Result<ComplexMatrix>) -> Result<MapObject> {
    let tokens: Vec<&str> = key.split(':').collect();
    let mut pos = 0;
    let map = parse_key(&tokens, &mut pos, load_matrix)?;
    if pos != tokens.len() {
        return Err(Error::UnknownKind(format!("trailing tokens in map key {key:?}")));
    }
    Ok(map.with_label(key))
}

fn parse_key(tokens: &[&str], pos: &mut usize, load: &dyn Fn(&str) -> Result<ComplexMatrix>) -> Result<MapObject> {
    let mut next = |what: &str| -> Result<String> {
        let t = tokens
            .get(*pos)
            .ok_or_else(|| Error::UnknownKind(format!("map key ended, expected {what}")))?;
        *pos += 1;
        Ok(t.to_string())
    };
    let head = next("a map kind")?;
    let dim = |s: String| -> Result<usize> {
        s.parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::UnknownKind(format!("bad dimension {s:?}")))
    };
    match head.as_str() {
        "identity" => Ok(MapObject::identity(dim(next("dimension")?)?)),
        "transpose" => Ok(MapObject::transposition(dim(next("dimension")?)?)),
        "adu" => {
            let v = load(&next("matrix file")?)?;
            Ok(MapObject::adjoint_conjugation(&v))
        }
        "mix" => {
            let w = next("weight")?;
            let lambda: f64 = w
                .parse()
                .ok()
                .filter(|l: &f64| l.is_finite())
                .ok_or_else(|| Error::UnknownKind(format!("bad weight {w:?}")))?;
            let a = parse_key(tokens, pos, load)?;
            let b = parse_key(tokens, pos, load)?;
            MapObject::mix(lambda, &a, &b)
        }
        "compose-t" => Ok(MapObject::compose_t(&parse_key(tokens, pos, load)?)),
        other => Err(Error::UnknownKind(format!("unknown map kind {other:?}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PositivityVerdict {
    CompletelyPositive,
    CompletelyCopositive,
    /// One-sided: the search found nothing, which is evidence, not proof.
    KPositiveNoViolationFound { k: usize },
    /// `value = ⟨v|C|v⟩ < −tol` for a unit `v` of Schmidt rank at most `k`.
    ViolationFound { k: usize, vector: ComplexMatrix, value: f64 },
    SkViolation { k: usize, witness: ComplexMatrix, value: f64 },
    SkNoViolationFound { trials: usize },
}

impl PositivityVerdict {
    pub fn is_violation(&self) -> bool {
        matches!(self, Self::ViolationFound { .. } | Self::SkViolation { .. })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GlobalPositivity {
    pub completely_positive: bool,
    pub completely_copositive: bool,
    pub min_choi_eigenvalue: f64,
    /// Minimal eigenvalue of the Choi matrix partially transposed on the output factor.
    pub min_transposed_choi_eigenvalue: f64,
}

impl GlobalPositivity {
    pub fn verdicts(&self) -> Vec<PositivityVerdict> {
        let mut v = Vec::new();
        if self.completely_positive {
            v.push(PositivityVerdict::CompletelyPositive);
        }
        if self.completely_copositive {
            v.push(PositivityVerdict::CompletelyCopositive);
        }
        v
    }
}

pub fn global_positivity_test(phi: &MapObject, tol: f64) -> Result<GlobalPositivity> {
    let min_c = linalg::herm_eig(&phi.choi)?.min_eigenvalue();
    let pt = linalg::partial_transpose(&phi.choi, &phi.layout(), 1)?;
    let min_pt = linalg::herm_eig(&pt)?.min_eigenvalue();
    Ok(GlobalPositivity {
        completely_positive: min_c >= -tol,
        completely_copositive: min_pt >= -tol,
        min_choi_eigenvalue: min_c,
        min_transposed_choi_eigenvalue: min_pt,
    })
}

/// Gram–Schmidt on the columns of `x`, replacing (near-)dependent columns by
/// fresh random directions so the result always has orthonormal columns.
fn orthonormal_columns(x: &ComplexMatrix, rng: &mut impl Rng) -> ComplexMatrix {
    let (d, k) = (x.rows(), x.cols());
    let mut q = ComplexMatrix::zeros(d, k);
    for c in 0..k {
        let mut v = x.col(c);
        for attempt in 0..8 {
            for _ in 0..2 {
                for p in 0..c {
                    let qp = q.col(p);
                    let r = linalg::dot(&qp, &v);
                    for (vi, qi) in v.iter_mut().zip(&qp) {
                        *vi -= r * qi;
                    }
                }
            }
            let norm = linalg::vec_norm(&v);
            if norm > 1e-10 || attempt == 7 {
                let norm = norm.max(f64::MIN_POSITIVE);
                v.iter_mut().for_each(|z| *z /= norm);
                break;
            }
            v = random::unit_vector(d, rng);
        }
        q.set_col(c, &v);
    }
    q
}

/// `v = Σ_r x_r ⊗ y_r` as a vector of length `m·n`.
fn schmidt_vector(x: &ComplexMatrix, y: &ComplexMatrix) -> Vec<Complex64> {
    let (m, n, k) = (x.rows(), y.rows(), x.cols());
    let mut v = vec![ZERO; m * n];
    for r in 0..k {
        for i in 0..m {
            for j in 0..n {
                v[i * n + j] += x[(i, r)] * y[(j, r)];
            }
        }
    }
    v
}

/// Best rank-`k` factor on one side given orthonormal columns `q` on the
/// other: minimal eigenvector of the compressed Choi matrix.
/// `left = true` means `q` holds the second-factor vectors and the first is solved for.
fn seesaw_step(c: &ComplexMatrix, q: &ComplexMatrix, m: usize, n: usize, left: bool) -> (f64, ComplexMatrix) {
    let k = q.cols();
    let free = if left { m } else { n };
    // L maps the free factor coefficients (r, i) to the product vector.
    let mut l = ComplexMatrix::zeros(m * n, free * k);
    for r in 0..k {
        for a in 0..free {
            let col = r * free + a;
            if left {
                for j in 0..n {
                    l[(a * n + j, col)] = q[(j, r)];
                }
            } else {
                for i in 0..m {
                    l[(i * n + a, col)] = q[(i, r)];
                }
            }
        }
    }
    let reduced = &(&l.adjoint() * c) * &l;
    let eig = linalg::herm_eig_unchecked(&reduced);
    let coeffs = eig.eigenvector(0);
    let factor = ComplexMatrix::from_fn(free, k, |a, r| coeffs[r * free + a]);
    (eig.min_eigenvalue(), factor)
}

#[derive(Debug, Clone, Copy)]
pub struct SeesawParams {
    pub restarts: usize,
    pub max_sweeps: usize,
    pub tol: f64,
}

impl Default for SeesawParams {
    fn default() -> Self {
        Self {
            restarts: DEFAULT.seesaw_restarts,
            max_sweeps: DEFAULT.seesaw_max_sweeps,
            tol: DEFAULT.seesaw,
        }
    }
}

/// Smallest `⟨v|C|v⟩` found over unit `v` of Schmidt rank at most `k`, with the minimizer.
pub fn seesaw_minimum(phi: &MapObject, k: usize, params: SeesawParams, seed: u64) -> Result<(f64, Vec<Complex64>)> {
    let (m, n) = (phi.dim_in, phi.dim_out);
    if k == 0 || k > m.min(n) {
        return Err(Error::InvalidParameter(format!("k = {k} outside 1..={}", m.min(n))));
    }
    let c = phi.choi.hermitian_part();
    let mut best = (f64::INFINITY, Vec::new());
    for restart in 0..params.restarts.max(1) {
        let mut rng = random::rng(random::derived_seed(seed, restart as u64));
        let mut y = orthonormal_columns(&random::ginibre(n, k, &mut rng), &mut rng);
        let mut value = f64::INFINITY;
        let mut x = ComplexMatrix::zeros(m, k);
        let mut coeffs = y.clone();
        for _ in 0..params.max_sweeps.max(1) {
            let (_, xs) = seesaw_step(&c, &y, m, n, true);
            x = orthonormal_columns(&xs, &mut rng);
            let (next, ys) = seesaw_step(&c, &x, m, n, false);
            coeffs = ys;
            let improvement = value - next;
            value = next;
            if improvement < params.tol {
                break;
            }
            y = orthonormal_columns(&coeffs, &mut rng);
        }
        let v = schmidt_vector(&x, &coeffs);
        let norm = linalg::vec_norm(&v);
        if norm == 0.0 {
            continue;
        }
        let v: Vec<_> = v.iter().map(|z| z / norm).collect();
        let direct = linalg::dot(&v, &c.apply(&v)).re;
        if direct < best.0 {
            best = (direct, v);
        }
    }
    Ok(best)
}

/// Schmidt rank of `v ∈ ℂ^m ⊗ ℂ^n`: number of singular values of its
/// `m × n` reshaping above `cutoff · max`.
pub fn schmidt_rank(v: &[Complex64], m: usize, n: usize, cutoff: f64) -> usize {
    let mat = ComplexMatrix::unvectorize(m, n, v);
    let gram = &mat * &mat.adjoint();
    let eig = linalg::herm_eig_unchecked(&gram);
    let top = eig.max_eigenvalue().max(0.0);
    eig.eigenvalues.iter().filter(|&&s| s > cutoff * cutoff * top && s > 0.0).count()
}

/// Re-evaluates a candidate witness: `Some(value)` when `v` has Schmidt rank
/// at most `k` and `⟨v|C|v⟩/‖v‖² < −tol`, certifying that `φ` is not `k`-positive.
pub fn certify_violation(phi: &MapObject, k: usize, v: &[Complex64], tol: f64) -> Option<f64> {
    let norm2 = linalg::dot(v, v).re;
    if v.len() != phi.dim_in * phi.dim_out || norm2 == 0.0 {
        return None;
    }
    // singular values come from a Gram eigenproblem, so only ~√ε relative accuracy
    if schmidt_rank(v, phi.dim_in, phi.dim_out, 1e-6) > k {
        return None;
    }
    let value = linalg::dot(v, &phi.choi.apply(v)).re / norm2;
    (value < -tol).then_some(value)
}

pub fn k_positivity_search(phi: &MapObject, k: usize, restarts: usize, seed: u64, tol: f64) -> Result<PositivityVerdict> {
    let params = SeesawParams {
        restarts,
        ..SeesawParams::default()
    };
    let (_, v) = seesaw_minimum(phi, k, params, seed)?;
    if let Some(value) = certify_violation(phi, k, &v, tol) {
        return Ok(PositivityVerdict::ViolationFound {
            k,
            vector: ComplexMatrix::column(&v),
            value,
        });
    }
    Ok(PositivityVerdict::KPositiveNoViolationFound { k })
}

/// Random `k × k` block matrix with both `[a_ij]` and `[a_ji]` PSD.
pub fn sample_double_psd(k: usize, m: usize, seed: u64) -> Result<ComplexMatrix> {
    let mut rng = random::rng(seed);
    let h = random::hermitian(k * m, &mut rng);
    let layout = TensorLayout::bipartite(k, m);
    cones::project_double_psd_with(&h, |x| linalg::partial_transpose_unchecked(x, &layout, 0))
}

/// Searches for `[a_ij]` with `[a_ij], [a_ji] ⪰ 0` and `[φ(a_ij)] ⋡ 0`.
pub fn sk_sampler(phi: &MapObject, k: usize, trials: usize, seed: u64, tol: f64) -> Result<PositivityVerdict> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    for t in 0..trials {
        let a = sample_double_psd(k, phi.dim_in, random::derived_seed(seed, t as u64))?;
        if let Some(value) = sk_evaluate(phi, k, &a, tol) {
            return Ok(PositivityVerdict::SkViolation { k, witness: a, value });
        }
    }
    Ok(PositivityVerdict::SkNoViolationFound { trials })
}

/// Minimal eigenvalue of `[φ(a_ij)]` when it is below `−tol`.
pub fn sk_evaluate(phi: &MapObject, k: usize, a: &ComplexMatrix, tol: f64) -> Option<f64> {
    let out = apply_blockwise(phi, k, a).ok()?;
    let min = linalg::herm_eig_unchecked(&out).min_eigenvalue();
    (min < -tol).then_some(min)
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionResult {
    pub cp_part: MapObject,
    pub ccp_part: MapObject,
    /// `‖C − C_1 − C_2‖_F`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stalled: bool,
}

/// Searches `C = C_1 + C_2` with `C_1 ⪰ 0` and `C_2^{t_2} ⪰ 0`. A residual
/// above `tol` is numerical evidence of non-decomposability only.
pub fn decompose(phi: &MapObject, tol: f64, max_iter: usize) -> Result<DecompositionResult> {
    let dev = phi.choi.hermitian_deviation();
    if dev > DEFAULT.herm_threshold(phi.choi.frobenius_norm()) {
        return Err(Error::NotHermitian(dev));
    }
    let layout = phi.layout();
    let pt = |x: &ComplexMatrix| linalg::partial_transpose_unchecked(x, &layout, 1);
    let split = feasibility::cone_split(
        &phi.choi.hermitian_part(),
        linalg::psd_project_unchecked,
        |x| pt(&linalg::psd_project_unchecked(&pt(x))),
        DykstraParams::new(tol, max_iter),
    );
    let part = |choi: ComplexMatrix, tag: &str| MapObject {
        dim_in: phi.dim_in,
        dim_out: phi.dim_out,
        choi,
        label: format!("{tag}:{}", phi.label),
    };
    Ok(DecompositionResult {
        cp_part: part(split.first, "cp-part"),
        ccp_part: part(split.second, "ccp-part"),
        residual: split.residual,
        iterations: split.iterations,
        converged: split.converged,
        stalled: split.stalled,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DetailedBalance {
    /// `φ^β`, determined by `ω(a* φ(b)) = ω(φ^β(a*) b)`.
    pub adjoint: MapObject,
    pub positive_evidence: bool,
    pub unital: bool,
    pub unitality_residual: f64,
    /// Worst `|ω(E_ab* φ(E_cd)) − ω(φ^β(E_ab*) E_cd)|` over matrix units.
    pub pairing_residual: f64,
    pub holds: bool,
}

/// Solves for `φ^β(c) = ρ^{−1} (φ†(c* ρ))*`. Returns `None` when the
/// positivity search finds `φ^β` not positive.
pub fn db_adjoint(phi: &MapObject, state: &FaithfulState, tol: f64, seed: u64) -> Result<Option<DetailedBalance>> {
    let n = phi.dim_out;
    if phi.dim_in != n || state.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "detailed balance needs an endomorphism of M_{} and a state on it, got {}->{} and M_{}",
            state.dim(),
            phi.dim_in,
            phi.dim_out,
            state.dim()
        )));
    }
    let rho = state.rho();
    let rho_inv = linalg::psd_pseudo_inverse(rho, 0.0);
    let dagger = phi.hs_adjoint();
    let mut choi = ComplexMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let c = ComplexMatrix::unit(n, i, j);
            let inner = dagger.apply(&(&c.adjoint() * rho))?;
            choi.set_block(n, i, j, &(&rho_inv * &inner.adjoint()));
        }
    }
    // A positive map preserves Hermiticity, so a non-Hermitian Choi matrix
    // already rules out detailed balance.
    let adjoint = match MapObject::from_choi(n, n, choi, format!("db-adjoint:{}", phi.label)) {
        Ok(a) => a,
        Err(Error::BadChoi(_)) => return Ok(None),
        Err(e) => return Err(e),
    };

    let mut pairing: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let ea_star = ComplexMatrix::unit(n, b, a);
            let lhs_left = ea_star.clone();
            let psi = adjoint.apply(&ea_star)?;
            for c in 0..n {
                for d in 0..n {
                    let ecd = ComplexMatrix::unit(n, c, d);
                    let lhs = state.expectation(&(&lhs_left * &phi.apply(&ecd)?));
                    let rhs = state.expectation(&(&psi * &ecd));
                    pairing = pairing.max((lhs - rhs).norm());
                }
            }
        }
    }
    let unitality_residual = adjoint.unitality_residual();
    let unital = unitality_residual <= tol;
    let positivity = k_positivity_search(&adjoint, 1, DEFAULT.seesaw_restarts, seed, tol)?;
    if positivity.is_violation() {
        return Ok(None);
    }
    Ok(Some(DetailedBalance {
        adjoint,
        positive_evidence: true,
        unital,
        unitality_residual,
        pairing_residual: pairing,
        holds: unital,
    }))
}

#[derive(Debug, Clone, Serialize)]
pub struct TransferOperator {
    /// Action on row-major vectorized GNS vectors: `vec(φ(a)Ω) = M vec(aΩ)`.
    pub matrix: ComplexMatrix,
    pub base_state: ComplexMatrix,
    pub db_adjoint: Option<MapObject>,
    /// `‖T Δ^{1/4} − Δ^{1/4} T‖_F`.
    pub delta_commutation_residual: f64,
    pub commutes_with_delta: bool,
    /// Worst natural-cone residual of `T* ξ` over sampled `ξ ∈ P`.
    pub cone_invariance_residual: f64,
    pub cone_invariant: bool,
    pub samples: usize,
}

/// Matrix of the superoperator `f` in row-major vectorized coordinates.
pub fn superoperator_matrix(n: usize, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let image = f(&ComplexMatrix::unit(n, i, j)).vectorize();
            out.set_col(i * n + j, &image);
        }
    }
    out
}

/// `T_φ: aΩ ↦ φ(a)Ω`, i.e. `x ↦ φ(x Ω^{−1}) Ω`.
pub fn transfer_operator(phi: &MapObject, md: &ModularData, samples: usize, seed: u64, tol: f64) -> Result<TransferOperator> {
    let n = md.dim();
    if phi.dim_in != n || phi.dim_out != n {
        return Err(Error::DimensionMismatch(format!(
            "map is {}->{}, state lives on M_{n}",
            phi.dim_in, phi.dim_out
        )));
    }
    let matrix = superoperator_matrix(n, |x| phi.apply(&(x * md.rho_inv_half())).expect("square") * md.omega());
    let delta = superoperator_matrix(n, |x| md.delta_power(0.25, x));
    let delta_commutation_residual = (&matrix * &delta).distance(&(&delta * &matrix));
    let adjoint = matrix.adjoint();
    let mut worst: f64 = 0.0;
    for s in 0..samples {
        let xi = cones::sample_cone(md, &ConeSpec::natural(), random::derived_seed(seed, s as u64))?;
        let image = ComplexMatrix::unvectorize(n, n, &adjoint.apply(&xi.vectorize()));
        let r = cones::cone_membership(md, &ConeSpec::natural(), &image, tol)?;
        worst = worst.max(r.residual);
    }
    let db = db_adjoint(phi, md.state(), DEFAULT.cone.max(tol), seed)?
        .filter(|d| d.holds)
        .map(|d| d.adjoint);
    Ok(TransferOperator {
        matrix,
        base_state: md.rho().clone(),
        db_adjoint: db,
        delta_commutation_residual,
        commutes_with_delta: delta_commutation_residual <= tol,
        cone_invariance_residual: worst,
        cone_invariant: worst <= tol,
        samples,
    })
}

/// `(T ⊗ I)* ξ` on `M_m ⊗ M_n`, acting on the first tensor factor.
fn apply_adjoint_first_factor(t_adj: &ComplexMatrix, xi: &ComplexMatrix, m: usize, n: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(m * n, m * n);
    for k in 0..n {
        for l in 0..n {
            let x = ComplexMatrix::from_fn(m, m, |i, j| xi[(i * n + k, j * n + l)]);
            let y = t_adj.apply(&x.vectorize());
            for i in 0..m {
                for j in 0..m {
                    out[(i * n + k, j * n + l)] = y[i * m + j];
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionLevel {
    pub n: usize,
    /// Worst `P_n` residual of `(T ⊗ I)* ξ`.
    pub natural_residual: f64,
    pub natural_pass: bool,
    pub transposed_residual: f64,
    pub transposed_pass: bool,
    pub hull_residual: f64,
    pub hull_pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub k: usize,
    pub trials: usize,
    pub levels: Vec<CriterionLevel>,
}

impl CriterionReport {
    pub fn level(&self, n: usize) -> Option<&CriterionLevel> {
        self.levels.iter().find(|l| l.n == n)
    }

    pub fn natural_pass(&self) -> bool {
        self.levels.iter().all(|l| l.natural_pass)
    }

    pub fn transposed_pass(&self) -> bool {
        self.levels.iter().all(|l| l.transposed_pass)
    }

    pub fn hull_pass(&self) -> bool {
        self.levels.iter().all(|l| l.hull_pass)
    }
}

/// For each `n = 1..=k`, samples `P_n` over `M_m ⊗ M_n` (auxiliary factor in
/// the tracial state unless `aux` overrides it), applies `(T_φ ⊗ I)*` and
/// records the worst residual for `P_n`, `P_n^τ` and the hull.
/// Refuses maps without a positive unital detailed-balance adjoint.
pub fn cone_criterion_check(
    phi: &MapObject,
    md: &ModularData,
    k: usize,
    trials: usize,
    seed: u64,
    tol: f64,
    aux: Option<&dyn Fn(usize) -> Result<ModularData>>,
) -> Result<CriterionReport> {
    let m = md.dim();
    if phi.dim_in != m || phi.dim_out != m {
        return Err(Error::DimensionMismatch(format!("map is {}->{}, state on M_{m}", phi.dim_in, phi.dim_out)));
    }
    match db_adjoint(phi, md.state(), DEFAULT.cone.max(tol), seed)? {
        Some(d) if d.holds => {}
        _ => return Err(Error::NoDetailedBalance),
    }
    let t = transfer_operator(phi, md, 0, seed, tol)?;
    let t_adj = t.matrix.adjoint();
    let mut levels = Vec::with_capacity(k);
    for n in 1..=k {
        let aux_md = match aux {
            Some(f) => f(n)?,
            None => ModularData::tracial(n),
        };
        let joint = modular::tensor_modular(md, &aux_md);
        let layout = TensorLayout::bipartite(m, n);
        let mut level = CriterionLevel {
            n,
            natural_residual: 0.0,
            natural_pass: true,
            transposed_residual: 0.0,
            transposed_pass: true,
            hull_residual: 0.0,
            hull_pass: true,
        };
        for s in 0..trials {
            let trial_seed = random::derived_seed(seed, (n * 1_000_003 + s) as u64);
            let xi = cones::sample_cone(&joint, &ConeSpec::natural_tensor(m, n), trial_seed)?;
            let image = apply_adjoint_first_factor(&t_adj, &xi, m, n);
            let nat = cones::cone_membership(&joint, &ConeSpec::natural_tensor(m, n), &image, tol)?;
            let tr = cones::cone_membership(&joint, &ConeSpec::transposed_tensor(m, n), &image, tol)?;
            level.natural_residual = level.natural_residual.max(nat.residual);
            level.transposed_residual = level.transposed_residual.max(tr.residual);
            level.natural_pass &= nat.inside;
            level.transposed_pass &= tr.inside;
            let hull_inside = nat.inside || tr.inside || {
                let h = cones::hull_membership(&joint, &image, &layout, tol, DEFAULT.max_iter)?;
                level.hull_residual = level.hull_residual.max(h.result.residual);
                h.result.inside
            };
            level.hull_pass &= hull_inside;
        }
        levels.push(level);
    }
    Ok(CriterionReport { k, trials, levels })
}

/// `λ Ad_U + (1 − λ) Ad_V ∘ T` on `M_2` with Haar unitaries; positive and
/// unital by construction.
pub fn random_unital_positive_m2(seed: u64) -> MapObject {
    let mut rng = random::rng(seed);
    let u = random::haar_unitary(2, &mut rng);
    let v = random::haar_unitary(2, &mut rng);
    let lambda: f64 = rng.random_range(0.0..1.0);
    let co = MapObject::compose_t(&MapObject::adjoint_conjugation(&v));
    MapObject::mix(lambda, &MapObject::adjoint_conjugation(&u), &co)
        .expect("same shapes")
        .with_label(format!("random-m2:{seed}"))
}

/// Random CP map with `terms` Ginibre Kraus operators, scaled to unit Choi trace.
pub fn random_cp(m: usize, n: usize, terms: usize, seed: u64) -> MapObject {
    let mut rng = random::rng(seed);
    let kraus: Vec<_> = (0..terms.max(1)).map(|_| random::ginibre(n, m, &mut rng)).collect();
    let phi = MapObject::from_kraus(&kraus, format!("random-cp:{seed}")).expect("kraus shapes");
    let tr = phi.choi.trace().re;
    phi.scale(1.0 / tr)
}

/// Random Hermiticity-preserving map whose Choi matrix has a negative eigenvalue.
pub fn random_non_cp(m: usize, n: usize, seed: u64) -> MapObject {
    let mut rng = random::rng(seed);
    let mut h = random::hermitian(m * n, &mut rng);
    let eig = linalg::herm_eig_unchecked(&h);
    if eig.min_eigenvalue() >= -0.05 {
        h -= &ComplexMatrix::identity(m * n).scale_real(eig.min_eigenvalue() + 0.5);
    }
    MapObject::from_choi(m, n, h.hermitian_part(), format!("random-non-cp:{seed}")).expect("hermitian")
}

/// Random unital CP map satisfying detailed balance for `state`: a convex
/// combination of `Ad_u` with `u` diagonal in the eigenbasis of `ρ`, the
/// pinching onto that eigenbasis, and `a ↦ Tr(ρa) I`.
pub fn random_db_cp(md: &ModularData, seed: u64) -> MapObject {
    let n = md.dim();
    let w = md.eigenbasis();
    let mut rng = random::rng(seed);
    let phase_unitary = |rng: &mut random::SeededRng| {
        let d: Vec<_> = (0..n)
            .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
            .collect();
        w * &ComplexMatrix::from_diag(&d) * w.adjoint()
    };
    let projectors: Vec<_> = (0..n)
        .map(|k| {
            let v = w.col(k);
            ComplexMatrix::outer(&v, &v)
        })
        .collect();
    let pinching = MapObject::from_kraus(&projectors, "pinching").expect("projectors");
    let replace = MapObject::from_fn(n, n, "trace-state", |a| {
        ComplexMatrix::identity(n).scale(md.state().expectation(a))
    })
    .expect("hermitian");
    let mut parts = vec![
        MapObject::adjoint_conjugation(&phase_unitary(&mut rng)),
        MapObject::adjoint_conjugation(&phase_unitary(&mut rng)),
        pinching,
        replace,
    ];
    let weights: Vec<f64> = (0..parts.len()).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut choi = ComplexMatrix::zeros(n * n, n * n);
    for (p, w) in parts.drain(..).zip(&weights) {
        choi += &p.choi.scale_real(w / total);
    }
    MapObject::from_choi(n, n, choi.hermitian_part(), format!("random-db-cp:{seed}")).expect("hermitian")
}

/// `λ·CP + (1 − λ)·(CP ∘ T)` with full-rank random CP parts.
pub fn random_decomposable(n: usize, seed: u64) -> MapObject {
    let mut rng = random::rng(seed);
    let lambda: f64 = rng.random_range(0.0..1.0);
    let a = random_cp(n, n, n * n, random::derived_seed(seed, 1));
    let b = MapObject::compose_t(&random_cp(n, n, n * n, random::derived_seed(seed, 2)));
    MapObject::mix(lambda, &a, &b).expect("same shapes").with_label(format!("random-decomposable:{seed}"))
}

/// `λ Ad_U + (1 − λ) Ad_V ∘ T` on `M_n` with Haar unitaries; decomposable,
/// unital, and with detailed balance for the tracial state.
pub fn random_unitary_mixture(n: usize, seed: u64) -> MapObject {
    let mut rng = random::rng(seed);
    let u = random::haar_unitary(n, &mut rng);
    let v = random::haar_unitary(n, &mut rng);
    let lambda: f64 = rng.random_range(0.05..0.95);
    let co = MapObject::compose_t(&MapObject::adjoint_conjugation(&v));
    MapObject::mix(lambda, &MapObject::adjoint_conjugation(&u), &co)
        .expect("same shapes")
        .with_label(format!("unitary-mixture:{seed}"))
}

pub(crate) fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_vec(2, 2, vec![ZERO, ONE, ONE, ZERO]).expect("2x2")
}
