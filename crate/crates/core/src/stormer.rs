//! Local decomposability `φ(a)η = V_η ρ_η(a) V_η* η` for positive unital
//! maps, and the face criterion for global equality on `M_2`.
//!
//! `K_η = M_m/L ⊕ M_m/R` is realized in orthonormal coordinates: the Gram
//! forms `a ↦ ½ω_η(a*a)` and `a ↦ ½ω_η(aa*)` are diagonalized, eigenvalues
//! below the kernel cutoff are dropped, and a class `[a]_l` is the image of
//! `a` under the scaled eigenbasis. For maps in a face `F_{ξ,η}` on `M_2`
//! the quotients are exact, `L = M_2 e11` and `R = e11 M_2`, and the
//! coordinates are those of the basis `k1..k4`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, random, ComplexMatrix, ONE, ZERO};
use crate::maps::{self, MapObject};
use crate::tolerances::DEFAULT;

const UNIT_TOL: f64 = 1e-12;
const FACE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceSpec {
    pub xi: Vec<Complex64>,
    pub eta: Vec<Complex64>,
}

/// Unit vector orthogonal to `v ∈ ℂ²`: `(−conj v₂, conj v₁)`.
pub fn complement(v: &[Complex64]) -> Vec<Complex64> {
    vec![-v[1].conj(), v[0].conj()]
}

fn column_matrix(cols: &[&[Complex64]]) -> ComplexMatrix {
    let n = cols[0].len();
    ComplexMatrix::from_fn(n, cols.len(), |i, j| cols[j][i])
}

impl FaceSpec {
    pub fn new(xi: Vec<Complex64>, eta: Vec<Complex64>) -> Result<Self> {
        let face = Self { xi, eta };
        face.validate()?;
        Ok(face)
    }

    pub fn e1() -> Self {
        Self {
            xi: vec![ONE, ZERO],
            eta: vec![ONE, ZERO],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("xi", &self.xi), ("eta", &self.eta)] {
            if v.is_empty() || v.iter().any(|z| !z.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be a finite non-empty vector")));
            }
            let dev = (linalg::vec_norm(v) - 1.0).abs();
            if dev > UNIT_TOL {
                return Err(Error::NotNormalized(dev));
            }
        }
        Ok(())
    }

    /// `[ξ₁ ξ₂]` with `ξ₂ = complement(ξ)` (two-dimensional faces only).
    pub fn xi_basis(&self) -> ComplexMatrix {
        let x2 = complement(&self.xi);
        column_matrix(&[&self.xi, &x2])
    }

    /// `e_ij = |ξ_i⟩⟨ξ_j|` in the standard basis (0-based `i, j`).
    pub fn unit(&self, i: usize, j: usize) -> ComplexMatrix {
        let w = self.xi_basis();
        ComplexMatrix::outer(&w.col(i), &w.col(j))
    }
}

/// `‖φ(I) − I‖_F` and `‖φ(|ξ⟩⟨ξ|)η‖`.
pub fn face_residuals(phi: &MapObject, face: &FaceSpec) -> Result<(f64, f64)> {
    if face.xi.len() != phi.dim_in || face.eta.len() != phi.dim_out {
        return Err(Error::ShapeMismatch(format!(
            "face vectors of length {}, {} for a map {}->{}",
            face.xi.len(),
            face.eta.len(),
            phi.dim_in,
            phi.dim_out
        )));
    }
    let unital = if phi.dim_in == phi.dim_out {
        phi.unitality_residual()
    } else {
        f64::INFINITY
    };
    let image = phi.apply(&ComplexMatrix::outer(&face.xi, &face.xi))?;
    Ok((unital, linalg::vec_norm(&image.apply(&face.eta))))
}

/// `φ ∈ F_{ξ,η}`: unital and `φ(|ξ⟩⟨ξ|)η = 0`, both within `tol`.
pub fn face_membership(phi: &MapObject, face: &FaceSpec, tol: f64) -> Result<bool> {
    let (u, k) = face_residuals(phi, face)?;
    Ok(u <= tol && k <= tol)
}

/// Convex combination of `terms` maps `Ad_U` and `Ad_V ∘ T` on `M_2` with
/// `U*η ⊥ ξ` and `V*η ⊥ conj ξ`, which puts every term in `F_{ξ,η}`.
pub fn sample_face_map(face: &FaceSpec, terms: usize, seed: u64) -> Result<MapObject> {
    face.validate()?;
    if face.xi.len() != 2 || face.eta.len() != 2 {
        return Err(Error::InvalidParameter("face maps are sampled on M_2 only".into()));
    }
    let mut rng = random::rng(seed);
    let eta2 = complement(&face.eta);
    let xi_bar: Vec<_> = face.xi.iter().map(|z| z.conj()).collect();
    // U = e^{ia}|η⟩⟨x₂| + e^{ib}|η₂⟩⟨x₁| sends the complement of x₁ to η.
    let unitary = |x1: &[Complex64], rng: &mut random::SeededRng| {
        let x2 = complement(x1);
        let p = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
        let q = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
        ComplexMatrix::outer(&face.eta, &x2).scale(p) + ComplexMatrix::outer(&eta2, x1).scale(q)
    };
    let terms = terms.max(1);
    let weights: Vec<f64> = (0..terms).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut choi = ComplexMatrix::zeros(4, 4);
    for w in &weights {
        let term = if rng.random_bool(0.5) {
            MapObject::adjoint_conjugation(&unitary(&face.xi, &mut rng))
        } else {
            MapObject::compose_t(&MapObject::adjoint_conjugation(&unitary(&xi_bar, &mut rng)))
        };
        choi += &term.choi.scale_real(w / total);
    }
    MapObject::from_choi(2, 2, choi.hermitian_part(), format!("face-map:{seed}"))
}

/// `φ_sym(a) = ½σ_x a σ_x + ½σ_x a^t σ_x`, in `F_{e1,e1}`.
pub fn phi_sym() -> MapObject {
    let ad = MapObject::adjoint_conjugation(&maps::pauli_x());
    MapObject::mix(0.5, &ad, &MapObject::compose_t(&ad)).expect("same shape").with_label("phi-sym")
}

/// `a ↦ a₂₂E₁₁ + a₁₁E₂₂`.
pub fn diagonal_flip() -> MapObject {
    MapObject::from_fn(2, 2, "diagonal-flip", |a| ComplexMatrix::from_diag(&[a[(1, 1)], a[(0, 0)]]))
        .expect("hermitian")
}

#[derive(Debug, Clone)]
enum Representation {
    /// Orthonormal coordinates of the two quotients, `[a]_l = E_l vec(a)`,
    /// with right inverses for lifting classes back to representatives.
    Numerical {
        el: ComplexMatrix,
        el_pinv: ComplexMatrix,
        er: ComplexMatrix,
        er_pinv: ComplexMatrix,
    },
    /// `k1..k4` coordinates; `ρ(a) = S (A ⊕ A^t) S*` with `A` the matrix of
    /// `a` in the `ξ` basis.
    Face { xi_basis: ComplexMatrix, s: ComplexMatrix },
}

#[derive(Debug, Clone, Serialize)]
pub struct StormerData {
    pub eta: Vec<Complex64>,
    /// Density of `ω_η`: `ω_η(a) = Tr(D a)`.
    pub omega_eta: ComplexMatrix,
    pub left_ideal_basis: Vec<ComplexMatrix>,
    pub right_ideal_basis: Vec<ComplexMatrix>,
    pub k_dim: usize,
    pub k_labels: Vec<String>,
    /// `⟨⟨k_i, k_j⟩⟩` over the coordinate basis, evaluated from representatives.
    pub gram: ComplexMatrix,
    /// `n × k_dim` in K coordinates and the standard basis of `ℂ^n`.
    pub v_eta: ComplexMatrix,
    pub v_norm: f64,
    /// Projector onto `G = {[a]}` in K coordinates.
    pub g_projection: ComplexMatrix,
    pub face: Option<FaceData>,
    #[serde(skip)]
    rep: Representation,
}

#[derive(Debug, Clone, Serialize)]
pub struct FaceData {
    pub xi: Vec<Complex64>,
    pub eta2: Vec<Complex64>,
    /// `V_η` in the bases `{k1..k4}` and `{η₁, η₂}`.
    pub v_matrix: ComplexMatrix,
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl StormerData {
    pub fn dim_in(&self) -> usize {
        match &self.rep {
            Representation::Numerical { el, .. } => (el.cols() as f64).sqrt().round() as usize,
            Representation::Face { .. } => 2,
        }
    }

    /// `ρ_η(a)` on K coordinates.
    pub fn rho(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        let (l, r) = self.rho_parts(a)?;
        let (nl, nr) = (l.rows(), r.rows());
        let mut out = ComplexMatrix::zeros(nl + nr, nl + nr);
        for i in 0..nl {
            for j in 0..nl {
                out[(i, j)] = l[(i, j)];
            }
        }
        for i in 0..nr {
            for j in 0..nr {
                out[(nl + i, nl + j)] = r[(i, j)];
            }
        }
        Ok(match &self.rep {
            Representation::Face { s, .. } => s * &out * s.adjoint(),
            Representation::Numerical { .. } => out,
        })
    }

    /// The restrictions of `ρ_η(a)` to `K_l` and `K_r` in their own orthonormal
    /// coordinates: `[b]_l ↦ [ab]_l` and `[b]_r ↦ [ba]_r`.
    pub fn rho_parts(&self, a: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
        let m = self.dim_in();
        if a.rows() != m || a.cols() != m {
            return Err(Error::ShapeMismatch(format!("ρ_η acts on {m}x{m} matrices")));
        }
        Ok(match &self.rep {
            Representation::Numerical { el, el_pinv, er, er_pinv } => {
                let left = maps::superoperator_matrix(m, |b| a * b);
                let right = maps::superoperator_matrix(m, |b| b * a);
                (&(el * &left) * el_pinv, &(er * &right) * er_pinv)
            }
            Representation::Face { xi_basis, .. } => {
                let coords = &(xi_basis.adjoint() * a) * xi_basis;
                let t = coords.transpose();
                (coords, t)
            }
        })
    }

    /// `V_η ρ_η(a) V_η*`.
    pub fn reconstruct(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        Ok(&(&self.v_eta * &self.rho(a)?) * &self.v_eta.adjoint())
    }
}

fn omega_density(phi: &MapObject, eta: &[Complex64]) -> Result<ComplexMatrix> {
    let m = phi.dim_in;
    let mut d = ComplexMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let image = phi.apply(&ComplexMatrix::unit(m, i, j))?;
            d[(j, i)] = linalg::dot(eta, &image.apply(eta));
        }
    }
    Ok(d)
}

fn omega(d: &ComplexMatrix, a: &ComplexMatrix) -> Complex64 {
    (d * a).trace()
}

fn check_preconditions(phi: &MapObject, eta: &[Complex64], seed: u64) -> Result<()> {
    if phi.dim_in != phi.dim_out {
        return Err(Error::DimensionMismatch("local decomposition is built for endomorphisms".into()));
    }
    if eta.len() != phi.dim_out {
        return Err(Error::ShapeMismatch(format!("η has length {}, map output is {}", eta.len(), phi.dim_out)));
    }
    let dev = (linalg::vec_norm(eta) - 1.0).abs();
    if dev > UNIT_TOL {
        return Err(Error::NotNormalized(dev));
    }
    let u = phi.unitality_residual();
    if u > FACE_TOL {
        return Err(Error::NotUnital(u));
    }
    if let maps::PositivityVerdict::ViolationFound { value, .. } =
        maps::k_positivity_search(phi, 1, DEFAULT.seesaw_restarts, seed, DEFAULT.cone)?
    {
        return Err(Error::NotPositiveEvidence(value));
    }
    Ok(())
}

/// Builds `K_η`, `ρ_η` and `V_η`. On `M_2`, when `ω_η` has a kernel vector
/// `ξ` (so `φ ∈ F_{ξ,η}`), the exact face construction is used; otherwise
/// the quotients are computed numerically.
pub fn build_local_decomposition(phi: &MapObject, eta: &[Complex64]) -> Result<StormerData> {
    check_preconditions(phi, eta, 0)?;
    let d = omega_density(phi, eta)?;
    if phi.dim_in == 2 {
        let eig = linalg::herm_eig_unchecked(&d);
        if eig.min_eigenvalue().abs() <= DEFAULT.ker {
            let face = FaceSpec {
                xi: eig.eigenvector(0),
                eta: eta.to_vec(),
            };
            if face_membership(phi, &face, FACE_TOL)? {
                return face_decomposition(phi, &face, d);
            }
        }
    }
    numerical_decomposition(phi, eta, d)
}

/// Face construction for `φ ∈ F_{ξ,η}` on `M_2`.
pub fn build_face_decomposition(phi: &MapObject, face: &FaceSpec) -> Result<StormerData> {
    face.validate()?;
    if phi.dim_in != 2 || phi.dim_out != 2 {
        return Err(Error::DimensionMismatch("the face construction is for maps on M_2".into()));
    }
    check_preconditions(phi, &face.eta, 0)?;
    let (_, kill) = face_residuals(phi, face)?;
    if kill > FACE_TOL {
        return Err(Error::NotInFace(kill));
    }
    let d = omega_density(phi, &face.eta)?;
    face_decomposition(phi, face, d)
}

fn face_decomposition(phi: &MapObject, face: &FaceSpec, d: ComplexMatrix) -> Result<StormerData> {
    let w = face.xi_basis();
    let e = |i: usize, j: usize| face.unit(i, j);
    let eta1 = face.eta.clone();
    let mut eta2 = complement(&eta1);
    let s2 = std::f64::consts::SQRT_2;
    let image_eta = |a: &ComplexMatrix| -> Result<Vec<Complex64>> { Ok(phi.apply(a)?.apply(&eta1)) };

    // Pin the phase of η₂ so α (else β) is real and nonnegative.
    let raw_alpha = linalg::dot(&eta2, &image_eta(&e(0, 1))?) * s2;
    let raw_beta = linalg::dot(&eta2, &image_eta(&e(1, 0))?) * s2;
    let pivot = if raw_alpha.norm() > FACE_TOL { raw_alpha } else { raw_beta };
    if pivot.norm() > FACE_TOL {
        let phase = pivot / pivot.norm();
        eta2.iter_mut().for_each(|z| *z *= phase);
    }

    // K coordinates: columns of V_η are V k1 = √2 φ(e12)η, V k2 = √2 φ(e21)η,
    // V k3 = φ(e22)η, V k4 = 0.
    let cols = [
        image_eta(&e(0, 1))?.iter().map(|z| z * s2).collect::<Vec<_>>(),
        image_eta(&e(1, 0))?.iter().map(|z| z * s2).collect(),
        image_eta(&e(1, 1))?,
        vec![ZERO; 2],
    ];
    let v_eta = ComplexMatrix::from_fn(2, 4, |i, j| cols[j][i]);
    let h = column_matrix(&[&eta1, &eta2]);
    let v_matrix = h.adjoint() * &v_eta;

    // Representatives (a_l, a_r) of k1..k4 and their Gram matrix under
    // ⟨⟨[a1]_l ⊕ [a2]_r, [b1]_l ⊕ [b2]_r⟩⟩ = ½ω(a1* b1) + ½ω(b2 a2*).
    let reps = [
        (e(0, 1).scale_real(s2), e(0, 1).scale_real(s2)),
        (e(1, 0).scale_real(s2), e(1, 0).scale_real(s2)),
        (e(1, 1), e(1, 1)),
        (e(1, 1), e(1, 1).scale_real(-1.0)),
    ];
    let gram = ComplexMatrix::from_fn(4, 4, |i, j| {
        let (a1, a2) = &reps[i];
        let (b1, b2) = &reps[j];
        (omega(&d, &(a1.adjoint() * b1)) + omega(&d, &(b2 * &a2.adjoint()))) * 0.5
    });

    let r = std::f64::consts::FRAC_1_SQRT_2;
    let s = ComplexMatrix::from_fn(4, 4, |i, j| {
        let v = match (i, j) {
            (0, 0) | (1, 2) => 1.0,
            (2, 1) | (2, 3) | (3, 1) => r,
            (3, 3) => -r,
            _ => 0.0,
        };
        Complex64::new(v, 0.0)
    });
    let g_projection = ComplexMatrix::from_real_diag(&[1.0, 1.0, 1.0, 0.0]);
    let v_norm = linalg::operator_norm(&v_eta);
    Ok(StormerData {
        eta: eta1,
        omega_eta: d,
        left_ideal_basis: vec![e(0, 0), e(1, 0)],
        right_ideal_basis: vec![e(0, 0), e(0, 1)],
        k_dim: 4,
        k_labels: ["k1", "k2", "k3", "k4"].iter().map(|s| s.to_string()).collect(),
        gram,
        v_eta,
        v_norm,
        g_projection,
        face: Some(FaceData {
            xi: face.xi.clone(),
            eta2,
            alpha: v_matrix[(1, 0)],
            beta: v_matrix[(1, 1)],
            v_matrix,
        }),
        rep: Representation::Face { xi_basis: w, s },
    })
}

/// Scaled eigenbasis embedding of a PSD Gram form: rows map `vec(a)` to
/// orthonormal class coordinates; also returns kernel matrices.
fn quotient_embedding(gram: &ComplexMatrix, m: usize) -> (ComplexMatrix, ComplexMatrix, Vec<ComplexMatrix>) {
    let eig = linalg::herm_eig_unchecked(gram);
    let keep: Vec<usize> = (0..eig.dim()).filter(|&k| eig.eigenvalues[k] > DEFAULT.ker).collect();
    let kernel = (0..eig.dim())
        .filter(|k| !keep.contains(k))
        .map(|k| ComplexMatrix::unvectorize(m, m, &eig.eigenvector(k)))
        .collect();
    let d = gram.rows();
    let mut emb = ComplexMatrix::zeros(keep.len(), d);
    let mut pinv = ComplexMatrix::zeros(d, keep.len());
    for (r, &k) in keep.iter().enumerate() {
        let scale = (eig.eigenvalues[k] / 2.0).sqrt();
        let v = eig.eigenvector(k);
        for c in 0..d {
            emb[(r, c)] = v[c].conj() * scale;
            pinv[(c, r)] = v[c] / scale;
        }
    }
    (emb, pinv, kernel)
}

fn numerical_decomposition(phi: &MapObject, eta: &[Complex64], d: ComplexMatrix) -> Result<StormerData> {
    let m = phi.dim_in;
    let idx = |i: usize, j: usize| i * m + j;
    // G_L[(ij),(kl)] = ω(E_ji E_kl) = δ_ik ω(E_jl); G_R[(ij),(kl)] = ω(E_kl E_ji) = δ_lj ω(E_ki)
    let mut gl = ComplexMatrix::zeros(m * m, m * m);
    let mut gr = ComplexMatrix::zeros(m * m, m * m);
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    if i == k {
                        gl[(idx(i, j), idx(k, l))] = d[(l, j)];
                    }
                    if l == j {
                        gr[(idx(i, j), idx(k, l))] = d[(i, k)];
                    }
                }
            }
        }
    }
    let (el, el_pinv, lk) = quotient_embedding(&gl, m);
    let (er, er_pinv, rk) = quotient_embedding(&gr, m);
    let (nl, nr) = (el.rows(), er.rows());
    let k_dim = nl + nr;
    let mut e = ComplexMatrix::zeros(k_dim, m * m);
    for c in 0..m * m {
        for r in 0..nl {
            e[(r, c)] = el[(r, c)];
        }
        for r in 0..nr {
            e[(nl + r, c)] = er[(r, c)];
        }
    }
    // V = F E⁺ with F vec(a) = φ(a)η; E⁺ vanishes on G'.
    let f = ComplexMatrix::from_fn(m, m * m, |row, c| {
        let (i, j) = (c / m, c % m);
        phi.apply(&ComplexMatrix::unit(m, i, j)).expect("square").apply(eta)[row]
    });
    let eet = &e * &e.adjoint();
    let e_pinv = e.adjoint() * &linalg::psd_pseudo_inverse(&eet, DEFAULT.ker);
    let v_eta = &f * &e_pinv;
    let g_projection = &e * &e_pinv;
    let gram = ComplexMatrix::identity(k_dim);
    let labels = (0..nl).map(|k| format!("l{k}")).chain((0..nr).map(|k| format!("r{k}"))).collect();
    let v_norm = linalg::operator_norm(&v_eta);
    Ok(StormerData {
        eta: eta.to_vec(),
        omega_eta: d,
        left_ideal_basis: lk,
        right_ideal_basis: rk,
        k_dim,
        k_labels: labels,
        gram,
        v_eta,
        v_norm,
        g_projection,
        face: None,
        rep: Representation::Numerical { el, el_pinv, er, er_pinv },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LocdecReport {
    pub samples: usize,
    /// `max ‖φ(a)η − V_η ρ_η(a) V_η* η‖` over the samples.
    pub max_residual: f64,
    pub passed: bool,
    pub k_dim: usize,
    pub v_norm: f64,
    pub face_path: bool,
}

pub fn verify_locdec(phi: &MapObject, eta: &[Complex64], samples: usize, seed: u64, tol: f64) -> Result<LocdecReport> {
    let data = build_local_decomposition(phi, eta)?;
    let mut rng = random::rng(seed);
    let m = phi.dim_in;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let a = random::ginibre(m, m, &mut rng);
        let lhs = phi.apply(&a)?.apply(eta);
        let rhs = data.reconstruct(&a)?.apply(eta);
        let r = lhs.iter().zip(&rhs).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(r);
    }
    Ok(LocdecReport {
        samples,
        max_residual: worst,
        passed: worst <= tol,
        k_dim: data.k_dim,
        v_norm: data.v_norm,
        face_path: data.face.is_some(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct JordanReport {
    pub samples: usize,
    /// `max ‖ρ(ab+ba) − ρ(a)ρ(b) − ρ(b)ρ(a)‖_F`.
    pub jordan_residual: f64,
    /// `‖ρ(I) − I‖_F`.
    pub unit_residual: f64,
    /// `max ‖ρ_l(ab) − ρ_l(a)ρ_l(b)‖_F`.
    pub left_multiplicative_residual: f64,
    /// `max ‖ρ_r(ab) − ρ_r(b)ρ_r(a)‖_F`.
    pub right_antimultiplicative_residual: f64,
}

pub fn check_jordan(data: &StormerData, samples: usize, seed: u64) -> Result<JordanReport> {
    let m = data.dim_in();
    let mut rng = random::rng(seed);
    let mut report = JordanReport {
        samples,
        jordan_residual: 0.0,
        unit_residual: data.rho(&ComplexMatrix::identity(m))?.distance(&ComplexMatrix::identity(data.k_dim)),
        left_multiplicative_residual: 0.0,
        right_antimultiplicative_residual: 0.0,
    };
    for _ in 0..samples {
        let a = random::ginibre(m, m, &mut rng);
        let b = random::ginibre(m, m, &mut rng);
        let (ra, rb) = (data.rho(&a)?, data.rho(&b)?);
        let sym = data.rho(&(&a * &b + &b * &a))?;
        report.jordan_residual = report.jordan_residual.max(sym.distance(&(&ra * &rb + &rb * &ra)));
        let (la, ra_) = data.rho_parts(&a)?;
        let (lb, rb_) = data.rho_parts(&b)?;
        let (lab, rab) = data.rho_parts(&(&a * &b))?;
        report.left_multiplicative_residual = report.left_multiplicative_residual.max(lab.distance(&(&la * &lb)));
        report.right_antimultiplicative_residual =
            report.right_antimultiplicative_residual.max(rab.distance(&(&rb_ * &ra_)));
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct Prop41Report {
    /// `|Tr φ(e12)|`, `|Tr φ(e21)|`, `|Tr φ(e22) − 1|`.
    pub trace_residuals: [f64; 3],
    /// `|Tr φ(e11) − 2(|⟨η₂,φ(e12)η₁⟩|² + |⟨η₂,φ(e21)η₁⟩|²)|`.
    pub alpha_beta_residual: f64,
    /// `max_ij ‖φ(e_ij) − V_η ρ_η(e_ij) V_η*‖_F`.
    pub global_residual: f64,
    /// `‖φ(e_ij)η₂ − V_η ρ_η(e_ij) V_η* η₂‖` in the order e11, e12, e21, e22.
    pub eta2_residuals: [f64; 4],
    pub alpha: Complex64,
    pub beta: Complex64,
    pub v_matrix: ComplexMatrix,
    pub v_norm: f64,
    pub conditions_hold: bool,
    pub equality_holds: bool,
    pub inconsistent: bool,
}

impl Prop41Report {
    pub fn condition_residual(&self) -> f64 {
        self.trace_residuals.iter().copied().fold(self.alpha_beta_residual, f64::max)
    }
}

/// Evaluates both sides of the face criterion: the trace conditions and the
/// global equality `φ = V_η ρ_η(·) V_η*`. The two verdicts are flagged as
/// inconsistent only when one fails by more than `10·tol` while the other holds.
pub fn check_prop41(phi: &MapObject, face: &FaceSpec, tol: f64) -> Result<Prop41Report> {
    let data = build_face_decomposition(phi, face)?;
    let fd = data.face.as_ref().expect("face path");
    let e = |i: usize, j: usize| face.unit(i, j);
    let tr = |i: usize, j: usize| -> Result<Complex64> { Ok(phi.apply(&e(i, j))?.trace()) };
    let trace_residuals = [tr(0, 1)?.norm(), tr(1, 0)?.norm(), (tr(1, 1)? - 1.0).norm()];
    let a = fd.alpha.norm_sqr() / 2.0;
    let b = fd.beta.norm_sqr() / 2.0;
    let alpha_beta_residual = (tr(0, 0)? - 2.0 * (a + b)).norm();

    let mut global: f64 = 0.0;
    let mut eta2_residuals = [0.0; 4];
    for (slot, (i, j)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
        let lhs = phi.apply(&e(i, j))?;
        let rhs = data.reconstruct(&e(i, j))?;
        global = global.max(lhs.distance(&rhs));
        let diff = (&lhs - &rhs).apply(&fd.eta2);
        eta2_residuals[slot] = linalg::vec_norm(&diff);
    }
    let cond = trace_residuals.iter().copied().fold(alpha_beta_residual, f64::max);
    let conditions_hold = cond <= tol;
    let equality_holds = global <= tol;
    let inconsistent = (cond > 10.0 * tol && equality_holds) || (global > 10.0 * tol && conditions_hold);
    Ok(Prop41Report {
        trace_residuals,
        alpha_beta_residual,
        global_residual: global,
        eta2_residuals,
        alpha: fd.alpha,
        beta: fd.beta,
        v_matrix: fd.v_matrix.clone(),
        v_norm: data.v_norm,
        conditions_hold,
        equality_holds,
        inconsistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn face_membership_examples() {
        let ad = MapObject::adjoint_conjugation(&maps::pauli_x());
        assert!(face_membership(&ad, &FaceSpec::e1(), 1e-12).unwrap());
        assert!(!face_membership(&MapObject::identity(2), &FaceSpec::e1(), 1e-12).unwrap());
        let non_unital = ad.scale(0.5);
        assert!(!face_membership(&non_unital, &FaceSpec::e1(), 1e-12).unwrap());
        assert!(face_membership(&MapObject::identity(3), &FaceSpec::e1(), 1e-12).is_err());
    }

    #[test]
    fn face_maps_are_in_face_and_positive() {
        let mut rng = random::rng(5);
        for seed in 0..20 {
            let face = FaceSpec::new(random::unit_vector(2, &mut rng), random::unit_vector(2, &mut rng)).unwrap();
            let phi = sample_face_map(&face, 1 + (seed as usize % 3), seed).unwrap();
            assert!(face_membership(&phi, &face, 1e-10).unwrap(), "seed {seed}");
            assert!(!maps::k_positivity_search(&phi, 1, 8, seed, 1e-10).unwrap().is_violation());
        }
    }

    #[test]
    fn phi_sym_is_a_face_map() {
        let phi = phi_sym();
        assert!(face_membership(&phi, &FaceSpec::e1(), 1e-14).unwrap());
        // equal weights, U = V = σ_x
        let e12 = ComplexMatrix::unit(2, 0, 1);
        let expected = ComplexMatrix::from_fn(2, 2, |i, j| if i != j { c(0.5, 0.0) } else { ZERO });
        assert!(phi.apply(&e12).unwrap().distance(&expected) < 1e-15);
    }

    #[test]
    fn v_matrix_examples() {
        let ad = MapObject::adjoint_conjugation(&maps::pauli_x());
        let data = build_face_decomposition(&ad, &FaceSpec::e1()).unwrap();
        let fd = data.face.unwrap();
        let s2 = std::f64::consts::SQRT_2;
        let expected = ComplexMatrix::from_vec(
            2,
            4,
            vec![ZERO, ZERO, ONE, ZERO, c(s2, 0.0), ZERO, ZERO, ZERO],
        )
        .unwrap();
        assert!(fd.v_matrix.distance(&expected) < 1e-14);

        let data = build_face_decomposition(&phi_sym(), &FaceSpec::e1()).unwrap();
        let fd = data.face.unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((fd.alpha - c(r, 0.0)).norm() < 1e-14 && (fd.beta - c(r, 0.0)).norm() < 1e-14);
        assert!(data.gram.distance(&ComplexMatrix::identity(4)) < 1e-12);
    }

    #[test]
    fn face_detected_from_eta() {
        let data = build_local_decomposition(&phi_sym(), &[ONE, ZERO]).unwrap();
        assert_eq!(data.k_dim, 4);
        assert!(data.face.is_some());
        let mut rng = random::rng(1);
        let eta = random::unit_vector(2, &mut rng);
        let data = build_local_decomposition(&phi_sym(), &eta).unwrap();
        assert!(data.face.is_none());
        assert_eq!(data.k_dim, 8);
    }

    #[test]
    fn rejects_bad_inputs() {
        let half = MapObject::identity(2).scale(0.5);
        assert!(matches!(build_local_decomposition(&half, &[ONE, ZERO]), Err(Error::NotUnital(_))));
        let neg = MapObject::from_fn(2, 2, "neg", |a| {
            a.scale_real(3.0) - ComplexMatrix::identity(2).scale(a.trace())
        })
        .unwrap();
        assert!(matches!(build_local_decomposition(&neg, &[ONE, ZERO]), Err(Error::NotPositiveEvidence(_))));
        assert!(matches!(
            build_face_decomposition(&MapObject::identity(2), &FaceSpec::e1()),
            Err(Error::NotInFace(_))
        ));
    }

    #[test]
    fn locdec_examples() {
        let ad = MapObject::adjoint_conjugation(&maps::pauli_x());
        assert!(verify_locdec(&ad, &[ONE, ZERO], 100, 1, 1e-10).unwrap().passed);
        assert!(verify_locdec(&MapObject::identity(2), &[ONE, ZERO], 100, 1, 1e-10).unwrap().passed);
        let mut rng = random::rng(2);
        for seed in 0..10 {
            let face = FaceSpec::new(random::unit_vector(2, &mut rng), random::unit_vector(2, &mut rng)).unwrap();
            let phi = sample_face_map(&face, 2, seed).unwrap();
            let eta = random::unit_vector(2, &mut rng);
            let r = verify_locdec(&phi, &eta, 20, seed, 1e-9).unwrap();
            assert!(r.passed, "seed {seed}: {}", r.max_residual);
        }
    }

    #[test]
    fn locdec_on_m3() {
        let phi = maps::random_unitary_mixture(3, 4);
        let mut rng = random::rng(4);
        let eta = random::unit_vector(3, &mut rng);
        let r = verify_locdec(&phi, &eta, 20, 4, 1e-9).unwrap();
        assert!(r.passed, "{}", r.max_residual);
    }

    #[test]
    fn rho_is_jordan() {
        let data = build_face_decomposition(&phi_sym(), &FaceSpec::e1()).unwrap();
        let j = check_jordan(&data, 50, 1).unwrap();
        assert!(j.jordan_residual < 1e-9 && j.unit_residual < 1e-12);
        assert!(j.left_multiplicative_residual < 1e-9 && j.right_antimultiplicative_residual < 1e-9);
        let mut rng = random::rng(3);
        let eta = random::unit_vector(2, &mut rng);
        let data = build_local_decomposition(&maps::random_unital_positive_m2(3), &eta).unwrap();
        let j = check_jordan(&data, 50, 1).unwrap();
        assert!(j.jordan_residual < 1e-9 && j.unit_residual < 1e-9, "{j:?}");
    }

    #[test]
    fn prop41_examples() {
        let r = check_prop41(&phi_sym(), &FaceSpec::e1(), 1e-10).unwrap();
        assert!(r.conditions_hold && r.equality_holds && !r.inconsistent);
        assert!(r.global_residual <= 1e-10);

        let ad = MapObject::adjoint_conjugation(&maps::pauli_x());
        let r = check_prop41(&ad, &FaceSpec::e1(), 1e-10).unwrap();
        assert!(!r.conditions_hold && !r.equality_holds && !r.inconsistent);
        assert!((r.alpha_beta_residual - 1.0).abs() < 1e-12);
        assert!((r.eta2_residuals[0] - 1.0).abs() < 1e-8);

        let r = check_prop41(&diagonal_flip(), &FaceSpec::e1(), 1e-10).unwrap();
        assert!(!r.conditions_hold && !r.equality_holds && !r.inconsistent);
        assert!(r.alpha.norm() < 1e-14 && r.beta.norm() < 1e-14);
    }

    #[test]
    fn sampled_face_maps_are_iff_consistent() {
        let mut rng = random::rng(9);
        for seed in 0..20 {
            let face = FaceSpec::new(random::unit_vector(2, &mut rng), random::unit_vector(2, &mut rng)).unwrap();
            let phi = sample_face_map(&face, 1 + seed as usize % 4, seed).unwrap();
            let r = check_prop41(&phi, &face, 1e-9).unwrap();
            assert!(!r.inconsistent, "seed {seed}: {r:?}");
            let v = &r.v_matrix;
            for (i, j) in [(0, 0), (0, 1), (1, 2), (1, 3)] {
                assert!(v[(i, j)].norm() < 1e-10, "seed {seed}: V[{i}][{j}] = {}", v[(i, j)]);
            }
            assert!((v[(0, 2)] - ONE).norm() < 1e-10);
        }
    }

    #[test]
    fn face_json() {
        let f: FaceSpec = serde_json::from_str(r#"{"xi":[[1,0],[0,0]],"eta":[[0,0],[1,0]]}"#).unwrap();
        assert_eq!(f.eta, vec![ZERO, ONE]);
    }
}
