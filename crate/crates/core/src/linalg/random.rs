//! Seeded random ensembles. Every generator takes an explicit RNG or seed so
//! results are reproducible across runs and platforms.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::matrix::{dot, ComplexMatrix};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Per-trial seed derivation: trial `i` of a run seeded with `seed`.
pub fn derived_seed(seed: u64, index: u64) -> u64 {
    seed.wrapping_add(index)
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Complex Ginibre matrix: real and imaginary parts i.i.d. N(0, 1).
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// `G G*` for an `n × n` Ginibre `G`.
pub fn sample_psd(n: usize, seed: u64) -> ComplexMatrix {
    let mut r = rng(seed);
    psd_with_rank(n, n, &mut r)
}

/// `G G*` for an `n × rank` Ginibre `G`.
pub fn psd_with_rank<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(n, rank, rng);
    (&g * &g.adjoint()).hermitian_part()
}

/// `(G + G*) / 2`.
pub fn hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    ginibre(n, n, rng).hermitian_part()
}

/// Uniform unit vector in `ℂ^n`.
pub fn unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..n).map(|_| complex_gaussian(rng)).collect();
        let norm = super::matrix::vec_norm(&v);
        if norm > 1e-8 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// Haar-random unitary: Gram–Schmidt on a Ginibre matrix, which is the QR
/// factor with a positive-diagonal `R`.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(n, n, rng);
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = g.col(j);
        // two passes for numerical orthogonality
        for _ in 0..2 {
            for u in &cols {
                let p = dot(u, &v);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= p * ui;
                }
            }
        }
        let norm = super::matrix::vec_norm(&v);
        cols.push(v.into_iter().map(|z| z / norm).collect());
    }
    let mut u = ComplexMatrix::zeros(n, n);
    for (j, c) in cols.iter().enumerate() {
        u.set_col(j, c);
    }
    u
}

/// Random faithful density matrix: normalized `G G* + ε I`, with a floor on
/// the spectrum so every eigenvalue is at least `min_eig`.
pub fn faithful_density<R: Rng + ?Sized>(n: usize, min_eig: f64, rng: &mut R) -> ComplexMatrix {
    let w = psd_with_rank(n, n, rng);
    let tr = w.trace().re;
    let w = w.scale_real(1.0 / tr);
    let floor = min_eig * n as f64;
    let mixed = w.scale_real(1.0 - floor) + ComplexMatrix::identity(n).scale_real(min_eig);
    let tr = mixed.trace().re;
    mixed.scale_real(1.0 / tr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampler_is_deterministic() {
        assert_eq!(sample_psd(3, 42), sample_psd(3, 42));
        assert_ne!(sample_psd(3, 42), sample_psd(3, 43));
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut r = rng(5);
        for n in 1..6 {
            let u = haar_unitary(n, &mut r);
            let e = (&u.adjoint() * &u).distance(&ComplexMatrix::identity(n));
            assert!(e < 1e-13, "n={n}: {e}");
        }
    }

    #[test]
    fn faithful_density_has_unit_trace() {
        let mut r = rng(9);
        let rho = faithful_density(4, 0.02, &mut r);
        assert!((rho.trace().re - 1.0).abs() < 1e-14);
        assert!(rho.hermitian_deviation() < 1e-15);
    }
}
