//! Numerical tolerances shared by every module.
//!
//! Each acceptance threshold in the test suites is expressed against these
//! defaults, so changing a value here is the one place to retune.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative reconstruction accuracy of the Hermitian eigensolver.
    pub eig: f64,
    /// Hermiticity check: `‖H − H*‖_F ≤ herm · max(1, ‖H‖_F)`.
    pub herm: f64,
    /// Smallest eigenvalue accepted as strictly positive.
    pub pd: f64,
    /// Eigenvalue cutoff defining the kernel of a PSD Gram form.
    pub ker: f64,
    /// Trace tolerance for density matrices.
    pub trace: f64,
    /// Default cone membership tolerance.
    pub cone: f64,
    /// Default Dykstra iteration cap.
    pub max_iter: usize,
    /// Relative residual decrease over `stall_window` iterations below which
    /// Dykstra is declared stalled.
    pub stall_ratio: f64,
    pub stall_window: usize,
    /// Convergence threshold for the per-restart see-saw objective.
    pub seesaw: f64,
    pub seesaw_max_sweeps: usize,
    pub seesaw_restarts: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        DEFAULT
    }
}

pub const DEFAULT: Tolerances = Tolerances {
    eig: 1e-12,
    herm: 1e-10,
    pd: 1e-12,
    ker: 1e-10,
    trace: 1e-10,
    cone: 1e-8,
    max_iter: 5000,
    stall_ratio: 1e-12,
    stall_window: 100,
    seesaw: 1e-12,
    seesaw_max_sweeps: 500,
    seesaw_restarts: 32,
};

impl Tolerances {
    /// Hermiticity threshold scaled to the matrix size.
    pub fn herm_threshold(&self, frobenius: f64) -> f64 {
        self.herm * frobenius.max(1.0)
    }
}
