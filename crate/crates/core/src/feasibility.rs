//! Dykstra's alternating projection method for the two convex feasibility
//! problems used throughout: projecting onto an intersection of two closed
//! convex sets, and splitting a matrix as a sum of members of two cones.

use serde::Serialize;

use crate::linalg::ComplexMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DykstraParams {
    pub tol: f64,
    pub max_iter: usize,
    pub stall_ratio: f64,
    pub stall_window: usize,
}

impl DykstraParams {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self {
            tol,
            max_iter,
            stall_ratio: crate::tolerances::DEFAULT.stall_ratio,
            stall_window: crate::tolerances::DEFAULT.stall_window,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IntersectionOutcome {
    pub point: ComplexMatrix,
    pub iterations: usize,
    /// Distance between the last two half-step iterates.
    pub gap: f64,
}

/// Projects `x0` onto `A ∩ B` given the two projectors.
pub fn project_intersection(
    x0: &ComplexMatrix,
    project_a: impl Fn(&ComplexMatrix) -> ComplexMatrix,
    project_b: impl Fn(&ComplexMatrix) -> ComplexMatrix,
    params: DykstraParams,
) -> IntersectionOutcome {
    let n = x0.rows();
    let mut x = x0.clone();
    let mut p = ComplexMatrix::zeros(n, n);
    let mut q = ComplexMatrix::zeros(n, n);
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    while iterations < params.max_iter {
        iterations += 1;
        let y = project_a(&(&x + &p));
        p = &(&x + &p) - &y;
        let x_next = project_b(&(&y + &q));
        q = &(&y + &q) - &x_next;
        gap = y.distance(&x_next);
        let step = x.distance(&x_next);
        x = x_next;
        if gap <= params.tol && step <= params.tol {
            break;
        }
    }
    IntersectionOutcome {
        point: x,
        iterations,
        gap,
    }
}

#[derive(Debug, Clone)]
pub struct SplitOutcome {
    /// Member of the first cone.
    pub first: ComplexMatrix,
    /// Member of the second cone.
    pub second: ComplexMatrix,
    /// `‖c − first − second‖_F`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stalled: bool,
}

/// Searches for `c = a + b` with `a ∈ A`, `b ∈ B` by Dykstra iteration in the
/// product space between `A × B` and the affine set `{(a, b) : a + b = c}`.
///
/// The returned pair always satisfies membership exactly (it is the output of
/// the product projection); `residual` measures how far the sum is from `c`.
pub fn cone_split(
    c: &ComplexMatrix,
    project_a: impl Fn(&ComplexMatrix) -> ComplexMatrix,
    project_b: impl Fn(&ComplexMatrix) -> ComplexMatrix,
    params: DykstraParams,
) -> SplitOutcome {
    let n = c.rows();

    // Cheap exact splits first.
    let pa = project_a(c);
    if pa.distance(c) <= params.tol {
        return SplitOutcome {
            first: pa.clone(),
            second: ComplexMatrix::zeros(n, n),
            residual: c.distance(&pa),
            iterations: 0,
            converged: true,
            stalled: false,
        };
    }
    let pb = project_b(c);
    if pb.distance(c) <= params.tol {
        return SplitOutcome {
            first: ComplexMatrix::zeros(n, n),
            second: pb.clone(),
            residual: c.distance(&pb),
            iterations: 0,
            converged: true,
            stalled: false,
        };
    }

    let half = c.scale_real(0.5);
    let (mut xa, mut xb) = (half.clone(), half);
    let zero = ComplexMatrix::zeros(n, n);
    let (mut pa_corr, mut pb_corr) = (zero.clone(), zero.clone());
    let (mut qa_corr, mut qb_corr) = (zero.clone(), zero);

    let mut best: Option<(ComplexMatrix, ComplexMatrix, f64)> = None;
    let mut window_start = f64::INFINITY;
    let mut iterations = 0;
    let mut stalled = false;

    while iterations < params.max_iter {
        iterations += 1;

        // Product cone step.
        let ua = &xa + &pa_corr;
        let ub = &xb + &pb_corr;
        let ya = project_a(&ua);
        let yb = project_b(&ub);
        pa_corr = &ua - &ya;
        pb_corr = &ub - &yb;

        let residual = c.distance(&(&ya + &yb));
        if best.as_ref().is_none_or(|b| residual < b.2) {
            best = Some((ya.clone(), yb.clone(), residual));
        }
        if residual <= params.tol {
            break;
        }

        // Affine step: shift both halves equally onto a + b = c.
        let va = &ya + &qa_corr;
        let vb = &yb + &qb_corr;
        let shift = (c - &(&va + &vb)).scale_real(0.5);
        let xa_next = &va + &shift;
        let xb_next = &vb + &shift;
        qa_corr = &va - &xa_next;
        qb_corr = &vb - &xb_next;
        xa = xa_next;
        xb = xb_next;

        if iterations % params.stall_window == 0 {
            let current = best.as_ref().map_or(f64::INFINITY, |b| b.2);
            if window_start.is_finite() && window_start - current < params.stall_ratio * window_start {
                stalled = true;
                break;
            }
            window_start = current;
        }
    }

    let (first, second, residual) = best.expect("at least one iteration");
    SplitOutcome {
        first,
        second,
        converged: residual <= params.tol,
        residual,
        iterations,
        stalled,
    }
}
