//! Single rotation averaging: the geodesic L1 median (Weiszfeld iteration
//! in the tangent space) and the L2 Karcher mean.
//!
//! Both iterations only ever accept steps that do not increase their
//! objective, backtracking by step halving otherwise, so the reported cost
//! trace is monotone. Non-convergence within the iteration budget is not an
//! error; the best iterate is returned with `converged = false`.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::so3::{exp_map, log_map, RotationMatrix};

/// Geodesic distances below this floor get their Weiszfeld weight capped,
/// keeping the iteration finite when the estimate lands on a sample.
pub const WEIGHT_FLOOR: f64 = 1e-9;

/// Default convergence threshold on the tangent step norm, in radians.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Default iteration budget.
pub const DEFAULT_MAX_ITER: usize = 1000;

const MAX_HALVINGS: usize = 40;

/// Outcome of an averaging run.
#[derive(Debug, Clone, Copy)]
pub struct AveragingResult {
    pub rotation: RotationMatrix,
    /// Sum of geodesic distances (L1) or squared distances (L2) at
    /// `rotation`.
    pub final_cost: f64,
    pub converged: bool,
    /// Number of accepted update steps.
    pub iterations: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum Objective {
    L1,
    L2,
}

/// Entrywise mean of the samples projected back onto SO(3). Falls back to
/// the first sample when the mean is singular (e.g. an antipodal pair).
pub fn chordal_initializer(samples: &[RotationMatrix]) -> Result<RotationMatrix> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("rotation average of no samples"));
    }
    let mean = samples
        .iter()
        .fold(nalgebra::Matrix3::<f64>::zeros(), |acc, r| acc + r.matrix())
        / samples.len() as f64;
    Ok(crate::so3::project_to_rotation(&mean).unwrap_or(samples[0]))
}

/// One evaluation pass: objective value at `r` plus the Weiszfeld (L1) or
/// Karcher (L2) tangent step away from `r`.
fn pass(
    samples: &[RotationMatrix],
    r: &RotationMatrix,
    objective: Objective,
) -> (f64, Vector3<f64>) {
    let rt = r.transpose();
    let mut cost = 0.0;
    let mut num = Vector3::zeros();
    let mut den = 0.0;
    for s in samples {
        let v = log_map(&(*s * rt));
        let d = v.norm();
        match objective {
            Objective::L1 => {
                let w = 1.0 / d.max(WEIGHT_FLOOR);
                cost += d;
                num += v * w;
                den += w;
            }
            Objective::L2 => {
                cost += d * d;
                num += v;
                den += 1.0;
            }
        }
    }
    (cost, num / den)
}

fn average(
    samples: &[RotationMatrix],
    init: Option<&RotationMatrix>,
    tol: f64,
    max_iter: usize,
    objective: Objective,
) -> Result<AveragingResult> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("rotation average of no samples"));
    }
    if samples.len() == 1 {
        return Ok(AveragingResult {
            rotation: samples[0],
            final_cost: 0.0,
            converged: true,
            iterations: 0,
        });
    }

    let mut r = match init {
        Some(r0) => *r0,
        None => chordal_initializer(samples)?,
    };
    let (mut cost, mut delta) = pass(samples, &r, objective);
    let mut iterations = 0;

    for _ in 0..max_iter {
        if delta.norm() <= tol {
            return Ok(AveragingResult {
                rotation: r,
                final_cost: cost,
                converged: true,
                iterations,
            });
        }
        let mut step = delta;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let candidate = exp_map(&step) * r;
            let (cand_cost, cand_delta) = pass(samples, &candidate, objective);
            if cand_cost <= cost {
                debug_assert!(cand_cost <= cost);
                r = candidate;
                cost = cand_cost;
                delta = cand_delta;
                iterations += 1;
                accepted = true;
                break;
            }
            step *= 0.5;
            if step.norm() <= tol {
                break;
            }
        }
        if !accepted {
            // No descent direction at any step length: numerically stationary.
            return Ok(AveragingResult {
                rotation: r,
                final_cost: cost,
                converged: step_is_tiny(&delta, tol),
                iterations,
            });
        }
    }
    Ok(AveragingResult {
        rotation: r,
        final_cost: cost,
        converged: false,
        iterations,
    })
}

fn step_is_tiny(delta: &Vector3<f64>, tol: f64) -> bool {
    delta.norm() * 0.5f64.powi(MAX_HALVINGS as i32) <= tol
}

/// Geodesic L1 median with default tolerance and iteration budget,
/// initialized by [`chordal_initializer`].
pub fn geodesic_l1_median(samples: &[RotationMatrix]) -> Result<AveragingResult> {
    average(samples, None, DEFAULT_TOL, DEFAULT_MAX_ITER, Objective::L1)
}

/// Geodesic L1 median with explicit initializer, tolerance, and budget.
/// Passing a warm-start initializer is the intended use for callers that
/// solve many nearby instances.
pub fn geodesic_l1_median_with(
    samples: &[RotationMatrix],
    init: Option<&RotationMatrix>,
    tol: f64,
    max_iter: usize,
) -> Result<AveragingResult> {
    average(samples, init, tol, max_iter, Objective::L1)
}

/// Karcher (geodesic L2) mean with default tolerance and iteration budget.
pub fn geodesic_l2_mean(samples: &[RotationMatrix]) -> Result<AveragingResult> {
    average(samples, None, DEFAULT_TOL, DEFAULT_MAX_ITER, Objective::L2)
}

/// Karcher mean with explicit initializer, tolerance, and budget.
pub fn geodesic_l2_mean_with(
    samples: &[RotationMatrix],
    init: Option<&RotationMatrix>,
    tol: f64,
    max_iter: usize,
) -> Result<AveragingResult> {
    average(samples, init, tol, max_iter, Objective::L2)
}
