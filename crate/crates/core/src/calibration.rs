//! Camera-to-marker rotation calibration.
//!
//! A marker-based ground-truth rig measures marker orientations, not camera
//! orientations; relating the two takes the fixed marker-to-camera rotation.
//! This module estimates that rotation jointly with the frame alignment by
//! minimizing the summed geodesic error
//!
//! ```text
//! sum_i d(markers[i] * r_mc * est[i]^T, r_align)
//! ```
//!
//! over both unknowns, using annealed random search: candidate `r_mc`
//! rotations are drawn in shrinking balls around the incumbent, and for each
//! fixed candidate the inner problem collapses to a geodesic L1 median.
//!
//! The minimization is only well-posed when the orientations genuinely
//! explore rotation space. If either orientation set only ever spins about
//! one common axis, a one-parameter family of solutions attains the exact
//! same cost; [`degeneracy_check`] detects this and the gauge-update helpers
//! materialize the family.

use nalgebra::Vector3;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rotation_averaging::geodesic_l1_median_with;
use crate::so3::{exp_map, geodesic_distance, log_map, random_unit_vector, RotationMatrix};

/// Ball radii (degrees) of the five annealing rounds.
pub const ANNEAL_SCHEDULE_DEG: [f64; 5] = [360.0, 30.0, 10.0, 3.0, 1.0];

/// Candidate draws per annealing round.
pub const SAMPLES_PER_ROUND: usize = 1000;

/// Default tolerance for treating rotation axes as parallel (radians).
pub const DEFAULT_DEGENERACY_TOL: f64 = 0.5 * std::f64::consts::PI / 180.0;

// Inner L1 solves during the search run at a slightly loose tolerance and
// warm-start from the incumbent alignment; the winning pair is re-solved
// tightly at the end.
const SEARCH_TOL: f64 = 1e-8;
const SEARCH_MAX_ITER: usize = 200;
const FINAL_TOL: f64 = 1e-10;
const FINAL_MAX_ITER: usize = 2000;

/// The summed geodesic calibration error at a fixed pair of unknowns.
pub fn calibration_cost(
    r_mc: &RotationMatrix,
    r_align: &RotationMatrix,
    markers: &[RotationMatrix],
    est: &[RotationMatrix],
) -> Result<f64> {
    check_inputs(markers, est)?;
    Ok(markers
        .iter()
        .zip(est)
        .map(|(m, e)| geodesic_distance(&(*m * *r_mc * e.transpose()), r_align))
        .sum())
}

fn check_inputs(markers: &[RotationMatrix], est: &[RotationMatrix]) -> Result<()> {
    if markers.is_empty() {
        return Err(Error::EmptyInput("marker orientations"));
    }
    if markers.len() != est.len() {
        return Err(Error::LengthMismatch {
            context: "marker vs estimated orientations",
            left: markers.len(),
            right: est.len(),
        });
    }
    Ok(())
}

/// Whether an orientation set pins the calibration down, and if not, the
/// axis all its relative rotations share.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegeneracyReport {
    pub degenerate: bool,
    /// The shared rotation axis (unit, sign-normalized) when degenerate.
    /// For the fixed-orientation case any axis works; a conventional one
    /// is reported.
    pub common_axis: Option<Vector3<f64>>,
    /// Largest angle between any relative-rotation axis and the reference
    /// axis, lines compared up to sign (radians).
    pub max_axis_deviation: f64,
}

/// Checks whether all relative rotations within the set share one axis.
///
/// Relative rotations with angle at most `tol` carry no usable axis and are
/// skipped; if every one of them is that small the set has a fixed
/// orientation, which is degenerate vacuously (any axis fits).
pub fn degeneracy_check(orientations: &[RotationMatrix], tol: f64) -> Result<DegeneracyReport> {
    if orientations.is_empty() {
        return Err(Error::EmptyInput("orientations"));
    }
    let first = &orientations[0];
    let mut reference: Option<Vector3<f64>> = None;
    let mut max_deviation = 0f64;
    for r in &orientations[1..] {
        let relative = *r * first.transpose();
        let w = log_map(&relative);
        let angle = w.norm();
        if angle <= tol {
            continue;
        }
        let axis = w / angle;
        match reference {
            None => reference = Some(axis),
            Some(reference) => {
                let deviation = axis.dot(&reference).abs().min(1.0).acos();
                max_deviation = max_deviation.max(deviation);
            }
        }
    }
    match reference {
        None => Ok(DegeneracyReport {
            degenerate: true,
            common_axis: Some(Vector3::z()),
            max_axis_deviation: 0.0,
        }),
        Some(axis) => {
            let degenerate = max_deviation <= tol;
            Ok(DegeneracyReport {
                degenerate,
                common_axis: degenerate.then_some(axis),
                max_axis_deviation: max_deviation,
            })
        }
    }
}

/// Per-round search trace: the running best cost after each candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrace {
    pub theta_max_deg: f64,
    pub best_costs: Vec<f64>,
}

/// Outcome of the annealed calibration search.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    /// Estimated marker-to-camera rotation.
    pub r_mc: RotationMatrix,
    /// Estimated frame alignment rotation.
    pub r_align: RotationMatrix,
    /// Cost at the returned pair (radians, sum over poses).
    pub final_cost: f64,
    pub schedule_trace: Vec<RoundTrace>,
    /// Axis analysis of the marker orientations.
    pub marker_degeneracy: DegeneracyReport,
    /// Axis analysis of the estimated orientations.
    pub estimate_degeneracy: DegeneracyReport,
}

impl CalibrationResult {
    /// True when either orientation set fails to pin the solution down;
    /// the returned pair is then one point of a cost-equivalent family.
    pub fn is_degenerate(&self) -> bool {
        self.marker_degeneracy.degenerate || self.estimate_degeneracy.degenerate
    }
}

/// Solves the inner single-rotation problem for a fixed `r_mc`.
fn solve_alignment(
    markers: &[RotationMatrix],
    est: &[RotationMatrix],
    r_mc: &RotationMatrix,
    warm: Option<&RotationMatrix>,
    tol: f64,
    max_iter: usize,
) -> Result<(RotationMatrix, f64)> {
    let samples: Vec<RotationMatrix> = markers
        .iter()
        .zip(est)
        .map(|(m, e)| *m * *r_mc * e.transpose())
        .collect();
    let solved = geodesic_l1_median_with(&samples, warm, tol, max_iter)?;
    Ok((solved.rotation, solved.final_cost))
}

fn annealed_search<R: Rng + ?Sized>(
    markers: &[RotationMatrix],
    est: &[RotationMatrix],
    init: RotationMatrix,
    schedule_deg: &[f64],
    rng: &mut R,
) -> Result<CalibrationResult> {
    let (mut best_align, mut best_cost) =
        solve_alignment(markers, est, &init, None, SEARCH_TOL, SEARCH_MAX_ITER)?;
    let mut incumbent = init;

    let mut schedule_trace = Vec::with_capacity(schedule_deg.len());
    for &theta_max_deg in schedule_deg {
        let theta_max = theta_max_deg.to_radians();
        let mut best_costs = Vec::with_capacity(SAMPLES_PER_ROUND);
        for _ in 0..SAMPLES_PER_ROUND {
            let theta = rng.random::<f64>() * theta_max;
            let axis = random_unit_vector(rng);
            let candidate = exp_map(&(axis * theta)) * incumbent;
            let (align, cost) = solve_alignment(
                markers,
                est,
                &candidate,
                Some(&best_align),
                SEARCH_TOL,
                SEARCH_MAX_ITER,
            )?;
            if cost < best_cost {
                best_cost = cost;
                best_align = align;
                incumbent = candidate;
            }
            best_costs.push(best_cost);
        }
        schedule_trace.push(RoundTrace {
            theta_max_deg,
            best_costs,
        });
    }

    // Tight re-solve of the alignment at the winning candidate; the final
    // cost is recomputed at the returned pair so the two always agree.
    let (r_align, _) = solve_alignment(
        markers,
        est,
        &incumbent,
        Some(&best_align),
        FINAL_TOL,
        FINAL_MAX_ITER,
    )?;
    let final_cost = calibration_cost(&incumbent, &r_align, markers, est)?;
    Ok(CalibrationResult {
        r_mc: incumbent,
        r_align,
        final_cost,
        schedule_trace,
        marker_degeneracy: degeneracy_check(markers, DEFAULT_DEGENERACY_TOL)?,
        estimate_degeneracy: degeneracy_check(est, DEFAULT_DEGENERACY_TOL)?,
    })
}

/// Calibrates the marker-to-camera rotation from paired marker and
/// estimated camera orientations by annealed random search: five rounds of
/// a thousand candidates each, with ball radii 360°, 30°, 10°, 3°, 1°,
/// starting from the identity. The incumbent moves whenever a candidate
/// strictly beats the best cost seen so far.
///
/// Degenerate inputs (single-axis orientation sets) do not abort the
/// search, but the result carries the degeneracy reports and the returned
/// pair is then just one member of an equal-cost family.
pub fn calibrate_camera_to_marker<R: Rng + ?Sized>(
    markers: &[RotationMatrix],
    est: &[RotationMatrix],
    rng: &mut R,
) -> Result<CalibrationResult> {
    check_inputs(markers, est)?;
    annealed_search(
        markers,
        est,
        RotationMatrix::identity(),
        &ANNEAL_SCHEDULE_DEG,
        rng,
    )
}

/// Single-round refinement (1000 candidates in a 1° ball) starting from a
/// known-true rotation. Used to probe how far the random-start search
/// lands from the best locally attainable answer.
pub fn calibrate_from_ground_truth_seed<R: Rng + ?Sized>(
    markers: &[RotationMatrix],
    est: &[RotationMatrix],
    true_r_mc: &RotationMatrix,
    rng: &mut R,
) -> Result<CalibrationResult> {
    check_inputs(markers, est)?;
    annealed_search(markers, est, *true_r_mc, &[1.0], rng)
}

/// The equal-cost family update when the *marker* orientations share a
/// rotation axis: conjugate the axis rotation into the marker-to-camera
/// estimate and compensate in the alignment.
pub fn gauge_update_gt_axis(
    r_mc: &RotationMatrix,
    r_align: &RotationMatrix,
    r_gm_1: &RotationMatrix,
    axis: &Vector3<f64>,
    a: f64,
) -> (RotationMatrix, RotationMatrix) {
    let twist = exp_map(&(axis * a));
    let new_r_mc = r_gm_1.transpose() * twist * *r_gm_1 * *r_mc;
    let new_r_align = twist * *r_align;
    (new_r_mc, new_r_align)
}

/// The equal-cost family update when the *estimated* orientations share a
/// rotation axis.
pub fn gauge_update_est_axis(
    r_mc: &RotationMatrix,
    r_align: &RotationMatrix,
    r_ec_1: &RotationMatrix,
    axis: &Vector3<f64>,
    a: f64,
) -> (RotationMatrix, RotationMatrix) {
    let twist = exp_map(&(axis * a));
    let new_r_mc = *r_mc * twist;
    let new_r_align = *r_align * *r_ec_1 * twist * r_ec_1.transpose();
    (new_r_mc, new_r_align)
}
