//! Trajectory accuracy metrics.
//!
//! Three headline numbers plus a comparison table:
//!
//! * **ATE** — RMS position error after the classical least-squares
//!   alignment. Exact, but a single gross outlier can dominate it.
//! * **DTE** — winsorized, normalized position error after the robust
//!   alignment. Dimensionless, always in `[0, 1]`.
//! * **DRE** — blended mean/RMS angular error after aligning orientations
//!   with the geodesic L1 median. Reported in degrees, deliberately not
//!   winsorized.
//!
//! The rotation table carries median/mean/RMS errors under both the L1 and
//! L2 orientation alignments for side-by-side comparison.

use serde::{Deserialize, Serialize};

use crate::alignment::{align_dte_detailed, align_horn_arun};
use crate::error::{Error, Result};
use crate::robust_stats::median;
use crate::rotation_averaging::{geodesic_l1_median, geodesic_l2_mean};
use crate::so3::{geodesic_distance, RotationMatrix};
use crate::trajectory::{PoseSequence, Sim3Transform};

/// Winsorization and blending knobs for the robust translation metric.
#[derive(Debug, Clone, Copy)]
pub struct DteParams {
    k: f64,
    alpha: f64,
}

impl DteParams {
    /// `k` scales the winsorization threshold (`u = k * MAD`); `alpha`
    /// blends mean and RMS (`0` = pure mean, `1` = pure RMS).
    pub fn new(k: f64, alpha: f64) -> Result<Self> {
        if !k.is_finite() || k <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "winsorization multiplier must be positive and finite, got {k}"
            )));
        }
        check_alpha(alpha)?;
        Ok(Self { k, alpha })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Default for DteParams {
    fn default() -> Self {
        Self { k: 5.0, alpha: 0.5 }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "blend weight must lie in [0, 1], got {alpha}"
        )));
    }
    Ok(())
}

/// Convex mean/RMS combination `(1 - alpha) * mean + alpha * rms`.
/// The caller guarantees `alpha` is in `[0, 1]`.
pub fn weighted_blend(mean_err: f64, rms_err: f64, alpha: f64) -> f64 {
    (1.0 - alpha) * mean_err + alpha * rms_err
}

fn mean_and_rms(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let rms = (values.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    (mean, rms)
}

/// RMS position error at the optimal least-squares alignment, plus the
/// alignment itself.
#[derive(Debug, Clone, Copy)]
pub struct AteResult {
    pub ate: f64,
    pub alignment: Sim3Transform,
}

/// RMS position error after least-squares alignment (scene units).
pub fn compute_ate(gt: &PoseSequence, est: &PoseSequence, with_scale: bool) -> Result<f64> {
    Ok(compute_ate_detailed(gt, est, with_scale)?.ate)
}

/// [`compute_ate`] with the fitted transform exposed.
pub fn compute_ate_detailed(
    gt: &PoseSequence,
    est: &PoseSequence,
    with_scale: bool,
) -> Result<AteResult> {
    let alignment = align_horn_arun(gt, est, with_scale)?;
    let sum: f64 = gt
        .positions()
        .iter()
        .zip(est.positions())
        .map(|(g, e)| (g - alignment.apply(e)).norm_squared())
        .sum();
    Ok(AteResult {
        ate: (sum / gt.len() as f64).sqrt(),
        alignment,
    })
}

/// Robust translation metric, with the intermediates that produced it.
#[derive(Debug, Clone)]
pub struct DteResult {
    /// Blended score in `[0, 1]`.
    pub dte: f64,
    pub dte_mean: f64,
    pub dte_rms: f64,
    /// The robust alignment the distances were measured under.
    pub alignment: Sim3Transform,
    /// Winsorization threshold `u` in scene units.
    pub threshold: f64,
    /// Raw aligned distances per pose.
    pub distances: Vec<f64>,
    /// Winsorized, normalized distances per pose (each in `[0, 1]`).
    pub normalized: Vec<f64>,
}

/// Robust translation error: aligns with [`align_dte`], winsorizes the
/// per-pose distances at `u = k * MAD(gt)`, divides by `u`, and blends the
/// mean and RMS of the result. Always lands in `[0, 1]`.
///
/// [`align_dte`]: crate::alignment::align_dte
pub fn compute_dte(
    gt: &PoseSequence,
    est: &PoseSequence,
    params: &DteParams,
    with_scale: bool,
) -> Result<DteResult> {
    let robust = align_dte_detailed(gt, est, with_scale)?;
    let threshold = params.k * robust.gt_spread;
    if threshold == 0.0 {
        return Err(Error::DegenerateScale {
            which: "ground truth",
        });
    }
    let transform = robust.transform;
    let distances: Vec<f64> = gt
        .positions()
        .iter()
        .zip(est.positions())
        .map(|(g, e)| (g - transform.apply(e)).norm())
        .collect();
    let normalized: Vec<f64> = distances
        .iter()
        .map(|d| d.min(threshold) / threshold)
        .collect();
    let (dte_mean, dte_rms) = mean_and_rms(&normalized);
    Ok(DteResult {
        dte: weighted_blend(dte_mean, dte_rms, params.alpha),
        dte_mean,
        dte_rms,
        alignment: transform,
        threshold,
        distances,
        normalized,
    })
}

/// Per-orientation angular errors (degrees) against the rotation that best
/// aligns the relative orientations under the geodesic L1 cost.
fn l1_aligned_errors_deg(gt_r: &[RotationMatrix], est_r: &[RotationMatrix]) -> Result<Vec<f64>> {
    if gt_r.len() != est_r.len() {
        return Err(Error::LengthMismatch {
            context: "ground-truth vs estimated orientations",
            left: gt_r.len(),
            right: est_r.len(),
        });
    }
    let relatives: Vec<RotationMatrix> = gt_r
        .iter()
        .zip(est_r)
        .map(|(g, e)| *g * e.transpose())
        .collect();
    let align = geodesic_l1_median(&relatives)?.rotation;
    Ok(relatives
        .iter()
        .map(|rel| geodesic_distance(rel, &align).to_degrees())
        .collect())
}

/// Robust rotation error in degrees: per-pose angular errors after the L1
/// orientation alignment, blended as `(1 - alpha) * mean + alpha * rms`.
/// No winsorization or normalization — angles are already bounded by 180°.
pub fn compute_dre(gt_r: &[RotationMatrix], est_r: &[RotationMatrix], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let errors = l1_aligned_errors_deg(gt_r, est_r)?;
    let (mean, rms) = mean_and_rms(&errors);
    Ok(weighted_blend(mean, rms, alpha))
}

/// Median/mean/RMS angular errors (degrees) under the L1 alignment (`*_1`)
/// and the L2 alignment (`*_2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationErrorTable {
    pub median_1: f64,
    pub mean_1: f64,
    pub rms_1: f64,
    pub median_2: f64,
    pub mean_2: f64,
    pub rms_2: f64,
}

impl RotationErrorTable {
    /// The blended rotation error implied by the table's L1 row — equal to
    /// [`compute_dre`] on the same data.
    pub fn blended(&self, alpha: f64) -> f64 {
        weighted_blend(self.mean_1, self.rms_1, alpha)
    }
}

/// Computes the six-way rotation error table.
pub fn rotation_error_table(
    gt_r: &[RotationMatrix],
    est_r: &[RotationMatrix],
) -> Result<RotationErrorTable> {
    if gt_r.len() != est_r.len() {
        return Err(Error::LengthMismatch {
            context: "ground-truth vs estimated orientations",
            left: gt_r.len(),
            right: est_r.len(),
        });
    }
    let relatives: Vec<RotationMatrix> = gt_r
        .iter()
        .zip(est_r)
        .map(|(g, e)| *g * e.transpose())
        .collect();
    let l1 = geodesic_l1_median(&relatives)?.rotation;
    let l2 = geodesic_l2_mean(&relatives)?.rotation;
    let errors_deg = |align: &RotationMatrix| -> Vec<f64> {
        relatives
            .iter()
            .map(|rel| geodesic_distance(rel, align).to_degrees())
            .collect()
    };
    let e1 = errors_deg(&l1);
    let e2 = errors_deg(&l2);
    let (mean_1, rms_1) = mean_and_rms(&e1);
    let (mean_2, rms_2) = mean_and_rms(&e2);
    Ok(RotationErrorTable {
        median_1: median(&e1)?,
        mean_1,
        rms_1,
        median_2: median(&e2)?,
        mean_2,
        rms_2,
    })
}

/// Knobs for [`evaluate`].
#[derive(Debug, Clone, Copy)]
pub struct EvalParams {
    pub dte: DteParams,
    /// Fit the relative scale (similarity alignment) rather than pinning
    /// it to one (rigid alignment).
    pub with_scale: bool,
    /// Retain per-pose error traces in the report.
    pub keep_per_pose: bool,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            dte: DteParams::default(),
            with_scale: true,
            keep_per_pose: false,
        }
    }
}

/// Per-pose error traces for failure inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerPoseTrace {
    /// Aligned position distances (scene units).
    pub distances: Vec<f64>,
    /// Winsorized, normalized distances (each in `[0, 1]`).
    pub normalized: Vec<f64>,
    /// Angular errors after the L1 orientation alignment (degrees).
    pub rotation_errors_deg: Vec<f64>,
}

/// Everything [`evaluate`] measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub pose_count: usize,
    /// RMS position error after least-squares alignment (scene units).
    pub ate: f64,
    /// Robust blended translation score in `[0, 1]`.
    pub dte: f64,
    pub dte_mean: f64,
    pub dte_rms: f64,
    /// Robust blended rotation error (degrees).
    pub dre_deg: f64,
    pub rotation_table: RotationErrorTable,
    /// Winsorization threshold `u` behind the normalized scores.
    pub winsorize_threshold: f64,
    pub ate_alignment: Sim3Transform,
    pub dte_alignment: Sim3Transform,
    pub per_pose: Option<PerPoseTrace>,
}

/// Full evaluation of an estimated trajectory against ground truth:
/// both position metrics, the rotation table, and the blended rotation
/// error. Needs orientations on both sequences and at least three poses
/// (the least-squares alignment's minimum).
pub fn evaluate(
    gt: &PoseSequence,
    est: &PoseSequence,
    params: &EvalParams,
) -> Result<MetricReport> {
    let ate = compute_ate_detailed(gt, est, params.with_scale)?;
    let dte = compute_dte(gt, est, &params.dte, params.with_scale)?;
    let gt_r = gt.require_orientations("ground truth")?;
    let est_r = est.require_orientations("estimate")?;
    let table = rotation_error_table(gt_r, est_r)?;
    let dre_deg = table.blended(params.dte.alpha);
    let per_pose = params.keep_per_pose.then(|| PerPoseTrace {
        distances: dte.distances.clone(),
        normalized: dte.normalized.clone(),
        rotation_errors_deg: l1_aligned_errors_deg(gt_r, est_r).expect("lengths already checked"),
    });
    Ok(MetricReport {
        pose_count: gt.len(),
        ate: ate.ate,
        dte: dte.dte,
        dte_mean: dte.dte_mean,
        dte_rms: dte.dte_rms,
        dre_deg,
        rotation_table: table,
        winsorize_threshold: dte.threshold,
        ate_alignment: ate.alignment,
        dte_alignment: dte.alignment,
        per_pose,
    })
}
