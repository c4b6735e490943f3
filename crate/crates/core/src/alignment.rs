//! Trajectory alignment: the classical least-squares similarity fit and the
//! median-based robust fit.
//!
//! Both estimate a similarity transform mapping estimated positions onto
//! ground truth. The least-squares fit is exact but every pose influences
//! it without bound; the robust fit swaps centroids for geometric medians,
//! the rotation for a geodesic L1 median of relative orientations, and the
//! scale for a ratio of median absolute spreads.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::robust_stats::{geometric_median, mad_about_point};
use crate::rotation_averaging::geodesic_l1_median;
use crate::so3::RotationMatrix;
use crate::trajectory::{PoseSequence, Sim3Transform};

fn check_pairing(gt: &PoseSequence, est: &PoseSequence) -> Result<()> {
    if gt.len() != est.len() {
        return Err(Error::LengthMismatch {
            context: "ground truth vs estimate",
            left: gt.len(),
            right: est.len(),
        });
    }
    Ok(())
}

/// Rank of a centered point set, judged from the singular values of its
/// scatter matrix with a relative cutoff.
fn centered_rank(centered: &[Vector3<f64>]) -> usize {
    let scatter = centered
        .iter()
        .fold(Matrix3::zeros(), |acc, p| acc + p * p.transpose());
    let mut svd = scatter.svd(false, false);
    svd.sort_by_singular_values();
    let s = svd.singular_values;
    if s[0] <= 0.0 {
        return 0;
    }
    // Scatter eigenvalues are squared spreads; compare on the sqrt scale.
    let cutoff = 1e-12 * s[0].sqrt();
    (0..3).take_while(|&i| s[i].sqrt() > cutoff).count()
}

/// Closed-form least-squares alignment of paired positions.
///
/// With `with_scale` the full similarity is fitted; otherwise the scale is
/// pinned to one. Needs at least three poses and centered point sets of
/// rank two or more on both sides; positions only, orientations are
/// ignored.
pub fn align_horn_arun(
    gt: &PoseSequence,
    est: &PoseSequence,
    with_scale: bool,
) -> Result<Sim3Transform> {
    check_pairing(gt, est)?;
    let n = gt.len();
    if n < 3 {
        return Err(Error::DegenerateGeometry(format!(
            "least-squares alignment needs at least 3 poses, got {n}"
        )));
    }
    let gt_mean: Vector3<f64> = gt.positions().iter().sum::<Vector3<f64>>() / n as f64;
    let est_mean: Vector3<f64> = est.positions().iter().sum::<Vector3<f64>>() / n as f64;
    let g: Vec<Vector3<f64>> = gt.positions().iter().map(|p| p - gt_mean).collect();
    let e: Vec<Vector3<f64>> = est.positions().iter().map(|p| p - est_mean).collect();

    if centered_rank(&g) < 2 {
        return Err(Error::DegenerateGeometry(
            "ground-truth positions are collinear or coincident".into(),
        ));
    }
    if centered_rank(&e) < 2 {
        return Err(Error::DegenerateGeometry(
            "estimated positions are collinear or coincident".into(),
        ));
    }

    // Cross-covariance of centered estimate against centered ground truth.
    let m = e
        .iter()
        .zip(&g)
        .fold(Matrix3::zeros(), |acc, (ei, gi)| acc + ei * gi.transpose());
    let mut svd = m.svd(true, true);
    svd.sort_by_singular_values();
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let v = v_t.transpose();
    let sign = (v * u.transpose()).determinant().signum();
    let rotation = RotationMatrix::from_matrix_unchecked(
        v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, sign)) * u.transpose(),
    );

    let scale = if with_scale {
        let num: f64 = e
            .iter()
            .zip(&g)
            .map(|(ei, gi)| gi.dot(&rotation.rotate(ei)))
            .sum();
        let den: f64 = e.iter().map(|ei| ei.norm_squared()).sum();
        num / den
    } else {
        1.0
    };
    if !scale.is_finite() || scale <= 0.0 {
        return Err(Error::DegenerateGeometry(format!(
            "least-squares scale collapsed to {scale}"
        )));
    }

    let translation = gt_mean - rotation.rotate(&est_mean) * scale;
    Ok(Sim3Transform {
        scale,
        rotation,
        translation,
    })
}

/// Robust alignment plus the spread statistics it was built from.
#[derive(Debug, Clone, Copy)]
pub struct RobustAlignment {
    pub transform: Sim3Transform,
    /// Median absolute distance of ground-truth positions about their
    /// geometric median.
    pub gt_spread: f64,
    /// Same for the estimate.
    pub est_spread: f64,
    /// Whether the rotation median iteration converged.
    pub rotation_converged: bool,
}

/// Median-based alignment: geodesic L1 median of the relative orientations
/// for the rotation, ratio of median spreads about the geometric medians
/// for the scale, and the transform closing the loop between the two
/// geometric medians for the translation.
///
/// Works from two poses up (and degenerates gracefully there); requires
/// orientations on both sequences. With `with_scale` false the scale is
/// pinned to one, which also lifts the requirement that the estimate has
/// nonzero spread.
pub fn align_dte(gt: &PoseSequence, est: &PoseSequence, with_scale: bool) -> Result<Sim3Transform> {
    Ok(align_dte_detailed(gt, est, with_scale)?.transform)
}

/// [`align_dte`] with the intermediate statistics exposed.
pub fn align_dte_detailed(
    gt: &PoseSequence,
    est: &PoseSequence,
    with_scale: bool,
) -> Result<RobustAlignment> {
    check_pairing(gt, est)?;
    let gt_r = gt.require_orientations("ground truth")?;
    let est_r = est.require_orientations("estimate")?;

    let relatives: Vec<RotationMatrix> = gt_r
        .iter()
        .zip(est_r)
        .map(|(g, e)| *g * e.transpose())
        .collect();
    let average = geodesic_l1_median(&relatives)?;
    let rotation = average.rotation;

    let gt_median = geometric_median(gt.positions())?;
    let est_median = geometric_median(est.positions())?;
    let gt_spread = mad_about_point(gt.positions(), &gt_median)?;
    let est_spread = mad_about_point(est.positions(), &est_median)?;

    let scale = if with_scale {
        if est_spread == 0.0 {
            return Err(Error::DegenerateScale { which: "estimate" });
        }
        gt_spread / est_spread
    } else {
        1.0
    };

    let translation = gt_median - rotation.rotate(&est_median) * scale;
    Ok(RobustAlignment {
        transform: Sim3Transform {
            scale,
            rotation,
            translation,
        },
        gt_spread,
        est_spread,
        rotation_converged: average.converged,
    })
}
