//! Order statistics and the geometric median, the robust building blocks
//! used by trajectory alignment.

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Default number of Weiszfeld iterations before giving up.
pub const GEOMETRIC_MEDIAN_MAX_ITER: usize = 10_000;

/// Scalar median. For an even count this is the midpoint of the two middle
/// order statistics, so the result need not be an element of the input.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("median of no values"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        Ok(sorted[n / 2])
    } else {
        Ok(0.5 * (sorted[n / 2 - 1] + sorted[n / 2]))
    }
}

/// Quantile with linear interpolation between order statistics,
/// `q` in `[0, 1]`.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("quantile of no values"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!(
            "quantile fraction {q} outside [0, 1]"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

/// Median absolute distance of a point cloud about an arbitrary center.
pub fn mad_about_point(points: &[Vector3<f64>], center: &Vector3<f64>) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptyInput("distances of no points"));
    }
    let distances: Vec<f64> = points.iter().map(|p| (p - center).norm()).collect();
    median(&distances)
}

/// Geometric median with default tolerance: 1e-10 times the cloud diameter
/// (bounding-box diagonal).
pub fn geometric_median(points: &[Vector3<f64>]) -> Result<Vector3<f64>> {
    geometric_median_with(points, None, GEOMETRIC_MEDIAN_MAX_ITER)
}

/// Weiszfeld iteration for the point minimizing the sum of Euclidean
/// distances, started from the centroid.
///
/// When an iterate lands on (within 1e-12 of the cloud diameter of) a data
/// point the plain update is singular; the Vardi-Zhang modified step either
/// certifies that point as the median or pulls the iterate off it.
/// Terminates when the update displacement drops to `tol`.
pub fn geometric_median_with(
    points: &[Vector3<f64>],
    tol: Option<f64>,
    max_iter: usize,
) -> Result<Vector3<f64>> {
    if points.is_empty() {
        return Err(Error::EmptyInput("geometric median of no points"));
    }
    if points.iter().any(|p| !p.iter().all(|x| x.is_finite())) {
        return Err(Error::NonFinite("geometric median input"));
    }

    let (mut lo, mut hi) = (points[0], points[0]);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let diameter = (hi - lo).norm();
    if diameter == 0.0 {
        return Ok(points[0]);
    }
    let tol = tol.unwrap_or(1e-10 * diameter);
    let coincide = 1e-12 * diameter;

    let mut x = points.iter().sum::<Vector3<f64>>() / points.len() as f64;
    for _ in 0..max_iter {
        // One pass: plain Weiszfeld sums over non-coinciding points, plus
        // the multiplicity and pull direction needed for the modified step.
        let mut weight_sum = 0.0;
        let mut weighted = Vector3::zeros();
        let mut pull = Vector3::zeros();
        let mut multiplicity = 0usize;
        let mut anchor = (f64::INFINITY, Vector3::zeros());
        for p in points {
            let d = (p - x).norm();
            if d <= coincide {
                multiplicity += 1;
                if d < anchor.0 {
                    anchor = (d, *p);
                }
            } else {
                let w = 1.0 / d;
                weight_sum += w;
                weighted += p * w;
                pull += (p - x) * w;
            }
        }

        let next = if multiplicity == 0 {
            weighted / weight_sum
        } else if weight_sum == 0.0 {
            // Every point coincides with the iterate.
            return Ok(anchor.1);
        } else {
            let r = pull.norm();
            let eta = multiplicity as f64;
            if r <= eta {
                // The coinciding point dominates: it is the median. Return
                // the point itself, not the iterate, so the certificate is
                // exact however coarse the coincidence ball is.
                return Ok(anchor.1);
            }
            let t = weighted / weight_sum;
            t * (1.0 - eta / r) + x * (eta / r)
        };

        let step = (next - x).norm();
        x = next;
        if step <= tol {
            break;
        }
    }
    Ok(x)
}
