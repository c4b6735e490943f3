//! End-to-end acceptance checks: exact algebraic properties, independent
//! optimization oracles, statistical reproductions of the sensitivity
//! experiments, and the full pipeline on a recorded trajectory. Each check
//! prints one verdict line; run with
//! `cargo test -p trajeval --test acceptance -- --nocapture` to see them all.

mod common;

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::sync::OnceLock;

use common::{nelder_mead, spearman_rho};
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use trajeval::alignment::align_horn_arun;
use trajeval::calibration::{calibration_cost, gauge_update_est_axis, gauge_update_gt_axis};
use trajeval::io::parse_pose_file;
use trajeval::metrics::{compute_ate, compute_dte, DteParams};
use trajeval::robust_stats::geometric_median;
use trajeval::rotation_averaging::geodesic_l1_median;
use trajeval::simulation::{
    corrupt_trajectory, generate_ground_truth, load_and_prepare_real_gt, run_calibration_sweep,
    run_rotation_grid, run_rotation_grid_on, run_translation_grid, run_translation_grid_on,
    CalibrationSweepAxis, CalibrationSweepSpec, CorruptionConfig, GridResult, GridSpec, MetricGrid,
};
use trajeval::so3::{
    exp_map, geodesic_distance, log_map, perturb_rotation, random_rotation, random_unit_vector,
    RotationMatrix,
};
use trajeval::trajectory::{PoseSequence, Sim3Transform};

/// Print one verdict line for a criterion, then enforce it.
fn report(name: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("acceptance {name}: {verdict} ({detail})");
    assert!(ok, "{name}: {detail}");
}

const GRID_SEEDS: u64 = 20;
/// A statistical reproduction may miss on one master seed out of twenty.
const SEED_QUORUM: usize = 19;

fn translation_grids() -> &'static [GridResult] {
    static GRIDS: OnceLock<Vec<GridResult>> = OnceLock::new();
    GRIDS.get_or_init(|| {
        (0..GRID_SEEDS)
            .map(|seed| {
                run_translation_grid(&GridSpec::standard_translation(100, 100), seed)
                    .expect("translation grid")
            })
            .collect()
    })
}

fn rotation_grids() -> &'static [GridResult] {
    static GRIDS: OnceLock<Vec<GridResult>> = OnceLock::new();
    GRIDS.get_or_init(|| {
        (0..GRID_SEEDS)
            .map(|seed| {
                run_rotation_grid(&GridSpec::standard_rotation(100, 100), seed)
                    .expect("rotation grid")
            })
            .collect()
    })
}

fn random_sim3(rng: &mut ChaCha8Rng) -> Sim3Transform {
    Sim3Transform::new(
        rng.random_range(-0.6..0.6f64).exp(),
        random_rotation(rng),
        Vector3::new(
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
        ),
    )
    .expect("valid similarity")
}

fn gaussian_vector(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    Vector3::new(
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
    )
}

/// Every row of the grid strictly increases along the noise axis.
fn rows_strictly_increase(grid: &MetricGrid) -> bool {
    grid.values
        .iter()
        .all(|row| row.windows(2).all(|w| w[0] < w[1]))
}

/// Rows with three or more outliers stay within a quarter of the
/// outlier-free row's spread: the metric stops responding to noise once
/// outliers dominate it.
fn outlier_rows_flat(grid: &MetricGrid) -> bool {
    let base = grid.row_range(0);
    (3..grid.values.len()).all(|i| grid.row_range(i) < 0.25 * base)
}

/// RMS blending saturates faster than mean blending wherever outliers exist.
fn rms_flatter_than_mean(rms: &MetricGrid, mean: &MetricGrid) -> bool {
    (1..mean.values.len()).all(|i| rms.row_range(i) < mean.row_range(i))
}

/// The blended rotation score is outlier-dominated while the plain median
/// responds to noise instead.
fn rotation_grid_ordering(result: &GridResult) -> bool {
    let dre = result.grid("dre").expect("dre grid");
    let median = result.grid("median_1").expect("median grid");
    dre.mean_column_range() > dre.mean_row_range()
        && median.mean_row_range() > median.mean_column_range()
}

#[test]
fn criterion_1_exact_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);

    let mut round_trip_worst = 0.0f64;
    for _ in 0..1000 {
        let w = random_unit_vector(&mut rng) * rng.random_range(1e-6..PI - 1e-6);
        round_trip_worst = round_trip_worst.max((log_map(&exp_map(&w)) - w).norm());
        let r = random_rotation(&mut rng);
        round_trip_worst = round_trip_worst.max(geodesic_distance(&exp_map(&log_map(&r)), &r));
    }

    let mut conjugation_worst = 0.0f64;
    for _ in 0..1000 {
        let s = random_rotation(&mut rng);
        let v = random_unit_vector(&mut rng) * rng.random_range(0.0..PI - 1e-3);
        let lhs = s * exp_map(&v) * s.transpose();
        let rhs = exp_map(&s.rotate(&v));
        conjugation_worst = conjugation_worst.max(geodesic_distance(&lhs, &rhs));
    }

    let mut horn_worst = 0.0f64;
    for _ in 0..50 {
        let est = generate_ground_truth(rng.random_range(4..40), 2.0, &mut rng).unwrap();
        let planted = random_sim3(&mut rng);
        let moved = est.positions().iter().map(|p| planted.apply(p)).collect();
        let gt = PoseSequence::new(moved, None, None).unwrap();
        let fit = align_horn_arun(&gt, &est, true).unwrap();
        horn_worst = horn_worst
            .max((fit.scale - planted.scale).abs() / planted.scale)
            .max(geodesic_distance(&fit.rotation, &planted.rotation))
            .max((fit.translation - planted.translation).norm());
    }

    let mut ate_worst = 0.0f64;
    for _ in 0..20 {
        let base = generate_ground_truth(40, 2.0, &mut rng).unwrap();
        let planted = random_sim3(&mut rng);
        let moved = base.positions().iter().map(|p| planted.apply(p)).collect();
        let gt = PoseSequence::new(moved, None, None).unwrap();
        ate_worst = ate_worst.max(compute_ate(&gt, &base, true).unwrap());
    }

    let mut dte_lo = f64::INFINITY;
    let mut dte_hi = f64::NEG_INFINITY;
    let mut dte_finite = true;
    for case in 0..1000 {
        let n = rng.random_range(4..=40);
        let gt = generate_ground_truth(n, rng.random_range(0.5..3.0), &mut rng).unwrap();
        let cfg = CorruptionConfig {
            sigma_pos: rng.random_range(0.0..0.3),
            sigma_rot_deg: rng.random_range(0.0..20.0),
            n_outliers: rng.random_range(0..=n / 3),
            outlier_cube_side: 10.0,
            apply_random_sim3: case % 2 == 0,
        };
        let (est, _) = corrupt_trajectory(&gt, &cfg, &mut rng).unwrap();
        let result = compute_dte(&gt, &est, &DteParams::default(), true).unwrap();
        for v in [result.dte, result.dte_mean, result.dte_rms] {
            dte_finite &= v.is_finite();
            dte_lo = dte_lo.min(v);
            dte_hi = dte_hi.max(v);
        }
    }

    // Outlier saturation: antipodal pairs about `center` pin the estimate's
    // geometric median to `center` for any outlier magnitude, so the score
    // must not distinguish distance 1e3 from 1e9.
    let mut saturation_worst = 0.0f64;
    for _ in 0..20 {
        let gt = generate_ground_truth(29, 2.0, &mut rng).unwrap();
        let center = Vector3::new(
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
        );
        let mut inliers = vec![center];
        for _ in 0..13 {
            let v = random_unit_vector(&mut rng) * rng.random_range(0.1..0.8);
            inliers.push(center + v);
            inliers.push(center - v);
        }
        let dir = random_unit_vector(&mut rng);
        let orientations: Vec<RotationMatrix> =
            (0..29).map(|_| random_rotation(&mut rng)).collect();
        let mut scores = [0.0f64; 2];
        for (slot, magnitude) in [(0usize, 1e3), (1, 1e9)] {
            let mut positions = inliers.clone();
            positions.push(center + dir * magnitude);
            positions.push(center - dir * magnitude);
            let est = PoseSequence::new(positions, Some(orientations.clone()), None).unwrap();
            scores[slot] = compute_dte(&gt, &est, &DteParams::default(), true)
                .unwrap()
                .dte;
        }
        saturation_worst = saturation_worst.max((scores[0] - scores[1]).abs());
    }

    let ok = round_trip_worst <= 1e-9
        && conjugation_worst <= 1e-9
        && horn_worst <= 1e-9
        && ate_worst <= 1e-9
        && dte_finite
        && dte_lo >= 0.0
        && dte_hi <= 1.0
        && saturation_worst <= 1e-9;
    report(
        "criterion 1 (exact properties)",
        ok,
        &format!(
            "exp/log {round_trip_worst:.1e}, conjugation {conjugation_worst:.1e}, \
             similarity fit {horn_worst:.1e}, self-ATE {ate_worst:.1e}, \
             DTE range [{dte_lo:.3}, {dte_hi:.3}], outlier saturation {saturation_worst:.1e}"
        ),
    );
}

fn l1_cost(points: &[Vector3<f64>], center: &Vector3<f64>) -> f64 {
    points.iter().map(|p| (p - center).norm()).sum()
}

fn rotation_cost(samples: &[RotationMatrix], r: &RotationMatrix) -> f64 {
    samples.iter().map(|s| geodesic_distance(s, r)).sum()
}

/// Orthonormal frame from the first three points: a rotation estimate that
/// shares no code with the library's SVD-based solver.
fn triad_frame(points: &[Vector3<f64>]) -> Matrix3<f64> {
    let u = (points[1] - points[0]).normalize();
    let raw = points[2] - points[0];
    let v = (raw - u * raw.dot(&u)).normalize();
    Matrix3::from_columns(&[u, v, u.cross(&v)])
}

#[test]
fn criterion_2_optimization_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(201);

    // Geometric median against direct minimization of its objective.
    let mut median_gap = 0.0f64;
    for case in 0..100 {
        let n = 5 + case % 26;
        let points: Vec<Vector3<f64>> = (0..n)
            .map(|_| {
                Vector3::new(
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                )
            })
            .collect();
        let lib_cost = l1_cost(&points, &geometric_median(&points).unwrap());
        let objective = |x: &[f64]| l1_cost(&points, &Vector3::new(x[0], x[1], x[2]));

        let centroid = points.iter().sum::<Vector3<f64>>() / n as f64;
        let mut component_median = Vector3::zeros();
        for axis in 0..3 {
            let mut c: Vec<f64> = points.iter().map(|p| p[axis]).collect();
            c.sort_by(f64::total_cmp);
            component_median[axis] = c[n / 2];
        }
        let mut oracle = f64::INFINITY;
        for init in [centroid, component_median] {
            let (x, _) = nelder_mead(&objective, init.as_slice(), 0.5, 4000, 1e-12);
            let (_, polished) = nelder_mead(&objective, &x, 1e-3, 4000, 1e-13);
            oracle = oracle.min(polished);
        }
        median_gap = median_gap.max((lib_cost - oracle).abs());
    }

    // Rotation median against a dense Haar-random candidate sweep: no
    // candidate out of a million may undercut the solver.
    let mut candidate_rng = ChaCha8Rng::seed_from_u64(777);
    let candidates: Vec<RotationMatrix> = (0..1_000_000)
        .map(|_| random_rotation(&mut candidate_rng))
        .collect();
    let mut sweep_margin = f64::NEG_INFINITY;
    for _ in 0..20 {
        let base = random_rotation(&mut rng);
        let mut samples: Vec<RotationMatrix> = (0..7)
            .map(|_| perturb_rotation(&base, 18f64.to_radians(), &mut rng))
            .collect();
        samples.push(random_rotation(&mut rng));
        samples.push(random_rotation(&mut rng));
        let lib_cost = rotation_cost(&samples, &geodesic_l1_median(&samples).unwrap().rotation);
        let best = candidates
            .iter()
            .map(|c| rotation_cost(&samples, c))
            .fold(f64::INFINITY, f64::min);
        sweep_margin = sweep_margin.max(lib_cost - best);
    }

    // ATE against a Nelder-Mead multistart over the seven alignment
    // parameters (rotation vector, log scale, translation).
    let mut ate_gap = 0.0f64;
    for _ in 0..10 {
        let est_points: Vec<Vector3<f64>> = (0..4)
            .map(|_| {
                Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        let planted = random_sim3(&mut rng);
        let gt_points: Vec<Vector3<f64>> = est_points
            .iter()
            .map(|p| planted.apply(p) + gaussian_vector(&mut rng) * 0.05)
            .collect();
        let gt = PoseSequence::new(gt_points.clone(), None, None).unwrap();
        let est = PoseSequence::new(est_points.clone(), None, None).unwrap();
        let lib_ate = compute_ate(&gt, &est, true).unwrap();

        let objective = |p: &[f64]| {
            let r = exp_map(&Vector3::new(p[0], p[1], p[2]));
            let s = p[3].exp();
            let t = Vector3::new(p[4], p[5], p[6]);
            let sum: f64 = gt_points
                .iter()
                .zip(&est_points)
                .map(|(g, e)| (g - (r.rotate(e) * s + t)).norm_squared())
                .sum();
            (sum / gt_points.len() as f64).sqrt()
        };

        let triad = triad_frame(&gt_points) * triad_frame(&est_points).transpose();
        let triad_w = log_map(&RotationMatrix::from_matrix(triad).unwrap());
        let gt_mean = gt_points.iter().sum::<Vector3<f64>>() / 4.0;
        let est_mean = est_points.iter().sum::<Vector3<f64>>() / 4.0;
        let spread = |pts: &[Vector3<f64>], mean: &Vector3<f64>| -> f64 {
            pts.iter()
                .map(|p| (p - mean).norm_squared())
                .sum::<f64>()
                .sqrt()
        };
        let triad_ln_s = (spread(&gt_points, &gt_mean) / spread(&est_points, &est_mean)).ln();

        let mut oracle = f64::INFINITY;
        for attempt in 0..24 {
            let (w, ln_s) = if attempt == 0 {
                (triad_w, triad_ln_s)
            } else if attempt < 12 {
                (
                    triad_w + gaussian_vector(&mut rng) * 0.4,
                    triad_ln_s + rng.sample::<f64, _>(StandardNormal) * 0.2,
                )
            } else {
                (
                    random_unit_vector(&mut rng) * rng.random_range(0.0..PI),
                    rng.random_range(-0.8..0.8),
                )
            };
            let t0 = gt_mean - exp_map(&w).rotate(&est_mean) * ln_s.exp();
            let init = [w.x, w.y, w.z, ln_s, t0.x, t0.y, t0.z];
            let (x, _) = nelder_mead(&objective, &init, 0.2, 6000, 1e-13);
            let (_, polished) = nelder_mead(&objective, &x, 5e-3, 6000, 1e-14);
            oracle = oracle.min(polished);
        }
        ate_gap = ate_gap.max((lib_ate - oracle).abs());
    }

    let ok = median_gap <= 1e-6 && sweep_margin <= 1e-9 && ate_gap <= 1e-4;
    report(
        "criterion 2 (optimization oracles)",
        ok,
        &format!(
            "geometric-median cost gap {median_gap:.1e}, rotation-median margin over \
             1e6 candidates {sweep_margin:.1e}, ATE multistart gap {ate_gap:.1e}"
        ),
    );
}

#[test]
fn criterion_3_translation_grid_sensitivity() {
    let mut monotone_passes = 0usize;
    let mut flat_passes = 0usize;
    let mut both = 0usize;
    for result in translation_grids() {
        let monotone = rows_strictly_increase(result.grid("dte").expect("dte grid"));
        let flat = outlier_rows_flat(result.grid("ate").expect("ate grid"));
        monotone_passes += usize::from(monotone);
        flat_passes += usize::from(flat);
        both += usize::from(monotone && flat);
    }
    report(
        "criterion 3 (translation grid: noise-monotone DTE, outlier-dominated ATE)",
        both >= SEED_QUORUM,
        &format!(
            "{both}/{GRID_SEEDS} seeds passed both checks \
             (DTE monotone {monotone_passes}, ATE flat {flat_passes})"
        ),
    );
}

#[test]
fn criterion_4_blend_weighting() {
    let mut passes = 0usize;
    for result in translation_grids() {
        let rms = result.grid("dte_rms").expect("rms grid");
        let mean = result.grid("dte_mean").expect("mean grid");
        passes += usize::from(rms_flatter_than_mean(rms, mean));
    }
    report(
        "criterion 4 (RMS blend saturates faster than mean)",
        passes >= SEED_QUORUM,
        &format!("{passes}/{GRID_SEEDS} seeds"),
    );
}

#[test]
fn criterion_5_rotation_grid_sensitivity() {
    let mut passes = 0usize;
    for result in rotation_grids() {
        passes += usize::from(rotation_grid_ordering(result));
    }
    report(
        "criterion 5 (rotation grid: blended score outlier-driven, median noise-driven)",
        passes >= SEED_QUORUM,
        &format!("{passes}/{GRID_SEEDS} seeds"),
    );
}

#[test]
fn criterion_6_calibration_accuracy() {
    let spec = CalibrationSweepSpec {
        axis: CalibrationSweepAxis::Noise {
            sigma_levels_deg: (1..=10).map(f64::from).collect(),
            n_outliers: 5,
        },
        trials: 100,
        n_poses: 100,
        compare_gt_seed: false,
    };
    let result = run_calibration_sweep(&spec, 42).expect("calibration sweep");
    let sigmas: Vec<f64> = result.settings.iter().map(|s| s.sigma_deg).collect();
    let medians: Vec<f64> = result.settings.iter().map(|s| s.median_error_deg).collect();
    let rho = spearman_rho(&sigmas, &medians);
    let ok = medians[4] < 0.5 && medians[9] < 1.0 && rho >= 0.9;
    report(
        "criterion 6 (calibration accuracy vs noise)",
        ok,
        &format!(
            "median at 5 deg = {:.4} deg (bound 0.5), median at 10 deg = {:.4} deg \
             (bound 1.0), spearman rho = {rho:.3}",
            medians[4], medians[9]
        ),
    );
}

#[test]
fn criterion_7_search_matches_seeded_solution() {
    let spec = CalibrationSweepSpec {
        axis: CalibrationSweepAxis::Noise {
            sigma_levels_deg: vec![5.0],
            n_outliers: 10,
        },
        trials: 100,
        n_poses: 100,
        compare_gt_seed: true,
    };
    let result = run_calibration_sweep(&spec, 42).expect("calibration sweep");
    let setting = &result.settings[0];
    let median_gap = setting
        .median_seed_gap_deg
        .expect("gap statistics requested");
    let max_gap = setting.max_seed_gap_deg.expect("gap statistics requested");
    report(
        "criterion 7 (random-start search matches ground-truth-seeded solution)",
        median_gap <= 0.1,
        &format!("median gap {median_gap:.4} deg (bound 0.1), max gap {max_gap:.4} deg"),
    );
}

fn per_term_costs(
    r_mc: &RotationMatrix,
    r_align: &RotationMatrix,
    markers: &[RotationMatrix],
    est: &[RotationMatrix],
) -> Vec<f64> {
    markers
        .iter()
        .zip(est)
        .map(|(m, e)| geodesic_distance(&(*m * *r_mc * e.transpose()), r_align))
        .collect()
}

#[test]
fn criterion_8_gauge_degeneracy() {
    let mut rng = ChaCha8Rng::seed_from_u64(801);

    // Marker orientations sharing one axis: the marker-side update must not
    // move any cost term, whatever the current iterate.
    let axis = random_unit_vector(&mut rng);
    let base = random_rotation(&mut rng);
    let markers: Vec<RotationMatrix> = (0..12)
        .map(|_| exp_map(&(axis * rng.random_range(-3.0..3.0))) * base)
        .collect();
    let est: Vec<RotationMatrix> = (0..12).map(|_| random_rotation(&mut rng)).collect();
    let mut gt_axis_worst = 0.0f64;
    for _ in 0..100 {
        let r_mc = random_rotation(&mut rng);
        let r_align = random_rotation(&mut rng);
        let a = rng.random_range(-PI..PI);
        let before = per_term_costs(&r_mc, &r_align, &markers, &est);
        let (m, al) = gauge_update_gt_axis(&r_mc, &r_align, &markers[0], &axis, a);
        for (b, f) in before.iter().zip(&per_term_costs(&m, &al, &markers, &est)) {
            gt_axis_worst = gt_axis_worst.max((b - f).abs());
        }
    }

    // Estimated orientations sharing one axis: same for the estimate-side
    // update.
    let axis_e = random_unit_vector(&mut rng);
    let base_e = random_rotation(&mut rng);
    let est_shared: Vec<RotationMatrix> = (0..12)
        .map(|_| base_e * exp_map(&(axis_e * rng.random_range(-3.0..3.0))))
        .collect();
    let markers_free: Vec<RotationMatrix> = (0..12).map(|_| random_rotation(&mut rng)).collect();
    let mut est_axis_worst = 0.0f64;
    for _ in 0..100 {
        let r_mc = random_rotation(&mut rng);
        let r_align = random_rotation(&mut rng);
        let a = rng.random_range(-PI..PI);
        let before = per_term_costs(&r_mc, &r_align, &markers_free, &est_shared);
        let (m, al) = gauge_update_est_axis(&r_mc, &r_align, &est_shared[0], &axis_e, a);
        for (b, f) in before
            .iter()
            .zip(&per_term_costs(&m, &al, &markers_free, &est_shared))
        {
            est_axis_worst = est_axis_worst.max((b - f).abs());
        }
    }

    // Haar-random orientation sets on both sides: the same updates must
    // strictly move the total cost.
    let markers_h: Vec<RotationMatrix> = (0..8).map(|_| random_rotation(&mut rng)).collect();
    let est_h: Vec<RotationMatrix> = (0..8).map(|_| random_rotation(&mut rng)).collect();
    let mut smallest_shift = f64::INFINITY;
    for _ in 0..100 {
        let r_mc = random_rotation(&mut rng);
        let r_align = random_rotation(&mut rng);
        let magnitude = rng.random_range(0.2..PI);
        let a = if rng.random_bool(0.5) {
            magnitude
        } else {
            -magnitude
        };
        let axis_h = random_unit_vector(&mut rng);
        let before = calibration_cost(&r_mc, &r_align, &markers_h, &est_h).unwrap();
        let (m1, a1) = gauge_update_gt_axis(&r_mc, &r_align, &markers_h[0], &axis_h, a);
        let shifted_gt = calibration_cost(&m1, &a1, &markers_h, &est_h).unwrap();
        let (m2, a2) = gauge_update_est_axis(&r_mc, &r_align, &est_h[0], &axis_h, a);
        let shifted_est = calibration_cost(&m2, &a2, &markers_h, &est_h).unwrap();
        smallest_shift = smallest_shift
            .min((shifted_gt - before).abs())
            .min((shifted_est - before).abs());
    }

    let ok = gt_axis_worst <= 1e-9 && est_axis_worst <= 1e-9 && smallest_shift > 1e-9;
    report(
        "criterion 8 (gauge updates: invariant on shared-axis data, active on generic data)",
        ok,
        &format!(
            "shared-axis term drift {gt_axis_worst:.1e} / {est_axis_worst:.1e}, \
             smallest generic cost shift {smallest_shift:.1e}"
        ),
    );
}

#[test]
fn criterion_9_recorded_trajectory_pipeline() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/desk_groundtruth.txt");
    let parsed = parse_pose_file(BufReader::new(File::open(&path).unwrap())).unwrap();
    assert!(parsed.warnings.is_empty(), "fixture should parse clean");
    let prepared = load_and_prepare_real_gt(&parsed.sequence, 0.5).unwrap();
    let count_ok = prepared.len() == 161;

    let orientations = prepared.require_orientations("fixture").unwrap().to_vec();
    let mut passes = 0usize;
    let mut by_check = [0usize; 4];
    for seed in 0..GRID_SEEDS {
        let translation = run_translation_grid_on(
            &prepared,
            &GridSpec::standard_translation(100, prepared.len()),
            seed,
        )
        .unwrap();
        let rotation = run_rotation_grid_on(
            &orientations,
            &GridSpec::standard_rotation(100, prepared.len()),
            seed,
        )
        .unwrap();
        let checks = [
            rows_strictly_increase(translation.grid("dte").unwrap()),
            outlier_rows_flat(translation.grid("ate").unwrap()),
            rms_flatter_than_mean(
                translation.grid("dte_rms").unwrap(),
                translation.grid("dte_mean").unwrap(),
            ),
            rotation_grid_ordering(&rotation),
        ];
        for (count, ok) in by_check.iter_mut().zip(checks) {
            *count += usize::from(ok);
        }
        passes += usize::from(checks.iter().all(|&ok| ok));
    }
    report(
        "criterion 9 (recorded-trajectory pipeline)",
        count_ok && passes >= SEED_QUORUM,
        &format!(
            "downsampled pose count {} (want 161), {passes}/{GRID_SEEDS} seeds passed all \
             grid checks (DTE monotone {}, ATE flat {}, RMS-vs-mean {}, rotation ordering {})",
            prepared.len(),
            by_check[0],
            by_check[1],
            by_check[2],
            by_check[3]
        ),
    );
}

/// Companion to the sweep's outlier axis (not one of the numbered criteria):
/// at five degrees of rotation noise the median calibration error stays
/// within a factor of two as contamination rises to twenty percent.
#[test]
fn calibration_outlier_robustness() {
    let spec = CalibrationSweepSpec {
        axis: CalibrationSweepAxis::Outliers {
            outlier_counts: vec![0, 10, 20],
            sigma_deg: 5.0,
        },
        trials: 40,
        n_poses: 100,
        compare_gt_seed: false,
    };
    let result = run_calibration_sweep(&spec, 7).expect("calibration sweep");
    let medians: Vec<f64> = result.settings.iter().map(|s| s.median_error_deg).collect();
    let lo = medians.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let hi = medians.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    assert!(
        hi < 2.0 * lo,
        "outlier axis should not move the median twofold: {medians:?}"
    );
}
