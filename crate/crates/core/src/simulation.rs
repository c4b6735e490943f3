//! Seeded simulation harness: synthetic trajectory generation, controlled
//! corruption, and the grid/sweep experiments that characterize metric
//! sensitivity to noise and outliers.
//!
//! All runners are deterministic: every (run, cell) pair draws from its own
//! counter-derived ChaCha stream, so results are bit-identical for a given
//! master seed regardless of thread schedule or the `parallel` feature.

use nalgebra::Vector3;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::calibration::{calibrate_camera_to_marker, calibrate_from_ground_truth_seed};
use crate::error::{Error, Result};
use crate::exec;
use crate::metrics::{compute_ate, compute_dte, rotation_error_table, DteParams};
use crate::robust_stats::quantile;
use crate::so3::{geodesic_distance, perturb_rotation, random_rotation, RotationMatrix};
use crate::trajectory::{apply_sim3, PoseSequence, Sim3Transform};

/// Metric names of the translation grid, in matrix order.
pub const TRANSLATION_METRICS: [&str; 4] = ["ate", "dte", "dte_mean", "dte_rms"];

/// Metric names of the rotation grid, in matrix order.
pub const ROTATION_METRICS: [&str; 7] = [
    "median_1", "mean_1", "rms_1", "median_2", "mean_2", "rms_2", "dre",
];

/// Which family of metrics a grid evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricSet {
    /// Position metrics (ATE, DTE and its mean/rms parts) under position
    /// noise, fixed rotation noise, outliers, and a random similarity.
    Translation,
    /// Orientation metrics (median/mean/RMS under both alignment norms, DRE)
    /// under rotation noise and outliers.
    Rotation,
}

impl MetricSet {
    pub fn metric_names(self) -> &'static [&'static str] {
        match self {
            MetricSet::Translation => &TRANSLATION_METRICS,
            MetricSet::Rotation => &ROTATION_METRICS,
        }
    }

    fn label(self) -> &'static str {
        match self {
            MetricSet::Translation => "translation",
            MetricSet::Rotation => "rotation",
        }
    }
}

/// How a ground-truth trajectory is degraded into a simulated estimate.
///
/// Stages run in a fixed order: per-pose Gaussian noise, then outlier
/// replacement, then (optionally) a global random similarity. Zero noise
/// levels skip their random draws entirely, so untouched poses stay bitwise
/// equal to the input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionConfig {
    /// Std-dev of the per-component position noise, scene units.
    pub sigma_pos: f64,
    /// Std-dev of the rotation noise, degrees.
    pub sigma_rot_deg: f64,
    /// Number of poses replaced by gross outliers (distinct indices).
    pub n_outliers: usize,
    /// Side of the centered cube outlier positions are drawn from.
    pub outlier_cube_side: f64,
    /// Apply a random similarity (Haar rotation, scale log-uniform in
    /// [1/2, 2], translation uniform in [-5, 5]^3) to the whole trajectory.
    pub apply_random_sim3: bool,
}

impl Default for CorruptionConfig {
    fn default() -> Self {
        CorruptionConfig {
            sigma_pos: 0.0,
            sigma_rot_deg: 0.0,
            n_outliers: 0,
            outlier_cube_side: 10.0,
            apply_random_sim3: false,
        }
    }
}

impl CorruptionConfig {
    fn validate(&self) -> Result<()> {
        if !self.sigma_pos.is_finite() || self.sigma_pos < 0.0 {
            return Err(Error::InvalidParameter(
                "position noise must be finite and non-negative".into(),
            ));
        }
        if !self.sigma_rot_deg.is_finite() || self.sigma_rot_deg < 0.0 {
            return Err(Error::InvalidParameter(
                "rotation noise must be finite and non-negative".into(),
            ));
        }
        if !self.outlier_cube_side.is_finite() || self.outlier_cube_side <= 0.0 {
            return Err(Error::InvalidParameter(
                "outlier cube side must be finite and positive".into(),
            ));
        }
        Ok(())
    }
}

/// Layout of a sensitivity grid: one corruption cell per (outlier count,
/// noise level) pair, evaluated over several independent runs.
///
/// Noise levels are scene units for the translation grid and degrees for the
/// rotation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub noise_levels: Vec<f64>,
    pub outlier_counts: Vec<usize>,
    pub runs: usize,
    pub n_poses: usize,
    pub metric_set: MetricSet,
    /// Rotation noise applied in every translation-grid cell, degrees.
    /// Ignored by the rotation grid, whose noise axis is rotational already.
    pub sigma_rot_deg: f64,
    /// Apply a random global similarity per translation-grid cell.
    pub apply_random_sim3: bool,
    /// Keep the raw (pre-normalization) per-run matrices in the result.
    pub retain_raw: bool,
}

impl GridSpec {
    /// The standard position-metric grid: position noise 0 to 0.1 in steps
    /// of 0.01, outlier counts 0 to 10, 5 degrees of rotation noise, and a
    /// random similarity applied to every corrupted trajectory.
    pub fn standard_translation(runs: usize, n_poses: usize) -> GridSpec {
        GridSpec {
            noise_levels: (0..=10).map(|i| f64::from(i) * 0.01).collect(),
            outlier_counts: (0..=10).collect(),
            runs,
            n_poses,
            metric_set: MetricSet::Translation,
            sigma_rot_deg: 5.0,
            apply_random_sim3: true,
            retain_raw: false,
        }
    }

    /// The standard orientation-metric grid: rotation noise 0 to 10 degrees
    /// in steps of 1 degree, outlier counts 0 to 10.
    pub fn standard_rotation(runs: usize, n_poses: usize) -> GridSpec {
        GridSpec {
            noise_levels: (0..=10).map(f64::from).collect(),
            outlier_counts: (0..=10).collect(),
            runs,
            n_poses,
            metric_set: MetricSet::Rotation,
            sigma_rot_deg: 0.0,
            apply_random_sim3: false,
            retain_raw: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.noise_levels.is_empty() {
            return Err(Error::EmptyInput("noise levels"));
        }
        if self.outlier_counts.is_empty() {
            return Err(Error::EmptyInput("outlier counts"));
        }
        if self.noise_levels.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidParameter(
                "noise levels must be finite and non-negative".into(),
            ));
        }
        if !self.sigma_rot_deg.is_finite() || self.sigma_rot_deg < 0.0 {
            return Err(Error::InvalidParameter(
                "rotation noise must be finite and non-negative".into(),
            ));
        }
        if self.runs == 0 {
            return Err(Error::InvalidParameter("runs must be at least 1".into()));
        }
        if self.n_poses == 0 {
            return Err(Error::InvalidParameter(
                "pose count must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One metric's grid of errors: row `i` is outlier count `outlier_counts[i]`,
/// column `j` is noise level `noise_levels[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricGrid {
    pub metric: String,
    pub values: Vec<Vec<f64>>,
}

fn span(values: impl Iterator<Item = f64>) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi - lo
}

impl MetricGrid {
    fn zeros(metric: &str, rows: usize, cols: usize) -> MetricGrid {
        MetricGrid {
            metric: metric.to_owned(),
            values: vec![vec![0.0; cols]; rows],
        }
    }

    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn cols(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(f64::NEG_INFINITY, |a, &b| a.max(b))
    }

    /// Max minus min along row `i` (sensitivity to the noise axis at a fixed
    /// outlier count).
    pub fn row_range(&self, i: usize) -> f64 {
        span(self.values[i].iter().copied())
    }

    /// Max minus min along column `j` (sensitivity to the outlier axis at a
    /// fixed noise level).
    pub fn column_range(&self, j: usize) -> f64 {
        span(self.values.iter().map(|row| row[j]))
    }

    pub fn mean_row_range(&self) -> f64 {
        let rows = self.rows();
        (0..rows).map(|i| self.row_range(i)).sum::<f64>() / rows as f64
    }

    pub fn mean_column_range(&self) -> f64 {
        let cols = self.cols();
        (0..cols).map(|j| self.column_range(j)).sum::<f64>() / cols as f64
    }

    /// Subtract the first row (the outlier-free case) from every row, so each
    /// column reads as excess error over the outlier-free baseline.
    pub fn baseline_shifted(&self) -> MetricGrid {
        let base = self.values[0].clone();
        let values = self
            .values
            .iter()
            .map(|row| row.iter().zip(&base).map(|(v, b)| v - b).collect())
            .collect();
        MetricGrid {
            metric: self.metric.clone(),
            values,
        }
    }
}

/// Output of a grid runner: per-metric matrices of run-averaged errors.
///
/// Each run's matrix is divided by that run's maximum (per metric) before
/// averaging, so entries are in [0, 1]; a run whose maximum is zero (up to
/// floating-point residue) contributes zeros. The raw per-run matrices are
/// retained when the spec asks for them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub spec: GridSpec,
    pub master_seed: u64,
    pub grids: Vec<MetricGrid>,
    pub raw_runs: Option<Vec<Vec<MetricGrid>>>,
}

impl GridResult {
    pub fn grid(&self, metric: &str) -> Option<&MetricGrid> {
        self.grids.iter().find(|g| g.metric == metric)
    }
}

/// Generate `n` poses with positions uniform in a centered cube of the given
/// side and orientations uniform over rotations.
pub fn generate_ground_truth<R: Rng + ?Sized>(
    n: usize,
    cube_side: f64,
    rng: &mut R,
) -> Result<PoseSequence> {
    if !cube_side.is_finite() || cube_side <= 0.0 {
        return Err(Error::InvalidParameter(
            "cube side must be finite and positive".into(),
        ));
    }
    let half = cube_side / 2.0;
    let mut positions = Vec::with_capacity(n);
    let mut orientations = Vec::with_capacity(n);
    for _ in 0..n {
        positions.push(Vector3::new(
            rng.random_range(-half..half),
            rng.random_range(-half..half),
            rng.random_range(-half..half),
        ));
        orientations.push(random_rotation(rng));
    }
    PoseSequence::with_poses(positions, orientations)
}

fn random_sim3<R: Rng + ?Sized>(rng: &mut R) -> Sim3Transform {
    use std::f64::consts::LN_2;
    let rotation = random_rotation(rng);
    let scale = f64::exp(rng.random_range(-LN_2..LN_2));
    let translation = Vector3::new(
        rng.random_range(-5.0..5.0),
        rng.random_range(-5.0..5.0),
        rng.random_range(-5.0..5.0),
    );
    Sim3Transform {
        scale,
        rotation,
        translation,
    }
}

/// Degrade a ground-truth trajectory per the config; returns the corrupted
/// trajectory and the (sorted) indices that were replaced by outliers.
///
/// Outlier poses get positions uniform in the configured centered cube and
/// uniformly random orientations. The optional random similarity is applied
/// last, after noise and outliers.
pub fn corrupt_trajectory<R: Rng + ?Sized>(
    gt: &PoseSequence,
    cfg: &CorruptionConfig,
    rng: &mut R,
) -> Result<(PoseSequence, Vec<usize>)> {
    cfg.validate()?;
    let n = gt.len();
    if cfg.n_outliers > n {
        return Err(Error::TooManyOutliers {
            requested: cfg.n_outliers,
            available: n,
        });
    }
    let mut positions = gt.positions().to_vec();
    let mut orientations = gt.require_orientations("ground truth")?.to_vec();

    let sigma_rot = cfg.sigma_rot_deg.to_radians();
    for (p, r) in positions.iter_mut().zip(orientations.iter_mut()) {
        if cfg.sigma_pos > 0.0 {
            *p += cfg.sigma_pos
                * Vector3::new(
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                );
        }
        if sigma_rot > 0.0 {
            *r = perturb_rotation(r, sigma_rot, rng);
        }
    }

    let mut outlier_indices = index::sample(rng, n, cfg.n_outliers).into_vec();
    outlier_indices.sort_unstable();
    let half = cfg.outlier_cube_side / 2.0;
    for &i in &outlier_indices {
        positions[i] = Vector3::new(
            rng.random_range(-half..half),
            rng.random_range(-half..half),
            rng.random_range(-half..half),
        );
        orientations[i] = random_rotation(rng);
    }

    let timestamps = gt.timestamps().map(<[f64]>::to_vec);
    let mut corrupted = PoseSequence::new(positions, Some(orientations), timestamps)?;
    if cfg.apply_random_sim3 {
        corrupted = apply_sim3(&random_sim3(rng), &corrupted);
    }
    Ok((corrupted, outlier_indices))
}

/// Per-run grid maxima at or below this are treated as zero by the
/// normalization; real corruption produces errors many orders of magnitude
/// larger, so only floating-point residue falls under it.
const ZERO_GRID_MAX: f64 = 1e-12;

/// One ChaCha stream per (run, slot); slot 0 is the run's ground truth and
/// slot `cell + 1` the corruption of cell `cell`.
fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

fn run_stream(run: usize, slot: u64) -> u64 {
    ((run as u64) << 32) | slot
}

fn expect_metric_set(spec: &GridSpec, want: MetricSet, runner: &str) -> Result<()> {
    if spec.metric_set != want {
        return Err(Error::InvalidParameter(format!(
            "{runner} needs a spec with the {} metric set, got {}",
            want.label(),
            spec.metric_set.label()
        )));
    }
    Ok(())
}

fn check_outlier_budget(spec: &GridSpec, n: usize) -> Result<()> {
    let max_out = spec.outlier_counts.iter().copied().max().unwrap_or(0);
    if max_out > n {
        return Err(Error::TooManyOutliers {
            requested: max_out,
            available: n,
        });
    }
    Ok(())
}

fn translation_run(
    spec: &GridSpec,
    master_seed: u64,
    run: usize,
    fixed_gt: Option<&PoseSequence>,
) -> Result<Vec<MetricGrid>> {
    let generated;
    let gt = match fixed_gt {
        Some(seq) => seq,
        None => {
            let mut rng = stream_rng(master_seed, run_stream(run, 0));
            generated = generate_ground_truth(spec.n_poses, 1.0, &mut rng)?;
            &generated
        }
    };
    let (rows, cols) = (spec.outlier_counts.len(), spec.noise_levels.len());
    let mut grids: Vec<MetricGrid> = TRANSLATION_METRICS
        .iter()
        .map(|m| MetricGrid::zeros(m, rows, cols))
        .collect();
    let params = DteParams::default();
    for (oi, &n_outliers) in spec.outlier_counts.iter().enumerate() {
        for (ni, &sigma) in spec.noise_levels.iter().enumerate() {
            let cell = (oi * cols + ni) as u64;
            let mut rng = stream_rng(master_seed, run_stream(run, cell + 1));
            let cfg = CorruptionConfig {
                sigma_pos: sigma,
                sigma_rot_deg: spec.sigma_rot_deg,
                n_outliers,
                outlier_cube_side: 10.0,
                apply_random_sim3: spec.apply_random_sim3,
            };
            let tag = || {
                format!("translation grid run {run}, cell ({n_outliers} outliers, noise {sigma})")
            };
            let (est, _) = corrupt_trajectory(gt, &cfg, &mut rng).map_err(|e| e.context(tag()))?;
            let ate = compute_ate(gt, &est, true).map_err(|e| e.context(tag()))?;
            let dte = compute_dte(gt, &est, &params, true).map_err(|e| e.context(tag()))?;
            grids[0].values[oi][ni] = ate;
            grids[1].values[oi][ni] = dte.dte;
            grids[2].values[oi][ni] = dte.dte_mean;
            grids[3].values[oi][ni] = dte.dte_rms;
        }
    }
    Ok(grids)
}

fn rotation_run(
    spec: &GridSpec,
    master_seed: u64,
    run: usize,
    fixed_gt: Option<&[RotationMatrix]>,
) -> Result<Vec<MetricGrid>> {
    let generated: Vec<RotationMatrix>;
    let gt = match fixed_gt {
        Some(rotations) => rotations,
        None => {
            let mut rng = stream_rng(master_seed, run_stream(run, 0));
            generated = (0..spec.n_poses)
                .map(|_| random_rotation(&mut rng))
                .collect();
            &generated
        }
    };
    let n = gt.len();
    let (rows, cols) = (spec.outlier_counts.len(), spec.noise_levels.len());
    let mut grids: Vec<MetricGrid> = ROTATION_METRICS
        .iter()
        .map(|m| MetricGrid::zeros(m, rows, cols))
        .collect();
    for (oi, &n_outliers) in spec.outlier_counts.iter().enumerate() {
        for (ni, &sigma_deg) in spec.noise_levels.iter().enumerate() {
            let cell = (oi * cols + ni) as u64;
            let mut rng = stream_rng(master_seed, run_stream(run, cell + 1));
            // A global frame offset, absorbed by the metrics' alignment step.
            let frame = random_rotation(&mut rng);
            let sigma_rad = sigma_deg.to_radians();
            let mut est: Vec<RotationMatrix> = gt
                .iter()
                .map(|g| {
                    let moved = frame * *g;
                    if sigma_rad > 0.0 {
                        perturb_rotation(&moved, sigma_rad, &mut rng)
                    } else {
                        moved
                    }
                })
                .collect();
            let mut outliers = index::sample(&mut rng, n, n_outliers).into_vec();
            outliers.sort_unstable();
            for i in outliers {
                est[i] = random_rotation(&mut rng);
            }
            let table = rotation_error_table(gt, &est).map_err(|e| {
                e.context(format!(
                    "rotation grid run {run}, cell ({n_outliers} outliers, noise {sigma_deg} deg)"
                ))
            })?;
            let dre = table.blended(0.5);
            for (grid, value) in grids.iter_mut().zip([
                table.median_1,
                table.mean_1,
                table.rms_1,
                table.median_2,
                table.mean_2,
                table.rms_2,
                dre,
            ]) {
                grid.values[oi][ni] = value;
            }
        }
    }
    Ok(grids)
}

fn aggregate_grid(
    spec: &GridSpec,
    master_seed: u64,
    serial: bool,
    run_fn: impl Fn(usize) -> Result<Vec<MetricGrid>> + Sync,
) -> Result<GridResult> {
    let per_run = if serial {
        exec::map_indexed_serial(spec.runs, &run_fn)
    } else {
        exec::map_indexed(spec.runs, &run_fn)
    };
    let per_run: Vec<Vec<MetricGrid>> = per_run.into_iter().collect::<Result<_>>()?;

    let names = spec.metric_set.metric_names();
    let (rows, cols) = (spec.outlier_counts.len(), spec.noise_levels.len());
    let mut grids: Vec<MetricGrid> = names
        .iter()
        .map(|m| MetricGrid::zeros(m, rows, cols))
        .collect();
    for run_grids in &per_run {
        for (acc, raw) in grids.iter_mut().zip(run_grids) {
            let max = raw.max_value();
            // An (effectively) all-zero run contributes zeros. The threshold
            // keeps pure floating-point residue (e.g. the ~1e-16 error of
            // aligning a trajectory to an exact copy of itself) from being
            // inflated to 1.0 by the normalization.
            if max <= ZERO_GRID_MAX {
                continue;
            }
            for (acc_row, raw_row) in acc.values.iter_mut().zip(&raw.values) {
                for (a, &v) in acc_row.iter_mut().zip(raw_row) {
                    *a += v / max;
                }
            }
        }
    }
    let runs = spec.runs as f64;
    for grid in &mut grids {
        for row in &mut grid.values {
            for v in row {
                // min(1) guards the upper bound against accumulated rounding.
                *v = (*v / runs).min(1.0);
            }
        }
    }
    let raw_runs = spec.retain_raw.then_some(per_run);
    Ok(GridResult {
        spec: spec.clone(),
        master_seed,
        grids,
        raw_runs,
    })
}

/// Run the position-metric sensitivity grid with synthetic ground truth
/// (fresh poses per run), parallel across runs when the `parallel` feature
/// is enabled.
pub fn run_translation_grid(spec: &GridSpec, master_seed: u64) -> Result<GridResult> {
    spec.validate()?;
    expect_metric_set(spec, MetricSet::Translation, "run_translation_grid")?;
    check_outlier_budget(spec, spec.n_poses)?;
    aggregate_grid(spec, master_seed, false, |run| {
        translation_run(spec, master_seed, run, None)
    })
}

/// Sequential variant of [`run_translation_grid`]; same output bit for bit.
pub fn run_translation_grid_serial(spec: &GridSpec, master_seed: u64) -> Result<GridResult> {
    spec.validate()?;
    expect_metric_set(spec, MetricSet::Translation, "run_translation_grid_serial")?;
    check_outlier_budget(spec, spec.n_poses)?;
    aggregate_grid(spec, master_seed, true, |run| {
        translation_run(spec, master_seed, run, None)
    })
}

/// Run the translation grid against a fixed ground-truth trajectory (e.g. a
/// prepared real sequence) instead of synthetic poses; `spec.n_poses` is
/// ignored.
pub fn run_translation_grid_on(
    gt: &PoseSequence,
    spec: &GridSpec,
    master_seed: u64,
) -> Result<GridResult> {
    spec.validate()?;
    expect_metric_set(spec, MetricSet::Translation, "run_translation_grid_on")?;
    check_outlier_budget(spec, gt.len())?;
    gt.require_orientations("ground truth")?;
    aggregate_grid(spec, master_seed, false, |run| {
        translation_run(spec, master_seed, run, Some(gt))
    })
}

/// Run the orientation-metric sensitivity grid with synthetic ground truth.
pub fn run_rotation_grid(spec: &GridSpec, master_seed: u64) -> Result<GridResult> {
    spec.validate()?;
    expect_metric_set(spec, MetricSet::Rotation, "run_rotation_grid")?;
    check_outlier_budget(spec, spec.n_poses)?;
    aggregate_grid(spec, master_seed, false, |run| {
        rotation_run(spec, master_seed, run, None)
    })
}

/// Sequential variant of [`run_rotation_grid`]; same output bit for bit.
pub fn run_rotation_grid_serial(spec: &GridSpec, master_seed: u64) -> Result<GridResult> {
    spec.validate()?;
    expect_metric_set(spec, MetricSet::Rotation, "run_rotation_grid_serial")?;
    check_outlier_budget(spec, spec.n_poses)?;
    aggregate_grid(spec, master_seed, true, |run| {
        rotation_run(spec, master_seed, run, None)
    })
}

/// Run the rotation grid against fixed ground-truth orientations;
/// `spec.n_poses` is ignored.
pub fn run_rotation_grid_on(
    gt: &[RotationMatrix],
    spec: &GridSpec,
    master_seed: u64,
) -> Result<GridResult> {
    spec.validate()?;
    expect_metric_set(spec, MetricSet::Rotation, "run_rotation_grid_on")?;
    if gt.is_empty() {
        return Err(Error::EmptyInput("ground-truth orientations"));
    }
    check_outlier_budget(spec, gt.len())?;
    aggregate_grid(spec, master_seed, false, |run| {
        rotation_run(spec, master_seed, run, Some(gt))
    })
}

/// Which corruption parameter a calibration sweep varies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CalibrationSweepAxis {
    /// Vary the rotation noise (degrees) at a fixed outlier count.
    Noise {
        sigma_levels_deg: Vec<f64>,
        n_outliers: usize,
    },
    /// Vary the outlier count at a fixed noise level (degrees).
    Outliers {
        outlier_counts: Vec<usize>,
        sigma_deg: f64,
    },
}

impl CalibrationSweepAxis {
    /// The swept (noise level, outlier count) settings, in axis order.
    pub fn settings(&self) -> Vec<(f64, usize)> {
        match self {
            CalibrationSweepAxis::Noise {
                sigma_levels_deg,
                n_outliers,
            } => sigma_levels_deg.iter().map(|&s| (s, *n_outliers)).collect(),
            CalibrationSweepAxis::Outliers {
                outlier_counts,
                sigma_deg,
            } => outlier_counts.iter().map(|&k| (*sigma_deg, k)).collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        let settings = self.settings();
        if settings.is_empty() {
            return Err(Error::EmptyInput("sweep settings"));
        }
        if settings.iter().any(|(s, _)| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidParameter(
                "noise levels must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// A calibration accuracy sweep: at each setting, synthesize a marker/camera
/// rig, corrupt the camera orientations, calibrate from scratch, and measure
/// the angular error of the recovered camera-to-marker rotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSweepSpec {
    pub axis: CalibrationSweepAxis,
    /// Independent datasets per setting.
    pub trials: usize,
    /// Poses per dataset.
    pub n_poses: usize,
    /// Also solve each trial seeded at the true rotation, and record the
    /// angular gap between the two solutions (a convergence check).
    pub compare_gt_seed: bool,
}

impl CalibrationSweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.axis.validate()?;
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.n_poses == 0 {
            return Err(Error::InvalidParameter(
                "pose count must be at least 1".into(),
            ));
        }
        let max_out = self
            .axis
            .settings()
            .iter()
            .map(|&(_, k)| k)
            .max()
            .unwrap_or(0);
        if max_out > self.n_poses {
            return Err(Error::TooManyOutliers {
                requested: max_out,
                available: self.n_poses,
            });
        }
        Ok(())
    }
}

/// Error distribution of one sweep setting, angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSetting {
    pub sigma_deg: f64,
    pub n_outliers: usize,
    /// Per-trial angular error of the recovered camera-to-marker rotation.
    pub errors_deg: Vec<f64>,
    pub median_error_deg: f64,
    pub lower_quartile_deg: f64,
    pub upper_quartile_deg: f64,
    /// Per-trial gap to the ground-truth-seeded solution, when requested.
    pub seed_gaps_deg: Option<Vec<f64>>,
    pub median_seed_gap_deg: Option<f64>,
    pub max_seed_gap_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSweepResult {
    pub spec: CalibrationSweepSpec,
    pub master_seed: u64,
    pub settings: Vec<CalibrationSetting>,
}

fn calibration_trial(
    n: usize,
    sigma_deg: f64,
    n_outliers: usize,
    master_seed: u64,
    base: u64,
    compare_gt_seed: bool,
) -> Result<(f64, Option<f64>)> {
    let mut data_rng = stream_rng(master_seed, base * 4);
    let markers: Vec<RotationMatrix> = (0..n).map(|_| random_rotation(&mut data_rng)).collect();
    let r_align = random_rotation(&mut data_rng);
    let true_r_mc = random_rotation(&mut data_rng);
    let sigma_rad = sigma_deg.to_radians();
    let mut est: Vec<RotationMatrix> = markers
        .iter()
        .map(|m| {
            let clean = r_align.transpose() * *m * true_r_mc;
            if sigma_rad > 0.0 {
                perturb_rotation(&clean, sigma_rad, &mut data_rng)
            } else {
                clean
            }
        })
        .collect();
    let mut outliers = index::sample(&mut data_rng, n, n_outliers).into_vec();
    outliers.sort_unstable();
    for i in outliers {
        est[i] = random_rotation(&mut data_rng);
    }

    let mut search_rng = stream_rng(master_seed, base * 4 + 1);
    let solved = calibrate_camera_to_marker(&markers, &est, &mut search_rng)?;
    let error_deg = geodesic_distance(&solved.r_mc, &true_r_mc).to_degrees();
    let gap_deg = if compare_gt_seed {
        let mut seed_rng = stream_rng(master_seed, base * 4 + 2);
        let seeded = calibrate_from_ground_truth_seed(&markers, &est, &true_r_mc, &mut seed_rng)?;
        Some(geodesic_distance(&solved.r_mc, &seeded.r_mc).to_degrees())
    } else {
        None
    };
    Ok((error_deg, gap_deg))
}

fn calibration_sweep_impl(
    spec: &CalibrationSweepSpec,
    master_seed: u64,
    serial: bool,
) -> Result<CalibrationSweepResult> {
    spec.validate()?;
    let settings = spec.axis.settings();
    let total = settings.len() * spec.trials;
    let run_one = |flat: usize| -> Result<(f64, Option<f64>)> {
        let (sigma_deg, n_outliers) = settings[flat / spec.trials];
        calibration_trial(
            spec.n_poses,
            sigma_deg,
            n_outliers,
            master_seed,
            flat as u64,
            spec.compare_gt_seed,
        )
        .map_err(|e| {
            e.context(format!(
                "calibration sweep, setting (noise {sigma_deg} deg, {n_outliers} outliers), trial {}",
                flat % spec.trials
            ))
        })
    };
    let outcomes = if serial {
        exec::map_indexed_serial(total, run_one)
    } else {
        exec::map_indexed(total, run_one)
    };
    let outcomes: Vec<(f64, Option<f64>)> = outcomes.into_iter().collect::<Result<_>>()?;

    let mut out = Vec::with_capacity(settings.len());
    for (s, &(sigma_deg, n_outliers)) in settings.iter().enumerate() {
        let block = &outcomes[s * spec.trials..(s + 1) * spec.trials];
        let errors_deg: Vec<f64> = block.iter().map(|(e, _)| *e).collect();
        let seed_gaps_deg: Option<Vec<f64>> = spec.compare_gt_seed.then(|| {
            block
                .iter()
                .map(|(_, g)| g.expect("gap recorded"))
                .collect()
        });
        let median_seed_gap_deg = match &seed_gaps_deg {
            Some(gaps) => Some(quantile(gaps, 0.5)?),
            None => None,
        };
        let max_seed_gap_deg = seed_gaps_deg
            .as_ref()
            .map(|gaps| gaps.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)));
        out.push(CalibrationSetting {
            sigma_deg,
            n_outliers,
            median_error_deg: quantile(&errors_deg, 0.5)?,
            lower_quartile_deg: quantile(&errors_deg, 0.25)?,
            upper_quartile_deg: quantile(&errors_deg, 0.75)?,
            errors_deg,
            seed_gaps_deg,
            median_seed_gap_deg,
            max_seed_gap_deg,
        });
    }
    Ok(CalibrationSweepResult {
        spec: spec.clone(),
        master_seed,
        settings: out,
    })
}

/// Run a calibration accuracy sweep, parallel across trials when the
/// `parallel` feature is enabled.
pub fn run_calibration_sweep(
    spec: &CalibrationSweepSpec,
    master_seed: u64,
) -> Result<CalibrationSweepResult> {
    calibration_sweep_impl(spec, master_seed, false)
}

/// Sequential variant of [`run_calibration_sweep`]; same output bit for bit.
pub fn run_calibration_sweep_serial(
    spec: &CalibrationSweepSpec,
    master_seed: u64,
) -> Result<CalibrationSweepResult> {
    calibration_sweep_impl(spec, master_seed, true)
}

/// Downsample a timestamped trajectory (keep the first pose, then each pose
/// at least `interval` seconds after the last kept one) and rescale/shift the
/// positions so their bounding box fits the centered unit cube with the
/// largest extent mapped to 1.
pub fn load_and_prepare_real_gt(seq: &PoseSequence, interval: f64) -> Result<PoseSequence> {
    if !interval.is_finite() || interval < 0.0 {
        return Err(Error::InvalidParameter(
            "sampling interval must be finite and non-negative".into(),
        ));
    }
    let timestamps = seq.require_timestamps()?;

    let mut keep = vec![0];
    let mut last = timestamps[0];
    for (i, &t) in timestamps.iter().enumerate().skip(1) {
        if t - last >= interval {
            keep.push(i);
            last = t;
        }
    }

    let kept_positions: Vec<Vector3<f64>> = keep.iter().map(|&i| seq.positions()[i]).collect();
    let mut min = kept_positions[0];
    let mut max = kept_positions[0];
    for p in &kept_positions {
        min = min.inf(p);
        max = max.sup(p);
    }
    let extent = max - min;
    let largest = extent.max();
    if largest <= 0.0 {
        return Err(Error::DegenerateGeometry(
            "trajectory has zero spatial extent; cannot fit it to the unit cube".into(),
        ));
    }
    let scale = 1.0 / largest;
    let center = (min + max) / 2.0;
    let positions = kept_positions
        .iter()
        .map(|p| (p - center) * scale)
        .collect();
    let orientations = seq
        .orientations()
        .map(|all| keep.iter().map(|&i| all[i]).collect());
    let kept_timestamps = keep.iter().map(|&i| timestamps[i]).collect();
    PoseSequence::new(positions, orientations, Some(kept_timestamps))
}
