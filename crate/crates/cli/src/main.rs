//! Command-line front end for the trajectory metrics library: evaluate an
//! estimated camera trajectory against ground truth, calibrate the
//! camera-to-marker rotation of a motion-capture rig, and rerun the seeded
//! sensitivity studies.

use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::Vector3;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use trajeval::calibration::{
    calibrate_camera_to_marker, calibrate_from_ground_truth_seed, DegeneracyReport,
};
use trajeval::error::{Error, Result};
use trajeval::io::{
    associate, parse_pose_file, write_grid_csv, write_heatmap_svg, write_json, write_report_json,
    AssociationPolicy,
};
use trajeval::metrics::{evaluate, DteParams, EvalParams, MetricReport};
use trajeval::simulation::{
    run_calibration_sweep, run_rotation_grid, run_translation_grid, CalibrationSweepAxis,
    CalibrationSweepResult, CalibrationSweepSpec, GridSpec, MetricSet,
};
use trajeval::so3::RotationMatrix;
use trajeval::trajectory::{
    markers_to_camera_ground_truth, MarkerExtrinsics, MarkerSequence, PoseSequence,
};

/// Exit code for unreadable or malformed inputs and bad parameters.
const EXIT_USAGE: u8 = 2;
/// Exit code for data that parsed but cannot be evaluated (degenerate
/// geometry, too few poses, no overlapping timestamps, ...).
const EXIT_DEGENERATE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "trajeval",
    version,
    about = "Robust accuracy metrics for camera trajectories",
    long_about = "Robust accuracy metrics for camera trajectories.\n\n\
        Pose files are plain text, one pose per line: timestamp tx ty tz qx qy qz qw\n\
        (scalar-last quaternion, '#' starts a comment). Simulation commands use all\n\
        cores by default; set RAYON_NUM_THREADS to limit them."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an estimated trajectory against ground truth
    Evaluate(EvaluateArgs),
    /// Solve the camera-to-marker rotation from paired orientations
    Calibrate(CalibrateArgs),
    /// Rerun the seeded sensitivity studies
    #[command(subcommand)]
    Simulate(SimulateCommand),
}

#[derive(Args)]
struct EvaluateArgs {
    /// Ground-truth trajectory file
    gt_file: PathBuf,
    /// Estimated trajectory file
    est_file: PathBuf,
    /// Winsorization multiplier for the discernible metrics
    #[arg(long, default_value_t = 5.0)]
    k: f64,
    /// Blend weight between the mean and RMS halves of the discernible metrics
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Align rigidly instead of fitting a relative scale
    #[arg(long)]
    no_scale: bool,
    /// Maximum timestamp difference when pairing poses (seconds)
    #[arg(long, default_value_t = 0.02)]
    max_time_diff: f64,
    /// Camera-to-marker rotation: inline "qx qy qz qw" or a file of four numbers
    #[arg(long, allow_hyphen_values = true)]
    marker_rotation: Option<String>,
    /// Camera center in the marker frame: inline "x y z" or a file of three numbers
    #[arg(long, allow_hyphen_values = true)]
    marker_translation: Option<String>,
    /// Include per-pose error traces in the output
    #[arg(long)]
    per_pose: bool,
    /// Print the full report as JSON
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// Print the report as CSV
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Marker trajectory recorded by the ground-truth rig
    gt_markers_file: PathBuf,
    /// Estimated camera trajectory file
    est_file: PathBuf,
    /// Random-search seed; equal seeds reproduce the output exactly
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip the global search and refine from this rotation
    /// (inline "qx qy qz qw" or a file of four numbers)
    #[arg(long, allow_hyphen_values = true)]
    gt_seed_rotation: Option<String>,
    /// Print the rotation-axis analysis of both orientation sets
    #[arg(long)]
    report_degeneracy: bool,
    /// Maximum timestamp difference when pairing poses (seconds)
    #[arg(long, default_value_t = 0.02)]
    max_time_diff: f64,
}

#[derive(Subcommand)]
enum SimulateCommand {
    /// Translation metrics over a position-noise x outlier grid
    TranslationGrid(GridArgs),
    /// Rotation metrics over a rotation-noise x outlier grid
    RotationGrid(GridArgs),
    /// Calibration accuracy sweeps over noise and over outliers
    CalibrationSweep(SweepArgs),
}

#[derive(Args)]
struct GridArgs {
    /// Independent simulation runs to average
    #[arg(long, default_value_t = 100)]
    runs: usize,
    /// Poses per simulated trajectory
    #[arg(long, default_value_t = 100)]
    poses: usize,
    /// Master seed; equal seeds reproduce all outputs byte for byte
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for the CSV/SVG/JSON outputs (created if missing)
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Calibration trials per sweep setting
    #[arg(long, default_value_t = 100)]
    runs: usize,
    /// Poses per simulated rig recording
    #[arg(long, default_value_t = 100)]
    poses: usize,
    /// Master seed; equal seeds reproduce all outputs byte for byte
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for the CSV/JSON outputs (created if missing)
    #[arg(long)]
    out_dir: PathBuf,
    /// Also solve every trial seeded at the true rotation and report the gap
    #[arg(long)]
    compare_gt_seed: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_degenerate() {
                ExitCode::from(EXIT_DEGENERATE)
            } else {
                ExitCode::from(EXIT_USAGE)
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Evaluate(args) => run_evaluate(&args),
        Command::Calibrate(args) => run_calibrate(&args),
        Command::Simulate(cmd) => run_simulate(&cmd),
    }
}

/// Reads and parses a pose file, forwarding parser warnings to stderr with
/// the file name attached.
fn load_trajectory(path: &Path) -> Result<PoseSequence> {
    let name = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::from(e).context(name.clone()))?;
    let parsed = parse_pose_file(BufReader::new(file)).map_err(|e| e.context(name.clone()))?;
    for warning in &parsed.warnings {
        eprintln!("warning: {name}: {warning}");
    }
    Ok(parsed.sequence)
}

/// Parses an option that is either an inline list of numbers (comma or
/// whitespace separated) or the name of a file containing them.
fn numbers_arg(arg: &str, expect: usize, what: &str) -> Result<Vec<f64>> {
    let inline: std::result::Result<Vec<f64>, _> = arg
        .split([',', ' ', '\t'])
        .filter(|token| !token.is_empty())
        .map(str::parse)
        .collect();
    let values = match inline {
        Ok(values) if !values.is_empty() => values,
        _ => {
            let text = fs::read_to_string(arg).map_err(|e| {
                Error::InvalidParameter(format!(
                    "{what}: neither an inline number list nor a readable file ({arg}: {e})"
                ))
            })?;
            let tokens = text
                .lines()
                .flat_map(|line| line.split('#').next().unwrap_or("").split_whitespace());
            tokens
                .map(|token| {
                    token.parse().map_err(|_| {
                        Error::InvalidParameter(format!(
                            "{what}: invalid number {token:?} in {arg}"
                        ))
                    })
                })
                .collect::<Result<_>>()?
        }
    };
    if values.len() != expect {
        return Err(Error::InvalidParameter(format!(
            "{what}: expected {expect} numbers, found {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("{what}: non-finite value")));
    }
    Ok(values)
}

fn rotation_arg(arg: &str, what: &str) -> Result<RotationMatrix> {
    let q = numbers_arg(arg, 4, what)?;
    RotationMatrix::from_quaternion_xyzw(q[0], q[1], q[2], q[3])
}

fn run_evaluate(args: &EvaluateArgs) -> Result<()> {
    let gt = load_trajectory(&args.gt_file)?;
    let est = load_trajectory(&args.est_file)?;
    let policy = AssociationPolicy {
        max_time_diff: args.max_time_diff,
    };
    let (gt, est) = associate(&gt, &est, &policy)?;

    if args.marker_translation.is_none() {
        eprintln!(
            "warning: no --marker-translation; ground-truth centers are scored as camera \
             centers, so any fixed sensor-to-camera offset counts as translation error"
        );
    }
    let gt = apply_marker_extrinsics(gt, args)?;

    let params = EvalParams {
        dte: DteParams::new(args.k, args.alpha)?,
        with_scale: !args.no_scale,
        keep_per_pose: args.per_pose,
    };
    let report = evaluate(&gt, &est, &params)?;

    if args.json {
        write_report_json(&report, io::stdout().lock())?;
    } else if args.csv {
        print_report_csv(&report);
    } else {
        print_report_human(&report);
    }
    Ok(())
}

/// Converts associated ground-truth marker poses to camera poses when
/// extrinsics were given on the command line.
fn apply_marker_extrinsics(gt: PoseSequence, args: &EvaluateArgs) -> Result<PoseSequence> {
    if args.marker_rotation.is_none() && args.marker_translation.is_none() {
        return Ok(gt);
    }
    let rotation = match &args.marker_rotation {
        Some(arg) => rotation_arg(arg, "--marker-rotation")?,
        None => RotationMatrix::identity(),
    };
    let translation = match &args.marker_translation {
        Some(arg) => {
            let t = numbers_arg(arg, 3, "--marker-translation")?;
            Vector3::new(t[0], t[1], t[2])
        }
        None => Vector3::zeros(),
    };
    let orientations = gt.require_orientations("ground truth")?.to_vec();
    let timestamps = gt.timestamps().map(<[f64]>::to_vec);
    let markers = MarkerSequence::new(gt.positions().to_vec(), orientations, timestamps)?;
    let extrinsics = MarkerExtrinsics {
        rotation,
        translation,
    };
    Ok(markers_to_camera_ground_truth(&markers, &extrinsics))
}

fn print_report_human(report: &MetricReport) {
    println!("poses evaluated: {}", report.pose_count);
    println!("ATE (rms, scene units)   {:>14.6e}", report.ate);
    println!("DTE (blended, 0..1)      {:>14.6e}", report.dte);
    println!("  mean component         {:>14.6e}", report.dte_mean);
    println!("  rms component          {:>14.6e}", report.dte_rms);
    println!("DRE (blended, degrees)   {:>14.6e}", report.dre_deg);
    println!(
        "winsorize threshold      {:>14.6e}",
        report.winsorize_threshold
    );
    let t = &report.rotation_table;
    println!("rotation errors (degrees):");
    println!(
        "  {:<9} {:>14} {:>14} {:>14}",
        "alignment", "median", "mean", "rms"
    );
    println!(
        "  {:<9} {:>14.6e} {:>14.6e} {:>14.6e}",
        "L1", t.median_1, t.mean_1, t.rms_1
    );
    println!(
        "  {:<9} {:>14.6e} {:>14.6e} {:>14.6e}",
        "L2", t.median_2, t.mean_2, t.rms_2
    );
    if let Some(trace) = &report.per_pose {
        println!("per-pose errors:");
        println!(
            "  {:>6} {:>14} {:>14} {:>14}",
            "index", "distance", "normalized", "rot_err_deg"
        );
        let rows = trace
            .distances
            .iter()
            .zip(&trace.normalized)
            .zip(&trace.rotation_errors_deg);
        for (i, ((d, n), r)) in rows.enumerate() {
            println!("  {i:>6} {d:>14.6e} {n:>14.6e} {r:>14.6e}");
        }
    }
}

fn print_report_csv(report: &MetricReport) {
    let t = &report.rotation_table;
    println!("metric,value");
    println!("pose_count,{}", report.pose_count);
    let rows = [
        ("ate", report.ate),
        ("dte", report.dte),
        ("dte_mean", report.dte_mean),
        ("dte_rms", report.dte_rms),
        ("dre_deg", report.dre_deg),
        ("median_1_deg", t.median_1),
        ("mean_1_deg", t.mean_1),
        ("rms_1_deg", t.rms_1),
        ("median_2_deg", t.median_2),
        ("mean_2_deg", t.mean_2),
        ("rms_2_deg", t.rms_2),
        ("winsorize_threshold", report.winsorize_threshold),
    ];
    for (name, value) in rows {
        println!("{name},{value:.16e}");
    }
    if let Some(trace) = &report.per_pose {
        println!();
        println!("index,distance,normalized,rotation_error_deg");
        let rows = trace
            .distances
            .iter()
            .zip(&trace.normalized)
            .zip(&trace.rotation_errors_deg);
        for (i, ((d, n), r)) in rows.enumerate() {
            println!("{i},{d:.16e},{n:.16e},{r:.16e}");
        }
    }
}

fn run_calibrate(args: &CalibrateArgs) -> Result<()> {
    let markers = load_trajectory(&args.gt_markers_file)?;
    let est = load_trajectory(&args.est_file)?;
    let policy = AssociationPolicy {
        max_time_diff: args.max_time_diff,
    };
    let (markers, est) = associate(&markers, &est, &policy)?;
    let marker_r = markers.require_orientations("ground-truth marker")?;
    let est_r = est.require_orientations("estimate")?;

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let result = match &args.gt_seed_rotation {
        Some(arg) => {
            let seed_rotation = rotation_arg(arg, "--gt-seed-rotation")?;
            calibrate_from_ground_truth_seed(marker_r, est_r, &seed_rotation, &mut rng)?
        }
        None => calibrate_camera_to_marker(marker_r, est_r, &mut rng)?,
    };

    println!("poses used: {}", marker_r.len());
    print_quaternion("camera-to-marker rotation (qx qy qz qw)", &result.r_mc);
    print_quaternion("frame alignment rotation  (qx qy qz qw)", &result.r_align);
    println!("final cost (radians): {:.6e}", result.final_cost);
    if args.report_degeneracy {
        print_degeneracy("marker orientations", &result.marker_degeneracy);
        print_degeneracy("estimate orientations", &result.estimate_degeneracy);
    }
    if result.is_degenerate() {
        eprintln!(
            "warning: the orientation sets do not pin the calibration down; the reported \
             rotations are one member of an equal-cost family (see --report-degeneracy)"
        );
    }
    Ok(())
}

fn print_quaternion(label: &str, r: &RotationMatrix) {
    let [x, y, z, w] = r.to_quaternion_xyzw();
    println!("{label}: {x} {y} {z} {w}");
}

fn print_degeneracy(label: &str, report: &DegeneracyReport) {
    match (report.degenerate, &report.common_axis) {
        (true, Some(axis)) => println!(
            "{label}: DEGENERATE, common rotation axis [{:.6} {:.6} {:.6}], \
             max axis deviation {:.6e} rad",
            axis.x, axis.y, axis.z, report.max_axis_deviation
        ),
        (true, None) => println!("{label}: DEGENERATE, orientations essentially constant"),
        (false, _) => println!(
            "{label}: axes span the rotation group, max axis deviation {:.6e} rad",
            report.max_axis_deviation
        ),
    }
}

fn run_simulate(cmd: &SimulateCommand) -> Result<()> {
    match cmd {
        SimulateCommand::TranslationGrid(args) => run_grid(MetricSet::Translation, args),
        SimulateCommand::RotationGrid(args) => run_grid(MetricSet::Rotation, args),
        SimulateCommand::CalibrationSweep(args) => run_sweep(args),
    }
}

/// Renders `body` into a buffer and writes it to `dir/name` in one shot, so
/// write failures surface as errors instead of vanishing in a drop.
fn write_file(dir: &Path, name: &str, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    body(&mut buf)?;
    let path = dir.join(name);
    fs::write(&path, &buf).map_err(|e| Error::from(e).context(path.display().to_string()))
}

fn run_grid(metric_set: MetricSet, args: &GridArgs) -> Result<()> {
    let spec = match metric_set {
        MetricSet::Translation => GridSpec::standard_translation(args.runs, args.poses),
        MetricSet::Rotation => GridSpec::standard_rotation(args.runs, args.poses),
    };
    let result = match metric_set {
        MetricSet::Translation => run_translation_grid(&spec, args.seed)?,
        MetricSet::Rotation => run_rotation_grid(&spec, args.seed)?,
    };
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| Error::from(e).context(args.out_dir.display().to_string()))?;

    for grid in &result.grids {
        write_file(&args.out_dir, &format!("{}.csv", grid.metric), |buf| {
            write_grid_csv(&result, &grid.metric, buf)
        })?;
        write_file(&args.out_dir, &format!("{}.svg", grid.metric), |buf| {
            write_heatmap_svg(
                grid,
                &result.spec.noise_levels,
                &result.spec.outlier_counts,
                buf,
            )
        })?;
    }
    write_file(&args.out_dir, "grid.json", |buf| write_json(&result, buf))?;

    let label = match metric_set {
        MetricSet::Translation => "translation",
        MetricSet::Rotation => "rotation",
    };
    println!(
        "{label} grid: {} runs of {} poses, seed {}",
        args.runs, args.poses, args.seed
    );
    println!(
        "{:<10} {:>12} {:>12} {:>12} {:>12}",
        "metric", "min", "max", "row-range", "col-range"
    );
    for grid in &result.grids {
        let min = grid
            .values
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min);
        println!(
            "{:<10} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
            grid.metric,
            min,
            grid.max_value(),
            grid.mean_row_range(),
            grid.mean_column_range()
        );
    }
    println!(
        "wrote {} files to {}",
        result.grids.len() * 2 + 1,
        args.out_dir.display()
    );
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> Result<()> {
    let noise_spec = CalibrationSweepSpec {
        axis: CalibrationSweepAxis::Noise {
            sigma_levels_deg: (0..=10).map(f64::from).collect(),
            n_outliers: args.poses / 20,
        },
        trials: args.runs,
        n_poses: args.poses,
        compare_gt_seed: args.compare_gt_seed,
    };
    // Up to 20% outliers in 2% steps; duplicates collapse at small pose counts.
    let mut outlier_counts: Vec<usize> = (0..=10).map(|i| i * args.poses / 50).collect();
    outlier_counts.dedup();
    let outlier_spec = CalibrationSweepSpec {
        axis: CalibrationSweepAxis::Outliers {
            outlier_counts,
            sigma_deg: 5.0,
        },
        trials: args.runs,
        n_poses: args.poses,
        compare_gt_seed: args.compare_gt_seed,
    };
    let noise = run_calibration_sweep(&noise_spec, args.seed)?;
    let outliers = run_calibration_sweep(&outlier_spec, args.seed.wrapping_add(1))?;

    fs::create_dir_all(&args.out_dir)
        .map_err(|e| Error::from(e).context(args.out_dir.display().to_string()))?;
    write_file(&args.out_dir, "noise_sweep.csv", |buf| {
        write_sweep_csv(&noise, buf)
    })?;
    write_file(&args.out_dir, "outlier_sweep.csv", |buf| {
        write_sweep_csv(&outliers, buf)
    })?;
    write_file(&args.out_dir, "sweep.json", |buf| {
        write_json(
            &serde_json::json!({ "noise": &noise, "outliers": &outliers }),
            buf,
        )
    })?;

    println!(
        "calibration sweeps: {} trials of {} poses per setting, seed {}",
        args.runs, args.poses, args.seed
    );
    print_sweep_table(&noise);
    print_sweep_table(&outliers);
    println!("wrote 3 files to {}", args.out_dir.display());
    Ok(())
}

fn write_sweep_csv<W: Write>(result: &CalibrationSweepResult, mut writer: W) -> Result<()> {
    let gaps = result
        .settings
        .iter()
        .any(|s| s.median_seed_gap_deg.is_some());
    write!(
        writer,
        "sigma_deg,n_outliers,median_error_deg,lower_quartile_deg,upper_quartile_deg"
    )?;
    if gaps {
        write!(writer, ",median_seed_gap_deg,max_seed_gap_deg")?;
    }
    writeln!(writer)?;
    for s in &result.settings {
        write!(
            writer,
            "{},{},{:.16e},{:.16e},{:.16e}",
            s.sigma_deg,
            s.n_outliers,
            s.median_error_deg,
            s.lower_quartile_deg,
            s.upper_quartile_deg
        )?;
        if gaps {
            write!(
                writer,
                ",{:.16e},{:.16e}",
                s.median_seed_gap_deg.unwrap_or(f64::NAN),
                s.max_seed_gap_deg.unwrap_or(f64::NAN)
            )?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

fn print_sweep_table(result: &CalibrationSweepResult) {
    match &result.spec.axis {
        CalibrationSweepAxis::Noise { n_outliers, .. } => {
            println!("noise sweep ({n_outliers} outliers):");
        }
        CalibrationSweepAxis::Outliers { sigma_deg, .. } => {
            println!("outlier sweep (sigma {sigma_deg} deg):");
        }
    }
    let gaps = result
        .settings
        .iter()
        .any(|s| s.median_seed_gap_deg.is_some());
    print!(
        "  {:>9} {:>8} {:>12} {:>12} {:>12}",
        "sigma_deg", "outliers", "median_deg", "lq_deg", "uq_deg"
    );
    if gaps {
        print!(" {:>14}", "median_gap_deg");
    }
    println!();
    for s in &result.settings {
        print!(
            "  {:>9} {:>8} {:>12.6} {:>12.6} {:>12.6}",
            s.sigma_deg,
            s.n_outliers,
            s.median_error_deg,
            s.lower_quartile_deg,
            s.upper_quartile_deg
        );
        if let Some(gap) = s.median_seed_gap_deg {
            print!(" {gap:>14.6}");
        }
        println!();
    }
}
