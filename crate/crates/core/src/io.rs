//! Trajectory file I/O and result serialization.
//!
//! Pose files are TUM-style text: one `timestamp tx ty tz qx qy qz qw` line
//! per pose (Hamilton quaternion, scalar last), `#` comment lines, whitespace
//! separation. Results go out as CSV matrices, JSON, or SVG heatmaps.

use std::io::{BufRead, Write};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricReport;
use crate::simulation::{GridResult, MetricGrid};
use crate::so3::RotationMatrix;
use crate::trajectory::PoseSequence;

/// One pose as stored on disk, after quaternion renormalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseRecord {
    pub timestamp: f64,
    pub position: Vector3<f64>,
    pub orientation: RotationMatrix,
}

/// A parsed pose file: the sequence plus any non-fatal parse warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTrajectory {
    pub sequence: PoseSequence,
    pub warnings: Vec<String>,
}

/// How distant in time two poses may be and still count as the same instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssociationPolicy {
    /// Maximum |t_gt - t_est| for a pairing, seconds.
    pub max_time_diff: f64,
}

impl Default for AssociationPolicy {
    fn default() -> Self {
        AssociationPolicy {
            max_time_diff: 0.02,
        }
    }
}

fn parse_field(token: &str, line: usize, what: &str) -> Result<f64> {
    let value: f64 = token.parse().map_err(|_| Error::Parse {
        line,
        reason: format!("invalid {what} '{token}'"),
    })?;
    if !value.is_finite() {
        return Err(Error::Parse {
            line,
            reason: format!("non-finite {what} '{token}'"),
        });
    }
    Ok(value)
}

/// Parse a TUM-style pose file. Poses are sorted by timestamp; quaternions
/// are renormalized, with a warning when their norm is off by more than 1e-3.
pub fn parse_pose_file<R: BufRead>(reader: R) -> Result<ParsedTrajectory> {
    let mut records: Vec<PoseRecord> = Vec::new();
    let mut warnings = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(Error::Parse {
                line: line_no,
                reason: format!("expected 8 fields, found {}", fields.len()),
            });
        }
        let timestamp = parse_field(fields[0], line_no, "timestamp")?;
        let position = Vector3::new(
            parse_field(fields[1], line_no, "position")?,
            parse_field(fields[2], line_no, "position")?,
            parse_field(fields[3], line_no, "position")?,
        );
        let q: Vec<f64> = fields[4..8]
            .iter()
            .map(|t| parse_field(t, line_no, "quaternion component"))
            .collect::<Result<_>>()?;
        let norm = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
        if (norm - 1.0).abs() > 1e-3 {
            warnings.push(format!(
                "line {line_no}: quaternion norm {norm:.6} is off by more than 1e-3; renormalized"
            ));
        }
        let orientation =
            RotationMatrix::from_quaternion_xyzw(q[0], q[1], q[2], q[3]).map_err(|e| {
                Error::Parse {
                    line: line_no,
                    reason: e.to_string(),
                }
            })?;
        records.push(PoseRecord {
            timestamp,
            position,
            orientation,
        });
    }
    if records.is_empty() {
        return Err(Error::EmptyInput("pose file"));
    }
    records.sort_by(|a, b| a.timestamp.partial_cmp(&b.timestamp).expect("finite"));
    let sequence = PoseSequence::new(
        records.iter().map(|r| r.position).collect(),
        Some(records.iter().map(|r| r.orientation).collect()),
        Some(records.iter().map(|r| r.timestamp).collect()),
    )
    .map_err(|e| e.context("pose file"))?;
    Ok(ParsedTrajectory { sequence, warnings })
}

/// Write a pose sequence in the same TUM-style format.
///
/// Numbers use the shortest representation that parses back to the exact
/// same double. A sequence without timestamps gets its pose index as the
/// timestamp; one without orientations is rejected.
pub fn write_pose_file<W: Write>(seq: &PoseSequence, mut writer: W) -> Result<()> {
    let orientations = seq.require_orientations("output")?;
    writeln!(writer, "# timestamp tx ty tz qx qy qz qw")?;
    for i in 0..seq.len() {
        let t = seq.timestamps().map_or(i as f64, |ts| ts[i]);
        let p = seq.positions()[i];
        let [qx, qy, qz, qw] = orientations[i].to_quaternion_xyzw();
        writeln!(writer, "{t} {} {} {} {qx} {qy} {qz} {qw}", p.x, p.y, p.z)?;
    }
    Ok(())
}

/// Pair poses of two timestamped sequences: greedy one-to-one matching,
/// nearest |time difference| first, within `policy.max_time_diff`.
///
/// Returns (ground-truth side, estimate side) restricted to the matched
/// pairs, ordered by ground-truth time. The ground-truth side keeps its
/// timestamps; the estimate side drops its own, which pairing can leave
/// non-monotone.
pub fn associate(
    gt: &PoseSequence,
    est: &PoseSequence,
    policy: &AssociationPolicy,
) -> Result<(PoseSequence, PoseSequence)> {
    if !policy.max_time_diff.is_finite() || policy.max_time_diff <= 0.0 {
        return Err(Error::InvalidParameter(
            "association tolerance must be finite and positive".into(),
        ));
    }
    let gt_ts = gt.require_timestamps()?;
    let est_ts = est.require_timestamps()?;

    // Both sequences are time-sorted, so each gt pose sees a sliding window
    // of candidate est poses.
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    let mut window_start = 0;
    for (i, &t) in gt_ts.iter().enumerate() {
        while window_start < est_ts.len() && est_ts[window_start] < t - policy.max_time_diff {
            window_start += 1;
        }
        let mut j = window_start;
        while j < est_ts.len() && est_ts[j] <= t + policy.max_time_diff {
            candidates.push(((est_ts[j] - t).abs(), i, j));
            j += 1;
        }
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).expect("finite"));

    let mut gt_used = vec![false; gt.len()];
    let mut est_used = vec![false; est.len()];
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (_, i, j) in candidates {
        if !gt_used[i] && !est_used[j] {
            gt_used[i] = true;
            est_used[j] = true;
            pairs.push((i, j));
        }
    }
    if pairs.is_empty() {
        return Err(Error::NoAssociations);
    }
    pairs.sort_unstable();

    let select = |seq: &PoseSequence, pick: &dyn Fn(&(usize, usize)) -> usize, keep_ts: bool| {
        let idx: Vec<usize> = pairs.iter().map(pick).collect();
        PoseSequence::new(
            idx.iter().map(|&k| seq.positions()[k]).collect(),
            seq.orientations()
                .map(|o| idx.iter().map(|&k| o[k]).collect()),
            if keep_ts {
                seq.timestamps()
                    .map(|ts| idx.iter().map(|&k| ts[k]).collect())
            } else {
                None
            },
        )
    };
    let gt_matched = select(gt, &|&(i, _)| i, true)?;
    let est_matched = select(est, &|&(_, j)| j, false)?;
    Ok((gt_matched, est_matched))
}

/// Lossless-for-doubles rendering: 17 significant digits.
fn sig17(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Write one metric of a grid result as a CSV matrix: header row of noise
/// levels, header column of outlier counts, 17-significant-digit cells.
pub fn write_grid_csv<W: Write>(result: &GridResult, metric: &str, mut writer: W) -> Result<()> {
    let grid = result.grid(metric).ok_or_else(|| {
        Error::InvalidParameter(format!("metric '{metric}' is not part of this grid result"))
    })?;
    let header: Vec<String> = std::iter::once(csv_field(metric))
        .chain(result.spec.noise_levels.iter().map(|s| s.to_string()))
        .collect();
    writeln!(writer, "{}", header.join(","))?;
    for (row, &outliers) in grid.values.iter().zip(&result.spec.outlier_counts) {
        let line: Vec<String> = std::iter::once(outliers.to_string())
            .chain(row.iter().map(|&v| sig17(v)))
            .collect();
        writeln!(writer, "{}", line.join(","))?;
    }
    Ok(())
}

/// Serialize any result value as pretty JSON.
pub fn write_json<W: Write, T: Serialize>(value: &T, mut writer: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, value)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    writeln!(writer)?;
    Ok(())
}

/// Serialize a metric report as pretty JSON with stable field names.
pub fn write_report_json<W: Write>(report: &MetricReport, writer: W) -> Result<()> {
    write_json(report, writer)
}

// Anchor points of the viridis colormap, evenly spaced in [0, 1].
const VIRIDIS: [[f64; 3]; 9] = [
    [68.0, 1.0, 84.0],
    [71.0, 44.0, 122.0],
    [59.0, 81.0, 139.0],
    [44.0, 113.0, 142.0],
    [33.0, 144.0, 141.0],
    [39.0, 173.0, 129.0],
    [92.0, 200.0, 99.0],
    [170.0, 220.0, 50.0],
    [253.0, 231.0, 37.0],
];

fn viridis(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let lo = (t.floor() as usize).min(VIRIDIS.len() - 2);
    let frac = t - lo as f64;
    let mix = |c: usize| (VIRIDIS[lo][c] + frac * (VIRIDIS[lo + 1][c] - VIRIDIS[lo][c])).round();
    format!("rgb({},{},{})", mix(0), mix(1), mix(2))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Render a metric grid as an SVG heatmap: one rect per cell (viridis
/// colors), axis tick labels from the grid axes, and the minimum and maximum
/// values annotated under the plot.
pub fn write_heatmap_svg<W: Write>(
    grid: &MetricGrid,
    noise_levels: &[f64],
    outlier_counts: &[usize],
    mut writer: W,
) -> Result<()> {
    let (rows, cols) = (grid.rows(), grid.cols());
    if rows != outlier_counts.len() || cols != noise_levels.len() {
        return Err(Error::LengthMismatch {
            context: "heatmap grid vs axis labels",
            left: rows * cols,
            right: outlier_counts.len() * noise_levels.len(),
        });
    }
    let cell = 40.0;
    let (left, top) = (70.0, 40.0);
    let width = left + cols as f64 * cell + 20.0;
    let height = top + rows as f64 * cell + 70.0;

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in grid.values.iter().flatten() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let range = hi - lo;

    writeln!(
        writer,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    )?;
    writeln!(
        writer,
        r#"<text x="{left}" y="18" font-size="14">{}</text>"#,
        xml_escape(&grid.metric)
    )?;
    for (i, row) in grid.values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let t = if range > 0.0 { (v - lo) / range } else { 0.5 };
            let x = left + j as f64 * cell;
            let y = top + i as f64 * cell;
            writeln!(
                writer,
                r#"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{}"><title>outliers {}, noise {}: {v}</title></rect>"#,
                viridis(t),
                outlier_counts[i],
                noise_levels[j],
            )?;
        }
    }
    for (j, s) in noise_levels.iter().enumerate() {
        writeln!(
            writer,
            r#"<text x="{}" y="{}" text-anchor="middle">{s}</text>"#,
            left + (j as f64 + 0.5) * cell,
            top + rows as f64 * cell + 16.0,
        )?;
    }
    for (i, k) in outlier_counts.iter().enumerate() {
        writeln!(
            writer,
            r#"<text x="{}" y="{}" text-anchor="end">{k}</text>"#,
            left - 8.0,
            top + (i as f64 + 0.5) * cell + 4.0,
        )?;
    }
    writeln!(
        writer,
        r#"<text x="{}" y="{}" text-anchor="middle">noise level</text>"#,
        left + cols as f64 * cell / 2.0,
        top + rows as f64 * cell + 34.0,
    )?;
    writeln!(
        writer,
        r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">outliers</text>"#,
        top + rows as f64 * cell / 2.0,
        top + rows as f64 * cell / 2.0,
    )?;
    writeln!(
        writer,
        r#"<text x="{left}" y="{}">min {:.6e}   max {:.6e}</text>"#,
        top + rows as f64 * cell + 52.0,
        lo,
        hi,
    )?;
    writeln!(writer, "</svg>")?;
    Ok(())
}
