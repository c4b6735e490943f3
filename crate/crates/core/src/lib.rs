//! Robust accuracy metrics for camera trajectories: outlier-tolerant
//! alignment and error scores for positions ([`alignment::align_dte`]) and
//! orientations ([`metrics::compute_dre`]), the classical least-squares
//! baseline ([`alignment::align_horn_arun`]), camera-to-marker rotation
//! calibration ([`calibration::calibrate_camera_to_marker`]), and a seeded
//! simulation harness ([`simulation`]) that reruns the sensitivity studies
//! behind those metrics.

pub mod alignment;
pub mod calibration;
pub mod error;
mod exec;
pub mod io;
pub mod metrics;
pub mod robust_stats;
pub mod rotation_averaging;
pub mod simulation;
pub mod so3;
pub mod trajectory;
