//! Pose sequences, marker data, and similarity transforms.
//!
//! All camera poses are camera-to-world: `position` is the camera center in
//! the world frame and `orientation` rotates camera-frame vectors into the
//! world frame. Marker sequences are the same thing for a tracked marker
//! body, typically reported by a motion-capture system.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::so3::RotationMatrix;

/// A trajectory: per-pose positions, optional orientations, optional
/// timestamps (seconds, strictly increasing).
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSequence {
    positions: Vec<Vector3<f64>>,
    orientations: Option<Vec<RotationMatrix>>,
    timestamps: Option<Vec<f64>>,
}

impl PoseSequence {
    pub fn new(
        positions: Vec<Vector3<f64>>,
        orientations: Option<Vec<RotationMatrix>>,
        timestamps: Option<Vec<f64>>,
    ) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::EmptyInput("pose sequence"));
        }
        if positions.iter().any(|p| !p.iter().all(|x| x.is_finite())) {
            return Err(Error::NonFinite("pose positions"));
        }
        if let Some(orientations) = &orientations {
            if orientations.len() != positions.len() {
                return Err(Error::LengthMismatch {
                    context: "positions vs orientations",
                    left: positions.len(),
                    right: orientations.len(),
                });
            }
        }
        if let Some(timestamps) = &timestamps {
            if timestamps.len() != positions.len() {
                return Err(Error::LengthMismatch {
                    context: "positions vs timestamps",
                    left: positions.len(),
                    right: timestamps.len(),
                });
            }
            if timestamps.iter().any(|t| !t.is_finite()) {
                return Err(Error::NonFinite("timestamps"));
            }
            if timestamps.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidParameter(
                    "timestamps must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self {
            positions,
            orientations,
            timestamps,
        })
    }

    /// Positions and orientations, no timestamps.
    pub fn with_poses(
        positions: Vec<Vector3<f64>>,
        orientations: Vec<RotationMatrix>,
    ) -> Result<Self> {
        Self::new(positions, Some(orientations), None)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn orientations(&self) -> Option<&[RotationMatrix]> {
        self.orientations.as_deref()
    }

    /// Orientations, or a `MissingOrientations` error naming the sequence.
    pub fn require_orientations(&self, which: &'static str) -> Result<&[RotationMatrix]> {
        self.orientations
            .as_deref()
            .ok_or(Error::MissingOrientations(which))
    }

    pub fn timestamps(&self) -> Option<&[f64]> {
        self.timestamps.as_deref()
    }

    pub fn require_timestamps(&self) -> Result<&[f64]> {
        self.timestamps.as_deref().ok_or(Error::MissingTimestamps)
    }
}

/// Marker poses in the ground-truth frame, e.g. from motion capture.
/// Orientations are mandatory here: without them marker data cannot be
/// related to the camera at all.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerSequence {
    pub positions: Vec<Vector3<f64>>,
    pub orientations: Vec<RotationMatrix>,
    pub timestamps: Option<Vec<f64>>,
}

impl MarkerSequence {
    pub fn new(
        positions: Vec<Vector3<f64>>,
        orientations: Vec<RotationMatrix>,
        timestamps: Option<Vec<f64>>,
    ) -> Result<Self> {
        let seq = PoseSequence::new(positions, Some(orientations), timestamps)?;
        let PoseSequence {
            positions,
            orientations,
            timestamps,
        } = seq;
        Ok(Self {
            positions,
            orientations: orientations.expect("constructed with orientations"),
            timestamps,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// View the marker data as a plain pose sequence.
    pub fn as_pose_sequence(&self) -> PoseSequence {
        PoseSequence {
            positions: self.positions.clone(),
            orientations: Some(self.orientations.clone()),
            timestamps: self.timestamps.clone(),
        }
    }
}

/// Rigid transform from the camera frame to the marker body frame:
/// the hand-eye unknowns of a marker-based ground-truth rig.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkerExtrinsics {
    pub rotation: RotationMatrix,
    /// Camera center expressed in the marker frame. Often unknown; leaving
    /// it at zero biases positions by the physical marker-camera offset.
    pub translation: Vector3<f64>,
}

impl MarkerExtrinsics {
    pub fn identity() -> Self {
        Self {
            rotation: RotationMatrix::identity(),
            translation: Vector3::zeros(),
        }
    }
}

/// Converts marker poses to camera poses given the marker-camera
/// extrinsics: the camera center is the marker-frame offset pushed through
/// each marker pose, the camera orientation is the marker orientation
/// composed with the extrinsic rotation.
pub fn markers_to_camera_ground_truth(
    markers: &MarkerSequence,
    extrinsics: &MarkerExtrinsics,
) -> PoseSequence {
    let positions = markers
        .positions
        .iter()
        .zip(&markers.orientations)
        .map(|(t_gm, r_gm)| r_gm.rotate(&extrinsics.translation) + t_gm)
        .collect();
    let orientations = markers
        .orientations
        .iter()
        .map(|r_gm| *r_gm * extrinsics.rotation)
        .collect();
    PoseSequence {
        positions,
        orientations: Some(orientations),
        timestamps: markers.timestamps.clone(),
    }
}

/// A similarity transform `p -> scale * rotation * p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sim3Transform {
    pub scale: f64,
    pub rotation: RotationMatrix,
    pub translation: Vector3<f64>,
}

impl Sim3Transform {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            rotation: RotationMatrix::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(scale: f64, rotation: RotationMatrix, translation: Vector3<f64>) -> Result<Self> {
        if !scale.is_finite() || scale <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "similarity scale must be positive and finite, got {scale}"
            )));
        }
        if !translation.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("similarity translation"));
        }
        Ok(Self {
            scale,
            rotation,
            translation,
        })
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.rotate(p) * self.scale + self.translation
    }

    /// `self.compose(&other)` applies `other` first.
    pub fn compose(&self, other: &Sim3Transform) -> Sim3Transform {
        Sim3Transform {
            scale: self.scale * other.scale,
            rotation: self.rotation * other.rotation,
            translation: self.rotation.rotate(&other.translation) * self.scale + self.translation,
        }
    }

    pub fn inverse(&self) -> Sim3Transform {
        let rotation = self.rotation.transpose();
        let scale = 1.0 / self.scale;
        Sim3Transform {
            scale,
            rotation,
            translation: rotation.rotate(&self.translation) * -scale,
        }
    }
}

/// Applies a similarity transform to a whole trajectory: positions are
/// mapped through it, orientations are rotated, timestamps are untouched.
pub fn apply_sim3(transform: &Sim3Transform, seq: &PoseSequence) -> PoseSequence {
    PoseSequence {
        positions: seq.positions.iter().map(|p| transform.apply(p)).collect(),
        orientations: seq
            .orientations
            .as_ref()
            .map(|os| os.iter().map(|r| transform.rotation * *r).collect()),
        timestamps: seq.timestamps.clone(),
    }
}
