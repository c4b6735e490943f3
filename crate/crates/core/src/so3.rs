//! Rotation primitives: the matrix representation, exponential/logarithm
//! maps, geodesic distance, Haar sampling, and projection onto SO(3).
//!
//! Quaternions follow the Hamilton convention; on disk they are stored
//! scalar-last (`qx qy qz qw`, see the io module), internally everything is
//! a proper rotation matrix.

use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Angle below which the Rodrigues coefficients switch to their
/// second-order Taylor expansions.
pub const SMALL_ANGLE: f64 = 1e-7;

/// Tangent vector of SO(3): direction is the rotation axis, norm is the
/// rotation angle in radians. Values produced by [`log_map`] are canonical,
/// i.e. the norm never exceeds pi.
pub type AxisAngle = Vector3<f64>;

/// A 3x3 proper rotation matrix.
///
/// Checked constructors enforce orthonormality and unit determinant to
/// 1e-9; arithmetic goes through the raw matrix, so products of long chains
/// can drift at the usual floating-point scale without re-projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub const ORTHONORMALITY_TOL: f64 = 1e-9;

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Validates orthonormality (`|R^T R - I|_inf <= 1e-9`) and
    /// `det R = +1` to the same tolerance.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        if !m.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("rotation matrix"));
        }
        let gram_defect = (m.transpose() * m - Matrix3::identity())
            .iter()
            .fold(0.0f64, |acc, x| acc.max(x.abs()));
        if gram_defect > Self::ORTHONORMALITY_TOL {
            return Err(Error::NotARotation(format!(
                "orthonormality defect {gram_defect:.3e}"
            )));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > Self::ORTHONORMALITY_TOL {
            return Err(Error::NotARotation(format!("determinant {det:.17}")));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix that is already known to be a rotation.
    pub fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// The inverse rotation.
    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Rotation angle in radians, in `[0, pi]`.
    pub fn angle(&self) -> f64 {
        rotation_angle(&self.0)
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    /// Builds a rotation from Hamilton quaternion components given
    /// scalar-last. The quaternion is normalized first; a zero quaternion is
    /// rejected.
    pub fn from_quaternion_xyzw(x: f64, y: f64, z: f64, w: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z + w * w).sqrt();
        if !norm.is_finite() {
            return Err(Error::NonFinite("quaternion"));
        }
        if norm < 1e-12 {
            return Err(Error::InvalidParameter(
                "zero-norm quaternion cannot encode a rotation".into(),
            ));
        }
        let q = UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z));
        Ok(Self(q.to_rotation_matrix().into_inner()))
    }

    /// Hamilton quaternion components, scalar-last, with the scalar part
    /// made non-negative so the representation is unique.
    pub fn to_quaternion_xyzw(&self) -> [f64; 4] {
        let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.0));
        let q = if q.w < 0.0 {
            -q.into_inner()
        } else {
            q.into_inner()
        };
        [q.i, q.j, q.k, q.w]
    }
}

impl std::ops::Mul for RotationMatrix {
    type Output = RotationMatrix;
    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}

impl std::ops::Mul<Vector3<f64>> for RotationMatrix {
    type Output = Vector3<f64>;
    fn mul(self, rhs: Vector3<f64>) -> Vector3<f64> {
        self.0 * rhs
    }
}

impl Serialize for RotationMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: [[f64; 3]; 3] = [
            [self.0[(0, 0)], self.0[(0, 1)], self.0[(0, 2)]],
            [self.0[(1, 0)], self.0[(1, 1)], self.0[(1, 2)]],
            [self.0[(2, 0)], self.0[(2, 1)], self.0[(2, 2)]],
        ];
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RotationMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = <[[f64; 3]; 3]>::deserialize(deserializer)?;
        let m = Matrix3::new(
            rows[0][0], rows[0][1], rows[0][2], rows[1][0], rows[1][1], rows[1][2], rows[2][0],
            rows[2][1], rows[2][2],
        );
        RotationMatrix::from_matrix(m).map_err(|e| D::Error::custom(e.to_string()))
    }
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Half the vee of the antisymmetric part, i.e. `sin(theta) * axis` for a
/// rotation matrix.
fn antisymmetric_vee_half(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        (m[(2, 1)] - m[(1, 2)]) * 0.5,
        (m[(0, 2)] - m[(2, 0)]) * 0.5,
        (m[(1, 0)] - m[(0, 1)]) * 0.5,
    )
}

/// Rotation angle of a rotation matrix, in `[0, pi]`.
///
/// Uses `atan2(|sin|, cos)` rather than `acos` alone so the result stays
/// accurate near both 0 and pi.
fn rotation_angle(m: &Matrix3<f64>) -> f64 {
    let s = antisymmetric_vee_half(m).norm();
    let c = (m.trace() - 1.0) * 0.5;
    s.atan2(c)
}

/// Rodrigues formula. Accepts any tangent vector; angles below
/// [`SMALL_ANGLE`] use the Taylor expansion of the coefficients.
pub fn exp_map(v: &AxisAngle) -> RotationMatrix {
    let theta2 = v.norm_squared();
    let k = skew(v);
    let m = if theta2 < SMALL_ANGLE * SMALL_ANGLE {
        let a = 1.0 - theta2 / 6.0;
        let b = 0.5 - theta2 / 24.0;
        Matrix3::identity() + k * a + k * k * b
    } else {
        let theta = theta2.sqrt();
        Matrix3::identity() + k * (theta.sin() / theta) + k * k * ((1.0 - theta.cos()) / theta2)
    };
    RotationMatrix(m)
}

/// Inverse of [`exp_map`]; the returned vector has norm at most pi.
///
/// At theta = pi the axis sign is ambiguous. The convention here: take the
/// largest-diagonal column of `(R + I) / 2`, normalize it, and flip signs so
/// that the first component above 1e-9 in magnitude is positive.
pub fn log_map(r: &RotationMatrix) -> AxisAngle {
    let m = &r.0;
    let sv = antisymmetric_vee_half(m);
    let s = sv.norm(); // |sin theta|
    let c = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);

    if s < SMALL_ANGLE && c > 0.0 {
        // theta ~ 0; theta/sin(theta) ~ 1 + theta^2/6
        return sv * (1.0 + s * s / 6.0);
    }
    if c > -0.999_999 {
        let theta = s.atan2(c);
        return sv * (theta / s);
    }
    // Near pi. asin is well conditioned here, acos is not.
    let theta = std::f64::consts::PI - s.asin();
    if s >= SMALL_ANGLE {
        return sv * (theta / s);
    }
    // Within ~1e-7 of pi: recover the axis from the symmetric part.
    let b = (m + Matrix3::identity()) * 0.5;
    let j = (0..3)
        .max_by(|&a, &bi| b[(a, a)].total_cmp(&b[(bi, bi)]))
        .unwrap();
    let mut axis = b.column(j).into_owned();
    axis /= axis.norm();
    if let Some(first) = axis.iter().find(|x| x.abs() > 1e-9) {
        if *first < 0.0 {
            axis = -axis;
        }
    }
    axis * theta
}

/// Geodesic (angular) distance between two rotations, in `[0, pi]`.
pub fn geodesic_distance(a: &RotationMatrix, b: &RotationMatrix) -> f64 {
    rotation_angle(&(a.0 * b.0.transpose()))
}

/// Haar-uniform random rotation, sampled by normalizing a 4-vector of
/// standard Gaussians into a unit quaternion.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> RotationMatrix {
    loop {
        let q = Quaternion::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        if q.norm() > 1e-6 {
            let uq = UnitQuaternion::from_quaternion(q);
            return RotationMatrix(uq.to_rotation_matrix().into_inner());
        }
    }
}

/// Uniform random direction, sampled by normalizing a 3-vector of
/// standard Gaussians.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        let norm = v.norm();
        if norm > 1e-6 {
            return v / norm;
        }
    }
}

/// Left-multiplicative rotation noise: `Exp(n) * r` with `n` drawn
/// componentwise from `N(0, sigma^2)`. For small sigma the RMS geodesic
/// displacement is approximately `sigma * sqrt(3)`.
pub fn perturb_rotation<R: Rng + ?Sized>(
    r: &RotationMatrix,
    sigma_rad: f64,
    rng: &mut R,
) -> RotationMatrix {
    let n = Vector3::new(
        sigma_rad * rng.sample::<f64, _>(StandardNormal),
        sigma_rad * rng.sample::<f64, _>(StandardNormal),
        sigma_rad * rng.sample::<f64, _>(StandardNormal),
    );
    exp_map(&n) * *r
}

/// Nearest rotation in the Frobenius sense: project through the SVD and
/// correct the determinant sign on the smallest singular direction.
/// Singular inputs have no meaningful projection and are rejected.
pub fn project_to_rotation(m: &Matrix3<f64>) -> Result<RotationMatrix> {
    if !m.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("matrix to project"));
    }
    let mut svd = m.svd(true, true);
    svd.sort_by_singular_values();
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values[0];
    let smin = svd.singular_values[2];
    if smax <= 0.0 || smin <= 1e-12 * smax {
        return Err(Error::SingularMatrix);
    }
    let d = (u * v_t).determinant();
    let sign = if d < 0.0 { -1.0 } else { 1.0 };
    let r = u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, sign)) * v_t;
    Ok(RotationMatrix(r))
}
