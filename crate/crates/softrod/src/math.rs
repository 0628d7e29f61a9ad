//! Quaternion and rotation kinematics for the Cosserat rod.
//!
//! Orientations are carried as scalar-first quaternions and converted to
//! rotation matrices through a form that normalizes by the squared quaternion
//! norm, so mild drift between renormalization points never produces a
//! non-orthonormal frame.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Norm below which a quaternion is rejected as a rotation carrier.
pub const QUAT_ZERO_TOL: f64 = 1e-12;

/// Symmetry residual above which a matrix is rejected by [`vee`].
pub const SKEW_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum KinematicsError {
    #[error("matrix is not skew-symmetric (residual {residual:.3e} > {tol:.1e})")]
    NotSkewSymmetric { residual: f64, tol: f64 },
    #[error("quaternion norm {norm:.3e} is below {QUAT_ZERO_TOL:.1e}")]
    ZeroQuaternion { norm: f64 },
}

/// Scalar-first quaternion `h = (h1, h2, h3, h4)` with `h1` the real part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quat(pub Vector4<f64>);

impl Quat {
    pub const fn new(h1: f64, h2: f64, h3: f64, h4: f64) -> Self {
        Quat(Vector4::new(h1, h2, h3, h4))
    }

    /// Identity rotation.
    pub fn identity() -> Self {
        Quat::new(1.0, 0.0, 0.0, 0.0)
    }

    /// Rotation of `angle` radians about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let n = axis.norm();
        if n < QUAT_ZERO_TOL {
            return Quat::identity();
        }
        let (s, c) = (0.5 * angle).sin_cos();
        let v = axis * (s / n);
        Quat::new(c, v.x, v.y, v.z)
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn normalized(&self) -> Self {
        Quat(self.0 / self.0.norm())
    }

    pub fn scalar(&self) -> f64 {
        self.0[0]
    }

    pub fn vector(&self) -> Vec3 {
        Vec3::new(self.0[1], self.0[2], self.0[3])
    }

    /// Rotation matrix of this quaternion.
    ///
    /// The `2 / hᵀh` factor makes the result orthonormal for any nonzero
    /// quaternion, not only unit ones.
    pub fn to_rotation(&self) -> Result<Mat3, KinematicsError> {
        let h = &self.0;
        let nsq = h.norm_squared();
        if nsq.sqrt() < QUAT_ZERO_TOL {
            return Err(KinematicsError::ZeroQuaternion { norm: nsq.sqrt() });
        }
        let (h1, h2, h3, h4) = (h[0], h[1], h[2], h[3]);
        let k = 2.0 / nsq;
        Ok(Mat3::new(
            1.0 + k * (-h3 * h3 - h4 * h4),
            k * (h2 * h3 - h4 * h1),
            k * (h2 * h4 + h3 * h1),
            k * (h2 * h3 + h4 * h1),
            1.0 + k * (-h2 * h2 - h4 * h4),
            k * (h3 * h4 - h2 * h1),
            k * (h2 * h4 - h3 * h1),
            k * (h3 * h4 + h2 * h1),
            1.0 + k * (-h2 * h2 - h3 * h3),
        ))
    }

    /// Arclength (or time) derivative of the quaternion under a local
    /// curvature (or angular velocity) `u`: `h' = ½ Ω(u) h`.
    ///
    /// The coefficient matrix is antisymmetric, so `hᵀ h' = 0` and the norm
    /// is preserved exactly in real arithmetic.
    pub fn rate_from_curvature(&self, u: Vec3) -> Quat {
        let m = Matrix4::new(
            0.0, -u.x, -u.y, -u.z, //
            u.x, 0.0, u.z, -u.y, //
            u.y, -u.z, 0.0, u.x, //
            u.z, u.y, -u.x, 0.0,
        );
        Quat(m * self.0 * 0.5)
    }
}

/// Skew-symmetric matrix `ŵ` with `ŵ x = w × x`.
pub fn hat(w: Vec3) -> Mat3 {
    Mat3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Inverse of [`hat`]. Rejects matrices whose symmetric part exceeds
/// [`SKEW_TOL`] in any entry.
pub fn vee(m: &Mat3) -> Result<Vec3, KinematicsError> {
    let sym = m + m.transpose();
    let residual = sym.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if residual > SKEW_TOL {
        return Err(KinematicsError::NotSkewSymmetric {
            residual,
            tol: SKEW_TOL,
        });
    }
    Ok(Vec3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)]))
}

/// Rodrigues rotation: `exp(angle · hat(axis))` for a unit axis.
pub fn rotation_axis_angle(axis: Vec3, angle: f64) -> Mat3 {
    let n = axis.norm();
    if n < QUAT_ZERO_TOL {
        return Mat3::identity();
    }
    let k = hat(axis / n);
    Mat3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos())
}

/// Pose advanced along a rod of constant strain `v` and curvature `u`.
///
/// Returns `(Δp, ΔR)` in the starting frame after arclength `s`:
/// `R(s) = R0 ΔR`, `p(s) = p0 + R0 Δp`. Uses the closed form of
/// `∫ exp(σ û) dσ · v`, with the series limit for small `‖u‖ s`.
pub fn constant_strain_pose(v: Vec3, u: Vec3, s: f64) -> (Vec3, Mat3) {
    let th = u.norm() * s;
    if th < 1e-8 {
        // Second-order series in û s; adequate below the branch point.
        let k = hat(u);
        let dr = Mat3::identity() + k * s + k * k * (0.5 * s * s);
        let dp = (Mat3::identity() * s + k * (0.5 * s * s) + k * k * (s * s * s / 6.0)) * v;
        return (dp, dr);
    }
    let n = u / u.norm();
    let k = hat(n);
    let dr = rotation_axis_angle(u, th);
    let w = u.norm();
    let int_exp = Mat3::identity() * s
        + k * ((1.0 - th.cos()) / w)
        + k * k * (s - th.sin() / w);
    (int_exp * v, dr)
}
