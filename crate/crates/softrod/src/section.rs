//! Cross-section constitutive laws of the three-actuator bundle.
//!
//! The section is an equilateral triangle of identical tube walls. With a
//! constant Young's modulus the section is homogeneous and its stiffness
//! matrices are diagonal. When the modulus of each actuator depends on its
//! axial load, the section becomes inhomogeneous: the neutral axis shifts off
//! the centroid and the bending stiffness picks up a coupling term.

use crate::actuator::PA_PER_BAR;
use crate::math::{Mat3, Vec3};
use crate::rod::StrainState;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SectionError {
    #[error("geometry requires 0 < R_i < R_o and b > 0")]
    InvalidGeometry,
    #[error("material constants must be positive")]
    InvalidMaterial,
    #[error("strain-force slope is not positive at force {force} N")]
    NonPositiveStiffness { force: f64 },
}

/// Geometry of the triangular three-actuator cross section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossSectionGeometry {
    /// Actuator-triangle side length (m).
    pub triangle_side: f64,
    /// Actuator wall inner radius (m).
    pub inner_radius: f64,
    /// Actuator wall outer radius (m).
    pub outer_radius: f64,
    /// Wall area of one actuator (m^2).
    pub wall_area: f64,
    /// Chamber area of one actuator (m^2).
    pub chamber_area: f64,
    /// Second moment of one actuator wall about its own centroid (m^4).
    pub wall_moment: f64,
    /// Actuator offsets from the central axis in the local frame (m).
    pub offsets: [Vec3; 3],
}

impl CrossSectionGeometry {
    pub fn new(triangle_side: f64, inner_radius: f64, outer_radius: f64) -> Result<Self, SectionError> {
        if !(triangle_side > 0.0 && inner_radius > 0.0 && outer_radius > inner_radius) {
            return Err(SectionError::InvalidGeometry);
        }
        let pi = std::f64::consts::PI;
        let b = triangle_side;
        let s3 = 3.0_f64.sqrt();
        Ok(CrossSectionGeometry {
            triangle_side,
            inner_radius,
            outer_radius,
            wall_area: pi * (outer_radius * outer_radius - inner_radius * inner_radius),
            chamber_area: pi * inner_radius * inner_radius,
            wall_moment: pi * (outer_radius.powi(4) - inner_radius.powi(4)) / 4.0,
            offsets: [
                Vec3::new(s3 * b / 3.0, 0.0, 0.0),
                Vec3::new(-s3 * b / 6.0, b / 2.0, 0.0),
                Vec3::new(-s3 * b / 6.0, -b / 2.0, 0.0),
            ],
        })
    }

    /// Total material area of the section (m^2).
    pub fn total_area(&self) -> f64 {
        3.0 * self.wall_area
    }

    /// Second-area-moment matrix `diag(I_xx, I_yy, I_zz)` about the
    /// centroid, for the rotary inertia term.
    pub fn area_moment_matrix(&self) -> Mat3 {
        let ixx = 3.0 * self.wall_moment
            + self.wall_area * self.triangle_side * self.triangle_side / 2.0;
        Mat3::from_diagonal(&Vec3::new(ixx, ixx, 2.0 * ixx))
    }
}

impl Default for CrossSectionGeometry {
    fn default() -> Self {
        CrossSectionGeometry::new(0.055, 9.5e-3, 14.0e-3).unwrap()
    }
}

/// Strain-force law of the actuators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LawKind {
    /// Constant Young's modulus.
    Homogeneous,
    /// Load-dependent modulus from the quadratic strain-force fit.
    Inhomogeneous,
}

/// Material law of the bundle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialLaw {
    pub kind: LawKind,
    /// Young's modulus of the homogeneous law (Pa).
    pub young_modulus: f64,
    /// Linear coefficient of the strain-force fit (1/N).
    pub a1: f64,
    /// Quadratic coefficient of the strain-force fit (1/N^2).
    pub a2: f64,
    /// Shear scaling `gamma = 1 / (2 f_s (1 + nu))`, so `G = gamma E`.
    pub gamma: f64,
    /// Mass density (kg/m^3).
    pub density: f64,
}

impl MaterialLaw {
    /// Identified constants of the shipped manipulator.
    pub const DEFAULT_E: f64 = 289_142.05;
    pub const DEFAULT_A1: f64 = 0.007_426_81;
    pub const DEFAULT_A2: f64 = 0.000_319_62;
    pub const DEFAULT_GAMMA: f64 = 0.4094;

    /// Validates constants; for the inhomogeneous law the strain-force slope
    /// must stay positive over `force_range` (N).
    pub fn new(
        kind: LawKind,
        young_modulus: f64,
        a1: f64,
        a2: f64,
        gamma: f64,
        density: f64,
        force_range: (f64, f64),
    ) -> Result<Self, SectionError> {
        if !(young_modulus > 0.0 && gamma > 0.0 && density > 0.0) {
            return Err(SectionError::InvalidMaterial);
        }
        if kind == LawKind::Inhomogeneous {
            for force in [force_range.0, force_range.1] {
                if 2.0 * a2 * force + a1 <= 0.0 {
                    return Err(SectionError::NonPositiveStiffness { force });
                }
            }
        }
        Ok(MaterialLaw {
            kind,
            young_modulus,
            a1,
            a2,
            gamma,
            density,
        })
    }

    pub fn homogeneous(young_modulus: f64, gamma: f64, density: f64) -> Result<Self, SectionError> {
        MaterialLaw::new(
            LawKind::Homogeneous,
            young_modulus,
            Self::DEFAULT_A1,
            Self::DEFAULT_A2,
            gamma,
            density,
            (0.0, 0.0),
        )
    }
}

/// Young's modulus of one actuator carrying axial load `force` (N).
///
/// The strain-force fit is dimensionless-strain versus force, so its slope
/// `beta(n) = 2 a2 n + a1` has units 1/N and the modulus follows as
/// `E = 1 / (A_m beta)`.
pub fn young_modulus(
    law: &MaterialLaw,
    geometry: &CrossSectionGeometry,
    force: f64,
) -> Result<f64, SectionError> {
    match law.kind {
        LawKind::Homogeneous => Ok(law.young_modulus),
        LawKind::Inhomogeneous => {
            let beta = 2.0 * law.a2 * force + law.a1;
            if beta <= 0.0 {
                return Err(SectionError::NonPositiveStiffness { force });
            }
            Ok(1.0 / (geometry.wall_area * beta))
        }
    }
}

/// Axial force carried by each actuator from the end-cap force balance.
///
/// Pressurizing one actuator loads each passive actuator with half its cap
/// force, `P A_in / 2`; simultaneous pressures superpose. Compression is
/// returned positive, which is the sign the strain-force fit expects.
#[allow(clippy::needless_range_loop)]
pub fn passive_actuator_forces(
    geometry: &CrossSectionGeometry,
    pressures_bar: [f64; 3],
) -> [f64; 3] {
    let mut forces = [0.0; 3];
    for j in 0..3 {
        for i in 0..3 {
            if i != j {
                forces[j] += pressures_bar[i] * PA_PER_BAR * geometry.chamber_area / 2.0;
            }
        }
    }
    forces
}

/// Neutral-axis offset from the central axis for per-actuator moduli.
pub fn neutral_axis(moduli: [f64; 3], triangle_side: f64) -> Vec3 {
    let [e1, e2, e3] = moduli;
    let sum = e1 + e2 + e3;
    let s3 = 3.0_f64.sqrt();
    Vec3::new(
        s3 * triangle_side / 6.0 * (2.0 * e1 - e2 - e3) / sum,
        triangle_side / 2.0 * (e2 - e3) / sum,
        0.0,
    )
}

/// Stiffness matrices, neutral-axis shift and per-actuator moduli of one
/// section state, rebuilt whenever the pressure vector changes.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionState {
    pub moduli: [f64; 3],
    pub neutral_offset: Vec3,
    pub k_se: Mat3,
    pub k_bt: Mat3,
    pub k_se_inv: Mat3,
    pub k_bt_inv: Mat3,
    /// Actuator offsets measured from the neutral axis.
    pub shifted_offsets: [Vec3; 3],
}

/// Homogeneous stiffness: `K_se = 3 diag(G A_m, G A_m, E A_m)` and
/// `K_bt = diag(E I_xx, E I_yy, G I_zz)` with `G = gamma E` and
/// `I_xx = I_yy = 3 I_o + A_m b^2 / 2`, `I_zz = 2 I_xx`.
pub fn stiffness_homogeneous(
    geometry: &CrossSectionGeometry,
    law: &MaterialLaw,
) -> (Mat3, Mat3) {
    let e = law.young_modulus;
    let g = law.gamma * e;
    let am = geometry.wall_area;
    let ixx = 3.0 * geometry.wall_moment + am * geometry.triangle_side * geometry.triangle_side / 2.0;
    let k_se = Mat3::from_diagonal(&Vec3::new(3.0 * g * am, 3.0 * g * am, 3.0 * e * am));
    let k_bt = Mat3::from_diagonal(&Vec3::new(e * ixx, e * ixx, g * 2.0 * ixx));
    (k_se, k_bt)
}

/// Inhomogeneous section state for given per-actuator moduli.
///
/// Shear/extension stiffness sums the per-actuator wall contributions;
/// bending stiffness applies the parallel-axis offsets about the shifted
/// neutral axis, including the bend-coupling term. Torsion uses the polar
/// wall moment `2 I_o` per actuator so equal moduli reproduce the
/// homogeneous `G I_zz` exactly.
pub fn stiffness_inhomogeneous(
    geometry: &CrossSectionGeometry,
    law: &MaterialLaw,
    moduli: [f64; 3],
) -> SectionState {
    let [e1, e2, e3] = moduli;
    let b = geometry.triangle_side;
    let am = geometry.wall_area;
    let io = geometry.wall_moment;
    let s3 = 3.0_f64.sqrt();
    let offset = neutral_axis(moduli, b);
    let (x_na, y_na) = (offset.x, offset.y);
    let sum = e1 + e2 + e3;
    let gamma = law.gamma;

    let k_se = Mat3::from_diagonal(&Vec3::new(sum * gamma * am, sum * gamma * am, sum * am));

    let k11 = sum * io
        + am * (e1 * y_na * y_na
            + e2 * (b / 2.0 - y_na) * (b / 2.0 - y_na)
            + e3 * (b / 2.0 + y_na) * (b / 2.0 + y_na));
    let k22 = sum * io
        + am * (e1 * (s3 * b / 3.0 - x_na) * (s3 * b / 3.0 - x_na)
            + (e2 + e3) * (s3 * b / 6.0 + x_na) * (s3 * b / 6.0 + x_na));
    let k12 = -am
        * (e1 * y_na * (s3 * b / 3.0 - x_na)
            + (s3 * b / 6.0 + x_na)
                * (e2 * (b / 2.0 - y_na) - e3 * (b / 2.0 + y_na)));
    let shifted = [
        geometry.offsets[0] - offset,
        geometry.offsets[1] - offset,
        geometry.offsets[2] - offset,
    ];
    let k33 = gamma
        * (e1 * (2.0 * io + am * shifted[0].norm_squared())
            + e2 * (2.0 * io + am * shifted[1].norm_squared())
            + e3 * (2.0 * io + am * shifted[2].norm_squared()));
    let k_bt = Mat3::new(k11, k12, 0.0, k12, k22, 0.0, 0.0, 0.0, k33);

    SectionState {
        moduli,
        neutral_offset: offset,
        k_se,
        k_bt,
        k_se_inv: k_se.try_inverse().expect("K_se is positive definite"),
        k_bt_inv: k_bt.try_inverse().expect("K_bt is positive definite"),
        shifted_offsets: shifted,
    }
}

/// Builds the section state for a pressure vector under either law.
///
/// For the homogeneous law the three moduli are equal and the neutral axis
/// stays on the centroid; for the inhomogeneous law each modulus follows the
/// end-cap load of its actuator.
pub fn build_section(
    geometry: &CrossSectionGeometry,
    law: &MaterialLaw,
    pressures_bar: [f64; 3],
) -> Result<SectionState, SectionError> {
    match law.kind {
        LawKind::Homogeneous => {
            let (k_se, k_bt) = stiffness_homogeneous(geometry, law);
            Ok(SectionState {
                moduli: [law.young_modulus; 3],
                neutral_offset: Vec3::zeros(),
                k_se,
                k_bt,
                k_se_inv: k_se.try_inverse().expect("K_se is positive definite"),
                k_bt_inv: k_bt.try_inverse().expect("K_bt is positive definite"),
                shifted_offsets: geometry.offsets,
            })
        }
        LawKind::Inhomogeneous => {
            let forces = passive_actuator_forces(geometry, pressures_bar);
            let moduli = [
                young_modulus(law, geometry, forces[0])?,
                young_modulus(law, geometry, forces[1])?,
                young_modulus(law, geometry, forces[2])?,
            ];
            Ok(stiffness_inhomogeneous(geometry, law, moduli))
        }
    }
}

/// Global-frame internal loads from strains: `n = R K_se (v - v*)`,
/// `m = R K_bt (u - u*)`.
pub fn internal_loads(strains: &StrainState, rotation: &Mat3, section: &SectionState) -> (Vec3, Vec3) {
    (
        rotation * (section.k_se * (strains.v - strains.v_star)),
        rotation * (section.k_bt * (strains.u - strains.u_star)),
    )
}

/// Inverse of [`internal_loads`]: `v = v* + K_se^-1 Rᵀ n`,
/// `u = u* + K_bt^-1 Rᵀ m`.
pub fn strains_from_loads(
    n: &Vec3,
    m: &Vec3,
    rotation: &Mat3,
    section: &SectionState,
    rest: &StrainState,
) -> StrainState {
    StrainState {
        v: rest.v_star + section.k_se_inv * (rotation.transpose() * n),
        u: rest.u_star + section.k_bt_inv * (rotation.transpose() * m),
        v_star: rest.v_star,
        u_star: rest.u_star,
    }
}
