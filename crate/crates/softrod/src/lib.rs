//! Simulation of soft pneumatic continuum manipulators modeled as Cosserat rods.
//!
//! The manipulator is a bundle of three fiber-reinforced pneumatic actuators
//! clamped between rigid end caps. Pressurizing an actuator loads the rod in
//! two ways: the pressure pushes axially on the end cap, and the radial
//! pressure couples into extra axial stretch through the near-inextensible
//! fiber wrap (the radial pressure effect, RPE). The rod itself can be treated
//! as homogeneous (constant Young's modulus) or inhomogeneous (load-dependent
//! per-actuator moduli, which shift the neutral axis and couple bending).
//!
//! The crate is organized bottom-up:
//!
//! - [`math`]: quaternion/rotation kinematics shared by everything else.
//! - [`rod`]: the rod state container and compatibility diagnostics.
//! - [`quadrature`]: adaptive quadrature used by the tube model.
//! - [`actuator`]: nonlinear elasticity of one fiber-reinforced tube and the
//!   pressure-to-stretch fit it produces.
//! - [`section`]: cross-section constitutive laws and stiffness matrices.
//! - [`bdf`]: backward-differentiation time schemes and state history.
//! - [`dynamics`]: the semi-discretized spatial ODE and time stepping.
//! - [`shooting`]: boundary-value solves (Levenberg-Marquardt / dogleg).
//! - [`config`]: scenario configuration and file round-trips.
//! - [`scenario`]: static sweeps, dynamic runs, benchmarks, convergence
//!   studies, and CSV export.

pub mod actuator;
pub mod bdf;
pub mod config;
pub mod dynamics;
pub mod math;
pub mod quadrature;
pub mod rod;
pub mod scenario;
pub mod section;
pub mod shooting;

pub use math::{Mat3, Quat, Vec3};
