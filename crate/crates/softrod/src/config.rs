//! Scenario configuration: a unit-annotated TOML tree with defaults that
//! reproduce the shipped manipulator, plus conversion into the domain types.

use crate::actuator::{ActuatorGeometry, HyperelasticParams, RpeFit};
use crate::bdf::{BdfScheme, SchemeKind};
use crate::dynamics::{ActuationInput, PressureSignal, RodModel, RpeMode, SpatialMethod};
use crate::math::Vec3;
use crate::rod::StrainState;
use crate::section::{CrossSectionGeometry, LawKind, MaterialLaw};
use crate::shooting::{SolveMethod, SolverConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config serialize error: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub geometry: GeometryConfig,
    pub material: MaterialConfig,
    pub rpe: RpeConfig,
    pub environment: EnvironmentConfig,
    pub discretization: DiscretizationConfig,
    pub solver: SolverSettings,
    pub actuation: ActuationConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub triangle_side_m: f64,
    pub actuator_inner_radius_m: f64,
    pub actuator_core_outer_radius_m: f64,
    pub actuator_outer_radius_m: f64,
    pub rod_length_m: f64,
    pub cap_length_m: f64,
    pub actuator_spacing_deg: f64,
    pub fiber_angle_deg: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            triangle_side_m: 0.055,
            actuator_inner_radius_m: 9.5e-3,
            actuator_core_outer_radius_m: 12.5e-3,
            actuator_outer_radius_m: 14.0e-3,
            rod_length_m: 0.170,
            cap_length_m: 0.015,
            actuator_spacing_deg: 120.0,
            fiber_angle_deg: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaterialKind {
    Homogeneous,
    Inhomogeneous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialConfig {
    pub law: MaterialKind,
    pub young_modulus_pa: f64,
    pub strain_force_a1_per_n: f64,
    pub strain_force_a2_per_n2: f64,
    pub shear_scaling_gamma: f64,
    pub density_kg_per_m3: f64,
    /// Axial-force range (N) over which the strain-force slope must stay
    /// positive.
    pub force_range_n: [f64; 2],
}

impl Default for MaterialConfig {
    fn default() -> Self {
        MaterialConfig {
            law: MaterialKind::Inhomogeneous,
            young_modulus_pa: MaterialLaw::DEFAULT_E,
            strain_force_a1_per_n: MaterialLaw::DEFAULT_A1,
            strain_force_a2_per_n2: MaterialLaw::DEFAULT_A2,
            shear_scaling_gamma: MaterialLaw::DEFAULT_GAMMA,
            density_kg_per_m3: 1100.0,
            force_range_n: [0.0, 30.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RpeModeConfig {
    EquivalentForce,
    StrainTransfer,
    Off,
}

/// Tube parameters consumed by the `rpe-fit` pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TubeConfig {
    pub shear_modulus_pa: f64,
    pub iso_fraction: f64,
    pub fiber_fraction: f64,
    pub fiber_modulus_pa: f64,
}

impl Default for TubeConfig {
    fn default() -> Self {
        TubeConfig {
            shear_modulus_pa: 100e3,
            iso_fraction: 0.9,
            fiber_fraction: 0.1,
            fiber_modulus_pa: 14e9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RpeConfig {
    pub mode: RpeModeConfig,
    /// Slope of the linear pressure-to-stretch fit (1/bar).
    pub slope_per_bar: f64,
    pub tube: TubeConfig,
}

impl Default for RpeConfig {
    fn default() -> Self {
        RpeConfig {
            mode: RpeModeConfig::EquivalentForce,
            slope_per_bar: RpeFit::DEFAULT_SLOPE_PER_BAR,
            tube: TubeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub gravity_m_per_s2: [f64; 3],
    pub cap_mass_kg: f64,
    pub self_weight: bool,
    pub tip_force_n: [f64; 3],
    pub tip_moment_n_m: [f64; 3],
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        EnvironmentConfig {
            gravity_m_per_s2: [0.0, 0.0, -9.81],
            cap_mass_kg: 0.02,
            self_weight: true,
            tip_force_n: [0.0; 3],
            tip_moment_n_m: [0.0; 3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeConfig {
    Bdf1,
    Bdf2,
    Bdf3,
    BdfAlpha,
    Trapezoidal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpatialConfig {
    Euler,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    /// Straight unstressed rod; the first step sees the full pressure
    /// transient.
    Rest,
    /// Static solution at the t = 0 pressures.
    Static,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscretizationConfig {
    pub nodes: usize,
    pub dt_s: f64,
    pub timeframe_s: f64,
    pub scheme: SchemeConfig,
    /// Parameter of the one-parameter family, in [-0.5, 0].
    pub alpha: f64,
    pub spatial: SpatialConfig,
    pub initial_state: InitialState,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        DiscretizationConfig {
            nodes: 50,
            dt_s: 1.0 / 30.0,
            timeframe_s: 1.0,
            scheme: SchemeConfig::BdfAlpha,
            alpha: -0.2,
            spatial: SpatialConfig::Rk4,
            initial_state: InitialState::Rest,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodConfig {
    Lm,
    Dogleg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub tol_force_n: f64,
    pub tol_moment_n_m: f64,
    pub max_iterations: usize,
    pub fd_step_relative: f64,
    pub lm_damping_init: f64,
    pub method: MethodConfig,
    pub warm_start: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol_force_n: 1e-8,
            tol_moment_n_m: 1e-9,
            max_iterations: 100,
            fd_step_relative: 1e-7,
            lm_damping_init: 1e-3,
            method: MethodConfig::Lm,
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SignalConfig {
    Constant {
        bar: f64,
    },
    Ramp {
        start_bar: f64,
        end_bar: f64,
        duration_s: f64,
    },
    Sinusoid {
        mean_bar: f64,
        amplitude_bar: f64,
        #[serde(default = "default_omega")]
        omega_rad_per_s: f64,
        #[serde(default = "default_phase")]
        phase_rad: f64,
        #[serde(default)]
        phase0_rad: f64,
    },
    Tabulated {
        points: Vec<(f64, f64)>,
    },
}

fn default_omega() -> f64 {
    1.0
}

fn default_phase() -> f64 {
    4.0 * std::f64::consts::PI / 3.0
}

/// Default drive phase offset. The source formula leaves this free; the
/// shipped value puts the initial pressure step at 0.425 bar, where the
/// startup transient separates the damped schemes from the undamped ones.
fn default_phase0() -> f64 {
    2.38
}

impl SignalConfig {
    pub fn zero() -> Self {
        SignalConfig::Constant { bar: 0.0 }
    }

    /// The driving sinusoid of the dynamic scenario.
    pub fn default_sinusoid() -> Self {
        SignalConfig::Sinusoid {
            mean_bar: 0.35,
            amplitude_bar: 0.25,
            omega_rad_per_s: default_omega(),
            phase_rad: default_phase(),
            phase0_rad: default_phase0(),
        }
    }

    fn to_signal(&self) -> PressureSignal {
        match self.clone() {
            SignalConfig::Constant { bar } => PressureSignal::Constant { bar },
            SignalConfig::Ramp { start_bar, end_bar, duration_s } => {
                PressureSignal::Ramp { start_bar, end_bar, duration_s }
            }
            SignalConfig::Sinusoid {
                mean_bar,
                amplitude_bar,
                omega_rad_per_s,
                phase_rad,
                phase0_rad,
            } => PressureSignal::Sinusoid {
                mean_bar,
                amplitude_bar,
                omega_rad_per_s,
                phase_rad,
                phase0_rad,
            },
            SignalConfig::Tabulated { points } => PressureSignal::Tabulated { points },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActuationConfig {
    /// Per-actuator pressure signals, actuators 1..3.
    pub signals: Vec<SignalConfig>,
}

impl Default for ActuationConfig {
    /// The dynamic validation drive: actuators 2 and 3 carry the sinusoid
    /// together (the planar two-actuator case), actuator 1 stays passive.
    fn default() -> Self {
        ActuationConfig {
            signals: vec![
                SignalConfig::zero(),
                SignalConfig::default_sinusoid(),
                SignalConfig::default_sinusoid(),
            ],
        }
    }
}

impl ScenarioConfig {
    pub fn section_geometry(&self) -> Result<CrossSectionGeometry, ConfigError> {
        CrossSectionGeometry::new(
            self.geometry.triangle_side_m,
            self.geometry.actuator_inner_radius_m,
            self.geometry.actuator_outer_radius_m,
        )
        .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn material_law(&self) -> Result<MaterialLaw, ConfigError> {
        let kind = match self.material.law {
            MaterialKind::Homogeneous => LawKind::Homogeneous,
            MaterialKind::Inhomogeneous => LawKind::Inhomogeneous,
        };
        MaterialLaw::new(
            kind,
            self.material.young_modulus_pa,
            self.material.strain_force_a1_per_n,
            self.material.strain_force_a2_per_n2,
            self.material.shear_scaling_gamma,
            self.material.density_kg_per_m3,
            (self.material.force_range_n[0], self.material.force_range_n[1]),
        )
        .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn rod_model(&self) -> Result<RodModel, ConfigError> {
        Ok(RodModel {
            geometry: self.section_geometry()?,
            law: self.material_law()?,
            length: self.geometry.rod_length_m,
            rest: StrainState::straight_rest(),
        })
    }

    pub fn actuation(&self) -> Result<ActuationInput, ConfigError> {
        if self.actuation.signals.len() != 3 {
            return Err(ConfigError::Invalid(format!(
                "actuation.signals needs exactly 3 entries, got {}",
                self.actuation.signals.len()
            )));
        }
        let g = self.environment.gravity_m_per_s2;
        let tf = self.environment.tip_force_n;
        let tm = self.environment.tip_moment_n_m;
        Ok(ActuationInput {
            signals: [
                self.actuation.signals[0].to_signal(),
                self.actuation.signals[1].to_signal(),
                self.actuation.signals[2].to_signal(),
            ],
            distributed_force: Vec3::zeros(),
            distributed_moment: Vec3::zeros(),
            tip_force: Vec3::new(tf[0], tf[1], tf[2]),
            tip_moment: Vec3::new(tm[0], tm[1], tm[2]),
            cap_mass_kg: self.environment.cap_mass_kg,
            gravity: Vec3::new(g[0], g[1], g[2]),
            self_weight: self.environment.self_weight,
            rpe_mode: match self.rpe.mode {
                RpeModeConfig::EquivalentForce => RpeMode::EquivalentForce,
                RpeModeConfig::StrainTransfer => RpeMode::StrainTransfer,
                RpeModeConfig::Off => RpeMode::Off,
            },
            rpe_fit: RpeFit {
                slope_per_bar: self.rpe.slope_per_bar,
                r_squared: f64::NAN,
            },
        })
    }

    pub fn scheme(&self) -> Result<BdfScheme, ConfigError> {
        let kind = match self.discretization.scheme {
            SchemeConfig::Bdf1 => SchemeKind::Bdf1,
            SchemeConfig::Bdf2 => SchemeKind::Bdf2,
            SchemeConfig::Bdf3 => SchemeKind::Bdf3,
            SchemeConfig::BdfAlpha => SchemeKind::BdfAlpha,
            SchemeConfig::Trapezoidal => SchemeKind::Trapezoidal,
        };
        BdfScheme::new(kind, self.discretization.alpha, self.discretization.dt_s)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn spatial_method(&self) -> SpatialMethod {
        match self.discretization.spatial {
            SpatialConfig::Euler => SpatialMethod::Euler,
            SpatialConfig::Rk4 => SpatialMethod::Rk4,
        }
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            tol_force: self.solver.tol_force_n,
            tol_moment: self.solver.tol_moment_n_m,
            max_iterations: self.solver.max_iterations,
            fd_step: self.solver.fd_step_relative,
            lm_damping_init: self.solver.lm_damping_init,
            method: match self.solver.method {
                MethodConfig::Lm => SolveMethod::LevenbergMarquardt,
                MethodConfig::Dogleg => SolveMethod::Dogleg,
            },
            warm_start: self.solver.warm_start,
        }
    }

    pub fn tube_geometry(&self) -> Result<ActuatorGeometry, ConfigError> {
        ActuatorGeometry::new(
            self.geometry.actuator_inner_radius_m,
            self.geometry.actuator_core_outer_radius_m,
            self.geometry.actuator_outer_radius_m,
            self.geometry.fiber_angle_deg.to_radians(),
            self.geometry.rod_length_m,
        )
        .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn tube_params(&self) -> Result<HyperelasticParams, ConfigError> {
        HyperelasticParams::new(
            self.rpe.tube.shear_modulus_pa,
            self.rpe.tube.iso_fraction,
            self.rpe.tube.fiber_fraction,
            self.rpe.tube.fiber_modulus_pa,
        )
        .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.discretization.nodes < 2 {
            return Err(ConfigError::Invalid("discretization.nodes must be >= 2".into()));
        }
        if self.discretization.dt_s <= 0.0 || self.discretization.timeframe_s <= 0.0 {
            return Err(ConfigError::Invalid(
                "discretization.dt_s and timeframe_s must be positive".into(),
            ));
        }
        self.rod_model()?;
        self.actuation()?;
        self.scheme()?;
        self.tube_geometry()?;
        self.tube_params()?;
        Ok(())
    }

    /// Stable hexadecimal digest of the physics that determine a trajectory,
    /// used to key the benchmark reference cache. Discretization and solver
    /// settings of the comparison cells are deliberately excluded.
    pub fn physics_digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let key = (
            toml::to_string(&self.geometry).unwrap_or_default(),
            toml::to_string(&self.material).unwrap_or_default(),
            toml::to_string(&self.rpe).unwrap_or_default(),
            toml::to_string(&self.environment).unwrap_or_default(),
            toml::to_string(&self.actuation).unwrap_or_default(),
            format!("{}", self.discretization.timeframe_s),
        );
        let mut hasher = Sha256::new();
        hasher.update(key.0);
        hasher.update(key.1);
        hasher.update(key.2);
        hasher.update(key.3);
        hasher.update(key.4);
        hasher.update(key.5);
        let digest = hasher.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Reads a scenario config from a TOML file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    let config: ScenarioConfig = toml::from_str(&text)?;
    config.validate()?;
    Ok(config)
}

/// Writes a scenario config as TOML.
pub fn save_config(config: &ScenarioConfig, path: &Path) -> Result<(), ConfigError> {
    std::fs::write(path, toml::to_string(config)?)?;
    Ok(())
}
