//! Semi-discretized rod dynamics.
//!
//! With every time derivative replaced by a BDF expression, each time step
//! reduces to a spatial ODE in the state `(p, h, n, m, q, w)` along the rod,
//! closed by the constitutive inverse. Pressure actuation enters the force
//! and moment balance through the cap force of each actuator plus the
//! equivalent RPE force, and the tip boundary condition through the end-cap
//! equilibrium.

use crate::actuator::{rpe_strain, RpeFit, PA_PER_BAR};
use crate::bdf::{effective_scheme, BdfError, BdfScheme, HistoryBuffer, HistoryTerms};
use crate::math::{hat, Mat3, Quat, Vec3};
use crate::rod::{NodeState, RodState, StrainState};
use crate::section::{build_section, CrossSectionGeometry, MaterialLaw, SectionError, SectionState};
use nalgebra::{Vector4, Vector6};
use thiserror::Error;

/// Default magnitude bound beyond which a trajectory is flagged unstable.
pub const DEFAULT_BLOWUP_BOUND: f64 = 1e8;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("state exceeded the magnitude bound at grid node {node}")]
    NumericalBlowup { node: usize },
    #[error(transparent)]
    Section(#[from] SectionError),
    #[error(transparent)]
    Bdf(#[from] BdfError),
}

/// Per-actuator pressure signal (bar).
#[derive(Debug, Clone, PartialEq)]
pub enum PressureSignal {
    Constant { bar: f64 },
    /// Linear ramp from `start_bar` to `end_bar` over `[0, duration_s]`,
    /// held constant afterwards.
    Ramp { start_bar: f64, end_bar: f64, duration_s: f64 },
    /// `mean + amplitude * sin(omega t + phase + phase0)`.
    Sinusoid {
        mean_bar: f64,
        amplitude_bar: f64,
        omega_rad_per_s: f64,
        phase_rad: f64,
        phase0_rad: f64,
    },
    /// Piecewise-linear table of `(t_s, bar)` points, clamped at the ends.
    Tabulated { points: Vec<(f64, f64)> },
}

impl PressureSignal {
    pub fn zero() -> Self {
        PressureSignal::Constant { bar: 0.0 }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            PressureSignal::Constant { bar } => *bar,
            PressureSignal::Ramp { start_bar, end_bar, duration_s } => {
                if *duration_s <= 0.0 || t >= *duration_s {
                    *end_bar
                } else if t <= 0.0 {
                    *start_bar
                } else {
                    start_bar + (end_bar - start_bar) * t / duration_s
                }
            }
            PressureSignal::Sinusoid {
                mean_bar,
                amplitude_bar,
                omega_rad_per_s,
                phase_rad,
                phase0_rad,
            } => mean_bar + amplitude_bar * (omega_rad_per_s * t + phase_rad + phase0_rad).sin(),
            PressureSignal::Tabulated { points } => {
                if points.is_empty() {
                    return 0.0;
                }
                if t <= points[0].0 {
                    return points[0].1;
                }
                for w in points.windows(2) {
                    if t <= w[1].0 {
                        let f = (t - w[0].0) / (w[1].0 - w[0].0);
                        return w[0].1 + f * (w[1].1 - w[0].1);
                    }
                }
                points.last().unwrap().1
            }
        }
    }
}

/// How the radial pressure effect couples into the rod equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RpeMode {
    /// Adds the equivalent axial force `E_i A_m (v3 - 1)` to the pressure
    /// force of each actuator.
    EquivalentForce,
    /// Moves the RPE stretch into the rest strain on the neutral axis,
    /// `v3* = mean_i(v3_i - x_i u1 - y_i u2)` over the shifted offsets.
    StrainTransfer,
    Off,
}

/// Actuation, external loads and environment of one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct ActuationInput {
    pub signals: [PressureSignal; 3],
    /// Extra distributed force density (N/m, global frame).
    pub distributed_force: Vec3,
    /// Extra distributed moment density (N·m/m, global frame).
    pub distributed_moment: Vec3,
    /// Tip external force (N, global frame).
    pub tip_force: Vec3,
    /// Tip external moment (N·m, global frame).
    pub tip_moment: Vec3,
    pub cap_mass_kg: f64,
    pub gravity: Vec3,
    /// Include the rod's own weight as a distributed load.
    pub self_weight: bool,
    pub rpe_mode: RpeMode,
    pub rpe_fit: RpeFit,
}

impl ActuationInput {
    pub fn quiescent() -> Self {
        ActuationInput {
            signals: [PressureSignal::zero(), PressureSignal::zero(), PressureSignal::zero()],
            distributed_force: Vec3::zeros(),
            distributed_moment: Vec3::zeros(),
            tip_force: Vec3::zeros(),
            tip_moment: Vec3::zeros(),
            cap_mass_kg: 0.02,
            gravity: Vec3::new(0.0, 0.0, -9.81),
            self_weight: true,
            rpe_mode: RpeMode::EquivalentForce,
            rpe_fit: RpeFit::shipped(),
        }
    }

    pub fn pressures_at(&self, t: f64) -> [f64; 3] {
        [
            self.signals[0].eval(t).max(0.0),
            self.signals[1].eval(t).max(0.0),
            self.signals[2].eval(t).max(0.0),
        ]
    }
}

/// Rod definition: cross section, material, flexible length, rest strains.
#[derive(Debug, Clone, PartialEq)]
pub struct RodModel {
    pub geometry: CrossSectionGeometry,
    pub law: MaterialLaw,
    pub length: f64,
    pub rest: StrainState,
}

impl RodModel {
    pub fn uniform_grid(&self, nodes: usize) -> Vec<f64> {
        (0..nodes)
            .map(|i| self.length * i as f64 / (nodes - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatialMethod {
    Euler,
    Rk4,
}

/// Raw integration state of one cross section (quaternion unnormalized).
#[derive(Debug, Clone, Copy)]
pub struct RawNode {
    pub p: Vec3,
    pub h: Vector4<f64>,
    pub n: Vec3,
    pub m: Vec3,
    pub q: Vec3,
    pub w: Vec3,
}

impl RawNode {
    fn add_scaled(&self, other: &RawNode, a: f64) -> RawNode {
        RawNode {
            p: self.p + other.p * a,
            h: self.h + other.h * a,
            n: self.n + other.n * a,
            m: self.m + other.m * a,
            q: self.q + other.q * a,
            w: self.w + other.w * a,
        }
    }

    fn max_abs(&self) -> f64 {
        self.p
            .amax()
            .max(self.h.amax())
            .max(self.n.amax())
            .max(self.m.amax())
            .max(self.q.amax())
            .max(self.w.amax())
    }

    fn is_finite(&self) -> bool {
        self.p.iter().all(|x| x.is_finite())
            && self.h.iter().all(|x| x.is_finite())
            && self.n.iter().all(|x| x.is_finite())
            && self.m.iter().all(|x| x.is_finite())
            && self.q.iter().all(|x| x.is_finite())
            && self.w.iter().all(|x| x.is_finite())
    }
}

/// History terms and extra distributed loads at one arclength location.
#[derive(Debug, Clone, Copy, Default)]
pub struct HistorySample {
    pub q_h: Vec3,
    pub w_h: Vec3,
    pub v_h: Vec3,
    pub u_h: Vec3,
    /// Additional distributed force density (N/m, global frame).
    pub f_add: Vec3,
    /// Additional distributed moment density (N·m/m, global frame).
    pub l_add: Vec3,
}

/// Per-node distributed loads (global frame), e.g. the quasi-static
/// inertial forces used to seed a smooth start.
#[derive(Debug, Clone, Default)]
pub struct NodeLoads {
    pub force: Vec<Vec3>,
    pub moment: Vec<Vec3>,
}

/// Everything the spatial right-hand side needs for one solve: the section
/// built for the step's pressures, the per-actuator forces, the external
/// loads and the time-discretization terms. `c0 = 0` with zero history terms
/// makes the same right-hand side exactly static.
#[derive(Debug, Clone)]
pub struct StepContext {
    pub section: SectionState,
    pub rest: StrainState,
    /// Cap force plus equivalent RPE force per actuator (N).
    pub actuator_force: [f64; 3],
    /// RPE stretch per actuator, for the strain-transfer mode.
    pub rpe_stretch: [f64; 3],
    pub rpe_mode: RpeMode,
    /// Net distributed external force density (N/m, global frame).
    pub f_ext: Vec3,
    /// Net distributed external moment density (N·m/m, global frame).
    pub l_ext: Vec3,
    /// Tip external force and moment (global frame).
    pub tip_force: Vec3,
    pub tip_moment: Vec3,
    /// Cap weight (global frame).
    pub cap_weight: Vec3,
    pub c0: f64,
    pub rho_area: f64,
    pub rho_j: Mat3,
    pub pressures_bar: [f64; 3],
}

impl StepContext {
    /// Builds the per-step data for pressures at time `t`. `c0 = 0` (a static
    /// solve) when no scheme is given.
    pub fn build(
        model: &RodModel,
        actuation: &ActuationInput,
        t: f64,
        c0: f64,
    ) -> Result<StepContext, SectionError> {
        let pressures = actuation.pressures_at(t);
        let section = build_section(&model.geometry, &model.law, pressures)?;
        let a_in = model.geometry.chamber_area;
        let a_m = model.geometry.wall_area;
        let mut actuator_force = [0.0; 3];
        let mut rpe_stretch = [1.0; 3];
        for i in 0..3 {
            let cap = pressures[i] * PA_PER_BAR * a_in;
            rpe_stretch[i] = rpe_strain(&actuation.rpe_fit, pressures[i]);
            actuator_force[i] = match actuation.rpe_mode {
                RpeMode::EquivalentForce => {
                    cap + section.moduli[i] * a_m * (rpe_stretch[i] - 1.0)
                }
                RpeMode::StrainTransfer | RpeMode::Off => cap,
            };
        }
        let mut f_ext = actuation.distributed_force;
        if actuation.self_weight {
            f_ext += actuation.gravity * (model.law.density * model.geometry.total_area());
        }
        Ok(StepContext {
            section,
            rest: model.rest,
            actuator_force,
            rpe_stretch,
            rpe_mode: actuation.rpe_mode,
            f_ext,
            l_ext: actuation.distributed_moment,
            tip_force: actuation.tip_force,
            tip_moment: actuation.tip_moment,
            cap_weight: actuation.gravity * actuation.cap_mass_kg,
            c0,
            rho_area: model.law.density * model.geometry.total_area(),
            rho_j: model.geometry.area_moment_matrix() * model.law.density,
            pressures_bar: pressures,
        })
    }

    /// Effective rest strains; the strain-transfer mode folds the RPE
    /// stretch (moved to the neutral axis) into `v3*`.
    fn rest_strains(&self, u: &Vec3) -> Vec3 {
        let mut v_star = self.rest.v_star;
        if self.rpe_mode == RpeMode::StrainTransfer {
            let mut transferred = 0.0;
            for i in 0..3 {
                let r = self.section.shifted_offsets[i];
                transferred += self.rpe_stretch[i] - r.x * u.x - r.y * u.y;
            }
            v_star.z += transferred / 3.0 - 1.0;
        }
        v_star
    }

    /// Strains recovered from the internal loads at one section.
    pub fn strains(&self, rotation: &Mat3, n: &Vec3, m: &Vec3) -> (Vec3, Vec3) {
        let u = self.rest.u_star + self.section.k_bt_inv * (rotation.transpose() * m);
        let v = self.rest_strains(&u) + self.section.k_se_inv * (rotation.transpose() * n);
        (v, u)
    }

    /// Tip boundary targets `(n(L), m(L))` from the end-cap equilibrium for
    /// the tip rotation `r`.
    pub fn tip_targets(&self, r: &Mat3) -> (Vec3, Vec3) {
        let mut force_local = Vec3::zeros();
        let mut moment_local = Vec3::zeros();
        for i in 0..3 {
            let fb = Vec3::new(0.0, 0.0, self.actuator_force[i]);
            force_local += fb;
            moment_local += self.section.shifted_offsets[i].cross(&fb);
        }
        let weight_moment = (r * self.section.neutral_offset).cross(&self.cap_weight);
        (
            self.cap_weight + r * force_local + self.tip_force,
            weight_moment + r * moment_local + self.tip_moment,
        )
    }

    /// Scale (N) used to nondimensionalize force residuals.
    pub fn force_scale(&self, geometry: &CrossSectionGeometry) -> f64 {
        let mean_e = self.section.moduli.iter().sum::<f64>() / 3.0;
        mean_e * geometry.wall_area
    }
}

/// Spatial right-hand side of the semi-discretized rod equations.
pub fn ode_rhs(ctx: &StepContext, history: &HistorySample, node: &RawNode) -> RawNode {
    let hq = Quat(node.h);
    // The rotation formula tolerates unnormalized quaternions; the norm can
    // only vanish here after a blowup, which the integrator flags anyway.
    let r = hq.to_rotation().unwrap_or_else(|_| Mat3::identity());
    let (v, u) = ctx.strains(&r, &node.n, &node.m);
    let u_hat = hat(u);
    let omega = hat(node.w) + Mat3::identity() * ctx.c0;

    let p_s = r * v;
    let h_s = hq.rate_from_curvature(u).0;

    let u_hat_e3 = Vec3::new(u.y, -u.x, 0.0); // û e3
    let r_uhat_e3 = r * u_hat_e3;
    let mut n_s =
        -(ctx.f_ext + history.f_add) + r * (omega * node.q + history.q_h) * ctx.rho_area;
    let mut m_s = -(ctx.l_ext + history.l_add) - p_s.cross(&node.n)
        + r * (omega * (ctx.rho_j * node.w) + ctx.rho_j * history.w_h);
    for i in 0..3 {
        let f = ctx.actuator_force[i];
        n_s += r_uhat_e3 * f;
        let arm = ctx.section.shifted_offsets[i];
        let local = (v + u_hat * arm).cross(&Vec3::z()) + arm.cross(&u_hat_e3);
        m_s += (r * local) * f;
    }

    let q_s = omega * v + history.v_h - u_hat * node.q;
    let w_s = omega * u + history.u_h;

    RawNode { p: p_s, h: h_s, n: n_s, m: m_s, q: q_s, w: w_s }
}

/// Per-node history terms and extra loads with linear interpolation at
/// interval midpoints.
pub struct HistorySampler<'a> {
    terms: Option<&'a HistoryTerms>,
    loads: Option<&'a NodeLoads>,
}

impl<'a> HistorySampler<'a> {
    pub fn new(terms: Option<&'a HistoryTerms>) -> Self {
        HistorySampler { terms, loads: None }
    }

    pub fn with_loads(terms: Option<&'a HistoryTerms>, loads: Option<&'a NodeLoads>) -> Self {
        HistorySampler { terms, loads }
    }

    fn at_node(&self, j: usize) -> HistorySample {
        let mut s = match self.terms {
            None => HistorySample::default(),
            Some(t) => HistorySample {
                q_h: t.q_h[j],
                w_h: t.w_h[j],
                v_h: t.v_h[j],
                u_h: t.u_h[j],
                ..HistorySample::default()
            },
        };
        if let Some(l) = self.loads {
            s.f_add = l.force[j];
            s.l_add = l.moment[j];
        }
        s
    }

    fn at_mid(&self, j: usize) -> HistorySample {
        let mut s = match self.terms {
            None => HistorySample::default(),
            Some(t) => HistorySample {
                q_h: (t.q_h[j] + t.q_h[j + 1]) * 0.5,
                w_h: (t.w_h[j] + t.w_h[j + 1]) * 0.5,
                v_h: (t.v_h[j] + t.v_h[j + 1]) * 0.5,
                u_h: (t.u_h[j] + t.u_h[j + 1]) * 0.5,
                ..HistorySample::default()
            },
        };
        if let Some(l) = self.loads {
            s.f_add = (l.force[j] + l.force[j + 1]) * 0.5;
            s.l_add = (l.moment[j] + l.moment[j + 1]) * 0.5;
        }
        s
    }
}

/// Integrates the spatial ODE over `grid` from a base state.
///
/// Quaternions are renormalized after every node step and the strains are
/// recomputed per node from the constitutive inverse. Any component beyond
/// `blowup_bound` (or a non-finite value) aborts with `NumericalBlowup`.
pub fn integrate_space(
    ctx: &StepContext,
    history: &HistorySampler,
    base: RawNode,
    grid: &[f64],
    method: SpatialMethod,
    blowup_bound: f64,
) -> Result<RodState, DynamicsError> {
    let n_nodes = grid.len();
    let mut nodes = Vec::with_capacity(n_nodes);
    let mut current = base;

    let store = |raw: &RawNode, nodes: &mut Vec<NodeState>| {
        let h = Quat(raw.h).normalized();
        let r = h.to_rotation().expect("normalized quaternion");
        let (v, u) = ctx.strains(&r, &raw.n, &raw.m);
        nodes.push(NodeState {
            p: raw.p,
            h,
            n: raw.n,
            m: raw.m,
            q: raw.q,
            w: raw.w,
            v,
            u,
        });
    };

    for j in 0..n_nodes - 1 {
        if !current.is_finite() || current.max_abs() > blowup_bound {
            return Err(DynamicsError::NumericalBlowup { node: j });
        }
        store(&current, &mut nodes);
        let ds = grid[j + 1] - grid[j];
        let here = history.at_node(j);
        current = match method {
            SpatialMethod::Euler => {
                let k1 = ode_rhs(ctx, &here, &current);
                current.add_scaled(&k1, ds)
            }
            SpatialMethod::Rk4 => {
                let mid = history.at_mid(j);
                let next = history.at_node(j + 1);
                let k1 = ode_rhs(ctx, &here, &current);
                let k2 = ode_rhs(ctx, &mid, &current.add_scaled(&k1, 0.5 * ds));
                let k3 = ode_rhs(ctx, &mid, &current.add_scaled(&k2, 0.5 * ds));
                let k4 = ode_rhs(ctx, &next, &current.add_scaled(&k3, ds));
                let mut acc = current.add_scaled(&k1, ds / 6.0);
                acc = acc.add_scaled(&k2, ds / 3.0);
                acc = acc.add_scaled(&k3, ds / 3.0);
                acc.add_scaled(&k4, ds / 6.0)
            }
        };
        // Renormalize the quaternion after each node step.
        let norm = current.h.norm();
        if norm > 0.0 && norm.is_finite() {
            current.h /= norm;
        }
    }
    if !current.is_finite() || current.max_abs() > blowup_bound {
        return Err(DynamicsError::NumericalBlowup { node: n_nodes - 1 });
    }
    store(&current, &mut nodes);
    Ok(RodState::new(grid.to_vec(), nodes).expect("grid validated by caller"))
}

/// One spatial boundary-value problem: a step context plus grid, spatial
/// method and base pose. A static solve is the `c0 = 0` case without
/// history.
#[derive(Debug, Clone)]
pub struct BvpProblem {
    pub ctx: StepContext,
    pub terms: Option<HistoryTerms>,
    pub node_loads: Option<NodeLoads>,
    pub grid: Vec<f64>,
    pub method: SpatialMethod,
    pub base_position: Vec3,
    pub base_orientation: Quat,
    pub blowup_bound: f64,
    pub force_scale: f64,
    pub moment_scale: f64,
}

impl BvpProblem {
    /// Static problem for the actuation evaluated at time `t`.
    pub fn new_static(
        model: &RodModel,
        actuation: &ActuationInput,
        t: f64,
        grid: Vec<f64>,
        method: SpatialMethod,
    ) -> Result<Self, SectionError> {
        let ctx = StepContext::build(model, actuation, t, 0.0)?;
        Ok(BvpProblem::assemble(model, ctx, None, grid, method))
    }

    /// Dynamic problem at time `t` under the given (already effective)
    /// scheme and assembled history terms.
    pub fn new_dynamic(
        model: &RodModel,
        actuation: &ActuationInput,
        t: f64,
        scheme: &BdfScheme,
        terms: HistoryTerms,
        grid: Vec<f64>,
        method: SpatialMethod,
    ) -> Result<Self, SectionError> {
        let ctx = StepContext::build(model, actuation, t, scheme.c0)?;
        Ok(BvpProblem::assemble(model, ctx, Some(terms), grid, method))
    }

    fn assemble(
        model: &RodModel,
        ctx: StepContext,
        terms: Option<HistoryTerms>,
        grid: Vec<f64>,
        method: SpatialMethod,
    ) -> Self {
        let force_scale = ctx.force_scale(&model.geometry);
        let moment_scale = force_scale * model.geometry.triangle_side;
        BvpProblem {
            ctx,
            terms,
            node_loads: None,
            grid,
            method,
            base_position: Vec3::zeros(),
            base_orientation: Quat::identity(),
            blowup_bound: DEFAULT_BLOWUP_BOUND,
            force_scale,
            moment_scale,
        }
    }

    /// Integrates the rod for a base-load guess `G = (n(0), m(0))`.
    pub fn integrate(&self, guess: &Vector6<f64>) -> Result<RodState, DynamicsError> {
        let base = RawNode {
            p: self.base_position,
            h: self.base_orientation.0,
            n: Vec3::new(guess[0], guess[1], guess[2]),
            m: Vec3::new(guess[3], guess[4], guess[5]),
            q: Vec3::zeros(),
            w: Vec3::zeros(),
        };
        let sampler = HistorySampler::with_loads(self.terms.as_ref(), self.node_loads.as_ref());
        integrate_space(&self.ctx, &sampler, base, &self.grid, self.method, self.blowup_bound)
    }

    /// Raw tip-load mismatch `(E^F, E^M)` for an integrated state.
    pub fn tip_mismatch(&self, state: &RodState) -> Vector6<f64> {
        let tip = state.tip();
        let r = tip.h.to_rotation().expect("tip quaternion is normalized");
        let (n_t, m_t) = self.ctx.tip_targets(&r);
        let ef = tip.n - n_t;
        let em = tip.m - m_t;
        Vector6::new(ef.x, ef.y, ef.z, em.x, em.y, em.z)
    }
}

/// Result of one converged time step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: RodState,
    pub guess: Vector6<f64>,
    pub iterations: usize,
}

/// Advances the dynamic simulation by one step: builds the section for the
/// pressures at `t`, assembles history terms under the cold-start ramp,
/// solves the spatial BVP and pushes the converged state into the buffer.
#[allow(clippy::too_many_arguments)]
pub fn step_dynamics(
    model: &RodModel,
    actuation: &ActuationInput,
    target_scheme: &BdfScheme,
    buffer: &mut HistoryBuffer,
    t: f64,
    grid: &[f64],
    method: SpatialMethod,
    solver: &crate::shooting::SolverConfig,
    warm_guess: &Vector6<f64>,
) -> Result<StepOutcome, crate::shooting::ShootingError> {
    let scheme = effective_scheme(target_scheme, buffer.depth());
    let terms = buffer
        .assemble(&scheme)
        .map_err(DynamicsError::from)
        .map_err(crate::shooting::ShootingError::from)?;
    let problem = BvpProblem::new_dynamic(
        model,
        actuation,
        t,
        &scheme,
        terms.clone(),
        grid.to_vec(),
        method,
    )
    .map_err(DynamicsError::from)
    .map_err(crate::shooting::ShootingError::from)?;
    let solved = crate::shooting::solve(&problem, warm_guess, solver)?;
    let rates = buffer.rates_for(&scheme, &solved.state, &terms);
    buffer.push(solved.state.clone(), rates);
    Ok(StepOutcome {
        state: solved.state,
        guess: solved.guess,
        iterations: solved.iterations,
    })
}

/// Solves the static equilibrium for the actuation evaluated at `t`.
pub fn static_solve(
    model: &RodModel,
    actuation: &ActuationInput,
    t: f64,
    grid: &[f64],
    method: SpatialMethod,
    solver: &crate::shooting::SolverConfig,
    initial_guess: &Vector6<f64>,
) -> Result<StepOutcome, crate::shooting::ShootingError> {
    static_solve_loaded(model, actuation, t, grid, method, solver, initial_guess, None)
}

/// Static solve with extra per-node distributed loads, used to seed
/// quasi-static starts with their inertial corrections.
#[allow(clippy::too_many_arguments)]
pub fn static_solve_loaded(
    model: &RodModel,
    actuation: &ActuationInput,
    t: f64,
    grid: &[f64],
    method: SpatialMethod,
    solver: &crate::shooting::SolverConfig,
    initial_guess: &Vector6<f64>,
    loads: Option<NodeLoads>,
) -> Result<StepOutcome, crate::shooting::ShootingError> {
    let mut problem = BvpProblem::new_static(model, actuation, t, grid.to_vec(), method)
        .map_err(DynamicsError::from)
        .map_err(crate::shooting::ShootingError::from)?;
    problem.node_loads = loads;
    let solved = crate::shooting::solve(&problem, initial_guess, solver)?;
    Ok(StepOutcome {
        state: solved.state,
        guess: solved.guess,
        iterations: solved.iterations,
    })
}

/// Rod model with the shipped defaults, shared by unit tests.
#[cfg(test)]
pub(crate) fn test_model(kind: crate::section::LawKind) -> RodModel {
    let law = MaterialLaw::new(
        kind,
        MaterialLaw::DEFAULT_E,
        MaterialLaw::DEFAULT_A1,
        MaterialLaw::DEFAULT_A2,
        MaterialLaw::DEFAULT_GAMMA,
        1100.0,
        (0.0, 30.0),
    )
    .unwrap();
    RodModel {
        geometry: CrossSectionGeometry::default(),
        law,
        length: 0.170,
        rest: StrainState::straight_rest(),
    }
}
