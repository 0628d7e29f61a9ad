//! Rod state container and compatibility diagnostics.

use crate::math::{hat, Quat, Vec3};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RodError {
    #[error("arclength grid must be strictly increasing with at least 2 nodes")]
    InvalidGrid,
    #[error("states live on different grids")]
    GridMismatch,
}

/// Reference and current strain measures of one cross section.
///
/// `v` holds the shears `v1, v2` and the axial strain `v3` (dimensionless);
/// `u` holds the bending rates `u1, u2` and the twist rate `u3` (1/m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrainState {
    pub v: Vec3,
    pub u: Vec3,
    pub v_star: Vec3,
    pub u_star: Vec3,
}

impl StrainState {
    /// Rest state of a straight rod: `v* = e3`, `u* = 0`.
    pub fn straight_rest() -> Self {
        StrainState {
            v: Vec3::new(0.0, 0.0, 1.0),
            u: Vec3::zeros(),
            v_star: Vec3::new(0.0, 0.0, 1.0),
            u_star: Vec3::zeros(),
        }
    }
}

/// Full state of one cross section.
///
/// `p`, `n`, `m` are global-frame position, internal force and internal
/// moment; `q`, `w` are the local-frame linear and angular velocity; `v`, `u`
/// are the strains recovered from the constitutive inverse during spatial
/// integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeState {
    pub p: Vec3,
    pub h: Quat,
    pub n: Vec3,
    pub m: Vec3,
    pub q: Vec3,
    pub w: Vec3,
    pub v: Vec3,
    pub u: Vec3,
}

impl NodeState {
    pub fn at_rest(p: Vec3, h: Quat) -> Self {
        NodeState {
            p,
            h,
            n: Vec3::zeros(),
            m: Vec3::zeros(),
            q: Vec3::zeros(),
            w: Vec3::zeros(),
            v: Vec3::new(0.0, 0.0, 1.0),
            u: Vec3::zeros(),
        }
    }
}

/// Rod state sampled on a fixed arclength grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RodState {
    grid: Vec<f64>,
    pub nodes: Vec<NodeState>,
}

impl RodState {
    pub fn new(grid: Vec<f64>, nodes: Vec<NodeState>) -> Result<Self, RodError> {
        if grid.len() < 2 || nodes.len() != grid.len() || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(RodError::InvalidGrid);
        }
        Ok(RodState { grid, nodes })
    }

    /// Uniform grid of `n` nodes over `[0, length]`, all at rest.
    pub fn straight(length: f64, n: usize) -> Result<Self, RodError> {
        if n < 2 || length <= 0.0 {
            return Err(RodError::InvalidGrid);
        }
        let grid: Vec<f64> = (0..n)
            .map(|i| length * i as f64 / (n - 1) as f64)
            .collect();
        let nodes = grid
            .iter()
            .map(|&s| NodeState::at_rest(Vec3::new(0.0, 0.0, s), Quat::identity()))
            .collect();
        Ok(RodState { grid, nodes })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn node_count(&self) -> usize {
        self.grid.len()
    }

    pub fn length(&self) -> f64 {
        *self.grid.last().unwrap() - self.grid[0]
    }

    pub fn tip(&self) -> &NodeState {
        self.nodes.last().unwrap()
    }

    /// Largest deviation of any node quaternion from unit norm.
    pub fn max_quat_norm_drift(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| (n.h.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest absolute value over all state components, for blowup checks.
    pub fn max_abs_component(&self) -> f64 {
        self.nodes.iter().fold(0.0_f64, |acc, n| {
            let vals = [
                n.p.amax(),
                n.h.0.amax(),
                n.n.amax(),
                n.m.amax(),
                n.q.amax(),
                n.w.amax(),
            ];
            vals.iter().fold(acc, |a, &x| a.max(x))
        })
    }
}

/// Residuals of the velocity/strain compatibility relations between two
/// consecutive converged states `dt` apart.
///
/// Time derivatives of `v` and `u` are backward differences; arclength
/// derivatives of `q` and `w` are central differences at interior nodes.
/// Returns the per-component maxima of `|q_s - (v_t - û q + ŵ v)|` and
/// `|w_s - (u_t - û w)|`, a pure diagnostic on the solve.
pub fn compatibility_residual(
    state_t0: &RodState,
    state_t1: &RodState,
    dt: f64,
) -> Result<(Vec3, Vec3), RodError> {
    if state_t0.grid != state_t1.grid {
        return Err(RodError::GridMismatch);
    }
    let grid = &state_t1.grid;
    let mut res_q = Vec3::zeros();
    let mut res_w = Vec3::zeros();
    for i in 1..grid.len() - 1 {
        let ds = grid[i + 1] - grid[i - 1];
        let node = &state_t1.nodes[i];
        let prev = &state_t0.nodes[i];
        let q_s = (state_t1.nodes[i + 1].q - state_t1.nodes[i - 1].q) / ds;
        let w_s = (state_t1.nodes[i + 1].w - state_t1.nodes[i - 1].w) / ds;
        let v_t = (node.v - prev.v) / dt;
        let u_t = (node.u - prev.u) / dt;
        let uh = hat(node.u);
        let rq = q_s - (v_t - uh * node.q + hat(node.w) * node.v);
        let rw = w_s - (u_t - uh * node.w);
        for k in 0..3 {
            res_q[k] = res_q[k].max(rq[k].abs());
            res_w[k] = res_w[k].max(rw[k].abs());
        }
    }
    Ok((res_q, res_w))
}
