//! Backward-differentiation time schemes and the state history they consume.
//!
//! Each scheme replaces a time derivative by `y_t(t_i) = c0 y(t_i) + y^h(t_i)`
//! where `y^h` collects weighted history values (and, for the one-parameter
//! family, the previous derivative). Substituting this into the rod PDE turns
//! every time step into a spatial boundary-value problem.

use crate::math::Vec3;
use crate::rod::RodState;
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BdfError {
    #[error("time step must be positive")]
    InvalidDt,
    #[error("alpha must lie in [-0.5, 0]")]
    InvalidAlpha,
    #[error("scheme needs {needed} history values, only {available} available")]
    InsufficientHistory { needed: usize, available: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Bdf1,
    Bdf2,
    Bdf3,
    BdfAlpha,
    Trapezoidal,
}

/// Time-discretization coefficients for one scheme at a fixed step.
#[derive(Debug, Clone, PartialEq)]
pub struct BdfScheme {
    pub kind: SchemeKind,
    pub alpha: f64,
    pub dt: f64,
    /// Coefficient of the current value.
    pub c0: f64,
    /// Weights of `y(t_{i-1}), y(t_{i-2}), ...`.
    pub history_weights: Vec<f64>,
    /// Weight of `y_t(t_{i-1})`; zero for the pure multistep schemes.
    pub rate_weight: f64,
}

impl BdfScheme {
    pub fn new(kind: SchemeKind, alpha: f64, dt: f64) -> Result<Self, BdfError> {
        if dt <= 0.0 {
            return Err(BdfError::InvalidDt);
        }
        let scheme = match kind {
            SchemeKind::Bdf1 => BdfScheme {
                kind,
                alpha: 0.0,
                dt,
                c0: 1.0 / dt,
                history_weights: vec![-1.0 / dt],
                rate_weight: 0.0,
            },
            SchemeKind::Bdf3 => BdfScheme {
                kind,
                alpha: 0.0,
                dt,
                c0: 11.0 / (6.0 * dt),
                history_weights: vec![-3.0 / dt, 3.0 / (2.0 * dt), -1.0 / (3.0 * dt)],
                rate_weight: 0.0,
            },
            SchemeKind::Bdf2 => return BdfScheme::new_alpha(SchemeKind::Bdf2, 0.0, dt),
            SchemeKind::Trapezoidal => {
                return BdfScheme::new_alpha(SchemeKind::Trapezoidal, -0.5, dt)
            }
            SchemeKind::BdfAlpha => return BdfScheme::new_alpha(SchemeKind::BdfAlpha, alpha, dt),
        };
        Ok(scheme)
    }

    /// One-parameter family interpolating between the trapezoidal rule
    /// (`alpha = -0.5`) and BDF2 (`alpha = 0`).
    fn new_alpha(kind: SchemeKind, alpha: f64, dt: f64) -> Result<Self, BdfError> {
        if !(-0.5..=0.0).contains(&alpha) {
            return Err(BdfError::InvalidAlpha);
        }
        Ok(BdfScheme {
            kind,
            alpha,
            dt,
            c0: (1.5 + alpha) / (dt * (1.0 + alpha)),
            history_weights: vec![-2.0 / dt, (0.5 + alpha) / (dt * (1.0 + alpha))],
            rate_weight: alpha / (1.0 + alpha),
        })
    }

    /// Number of stored values the scheme consumes.
    pub fn history_depth(&self) -> usize {
        self.history_weights.len()
    }

    pub fn uses_rate(&self) -> bool {
        self.rate_weight != 0.0
    }

    /// History term `y^h(t_i)` for one scalar component.
    ///
    /// `values[k]` is `y(t_{i-1-k})`; `rate` is `y_t(t_{i-1})` and may be
    /// zero-filled when the scheme ignores it.
    pub fn history_term(&self, values: &[f64], rate: f64) -> Result<f64, BdfError> {
        if values.len() < self.history_depth() {
            return Err(BdfError::InsufficientHistory {
                needed: self.history_depth(),
                available: values.len(),
            });
        }
        let mut acc = self.rate_weight * rate;
        for (w, y) in self.history_weights.iter().zip(values) {
            acc += w * y;
        }
        Ok(acc)
    }

    /// Discrete time derivative `y_t(t_i) = c0 y(t_i) + y^h(t_i)`.
    pub fn time_derivative(&self, y_now: f64, values: &[f64], rate: f64) -> Result<f64, BdfError> {
        Ok(self.c0 * y_now + self.history_term(values, rate)?)
    }

    /// Vector form of [`BdfScheme::history_term`].
    pub fn history_term_vec(&self, values: &[Vec3], rate: Vec3) -> Result<Vec3, BdfError> {
        if values.len() < self.history_depth() {
            return Err(BdfError::InsufficientHistory {
                needed: self.history_depth(),
                available: values.len(),
            });
        }
        let mut acc = rate * self.rate_weight;
        for (w, y) in self.history_weights.iter().zip(values) {
            acc += y * *w;
        }
        Ok(acc)
    }
}

/// Per-node time derivatives of the variables whose rates feed the next
/// step's history term.
#[derive(Debug, Clone, Default)]
pub struct NodeRates {
    pub q_t: Vec<Vec3>,
    pub w_t: Vec<Vec3>,
    pub v_t: Vec<Vec3>,
    pub u_t: Vec<Vec3>,
}

impl NodeRates {
    pub fn zeros(node_count: usize) -> Self {
        NodeRates {
            q_t: vec![Vec3::zeros(); node_count],
            w_t: vec![Vec3::zeros(); node_count],
            v_t: vec![Vec3::zeros(); node_count],
            u_t: vec![Vec3::zeros(); node_count],
        }
    }
}

/// Assembled history terms `y^h` on the grid for one time step.
#[derive(Debug, Clone)]
pub struct HistoryTerms {
    pub q_h: Vec<Vec3>,
    pub w_h: Vec<Vec3>,
    pub v_h: Vec<Vec3>,
    pub u_h: Vec<Vec3>,
}

impl HistoryTerms {
    /// All-zero terms, used for static solves.
    pub fn zeros(node_count: usize) -> Self {
        HistoryTerms {
            q_h: vec![Vec3::zeros(); node_count],
            w_h: vec![Vec3::zeros(); node_count],
            v_h: vec![Vec3::zeros(); node_count],
            u_h: vec![Vec3::zeros(); node_count],
        }
    }
}

/// Rolling store of converged states and their implied time derivatives.
///
/// The newest state sits at the front. Depth is capped at the largest scheme
/// order; slots beyond the available depth only matter during the cold-start
/// ramp, where the stepper falls back to lower-order schemes.
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    states: VecDeque<RodState>,
    rates: NodeRates,
    node_count: usize,
}

const MAX_DEPTH: usize = 3;

impl HistoryBuffer {
    /// Starts from an initial state whose time derivatives are zero.
    pub fn new(initial: RodState) -> Self {
        let node_count = initial.node_count();
        let mut states = VecDeque::with_capacity(MAX_DEPTH + 1);
        states.push_front(initial);
        HistoryBuffer {
            states,
            rates: NodeRates::zeros(node_count),
            node_count,
        }
    }

    /// Starts from a state the rod has held for all earlier times: every
    /// history slot carries the same state and all rates are zero. This is
    /// exact for a quiescent start and lets multistep schemes run at full
    /// order from the first step.
    pub fn with_constant_prehistory(initial: RodState) -> Self {
        let mut buf = HistoryBuffer::new(initial.clone());
        for _ in 1..MAX_DEPTH {
            buf.states.push_front(initial.clone());
        }
        buf
    }

    pub fn depth(&self) -> usize {
        self.states.len()
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn latest(&self) -> &RodState {
        self.states.front().unwrap()
    }

    /// Stored state `age` steps back; `age = 0` is the newest.
    pub fn state(&self, age: usize) -> Option<&RodState> {
        self.states.get(age)
    }

    pub fn latest_rates(&self) -> &NodeRates {
        &self.rates
    }

    pub fn push(&mut self, state: RodState, rates: NodeRates) {
        self.states.push_front(state);
        self.rates = rates;
        while self.states.len() > MAX_DEPTH {
            self.states.pop_back();
        }
    }

    /// Assembles `y^h` per node for `q, w, v, u` under the given scheme.
    pub fn assemble(&self, scheme: &BdfScheme) -> Result<HistoryTerms, BdfError> {
        let depth = scheme.history_depth();
        if self.states.len() < depth {
            return Err(BdfError::InsufficientHistory {
                needed: depth,
                available: self.states.len(),
            });
        }
        let mut terms = HistoryTerms::zeros(self.node_count);
        let mut vals = Vec::with_capacity(depth);
        for node in 0..self.node_count {
            for (dst, pick, rate) in [
                (
                    &mut terms.q_h,
                    (|n: &crate::rod::NodeState| n.q) as fn(&crate::rod::NodeState) -> Vec3,
                    self.rates.q_t[node],
                ),
                (&mut terms.w_h, |n| n.w, self.rates.w_t[node]),
                (&mut terms.v_h, |n| n.v, self.rates.v_t[node]),
                (&mut terms.u_h, |n| n.u, self.rates.u_t[node]),
            ] {
                vals.clear();
                for k in 0..depth {
                    vals.push(pick(&self.states[k].nodes[node]));
                }
                dst[node] = scheme.history_term_vec(&vals, rate)?;
            }
        }
        Ok(terms)
    }

    /// Time derivatives of the newly converged state, for the next step.
    pub fn rates_for(
        &self,
        scheme: &BdfScheme,
        new_state: &RodState,
        terms: &HistoryTerms,
    ) -> NodeRates {
        let mut rates = NodeRates::zeros(self.node_count);
        for node in 0..self.node_count {
            let n = &new_state.nodes[node];
            rates.q_t[node] = n.q * scheme.c0 + terms.q_h[node];
            rates.w_t[node] = n.w * scheme.c0 + terms.w_h[node];
            rates.v_t[node] = n.v * scheme.c0 + terms.v_h[node];
            rates.u_t[node] = n.u * scheme.c0 + terms.u_h[node];
        }
        rates
    }
}

/// Scheme actually used at a step, falling back to lower orders while the
/// buffer is still shallow.
pub fn effective_scheme(target: &BdfScheme, available_depth: usize) -> BdfScheme {
    if available_depth >= target.history_depth() {
        return target.clone();
    }
    match available_depth {
        0 | 1 => BdfScheme::new(SchemeKind::Bdf1, 0.0, target.dt).unwrap(),
        2 => BdfScheme::new(SchemeKind::Bdf2, 0.0, target.dt).unwrap(),
        _ => target.clone(),
    }
}
