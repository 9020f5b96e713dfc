//! Per-agent state and update rules.
//!
//! Every rule here operates on a single agent. Neighbor information only
//! arrives as explicit snapshots passed in by the engine.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::environment::{reflect_step, Arena, Vec2};
use crate::params::{MemoryInit, PreSwitchEstimate, SimParams, SwitchMode};

/// Axis displacements smaller than this contribute nothing to a finite difference.
pub const DISPLACEMENT_EPS: f64 = 1e-9;

/// Gradients with a smaller norm yield a pure random-walk step.
pub const GRADIENT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Exploring,
    Exploiting,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub position: Vec2,
    /// Radians in `(-pi, pi]`.
    pub heading: f64,
    pub phase: Phase,
    /// Opinion. Only meaningful once exploiting.
    pub memory: f64,
    /// Position before the most recent move.
    pub last_position: Vec2,
    /// Decayed finite-difference gradient of the objective (basic method).
    pub grad_memory: Vec2,
    /// Decayed finite-difference gradient of the sensed intensity (extended method).
    pub intensity_grad: Vec2,
    /// Measurement taken at `position`.
    pub sensed: f64,
    /// Measurement taken at `last_position`.
    pub prev_sensed: Option<f64>,
    /// Objective value from the previous exploitation step.
    pub prev_objective: Option<f64>,
    pub min_seen: f64,
    pub max_seen: f64,
    pub lag: f64,
    pub samples: u64,
    pub counter: u32,
    pub switch_time: Option<u64>,
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut a = theta % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Random-walk heading update: `heading + r_psi * zeta`, `zeta ~ U[-pi, pi]`.
pub fn explore_heading<R: Rng + ?Sized>(heading: f64, r_psi: f64, rng: &mut R) -> f64 {
    let zeta = rng.random_range(-PI..=PI);
    wrap_angle(heading + r_psi * zeta)
}

/// Mean of the agent's own measurement and its neighbors' opinions.
pub fn collective_signal(z_s: f64, neighbor_memories: &[f64]) -> f64 {
    (z_s + neighbor_memories.iter().sum::<f64>()) / (1 + neighbor_memories.len()) as f64
}

pub fn memory_update(z_m: f64, z_col: f64, alpha: f64) -> f64 {
    alpha * z_m + (1.0 - alpha) * z_col
}

pub fn objective(z_s: f64, z_col: f64) -> f64 {
    0.5 * (z_s - z_col) * (z_s - z_col)
}

/// Per-axis `delta / displacement`, or `None` when the displacement is degenerate
/// on both axes. A single degenerate axis contributes zero.
pub fn finite_difference(delta: f64, displacement: Vec2) -> Option<Vec2> {
    let axis = |d: f64| {
        if d.abs() < DISPLACEMENT_EPS {
            None
        } else {
            Some(delta / d)
        }
    };
    match (axis(displacement.x), axis(displacement.y)) {
        (None, None) => None,
        (gx, gy) => Some(Vec2::new(gx.unwrap_or(0.0), gy.unwrap_or(0.0))),
    }
}

fn decay(memory: Vec2, sample: Vec2, beta: f64) -> Vec2 {
    memory * beta + sample * (1.0 - beta)
}

/// `lambda * (-(1 - r_lambda) * g/|g| + r_lambda * eta)` with `eta` iid uniform
/// on `[-1, 1]` per axis. A vanishing gradient leaves only the random term.
fn descent_step<R: Rng + ?Sized>(gradient: Vec2, params: &SimParams, rng: &mut R) -> Vec2 {
    let eta = Vec2::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
    let norm = gradient.norm();
    let descent = if norm.is_finite() && norm > GRADIENT_EPS {
        -gradient * ((1.0 - params.r_lambda) / norm)
    } else {
        Vec2::ZERO
    };
    (descent + eta * params.r_lambda) * params.step_size
}

impl AgentState {
    pub fn new(position: Vec2, heading: f64) -> Self {
        AgentState {
            position,
            heading: wrap_angle(heading),
            phase: Phase::Exploring,
            memory: 0.0,
            last_position: position,
            grad_memory: Vec2::ZERO,
            intensity_grad: Vec2::ZERO,
            sensed: 0.0,
            prev_sensed: None,
            prev_objective: None,
            min_seen: f64::INFINITY,
            max_seen: f64::NEG_INFINITY,
            lag: 0.0,
            samples: 0,
            counter: 0,
            switch_time: None,
        }
    }

    pub fn is_exploring(&self) -> bool {
        self.phase == Phase::Exploring
    }

    /// `(min_seen + max_seen) / 2`, once at least one sample was tracked.
    pub fn z_avg(&self) -> Option<f64> {
        (self.samples > 0).then_some(0.5 * (self.min_seen + self.max_seen))
    }

    /// Random-walk step: new heading, fixed-length move, wall reflection.
    pub fn explore_move<R: Rng + ?Sized>(
        &mut self,
        arena: &Arena,
        params: &SimParams,
        rng: &mut R,
    ) {
        self.heading = explore_heading(self.heading, params.r_psi, rng);
        let step = Vec2::from_angle(self.heading) * params.step_size;
        self.move_by(arena, step);
    }

    pub(crate) fn move_by(&mut self, arena: &Arena, step: Vec2) {
        self.last_position = self.position;
        self.position = reflect_step(arena, self.position, step);
    }

    /// Feeds one measurement into the exploration-quality trackers and updates
    /// the hysteresis counter.
    pub fn update_switch_trackers(&mut self, z_s: f64, params: &SimParams) {
        self.min_seen = self.min_seen.min(z_s);
        self.max_seen = self.max_seen.max(z_s);
        let z_avg = 0.5 * (self.min_seen + self.max_seen);
        if self.samples == 0 {
            self.lag = z_avg;
        }
        self.samples += 1;

        // The gain compares the current midpoint with the lag built from earlier midpoints.
        let z_ref = (self.lag - z_avg).abs();
        self.lag = params.beta_lag * self.lag + (1.0 - params.beta_lag) * z_avg;

        if z_ref < params.delta_prec {
            self.counter = self.counter.saturating_add(1);
        } else {
            self.counter = self.counter.saturating_sub(1);
        }
    }

    pub fn should_switch(&self, params: &SimParams, t: u64) -> bool {
        match params.switch_mode {
            SwitchMode::Fixed { t_sw } => t >= t_sw,
            SwitchMode::Adaptive => self.counter > params.delta_mem,
        }
    }

    /// Irreversible transition into the exploitation phase.
    pub fn switch_to_exploitation(&mut self, t: u64, init: MemoryInit) {
        debug_assert!(self.is_exploring());
        self.phase = Phase::Exploiting;
        self.switch_time = Some(t);
        self.memory = match init {
            MemoryInit::Sensed => self.sensed,
            MemoryInit::TrackerMidpoint => self.z_avg().unwrap_or(self.sensed),
        };
        self.grad_memory = Vec2::ZERO;
        self.intensity_grad = Vec2::ZERO;
        self.prev_objective = None;
    }

    /// Basic pseudo-gradient step on the objective.
    ///
    /// Without a previous objective value the step is a pure random walk.
    pub fn basic_gradient_step<R: Rng + ?Sized>(
        &mut self,
        f_now: f64,
        f_prev: Option<f64>,
        params: &SimParams,
        rng: &mut R,
    ) -> Vec2 {
        let Some(f_prev) = f_prev else {
            return descent_step(Vec2::ZERO, params, rng);
        };
        if let Some(fd) = finite_difference(f_now - f_prev, self.position - self.last_position) {
            self.grad_memory = decay(self.grad_memory, fd, params.beta);
        }
        descent_step(self.grad_memory, params, rng)
    }

    /// Updates the decayed estimate of the intensity gradient from the last move.
    pub fn intensity_gradient_estimate(
        &mut self,
        z_now: f64,
        z_prev: Option<f64>,
        beta: f64,
    ) -> Vec2 {
        if let Some(z_prev) = z_prev {
            if let Some(fd) = finite_difference(z_now - z_prev, self.position - self.last_position)
            {
                self.intensity_grad = decay(self.intensity_grad, fd, beta);
            }
        }
        self.intensity_grad
    }

    /// Extended pseudo-gradient step: the objective gradient is approximated by
    /// `N/(N+1) * (z_s - z_col) * grad(z_s)`.
    pub fn extended_gradient_step<R: Rng + ?Sized>(
        &mut self,
        z_s: f64,
        z_col: f64,
        n_neighbors: usize,
        params: &SimParams,
        rng: &mut R,
    ) -> Vec2 {
        let grad_z = self.intensity_gradient_estimate(z_s, self.prev_sensed, params.beta);
        let n = n_neighbors as f64;
        let grad_f = grad_z * (n / (n + 1.0) * (z_s - z_col));
        descent_step(grad_f, params, rng)
    }

    /// Value standing in for this agent's estimate in the error metrics.
    pub fn estimate(&self, convention: PreSwitchEstimate) -> f64 {
        match (self.phase, convention) {
            (Phase::Exploiting, _) => self.memory,
            (Phase::Exploring, PreSwitchEstimate::LatestSense) => self.sensed,
            (Phase::Exploring, PreSwitchEstimate::TrackerMidpoint) => {
                0.5 * (self.min_seen.min(self.sensed) + self.max_seen.max(self.sensed))
            }
        }
    }
}
