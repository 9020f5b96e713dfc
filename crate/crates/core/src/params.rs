//! Simulation parameters. Defaults reproduce the reference experiment setup.

use serde::{Deserialize, Serialize};

use crate::environment::{Arena, FieldShape, FieldSpec, Vec2};
use crate::error::{Error, Result};

/// When agents leave the exploration phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchMode {
    /// Every agent switches at the same timestep.
    Fixed { t_sw: u64 },
    /// Each agent switches once its exploration counter exceeds `delta_mem`.
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    /// Finite differences of the objective itself.
    Basic,
    /// Objective gradient assembled from a decayed intensity-gradient estimate.
    Extended,
}

/// Opinion assigned to an agent at the moment it switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryInit {
    Sensed,
    TrackerMidpoint,
}

/// Which per-agent value stands in for the estimate before an agent switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreSwitchEstimate {
    /// Midpoint of the smallest and largest values sensed so far.
    TrackerMidpoint,
    /// The most recent sensed value.
    LatestSense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborSearch {
    BruteForce,
    Grid,
}

/// Rectangle in which agents are initially placed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub origin: Vec2,
    pub width: f64,
    pub height: f64,
}

impl Patch {
    pub fn anchored(width: f64, height: f64) -> Self {
        Patch {
            origin: Vec2::ZERO,
            width,
            height,
        }
    }

    pub fn contained_in(&self, arena: &Arena) -> bool {
        self.width >= 0.0
            && self.height >= 0.0
            && arena.contains(self.origin)
            && arena.contains(self.origin + Vec2::new(self.width, self.height))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    pub n_agents: usize,
    pub arena: Arena,
    pub patch: Patch,
    pub comm_range: f64,
    pub r_psi: f64,
    pub r_lambda: f64,
    pub step_size: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub beta_lag: f64,
    pub delta_prec: f64,
    pub delta_mem: u32,
    pub t_f: u64,
    pub switch_mode: SwitchMode,
    pub gradient_mode: GradientMode,
    pub field: FieldShape,
    pub memory_init: MemoryInit,
    pub pre_switch_estimate: PreSwitchEstimate,
    pub neighbor_search: NeighborSearch,
    pub seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            n_agents: 100,
            arena: Arena::square(1.4).expect("valid default arena"),
            patch: Patch::anchored(0.7, 0.7),
            comm_range: 0.30,
            r_psi: 0.1,
            r_lambda: 0.25,
            step_size: 0.002,
            sigma: 0.025,
            alpha: 0.99,
            beta: 0.99,
            beta_lag: 0.9,
            delta_prec: 1e-6,
            delta_mem: 100,
            t_f: 5000,
            switch_mode: SwitchMode::Fixed { t_sw: 2500 },
            gradient_mode: GradientMode::Extended,
            field: FieldShape::default_cone(),
            memory_init: MemoryInit::Sensed,
            pre_switch_estimate: PreSwitchEstimate::LatestSense,
            neighbor_search: NeighborSearch::Grid,
            seed: 0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let unit = [
            ("r_psi", self.r_psi),
            ("r_lambda", self.r_lambda),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("beta_lag", self.beta_lag),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.n_agents == 0 {
            return Err(Error::Config("n_agents must be at least 1".into()));
        }
        if !(self.comm_range.is_finite() && self.comm_range > 0.0) {
            return Err(Error::Config(format!(
                "comm_range must be positive, got {}",
                self.comm_range
            )));
        }
        if !(self.step_size.is_finite() && self.step_size >= 0.0) {
            return Err(Error::Config(format!(
                "step_size must be non-negative, got {}",
                self.step_size
            )));
        }
        if self.delta_prec.is_nan() || self.delta_prec < 0.0 {
            return Err(Error::Config(format!(
                "delta_prec must be non-negative, got {}",
                self.delta_prec
            )));
        }
        if !self.patch.contained_in(&self.arena) {
            return Err(Error::Config(format!(
                "initial patch {:?} is not contained in arena {} x {}",
                self.patch,
                self.arena.width(),
                self.arena.height()
            )));
        }
        self.field_spec().map(|_| ())
    }

    pub fn field_spec(&self) -> Result<FieldSpec> {
        FieldSpec::new(self.field.clone(), self.sigma)
    }
}
