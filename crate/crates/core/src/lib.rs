//! Multi-agent collective estimation of the mean intensity of a 2D scalar field.
//!
//! Agents first explore the arena with a random walk, then switch (at a fixed
//! time or adaptively) to an exploitation phase in which they average opinions
//! with nearby exploiting agents and move along a pseudo-gradient towards
//! positions where their own measurement agrees with the local collective signal.

pub mod agent;
pub mod engine;
pub mod environment;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod params;
pub mod spatial;

pub use agent::{AgentState, Phase};
pub use engine::{init_world, run, RunRecord, World};
pub use environment::{reflect_step, Arena, FieldShape, FieldSpec, GroundTruth, Vec2};
pub use error::{Error, Result};
pub use harness::{ExperimentSpec, Sweep, SweepSummary, TimeSeries};
pub use metrics::{decision_time, DecisionTime, MetricsSample};
pub use params::{
    GradientMode, MemoryInit, NeighborSearch, Patch, PreSwitchEstimate, SimParams, SwitchMode,
};
