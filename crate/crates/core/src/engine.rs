//! World state and the synchronous update schedule.
//!
//! Each tick reads a frozen snapshot of positions and opinions, computes every
//! agent's next state into a separate buffer and commits all of them at once.
//! Every agent owns an independent ChaCha stream derived from the run seed, so
//! results do not depend on the order in which agents are processed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{collective_signal, memory_update, objective, AgentState, Phase};
use crate::environment::{FieldSpec, Vec2};
use crate::error::{Error, Result};
use crate::metrics::MetricsSample;
use crate::params::{GradientMode, NeighborSearch, SimParams};
use crate::spatial::{brute_force_neighbors, UniformGrid};

/// Random stream of agent `i` for a run seeded with `seed`.
pub fn agent_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

pub struct World {
    params: SimParams,
    field: FieldSpec,
    z_gt: f64,
    agents: Vec<AgentState>,
    rngs: Vec<ChaCha8Rng>,
    grid: UniformGrid,
    t: u64,
}

/// Places `n_agents` uniformly in the initial patch with uniform headings.
pub fn init_world(params: &SimParams) -> Result<World> {
    params.validate()?;
    let mut rngs: Vec<ChaCha8Rng> = (0..params.n_agents)
        .map(|i| agent_rng(params.seed, i))
        .collect();
    let patch = params.patch;
    let agents = rngs
        .iter_mut()
        .map(|rng| {
            let p = patch.origin
                + Vec2::new(
                    rng.random::<f64>() * patch.width,
                    rng.random::<f64>() * patch.height,
                );
            let heading = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            AgentState::new(p, heading)
        })
        .collect();
    World::assemble(params.clone(), agents, rngs)
}

impl World {
    /// Builds a world around explicitly prepared agents. Each agent is sensed
    /// once at its position; all other state is taken as given.
    pub fn from_agents(params: &SimParams, agents: Vec<AgentState>) -> Result<World> {
        params.validate()?;
        if agents.len() != params.n_agents {
            return Err(Error::Config(format!(
                "expected {} agents, got {}",
                params.n_agents,
                agents.len()
            )));
        }
        if let Some(a) = agents.iter().find(|a| !params.arena.contains(a.position)) {
            return Err(Error::Domain(format!(
                "agent at {:?} is outside the arena",
                a.position
            )));
        }
        let rngs = (0..agents.len())
            .map(|i| agent_rng(params.seed, i))
            .collect();
        World::assemble(params.clone(), agents, rngs)
    }

    fn assemble(
        params: SimParams,
        mut agents: Vec<AgentState>,
        mut rngs: Vec<ChaCha8Rng>,
    ) -> Result<World> {
        let field = params.field_spec()?;
        let arena = params.arena;
        for (a, rng) in agents.iter_mut().zip(rngs.iter_mut()) {
            a.sensed = field.sense_unchecked(&arena, a.position, rng);
        }
        let z_gt = field.ground_truth_mean(&arena).z_gt;
        let grid = UniformGrid::new(&arena, params.comm_range);
        Ok(World {
            params,
            field,
            z_gt,
            agents,
            rngs,
            grid,
            t: 0,
        })
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn z_gt(&self) -> f64 {
        self.z_gt
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn positions(&self) -> Vec<Vec2> {
        self.agents.iter().map(|a| a.position).collect()
    }

    fn exploiting_mask(&self) -> Vec<bool> {
        self.agents
            .iter()
            .map(|a| a.phase == Phase::Exploiting)
            .collect()
    }

    /// Exploiting agents strictly within communication range of agent `i`,
    /// in ascending index order.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let positions = self.positions();
        let mask = self.exploiting_mask();
        match self.params.neighbor_search {
            NeighborSearch::BruteForce => {
                brute_force_neighbors(&positions, &mask, i, self.params.comm_range)
            }
            NeighborSearch::Grid => {
                let mut grid = UniformGrid::new(&self.params.arena, self.params.comm_range);
                grid.rebuild(&positions, &mask);
                grid.neighbors(&positions, i, self.params.comm_range)
            }
        }
    }

    pub fn estimates(&self) -> Vec<f64> {
        let convention = self.params.pre_switch_estimate;
        self.agents.iter().map(|a| a.estimate(convention)).collect()
    }

    pub fn sample(&self) -> Result<MetricsSample> {
        let switched = self
            .agents
            .iter()
            .filter(|a| a.phase == Phase::Exploiting)
            .count();
        MetricsSample::from_estimates(
            self.t,
            &self.estimates(),
            self.z_gt,
            switched as f64 / self.agents.len() as f64,
        )
    }

    pub fn tick(&mut self) {
        let order: Vec<usize> = (0..self.agents.len()).collect();
        self.tick_in_order(&order);
    }

    /// One synchronous step, visiting agents in `order` (a permutation of
    /// `0..n`). The outcome is independent of the order.
    pub fn tick_in_order(&mut self, order: &[usize]) {
        debug_assert_eq!(order.len(), self.agents.len());
        let t = self.t;
        let params = &self.params;
        let arena = params.arena;
        let mut next = self.agents.clone();

        // Switching decisions take effect before any aggregation in this tick.
        for &i in order {
            let a = &mut next[i];
            if a.is_exploring() {
                a.update_switch_trackers(a.sensed, params);
                if a.should_switch(params, t) {
                    a.switch_to_exploitation(t, params.memory_init);
                }
            }
        }

        let positions: Vec<Vec2> = next.iter().map(|a| a.position).collect();
        let memories: Vec<f64> = next.iter().map(|a| a.memory).collect();
        let exploiting: Vec<bool> = next.iter().map(|a| a.phase == Phase::Exploiting).collect();
        let use_grid = params.neighbor_search == NeighborSearch::Grid;
        if use_grid && exploiting.iter().any(|&e| e) {
            self.grid.rebuild(&positions, &exploiting);
        }

        let mut nb_memories = Vec::new();
        for &i in order {
            let rng = &mut self.rngs[i];
            let a = &mut next[i];
            match a.phase {
                Phase::Exploring => a.explore_move(&arena, params, rng),
                Phase::Exploiting => {
                    let nb = if use_grid {
                        self.grid.neighbors(&positions, i, params.comm_range)
                    } else {
                        brute_force_neighbors(&positions, &exploiting, i, params.comm_range)
                    };
                    nb_memories.clear();
                    nb_memories.extend(nb.iter().map(|&j| memories[j]));

                    let z_s = a.sensed;
                    let z_col = collective_signal(z_s, &nb_memories);
                    a.memory = memory_update(a.memory, z_col, params.alpha);
                    let f = objective(z_s, z_col);
                    let step = match params.gradient_mode {
                        GradientMode::Basic => {
                            a.basic_gradient_step(f, a.prev_objective, params, rng)
                        }
                        GradientMode::Extended => {
                            a.extended_gradient_step(z_s, z_col, nb.len(), params, rng)
                        }
                    };
                    a.prev_objective = Some(f);
                    a.move_by(&arena, step);
                }
            }
        }

        for &i in order {
            let a = &mut next[i];
            a.prev_sensed = Some(a.sensed);
            a.sensed = self
                .field
                .sense_unchecked(&arena, a.position, &mut self.rngs[i]);
        }

        self.agents = next;
        self.t += 1;
    }
}

/// Everything retained from one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub params: SimParams,
    pub z_gt: f64,
    pub samples: Vec<MetricsSample>,
    /// `None` for agents that never left the exploration phase.
    pub switch_times: Vec<Option<u64>>,
    pub initial_positions: Vec<Vec2>,
    pub final_positions: Vec<Vec2>,
    pub final_estimates: Vec<f64>,
}

impl RunRecord {
    pub fn final_sample(&self) -> &MetricsSample {
        self.samples
            .last()
            .expect("a run record always holds the initial sample")
    }

    /// Sample recorded exactly at timestep `t`, if any.
    pub fn sample_at(&self, t: u64) -> Option<&MetricsSample> {
        self.samples
            .binary_search_by_key(&t, |s| s.t)
            .ok()
            .map(|k| &self.samples[k])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Runs `params.t_f` ticks, sampling the metrics at `t = 0`, every `stride`
/// ticks and at the final tick.
pub fn run(params: &SimParams, stride: u64) -> Result<RunRecord> {
    if stride == 0 {
        return Err(Error::Config("record stride must be at least 1".into()));
    }
    let mut world = init_world(params)?;
    let initial_positions = world.positions();
    let mut samples = vec![world.sample()?];
    while world.t() < params.t_f {
        world.tick();
        if world.t() % stride == 0 || world.t() == params.t_f {
            samples.push(world.sample()?);
        }
    }
    Ok(RunRecord {
        seed: params.seed,
        params: params.clone(),
        z_gt: world.z_gt(),
        samples,
        switch_times: world.agents().iter().map(|a| a.switch_time).collect(),
        initial_positions,
        final_positions: world.positions(),
        final_estimates: world.estimates(),
    })
}
