//! The planning pipeline: sample, build the roadmap, explore the
//! (cost, ĉp) Pareto front, then select, certify and smooth.

mod explore;
mod graph;
mod pump;
mod rrt;
mod sampling;
mod select;

pub use explore::{
    explore, explore_with, ExploreParams, ExploreResult, ExploreStats, Plan, PlanId, RoundView,
    Termination,
};
pub use graph::{build_graph, edge_candidates, Edge, GraphParams, SampleGraph};
pub use pump::{build_roadmap, pump, pump_on_graph, PhaseTimes, PumpOutcome, Selection};
pub use rrt::{repeated_rrt, RrtAttempt, RrtOutcome, RrtParams};
pub use sampling::{halton, sample_free};
pub use select::{blend, pareto_filter, plan_selection, selection_order, smooth, McEval, SmoothResult};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{PumpError, Result};
use crate::geom::Workspace;
use crate::lti::{DiscreteModel, GainSchedule};
use crate::steer::{SteerCost, State};

/// Goal set: a position box plus a cap on speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub max_speed: f64,
}

impl GoalRegion {
    pub fn contains(&self, x: &State) -> bool {
        let speed = x.velocity.iter().map(|v| v * v).sum::<f64>().sqrt();
        speed <= self.max_speed
            && x.position.iter().zip(self.lo.iter().zip(&self.hi)).all(|(p, (l, h))| l <= p && p <= h)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }
}

/// Everything that defines a planning query apart from tuning knobs.
#[derive(Debug, Clone)]
pub struct Problem {
    pub workspace: Workspace,
    pub init: State,
    pub goal: GoalRegion,
    /// Per-axis velocity bound used for sampling.
    pub max_speed: f64,
    pub model: DiscreteModel,
    pub gains: GainSchedule,
    pub sigma0: DMatrix<f64>,
    pub weights: SteerCost,
}

impl Problem {
    pub fn dims(&self) -> usize {
        self.init.dims()
    }
}

/// Tuning parameters of a planner run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerParams {
    /// Number of free samples `n` (besides the initial state).
    pub samples: usize,
    /// Connection radius `r_n` in cost units.
    pub radius: f64,
    pub alpha: f64,
    pub eta: f64,
    pub lambda: f64,
    /// HSMC particle count `N`.
    pub particles: usize,
    pub mc_samples: usize,
    /// Longest plan, in timesteps, the deviation bank covers.
    pub horizon_steps: usize,
    pub collision_resolution: f64,
    pub tau_max: f64,
    pub max_plans: Option<usize>,
}

impl PlannerParams {
    pub fn alpha_min(&self) -> f64 {
        self.alpha / self.eta
    }

    pub fn alpha_max(&self) -> f64 {
        self.alpha * self.eta
    }

    /// Exploration inflation factor used when none is given.
    pub fn default_eta(alpha: f64) -> f64 {
        if alpha < 0.01 {
            10.0
        } else {
            2.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: &str| {
            Err(PumpError::InvalidParameter { name, reason: reason.into() })
        };
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha", "must lie in (0, 1)");
        }
        if self.eta.is_nan() || self.eta <= 1.0 {
            return bad("eta", "must exceed 1");
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return bad("lambda", "must lie in (0, 1]");
        }
        if self.radius.is_nan() || self.radius <= 0.0 {
            return bad("radius", "must be positive");
        }
        if self.samples == 0 {
            return bad("samples", "must be ≥ 1");
        }
        if self.particles == 0 {
            return bad("particles", "must be ≥ 1");
        }
        if self.mc_samples == 0 {
            return bad("mc_samples", "must be ≥ 1");
        }
        if self.horizon_steps == 0 {
            return bad("horizon_steps", "must be ≥ 1");
        }
        if self.collision_resolution.is_nan() || self.collision_resolution <= 0.0 {
            return bad("collision_resolution", "must be positive");
        }
        if self.tau_max.is_nan() || self.tau_max <= 0.0 {
            return bad("tau_max", "must be positive");
        }
        Ok(())
    }
}

/// Independent seeds of the randomized stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub bank: u64,
    pub mc: u64,
    pub rrt: u64,
}

impl Seeds {
    /// Stage seeds derived from one master seed.
    pub fn from_master(seed: u64) -> Self {
        use crate::noise::derive_seed;
        Self { bank: derive_seed(seed, 1), mc: derive_seed(seed, 2), rrt: derive_seed(seed, 3) }
    }
}

/// Radius suggestion `γ (log n / n)^(1/D)` scaled to the cost units of a
/// `dims`-axis double integrator (`D = 2·dims`, cost scales as time).
pub fn suggested_radius(n: usize, dims: usize, gamma: f64) -> f64 {
    let n = n.max(2) as f64;
    gamma * ((n.ln()) / n).powf(1.0 / (2.0 * dims as f64))
}
