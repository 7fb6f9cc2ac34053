//! Chance-constrained kinodynamic motion planning.
//!
//! The planner builds a roadmap of cost-optimal double-integrator
//! connections, searches it for the Pareto front of (cost, approximate
//! collision probability) with a particle-based half-space estimator, and
//! certifies the chosen plan with full Monte Carlo collision checking.
//!
//! Modules follow the pipeline:
//!
//! - [`lti`]: discretization and steady-state LQG synthesis
//! - [`bank`]: pre-sampled closed-loop deviations
//! - [`steer`]: optimal two-point steering
//! - [`geom`]: box workspaces and local convex regions
//! - [`cp`]: collision-probability estimators
//! - [`plan`]: sampling, graph building, exploration, selection, smoothing

pub mod bank;
pub mod cp;
pub mod error;
pub mod geom;
pub mod lti;
pub mod noise;
pub mod plan;
pub mod report;
pub mod scenario;
pub mod steer;
pub mod trajectory;

pub use error::{PumpError, Result};
