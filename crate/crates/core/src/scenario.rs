//! JSON scenario files.
//!
//! Unknown keys are rejected everywhere. Matrices may be given as a scalar
//! (multiple of the identity), a list (diagonal) or a list of rows.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{PumpError, Result};
use crate::geom::Workspace;
use crate::lti::{discretize, lqg_synthesize, ContinuousModel, LqgWeights};
use crate::plan::{GoalRegion, PlannerParams, Problem, RrtParams, Seeds};
use crate::steer::{SteerCost, State};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Scalar(f64),
    Diagonal(Vec<f64>),
    Full(Vec<Vec<f64>>),
}

impl MatrixSpec {
    pub fn to_matrix(&self, n: usize, name: &str) -> Result<DMatrix<f64>> {
        match self {
            MatrixSpec::Scalar(x) => Ok(DMatrix::identity(n, n) * *x),
            MatrixSpec::Diagonal(d) if d.len() == n => Ok(DMatrix::from_diagonal(&DVector::from_column_slice(d))),
            MatrixSpec::Full(rows) if rows.len() == n && rows.iter().all(|r| r.len() == n) => {
                Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
            }
            _ => Err(PumpError::Scenario(format!("{name}: expected a scalar, {n} diagonal entries or {n}×{n} rows"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    pub position: Vec<f64>,
    #[serde(default)]
    pub velocity: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LqgSpec {
    #[serde(default = "unit")]
    pub q: MatrixSpec,
    #[serde(default = "unit")]
    pub r: MatrixSpec,
    #[serde(default = "zero")]
    pub f: MatrixSpec,
}

fn unit() -> MatrixSpec {
    MatrixSpec::Scalar(1.0)
}

fn zero() -> MatrixSpec {
    MatrixSpec::Scalar(0.0)
}

impl Default for LqgSpec {
    fn default() -> Self {
        Self { q: unit(), r: unit(), f: zero() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSpec {
    pub dt: f64,
    /// Continuous process-noise intensity over the full (position, velocity) state.
    pub process_noise: MatrixSpec,
    /// Continuous measurement-noise intensity over the workspace.
    pub measurement_noise: MatrixSpec,
    pub initial_covariance: MatrixSpec,
    #[serde(default)]
    pub lqg: LqgSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSpec {
    pub samples: usize,
    pub radius: f64,
    pub alpha: f64,
    pub eta: Option<f64>,
    pub lambda: Option<f64>,
    pub particles: Option<usize>,
    pub mc_samples: Option<usize>,
    pub horizon_steps: Option<usize>,
    pub collision_resolution: Option<f64>,
    pub tau_max: Option<f64>,
    pub max_plans: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RrtSpec {
    pub trials: Option<usize>,
    pub iterations: Option<usize>,
    pub goal_bias: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    pub workspace: Workspace,
    pub init: InitSpec,
    pub goal: GoalRegion,
    /// Per-axis speed bound for sampling.
    pub max_speed: f64,
    pub dynamics: DynamicsSpec,
    #[serde(default)]
    pub cost: SteerCost,
    pub planner: PlannerSpec,
    #[serde(default)]
    pub rrt: Option<RrtSpec>,
    #[serde(default)]
    pub seeds: Option<Seeds>,
}

/// A scenario with every default applied and the controller synthesized.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub problem: Problem,
    pub params: PlannerParams,
    pub rrt: RrtParams,
    pub seeds: Seeds,
    pub continuous: ContinuousModel,
    pub lqg: LqgWeights,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| PumpError::Scenario(e.to_string()))?;
        s.resolve()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            PumpError::Scenario(msg) => PumpError::Scenario(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let w = &self.workspace;
        w.validate()?;
        let dims = w.dims();
        let check = |len: usize, what: &str| -> Result<()> {
            if len != dims {
                return Err(PumpError::Scenario(format!("{what} has {len} entries, workspace has {dims} axes")));
            }
            Ok(())
        };
        check(self.init.position.len(), "init.position")?;
        let velocity = self.init.velocity.clone().unwrap_or_else(|| vec![0.0; dims]);
        check(velocity.len(), "init.velocity")?;
        check(self.goal.lo.len(), "goal.lo")?;
        check(self.goal.hi.len(), "goal.hi")?;
        if self.goal.lo.iter().zip(&self.goal.hi).any(|(l, h)| l > h) || self.goal.max_speed < 0.0 {
            return Err(PumpError::Scenario("goal box is inverted or speed cap negative".into()));
        }
        if !(self.max_speed > 0.0) {
            return Err(PumpError::Scenario("max_speed must be positive".into()));
        }
        if !(self.cost.time_weight > 0.0 && self.cost.control_weight > 0.0) {
            return Err(PumpError::Scenario("cost weights must be positive".into()));
        }

        let dy = &self.dynamics;
        if !(dy.dt > 0.0) {
            return Err(PumpError::Scenario("dynamics.dt must be positive".into()));
        }
        let d = 2 * dims;
        let v = dy.process_noise.to_matrix(d, "dynamics.process_noise")?;
        let wn = dy.measurement_noise.to_matrix(dims, "dynamics.measurement_noise")?;
        let sigma0 = dy.initial_covariance.to_matrix(d, "dynamics.initial_covariance")?;
        let weights = LqgWeights {
            q: dy.lqg.q.to_matrix(d, "dynamics.lqg.q")?,
            r: dy.lqg.r.to_matrix(dims, "dynamics.lqg.r")?,
            f: dy.lqg.f.to_matrix(d, "dynamics.lqg.f")?,
        };
        let continuous = ContinuousModel::double_integrator(dims, v, wn);
        let model = discretize(&continuous, dy.dt)?;
        let gains = lqg_synthesize(&model, &weights, &sigma0)?;

        let p = &self.planner;
        let diag = w.bounds.lo.iter().zip(&w.bounds.hi).map(|(l, h)| (h - l).powi(2)).sum::<f64>().sqrt();
        let params = PlannerParams {
            samples: p.samples,
            radius: p.radius,
            alpha: p.alpha,
            eta: p.eta.unwrap_or_else(|| PlannerParams::default_eta(p.alpha)),
            lambda: p.lambda.unwrap_or(0.5),
            particles: p.particles.unwrap_or(128),
            mc_samples: p.mc_samples.unwrap_or(1000),
            horizon_steps: p.horizon_steps.unwrap_or(1000),
            collision_resolution: p.collision_resolution.unwrap_or_else(|| w.default_resolution()),
            tau_max: p.tau_max.unwrap_or(10.0 * diag / self.max_speed),
            max_plans: p.max_plans,
        };
        params.validate()?;

        let r = self.rrt.clone().unwrap_or(RrtSpec { trials: None, iterations: None, goal_bias: None });
        let rrt = RrtParams {
            trials: r.trials.unwrap_or(1000),
            iterations: r.iterations.unwrap_or(2000),
            goal_bias: r.goal_bias.unwrap_or(0.05),
            radius: params.radius,
            tau_max: params.tau_max,
            resolution: params.collision_resolution,
            alpha: params.alpha,
            mc_samples: params.mc_samples,
        };
        if !(0.0..=1.0).contains(&rrt.goal_bias) || rrt.trials == 0 {
            return Err(PumpError::Scenario("rrt.goal_bias must lie in [0, 1] and trials ≥ 1".into()));
        }

        let problem = Problem {
            workspace: w.clone(),
            init: State::new(self.init.position.clone(), velocity),
            goal: self.goal.clone(),
            max_speed: self.max_speed,
            model,
            gains,
            sigma0,
            weights: self.cost,
        };
        Ok(Resolved {
            problem,
            params,
            rrt,
            seeds: self.seeds.unwrap_or_else(|| Seeds::from_master(0)),
            continuous,
            lqg: weights,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "workspace": {"bounds": {"lo": [0, 0], "hi": [10, 10]}, "obstacles": [{"lo": [4, 4], "hi": [6, 6]}]},
        "init": {"position": [1, 1]},
        "goal": {"lo": [8, 8], "hi": [9, 9], "max_speed": 0.5},
        "max_speed": 1.0,
        "dynamics": {"dt": 0.1, "process_noise": 0.001, "measurement_noise": 0.001, "initial_covariance": [1e-4, 1e-4, 0, 0]},
        "planner": {"samples": 100, "radius": 5.0, "alpha": 0.05}
    }"#;

    #[test]
    fn minimal_file_gets_defaults() {
        let r = Scenario::from_json(MINIMAL).unwrap().resolve().unwrap();
        assert_eq!(r.params.lambda, 0.5);
        assert_eq!(r.params.eta, 2.0);
        assert_eq!(r.params.particles, 128);
        assert_eq!(r.params.collision_resolution, 0.02);
        assert_eq!(r.problem.init.velocity, vec![0.0, 0.0]);
        assert_eq!(r.problem.sigma0[(0, 0)], 1e-4);
    }

    #[test]
    fn small_alpha_widens_eta() {
        let text = MINIMAL.replace("\"alpha\": 0.05", "\"alpha\": 0.001");
        let r = Scenario::from_json(&text).unwrap().resolve().unwrap();
        assert_eq!(r.params.eta, 10.0);
    }

    #[test]
    fn rejects_bad_alpha() {
        let text = MINIMAL.replace("\"alpha\": 0.05", "\"alpha\": 1.5");
        let err = Scenario::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("alpha"), "{err}");
    }

    #[test]
    fn unknown_key_is_named() {
        let text = MINIMAL.replace("\"max_speed\": 1.0,", "\"max_speed\": 1.0, \"gravity\": 9.8,");
        let err = Scenario::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("gravity"), "{err}");
        let nested = MINIMAL.replace("\"samples\": 100", "\"samples\": 100, \"sample\": 3");
        assert!(Scenario::from_json(&nested).unwrap_err().to_string().contains("sample"));
    }

    #[test]
    fn matrix_forms() {
        let m = MatrixSpec::Full(vec![vec![2.0, 1.0], vec![1.0, 2.0]]).to_matrix(2, "m").unwrap();
        assert_eq!(m[(0, 1)], 1.0);
        assert!(MatrixSpec::Diagonal(vec![1.0]).to_matrix(2, "m").is_err());
    }
}
