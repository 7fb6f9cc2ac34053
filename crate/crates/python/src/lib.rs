//! Python bindings: load a scenario, plan, run the RRT baseline, certify
//! trajectories and query the steering function. Reports cross the boundary
//! as JSON text in the same schema the CLI writes.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use pump_core::cp::{mc_certify, normal_tail as tail};
use pump_core::plan::{pump, repeated_rrt, PlannerParams, Seeds};
use pump_core::report::{read_trajectory, PlanReport, RrtReport};
use pump_core::scenario::{Resolved, Scenario as CoreScenario};
use pump_core::steer::{connect, optimal_duration as duration, SteerCost, State};
use pump_core::trajectory::Trajectory as CoreTrajectory;
use pump_core::PumpError;

fn to_py(e: PumpError) -> PyErr {
    match e {
        PumpError::InvalidParameter { .. } | PumpError::Dimension(_) | PumpError::Scenario(_) | PumpError::Json(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Nominal trajectory: waypoints `(t, position, velocity, control)`.
#[pyclass(module = "pump_py", frozen, from_py_object)]
#[derive(Clone)]
pub struct Trajectory {
    inner: CoreTrajectory,
}

#[pymethods]
impl Trajectory {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        read_trajectory(text).map(|inner| Self { inner }).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        json(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn duration(&self) -> f64 {
        self.inner.duration()
    }

    fn cost(&self, time_weight: f64, control_weight: f64) -> f64 {
        self.inner.cost(&SteerCost { time_weight, control_weight })
    }

    fn waypoints(&self) -> Vec<(f64, Vec<f64>, Vec<f64>, Vec<f64>)> {
        self.inner
            .points
            .iter()
            .map(|p| (p.t, p.state.position.clone(), p.state.velocity.clone(), p.control.clone()))
            .collect()
    }
}

/// Outcome of a PUMP run.
#[pyclass(module = "pump_py", frozen)]
pub struct PlanResult {
    report: PlanReport,
    #[pyo3(get)]
    seconds: f64,
}

#[pymethods]
impl PlanResult {
    #[getter]
    fn success(&self) -> bool {
        self.report.success
    }

    #[getter]
    fn cost(&self) -> Option<f64> {
        self.report.cost
    }

    #[getter]
    fn certified_cp(&self) -> Option<f64> {
        self.report.certified_cp
    }

    #[getter]
    fn partial_plans(&self) -> usize {
        self.report.partial_plans
    }

    #[getter]
    fn front(&self) -> Vec<(f64, f64)> {
        self.report.pareto_front.iter().map(|f| (f.cost, f.cp_hat)).collect()
    }

    fn trajectory(&self) -> Option<Trajectory> {
        self.report.trajectory.clone().map(|inner| Trajectory { inner })
    }

    fn report_json(&self) -> PyResult<String> {
        json(&self.report)
    }
}

/// A resolved scenario file.
#[pyclass(module = "pump_py", frozen)]
pub struct Scenario {
    spec: CoreScenario,
    resolved: Resolved,
}

impl Scenario {
    fn wrap(spec: CoreScenario) -> PyResult<Self> {
        let resolved = spec.resolve().map_err(to_py)?;
        Ok(Self { spec, resolved })
    }

    fn seeds(&self, seed: Option<u64>) -> Seeds {
        seed.map_or(self.resolved.seeds, Seeds::from_master)
    }
}

#[pymethods]
impl Scenario {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Self::wrap(CoreScenario::load(&path).map_err(to_py)?)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Self::wrap(CoreScenario::from_json(text).map_err(to_py)?)
    }

    #[getter]
    fn name(&self) -> Option<String> {
        self.spec.name.clone()
    }

    #[getter]
    fn dims(&self) -> usize {
        self.resolved.problem.dims()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.resolved.params.alpha
    }

    /// Runs PUMP. `seed` replaces the scenario's seeds with ones derived
    /// from it; `alpha` also resets η to its default for that bound.
    #[pyo3(signature = (seed=None, alpha=None, particles=None))]
    fn plan(&self, py: Python<'_>, seed: Option<u64>, alpha: Option<f64>, particles: Option<usize>) -> PyResult<PlanResult> {
        let mut params: PlannerParams = self.resolved.params.clone();
        if let Some(a) = alpha {
            params.alpha = a;
            params.eta = self.spec.planner.eta.unwrap_or_else(|| PlannerParams::default_eta(a));
        }
        if let Some(n) = particles {
            params.particles = n;
        }
        let seeds = self.seeds(seed);
        let problem = &self.resolved.problem;
        let out = py.detach(|| pump(problem, &params, &seeds)).map_err(to_py)?;
        Ok(PlanResult {
            report: PlanReport::new(self.spec.name.clone(), &params, seeds, &out),
            seconds: out.times.total(),
        })
    }

    /// Repeated-RRT baseline; returns the report as JSON text.
    #[pyo3(signature = (seed=None, trials=None, alpha=None))]
    fn rrt(&self, py: Python<'_>, seed: Option<u64>, trials: Option<usize>, alpha: Option<f64>) -> PyResult<String> {
        let mut params = self.resolved.rrt;
        if let Some(t) = trials {
            params.trials = t;
        }
        if let Some(a) = alpha {
            params.alpha = a;
        }
        let seeds = self.seeds(seed);
        let problem = &self.resolved.problem;
        let out = py.detach(|| repeated_rrt(problem, &params, seeds.rrt, seeds.mc)).map_err(to_py)?;
        json(&RrtReport::new(self.spec.name.clone(), &params, seeds.rrt, seeds.mc, &out))
    }

    /// Monte Carlo collision probability of tracking `trajectory`.
    #[pyo3(signature = (trajectory, mc_samples=None, seed=None))]
    fn certify(&self, py: Python<'_>, trajectory: &Trajectory, mc_samples: Option<usize>, seed: Option<u64>) -> PyResult<f64> {
        let p = &self.resolved.problem;
        let n = mc_samples.unwrap_or(self.resolved.params.mc_samples);
        let seed = self.seeds(seed).mc;
        let traj = &trajectory.inner;
        py.detach(|| mc_certify(&p.model, &p.gains, &p.sigma0, &p.workspace, traj, n, seed))
            .map(|e| e.value)
            .map_err(to_py)
    }
}

/// Cost-optimal duration of the double-integrator connection between two
/// states, or `None` when they coincide.
#[pyfunction]
#[pyo3(signature = (a_position, a_velocity, b_position, b_velocity, time_weight=1.0, control_weight=1.0))]
fn optimal_duration(
    a_position: Vec<f64>,
    a_velocity: Vec<f64>,
    b_position: Vec<f64>,
    b_velocity: Vec<f64>,
    time_weight: f64,
    control_weight: f64,
) -> PyResult<Option<(f64, f64)>> {
    let n = a_position.len();
    if [a_velocity.len(), b_position.len(), b_velocity.len()].iter().any(|&k| k != n) {
        return Err(PyValueError::new_err("all state vectors must have the same length"));
    }
    let a = State::new(a_position, a_velocity);
    let b = State::new(b_position, b_velocity);
    let w = SteerCost { time_weight, control_weight };
    Ok(duration(&a, &b, &w).map(|t| {
        let cost = connect(&a, &b, &w, f64::INFINITY).map_or(w.eval(&a, &b, t), |m| m.cost);
        (t, cost)
    }))
}

/// Upper tail `P(Z > x)` of the standard normal.
#[pyfunction]
fn normal_tail(x: f64) -> f64 {
    tail(x)
}

#[pymodule]
pub fn pump_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<PlanResult>()?;
    m.add_class::<Trajectory>()?;
    m.add_function(wrap_pyfunction!(optimal_duration, m)?)?;
    m.add_function(wrap_pyfunction!(normal_tail, m)?)?;
    Ok(())
}
