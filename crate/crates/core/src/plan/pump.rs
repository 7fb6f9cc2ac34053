use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use super::explore::{explore, ExploreParams, ExploreResult, PlanId};
use super::graph::{build_graph, GraphParams, SampleGraph};
use super::sampling::sample_free;
use super::select::{pareto_filter, plan_selection, selection_order, smooth, McEval, SmoothResult};
use super::{PlannerParams, Problem, Seeds};
use crate::bank::presample_bank;
use crate::cp::mc_certify;
use crate::error::{PumpError, Result};
use crate::geom::point_free;
use crate::trajectory::Trajectory;

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PhaseTimes {
    pub build_graph: f64,
    pub explore: f64,
    pub selection: f64,
}

impl PhaseTimes {
    pub fn total(&self) -> f64 {
        self.build_graph + self.explore + self.selection
    }
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub plan: PlanId,
    /// Position in the selection order.
    pub rank: usize,
    pub cp_hat: f64,
    pub plan_cost: f64,
    pub plan_mc: f64,
    pub smoothed: SmoothResult,
}

#[derive(Debug, Clone)]
pub struct PumpOutcome {
    pub graph: Arc<SampleGraph>,
    pub explore: ExploreResult,
    /// Non-dominated goal plans in selection order.
    pub front: Vec<PlanId>,
    pub evaluations: Vec<McEval>,
    pub selection: Option<Selection>,
    pub times: PhaseTimes,
}

impl PumpOutcome {
    pub fn trajectory(&self) -> Option<&Trajectory> {
        self.selection.as_ref().map(|s| &s.smoothed.trajectory)
    }

    /// Best pre-smoothing goal cost found by exploration.
    pub fn best_goal_cost(&self) -> Option<f64> {
        self.explore.goal_plans.iter().map(|&p| self.explore.plans[p].cost).min_by(f64::total_cmp)
    }
}

/// Samples the free space (the initial state is sample 0) and builds the
/// roadmap. The result depends only on the problem geometry and `params`,
/// not on seeds, so it can be shared between runs.
pub fn build_roadmap(problem: &Problem, params: &PlannerParams) -> Result<SampleGraph> {
    params.validate()?;
    if !point_free(&problem.workspace, &problem.init.position) {
        return Err(PumpError::WaypointInCollision(problem.init.position.clone()));
    }
    let mut states = vec![problem.init.clone()];
    states.extend(sample_free(params.samples, &problem.workspace, problem.max_speed, &problem.goal)?);
    Ok(build_graph(states, &problem.workspace, &problem.goal, graph_params(problem, params)))
}

fn graph_params(problem: &Problem, params: &PlannerParams) -> GraphParams {
    GraphParams {
        radius: params.radius,
        tau_max: params.tau_max,
        dt: problem.model.dt,
        resolution: params.collision_resolution,
        weights: problem.weights,
    }
}

/// Graph building, exploration with `α/η ≤ ĉp` bounds `≤ ηα`, bisection
/// selection with Monte Carlo certification, then smoothing.
///
/// An uncertified front is reported as `selection: None`, not as an error.
pub fn pump(problem: &Problem, params: &PlannerParams, seeds: &Seeds) -> Result<PumpOutcome> {
    let clock = Instant::now();
    let graph = Arc::new(build_roadmap(problem, params)?);
    let build = clock.elapsed().as_secs_f64();
    let mut out = pump_on_graph(problem, params, seeds, graph)?;
    out.times.build_graph += build;
    Ok(out)
}

/// [`pump`] on a roadmap from [`build_roadmap`] with the same problem and
/// graph-related parameters (`samples`, `radius`, `tau_max`,
/// `collision_resolution`); `times.build_graph` then covers only the
/// particle bank.
pub fn pump_on_graph(problem: &Problem, params: &PlannerParams, seeds: &Seeds, graph: Arc<SampleGraph>) -> Result<PumpOutcome> {
    params.validate()?;
    if graph.params != graph_params(problem, params) || graph.states.first() != Some(&problem.init) {
        return Err(PumpError::InvalidParameter {
            name: "graph",
            reason: "roadmap was built for different parameters".into(),
        });
    }
    let mut times = PhaseTimes::default();
    let clock = Instant::now();
    let bank = presample_bank(
        &problem.model,
        &problem.gains,
        &problem.sigma0,
        params.horizon_steps,
        params.particles,
        seeds.bank,
    )?;
    times.build_graph = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let explored = explore(
        &graph,
        &bank,
        &ExploreParams {
            alpha_min: params.alpha_min(),
            alpha_max: params.alpha_max(),
            lambda: params.lambda,
            max_plans: params.max_plans,
        },
    )?;
    drop(bank);
    times.explore = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let points: Vec<(f64, f64)> =
        explored.goal_plans.iter().map(|&p| (explored.plans[p].cost, explored.plans[p].cp_hat)).collect();
    let kept = pareto_filter(&points);
    let kept_points: Vec<(f64, f64)> = kept.iter().map(|&k| points[k]).collect();
    let front: Vec<PlanId> = selection_order(&kept_points).into_iter().map(|k| explored.goal_plans[kept[k]]).collect();

    let certify = |traj: &Trajectory| -> Result<f64> {
        Ok(mc_certify(
            &problem.model,
            &problem.gains,
            &problem.sigma0,
            &problem.workspace,
            traj,
            params.mc_samples,
            seeds.mc,
        )?
        .value)
    };
    let (chosen, log) = plan_selection(front.len(), params.alpha, |rank| {
        certify(&explored.trajectory(&graph, front[rank]))
    })?;
    let mut evaluations: Vec<McEval> = log
        .iter()
        .map(|&(rank, mc)| {
            let p = &explored.plans[front[rank]];
            McEval { stage: "selection", index: rank, s: None, cp_hat: Some(p.cp_hat), cost: p.cost, mc }
        })
        .collect();

    let selection = match chosen {
        None => None,
        Some(rank) => {
            let id = front[rank];
            let plan_mc = log.iter().find(|(r, _)| *r == rank).map(|(_, v)| *v).unwrap_or(0.0);
            let traj = explored.trajectory(&graph, id);
            let smoothed = smooth(&traj, &problem.weights, plan_mc, params.alpha, certify)?;
            for (step, &(s, mc)) in smoothed.evaluations.iter().enumerate() {
                let cost = super::select::blend(&traj, s, &problem.weights).cost(&problem.weights);
                evaluations.push(McEval { stage: "smoothing", index: step, s: Some(s), cp_hat: None, cost, mc });
            }
            Some(Selection {
                plan: id,
                rank,
                cp_hat: explored.plans[id].cp_hat,
                plan_cost: explored.plans[id].cost,
                plan_mc,
                smoothed,
            })
        }
    };
    times.selection = clock.elapsed().as_secs_f64();

    Ok(PumpOutcome { graph, explore: explored, front, evaluations, selection, times })
}
