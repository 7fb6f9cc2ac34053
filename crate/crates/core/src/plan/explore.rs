use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use super::graph::SampleGraph;
use crate::bank::DeviationBank;
use crate::cp::{hsmc_extend_packed, ParticleMask};
use crate::error::{PumpError, Result};
use crate::trajectory::Trajectory;

pub type PlanId = usize;

/// A partial plan. The path is stored as a parent link, so plans share
/// their common prefixes.
#[derive(Debug, Clone)]
pub struct Plan {
    pub head: usize,
    pub parent: Option<PlanId>,
    /// Roadmap edge from the parent's head to `head`.
    pub edge: Option<usize>,
    pub cost: f64,
    pub cp_hat: f64,
    /// Global timestep of the head waypoint.
    pub t_end: usize,
    pub mask: ParticleMask,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExploreParams {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub lambda: f64,
    /// Stop once this many plans have been retained.
    pub max_plans: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// A goal plan with `ĉp < α_min` entered the expansion group.
    GoalReached,
    /// No open plans remain.
    OpenExhausted,
    /// The retained-plan cap was hit.
    PlanLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExploreStats {
    pub rounds: usize,
    pub expanded: usize,
    /// Extensions evaluated (each one an HSMC update of a partial plan).
    pub partial_plans: usize,
    /// Extensions that passed the CP cutoff.
    pub retained_plans: usize,
    pub dominated: usize,
    pub cp_cutoff: usize,
    pub horizon_overflows: usize,
    pub termination: Termination,
}

#[derive(Debug, Clone)]
pub struct ExploreResult {
    pub plans: Vec<Plan>,
    /// Surviving plans whose head lies in the goal region, by id.
    pub goal_plans: Vec<PlanId>,
    pub stats: ExploreStats,
}

impl ExploreResult {
    /// Roadmap edges of a plan, from the initial state onward.
    pub fn path_edges(&self, id: PlanId) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = Some(id);
        while let Some(p) = cur {
            if let Some(e) = self.plans[p].edge {
                out.push(e);
            }
            cur = self.plans[p].parent;
        }
        out.reverse();
        out
    }

    /// Sample indices visited by a plan, starting at the initial state.
    pub fn path_nodes(&self, graph: &SampleGraph, id: PlanId) -> Vec<usize> {
        let mut nodes = vec![0];
        nodes.extend(self.path_edges(id).into_iter().map(|e| graph.edge(e).to));
        nodes
    }

    pub fn trajectory(&self, graph: &SampleGraph, id: PlanId) -> Trajectory {
        let edges = self.path_edges(id);
        Trajectory::from_motions(&graph.states[0], edges.iter().map(|&e| &graph.edge(e).motion), graph.params.dt)
    }
}

/// Snapshot handed to the observer after each round.
pub struct RoundView<'a> {
    pub round: usize,
    /// Cost threshold `i λ r_n` of the group just expanded.
    pub threshold: f64,
    pub expanded: &'a [PlanId],
    pub plans: &'a [Plan],
    /// Pareto set `P(v)` of every sample.
    pub frontier: &'a [Vec<PlanId>],
    pub is_open: &'a dyn Fn(PlanId) -> bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Open,
    Closed,
    Removed,
}

struct Candidate {
    head: usize,
    edge: usize,
    cost: f64,
    outcome: Outcome,
}

enum Outcome {
    Kept { mask: ParticleMask, cp: f64, t_end: usize },
    CutOff,
    Overflow,
}

/// Plans at one head that another plan there dominates: strictly higher
/// cost and ĉp no lower.
fn dominated(plans: &[Plan], ids: &[PlanId]) -> Vec<PlanId> {
    let mut sorted = ids.to_vec();
    sorted.sort_by(|&a, &b| {
        plans[a].cost.total_cmp(&plans[b].cost).then(plans[a].cp_hat.total_cmp(&plans[b].cp_hat)).then(a.cmp(&b))
    });
    let mut out = Vec::new();
    let mut best = f64::INFINITY;
    let mut j = 0;
    while j < sorted.len() {
        let cost = plans[sorted[j]].cost;
        let mut k = j;
        while k < sorted.len() && plans[sorted[k]].cost == cost {
            k += 1;
        }
        for &id in &sorted[j..k] {
            if best <= plans[id].cp_hat {
                out.push(id);
            }
        }
        best = best.min(plans[sorted[j]].cp_hat);
        j = k;
    }
    out
}

pub fn explore(graph: &SampleGraph, bank: &DeviationBank, params: &ExploreParams) -> Result<ExploreResult> {
    explore_with(graph, bank, params, |_| {})
}

/// Cost-bucketed multiobjective search from the initial state (sample 0).
///
/// Round `i` expands every open plan of cost `≤ i λ r_n` along every
/// roadmap edge, scoring extensions incrementally with the deviation bank.
/// Extensions with `ĉp ≥ α_max` are dropped, then each touched `P(v)` is
/// reduced to its non-dominated plans. Rounds with nothing to expand are
/// skipped. Extensions are merged in (source plan, edge) order, so the result
/// is independent of the thread schedule.
pub fn explore_with<F>(
    graph: &SampleGraph,
    bank: &DeviationBank,
    params: &ExploreParams,
    mut observe: F,
) -> Result<ExploreResult>
where
    F: FnMut(&RoundView),
{
    if !(params.lambda > 0.0 && params.lambda <= 1.0) {
        return Err(PumpError::InvalidParameter { name: "lambda", reason: "must lie in (0, 1]".into() });
    }
    if params.alpha_min > params.alpha_max {
        return Err(PumpError::InvalidParameter { name: "alpha_min", reason: "exceeds alpha_max".into() });
    }
    if graph.is_empty() {
        return Err(PumpError::Dimension("empty roadmap".into()));
    }
    let step = params.lambda * graph.params.radius;
    let bucket_of = |cost: f64| (cost / step).ceil() as u64;
    let horizon = bank.horizon();

    let mut plans = vec![Plan {
        head: 0,
        parent: None,
        edge: None,
        cost: 0.0,
        cp_hat: 0.0,
        t_end: 0,
        mask: ParticleMask::full(bank.n_particles()),
    }];
    let mut status = vec![Status::Open];
    let mut frontier: Vec<Vec<PlanId>> = vec![Vec::new(); graph.len()];
    frontier[0].push(0);
    let mut buckets: BTreeMap<u64, Vec<PlanId>> = BTreeMap::new();
    let mut open = 1usize;
    let mut group: Vec<PlanId> = vec![0];
    let mut i = 0u64;
    let mut stats = ExploreStats {
        rounds: 0,
        expanded: 0,
        partial_plans: 0,
        retained_plans: 0,
        dominated: 0,
        cp_cutoff: 0,
        horizon_overflows: 0,
        termination: Termination::OpenExhausted,
    };

    loop {
        if open == 0 {
            stats.termination = Termination::OpenExhausted;
            break;
        }
        if group.iter().any(|&p| graph.in_goal[plans[p].head] && plans[p].cp_hat < params.alpha_min) {
            stats.termination = Termination::GoalReached;
            break;
        }
        if params.max_plans.is_some_and(|m| plans.len() >= m) {
            stats.termination = Termination::PlanLimit;
            break;
        }

        let batches: Vec<Vec<Candidate>> = group
            .par_iter()
            .map(|&pid| {
                let p = &plans[pid];
                graph
                    .out_edges(p.head)
                    .map(|eid| {
                        let e = graph.edge(eid);
                        let cost = p.cost + e.cost();
                        let t_end = p.t_end + e.steps();
                        let outcome = if t_end > horizon {
                            Outcome::Overflow
                        } else {
                            let (mask, cp) = hsmc_extend_packed(&p.mask, bank, p.t_end + 1, &e.regions)
                                .expect("steps checked against the horizon");
                            if cp < params.alpha_max {
                                Outcome::Kept { mask, cp, t_end }
                            } else {
                                Outcome::CutOff
                            }
                        };
                        Candidate { head: e.to, edge: eid, cost, outcome }
                    })
                    .collect()
            })
            .collect();

        let mut touched = BTreeSet::new();
        for (&parent, batch) in group.iter().zip(batches) {
            for c in batch {
                stats.partial_plans += 1;
                match c.outcome {
                    Outcome::Overflow => stats.horizon_overflows += 1,
                    Outcome::CutOff => stats.cp_cutoff += 1,
                    Outcome::Kept { mask, cp, t_end } => {
                        let id = plans.len();
                        plans.push(Plan {
                            head: c.head,
                            parent: Some(parent),
                            edge: Some(c.edge),
                            cost: c.cost,
                            cp_hat: cp,
                            t_end,
                            mask,
                        });
                        status.push(Status::Open);
                        open += 1;
                        stats.retained_plans += 1;
                        frontier[c.head].push(id);
                        buckets.entry(bucket_of(c.cost)).or_default().push(id);
                        touched.insert(c.head);
                    }
                }
            }
        }

        for head in touched {
            let losers = dominated(&plans, &frontier[head]);
            if losers.is_empty() {
                continue;
            }
            stats.dominated += losers.len();
            for &id in &losers {
                if status[id] == Status::Open {
                    open -= 1;
                }
                status[id] = Status::Removed;
            }
            frontier[head].retain(|id| status[*id] != Status::Removed);
        }

        for &p in &group {
            if status[p] == Status::Open {
                status[p] = Status::Closed;
                open -= 1;
            }
        }
        stats.expanded += group.len();
        stats.rounds += 1;
        {
            let is_open = |id: PlanId| status[id] == Status::Open;
            observe(&RoundView {
                round: stats.rounds,
                threshold: i as f64 * step,
                expanded: &group,
                plans: &plans,
                frontier: &frontier,
                is_open: &is_open,
            });
        }

        i += 1;
        group.clear();
        if open == 0 {
            continue;
        }
        // Jump over rounds that would expand nothing.
        while let Some((&key, _)) = buckets.first_key_value() {
            if key > i {
                if !group.is_empty() {
                    break;
                }
                i = key;
            }
            let (_, ids) = buckets.pop_first().unwrap();
            group.extend(ids.into_iter().filter(|&id| status[id] == Status::Open));
        }
        group.sort_unstable();
    }

    let goal_plans = (0..graph.len())
        .filter(|&v| graph.in_goal[v])
        .flat_map(|v| frontier[v].iter().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    Ok(ExploreResult { plans, goal_plans, stats })
}
