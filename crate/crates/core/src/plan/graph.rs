use rayon::prelude::*;
use serde::Serialize;

use super::GoalRegion;
use crate::cp::PackedRegions;
use crate::geom::{local_convex_region, motion_collides, HalfSpace, Workspace};
use crate::steer::{self, connect_within, Motion, SteerCost, State};

/// A collision-free roadmap edge with the half-spaces of its waypoints.
#[derive(Debug, Clone)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub motion: Motion,
    /// Regions of waypoints `1..=k` (the start waypoint belongs to the
    /// previous edge).
    pub regions: PackedRegions,
}

impl Edge {
    /// Timesteps this edge adds to a plan.
    pub fn steps(&self) -> usize {
        self.regions.len()
    }

    pub fn cost(&self) -> f64 {
        self.motion.cost
    }
}

/// Geometry and connection settings for [`build_graph`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GraphParams {
    pub radius: f64,
    pub tau_max: f64,
    pub dt: f64,
    pub resolution: f64,
    pub weights: SteerCost,
}

/// Directed roadmap over sampled states; state 0 is the initial state.
#[derive(Debug, Clone)]
pub struct SampleGraph {
    pub states: Vec<State>,
    pub in_goal: Vec<bool>,
    pub params: GraphParams,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
}

impl SampleGraph {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edge ids leaving `u`, sorted by target.
    pub fn out_edges(&self, u: usize) -> std::ops::Range<usize> {
        self.offsets[u]..self.offsets[u + 1]
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn min_edge_cost(&self) -> Option<f64> {
        self.edges.iter().map(Edge::cost).min_by(f64::total_cmp)
    }
}

/// Pairs `(u, v)` that can possibly satisfy `cost(u → v) < radius`, from
/// necessary conditions on velocity change and displacement.
///
/// With duration `τ`, `w_t τ + w_u |Δv|²/τ ≥ 2√(w_t w_u)|Δv|`, and reaching
/// displacement `D` beyond coasting needs effort `≥ 3D²/τ³`, which bounds
/// `|p_v − p_u| ≤ |v_u| r/w_t + 3r²/(16 √(w_t³ w_u))`.
pub fn edge_candidates(states: &[State], weights: &SteerCost, radius: f64) -> Vec<Vec<usize>> {
    let (wt, wu) = (weights.time_weight, weights.control_weight);
    let slack = 1.0 + 1e-9;
    let reach = 3.0 * radius * radius / (16.0 * (wt.powi(3) * wu).sqrt()) * slack;
    let dv_max = radius / (2.0 * (wt * wu).sqrt()) * slack;
    let mut order: Vec<usize> = (0..states.len()).collect();
    order.sort_by(|&i, &j| states[i].position[0].total_cmp(&states[j].position[0]).then(i.cmp(&j)));
    let xs: Vec<f64> = order.iter().map(|&i| states[i].position[0]).collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (0..states.len())
        .into_par_iter()
        .map(|u| {
            let a = &states[u];
            let bound = norm(&a.velocity) * radius / wt * slack + reach;
            let x = a.position[0];
            let lo = xs.partition_point(|&v| v < x - bound);
            let hi = xs.partition_point(|&v| v <= x + bound);
            let mut out: Vec<usize> = order[lo..hi]
                .iter()
                .copied()
                .filter(|&v| v != u)
                .filter(|&v| {
                    let b = &states[v];
                    let dv: Vec<f64> = b.velocity.iter().zip(&a.velocity).map(|(p, q)| p - q).collect();
                    let dp: Vec<f64> = b.position.iter().zip(&a.position).map(|(p, q)| p - q).collect();
                    norm(&dv) < dv_max && norm(&dp) <= bound
                })
                .collect();
            out.sort_unstable();
            out
        })
        .collect()
}

fn region_at(w: &Workspace, x: &State) -> Option<Vec<HalfSpace>> {
    local_convex_region(w, &x.position, &x.velocity).ok().map(|r| r.halfspaces)
}

/// Connects every ordered pair of states whose optimal motion costs less
/// than the radius and whose nominal path is collision-free, and attaches
/// velocity-projected half-spaces to every edge waypoint.
///
/// The output does not depend on the thread schedule.
pub fn build_graph(states: Vec<State>, w: &Workspace, goal: &GoalRegion, params: GraphParams) -> SampleGraph {
    let dims = w.dims();
    let candidates = edge_candidates(&states, &params.weights, params.radius);
    let endpoint_regions: Vec<Option<Vec<HalfSpace>>> = states.par_iter().map(|x| region_at(w, x)).collect();
    let per_source: Vec<Vec<Edge>> = (0..states.len())
        .into_par_iter()
        .map(|u| {
            candidates[u]
                .iter()
                .filter_map(|&v| {
                    let m = connect_within(&states[u], &states[v], &params.weights, params.tau_max, params.radius)?;
                    if m.is_identity() {
                        return None;
                    }
                    if motion_collides(w, &m, params.resolution) {
                        return None;
                    }
                    let end = endpoint_regions[v].as_ref()?;
                    let wps = steer::waypoints(&m, params.dt);
                    let mut regions = PackedRegions::new(dims);
                    for wp in &wps[1..wps.len() - 1] {
                        regions.push(&region_at(w, &wp.state)?);
                    }
                    regions.push(end);
                    Some(Edge { from: u, to: v, motion: m, regions })
                })
                .collect()
        })
        .collect();
    let mut offsets = Vec::with_capacity(states.len() + 1);
    offsets.push(0);
    let mut edges = Vec::new();
    for list in per_source {
        edges.extend(list);
        offsets.push(edges.len());
    }
    let in_goal = states.iter().map(|x| goal.contains(x)).collect();
    SampleGraph { states, in_goal, params, edges, offsets }
}
