use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{GoalRegion, Problem};
use crate::cp::mc_certify;
use crate::error::{PumpError, Result};
use crate::geom::{motion_collides, point_free, Workspace};
use crate::noise::derive_seed;
use crate::steer::{connect, Motion, State};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RrtParams {
    pub trials: usize,
    pub iterations: usize,
    pub goal_bias: f64,
    /// Extensions are truncated to this cost.
    pub radius: f64,
    pub tau_max: f64,
    pub resolution: f64,
    pub alpha: f64,
    pub mc_samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RrtAttempt {
    pub trial: usize,
    pub cost: f64,
    pub mc: f64,
}

#[derive(Debug, Clone)]
pub struct RrtOutcome {
    /// Trials that reached the goal.
    pub successes: usize,
    /// Certification attempts in ascending cost order.
    pub attempts: Vec<RrtAttempt>,
    pub best: Option<(RrtAttempt, Trajectory)>,
}

fn random_state(rng: &mut ChaCha8Rng, lo: &[f64], hi: &[f64], vmax: f64) -> State {
    let p = lo.iter().zip(hi).map(|(l, h)| if h > l { rng.random_range(*l..*h) } else { *l }).collect();
    let v = (0..lo.len()).map(|_| if vmax > 0.0 { rng.random_range(-vmax..vmax) } else { 0.0 }).collect();
    State::new(p, v)
}

fn distance2(a: &State, b: &State) -> f64 {
    a.position.iter().zip(&b.position).chain(a.velocity.iter().zip(&b.velocity)).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// One goal-biased kinodynamic RRT; returns the motions of the first branch
/// reaching the goal.
fn rrt_trial(problem: &Problem, params: &RrtParams, goal: &GoalRegion, w: &Workspace, seed: u64) -> Option<Vec<Motion>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = vec![problem.init.clone()];
    let mut parent: Vec<Option<(usize, Motion)>> = vec![None];
    if goal.contains(&problem.init) {
        return Some(Vec::new());
    }
    let goal_cap = goal.max_speed / (problem.dims() as f64).sqrt();
    for _ in 0..params.iterations {
        let target = if rng.random::<f64>() < params.goal_bias {
            random_state(&mut rng, &goal.lo, &goal.hi, goal_cap)
        } else {
            random_state(&mut rng, &w.bounds.lo, &w.bounds.hi, problem.max_speed)
        };
        let near = (0..nodes.len())
            .min_by(|&a, &b| distance2(&nodes[a], &target).total_cmp(&distance2(&nodes[b], &target)))
            .unwrap();
        let Some(mut m) = connect(&nodes[near], &target, &problem.weights, params.tau_max) else {
            continue;
        };
        if m.is_identity() {
            continue;
        }
        if m.cost > params.radius {
            let cut = m.state_at(m.tau * params.radius / m.cost);
            match connect(&nodes[near], &cut, &problem.weights, params.tau_max) {
                Some(r) if !r.is_identity() => m = r,
                _ => continue,
            }
        }
        if !point_free(w, &m.to.position) || motion_collides(w, &m, params.resolution) {
            continue;
        }
        let reached = goal.contains(&m.to);
        nodes.push(m.to.clone());
        parent.push(Some((near, m)));
        if reached {
            let mut path = Vec::new();
            let mut cur = nodes.len() - 1;
            while let Some((p, m)) = parent[cur].take() {
                path.push(m);
                cur = p;
            }
            path.reverse();
            return Some(path);
        }
    }
    None
}

/// Repeated kinodynamic RRT baseline: independent trials, then Monte Carlo
/// certification in ascending cost order until one passes.
pub fn repeated_rrt(problem: &Problem, params: &RrtParams, seed: u64, mc_seed: u64) -> Result<RrtOutcome> {
    if params.trials == 0 {
        return Err(PumpError::InvalidParameter { name: "trials", reason: "must be ≥ 1".into() });
    }
    let w = &problem.workspace;
    let dt = problem.model.dt;
    let mut found: Vec<(usize, Trajectory, f64)> = (0..params.trials)
        .into_par_iter()
        .filter_map(|trial| {
            let motions = rrt_trial(problem, params, &problem.goal, w, derive_seed(seed, trial as u64))?;
            let cost = motions.iter().map(|m| m.cost).sum();
            Some((trial, Trajectory::from_motions(&problem.init, &motions, dt), cost))
        })
        .collect();
    found.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)));
    let successes = found.len();
    let mut attempts = Vec::new();
    let mut best = None;
    for (trial, traj, cost) in found {
        let mc = mc_certify(&problem.model, &problem.gains, &problem.sigma0, w, &traj, params.mc_samples, mc_seed)?.value;
        let attempt = RrtAttempt { trial, cost, mc };
        attempts.push(attempt.clone());
        if mc <= params.alpha {
            best = Some((attempt, traj));
            break;
        }
    }
    Ok(RrtOutcome { successes, attempts, best })
}
