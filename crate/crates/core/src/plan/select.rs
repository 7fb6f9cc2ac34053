use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::Result;
use crate::steer::{Motion, SteerCost};
use crate::trajectory::Trajectory;

/// One Monte Carlo evaluation made while selecting or smoothing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEval {
    pub stage: &'static str,
    /// Rank in the selection order, or bisection step while smoothing.
    pub index: usize,
    /// Blend factor (smoothing only).
    pub s: Option<f64>,
    pub cp_hat: Option<f64>,
    pub cost: f64,
    pub mc: f64,
}

/// Indices of the points `(cost, ĉp)` not dominated by another point:
/// `q` dominates `p` when `p.cost > q.cost` and `p.ĉp ≥ q.ĉp`.
pub fn pareto_filter(points: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].0.total_cmp(&points[b].0).then(a.cmp(&b)));
    let mut keep = Vec::new();
    let mut best = f64::INFINITY;
    let mut j = 0;
    while j < order.len() {
        let cost = points[order[j]].0;
        let mut k = j;
        let mut group_best = f64::INFINITY;
        while k < order.len() && points[order[k]].0 == cost {
            let cp = points[order[k]].1;
            if cp < best {
                keep.push(order[k]);
            }
            group_best = group_best.min(cp);
            k += 1;
        }
        best = best.min(group_best);
        j = k;
    }
    keep.sort_unstable();
    keep
}

/// Order of points `(cost, ĉp)` by ascending ĉp, then cost, then index.
pub fn selection_order(points: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a].1.total_cmp(&points[b].1).then(points[a].0.total_cmp(&points[b].0)).then(a.cmp(&b))
    });
    order
}

/// Bisection over `n` candidates (already in selection order) for the last
/// one whose Monte Carlo CP is at most `alpha`, assuming MC grows along the
/// order. Returns the selected rank, if any, and every `(rank, mc)` computed.
pub fn plan_selection<F>(n: usize, alpha: f64, mut mc: F) -> Result<(Option<usize>, Vec<(usize, f64)>)>
where
    F: FnMut(usize) -> Result<f64>,
{
    if n == 0 {
        return Ok((None, Vec::new()));
    }
    let mut memo: BTreeMap<usize, f64> = BTreeMap::new();
    let mut log = Vec::new();
    let mut eval = |rank: usize, log: &mut Vec<(usize, f64)>| -> Result<f64> {
        if let Some(&v) = memo.get(&rank) {
            return Ok(v);
        }
        let v = mc(rank)?;
        memo.insert(rank, v);
        log.push((rank, v));
        Ok(v)
    };
    // One-based bounds as in the textbook statement.
    let (mut l, mut u) = (1usize, n);
    let mut m = (l + u).div_ceil(2);
    while l != u {
        if eval(m - 1, &mut log)? > alpha {
            u = m - 1;
        } else {
            l = m;
        }
        m = (l + u).div_ceil(2);
    }
    let selected = (eval(m - 1, &mut log)? <= alpha).then_some(m - 1);
    Ok((selected, log))
}

#[derive(Debug, Clone)]
pub struct SmoothResult {
    pub s: f64,
    pub trajectory: Trajectory,
    pub cost: f64,
    pub mc: f64,
    /// `(s, mc)` for every blend tried.
    pub evaluations: Vec<(f64, f64)>,
}

/// `(1 − s)·plan + s·opt`, where `opt` is the minimum-effort connection
/// between the plan's endpoints over the plan's duration.
pub fn blend(traj: &Trajectory, s: f64, weights: &SteerCost) -> Trajectory {
    if s == 0.0 || traj.len() < 2 {
        return traj.clone();
    }
    let t0 = traj.points[0].t;
    let opt = Motion::with_duration(traj.start(), traj.end(), traj.duration(), weights);
    let mut out = traj.clone();
    for wp in &mut out.points {
        let t = wp.t - t0;
        wp.state = wp.state.lerp(&opt.state_at(t), s);
        for (u, uo) in wp.control.iter_mut().zip(opt.control_at(t)) {
            *u = (1.0 - s) * *u + s * uo;
        }
    }
    out
}

/// Largest blend toward the unconstrained optimum that still certifies.
///
/// Tries `s = 1` first, then bisects `[0, 1]` for ten steps keeping the
/// largest certified `s`; `mc_plan` is the certified CP of the input.
pub fn smooth<F>(traj: &Trajectory, weights: &SteerCost, mc_plan: f64, alpha: f64, mut mc: F) -> Result<SmoothResult>
where
    F: FnMut(&Trajectory) -> Result<f64>,
{
    let mut evaluations = Vec::new();
    let (mut lo, mut lo_mc) = (0.0, mc_plan);
    if traj.len() >= 2 {
        let full = blend(traj, 1.0, weights);
        let v = mc(&full)?;
        evaluations.push((1.0, v));
        if v <= alpha {
            lo = 1.0;
            lo_mc = v;
        } else {
            let mut hi = 1.0;
            for _ in 0..10 {
                let mid = 0.5 * (lo + hi);
                let v = mc(&blend(traj, mid, weights))?;
                evaluations.push((mid, v));
                if v <= alpha {
                    lo = mid;
                    lo_mc = v;
                } else {
                    hi = mid;
                }
            }
        }
    }
    let trajectory = blend(traj, lo, weights);
    let cost = trajectory.cost(weights);
    Ok(SmoothResult { s: lo, trajectory, cost, mc: lo_mc, evaluations })
}
