use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{CpEstimate, CpMethod};
use crate::error::{PumpError, Result};
use crate::geom::{point_free, segment_free, Workspace};
use crate::lti::{ClosedLoop, DiscreteModel, GainSchedule};
use crate::trajectory::Trajectory;

/// Whether rollout `particle` of the closed loop, tracking the nominal
/// positions `nominal[t]`, ever leaves free space: each realized position and
/// the straight segment from the previous one are checked.
pub fn mc_collides(
    closed_loop: &ClosedLoop,
    w: &Workspace,
    nominal: &[&[f64]],
    seed: u64,
    particle: u64,
) -> bool {
    if nominal.is_empty() {
        return false;
    }
    let dims = closed_loop.output_dim();
    let mut prev = vec![0.0; dims];
    let mut cur = vec![0.0; dims];
    let mut hit = false;
    closed_loop.rollout(seed, particle, nominal.len() - 1, |t, dy| {
        for k in 0..dims {
            cur[k] = nominal[t][k] + dy[k];
        }
        hit = if t == 0 { !point_free(w, &cur) } else { !segment_free(w, &prev, &cur) };
        std::mem::swap(&mut prev, &mut cur);
        !hit
    });
    hit
}

/// Monte Carlo collision probability of tracking `traj`, whose waypoint `t`
/// is the nominal at global step `t`.
pub fn mc_certify(
    dm: &DiscreteModel,
    gs: &GainSchedule,
    sigma0: &DMatrix<f64>,
    w: &Workspace,
    traj: &Trajectory,
    n_mc: usize,
    seed: u64,
) -> Result<CpEstimate> {
    if n_mc == 0 {
        return Err(PumpError::InvalidParameter { name: "mc_samples", reason: "must be ≥ 1".into() });
    }
    if traj.points.first().is_some_and(|p| p.state.dims() != dm.output_dim()) {
        return Err(PumpError::Dimension("trajectory dimension differs from model output".into()));
    }
    let mut gs = gs.clone();
    gs.sigma0 = sigma0.clone();
    let cl = ClosedLoop::new(dm, &gs);
    let nominal: Vec<&[f64]> = traj.positions().collect();
    let hits = (0..n_mc as u64)
        .into_par_iter()
        .filter(|&i| mc_collides(&cl, w, &nominal, seed, i))
        .count();
    Ok(CpEstimate { value: hits as f64 / n_mc as f64, method: CpMethod::MonteCarlo, samples: Some(n_mc) })
}
