//! Estimator sweep over discretizations of one nominal trajectory.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::Serialize;

use super::{
    additive_cp, conditional_multiplicative_cp, hsmc_estimate, mc_certify, multiplicative_cp, pointwise_series,
    CpMethod,
};
use crate::error::{PumpError, Result};
use crate::geom::{local_convex_region, ConvexRegion, Workspace};
use crate::noise::derive_seed;
use crate::lti::{discretize, lqg_synthesize, ClosedLoop, ContinuousModel, LqgWeights};
use crate::trajectory::Trajectory;

/// Everything needed to re-synthesize the controller at a new step size.
#[derive(Debug, Clone)]
pub struct CompareSetup {
    pub model: ContinuousModel,
    pub lqg: LqgWeights,
    pub sigma0: DMatrix<f64>,
    pub workspace: Workspace,
    pub particles: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub method: CpMethod,
    /// Number of steps the trajectory is split into.
    pub steps: usize,
    pub estimate: f64,
    pub mc_reference: f64,
    pub seconds: f64,
}

/// Velocity-projected local convex region at every waypoint.
pub fn trajectory_regions(w: &Workspace, traj: &Trajectory) -> Result<Vec<ConvexRegion>> {
    traj.points.iter().map(|p| local_convex_region(w, &p.state.position, &p.state.velocity)).collect()
}

/// Splits `traj` into each of `step_counts` equal steps, re-synthesizes the
/// controller at that step size and scores every estimator against Monte
/// Carlo at the same discretization.
pub fn compare_estimators(setup: &CompareSetup, traj: &Trajectory, step_counts: &[usize]) -> Result<Vec<CompareRow>> {
    if traj.len() < 2 || !(traj.duration() > 0.0) {
        return Err(PumpError::InvalidParameter { name: "trajectory", reason: "needs positive duration".into() });
    }
    let mut rows = Vec::new();
    for &k in step_counts {
        if k == 0 {
            return Err(PumpError::InvalidParameter { name: "steps", reason: "must be ≥ 1".into() });
        }
        let dm = discretize(&setup.model, traj.duration() / k as f64)?;
        let mut gs = lqg_synthesize(&dm, &setup.lqg, &setup.sigma0)?;
        gs.sigma0 = setup.sigma0.clone();
        let nominal = traj.resample_uniform(k);
        let regions = trajectory_regions(&setup.workspace, &nominal)?;

        let clock = Instant::now();
        let mc = mc_certify(&dm, &gs, &setup.sigma0, &setup.workspace, &nominal, setup.mc_samples, setup.seed)?.value;
        let mc_time = clock.elapsed().as_secs_f64();

        let mut push = |method, estimate, seconds| rows.push(CompareRow { method, steps: k, estimate, mc_reference: mc, seconds });

        let clock = Instant::now();
        let pw = pointwise_series(&dm, &gs, &setup.sigma0, &regions)?;
        let pw_time = clock.elapsed().as_secs_f64();
        push(CpMethod::Additive, additive_cp(&pw), pw_time);
        push(CpMethod::Multiplicative, multiplicative_cp(&pw), pw_time);

        let clock = Instant::now();
        let cm = conditional_multiplicative_cp(&dm, &gs, &setup.sigma0, &regions)?;
        push(CpMethod::ConditionalMultiplicative, cm, clock.elapsed().as_secs_f64());

        let clock = Instant::now();
        // Independent particles, so agreement with MC is not by construction.
        let h = hsmc_estimate(&ClosedLoop::new(&dm, &gs), &regions, setup.particles, derive_seed(setup.seed, 1))?.value;
        push(CpMethod::Hsmc, h, clock.elapsed().as_secs_f64());

        push(CpMethod::MonteCarlo, mc, mc_time);
    }
    Ok(rows)
}
