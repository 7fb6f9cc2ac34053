//! Pre-sampled closed-loop deviation trajectories shared by all plans.

use std::ops::Range;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{PumpError, Result};
use crate::lti::{ClosedLoop, DiscreteModel, GainSchedule};

/// `N` simulated workspace deviation trajectories `δy[i][t]`, `t = 0..=horizon`.
///
/// Stored step-major and particle-minor (`[t][axis][i]`) so a half-space test
/// at one step sweeps a contiguous run of particles.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationBank {
    n_particles: usize,
    horizon: usize,
    dims: usize,
    seed: u64,
    first_particle: usize,
    dy: Vec<f64>,
}

impl DeviationBank {
    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    /// Largest valid timestep index.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Deviations of every particle along `axis` at `step`.
    #[inline]
    pub fn axis(&self, step: usize, axis: usize) -> &[f64] {
        let start = (step * self.dims + axis) * self.n_particles;
        &self.dy[start..start + self.n_particles]
    }

    /// Deviation of one particle at one step.
    pub fn get(&self, particle: usize, step: usize) -> Vec<f64> {
        (0..self.dims).map(|k| self.axis(step, k)[particle]).collect()
    }

    /// Builds a bank directly from a `[particle][step][axis]` table.
    pub fn from_table(table: &[Vec<Vec<f64>>], seed: u64) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(PumpError::InvalidParameter { name: "particles", reason: "empty table".into() });
        }
        let steps = table[0].len();
        let dims = table[0].first().map_or(0, Vec::len);
        if steps == 0 || dims == 0 {
            return Err(PumpError::Dimension("empty deviation table".into()));
        }
        let mut dy = vec![0.0; steps * dims * n];
        for (i, traj) in table.iter().enumerate() {
            if traj.len() != steps {
                return Err(PumpError::Dimension("ragged deviation table".into()));
            }
            for (t, y) in traj.iter().enumerate() {
                if y.len() != dims {
                    return Err(PumpError::Dimension("ragged deviation table".into()));
                }
                for (k, v) in y.iter().enumerate() {
                    dy[(t * dims + k) * n + i] = *v;
                }
            }
        }
        Ok(Self { n_particles: n, horizon: steps - 1, dims, seed, first_particle: 0, dy })
    }

    /// Global index of this bank's first particle (non-zero for chunks).
    pub fn first_particle(&self) -> usize {
        self.first_particle
    }
}

/// Simulates particles `range` of the bank identified by `seed`.
///
/// Chunks of one logical bank are bit-identical to the corresponding slice of
/// the full bank, which lets very large particle counts be streamed.
pub fn presample_range(
    closed_loop: &ClosedLoop,
    horizon: usize,
    particles: Range<usize>,
    seed: u64,
) -> DeviationBank {
    let dims = closed_loop.output_dim();
    let n = particles.len();
    let per = (horizon + 1) * dims;
    let first = particles.start;
    let rows: Vec<Vec<f64>> = particles
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; per];
            closed_loop.rollout(seed, i as u64, horizon, |t, dy| {
                row[t * dims..(t + 1) * dims].copy_from_slice(dy);
                true
            });
            row
        })
        .collect();
    let mut dy = vec![0.0; per * n];
    for (i, row) in rows.iter().enumerate() {
        for t in 0..=horizon {
            for k in 0..dims {
                dy[(t * dims + k) * n + i] = row[t * dims + k];
            }
        }
    }
    DeviationBank { n_particles: n, horizon, dims, seed, first_particle: first, dy }
}

/// Simulates `n` closed-loop deviation trajectories of `horizon` steps.
pub fn presample_bank(
    dm: &DiscreteModel,
    gs: &GainSchedule,
    sigma0: &DMatrix<f64>,
    horizon: usize,
    n: usize,
    seed: u64,
) -> Result<DeviationBank> {
    if n == 0 {
        return Err(PumpError::InvalidParameter { name: "particles", reason: "must be ≥ 1".into() });
    }
    if horizon == 0 {
        return Err(PumpError::InvalidParameter { name: "horizon", reason: "must be ≥ 1".into() });
    }
    let mut gs = gs.clone();
    gs.sigma0 = sigma0.clone();
    let cl = ClosedLoop::new(dm, &gs);
    Ok(presample_range(&cl, horizon, 0..n, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{discretize, lqg_synthesize, ContinuousModel, LqgWeights};

    fn model(noise: f64) -> (DiscreteModel, GainSchedule, DMatrix<f64>) {
        let cm = ContinuousModel::double_integrator(
            2,
            DMatrix::identity(4, 4) * noise,
            DMatrix::identity(2, 2) * noise,
        );
        let dm = discretize(&cm, 0.1).unwrap();
        let sigma0 = DMatrix::identity(4, 4) * noise;
        let gs = lqg_synthesize(&dm, &LqgWeights::identity(4, 2), &sigma0).unwrap();
        (dm, gs, sigma0)
    }

    #[test]
    fn deterministic_system_has_zero_deviations() {
        let (dm, gs, sigma0) = model(0.0);
        let bank = presample_bank(&dm, &gs, &sigma0, 20, 16, 3).unwrap();
        assert!(bank.dy.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn regeneration_is_bit_identical() {
        let (dm, gs, sigma0) = model(0.01);
        let a = presample_bank(&dm, &gs, &sigma0, 30, 64, 9).unwrap();
        let b = presample_bank(&dm, &gs, &sigma0, 30, 64, 9).unwrap();
        assert_eq!(a, b);
        let c = presample_bank(&dm, &gs, &sigma0, 30, 64, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn chunks_match_full_bank() {
        let (dm, gs, sigma0) = model(0.01);
        let full = presample_bank(&dm, &gs, &sigma0, 10, 40, 5).unwrap();
        let cl = ClosedLoop::new(&dm, &gs);
        let chunk = presample_range(&cl, 10, 25..40, 5);
        for i in 0..15 {
            for t in 0..=10 {
                assert_eq!(chunk.get(i, t), full.get(25 + i, t));
            }
        }
    }

    #[test]
    fn order_independent() {
        let (dm, gs, sigma0) = model(0.02);
        let full = presample_bank(&dm, &gs, &sigma0, 8, 32, 77).unwrap();
        let cl = ClosedLoop::new(&dm, &gs);
        // Evaluate particles back to front, one at a time.
        for i in (0..32).rev() {
            let single = presample_range(&cl, 8, i..i + 1, 77);
            for t in 0..=8 {
                assert_eq!(single.get(0, t), full.get(i, t));
            }
        }
    }

    #[test]
    fn from_table_layout() {
        let table = vec![vec![vec![2.0], vec![5.0]], vec![vec![-1.0], vec![6.0]]];
        let bank = DeviationBank::from_table(&table, 0).unwrap();
        assert_eq!(bank.axis(0, 0), &[2.0, -1.0]);
        assert_eq!(bank.axis(1, 0), &[5.0, 6.0]);
        assert_eq!(bank.horizon(), 1);
    }
}
