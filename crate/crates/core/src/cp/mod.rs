//! Collision-probability estimators.
//!
//! Waypoint-based baselines (additive, multiplicative, conditional
//! multiplicative) work from Gaussian marginals; the half-space particle
//! estimator runs incrementally against a [`DeviationBank`]; Monte Carlo
//! certification simulates closed-loop rollouts with full collision checks.
//!
//! [`DeviationBank`]: crate::bank::DeviationBank

mod analytic;
mod compare;
mod hsmc;
mod mask;
mod mc;

pub use analytic::{
    additive_cp, conditional_multiplicative_cp, multiplicative_cp, normal_tail, pointwise_cp,
    pointwise_series,
};
pub use compare::{compare_estimators, trajectory_regions, CompareRow, CompareSetup};
pub use hsmc::{
    hsmc_estimate, hsmc_extend, hsmc_extend_packed, kill_packed, kill_violators, PackedRegions,
};
pub use mask::ParticleMask;
pub use mc::{mc_certify, mc_collides};

use serde::{Deserialize, Serialize};

/// Which estimator produced a [`CpEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CpMethod {
    Additive,
    Multiplicative,
    ConditionalMultiplicative,
    Hsmc,
    MonteCarlo,
}

impl CpMethod {
    pub fn name(self) -> &'static str {
        match self {
            CpMethod::Additive => "additive",
            CpMethod::Multiplicative => "multiplicative",
            CpMethod::ConditionalMultiplicative => "conditional_multiplicative",
            CpMethod::Hsmc => "hsmc",
            CpMethod::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpEstimate {
    pub value: f64,
    pub method: CpMethod,
    pub samples: Option<usize>,
}

impl CpEstimate {
    /// Binomial standard error of a sampled estimate.
    pub fn standard_error(&self) -> Option<f64> {
        self.samples
            .map(|n| (self.value * (1.0 - self.value) / n as f64).sqrt())
    }
}
