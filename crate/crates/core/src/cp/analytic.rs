use nalgebra::{DMatrix, DVector};
use statrs::function::erf::erfc;

use crate::error::Result;
use crate::geom::{ConvexRegion, HalfSpace};
use crate::lti::{propagate_covariances, ClosedLoop, DiscreteModel, GainSchedule};

const VARIANCE_FLOOR: f64 = 1e-14;

/// Upper tail `P(Z > x)` of the standard normal.
pub fn normal_tail(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn unique(halfspaces: &[HalfSpace]) -> Vec<&HalfSpace> {
    let mut out: Vec<&HalfSpace> = Vec::with_capacity(halfspaces.len());
    for h in halfspaces {
        if !out.contains(&h) {
            out.push(h);
        }
    }
    out
}

/// Probability that a single half-space is violated by `a·δ > b` with
/// `δ ~ N(offset, var along a)`.
fn halfspace_tail(margin: f64, variance: f64) -> f64 {
    if variance <= VARIANCE_FLOOR {
        if margin <= 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        normal_tail(margin / variance.sqrt())
    }
}

/// Pointwise collision probability of a Gaussian position `N(mean, cov)`
/// against the half-spaces of `region`: the first-order union bound
/// `min(1, Σ_i P(a_i·(y − center) > b_i))` with exact marginals.
/// Duplicate half-spaces count once.
pub fn pointwise_cp(mean: &[f64], cov: &DMatrix<f64>, region: &ConvexRegion) -> f64 {
    let offset: Vec<f64> = mean.iter().zip(&region.center).map(|(m, c)| m - c).collect();
    let mut total = 0.0;
    for h in unique(&region.halfspaces) {
        let a = DVector::from_column_slice(&h.a);
        let variance = (a.transpose() * cov * &a)[(0, 0)];
        let shift: f64 = h.a.iter().zip(&offset).map(|(x, y)| x * y).sum();
        total += halfspace_tail(h.b - shift, variance);
    }
    total.min(1.0)
}

/// Union bound over waypoints, `min(1, Σ p_t)`.
pub fn additive_cp(pointwise: &[f64]) -> f64 {
    pointwise.iter().sum::<f64>().min(1.0)
}

/// Independence approximation, `1 − Π (1 − p_t)`.
pub fn multiplicative_cp(pointwise: &[f64]) -> f64 {
    1.0 - pointwise.iter().map(|p| 1.0 - p).product::<f64>()
}

/// Pointwise probabilities at steps `0..regions.len()` from the propagated
/// closed-loop covariance (zero-mean deviations).
pub fn pointwise_series(
    dm: &DiscreteModel,
    gs: &GainSchedule,
    sigma0: &DMatrix<f64>,
    regions: &[ConvexRegion],
) -> Result<Vec<f64>> {
    if regions.is_empty() {
        return Ok(Vec::new());
    }
    let covs = propagate_covariances(dm, gs, sigma0, regions.len() - 1)?;
    Ok(regions
        .iter()
        .zip(&covs)
        .map(|(r, cov)| pointwise_cp(&r.center, cov, r))
        .collect())
}

/// Conditional multiplicative approximation.
///
/// A Gaussian over the joint `(δx, δx̂)` is propagated step by step; after
/// scoring step `t` it is truncated to the safe side of each half-space in
/// turn (univariate moment matching along the half-space normal), so later
/// steps are conditioned on no earlier collision.
pub fn conditional_multiplicative_cp(
    dm: &DiscreteModel,
    gs: &GainSchedule,
    sigma0: &DMatrix<f64>,
    regions: &[ConvexRegion],
) -> Result<f64> {
    let mut gs = gs.clone();
    gs.sigma0 = sigma0.clone();
    let cl = ClosedLoop::new(dm, &gs);
    let d = cl.state_dim();
    let mut mean = DVector::<f64>::zeros(2 * d);
    let mut cov = cl.initial_cov(sigma0);
    let mut survive = 1.0;
    for (t, region) in regions.iter().enumerate() {
        if t > 0 {
            mean = &cl.f * &mean;
            cov = cl.step_cov(&cov);
        }
        let hs = unique(&region.halfspaces);
        let normals: Vec<DVector<f64>> = hs
            .iter()
            .map(|h| {
                let a = DVector::from_column_slice(&h.a);
                let mut full = DVector::zeros(2 * d);
                full.rows_mut(0, d).copy_from(&(cl.c.transpose() * a));
                full
            })
            .collect();

        let mut p = 0.0;
        for (h, n) in hs.iter().zip(&normals) {
            let variance = (n.transpose() * &cov * n)[(0, 0)];
            p += halfspace_tail(h.b - n.dot(&mean), variance);
        }
        survive *= 1.0 - p.min(1.0);

        for (h, n) in hs.iter().zip(&normals) {
            let sn = &cov * n;
            let variance = n.dot(&sn);
            if variance <= VARIANCE_FLOOR {
                continue;
            }
            let sd = variance.sqrt();
            let beta = (h.b - n.dot(&mean)) / sd;
            let keep = 1.0 - normal_tail(beta);
            if keep < 1e-300 {
                continue;
            }
            let lambda = normal_pdf(beta) / keep;
            mean -= &sn * (lambda / sd);
            let shrink = (beta * lambda + lambda * lambda).min(1.0);
            cov -= &sn * sn.transpose() * (shrink / variance);
            cov = (&cov + cov.transpose()) * 0.5;
        }
    }
    Ok(1.0 - survive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn region(center: Vec<f64>, hs: Vec<HalfSpace>) -> ConvexRegion {
        ConvexRegion { center, halfspaces: hs }
    }

    #[test]
    fn gaussian_tail_oracle() {
        let r = region(vec![0.0; 3], vec![HalfSpace { a: vec![1.0, 0.0, 0.0], b: 1.6449 }]);
        let p = pointwise_cp(&[0.0; 3], &DMatrix::identity(3, 3), &r);
        assert_relative_eq!(p, 0.05, epsilon = 1e-4);
        // statrs CDF as an independent check.
        use statrs::distribution::{ContinuousCDF, Normal};
        let n = Normal::new(0.0, 1.0).unwrap();
        assert_relative_eq!(p, 1.0 - n.cdf(1.6449), epsilon = 1e-12);
    }

    #[test]
    fn zero_covariance_inside() {
        let r = region(vec![0.0, 0.0], vec![HalfSpace { a: vec![1.0, 0.0], b: 1.0 }]);
        assert_eq!(pointwise_cp(&[0.2, 0.0], &DMatrix::zeros(2, 2), &r), 0.0);
        assert_eq!(pointwise_cp(&[1.5, 0.0], &DMatrix::zeros(2, 2), &r), 1.0);
    }

    #[test]
    fn duplicates_count_once() {
        let h = HalfSpace { a: vec![1.0, 0.0], b: 1.0 };
        let one = region(vec![0.0, 0.0], vec![h.clone()]);
        let two = region(vec![0.0, 0.0], vec![h.clone(), h]);
        let cov = DMatrix::identity(2, 2);
        assert_eq!(pointwise_cp(&[0.0, 0.0], &cov, &one), pointwise_cp(&[0.0, 0.0], &cov, &two));
    }

    #[test]
    fn combination_rules() {
        assert_relative_eq!(additive_cp(&[0.01, 0.02]), 0.03);
        assert_eq!(additive_cp(&[0.7, 0.7]), 1.0);
        assert_eq!(additive_cp(&[]), 0.0);
        assert_relative_eq!(multiplicative_cp(&[0.01, 0.02]), 0.0298, epsilon = 1e-12);
        assert_eq!(multiplicative_cp(&[0.0]), 0.0);
        assert_eq!(multiplicative_cp(&[1.0, 0.3]), 1.0);
    }

    fn scalar(x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x)
    }

    fn scalar_system(a: f64, v: f64) -> (DiscreteModel, GainSchedule) {
        let dm = DiscreteModel { a: scalar(a), b: scalar(1.0), c: scalar(1.0), v: scalar(v), w: scalar(1.0), dt: 1.0 };
        let gs = GainSchedule { l: scalar(0.0), k: scalar(0.0), sigma0: scalar(0.0) };
        (dm, gs)
    }

    #[test]
    fn conditional_edge_cases() {
        let (dm, gs) = scalar_system(0.9, 0.2);
        let empty = vec![ConvexRegion::empty(vec![0.0]); 5];
        assert_eq!(conditional_multiplicative_cp(&dm, &gs, &scalar(1.0), &empty).unwrap(), 0.0);

        let r = region(vec![0.0], vec![HalfSpace { a: vec![1.0], b: 1.2 }]);
        let single = conditional_multiplicative_cp(&dm, &gs, &scalar(1.0), std::slice::from_ref(&r)).unwrap();
        assert_relative_eq!(single, pointwise_cp(&[0.0], &scalar(1.0), &r), epsilon = 1e-15);
    }

    #[test]
    fn two_step_grid_integration_oracle() {
        // x0 ~ N(0, s0), x1 = a x0 + v, v ~ N(0, q); collision iff x_t > b.
        // Stationary unit variance, 5% marginal tail at each step.
        let (a, q, s0, b) = (0.6_f64, 0.64_f64, 1.0_f64, 1.6449_f64);
        let (dm, gs) = scalar_system(a, q);
        let r = region(vec![0.0], vec![HalfSpace { a: vec![1.0], b }]);
        let approx = conditional_multiplicative_cp(&dm, &gs, &scalar(s0), &[r.clone(), r]).unwrap();

        // P(no collision) = ∫_{-∞}^{b} φ(x; 0, s0) Φ((b − a x)/√q) dx on a fine grid.
        let n = 200_000;
        let lo = -12.0 * s0.sqrt();
        let h = (b - lo) / n as f64;
        let mut safe = 0.0;
        for i in 0..n {
            let x = lo + (i as f64 + 0.5) * h;
            let dens = (-0.5 * x * x / s0).exp() / (2.0 * std::f64::consts::PI * s0).sqrt();
            safe += dens * (1.0 - normal_tail((b - a * x) / q.sqrt())) * h;
        }
        let exact = 1.0 - safe;
        assert!((approx - exact).abs() < 5e-3, "approx {approx} exact {exact}");
    }
}
