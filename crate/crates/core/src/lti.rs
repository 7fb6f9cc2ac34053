//! Linear-Gaussian models, exact discretization and steady-state LQG synthesis.
//!
//! The tracking controller acts on deviations from a nominal trajectory:
//!
//! ```text
//! δx[t+1] = A δx[t] + B L δx̂[t] + v[t],   v ~ N(0, V)
//! δy[t]   = C δx[t] + w[t],               w ~ N(0, W)
//! ```
//!
//! with `δx̂` the Kalman estimate. Gains are steady state, so the deviation
//! process is time invariant and one simulated bank of deviations serves every
//! edge of the roadmap.

use nalgebra::{DMatrix, DVector};

use crate::error::{PumpError, Result};
use crate::noise::{self, Channel};

const RICCATI_TOL: f64 = 1e-10;
const RICCATI_MAX_ITERS: usize = 10_000;
const RICCATI_BLOWUP: f64 = 1e15;

/// Continuous-time model `ẋ = A x + B u + v`, `y = C x + w`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    /// Process-noise power spectral density.
    pub v: DMatrix<f64>,
    /// Measurement-noise power spectral density.
    pub w: DMatrix<f64>,
}

impl ContinuousModel {
    /// Per-axis double integrator `p̈ = u` in `dims` workspace dimensions,
    /// state ordered `(p, v)` and position measured.
    pub fn double_integrator(dims: usize, v: DMatrix<f64>, w: DMatrix<f64>) -> Self {
        let d = 2 * dims;
        let mut a = DMatrix::zeros(d, d);
        let mut b = DMatrix::zeros(d, dims);
        let mut c = DMatrix::zeros(dims, d);
        for k in 0..dims {
            a[(k, dims + k)] = 1.0;
            b[(dims + k, k)] = 1.0;
            c[(k, k)] = 1.0;
        }
        Self { a, b, c, v, w }
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }

    fn validate(&self) -> Result<()> {
        let d = self.a.nrows();
        let dims_ok = self.a.is_square()
            && self.b.nrows() == d
            && self.c.ncols() == d
            && self.v.shape() == (d, d)
            && self.w.shape() == (self.c.nrows(), self.c.nrows());
        if !dims_ok {
            return Err(PumpError::Dimension(format!(
                "A {:?}, B {:?}, C {:?}, V {:?}, W {:?}",
                self.a.shape(),
                self.b.shape(),
                self.c.shape(),
                self.v.shape(),
                self.w.shape()
            )));
        }
        check_psd(&self.v, "V_c")?;
        check_psd(&self.w, "W_c")?;
        Ok(())
    }
}

/// Zero-order-hold discretization of a [`ContinuousModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub dt: f64,
}

impl DiscreteModel {
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }
}

/// Quadratic tracking-cost weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LqgWeights {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    /// Terminal penalty; seeds the backward Riccati recursion.
    pub f: DMatrix<f64>,
}

impl LqgWeights {
    pub fn identity(state_dim: usize, input_dim: usize) -> Self {
        Self {
            q: DMatrix::identity(state_dim, state_dim),
            r: DMatrix::identity(input_dim, input_dim),
            f: DMatrix::identity(state_dim, state_dim),
        }
    }
}

/// Steady-state LQG gains.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSchedule {
    /// Feedback gain, `δu = L δx̂`.
    pub l: DMatrix<f64>,
    /// Kalman gain.
    pub k: DMatrix<f64>,
    /// Initial estimation-error covariance.
    pub sigma0: DMatrix<f64>,
}

pub(crate) fn check_psd(m: &DMatrix<f64>, name: &'static str) -> Result<()> {
    if !m.is_square() {
        return Err(PumpError::Dimension(format!("{name} is {:?}", m.shape())));
    }
    let scale = m.amax().max(1.0);
    if (m - m.transpose()).amax() > 1e-9 * scale || m.iter().any(|x| !x.is_finite()) {
        return Err(PumpError::NotPsd(name));
    }
    let eig = m.clone().symmetric_eigen();
    if eig.eigenvalues.min() < -1e-9 * scale {
        return Err(PumpError::NotPsd(name));
    }
    Ok(())
}

/// Returns `S` with `S Sᵀ = m` for a symmetric PSD matrix.
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut s = eig.eigenvectors.clone();
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let root = lam.max(0.0).sqrt();
        s.column_mut(j).scale_mut(root);
    }
    s
}

fn nilpotent_powers(a: &DMatrix<f64>) -> Option<Vec<DMatrix<f64>>> {
    let d = a.nrows();
    let mut powers = vec![DMatrix::identity(d, d)];
    for _ in 0..d {
        let next = powers.last().unwrap() * a;
        if next.iter().all(|&x| x == 0.0) {
            return Some(powers);
        }
        powers.push(next);
    }
    None
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Exact discretization of `cm` at timestep `dt`.
///
/// Nilpotent `A_c` (e.g. integrator chains) uses the terminating series,
/// anything else the Van Loan augmented exponential.
pub fn discretize(cm: &ContinuousModel, dt: f64) -> Result<DiscreteModel> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(PumpError::InvalidParameter {
            name: "dt",
            reason: format!("must be positive, got {dt}"),
        });
    }
    cm.validate()?;
    let d = cm.state_dim();
    let (a, b, v) = if let Some(pows) = nilpotent_powers(&cm.a) {
        let mut a = DMatrix::zeros(d, d);
        let mut phi = DMatrix::zeros(d, d);
        for (k, pk) in pows.iter().enumerate() {
            a += pk * (dt.powi(k as i32) / factorial(k));
            phi += pk * (dt.powi(k as i32 + 1) / factorial(k + 1));
        }
        let mut v = DMatrix::zeros(d, d);
        for (j, pj) in pows.iter().enumerate() {
            for (k, pk) in pows.iter().enumerate() {
                let coef =
                    dt.powi((j + k + 1) as i32) / ((j + k + 1) as f64 * factorial(j) * factorial(k));
                v += pj * &cm.v * pk.transpose() * coef;
            }
        }
        (a, phi * &cm.b, v)
    } else {
        let l = cm.b.ncols();
        let mut mb = DMatrix::zeros(d + l, d + l);
        mb.view_mut((0, 0), (d, d)).copy_from(&(&cm.a * dt));
        mb.view_mut((0, d), (d, l)).copy_from(&(&cm.b * dt));
        let eb = mb.exp();
        let a = eb.view((0, 0), (d, d)).into_owned();
        let b = eb.view((0, d), (d, l)).into_owned();

        let mut mv = DMatrix::zeros(2 * d, 2 * d);
        mv.view_mut((0, 0), (d, d)).copy_from(&(-&cm.a * dt));
        mv.view_mut((0, d), (d, d)).copy_from(&(&cm.v * dt));
        mv.view_mut((d, d), (d, d)).copy_from(&(cm.a.transpose() * dt));
        let ev = mv.exp();
        let f12 = ev.view((0, d), (d, d)).into_owned();
        let f22 = ev.view((d, d), (d, d)).into_owned();
        (a, b, f22.transpose() * f12)
    };
    let v = (&v + v.transpose()) * 0.5;
    Ok(DiscreteModel {
        a,
        b,
        c: cm.c.clone(),
        v,
        w: &cm.w / dt,
        dt,
    })
}

fn solve_or_pinv(s: &DMatrix<f64>, rhs: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(ch) = s.clone().cholesky() {
        return ch.solve(rhs);
    }
    let pinv = s
        .clone()
        .pseudo_inverse(1e-14 * s.amax().max(1e-300))
        .unwrap_or_else(|_| DMatrix::zeros(s.ncols(), s.nrows()));
    pinv * rhs
}

#[derive(Default)]
struct StepTrend {
    converged: bool,
    midway: Option<f64>,
    last: f64,
}

impl StepTrend {
    /// Records the step size of iteration `it`; true once converged.
    fn record(&mut self, it: usize, delta: f64) -> bool {
        if it == RICCATI_MAX_ITERS / 2 {
            self.midway = Some(delta);
        }
        self.last = delta;
        self.converged = delta < RICCATI_TOL;
        self.converged
    }

    fn acceptable(&self) -> bool {
        self.converged || self.midway.is_some_and(|m| self.last <= 0.5 * m)
    }
}

/// Steady-state LQR and Kalman gains.
///
/// Both recursions stop once successive iterates differ by less than `1e-10`
/// in max-abs entry or after 10,000 iterations. Hitting the cap is accepted
/// only while the step size is still shrinking (algebraic convergence, as
/// with a noise-free filter); a stalled or growing step is divergence.
pub fn lqg_synthesize(
    dm: &DiscreteModel,
    weights: &LqgWeights,
    sigma0: &DMatrix<f64>,
) -> Result<GainSchedule> {
    let d = dm.state_dim();
    let l_dim = dm.input_dim();
    if weights.q.shape() != (d, d) || weights.f.shape() != (d, d) || weights.r.shape() != (l_dim, l_dim)
    {
        return Err(PumpError::Dimension("LQG weights do not match model".into()));
    }
    if sigma0.shape() != (d, d) {
        return Err(PumpError::Dimension(format!("Σ0 is {:?}", sigma0.shape())));
    }
    check_psd(&weights.q, "Q")?;
    check_psd(&weights.f, "F")?;
    check_psd(sigma0, "Σ0")?;
    if weights.r.clone().cholesky().is_none() {
        return Err(PumpError::InvalidParameter {
            name: "R",
            reason: "must be positive definite".into(),
        });
    }

    let (a, b) = (&dm.a, &dm.b);
    let at = a.transpose();
    let bt = b.transpose();
    let mut p = weights.f.clone();
    let mut trend = StepTrend::default();
    for it in 0..RICCATI_MAX_ITERS {
        let btpa = &bt * &p * a;
        let gain = solve_or_pinv(&(&weights.r + &bt * &p * b), &btpa);
        let mut next = &weights.q + &at * &p * a - btpa.transpose() * gain;
        next = (&next + next.transpose()) * 0.5;
        if !next.iter().all(|x| x.is_finite()) || next.amax() > RICCATI_BLOWUP {
            return Err(PumpError::RiccatiDivergence("control Riccati blew up"));
        }
        let delta = (&next - &p).amax();
        p = next;
        if trend.record(it, delta) {
            break;
        }
    }
    if !trend.acceptable() {
        return Err(PumpError::RiccatiDivergence("control Riccati did not converge"));
    }
    let l = -solve_or_pinv(&(&weights.r + &bt * &p * b), &(&bt * &p * a));

    let c = &dm.c;
    let ct = c.transpose();
    let eye = DMatrix::<f64>::identity(d, d);
    let mut post = sigma0.clone();
    let mut prior_prev: Option<DMatrix<f64>> = None;
    let mut k = DMatrix::zeros(d, dm.output_dim());
    let mut trend = StepTrend::default();
    for it in 0..RICCATI_MAX_ITERS {
        let mut prior = a * &post * &at + &dm.v;
        prior = (&prior + prior.transpose()) * 0.5;
        if !prior.iter().all(|x| x.is_finite()) || prior.amax() > RICCATI_BLOWUP {
            return Err(PumpError::RiccatiDivergence("filter Riccati blew up"));
        }
        let s = c * &prior * &ct + &dm.w;
        k = solve_or_pinv(&s, &(c * &prior)).transpose();
        let ikc = &eye - &k * c;
        post = &ikc * &prior * ikc.transpose() + &k * &dm.w * k.transpose();
        let delta = prior_prev.as_ref().map(|pp| (&prior - pp).amax());
        prior_prev = Some(prior);
        if delta.is_some_and(|dl| trend.record(it, dl)) {
            break;
        }
    }
    if !trend.acceptable() {
        return Err(PumpError::RiccatiDivergence("filter Riccati did not converge"));
    }
    Ok(GainSchedule {
        l,
        k,
        sigma0: sigma0.clone(),
    })
}

/// Largest eigenvalue magnitude.
///
/// Uses a real Schur decomposition; if its QR iteration stalls, falls back to
/// Gelfand's formula `‖M^k‖^(1/k)` with `k = 2^40` via rescaled squaring.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if let Some(schur) = nalgebra::linalg::Schur::try_new(m.clone(), 1e-14, 10_000) {
        return schur.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
    }
    let mut p = m.clone();
    let mut log_scale = 0.0;
    let mut k = 1.0;
    for _ in 0..40 {
        let n = p.amax();
        if n == 0.0 {
            return 0.0;
        }
        p /= n;
        log_scale += n.ln() / k;
        p = &p * &p;
        k *= 2.0;
    }
    (log_scale + p.amax().max(f64::MIN_POSITIVE).ln() / k).exp()
}

/// Joint closed-loop dynamics of `z = (δx, δx̂)`:
/// `z[t+1] = F z[t] + Gv ξv + Gw ξw` with standard-normal `ξ`.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    d: usize,
    dw: usize,
    pub(crate) f: DMatrix<f64>,
    gv: DMatrix<f64>,
    gw: DMatrix<f64>,
    s0: DMatrix<f64>,
    pub(crate) c: DMatrix<f64>,
    /// `G diag(V, W) Gᵀ`.
    pub(crate) noise_cov: DMatrix<f64>,
}

impl ClosedLoop {
    pub fn new(dm: &DiscreteModel, gs: &GainSchedule) -> Self {
        let d = dm.state_dim();
        let dw = dm.output_dim();
        let (a, b, c) = (&dm.a, &dm.b, &dm.c);
        let bl = b * &gs.l;
        let kca = &gs.k * c * a;
        let mut f = DMatrix::zeros(2 * d, 2 * d);
        f.view_mut((0, 0), (d, d)).copy_from(a);
        f.view_mut((0, d), (d, d)).copy_from(&bl);
        f.view_mut((d, 0), (d, d)).copy_from(&kca);
        f.view_mut((d, d), (d, d)).copy_from(&(a + &bl - &kca));

        let mut gv0 = DMatrix::zeros(2 * d, d);
        gv0.view_mut((0, 0), (d, d)).fill_with_identity();
        gv0.view_mut((d, 0), (d, d)).copy_from(&(&gs.k * c));
        let mut gw0 = DMatrix::zeros(2 * d, dw);
        gw0.view_mut((d, 0), (d, dw)).copy_from(&gs.k);
        let noise_cov = &gv0 * &dm.v * gv0.transpose() + &gw0 * &dm.w * gw0.transpose();

        Self {
            d,
            dw,
            gv: gv0 * psd_sqrt(&dm.v),
            gw: gw0 * psd_sqrt(&dm.w),
            s0: psd_sqrt(&gs.sigma0),
            c: c.clone(),
            f,
            noise_cov,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.d
    }

    pub fn output_dim(&self) -> usize {
        self.dw
    }

    /// Initial joint covariance `diag(Σ0, 0)`.
    pub(crate) fn initial_cov(&self, sigma0: &DMatrix<f64>) -> DMatrix<f64> {
        let mut cov = DMatrix::zeros(2 * self.d, 2 * self.d);
        cov.view_mut((0, 0), (self.d, self.d)).copy_from(sigma0);
        cov
    }

    /// Simulates one particle and calls `visit(t, δy_t)` for `t = 0..=last_step`.
    /// Stops early when `visit` returns `false`.
    pub fn rollout<F>(&self, seed: u64, particle: u64, last_step: usize, mut visit: F)
    where
        F: FnMut(usize, &[f64]) -> bool,
    {
        let (d, dw) = (self.d, self.dw);
        let mut xi_v = DVector::zeros(d);
        let mut xi_w = DVector::zeros(dw);
        let mut z = DVector::zeros(2 * d);
        let mut next = DVector::zeros(2 * d);
        let mut dy = DVector::zeros(dw);

        noise::standard_normals(seed, particle, 0, Channel::InitialState, xi_v.as_mut_slice());
        z.rows_mut(0, d).gemv(1.0, &self.s0, &xi_v, 0.0);
        for t in 0..=last_step {
            dy.gemv(1.0, &self.c, &z.rows(0, d), 0.0);
            if !visit(t, dy.as_slice()) || t == last_step {
                return;
            }
            noise::standard_normals(seed, particle, t as u64, Channel::Process, xi_v.as_mut_slice());
            noise::standard_normals(
                seed,
                particle,
                t as u64 + 1,
                Channel::Measurement,
                xi_w.as_mut_slice(),
            );
            next.gemv(1.0, &self.f, &z, 0.0);
            next.gemv(1.0, &self.gv, &xi_v, 1.0);
            next.gemv(1.0, &self.gw, &xi_w, 1.0);
            std::mem::swap(&mut z, &mut next);
        }
    }

    /// One step of the joint covariance recursion.
    pub(crate) fn step_cov(&self, cov: &DMatrix<f64>) -> DMatrix<f64> {
        let next = &self.f * cov * self.f.transpose() + &self.noise_cov;
        (&next + next.transpose()) * 0.5
    }

    /// Workspace marginal `C Cov(δx) Cᵀ` of a joint covariance.
    pub(crate) fn output_cov(&self, cov: &DMatrix<f64>) -> DMatrix<f64> {
        let cxx = cov.view((0, 0), (self.d, self.d));
        &self.c * cxx * self.c.transpose()
    }
}

/// Workspace covariances `C Cov(δx_t) Cᵀ` for `t = 0..=horizon` under the
/// closed-loop recursion.
pub fn propagate_covariances(
    dm: &DiscreteModel,
    gs: &GainSchedule,
    sigma0: &DMatrix<f64>,
    horizon: usize,
) -> Result<Vec<DMatrix<f64>>> {
    let d = dm.state_dim();
    if sigma0.shape() != (d, d) || gs.l.shape() != (dm.input_dim(), d) {
        return Err(PumpError::Dimension("Σ0 or L does not match model".into()));
    }
    let cl = ClosedLoop::new(dm, gs);
    let mut cov = cl.initial_cov(sigma0);
    let mut out = Vec::with_capacity(horizon + 1);
    out.push(cl.output_cov(&cov));
    for _ in 0..horizon {
        cov = cl.step_cov(&cov);
        out.push(cl.output_cov(&cov));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar(x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x)
    }

    fn scalar_model(a: f64, b: f64, c: f64, v: f64, w: f64) -> DiscreteModel {
        DiscreteModel {
            a: scalar(a),
            b: scalar(b),
            c: scalar(c),
            v: scalar(v),
            w: scalar(w),
            dt: 1.0,
        }
    }

    #[test]
    fn double_integrator_closed_form() {
        let cm = ContinuousModel::double_integrator(1, DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0])), scalar(1.0));
        let dm = discretize(&cm, 0.1).unwrap();
        let expect_a = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        let expect_b = DMatrix::from_row_slice(2, 1, &[0.005, 0.1]);
        assert!((&dm.a - expect_a).amax() < 1e-12);
        assert!((&dm.b - expect_b).amax() < 1e-12);
        let dt: f64 = 0.1;
        let expect_v = DMatrix::from_row_slice(
            2,
            2,
            &[dt.powi(3) / 3.0, dt * dt / 2.0, dt * dt / 2.0, dt],
        );
        assert!((&dm.v - expect_v).amax() < 1e-12);
        assert_relative_eq!(dm.w[(0, 0)], 10.0, epsilon = 1e-12);
    }

    #[test]
    fn process_noise_matches_quadrature() {
        // Midpoint rule over exp(A s) V_c exp(A s)ᵀ for the double integrator.
        let cm = ContinuousModel::double_integrator(1, DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0])), scalar(1.0));
        let dt = 0.1;
        let n = 100_000;
        let h = dt / n as f64;
        let mut q = DMatrix::<f64>::zeros(2, 2);
        for i in 0..n {
            let s = (i as f64 + 0.5) * h;
            let e = DMatrix::from_row_slice(2, 2, &[1.0, s, 0.0, 1.0]);
            q += &e * &cm.v * e.transpose() * h;
        }
        let dm = discretize(&cm, dt).unwrap();
        assert_relative_eq!(dm.v[(0, 0)], 3.333e-4, epsilon = 1e-6);
        assert_relative_eq!(dm.v[(0, 1)], 5e-3, epsilon = 1e-9);
        assert!((&dm.v - q).amax() < 1e-9);
    }

    #[test]
    fn zero_dynamics() {
        let cm = ContinuousModel {
            a: DMatrix::zeros(2, 2),
            b: DMatrix::identity(2, 2),
            c: DMatrix::identity(2, 2),
            v: DMatrix::zeros(2, 2),
            w: DMatrix::identity(2, 2),
        };
        let dm = discretize(&cm, 1.0).unwrap();
        assert_eq!(dm.a, DMatrix::identity(2, 2));
        assert_eq!(dm.b, DMatrix::identity(2, 2));
    }

    #[test]
    fn van_loan_matches_substepping() {
        let cm = ContinuousModel {
            a: DMatrix::from_row_slice(2, 2, &[-0.3, 1.0, -2.0, -0.5]),
            b: DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            c: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            v: DMatrix::identity(2, 2) * 0.1,
            w: scalar(0.2),
        };
        let dt = 0.2;
        let dm = discretize(&cm, dt).unwrap();
        // RK4 substeps of ẋ = A x + B u with constant u = 1 from x0.
        let x0 = DVector::from_vec(vec![0.7, -0.4]);
        let u = DVector::from_vec(vec![1.0]);
        let n = 1000;
        let h = dt / n as f64;
        let deriv = |x: &DVector<f64>| &cm.a * x + &cm.b * &u;
        let mut x = x0.clone();
        for _ in 0..n {
            let k1 = deriv(&x);
            let k2 = deriv(&(&x + &k1 * (h / 2.0)));
            let k3 = deriv(&(&x + &k2 * (h / 2.0)));
            let k4 = deriv(&(&x + &k3 * h));
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        let step = &dm.a * &x0 + &dm.b * &u;
        assert!((&step - &x).norm() / x.norm() < 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cm = ContinuousModel::double_integrator(1, DMatrix::identity(2, 2), scalar(1.0));
        assert!(discretize(&cm, 0.0).is_err());
        let mut bad = cm.clone();
        bad.v = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(discretize(&bad, 0.1), Err(PumpError::NotPsd(_))));
        bad = cm.clone();
        bad.b = DMatrix::zeros(3, 1);
        assert!(matches!(discretize(&bad, 0.1), Err(PumpError::Dimension(_))));
    }

    #[test]
    fn golden_ratio_riccati() {
        // Fixed-point iteration oracle: P = 1 + P - P²/(1+P).
        let mut p = 1.0_f64;
        for _ in 0..200 {
            p = 1.0 + p - p * p / (1.0 + p);
        }
        let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
        assert_relative_eq!(p, phi, epsilon = 1e-12);

        let dm = scalar_model(1.0, 1.0, 1.0, 1.0, 1.0);
        let w = LqgWeights { q: scalar(1.0), r: scalar(1.0), f: scalar(1.0) };
        let gs = lqg_synthesize(&dm, &w, &scalar(0.0)).unwrap();
        assert_relative_eq!(gs.l[(0, 0)], -p / (1.0 + p), epsilon = 1e-9);
        assert_relative_eq!(gs.l[(0, 0)], -0.618, epsilon = 1e-3);
        // The filter recursion is the same Riccati map: prior P⁻ → φ.
        assert_relative_eq!(gs.k[(0, 0)], phi / (phi + 1.0), epsilon = 1e-9);
    }

    #[test]
    fn trivial_gains() {
        let dm = DiscreteModel {
            a: DMatrix::identity(2, 2),
            b: DMatrix::zeros(2, 1),
            c: DMatrix::identity(2, 2),
            v: DMatrix::zeros(2, 2),
            w: DMatrix::identity(2, 2),
            dt: 0.1,
        };
        let w = LqgWeights { q: DMatrix::zeros(2, 2), r: scalar(1.0), f: DMatrix::zeros(2, 2) };
        let gs = lqg_synthesize(&dm, &w, &DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(gs.l.amax(), 0.0);
        assert_eq!(gs.k.amax(), 0.0);
    }

    #[test]
    fn unstabilizable_diverges() {
        let dm = scalar_model(1.5, 0.0, 1.0, 0.0, 1.0);
        let w = LqgWeights { q: scalar(1.0), r: scalar(1.0), f: scalar(1.0) };
        assert!(matches!(
            lqg_synthesize(&dm, &w, &scalar(0.0)),
            Err(PumpError::RiccatiDivergence(_))
        ));
    }

    #[test]
    fn marginal_growth_is_divergence() {
        // P grows by Q each step without ever blowing up.
        let dm = scalar_model(1.0, 0.0, 1.0, 0.0, 1.0);
        let w = LqgWeights { q: scalar(1.0), r: scalar(1.0), f: scalar(0.0) };
        assert!(matches!(
            lqg_synthesize(&dm, &w, &scalar(0.0)),
            Err(PumpError::RiccatiDivergence(_))
        ));
    }

    #[test]
    fn noise_free_filter_converges_slowly() {
        // With V = 0 the error covariance decays only algebraically.
        let cm = ContinuousModel::double_integrator(1, DMatrix::zeros(2, 2), scalar(1e-3));
        let dm = discretize(&cm, 0.1).unwrap();
        let gs = lqg_synthesize(&dm, &LqgWeights::identity(2, 1), &DMatrix::identity(2, 2)).unwrap();
        assert!(gs.k.amax() < 1e-2);
    }

    #[test]
    fn closed_loop_is_stable() {
        let cm = ContinuousModel::double_integrator(3, DMatrix::identity(6, 6) * 0.01, DMatrix::identity(3, 3) * 0.001);
        let dm = discretize(&cm, 0.1).unwrap();
        let gs = lqg_synthesize(&dm, &LqgWeights::identity(6, 3), &(DMatrix::identity(6, 6) * 1e-4)).unwrap();
        assert!(spectral_radius(&(&dm.a + &dm.b * &gs.l)) < 1.0);
        let cl = ClosedLoop::new(&dm, &gs);
        assert!(spectral_radius(&cl.f) < 1.0);
    }

    #[test]
    fn covariance_edge_cases() {
        let dm = scalar_model(1.1, 1.0, 1.0, 0.0, 3.0);
        let zero = GainSchedule { l: scalar(0.0), k: scalar(0.0), sigma0: scalar(0.0) };
        let covs = propagate_covariances(&dm, &zero, &scalar(0.0), 5).unwrap();
        assert!(covs.iter().all(|c| c.amax() == 0.0));

        let one = propagate_covariances(&dm, &zero, &scalar(0.4), 0).unwrap();
        assert_eq!(one.len(), 1);
        assert_relative_eq!(one[0][(0, 0)], 0.4);
    }

    #[test]
    fn open_loop_scalar_recursion() {
        let (a, v, s0) = (0.9_f64, 0.3, 2.0);
        let dm = scalar_model(a, 1.0, 1.0, v, 1.0);
        let gs = GainSchedule { l: scalar(0.0), k: scalar(0.0), sigma0: scalar(s0) };
        let covs = propagate_covariances(&dm, &gs, &scalar(s0), 12).unwrap();
        for (t, c) in covs.iter().enumerate() {
            let expect = s0 * a.powi(2 * t as i32)
                + (0..t).map(|k| v * a.powi(2 * k as i32)).sum::<f64>();
            assert_relative_eq!(c[(0, 0)], expect, epsilon = 1e-12);
        }
    }
}
