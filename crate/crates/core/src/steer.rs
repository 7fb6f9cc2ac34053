//! Optimal steering for the double integrator under a mixed time / control
//! effort cost.
//!
//! For a fixed duration `τ` the minimum-effort connection is cubic in time on
//! every axis, with effort
//!
//! ```text
//! 12 Δp²/τ³ − 12 Δp Δv/τ² + 4 Δv²/τ,   Δp = p_b − p_a − v_a τ,  Δv = v_b − v_a
//! ```
//!
//! The total cost `c(τ) = w_t τ + w_u · effort(τ)` is then minimised over `τ`.

use serde::{Deserialize, Serialize};

/// Kinematic state of the double integrator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl State {
    pub fn new(position: Vec<f64>, velocity: Vec<f64>) -> Self {
        debug_assert_eq!(position.len(), velocity.len());
        Self { position, velocity }
    }

    pub fn at_rest(position: Vec<f64>) -> Self {
        let velocity = vec![0.0; position.len()];
        Self { position, velocity }
    }

    pub fn dims(&self) -> usize {
        self.position.len()
    }

    /// Velocity-negated copy (time reversal).
    pub fn reversed(&self) -> Self {
        Self {
            position: self.position.clone(),
            velocity: self.velocity.iter().map(|v| -v).collect(),
        }
    }

    /// Convex combination `(1 − s) self + s other`.
    pub fn lerp(&self, other: &State, s: f64) -> State {
        let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| (1.0 - s) * x + s * y).collect()
        };
        State {
            position: mix(&self.position, &other.position),
            velocity: mix(&self.velocity, &other.velocity),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(&self.velocity).all(|x| x.is_finite())
    }
}

/// Weights of the steering cost `w_t τ + w_u ∫|u|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteerCost {
    pub time_weight: f64,
    pub control_weight: f64,
}

impl Default for SteerCost {
    fn default() -> Self {
        Self { time_weight: 1.0, control_weight: 1.0 }
    }
}

impl SteerCost {
    /// Cost of connecting `a` to `b` in exactly `tau` seconds.
    pub fn eval(&self, a: &State, b: &State, tau: f64) -> f64 {
        self.time_weight * tau + self.control_weight * effort(a, b, tau)
    }
}

/// Minimum control effort `∫|u|²` between `a` and `b` over duration `tau`.
pub fn effort(a: &State, b: &State, tau: f64) -> f64 {
    let mut e = 0.0;
    for k in 0..a.dims() {
        let dp = b.position[k] - a.position[k] - a.velocity[k] * tau;
        let dv = b.velocity[k] - a.velocity[k];
        e += 12.0 * dp * dp / tau.powi(3) - 12.0 * dp * dv / (tau * tau) + 4.0 * dv * dv / tau;
    }
    e
}

/// Cubic connection between two states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Motion {
    pub from: State,
    pub to: State,
    /// Duration (s).
    pub tau: f64,
    pub cost: f64,
    /// Per-axis `(c2, c3)` with `p(s) = p_a + v_a s + c2 s² + c3 s³`.
    coeffs: Vec<[f64; 2]>,
}

/// A sampled point of a nominal trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t: f64,
    pub state: State,
    pub control: Vec<f64>,
}

impl Motion {
    /// Minimum-effort connection with a prescribed duration.
    pub fn with_duration(from: &State, to: &State, tau: f64, weights: &SteerCost) -> Self {
        if tau <= 0.0 {
            return Self {
                from: from.clone(),
                to: to.clone(),
                tau: 0.0,
                cost: 0.0,
                coeffs: vec![[0.0, 0.0]; from.dims()],
            };
        }
        let coeffs = (0..from.dims())
            .map(|k| {
                let dp = to.position[k] - from.position[k] - from.velocity[k] * tau;
                let dv = to.velocity[k] - from.velocity[k];
                let c2 = (3.0 * dp - dv * tau) / (tau * tau);
                let c3 = (dv * tau - 2.0 * dp) / tau.powi(3);
                [c2, c3]
            })
            .collect();
        Self {
            from: from.clone(),
            to: to.clone(),
            tau,
            cost: weights.eval(from, to, tau),
            coeffs,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.tau == 0.0
    }

    /// Nominal state at time `s ∈ [0, τ]`; the endpoints are returned exactly.
    pub fn state_at(&self, s: f64) -> State {
        if s <= 0.0 {
            return self.from.clone();
        }
        if s >= self.tau {
            return self.to.clone();
        }
        let (p0, v0) = (&self.from.position, &self.from.velocity);
        let mut p = Vec::with_capacity(p0.len());
        let mut v = Vec::with_capacity(p0.len());
        for (k, [c2, c3]) in self.coeffs.iter().enumerate() {
            p.push(p0[k] + v0[k] * s + c2 * s * s + c3 * s * s * s);
            v.push(v0[k] + 2.0 * c2 * s + 3.0 * c3 * s * s);
        }
        State { position: p, velocity: v }
    }

    /// Nominal position at `s ∈ [0, τ]`, written into `out`.
    pub fn position_into(&self, s: f64, out: &mut [f64]) {
        let (p0, v0) = (&self.from.position, &self.from.velocity);
        for (k, [c2, c3]) in self.coeffs.iter().enumerate() {
            out[k] = p0[k] + s * (v0[k] + s * (c2 + s * c3));
        }
    }

    /// Nominal feedforward control at time `s`.
    pub fn control_at(&self, s: f64) -> Vec<f64> {
        let s = s.clamp(0.0, self.tau);
        self.coeffs.iter().map(|[c2, c3]| 2.0 * c2 + 6.0 * c3 * s).collect()
    }

    /// Largest per-axis control magnitude (the control is linear in time).
    pub fn max_control(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|[c2, c3]| (2.0 * c2).abs().max((2.0 * c2 + 6.0 * c3 * self.tau).abs()))
            .collect()
    }

    /// Per-axis bounding interval of the nominal position over `[0, τ]`.
    pub fn position_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let dims = self.from.dims();
        let mut lo = vec![f64::INFINITY; dims];
        let mut hi = vec![f64::NEG_INFINITY; dims];
        for k in 0..dims {
            let [c2, c3] = self.coeffs[k];
            let v0 = self.from.velocity[k];
            // Roots of v(s) = v0 + 2 c2 s + 3 c3 s².
            let mut ts = vec![0.0, self.tau];
            if c3.abs() > 1e-300 {
                let disc = 4.0 * c2 * c2 - 12.0 * c3 * v0;
                if disc >= 0.0 {
                    let r = disc.sqrt();
                    ts.push((-2.0 * c2 + r) / (6.0 * c3));
                    ts.push((-2.0 * c2 - r) / (6.0 * c3));
                }
            } else if c2.abs() > 1e-300 {
                ts.push(-v0 / (2.0 * c2));
            }
            for t in ts {
                if (0.0..=self.tau).contains(&t) {
                    let p = self.from.position[k] + v0 * t + c2 * t * t + c3 * t * t * t;
                    lo[k] = lo[k].min(p);
                    hi[k] = hi[k].max(p);
                }
            }
            lo[k] = lo[k].min(self.to.position[k]);
            hi[k] = hi[k].max(self.to.position[k]);
        }
        (lo, hi)
    }
}

/// Sample times `0, dt, 2dt, …, τ`; a trailing partial interval becomes a
/// shorter final step.
pub fn sample_times(tau: f64, dt: f64) -> Vec<f64> {
    assert!(dt > 0.0, "dt must be positive");
    if tau <= 0.0 {
        return vec![0.0];
    }
    let eps = 1e-9 * dt;
    let full = ((tau + eps) / dt).floor() as usize;
    let mut ts: Vec<f64> = (0..=full).map(|k| k as f64 * dt).collect();
    if tau - full as f64 * dt > eps {
        ts.push(tau);
    } else {
        *ts.last_mut().unwrap() = tau;
    }
    ts
}

/// Nominal states and feedforward controls at `0, dt, …, τ`.
pub fn waypoints(m: &Motion, dt: f64) -> Vec<Waypoint> {
    sample_times(m.tau, dt)
        .into_iter()
        .map(|t| Waypoint { t, state: m.state_at(t), control: m.control_at(t) })
        .collect()
}

fn quartic(c: &[f64; 5], t: f64) -> f64 {
    (((c[4] * t + c[3]) * t + c[2]) * t + c[1]) * t + c[0]
}

/// Real roots of `t³ + p t + q` (`p ≤ 0` is not assumed) and their count.
fn depressed_cubic_roots(p: f64, q: f64) -> ([f64; 3], usize) {
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if disc > 0.0 {
        let s = disc.sqrt();
        ([(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt(), 0.0, 0.0], 1)
    } else if p == 0.0 {
        ([0.0; 3], 1)
    } else {
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = ((3.0 * q) / (p * r)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        let root = |k: f64| r * (phi - 2.0 * std::f64::consts::PI * k / 3.0).cos();
        ([root(0.0), root(1.0), root(2.0)], 3)
    }
}

/// Root of the quartic in `[lo, hi]` where it changes sign from negative to
/// non-negative: Newton steps, falling back to bisection whenever a step
/// leaves the bracket.
fn find_root(c: &[f64; 5], mut lo: f64, mut hi: f64) -> f64 {
    // From the upper end Newton approaches the root monotonically wherever
    // the quartic is convex, which covers the last window.
    let mut t = hi;
    for _ in 0..200 {
        let f = quartic(c, t);
        if f < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let df = ((4.0 * c[4] * t + 3.0 * c[3]) * t + 2.0 * c[2]) * t + c[1];
        let newton = t - f / df;
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        // The cost is flat at its minimum, so this is far below any effect on c.
        if (next - t).abs() <= 1e-13 * t || hi - lo <= 1e-13 * hi {
            return next;
        }
        t = next;
    }
    t
}

/// Interval edges between which `τ⁴ c'(τ)` is monotone: zero, its positive
/// critical points, and a Cauchy bound on its roots.
struct Brackets {
    poly: [f64; 5],
    edges: [f64; 5],
    len: usize,
}

impl Brackets {
    fn new(a: &State, b: &State, weights: &SteerCost) -> Option<Self> {
        let (w, r) = (weights.time_weight, weights.control_weight);
        if w <= 0.0 {
            return None;
        }
        let (mut big_a, mut big_b, mut big_c) = (0.0, 0.0, 0.0);
        for k in 0..a.dims() {
            let (va, vb) = (a.velocity[k], b.velocity[k]);
            let d = b.position[k] - a.position[k];
            big_a += va * va + va * vb + vb * vb;
            big_b += d * (va + vb);
            big_c += d * d;
        }
        // τ⁴ c'(τ) = w τ⁴ − 4 r A τ² + 24 r B τ − 36 r C.
        let poly = [-36.0 * r * big_c, 24.0 * r * big_b, -4.0 * r * big_a, 0.0, w];
        let bound = 1.0 + [poly[0], poly[1], poly[2]].iter().map(|x| x.abs() / w).fold(0.0, f64::max);
        // Critical points of the quartic: 4w τ³ − 8 r A τ + 24 r B = 0.
        let (roots, n) = depressed_cubic_roots(-2.0 * r * big_a / w, 6.0 * r * big_b / w);
        let mut knots = [f64::INFINITY; 3];
        let mut m = 0;
        for &t in &roots[..n] {
            if t > 0.0 && t < bound {
                knots[m] = t;
                m += 1;
            }
        }
        knots[..m].sort_by(f64::total_cmp);
        let mut edges = [0.0; 5];
        edges[1..=m].copy_from_slice(&knots[..m]);
        edges[m + 1] = bound;
        Some(Self { poly, edges, len: m + 2 })
    }

    /// Windows `(lo, hi)` where `τ⁴ c'` crosses from negative to
    /// non-negative, i.e. those holding a local minimum of `c`.
    fn minima(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.edges[..self.len]
            .windows(2)
            .map(|w| (w[0], w[1]))
            .filter(|&(lo, hi)| quartic(&self.poly, lo) < 0.0 && quartic(&self.poly, hi) >= 0.0)
    }
}

/// Best local minimum `(τ, c(τ))` among windows starting below `limit`.
fn best_minimum(br: &Brackets, a: &State, b: &State, weights: &SteerCost, limit: f64) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for (lo, hi) in br.minima().take_while(|&(lo, _)| lo < limit) {
        let t = find_root(&br.poly, lo, hi);
        if t > 0.0 {
            let c = weights.eval(a, b, t);
            if best.is_none_or(|(_, bc)| c < bc) {
                best = Some((t, c));
            }
        }
    }
    best
}

/// Duration minimising `c(τ)` over `τ > 0`, or `None` if the cost has no
/// finite minimiser (zero time weight).
pub fn optimal_duration(a: &State, b: &State, weights: &SteerCost) -> Option<f64> {
    let br = Brackets::new(a, b, weights)?;
    best_minimum(&br, a, b, weights, f64::INFINITY).map(|(t, _)| t)
}

/// Cost-optimal connection from `a` to `b`.
///
/// Returns `None` when the optimal duration exceeds `tau_max`. Identical
/// states give the empty motion with zero cost.
pub fn connect(a: &State, b: &State, weights: &SteerCost, tau_max: f64) -> Option<Motion> {
    if a == b {
        return Some(Motion::with_duration(a, b, 0.0, weights));
    }
    let tau = optimal_duration(a, b, weights)?;
    if tau > tau_max {
        return None;
    }
    Some(Motion::with_duration(a, b, tau, weights))
}

/// [`connect`] restricted to motions cheaper than `max_cost`.
///
/// Since `c(τ) ≥ w_t τ`, only minima below `max_cost / w_t` can qualify;
/// the others are never solved for.
pub fn connect_within(a: &State, b: &State, weights: &SteerCost, tau_max: f64, max_cost: f64) -> Option<Motion> {
    if a == b {
        return connect(a, b, weights, tau_max).filter(|m| m.cost < max_cost);
    }
    let br = Brackets::new(a, b, weights)?;
    let (tau, cost) = best_minimum(&br, a, b, weights, max_cost / weights.time_weight)?;
    if cost >= max_cost || tau > tau_max {
        return None;
    }
    Some(Motion::with_duration(a, b, tau, weights))
}
