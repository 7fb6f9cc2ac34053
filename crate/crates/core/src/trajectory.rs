//! Piecewise-cubic nominal trajectories sampled at waypoints.
//!
//! Between two consecutive waypoints the nominal is the minimum-effort cubic
//! joining them, so the waypoint list alone reproduces the whole trajectory
//! and can be resampled exactly.

use serde::{Deserialize, Serialize};

use crate::steer::{self, Motion, SteerCost, State, Waypoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Trajectory {
    pub points: Vec<Waypoint>,
}

impl Trajectory {
    pub fn new(points: Vec<Waypoint>) -> Self {
        Self { points }
    }

    /// Concatenates motions, sampling each at `dt`; junction waypoints appear once.
    pub fn from_motions<'a, I>(start: &State, motions: I, dt: f64) -> Self
    where
        I: IntoIterator<Item = &'a Motion>,
    {
        let mut points = vec![Waypoint { t: 0.0, state: start.clone(), control: vec![0.0; start.dims()] }];
        let mut t0 = 0.0;
        for m in motions {
            if m.is_identity() {
                continue;
            }
            let wps = steer::waypoints(m, dt);
            if let Some(last) = points.last_mut() {
                last.control = wps[0].control.clone();
            }
            for wp in wps.into_iter().skip(1) {
                points.push(Waypoint { t: t0 + wp.t, ..wp });
            }
            t0 += m.tau;
        }
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.t - self.points[0].t)
    }

    pub fn start(&self) -> &State {
        &self.points[0].state
    }

    pub fn end(&self) -> &State {
        &self.points.last().expect("empty trajectory").state
    }

    /// Nominal state at time `t` (clamped to the trajectory span).
    pub fn state_at(&self, t: f64) -> State {
        let pts = &self.points;
        if t <= pts[0].t {
            return pts[0].state.clone();
        }
        let last = pts.last().unwrap();
        if t >= last.t {
            return last.state.clone();
        }
        let j = pts.partition_point(|p| p.t <= t);
        let (a, b) = (&pts[j - 1], &pts[j]);
        Motion::with_duration(&a.state, &b.state, b.t - a.t, &SteerCost::default()).state_at(t - a.t)
    }

    /// Resamples at `intervals + 1` evenly spaced times spanning the trajectory.
    pub fn resample_uniform(&self, intervals: usize) -> Trajectory {
        assert!(intervals >= 1);
        let (t0, span) = (self.points[0].t, self.duration());
        let pts = &self.points;
        let mut out = Vec::with_capacity(intervals + 1);
        for i in 0..=intervals {
            let t = if i == intervals { t0 + span } else { t0 + span * i as f64 / intervals as f64 };
            let j = pts.partition_point(|p| p.t <= t).clamp(1, pts.len() - 1);
            let (a, b) = (&pts[j - 1], &pts[j]);
            let m = Motion::with_duration(&a.state, &b.state, b.t - a.t, &SteerCost::default());
            let s = t - a.t;
            let state = if i == intervals { self.end().clone() } else { m.state_at(s) };
            out.push(Waypoint { t: t - t0, state, control: m.control_at(s) });
        }
        Trajectory { points: out }
    }

    /// Cost `w_t T + w_u ∫|u|²` of the piecewise-cubic nominal.
    pub fn cost(&self, weights: &SteerCost) -> f64 {
        let effort: f64 = self
            .points
            .windows(2)
            .filter(|w| w[1].t > w[0].t)
            .map(|w| steer::effort(&w[0].state, &w[1].state, w[1].t - w[0].t))
            .sum();
        weights.time_weight * self.duration() + weights.control_weight * effort
    }

    pub fn positions(&self) -> impl Iterator<Item = &[f64]> {
        self.points.iter().map(|p| p.state.position.as_slice())
    }
}
