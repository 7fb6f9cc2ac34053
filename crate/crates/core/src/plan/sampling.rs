use super::GoalRegion;
use crate::error::{PumpError, Result};
use crate::geom::{point_free, Workspace};
use crate::steer::State;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in `base` (the Halton coordinate).
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let inv = 1.0 / base as f64;
    while index > 0 {
        f *= inv;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

fn halton_state(index: u64, dims: usize, lo: &[f64], hi: &[f64], vmax: f64) -> State {
    let position = (0..dims).map(|k| lo[k] + (hi[k] - lo[k]) * halton(index, PRIMES[k])).collect();
    let velocity =
        (0..dims).map(|k| vmax * (2.0 * halton(index, PRIMES[dims + k]) - 1.0)).collect();
    State::new(position, velocity)
}

/// `n` collision-free states from the Halton sequence (positions over the
/// workspace bounds, velocities over `[-max_speed, max_speed]` per axis).
///
/// If none lands in the goal region, one goal state is appended, drawn by
/// mapping the sequence into the goal box with a velocity inside the cap.
pub fn sample_free(n: usize, w: &Workspace, max_speed: f64, goal: &GoalRegion) -> Result<Vec<State>> {
    let dims = w.dims();
    if 2 * dims > PRIMES.len() {
        return Err(PumpError::Dimension(format!("{dims} workspace axes are not supported")));
    }
    if n == 0 {
        return Err(PumpError::InvalidParameter { name: "samples", reason: "must be ≥ 1".into() });
    }
    let mut out = Vec::with_capacity(n + 1);
    let limit = 1000 * n as u64 + 10_000;
    let mut index = 1;
    while out.len() < n {
        if index > limit {
            return Err(PumpError::InvalidParameter {
                name: "workspace",
                reason: "free space too small to place samples".into(),
            });
        }
        let x = halton_state(index, dims, &w.bounds.lo, &w.bounds.hi, max_speed);
        index += 1;
        if point_free(w, &x.position) {
            out.push(x);
        }
    }
    if !out.iter().any(|x| goal.contains(x)) {
        let cap = goal.max_speed / (dims as f64).sqrt();
        let found = (1..=1000)
            .map(|i| halton_state(i, dims, &goal.lo, &goal.hi, cap))
            .find(|x| point_free(w, &x.position) && goal.contains(x));
        out.push(found.ok_or(PumpError::GoalUnreachable)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Aabb;

    fn world(obstacles: Vec<Aabb>) -> Workspace {
        Workspace { bounds: Aabb::new(vec![0.0, 0.0], vec![1.0, 1.0]), obstacles }
    }

    fn goal() -> GoalRegion {
        GoalRegion { lo: vec![0.9, 0.9], hi: vec![1.0, 1.0], max_speed: 0.1 }
    }

    #[test]
    fn radical_inverse() {
        assert_eq!(halton(1, 2), 0.5);
        assert_eq!(halton(2, 2), 0.25);
        assert_eq!(halton(3, 2), 0.75);
        assert!((halton(1, 3) - 1.0 / 3.0).abs() < 1e-15);
        assert!((halton(5, 3) - (2.0 / 3.0 + 1.0 / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn first_point_and_goal_append() {
        let s = sample_free(1, &world(vec![]), 1.0, &goal()).unwrap();
        assert_eq!(s[0].position, vec![0.5, 1.0 / 3.0]);
        assert_eq!(s[0].velocity, vec![2.0 * 0.2 - 1.0, 2.0 / 7.0 - 1.0]);
        assert_eq!(s.len(), 2);
        assert!(goal().contains(&s[1]));
    }

    #[test]
    fn deterministic() {
        let w = world(vec![Aabb::new(vec![0.3, 0.3], vec![0.6, 0.6])]);
        assert_eq!(sample_free(200, &w, 1.0, &goal()).unwrap(), sample_free(200, &w, 1.0, &goal()).unwrap());
    }

    #[test]
    fn rejects_obstacles() {
        let w = world(vec![Aabb::new(vec![-1.0, -1.0], vec![0.5, 2.0])]);
        let s = sample_free(300, &w, 1.0, &goal()).unwrap();
        assert!(s.iter().all(|x| x.position[0] > 0.5));
    }

    #[test]
    fn sealed_goal_fails() {
        let w = world(vec![Aabb::new(vec![0.85, 0.85], vec![1.5, 1.5])]);
        assert!(matches!(sample_free(50, &w, 1.0, &goal()), Err(PumpError::GoalUnreachable)));
    }
}
