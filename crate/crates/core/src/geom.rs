//! Axis-aligned box workspaces, collision queries and local convex regions.

use serde::{Deserialize, Serialize};

use crate::error::{PumpError, Result};
use crate::steer::Motion;

/// Velocity magnitude below which half-spaces are left unprojected (m/s).
pub const EPS_VELOCITY: f64 = 1e-6;
/// Relative length below which a projected normal counts as vanished.
pub const EPS_PROJECTED: f64 = 1e-6;

/// Closed axis-aligned box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aabb {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Aabb {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Self { lo, hi }
    }

    pub fn dims(&self) -> usize {
        self.lo.len()
    }

    pub fn is_valid(&self) -> bool {
        self.lo.len() == self.hi.len()
            && self.lo.iter().zip(&self.hi).all(|(l, h)| l.is_finite() && h.is_finite() && l <= h)
    }

    /// Closed containment (boundary included).
    pub fn contains(&self, y: &[f64]) -> bool {
        y.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| *l <= *v && *v <= *h)
    }

    /// Strict interior containment.
    pub fn contains_strict(&self, y: &[f64]) -> bool {
        y.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| *l < *v && *v < *h)
    }

    /// Componentwise clamp, i.e. the closest point of the box to `y`.
    pub fn closest_point(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (l, h))| v.clamp(*l, *h))
            .collect()
    }

    pub fn overlaps(&self, lo: &[f64], hi: &[f64]) -> bool {
        (0..self.dims()).all(|k| self.lo[k] <= hi[k] && lo[k] <= self.hi[k])
    }

    /// Shortest edge length.
    pub fn min_extent(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).fold(f64::INFINITY, f64::min)
    }

    /// Whether the closed segment `p → q`, with the box grown by `pad` per
    /// axis, intersects the box (slab test).
    pub fn hits_segment(&self, p: &[f64], q: &[f64], pad: &[f64]) -> bool {
        let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
        for k in 0..self.dims() {
            let (lo, hi) = (self.lo[k] - pad[k], self.hi[k] + pad[k]);
            let dir = q[k] - p[k];
            if dir.abs() < 1e-300 {
                if p[k] < lo || p[k] > hi {
                    return false;
                }
            } else {
                let a = (lo - p[k]) / dir;
                let b = (hi - p[k]) / dir;
                t0 = t0.max(a.min(b));
                t1 = t1.min(a.max(b));
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }
}

/// Free space is the open interior of `bounds` minus every closed obstacle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Workspace {
    pub bounds: Aabb,
    #[serde(default)]
    pub obstacles: Vec<Aabb>,
}

impl Workspace {
    pub fn dims(&self) -> usize {
        self.bounds.dims()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.bounds.is_valid() {
            return Err(PumpError::Scenario("workspace bounds are not a valid box".into()));
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if !o.is_valid() || o.dims() != self.dims() {
                return Err(PumpError::Scenario(format!("obstacle {i} is not a valid box")));
            }
        }
        Ok(())
    }

    /// Default collision-check resolution: 1/100 of the shortest obstacle edge.
    pub fn default_resolution(&self) -> f64 {
        let shortest = self
            .obstacles
            .iter()
            .map(Aabb::min_extent)
            .filter(|e| *e > 0.0)
            .fold(f64::INFINITY, f64::min);
        if shortest.is_finite() {
            shortest / 100.0
        } else {
            self.bounds.min_extent() / 100.0
        }
    }
}

/// Whether `y` lies in free space; boundaries count as collision.
pub fn point_free(w: &Workspace, y: &[f64]) -> bool {
    w.bounds.contains_strict(y) && !w.obstacles.iter().any(|o| o.contains(y))
}

/// Whether the straight segment `p → q` stays in free space.
pub fn segment_free(w: &Workspace, p: &[f64], q: &[f64]) -> bool {
    if !w.bounds.contains_strict(p) || !w.bounds.contains_strict(q) {
        return false;
    }
    let pad = vec![0.0; p.len()];
    !w.obstacles.iter().any(|o| o.hits_segment(p, q, &pad))
}

/// Whether the nominal path of `m` touches an obstacle or leaves the bounds.
///
/// Pieces of the path are tested as chords against boxes grown by the
/// worst-case chord-to-cubic gap, so no contact is ever missed; a piece that
/// touches a grown box is halved until it is shorter than `resolution`, at
/// which point the motion is declared colliding.
pub fn motion_collides(w: &Workspace, m: &Motion, resolution: f64) -> bool {
    if m.is_identity() {
        return !point_free(w, &m.from.position);
    }
    let (lo, hi) = m.position_bounds();
    if !w.bounds.contains_strict(&lo) || !w.bounds.contains_strict(&hi) {
        return true;
    }
    let candidates: Vec<&Aabb> = w.obstacles.iter().filter(|o| o.overlaps(&lo, &hi)).collect();
    if candidates.is_empty() {
        return false;
    }
    let dims = m.from.dims();
    let umax = m.max_control();
    // Bound on speed over the motion: converts piece duration to length.
    let speed: f64 = (0..dims)
        .map(|k| m.from.velocity[k].abs().max(m.to.velocity[k].abs()) + umax[k] * m.tau / 4.0)
        .map(|s| s * s)
        .sum::<f64>()
        .sqrt();
    let min_piece = resolution.max(1e-12) / speed.max(1e-300);
    let mut pad = vec![0.0; dims];
    let mut stack = vec![(0.0, m.tau, m.from.position.clone(), m.to.position.clone())];
    while let Some((s0, s1, p0, p1)) = stack.pop() {
        let h = s1 - s0;
        for (pk, u) in pad.iter_mut().zip(&umax) {
            *pk = u * h * h / 8.0;
        }
        if !candidates.iter().any(|o| o.hits_segment(&p0, &p1, &pad)) {
            continue;
        }
        if h <= min_piece {
            return true;
        }
        let mid = 0.5 * (s0 + s1);
        let mut pm = vec![0.0; dims];
        m.position_into(mid, &mut pm);
        stack.push((mid, s1, pm.clone(), p1));
        stack.push((s0, mid, p0, pm));
    }
    false
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Vector from `y` to the closest point of the nearest obstacle not marked
/// in `excluded`, with that obstacle's index.
pub fn nearest_obstacle_vector(
    w: &Workspace,
    y: &[f64],
    excluded: &[bool],
) -> Option<(usize, Vec<f64>)> {
    let gap = |o: &Aabb, k: usize| y[k].clamp(o.lo[k], o.hi[k]) - y[k];
    let mut best: Option<(usize, f64)> = None;
    for (i, o) in w.obstacles.iter().enumerate() {
        if excluded.get(i).copied().unwrap_or(false) {
            continue;
        }
        let dist: f64 = (0..y.len()).map(|k| gap(o, k) * gap(o, k)).sum();
        if best.is_none_or(|b| dist < b.1) {
            best = Some((i, dist));
        }
    }
    best.map(|(i, _)| (i, (0..y.len()).map(|k| gap(&w.obstacles[i], k)).collect()))
}

/// Obstacle half-space in deviation coordinates: violated when `a·δy > b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub a: Vec<f64>,
    pub b: f64,
}

impl HalfSpace {
    #[inline]
    pub fn violated(&self, dy: &[f64]) -> bool {
        dot(&self.a, dy) > self.b
    }
}

/// Collision half-spaces attached to one nominal waypoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexRegion {
    pub center: Vec<f64>,
    pub halfspaces: Vec<HalfSpace>,
}

impl ConvexRegion {
    pub fn empty(center: Vec<f64>) -> Self {
        Self { center, halfspaces: Vec::new() }
    }
}

/// Projects `d` orthogonally to the direction of travel.
///
/// Falls back to the unprojected `a = d` when the speed is below
/// [`EPS_VELOCITY`] or the projection nearly vanishes (head-on approach).
pub fn project_halfspace(d: &[f64], ydot: &[f64]) -> HalfSpace {
    let vv = dot(ydot, ydot);
    let fallback = || HalfSpace { a: d.to_vec(), b: dot(d, d) };
    if vv.sqrt() < EPS_VELOCITY {
        return fallback();
    }
    let scale = dot(d, ydot) / vv;
    let a: Vec<f64> = d.iter().zip(ydot).map(|(di, vi)| di - scale * vi).collect();
    let aa = dot(&a, &a);
    if aa.sqrt() < EPS_PROJECTED * dot(d, d).sqrt() {
        return fallback();
    }
    HalfSpace { a, b: aa }
}

/// Separating directions `d_i` of the local convex region around `y`, in
/// order of discovery (non-decreasing length).
///
/// Each round takes the nearest remaining obstacle, then drops it and every
/// obstacle lying entirely in `{z : d·(z − y) ≥ d·d}`.
pub fn separating_directions(w: &Workspace, y: &[f64]) -> Result<Vec<Vec<f64>>> {
    if !point_free(w, y) {
        return Err(PumpError::WaypointInCollision(y.to_vec()));
    }
    let mut pruned = vec![false; w.obstacles.len()];
    let mut out = Vec::new();
    while let Some((j, d)) = nearest_obstacle_vector(w, y, &pruned) {
        pruned[j] = true;
        let dd = dot(&d, &d);
        for (i, o) in w.obstacles.iter().enumerate() {
            if pruned[i] {
                continue;
            }
            // Smallest value of d·(z − y) over the box corners.
            let low: f64 = (0..y.len())
                .map(|k| (d[k] * (o.lo[k] - y[k])).min(d[k] * (o.hi[k] - y[k])))
                .sum();
            if low >= dd {
                pruned[i] = true;
            }
        }
        out.push(d);
    }
    Ok(out)
}

/// Local convex region at `y_nom` with half-spaces projected for velocity `ydot`.
pub fn local_convex_region(w: &Workspace, y_nom: &[f64], ydot: &[f64]) -> Result<ConvexRegion> {
    let halfspaces = separating_directions(w, y_nom)?
        .iter()
        .map(|d| project_halfspace(d, ydot))
        .collect();
    Ok(ConvexRegion { center: y_nom.to_vec(), halfspaces })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steer::{connect, SteerCost, State};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cube_world(obstacles: Vec<Aabb>) -> Workspace {
        Workspace { bounds: Aabb::new(vec![-10.0; 3], vec![10.0; 3]), obstacles }
    }

    fn unit_box(lo: [f64; 3], hi: [f64; 3]) -> Aabb {
        Aabb::new(lo.to_vec(), hi.to_vec())
    }

    #[test]
    fn point_queries() {
        let w = cube_world(vec![]);
        assert!(point_free(&w, &[0.0, 0.0, 0.0]));
        assert!(!point_free(&w, &[11.0, 0.0, 0.0]));
        assert!(!point_free(&w, &[10.0, 0.0, 0.0]));
        let w = cube_world(vec![unit_box([1.0, 1.0, 1.0], [2.0, 2.0, 2.0])]);
        assert!(!point_free(&w, &[1.0, 1.0, 1.0]));
        assert!(point_free(&w, &[0.999, 1.0, 1.0]));
    }

    #[test]
    fn nearest_vector_clamp() {
        let w = cube_world(vec![unit_box([1.0, -1.0, -1.0], [2.0, 1.0, 1.0])]);
        let (i, d) = nearest_obstacle_vector(&w, &[0.0, 0.0, 0.0], &[]).unwrap();
        assert_eq!(i, 0);
        assert_eq!(d, vec![1.0, 0.0, 0.0]);
        assert!(nearest_obstacle_vector(&w, &[0.0; 3], &[true]).is_none());
    }

    #[test]
    fn nearest_vector_surface_oracle() {
        // Corner-adjacent geometry, brute force over surface samples.
        let bx = unit_box([0.5, 0.3, -2.0], [1.5, 1.1, 0.4]);
        let w = cube_world(vec![bx.clone()]);
        let y = [0.1, -0.2, 0.9];
        let (_, d) = nearest_obstacle_vector(&w, &y, &[]).unwrap();
        // ~10⁶ points on a regular grid over each face (edges included).
        let m = 408;
        let mut best = f64::INFINITY;
        for axis in 0..3 {
            let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
            for side in [bx.lo[axis], bx.hi[axis]] {
                for i in 0..=m {
                    for j in 0..=m {
                        let mut z = [0.0; 3];
                        z[axis] = side;
                        z[u] = bx.lo[u] + (bx.hi[u] - bx.lo[u]) * i as f64 / m as f64;
                        z[v] = bx.lo[v] + (bx.hi[v] - bx.lo[v]) * j as f64 / m as f64;
                        let dist = (0..3).map(|k| (z[k] - y[k]).powi(2)).sum::<f64>().sqrt();
                        best = best.min(dist);
                    }
                }
            }
        }
        assert!((dot(&d, &d).sqrt() - best).abs() < 1e-3);
    }

    #[test]
    fn projection_examples() {
        let h = project_halfspace(&[1.0, 0.0, 0.0], &[0.0, 2.0, 0.0]);
        assert_eq!((h.a, h.b), (vec![1.0, 0.0, 0.0], 1.0));
        let h = project_halfspace(&[1.0, 1.0, 0.0], &[0.0, 1.0, 0.0]);
        assert_eq!((h.a, h.b), (vec![1.0, 0.0, 0.0], 1.0));
        let h = project_halfspace(&[1.0, 0.0, 0.0], &[3.0, 0.0, 0.0]);
        assert_eq!((h.a, h.b), (vec![1.0, 0.0, 0.0], 1.0));
        let h = project_halfspace(&[1.0, 0.5, 0.0], &[0.0, 0.0, 0.0]);
        assert_eq!((h.a, h.b), (vec![1.0, 0.5, 0.0], 1.25));
    }

    #[test]
    fn region_single_and_opposite() {
        let w = cube_world(vec![unit_box([1.0, -1.0, -1.0], [2.0, 1.0, 1.0])]);
        let r = local_convex_region(&w, &[0.0; 3], &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(r.halfspaces.len(), 1);

        let w = cube_world(vec![
            unit_box([2.0, -1.0, -1.0], [3.0, 1.0, 1.0]),
            unit_box([-2.0, -1.0, -1.0], [-1.0, 1.0, 1.0]),
        ]);
        let dirs = separating_directions(&w, &[0.0; 3]).unwrap();
        assert_eq!(dirs, vec![vec![-1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0]]);
        assert!(local_convex_region(&w, &[2.5, 0.0, 0.0], &[0.0; 3]).is_err());
    }

    #[test]
    fn shadowed_obstacle_is_pruned() {
        let w = cube_world(vec![
            unit_box([1.0, -1.0, -1.0], [2.0, 1.0, 1.0]),
            unit_box([3.0, -0.5, -0.5], [4.0, 0.5, 0.5]),
        ]);
        let dirs = separating_directions(&w, &[0.0; 3]).unwrap();
        assert_eq!(dirs.len(), 1);
    }

    #[test]
    fn random_worlds_prune_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let obstacles: Vec<Aabb> = (0..10)
                .map(|_| {
                    let c: Vec<f64> = (0..3).map(|_| rng.random_range(-8.0..8.0)).collect();
                    let e: Vec<f64> = (0..3).map(|_| rng.random_range(0.2..2.0)).collect();
                    Aabb::new(
                        c.iter().zip(&e).map(|(c, e)| c - e).collect(),
                        c.iter().zip(&e).map(|(c, e)| c + e).collect(),
                    )
                })
                .collect();
            let w = cube_world(obstacles);
            let y: Vec<f64> = loop {
                let y: Vec<f64> = (0..3).map(|_| rng.random_range(-9.0..9.0)).collect();
                if point_free(&w, &y) {
                    break y;
                }
            };
            let dirs = separating_directions(&w, &y).unwrap();
            assert!(dirs.len() <= 10);
            // Every obstacle lies (all corners) beyond some half-space.
            for o in &w.obstacles {
                let excluded = dirs.iter().any(|d| {
                    let dd = dot(d, d);
                    (0..8).all(|mask: usize| {
                        let z: Vec<f64> = (0..3)
                            .map(|k| if mask >> k & 1 == 1 { o.hi[k] } else { o.lo[k] })
                            .collect();
                        let rel: Vec<f64> = z.iter().zip(&y).map(|(a, b)| a - b).collect();
                        dot(d, &rel) >= dd * (1.0 - 1e-12)
                    })
                });
                assert!(excluded);
            }
            for pair in dirs.windows(2) {
                assert!(dot(&pair[0], &pair[0]) <= dot(&pair[1], &pair[1]) + 1e-12);
            }
        }
    }

    #[test]
    fn straight_pass_collides() {
        let w = cube_world(vec![unit_box([-0.5, -0.5, -0.5], [0.5, 0.5, 0.5])]);
        let m = connect(
            &State::at_rest(vec![-3.0, 0.0, 0.0]),
            &State::at_rest(vec![3.0, 0.0, 0.0]),
            &SteerCost::default(),
            100.0,
        )
        .unwrap();
        assert!(motion_collides(&w, &m, 0.01));
        assert!(!motion_collides(&cube_world(vec![]), &m, 0.01));
    }
}
