use rayon::prelude::*;

use super::{CpEstimate, CpMethod, ParticleMask};
use crate::bank::{presample_range, DeviationBank};
use crate::error::{PumpError, Result};
use crate::geom::{ConvexRegion, HalfSpace};
use crate::lti::ClosedLoop;

/// Half-spaces of consecutive waypoints packed into flat arrays.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PackedRegions {
    dims: usize,
    offsets: Vec<u32>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PackedRegions {
    pub fn new(dims: usize) -> Self {
        Self { dims, offsets: vec![0], a: Vec::new(), b: Vec::new() }
    }

    pub fn from_regions(dims: usize, regions: &[ConvexRegion]) -> Self {
        let mut out = Self::new(dims);
        for r in regions {
            out.push(&r.halfspaces);
        }
        out
    }

    /// Appends the half-spaces of the next waypoint.
    pub fn push(&mut self, halfspaces: &[HalfSpace]) {
        for h in halfspaces {
            debug_assert_eq!(h.a.len(), self.dims);
            self.a.extend_from_slice(&h.a);
            self.b.push(h.b);
        }
        self.offsets.push(self.b.len() as u32);
    }

    /// Number of waypoints.
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn halfspace_count(&self) -> usize {
        self.b.len()
    }

    /// Normals (row-major, `dims` per half-space) and offsets at waypoint `k`.
    pub fn waypoint(&self, k: usize) -> (&[f64], &[f64]) {
        let (lo, hi) = (self.offsets[k] as usize, self.offsets[k + 1] as usize);
        (&self.a[lo * self.dims..hi * self.dims], &self.b[lo..hi])
    }

    pub fn unpack(&self, center: impl Fn(usize) -> Vec<f64>) -> Vec<ConvexRegion> {
        (0..self.len())
            .map(|k| {
                let (a, b) = self.waypoint(k);
                let halfspaces = a
                    .chunks(self.dims)
                    .zip(b)
                    .map(|(a, &b)| HalfSpace { a: a.to_vec(), b })
                    .collect();
                ConvexRegion { center: center(k), halfspaces }
            })
            .collect()
    }
}

/// Clears the bit of every live particle whose deviation at `step` violates
/// any half-space `normals[j]·δy > offsets[j]` (normals row-major).
pub fn kill_packed(mask: &mut ParticleMask, bank: &DeviationBank, step: usize, normals: &[f64], offsets: &[f64]) {
    if offsets.is_empty() {
        return;
    }
    let n = bank.n_particles();
    let dims = bank.dims();
    let axes: Vec<&[f64]> = (0..dims).map(|k| bank.axis(step, k)).collect();
    let mut dots = [0.0f64; 64];
    for (w, word) in mask.words_mut().iter_mut().enumerate() {
        if *word == 0 {
            continue;
        }
        let base = w * 64;
        let len = (n - base).min(64);
        let mut dead = 0u64;
        for (a, &b) in normals.chunks_exact(dims).zip(offsets) {
            let buf = &mut dots[..len];
            buf.fill(0.0);
            for (col, &ak) in axes.iter().zip(a) {
                for (acc, &dy) in buf.iter_mut().zip(&col[base..base + len]) {
                    *acc += ak * dy;
                }
            }
            for (j, &v) in buf.iter().enumerate() {
                dead |= ((v > b) as u64) << j;
            }
        }
        *word &= !dead;
    }
}

/// [`kill_packed`] for a list of half-spaces.
pub fn kill_violators(mask: &mut ParticleMask, bank: &DeviationBank, step: usize, halfspaces: &[HalfSpace]) {
    let normals: Vec<f64> = halfspaces.iter().flat_map(|h| h.a.iter().copied()).collect();
    let offsets: Vec<f64> = halfspaces.iter().map(|h| h.b).collect();
    kill_packed(mask, bank, step, &normals, &offsets);
}

/// Extends a survival mask over consecutive waypoints; waypoint `k` of
/// `regions` is checked at global step `first_step + k`.
///
/// The input mask is left untouched so sibling plans can share it.
pub fn hsmc_extend_packed(
    mask: &ParticleMask,
    bank: &DeviationBank,
    first_step: usize,
    regions: &PackedRegions,
) -> Result<(ParticleMask, f64)> {
    if mask.len() != bank.n_particles() {
        return Err(PumpError::Dimension("mask size differs from bank".into()));
    }
    if !regions.is_empty() {
        let last = first_step + regions.len() - 1;
        if last > bank.horizon() {
            return Err(PumpError::HorizonOverflow { step: last, horizon: bank.horizon() });
        }
    }
    let mut out = mask.clone();
    for k in 0..regions.len() {
        if out.alive() == 0 {
            break;
        }
        let (a, b) = regions.waypoint(k);
        kill_packed(&mut out, bank, first_step + k, a, b);
    }
    let cp = out.cp_hat();
    Ok((out, cp))
}

/// [`hsmc_extend_packed`] for unpacked regions.
pub fn hsmc_extend(
    mask: &ParticleMask,
    bank: &DeviationBank,
    first_step: usize,
    regions: &[ConvexRegion],
) -> Result<(ParticleMask, f64)> {
    hsmc_extend_packed(mask, bank, first_step, &PackedRegions::from_regions(bank.dims(), regions))
}

/// Stand-alone HSMC estimate of a whole trajectory whose waypoint `t` carries
/// `regions[t]`, streaming the particle bank in chunks so large `n` stays in
/// bounded memory.
pub fn hsmc_estimate(
    closed_loop: &ClosedLoop,
    regions: &[ConvexRegion],
    n: usize,
    seed: u64,
) -> Result<CpEstimate> {
    if n == 0 {
        return Err(PumpError::InvalidParameter { name: "particles", reason: "must be ≥ 1".into() });
    }
    if regions.is_empty() {
        return Ok(CpEstimate { value: 0.0, method: CpMethod::Hsmc, samples: Some(n) });
    }
    const CHUNK: usize = 4096;
    let horizon = regions.len() - 1;
    let chunks: Vec<usize> = (0..n.div_ceil(CHUNK)).collect();
    let dead: usize = chunks
        .into_par_iter()
        .map(|c| {
            let range = c * CHUNK..((c + 1) * CHUNK).min(n);
            let bank = presample_range(closed_loop, horizon.max(1), range.clone(), seed);
            let mut mask = ParticleMask::full(range.len());
            for (t, region) in regions.iter().enumerate() {
                kill_violators(&mut mask, &bank, t, &region.halfspaces);
            }
            range.len() - mask.alive()
        })
        .sum();
    Ok(CpEstimate { value: dead as f64 / n as f64, method: CpMethod::Hsmc, samples: Some(n) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_dim_bank(values: &[Vec<f64>]) -> DeviationBank {
        let table: Vec<Vec<Vec<f64>>> =
            values.iter().map(|traj| traj.iter().map(|v| vec![*v]).collect()).collect();
        DeviationBank::from_table(&table, 0).unwrap()
    }

    fn wall(b: f64) -> ConvexRegion {
        ConvexRegion { center: vec![0.0], halfspaces: vec![HalfSpace { a: vec![1.0], b }] }
    }

    #[test]
    fn four_particle_example() {
        let bank = one_dim_bank(&[vec![2.0], vec![-1.0], vec![0.5], vec![3.0]]);
        let mask = ParticleMask::full(4);
        let (out, cp) = hsmc_extend(&mask, &bank, 0, &[wall(1.0)]).unwrap();
        assert_eq!(cp, 0.5);
        assert!(!out.is_alive(0) && out.is_alive(1) && out.is_alive(2) && !out.is_alive(3));
        assert_eq!(mask.alive(), 4, "input mask must not change");
    }

    #[test]
    fn empty_regions_keep_mask() {
        let bank = one_dim_bank(&[vec![5.0, 5.0], vec![5.0, 5.0]]);
        let mask = ParticleMask::full(2);
        let empty = ConvexRegion::empty(vec![0.0]);
        let (out, cp) = hsmc_extend(&mask, &bank, 0, &[empty.clone(), empty]).unwrap();
        assert_eq!(out, mask);
        assert_eq!(cp, 0.0);
    }

    #[test]
    fn horizon_overflow_is_reported() {
        let bank = one_dim_bank(&[vec![0.0, 0.0]]);
        let err = hsmc_extend(&ParticleMask::full(1), &bank, 1, &[wall(1.0), wall(1.0)]).unwrap_err();
        assert!(matches!(err, PumpError::HorizonOverflow { step: 2, horizon: 1 }));
    }

    #[test]
    fn kernel_matches_scalar_rule_across_word_boundaries() {
        let n = 150;
        let values: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![((i * 37 % 101) as f64 / 50.0) - 1.0, ((i * 11 % 7) as f64) - 3.0])
            .collect();
        let table: Vec<Vec<Vec<f64>>> = values.iter().map(|v| vec![v.clone()]).collect();
        let bank = DeviationBank::from_table(&table, 0).unwrap();
        let hs = vec![HalfSpace { a: vec![1.0, 0.5], b: 0.3 }, HalfSpace { a: vec![-1.0, 0.0], b: 0.8 }];
        let mut mask = ParticleMask::full(n);
        kill_violators(&mut mask, &bank, 0, &hs);
        for (i, v) in values.iter().enumerate() {
            let dies = hs.iter().any(|h| h.violated(v));
            assert_eq!(mask.is_alive(i), !dies, "particle {i}");
        }
    }

    proptest! {
        #[test]
        fn monotone_and_prefix_consistent(
            table in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 6), 1..80),
            bs in prop::collection::vec(0.2f64..3.0, 6),
            split in 0usize..6,
        ) {
            let bank = one_dim_bank(&table);
            let n = table.len();
            let regions: Vec<ConvexRegion> = bs.iter().map(|&b| wall(b)).collect();
            let full = ParticleMask::full(n);
            let (whole, cp_whole) = hsmc_extend(&full, &bank, 0, &regions).unwrap();
            let (head, cp_head) = hsmc_extend(&full, &bank, 0, &regions[..split]).unwrap();
            let (tail, cp_tail) = hsmc_extend(&head, &bank, split, &regions[split..]).unwrap();
            prop_assert!(cp_tail >= cp_head);
            prop_assert_eq!(cp_whole, cp_tail);
            prop_assert_eq!(whole, tail);
        }
    }
}
