use smallvec::{smallvec, SmallVec};

/// Survival bitset over the particles of a deviation bank.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParticleMask {
    n: usize,
    words: SmallVec<[u64; 2]>,
}

impl ParticleMask {
    /// All `n` particles alive.
    pub fn full(n: usize) -> Self {
        let mut words: SmallVec<[u64; 2]> = smallvec![u64::MAX; n.div_ceil(64)];
        if !n.is_multiple_of(64) {
            *words.last_mut().unwrap() = (1u64 << (n % 64)) - 1;
        }
        Self { n, words }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn alive(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_alive(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn kill(&mut self, i: usize) {
        self.words[i / 64] &= !(1u64 << (i % 64));
    }

    /// `1 − alive / N`.
    pub fn cp_hat(&self) -> f64 {
        1.0 - self.alive() as f64 / self.n as f64
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub(crate) fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_mask_counts() {
        for n in [1, 63, 64, 65, 128, 200] {
            let m = ParticleMask::full(n);
            assert_eq!(m.alive(), n);
            assert_eq!(m.cp_hat(), 0.0);
        }
        let mut m = ParticleMask::full(4);
        m.kill(0);
        m.kill(3);
        assert_eq!(m.cp_hat(), 0.5);
        assert!(!m.is_alive(3) && m.is_alive(1));
    }
}
