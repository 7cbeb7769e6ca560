//! Incremental GF(2) row reduction over packed bit vectors.

/// Span of a set of GF(2) vectors, kept in echelon form keyed by pivot bit.
#[derive(Debug, Clone)]
pub struct Gf2Span {
    words: usize,
    rows: Vec<(usize, Vec<u64>)>,
}

impl Gf2Span {
    pub fn new(bits: usize) -> Self {
        Self {
            words: bits.div_ceil(64),
            rows: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `v` against the current rows.
    pub fn reduce(&self, v: &[u64]) -> Vec<u64> {
        assert_eq!(v.len(), self.words, "vector width");
        let mut v = v.to_vec();
        for (pivot, row) in &self.rows {
            if v[pivot / 64] >> (pivot % 64) & 1 == 1 {
                for (a, b) in v.iter_mut().zip(row) {
                    *a ^= b;
                }
            }
        }
        v
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        self.reduce(v).iter().all(|&w| w == 0)
    }

    /// Adds `v` to the span; returns `false` if it was already dependent.
    pub fn insert(&mut self, v: &[u64]) -> bool {
        let r = self.reduce(v);
        let Some(pivot) = first_set_bit(&r) else {
            return false;
        };
        // keep rows fully reduced on the new pivot so `reduce` stays single-pass
        for (_, row) in self.rows.iter_mut() {
            if row[pivot / 64] >> (pivot % 64) & 1 == 1 {
                for (a, b) in row.iter_mut().zip(&r) {
                    *a ^= b;
                }
            }
        }
        self.rows.push((pivot, r));
        true
    }
}

fn first_set_bit(v: &[u64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .find(|(_, &w)| w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}
