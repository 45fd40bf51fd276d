//! Epoch-based minibatch sampling: a random permutation consumed in chunks,
//! reshuffled when exhausted. Sampling within a batch is without
//! replacement, and one epoch's batches partition the index set.

use crate::error::{Error, Result};
use crate::numkit::RngStream;

use super::Batch;

#[derive(Clone, Debug)]
pub struct BatchSampler {
    n: usize,
    size: usize,
    perm: Vec<usize>,
    pos: usize,
    rng: RngStream,
}

impl BatchSampler {
    pub fn new(n: usize, size: usize, rng: RngStream) -> Result<BatchSampler> {
        if size == 0 || size > n {
            return Err(Error::invalid(format!(
                "batch size {size} must satisfy 1 <= size <= n = {n}"
            )));
        }
        let mut s = BatchSampler {
            n,
            size,
            perm: (0..n).collect(),
            pos: 0,
            rng,
        };
        s.shuffle();
        Ok(s)
    }

    fn shuffle(&mut self) {
        for i in (1..self.n).rev() {
            let j = self.rng.next_index(i + 1);
            self.perm.swap(i, j);
        }
        self.pos = 0;
    }

    /// Next chunk of the current epoch's permutation; the final chunk of an
    /// epoch may be shorter when `size` does not divide `n`.
    pub fn next_batch(&mut self) -> Batch {
        if self.pos >= self.n {
            self.shuffle();
        }
        let end = (self.pos + self.size).min(self.n);
        let batch = Batch::new(self.perm[self.pos..end].to_vec(), self.n)
            .expect("permutation chunks are valid batches");
        self.pos = end;
        batch
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_batch_is_whole_index_set() {
        let mut s = BatchSampler::new(6, 6, RngStream::new(1)).unwrap();
        let mut idx = s.next_batch().indices().to_vec();
        idx.sort_unstable();
        assert_eq!(idx, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn same_seed_reproduces_batch_sequence() {
        let mut a = BatchSampler::new(17, 5, RngStream::new(42)).unwrap();
        let mut b = BatchSampler::new(17, 5, RngStream::new(42)).unwrap();
        for _ in 0..10 {
            assert_eq!(a.next_batch(), b.next_batch());
        }
    }

    #[test]
    fn one_epoch_partitions_indices() {
        let n = 23;
        let size = 5;
        let mut s = BatchSampler::new(n, size, RngStream::new(7)).unwrap();
        let mut seen = Vec::new();
        let batches = n.div_ceil(size);
        for _ in 0..batches {
            seen.extend_from_slice(s.next_batch().indices());
        }
        seen.sort_unstable();
        assert_eq!(seen, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn oversized_batch_is_rejected() {
        assert!(BatchSampler::new(4, 5, RngStream::new(0)).is_err());
        assert!(BatchSampler::new(4, 0, RngStream::new(0)).is_err());
    }
}
