//! The circulant communication graph: skips, baseblocks and skip sequences.
//!
//! All collectives in this crate communicate over the same directed graph on
//! `p` nodes in which node `r` has an outgoing edge to `(r + sigma[k]) mod p`
//! for each of the `q = ceil(log2 p)` skips `sigma[k]`. The skips are obtained
//! by repeated halving of `p` with rounding up, so `sigma[0] = 1` and
//! `sigma[1] = 2` for every `p > 1`. Every rank `r` is reachable from rank 0
//! along a strictly increasing sequence of distinct skips summing to `r`; the
//! smallest index of the canonical such sequence is the rank's *baseblock*,
//! the one non-negative block it receives within its first `q` rounds.

use crate::error::Error;

/// Largest supported number of skips; `p` fits in a usize so `q <= 64`.
pub(crate) const MAX_Q: usize = usize::BITS as usize;

pub(crate) fn ceil_log2(p: usize) -> usize {
    if p <= 1 {
        0
    } else {
        (usize::BITS - (p - 1).leading_zeros()) as usize
    }
}

/// A `p`-processor circulant graph: the skip table and neighbor maps.
///
/// `sigma` has `q + 1` entries with `sigma[q] = p`; the extra top entry is
/// needed by the schedule search. For `p = 1` the table degenerates to
/// `[1]` with `q = 0` and every operation on it is a no-op.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    p: usize,
    q: usize,
    sigma: Vec<usize>,
}

impl Topology {
    /// Compute the skips for a `p`-processor graph by repeated halving,
    /// in exactly `q` iterations.
    pub fn new(p: usize) -> Result<Self, Error> {
        if p == 0 {
            return Err(Error::ZeroProcessors);
        }
        let q = ceil_log2(p);
        let mut sigma = vec![0usize; q + 1];
        sigma[q] = p;
        let mut k = q;
        while k > 0 {
            sigma[k - 1] = sigma[k] - sigma[k] / 2;
            k -= 1;
        }
        Ok(Topology { p, q, sigma })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of rounds per phase, `ceil(log2 p)`.
    pub fn q(&self) -> usize {
        self.q
    }

    /// The skip table `sigma[0..=q]`, including `sigma[q] = p`.
    pub fn skips(&self) -> &[usize] {
        &self.sigma
    }

    pub fn skip(&self, k: usize) -> usize {
        self.sigma[k]
    }

    /// To-processor of rank `r` in round `k`: `(r + sigma[k]) mod p`.
    pub fn to_neighbor(&self, r: usize, k: usize) -> usize {
        (r + self.sigma[k]) % self.p
    }

    /// From-processor of rank `r` in round `k`: `(r - sigma[k] + p) mod p`.
    pub fn from_neighbor(&self, r: usize, k: usize) -> usize {
        (r + self.p - self.sigma[k]) % self.p
    }

    fn check_rank(&self, r: usize) -> Result<(), Error> {
        if r < self.p {
            Ok(())
        } else {
            Err(Error::RankOutOfRange { rank: r, p: self.p })
        }
    }

    /// Smallest skip index of `r`'s canonical skip sequence, found by greedy
    /// descent from the largest skip. Only `r = 0` returns `q`.
    pub fn baseblock(&self, r: usize) -> Result<usize, Error> {
        self.check_rank(r)?;
        let mut acc = 0usize;
        for k in (0..self.q).rev() {
            let reach = acc + self.sigma[k];
            if reach == r {
                return Ok(k);
            }
            if reach < r {
                acc = reach;
            }
        }
        Ok(self.q)
    }

    /// The canonical skip sequence for `r`: strictly increasing distinct skip
    /// indices whose skips sum to `r`, chosen largest-skip-first. Empty
    /// exactly when `r = 0`.
    pub fn canonical_skip_sequence(&self, r: usize) -> Result<SkipSequence, Error> {
        self.check_rank(r)?;
        let mut indices = Vec::new();
        let mut acc = 0usize;
        for k in (0..self.q).rev() {
            let reach = acc + self.sigma[k];
            if reach == r {
                indices.push(k);
                acc = reach;
                break;
            }
            if reach < r {
                indices.push(k);
                acc = reach;
            }
        }
        debug_assert_eq!(acc, r, "every rank below p decomposes into skips");
        indices.reverse();
        Ok(SkipSequence { indices, target: r })
    }

    /// Baseblocks for all ranks in `O(p)` total time by the doubling-list
    /// construction: append the list to itself (dropping the overhang), then
    /// bump the front entry. Entry `r` equals `baseblock(r)`.
    pub fn baseblock_sequence(&self) -> Vec<usize> {
        let mut seq = Vec::with_capacity(self.p);
        seq.push(0usize);
        for k in 0..self.q {
            let target = self.sigma[k + 1];
            for i in 0..target - seq.len() {
                seq.push(seq[i]);
            }
            seq[0] = k + 1;
        }
        seq
    }
}

/// A strictly increasing sequence of distinct skip indices whose skips sum to
/// `target`; a path from rank 0 to rank `target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkipSequence {
    pub indices: Vec<usize>,
    pub target: usize,
}

impl SkipSequence {
    pub fn sum_over(&self, topo: &Topology) -> usize {
        self.indices.iter().map(|&e| topo.skip(e)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skips_by_halving() {
        assert_eq!(Topology::new(11).unwrap().skips(), &[1, 2, 3, 6, 11]);
        assert_eq!(Topology::new(2).unwrap().skips(), &[1, 2]);
        assert_eq!(Topology::new(17).unwrap().skips(), &[1, 2, 3, 5, 9, 17]);
        assert_eq!(Topology::new(18).unwrap().skips(), &[1, 2, 3, 5, 9, 18]);
        assert_eq!(Topology::new(9).unwrap().skips(), &[1, 2, 3, 5, 9]);
    }

    #[test]
    fn zero_processors_rejected() {
        assert_eq!(Topology::new(0), Err(Error::ZeroProcessors));
    }

    #[test]
    fn single_processor_degenerates() {
        let topo = Topology::new(1).unwrap();
        assert_eq!(topo.q(), 0);
        assert_eq!(topo.skips(), &[1]);
        assert_eq!(topo.baseblock(0).unwrap(), 0);
        assert!(topo.canonical_skip_sequence(0).unwrap().indices.is_empty());
        assert_eq!(topo.baseblock_sequence(), vec![0]);
    }

    #[test]
    fn baseblock_examples() {
        let t17 = Topology::new(17).unwrap();
        assert_eq!(t17.baseblock(0).unwrap(), 5);
        assert_eq!(t17.baseblock(1).unwrap(), 0);
        assert_eq!(t17.baseblock(3).unwrap(), 2);
        assert_eq!(t17.baseblock(9).unwrap(), 4);
        assert_eq!(t17.baseblock(13).unwrap(), 0);

        let t9 = Topology::new(9).unwrap();
        assert_eq!(t9.baseblock(5).unwrap(), 3);
        assert_eq!(t9.baseblock(8).unwrap(), 2);

        let t2 = Topology::new(2).unwrap();
        assert_eq!(t2.baseblock(1).unwrap(), 0);
    }

    #[test]
    fn baseblock_rejects_out_of_range() {
        let topo = Topology::new(9).unwrap();
        assert_eq!(
            topo.baseblock(9),
            Err(Error::RankOutOfRange { rank: 9, p: 9 })
        );
    }

    #[test]
    fn canonical_sequence_examples() {
        let topo = Topology::new(17).unwrap();
        assert_eq!(topo.canonical_skip_sequence(9).unwrap().indices, &[4]);
        assert_eq!(topo.canonical_skip_sequence(13).unwrap().indices, &[0, 2, 4]);
        assert!(topo.canonical_skip_sequence(0).unwrap().indices.is_empty());
    }

    #[test]
    fn canonical_sequence_smallest_index_is_baseblock() {
        for p in 1..200 {
            let topo = Topology::new(p).unwrap();
            for r in 1..p {
                let seq = topo.canonical_skip_sequence(r).unwrap();
                assert_eq!(seq.sum_over(&topo), r);
                assert_eq!(seq.indices[0], topo.baseblock(r).unwrap());
            }
        }
    }

    #[test]
    fn baseblock_sequence_examples() {
        assert_eq!(
            Topology::new(11).unwrap().baseblock_sequence(),
            vec![4, 0, 1, 2, 0, 1, 3, 0, 1, 2, 0]
        );
        assert_eq!(Topology::new(2).unwrap().baseblock_sequence(), vec![1, 0]);
        assert_eq!(
            Topology::new(17).unwrap().baseblock_sequence(),
            vec![5, 0, 1, 2, 0, 3, 0, 1, 2, 4, 0, 1, 2, 0, 3, 0, 1]
        );
    }
}
