//! Per-rank receive and send schedules in `O(log p)` time.
//!
//! A receive schedule lists, for each round `k < q`, the signed block index a
//! rank receives in round `i` with `i mod q = k`; a send schedule lists the
//! block it sends. Negative entries denote blocks belonging to an earlier
//! phase and are never communicated directly. Both schedules repeat with
//! period `q`, advancing every entry by `q` per phase.
//!
//! The receive schedule for rank `r` is found by a greedy backtracking search
//! over canonical skip sequences toward the virtual rank `p + r`, keeping the
//! remaining skip indices in a doubly linked list so an accepted index is
//! unlinked in `O(1)` and never revisited. The send schedule follows from the
//! doubling structure of the graph, falling back to the neighbor's receive
//! schedule in the at most four rounds where the local rule fails.

use crate::circulant::{Topology, MAX_Q};
use crate::error::Error;

/// Receive schedule of one rank: `blocks[k]` is received in round `k mod q`.
///
/// As a set, `blocks` equals `({-1,..,-q} \ {baseblock - q}) U {baseblock}`;
/// the baseblock is the single non-negative entry. The root rank 0 is the
/// exception: it receives nothing, so its entries are exactly `{-1,..,-q}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecvSchedule {
    pub blocks: Vec<i32>,
    pub baseblock: usize,
}

/// Send schedule of one rank: `blocks[k]` is sent in round `k mod q`.
///
/// `blocks[0] = baseblock - q`, and every entry is either a block received in
/// an earlier round or `baseblock - q`. Rank 0 sends `0, 1, .., q-1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SendSchedule {
    pub blocks: Vec<i32>,
}

/// Instrumentation of one receive-schedule search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Recursive calls performed; at most `q - 1`.
    pub recursions: u32,
    /// Total scan-loop iterations over all calls; at most `2q + recursions`.
    pub scans: u32,
}

/// Instrumentation of one send-schedule computation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SendStats {
    /// Rounds where the local rule failed and the neighbor's receive
    /// schedule had to be computed; at most 4.
    pub violations: u32,
}

/// Backtracking search state: the remaining skip indices `{0..=q}` in a
/// doubly linked, circular list in decreasing order. Slot `e + 1` stores
/// index `e`, so the `-1` sentinel lives in slot 0.
struct Search<'a> {
    sigma: &'a [usize],
    q: usize,
    /// Virtual search target `p + r`; keeps all intermediates positive so no
    /// modulo arithmetic is needed.
    target: usize,
    next: [i32; MAX_Q + 2],
    prev: [i32; MAX_Q + 2],
    stats: SearchStats,
}

impl<'a> Search<'a> {
    fn new(topo: &'a Topology, r: usize) -> Self {
        let q = topo.q();
        let mut next = [0i32; MAX_Q + 2];
        let mut prev = [0i32; MAX_Q + 2];
        for e in 0..=q as i32 {
            next[(e + 1) as usize] = e - 1;
            prev[(e + 1) as usize] = e + 1;
        }
        prev[q + 1] = -1;
        next[0] = q as i32;
        prev[0] = 0;
        Search {
            sigma: topo.skips(),
            q,
            target: topo.p() + r,
            next,
            prev,
            stats: SearchStats::default(),
        }
    }

    #[inline]
    fn next_of(&self, e: i32) -> i32 {
        self.next[(e + 1) as usize]
    }

    #[inline]
    fn unlink(&mut self, e: i32) {
        let n = self.next[(e + 1) as usize];
        let p = self.prev[(e + 1) as usize];
        self.next[(p + 1) as usize] = n;
        self.prev[(n + 1) as usize] = p;
    }

    /// Fill `out[k..]` with accepted skip indices by depth-first search with
    /// removal, starting the scan at index `e` with partial sum `r_prime` and
    /// `s` the previously accepted intermediate. Returns the next `k`.
    ///
    /// Each accepted index at position `k` is the baseblock of an implicit
    /// intermediate rank `r'_k` with `target - sigma[k+1] <= r'_k <=
    /// target - sigma[k]`; acceptance unlinks the index so later positions
    /// cannot reuse it. Once `k` reaches `q` the schedule is complete and
    /// every pending call returns.
    fn allblocks(
        &mut self,
        r_prime: usize,
        mut s: usize,
        mut e: i32,
        mut k: usize,
        out: &mut [usize; MAX_Q],
    ) -> usize {
        let r = self.target;
        debug_assert!(r_prime <= r - self.sigma[k], "entry invariant");
        while e != -1 {
            self.stats.scans += 1;
            let reach = r_prime + self.sigma[e as usize];
            if reach <= r - self.sigma[k] && reach < s {
                if k < self.q && reach <= r - self.sigma[k + 1] {
                    self.stats.recursions += 1;
                    // The deeper search continues below e: a skip index is
                    // used at most once per path, so re-examining e could
                    // only ever be rejected. Starting past it keeps the scan
                    // total within 2q + recursions.
                    let start = self.next_of(e);
                    k = self.allblocks(reach, s, start, k, out);
                }
                if k >= self.q || r_prime > r - self.sigma[k + 1] {
                    return k;
                }
                s = reach;
                out[k] = e as usize;
                k += 1;
                self.unlink(e);
            }
            e = self.next_of(e);
        }
        k
    }
}

/// Allocation-free receive schedule: fills `out[..q]`, returns the baseblock
/// and search stats.
pub(crate) fn recv_into(
    topo: &Topology,
    r: usize,
    out: &mut [i32],
) -> Result<(usize, SearchStats), Error> {
    let q = topo.q();
    if r >= topo.p() {
        return Err(Error::RankOutOfRange { rank: r, p: topo.p() });
    }
    debug_assert_eq!(out.len(), q);
    let b = topo.baseblock(r)?;
    if q == 0 {
        return Ok((b, SearchStats::default()));
    }

    let mut search = Search::new(topo, r);
    // The canonical path to r itself must not be consumed by the search.
    search.unlink(b as i32);
    let mut accepted = [0usize; MAX_Q];
    let filled = search.allblocks(0, 2 * topo.p(), q as i32, 0, &mut accepted);
    debug_assert_eq!(filled, q);

    // Keep only the baseblock non-negative: the index q marks the round where
    // the baseblock arrives from the root; everything else moves one phase
    // back.
    for k in 0..q {
        out[k] = if accepted[k] == q {
            b as i32
        } else {
            accepted[k] as i32 - q as i32
        };
    }
    Ok((b, search.stats))
}

/// Receive schedule for rank `r`, root 0, in `O(q)` steps.
pub fn recv_schedule(topo: &Topology, r: usize) -> Result<RecvSchedule, Error> {
    recv_schedule_with_stats(topo, r).map(|(sched, _)| sched)
}

/// Receive schedule plus search instrumentation.
pub fn recv_schedule_with_stats(
    topo: &Topology,
    r: usize,
) -> Result<(RecvSchedule, SearchStats), Error> {
    let mut blocks = vec![0i32; topo.q()];
    let (baseblock, stats) = recv_into(topo, r, &mut blocks)?;
    Ok((RecvSchedule { blocks, baseblock }, stats))
}

/// Allocation-free send schedule: fills `out[..q]`.
pub(crate) fn send_into(topo: &Topology, r: usize, out: &mut [i32]) -> Result<SendStats, Error> {
    let p = topo.p();
    let q = topo.q();
    if r >= p {
        return Err(Error::RankOutOfRange { rank: r, p });
    }
    debug_assert_eq!(out.len(), q);
    let stats = SendStats::default();
    if q == 0 {
        return Ok(stats);
    }
    if r == 0 {
        for (k, blk) in out.iter_mut().enumerate() {
            *blk = k as i32;
        }
        return Ok(stats);
    }

    let mut stats = stats;
    let b = topo.baseblock(r)?;
    // Walk rounds downward over the doubling structure: `rp` is the virtual
    // rank, `e` the exclusive upper bound on virtual ranks, `c` the block the
    // rank aims to repeat.
    let mut rp = r;
    let mut e = p;
    let mut c = b as i32;
    let mut neighbor = [0i32; MAX_Q];
    for k in (1..q).rev() {
        let sk = topo.skip(k);
        let sk1 = topo.skip(k - 1);
        if rp < sk {
            // Lower part: resend c unless the to-processor may already have
            // it, in which case its receive schedule decides.
            if rp + sk < e || e < sk1 || (k == 1 && b > 0) {
                out[k] = c;
            } else {
                stats.violations += 1;
                recv_into(topo, (r + sk) % p, &mut neighbor[..q])?;
                out[k] = neighbor[k];
            }
            if e > sk {
                e = sk;
            }
        } else {
            // Upper part: send the phase block k - q.
            c = k as i32 - q as i32;
            if k == 1 || rp > sk || e - sk < sk1 {
                out[k] = c;
            } else if rp + sk > e {
                stats.violations += 1;
                recv_into(topo, (r + sk) % p, &mut neighbor[..q])?;
                out[k] = neighbor[k];
            } else {
                out[k] = c;
            }
            rp -= sk;
            e -= sk;
        }
    }
    out[0] = b as i32 - q as i32;
    Ok(stats)
}

/// Send schedule for rank `r`, root 0, in `O(q)` steps outside violations.
pub fn send_schedule(topo: &Topology, r: usize) -> Result<SendSchedule, Error> {
    send_schedule_with_stats(topo, r).map(|(sched, _)| sched)
}

/// Send schedule plus violation count.
pub fn send_schedule_with_stats(
    topo: &Topology,
    r: usize,
) -> Result<(SendSchedule, SendStats), Error> {
    let mut blocks = vec![0i32; topo.q()];
    let stats = send_into(topo, r, &mut blocks)?;
    Ok((SendSchedule { blocks }, stats))
}

/// Allocation-free oracle send schedule: fills `out[..q]`.
pub(crate) fn send_oracle_into(topo: &Topology, r: usize, out: &mut [i32]) -> Result<(), Error> {
    let p = topo.p();
    let q = topo.q();
    if r >= p {
        return Err(Error::RankOutOfRange { rank: r, p });
    }
    debug_assert_eq!(out.len(), q);
    if r == 0 {
        for (k, blk) in out.iter_mut().enumerate() {
            *blk = k as i32;
        }
        return Ok(());
    }
    let mut neighbor = [0i32; MAX_Q];
    for k in 0..q {
        let t = topo.to_neighbor(r, k);
        recv_into(topo, t, &mut neighbor[..q])?;
        out[k] = neighbor[k];
    }
    Ok(())
}

/// Reference send schedule straight from the receive schedules of the
/// to-processors: `blocks[k] = recv_schedule((r + sigma[k]) mod p).blocks[k]`.
/// `O(log^2 p)`; kept as the independent cross-check for [`send_schedule`].
pub fn send_schedule_oracle(topo: &Topology, r: usize) -> Result<SendSchedule, Error> {
    let mut blocks = vec![0i32; topo.q()];
    send_oracle_into(topo, r, &mut blocks)?;
    Ok(SendSchedule { blocks })
}

/// Rank of `r` after renumbering so that `root` plays rank 0: schedules for
/// an arbitrary root are the schedules of the renumbered rank.
pub fn renumber_for_root(r: usize, root: usize, p: usize) -> usize {
    (r + p - root) % p
}

/// Number of virtual no-communication rounds needed to align `n` blocks to
/// whole phases: `x = (q - (n-1) mod q) mod q`.
pub fn virtual_rounds(n: usize, q: usize) -> usize {
    if q == 0 {
        0
    } else {
        (q - (n - 1) % q) % q
    }
}

/// Shift a schedule for `x` virtual rounds: every entry drops by `x`, and
/// entries at positions `i < x` (already done virtually) advance one phase.
/// Returns `x`.
pub fn offset_for_virtual_rounds(blocks: &mut [i32], n: usize, q: usize) -> usize {
    let x = virtual_rounds(n, q);
    for (i, blk) in blocks.iter_mut().enumerate() {
        *blk -= x as i32;
        if i < x {
            *blk += q as i32;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topo(p: usize) -> Topology {
        Topology::new(p).unwrap()
    }

    #[test]
    fn recv_schedule_examples() {
        let t17 = topo(17);
        let r3 = recv_schedule(&t17, 3).unwrap();
        assert_eq!(r3.blocks, vec![-4, -5, 2, -2, -1]);
        assert_eq!(r3.baseblock, 2);

        let r1 = recv_schedule(&t17, 1).unwrap();
        assert_eq!(r1.blocks, vec![0, -4, -2, -3, -1]);

        let t9 = topo(9);
        let r5 = recv_schedule(&t9, 5).unwrap();
        assert_eq!(r5.blocks, vec![-4, -2, -3, 3]);
        assert_eq!(r5.baseblock, 3);

        let t18 = topo(18);
        let r9 = recv_schedule(&t18, 9).unwrap();
        assert_eq!(r9.blocks, vec![-3, -4, -2, -5, 4]);
        assert_eq!(r9.baseblock, 4);
    }

    #[test]
    fn recv_schedule_two_ranks() {
        let t2 = topo(2);
        assert_eq!(recv_schedule(&t2, 1).unwrap().blocks, vec![0]);
        assert_eq!(recv_schedule(&t2, 0).unwrap().blocks, vec![-1]);
    }

    #[test]
    fn recv_schedule_rejects_out_of_range() {
        let t = topo(17);
        assert!(matches!(
            recv_schedule(&t, 17),
            Err(Error::RankOutOfRange { rank: 17, p: 17 })
        ));
    }

    #[test]
    fn send_schedule_examples() {
        let t17 = topo(17);
        assert_eq!(send_schedule(&t17, 0).unwrap().blocks, vec![0, 1, 2, 3, 4]);
        assert_eq!(send_schedule(&t17, 1).unwrap().blocks, vec![-5, -5, 0, 0, 0]);
        assert_eq!(
            send_schedule(&t17, 8).unwrap().blocks,
            vec![-3, -3, -3, -2, -3]
        );

        let t2 = topo(2);
        assert_eq!(send_schedule(&t2, 1).unwrap().blocks, vec![-1]);

        let t9 = topo(9);
        assert_eq!(
            send_schedule_oracle(&t9, 4).unwrap().blocks,
            vec![-4, -2, -2, -4]
        );
    }

    #[test]
    fn send_schedule_matches_oracle_for_p17() {
        let t = topo(17);
        for r in 0..17 {
            assert_eq!(
                send_schedule(&t, r).unwrap(),
                send_schedule_oracle(&t, r).unwrap(),
                "rank {r}"
            );
        }
    }

    #[test]
    fn search_bounds_hold_on_small_range() {
        for p in 1..=512 {
            let t = topo(p);
            let q = t.q() as u32;
            for r in 0..p {
                let (_, stats) = recv_schedule_with_stats(&t, r).unwrap();
                assert!(stats.recursions < q.max(1), "p={p} r={r} {stats:?}");
                assert!(
                    stats.scans <= 2 * q + stats.recursions,
                    "p={p} r={r} {stats:?}"
                );
                let (_, sstats) = send_schedule_with_stats(&t, r).unwrap();
                assert!(sstats.violations <= 4, "p={p} r={r} {sstats:?}");
            }
        }
    }

    #[test]
    fn renumber_examples() {
        assert_eq!(renumber_for_root(3, 3, 17), 0);
        assert_eq!(renumber_for_root(1, 3, 17), 15);
        assert_eq!(renumber_for_root(0, 3, 17), 14);
    }

    #[test]
    fn virtual_round_offsets() {
        // n - 1 a multiple of q leaves the schedule unchanged.
        let mut blocks = vec![-4, -5, 2, -2, -1];
        let x = offset_for_virtual_rounds(&mut blocks, 11, 5);
        assert_eq!(x, 0);
        assert_eq!(blocks, vec![-4, -5, 2, -2, -1]);

        assert_eq!(virtual_rounds(7, 5), 4);
        assert_eq!(virtual_rounds(2, 4), 3);

        let mut blocks = vec![-4, -5, 2, -2, -1];
        let x = offset_for_virtual_rounds(&mut blocks, 7, 5);
        assert_eq!(x, 4);
        assert_eq!(blocks, vec![-3, -4, 3, -1, -5]);
    }
}
