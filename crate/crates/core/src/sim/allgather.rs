//! The n-block all-to-all broadcast (allgatherv) executor.

use super::{
    block_slice, element_counts, BlockSlice, CollectiveKind, CollectiveSpec, FinalState,
    SimResult, TraceEvent,
};
use crate::circulant::Topology;
use crate::error::Error;
use crate::schedule::{offset_for_virtual_rounds, virtual_rounds};

/// Run an all-to-all broadcast: every rank broadcasts its own `n` blocks to
/// all others simultaneously over the same circulant pattern.
///
/// Rank `r` runs one receive schedule per root `j` (the schedule of rank
/// `(r - j) mod p`) and derives the matching send schedules from them. Each
/// round packs all per-root blocks into a single message -- skipping the
/// to-processor's own root block and roots that contribute no elements -- so
/// the one-port discipline holds at message granularity and the whole
/// operation still finishes in `n - 1 + q` rounds.
pub fn run_allgatherv(spec: &CollectiveSpec) -> Result<SimResult, Error> {
    spec.expect_kind(CollectiveKind::Allgatherv)?;
    spec.validate()?;
    let (p, n) = (spec.p, spec.n);
    let topo = Topology::new(p)?;
    let q = topo.q();
    let counts = element_counts(p, spec.m, spec.dist);

    // bufs[rank][j * n + b]: rank's copy of root j's block b.
    let mut bufs: Vec<Vec<Option<BlockSlice>>> = vec![vec![None; p * n]; p];
    for (r, buf) in bufs.iter_mut().enumerate() {
        if counts[r] > 0 {
            for b in 0..n {
                buf[r * n + b] = Some(block_slice(counts[r], n, b));
            }
        }
    }

    let mut diagnostics = Vec::new();
    let mut trace = Vec::new();
    let mut blocks_sent = vec![0usize; p];
    let mut blocks_received = vec![0usize; p];
    let mut rounds_used = 0usize;
    let mut ok = true;

    if p > 1 {
        let (mut recvb, mut sendb) = super::per_root_schedules(&topo)?;
        for r in 0..p {
            for j in 0..p {
                offset_for_virtual_rounds(&mut recvb[r][j], n, q);
                offset_for_virtual_rounds(&mut sendb[r][j], n, q);
            }
        }
        let x = virtual_rounds(n, q);
        let total = n + q - 1;

        type Message = (usize, Vec<(usize, usize, BlockSlice)>);
        let mut incoming: Vec<Option<Message>> = vec![None; p];
        'rounds: for i in x..x + total {
            let k = i % q;
            incoming.iter_mut().for_each(|slot| *slot = None);

            for s in 0..p {
                let t = topo.to_neighbor(s, k);
                let mut groups = Vec::new();
                for j in 0..p {
                    if j == t || counts[j] == 0 {
                        continue; // the to-processor is the root for block j
                    }
                    let v = sendb[s][j][k];
                    if v < 0 {
                        continue;
                    }
                    let blk = (v as usize).min(n - 1);
                    match bufs[s][j * n + blk] {
                        Some(slice) => groups.push((j, blk, slice)),
                        None => {
                            diagnostics.push(format!(
                                "round {i}: rank {s} packs absent block {blk} of root {j}"
                            ));
                            ok = false;
                            break 'rounds;
                        }
                    }
                }
                if !groups.is_empty() {
                    if incoming[t].is_some() {
                        diagnostics.push(format!("round {i}: one-port violation at receiver {t}"));
                        ok = false;
                        break 'rounds;
                    }
                    incoming[t] = Some((s, groups));
                }
            }

            for r in 0..p {
                let expected: Vec<(usize, usize)> = (0..p)
                    .filter(|&j| j != r && counts[j] > 0)
                    .filter_map(|j| {
                        let v = recvb[r][j][k];
                        (v >= 0).then(|| (j, (v as usize).min(n - 1)))
                    })
                    .collect();
                match (expected.is_empty(), incoming[r].take()) {
                    (true, None) => {}
                    (false, Some((s, groups))) => {
                        if s != topo.from_neighbor(r, k) {
                            diagnostics.push(format!(
                                "round {i}: rank {r} received from {s}, not its from-processor"
                            ));
                            ok = false;
                            break 'rounds;
                        }
                        if groups.len() != expected.len()
                            || groups.iter().zip(&expected).any(|(g, e)| (g.0, g.1) != *e)
                        {
                            diagnostics.push(format!(
                                "round {i}: rank {r} message groups do not match its schedule"
                            ));
                            ok = false;
                            break 'rounds;
                        }
                        for (j, blk, slice) in groups {
                            let slot = &mut bufs[r][j * n + blk];
                            if slot.is_some() {
                                diagnostics.push(format!(
                                    "round {i}: rank {r} received block {blk} of root {j} twice"
                                ));
                                ok = false;
                                break 'rounds;
                            }
                            *slot = Some(slice);
                            blocks_sent[s] += 1;
                            blocks_received[r] += 1;
                            trace.push(TraceEvent {
                                round: i,
                                sender: s,
                                receiver: r,
                                block: j * n + blk,
                            });
                        }
                    }
                    (false, None) => {
                        diagnostics
                            .push(format!("round {i}: rank {r} expected a message, got none"));
                        ok = false;
                        break 'rounds;
                    }
                    (true, Some((s, _))) => {
                        diagnostics
                            .push(format!("round {i}: rank {r} got unexpected message from {s}"));
                        ok = false;
                        break 'rounds;
                    }
                }
            }

            for r in 0..p {
                for j in 0..p {
                    sendb[r][j][k] += q as i32;
                    recvb[r][j][k] += q as i32;
                }
            }
            rounds_used += 1;
        }
    }

    if ok {
        'check: for (r, buf) in bufs.iter().enumerate() {
            for j in 0..p {
                if counts[j] == 0 {
                    continue;
                }
                for b in 0..n {
                    if buf[j * n + b] != Some(block_slice(counts[j], n, b)) {
                        diagnostics.push(format!(
                            "rank {r} ended without block {b} of root {j}"
                        ));
                        ok = false;
                        break 'check;
                    }
                }
            }
        }
    }

    Ok(SimResult {
        rounds_used,
        ok,
        diagnostics,
        trace,
        final_state: FinalState::Gathered(bufs),
        blocks_sent,
        blocks_received,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Distribution;

    #[test]
    fn four_ranks_one_block_two_rounds() {
        let spec = CollectiveSpec::allgatherv(4, 1, 8, Distribution::Regular);
        let result = run_allgatherv(&spec).unwrap();
        assert!(result.ok, "{:?}", result.diagnostics);
        assert_eq!(result.rounds_used, 2);
    }

    #[test]
    fn single_rank_identity() {
        let spec = CollectiveSpec::allgatherv(1, 3, 12, Distribution::Regular);
        let result = run_allgatherv(&spec).unwrap();
        assert!(result.ok);
        assert_eq!(result.rounds_used, 0);
    }

    #[test]
    fn degenerate_distribution() {
        let spec = CollectiveSpec::allgatherv(32, 4, 32 * 36, Distribution::Degenerate);
        let result = run_allgatherv(&spec).unwrap();
        assert!(result.ok, "{:?}", result.diagnostics);
        assert_eq!(result.rounds_used, 4 - 1 + 5);
    }

    #[test]
    fn irregular_distribution() {
        let spec = CollectiveSpec::allgatherv(9, 2, 90, Distribution::Irregular);
        let result = run_allgatherv(&spec).unwrap();
        assert!(result.ok, "{:?}", result.diagnostics);
        assert_eq!(result.rounds_used, 2 - 1 + 4);
    }
}
