//! The n-block broadcast executor.

use super::{CollectiveKind, CollectiveSpec, FinalState, SimResult, TraceEvent};
use crate::circulant::Topology;
use crate::error::Error;
use crate::schedule::{offset_for_virtual_rounds, virtual_rounds};

/// Run an n-block broadcast from `spec.root`.
///
/// Every rank follows its own receive and send schedule, shifted by the
/// virtual rounds `x` and advanced by `q` per phase. Entries below zero are
/// skipped, entries above `n - 1` are capped to `n - 1`, and nothing is ever
/// sent to the root. A correct run takes exactly `n - 1 + q` rounds after
/// which every rank holds all `n` blocks; any model violation (one-port
/// breach, send of an absent block, mismatched delivery) aborts the run with
/// a diagnostic.
pub fn run_broadcast(spec: &CollectiveSpec) -> Result<SimResult, Error> {
    spec.expect_kind(CollectiveKind::Broadcast)?;
    spec.validate()?;
    let (p, n, root) = (spec.p, spec.n, spec.root);
    let topo = Topology::new(p)?;
    let q = topo.q();

    let mut held = vec![vec![false; n]; p];
    held[root] = vec![true; n];
    let mut diagnostics = Vec::new();
    let mut trace = Vec::new();
    let mut blocks_sent = vec![0usize; p];
    let mut blocks_received = vec![0usize; p];
    let mut rounds_used = 0usize;
    let mut ok = true;

    if p > 1 {
        let (mut recvb, mut sendb) = super::schedules_for_root(&topo, root)?;
        for r in 0..p {
            offset_for_virtual_rounds(&mut recvb[r], n, q);
            offset_for_virtual_rounds(&mut sendb[r], n, q);
        }
        let x = virtual_rounds(n, q);
        let total = n + q - 1;

        let mut incoming: Vec<Option<(usize, usize)>> = vec![None; p];
        'rounds: for i in x..x + total {
            let k = i % q;
            incoming.iter_mut().for_each(|slot| *slot = None);

            for s in 0..p {
                let v = sendb[s][k];
                if v < 0 {
                    continue;
                }
                let t = topo.to_neighbor(s, k);
                if t == root {
                    continue; // blocks to the root are not sent
                }
                let blk = (v as usize).min(n - 1);
                if !held[s][blk] {
                    diagnostics.push(format!("round {i}: rank {s} sends absent block {blk}"));
                    ok = false;
                    break 'rounds;
                }
                if incoming[t].is_some() {
                    diagnostics.push(format!("round {i}: one-port violation at receiver {t}"));
                    ok = false;
                    break 'rounds;
                }
                incoming[t] = Some((s, blk));
            }

            for r in 0..p {
                let v = recvb[r][k];
                let expects = v >= 0 && r != root;
                match (expects, incoming[r].take()) {
                    (true, Some((s, blk))) => {
                        let want = (v as usize).min(n - 1);
                        if blk != want {
                            diagnostics.push(format!(
                                "round {i}: rank {r} expected block {want}, got {blk}"
                            ));
                            ok = false;
                            break 'rounds;
                        }
                        if s != topo.from_neighbor(r, k) {
                            diagnostics.push(format!(
                                "round {i}: rank {r} received from {s}, not its from-processor"
                            ));
                            ok = false;
                            break 'rounds;
                        }
                        if held[r][blk] {
                            diagnostics
                                .push(format!("round {i}: rank {r} received block {blk} twice"));
                            ok = false;
                            break 'rounds;
                        }
                        held[r][blk] = true;
                        blocks_sent[s] += 1;
                        blocks_received[r] += 1;
                        trace.push(TraceEvent { round: i, sender: s, receiver: r, block: blk });
                    }
                    (true, None) => {
                        diagnostics.push(format!(
                            "round {i}: rank {r} expected a block, nothing arrived"
                        ));
                        ok = false;
                        break 'rounds;
                    }
                    (false, Some((s, blk))) => {
                        diagnostics.push(format!(
                            "round {i}: rank {r} got unexpected block {blk} from {s}"
                        ));
                        ok = false;
                        break 'rounds;
                    }
                    (false, None) => {}
                }
            }

            for r in 0..p {
                sendb[r][k] += q as i32;
                recvb[r][k] += q as i32;
            }
            rounds_used += 1;
        }
    }

    if ok {
        for (r, blocks) in held.iter().enumerate() {
            if let Some(missing) = blocks.iter().position(|&h| !h) {
                diagnostics.push(format!("rank {r} is missing block {missing} at the end"));
                ok = false;
            }
        }
    }

    Ok(SimResult {
        rounds_used,
        ok,
        diagnostics,
        trace,
        final_state: FinalState::Blocks(held),
        blocks_sent,
        blocks_received,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_ranks_one_block() {
        let result = run_broadcast(&CollectiveSpec::broadcast(2, 1, 0)).unwrap();
        assert!(result.ok, "{:?}", result.diagnostics);
        assert_eq!(result.rounds_used, 1);
        assert_eq!(result.trace, vec![TraceEvent { round: 0, sender: 0, receiver: 1, block: 0 }]);
    }

    #[test]
    fn p17_seven_blocks_takes_eleven_rounds() {
        let result = run_broadcast(&CollectiveSpec::broadcast(17, 7, 0)).unwrap();
        assert!(result.ok, "{:?}", result.diagnostics);
        assert_eq!(result.rounds_used, 11);
        match result.final_state {
            FinalState::Blocks(held) => {
                assert!(held.iter().all(|blocks| blocks.iter().all(|&h| h)))
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn renumbered_root() {
        let result = run_broadcast(&CollectiveSpec::broadcast(9, 1, 4)).unwrap();
        assert!(result.ok, "{:?}", result.diagnostics);
        assert_eq!(result.rounds_used, 4);
        // The root never receives; everyone else gets block 0 exactly once.
        assert_eq!(result.blocks_received[4], 0);
        assert!(result.blocks_received.iter().sum::<usize>() == 8);
    }

    #[test]
    fn single_rank_is_a_no_op() {
        let result = run_broadcast(&CollectiveSpec::broadcast(1, 5, 0)).unwrap();
        assert!(result.ok);
        assert_eq!(result.rounds_used, 0);
        assert!(result.trace.is_empty());
    }
}
