//! Reduction executors: reduce and reduce-scatter.
//!
//! Both run the forward schedules backwards: rounds iterate from
//! `(n-1+q+x)-1` down to `x` with every edge reversed, and a received partial
//! is reduced into the local one instead of stored. A rank sends the partial
//! named by its *receive* schedule (the reversal of receiving it) and
//! receives the partial named by its *send* schedule. Because a block is
//! always received before it is sent in the forward direction, the reversed
//! order accumulates every contribution into a partial before that partial is
//! forwarded, and each non-root rank sends each partial exactly once.

use super::{
    contribution, element_counts, value_at, CollectiveKind, CollectiveSpec, FinalState, SimResult,
    TraceEvent, Value,
};
use crate::circulant::Topology;
use crate::error::Error;
use crate::schedule::virtual_rounds;

/// Run a reduction to `spec.root` with a commutative operator.
pub fn run_reduce(spec: &CollectiveSpec) -> Result<SimResult, Error> {
    spec.expect_kind(CollectiveKind::Reduce)?;
    spec.validate()?;
    let (p, n, root, op) = (spec.p, spec.n, spec.root, spec.op);
    let topo = Topology::new(p)?;
    let q = topo.q();

    let mut partials: Vec<Vec<Value>> = (0..p)
        .map(|r| (0..n).map(|j| contribution(op, r, j)).collect())
        .collect();
    let mut sent = vec![vec![false; n]; p];
    let mut diagnostics = Vec::new();
    let mut trace = Vec::new();
    let mut blocks_sent = vec![0usize; p];
    let mut blocks_received = vec![0usize; p];
    let mut rounds_used = 0usize;
    let mut ok = true;

    if p > 1 {
        let (recvb, sendb) = super::schedules_for_root(&topo, root)?;
        let x = virtual_rounds(n, q);
        let total = n + q - 1;

        let mut incoming: Vec<Option<(usize, usize, Value)>> = vec![None; p];
        'rounds: for i in (x..x + total).rev() {
            let k = i % q;
            incoming.iter_mut().for_each(|slot| *slot = None);

            for u in 0..p {
                if u == root {
                    continue; // the root is the sink; it forwards nothing
                }
                let rv = value_at(recvb[u][k], k, i, x);
                if rv < 0 {
                    continue;
                }
                let blk = (rv as usize).min(n - 1);
                let w = topo.from_neighbor(u, k);
                if sent[u][blk] {
                    diagnostics.push(format!("round {i}: rank {u} sends partial {blk} twice"));
                    ok = false;
                    break 'rounds;
                }
                sent[u][blk] = true;
                if incoming[w].is_some() {
                    diagnostics.push(format!("round {i}: one-port violation at receiver {w}"));
                    ok = false;
                    break 'rounds;
                }
                incoming[w] = Some((u, blk, partials[u][blk].clone()));
                blocks_sent[u] += 1;
                trace.push(TraceEvent { round: i, sender: u, receiver: w, block: blk });
            }

            for u in 0..p {
                let sv = value_at(sendb[u][k], k, i, x);
                let t = topo.to_neighbor(u, k);
                let expects = sv >= 0 && t != root;
                match (expects, incoming[u].take()) {
                    (true, Some((s, blk, v))) => {
                        let want = (sv as usize).min(n - 1);
                        if s != t || blk != want {
                            diagnostics.push(format!(
                                "round {i}: rank {u} expected partial {want} from {t}, \
                                 got {blk} from {s}"
                            ));
                            ok = false;
                            break 'rounds;
                        }
                        if sent[u][blk] {
                            diagnostics.push(format!(
                                "round {i}: rank {u} received partial {blk} after forwarding it"
                            ));
                            ok = false;
                            break 'rounds;
                        }
                        if let Err(e) = partials[u][blk].merge(&v) {
                            diagnostics.push(format!("round {i}: {e}"));
                            ok = false;
                            break 'rounds;
                        }
                        blocks_received[u] += 1;
                    }
                    (true, None) => {
                        diagnostics.push(format!(
                            "round {i}: rank {u} expected a partial, nothing arrived"
                        ));
                        ok = false;
                        break 'rounds;
                    }
                    (false, Some((s, blk, _))) => {
                        diagnostics.push(format!(
                            "round {i}: rank {u} got unexpected partial {blk} from {s}"
                        ));
                        ok = false;
                        break 'rounds;
                    }
                    (false, None) => {}
                }
            }
            rounds_used += 1;
        }
    }

    if ok {
        for (u, flags) in sent.iter().enumerate() {
            if u == root {
                continue;
            }
            if let Some(blk) = flags.iter().position(|&s| !s) {
                diagnostics.push(format!("rank {u} never forwarded partial {blk}"));
                ok = false;
            }
        }
    }

    let reduced = partials[root].clone();
    Ok(SimResult {
        rounds_used,
        ok,
        diagnostics,
        trace,
        final_state: FinalState::Reduced(reduced),
        blocks_sent,
        blocks_received,
    })
}

/// Run a simultaneous reduction to all ranks as roots: rank `j` ends holding
/// the fully reduced values for its own `n`-block partition.
///
/// This is the communication-reversed dual of the all-to-all broadcast: the
/// same per-root schedules, rounds downward, packed partials instead of
/// packed blocks. The sender's own partition never leaves it. For one block
/// per partition every rank sends and receives exactly `p - 1` blocks.
pub fn run_reduce_scatter(spec: &CollectiveSpec) -> Result<SimResult, Error> {
    spec.expect_kind(CollectiveKind::ReduceScatter)?;
    spec.validate()?;
    let (p, n, op) = (spec.p, spec.n, spec.op);
    let topo = Topology::new(p)?;
    let q = topo.q();
    let counts = element_counts(p, spec.m, spec.dist);

    // partials[rank][j * n + b]: rank's partial for block b of partition j.
    let mut partials: Vec<Vec<Option<Value>>> = (0..p)
        .map(|r| {
            (0..p * n)
                .map(|g| (counts[g / n] > 0).then(|| contribution(op, r, g)))
                .collect()
        })
        .collect();
    let mut sent = vec![vec![false; p * n]; p];
    let mut diagnostics = Vec::new();
    let mut trace = Vec::new();
    let mut blocks_sent = vec![0usize; p];
    let mut blocks_received = vec![0usize; p];
    let mut rounds_used = 0usize;
    let mut ok = true;

    if p > 1 {
        let (recvb, sendb) = super::per_root_schedules(&topo)?;
        let x = virtual_rounds(n, q);
        let total = n + q - 1;

        type Message = (usize, Vec<(usize, usize, Value)>);
        let mut incoming: Vec<Option<Message>> = vec![None; p];
        'rounds: for i in (x..x + total).rev() {
            let k = i % q;
            incoming.iter_mut().for_each(|slot| *slot = None);

            for u in 0..p {
                let w = topo.from_neighbor(u, k);
                let mut groups = Vec::new();
                for j in 0..p {
                    if j == u || counts[j] == 0 {
                        continue; // a rank keeps its own partition
                    }
                    let rv = value_at(recvb[u][j][k], k, i, x);
                    if rv < 0 {
                        continue;
                    }
                    let blk = (rv as usize).min(n - 1);
                    let g = j * n + blk;
                    if sent[u][g] {
                        diagnostics.push(format!(
                            "round {i}: rank {u} sends partial {blk} of partition {j} twice"
                        ));
                        ok = false;
                        break 'rounds;
                    }
                    sent[u][g] = true;
                    match &partials[u][g] {
                        Some(v) => groups.push((j, blk, v.clone())),
                        None => {
                            diagnostics.push(format!(
                                "round {i}: rank {u} has no partial for partition {j}"
                            ));
                            ok = false;
                            break 'rounds;
                        }
                    }
                }
                if !groups.is_empty() {
                    if incoming[w].is_some() {
                        diagnostics.push(format!("round {i}: one-port violation at receiver {w}"));
                        ok = false;
                        break 'rounds;
                    }
                    for (j, blk, _) in &groups {
                        blocks_sent[u] += 1;
                        trace.push(TraceEvent {
                            round: i,
                            sender: u,
                            receiver: w,
                            block: j * n + blk,
                        });
                    }
                    incoming[w] = Some((u, groups));
                }
            }

            for u in 0..p {
                let t = topo.to_neighbor(u, k);
                let expected: Vec<(usize, usize)> = (0..p)
                    .filter(|&j| j != t && counts[j] > 0)
                    .filter_map(|j| {
                        let sv = value_at(sendb[u][j][k], k, i, x);
                        (sv >= 0).then(|| (j, (sv as usize).min(n - 1)))
                    })
                    .collect();
                match (expected.is_empty(), incoming[u].take()) {
                    (true, None) => {}
                    (false, Some((s, groups))) => {
                        if s != t {
                            diagnostics.push(format!(
                                "round {i}: rank {u} received from {s}, expected {t}"
                            ));
                            ok = false;
                            break 'rounds;
                        }
                        if groups.len() != expected.len()
                            || groups.iter().zip(&expected).any(|(g, e)| (g.0, g.1) != *e)
                        {
                            diagnostics.push(format!(
                                "round {i}: rank {u} partial groups do not match its schedule"
                            ));
                            ok = false;
                            break 'rounds;
                        }
                        for (j, blk, v) in groups {
                            let g = j * n + blk;
                            if sent[u][g] {
                                diagnostics.push(format!(
                                    "round {i}: rank {u} received partial {blk} of partition {j} \
                                     after forwarding it"
                                ));
                                ok = false;
                                break 'rounds;
                            }
                            match partials[u][g].as_mut() {
                                Some(mine) => {
                                    if let Err(e) = mine.merge(&v) {
                                        diagnostics.push(format!("round {i}: {e}"));
                                        ok = false;
                                        break 'rounds;
                                    }
                                }
                                None => {
                                    diagnostics.push(format!(
                                        "round {i}: rank {u} reduced into empty partition {j}"
                                    ));
                                    ok = false;
                                    break 'rounds;
                                }
                            }
                            blocks_received[u] += 1;
                        }
                    }
                    (false, None) => {
                        diagnostics
                            .push(format!("round {i}: rank {u} expected a message, got none"));
                        ok = false;
                        break 'rounds;
                    }
                    (true, Some((s, _))) => {
                        diagnostics
                            .push(format!("round {i}: rank {u} got unexpected message from {s}"));
                        ok = false;
                        break 'rounds;
                    }
                }
            }
            rounds_used += 1;
        }
    }

    if ok {
        'check: for u in 0..p {
            for j in 0..p {
                if j == u || counts[j] == 0 {
                    continue;
                }
                for b in 0..n {
                    if !sent[u][j * n + b] {
                        diagnostics.push(format!(
                            "rank {u} never forwarded partial {b} of partition {j}"
                        ));
                        ok = false;
                        break 'check;
                    }
                }
            }
        }
    }

    let scattered = (0..p)
        .map(|j| (0..n).map(|b| partials[j][j * n + b].clone()).collect())
        .collect();
    Ok(SimResult {
        rounds_used,
        ok,
        diagnostics,
        trace,
        final_state: FinalState::Scattered(scattered),
        blocks_sent,
        blocks_received,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::ReduceOp;
    use std::collections::BTreeSet;

    #[test]
    fn two_rank_sum() {
        // Contributions are rank + 1 for the single block; the root gets 3.
        let result = run_reduce(&CollectiveSpec::reduce(2, 1, 0, ReduceOp::IntSum)).unwrap();
        assert!(result.ok, "{:?}", result.diagnostics);
        assert_eq!(result.rounds_used, 1);
        assert_eq!(result.final_state, FinalState::Reduced(vec![Value::Int(3)]));
    }

    #[test]
    fn p17_tag_union_collects_every_rank() {
        let result = run_reduce(&CollectiveSpec::reduce(17, 7, 0, ReduceOp::TagSetUnion)).unwrap();
        assert!(result.ok, "{:?}", result.diagnostics);
        assert_eq!(result.rounds_used, 11);
        let everyone: BTreeSet<usize> = (0..17).collect();
        match result.final_state {
            FinalState::Reduced(values) => {
                assert_eq!(values.len(), 7);
                for v in values {
                    assert_eq!(v, Value::Tags(everyone.clone()));
                }
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn nonzero_root_sum_matches_direct_reduction() {
        let result = run_reduce(&CollectiveSpec::reduce(9, 3, 2, ReduceOp::IntSum)).unwrap();
        assert!(result.ok, "{:?}", result.diagnostics);
        let direct: Vec<Value> = (0..3)
            .map(|j| Value::Int((0..9).map(|r| (r as i64 + 1) * (j as i64 + 1)).sum()))
            .collect();
        assert_eq!(result.final_state, FinalState::Reduced(direct));
    }

    #[test]
    fn non_commutative_op_is_rejected() {
        let err = run_reduce(&CollectiveSpec::reduce(4, 1, 0, ReduceOp::SeqConcat)).unwrap_err();
        assert_eq!(err, Error::NonCommutativeOp { op: "seq-concat" });
    }

    #[test]
    fn reduce_scatter_uniform_sum() {
        // All contributions for partition j block 0 sum over ranks.
        let result =
            run_reduce_scatter(&CollectiveSpec::reduce_scatter(4, 1, ReduceOp::IntSum)).unwrap();
        assert!(result.ok, "{:?}", result.diagnostics);
        assert_eq!(result.rounds_used, 2);
        match result.final_state {
            FinalState::Scattered(parts) => {
                for (j, part) in parts.iter().enumerate() {
                    let want: i64 = (0..4).map(|r| (r as i64 + 1) * (j as i64 + 1)).sum();
                    assert_eq!(part[0], Some(Value::Int(want)));
                }
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn reduce_scatter_volume_is_p_minus_one() {
        let result =
            run_reduce_scatter(&CollectiveSpec::reduce_scatter(17, 1, ReduceOp::TagSetUnion))
                .unwrap();
        assert!(result.ok, "{:?}", result.diagnostics);
        let everyone: BTreeSet<usize> = (0..17).collect();
        match &result.final_state {
            FinalState::Scattered(parts) => {
                for part in parts {
                    assert_eq!(part[0], Some(Value::Tags(everyone.clone())));
                }
            }
            _ => unreachable!(),
        }
        assert!(result.blocks_sent.iter().all(|&c| c == 16));
        assert!(result.blocks_received.iter().all(|&c| c == 16));
    }

    #[test]
    fn reduce_scatter_degenerate_partitions() {
        use crate::sim::Distribution;
        let spec = CollectiveSpec::reduce_scatter_dist(
            8,
            2,
            ReduceOp::IntSum,
            64,
            Distribution::Degenerate,
        );
        let result = run_reduce_scatter(&spec).unwrap();
        assert!(result.ok, "{:?}", result.diagnostics);
        match result.final_state {
            FinalState::Scattered(parts) => {
                // Only rank 0 owns elements; it gets the full reduction.
                for b in 0..2 {
                    let want: i64 = (0..8).map(|r| (r as i64 + 1) * (b as i64 + 1)).sum();
                    assert_eq!(parts[0][b], Some(Value::Int(want)));
                }
                assert!(parts[1..].iter().all(|p| p.iter().all(|v| v.is_none())));
            }
            _ => unreachable!(),
        }
    }
}
