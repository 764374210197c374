//! Deterministic round-synchronous simulation of the collectives.
//!
//! The network model is fully connected, one-ported and bidirectional: in
//! each round every rank sends at most one message and receives at most one
//! message. Payloads are provenance tags (block identities, element slices,
//! rank-tag sets or integers) rather than byte buffers, so end states can be
//! compared exactly against direct oracles. A simulation runs the rounds
//! `i = x .. n+q-1+x` (broadcast, all-broadcast) or the same rounds downward
//! with every edge reversed (reduce, reduce-scatter) and counts every loop
//! iteration, which is exactly the `n-1+q` round optimum.

mod allgather;
mod broadcast;
mod reduce;
mod trace;

pub use allgather::run_allgatherv;
pub use broadcast::run_broadcast;
pub use reduce::{run_reduce, run_reduce_scatter};
pub use trace::{check_broadcast_phases, check_trace, TraceViolation};

use crate::circulant::{ceil_log2, Topology};
use crate::error::Error;
use crate::schedule::{recv_schedule, renumber_for_root, send_schedule};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Which collective a [`CollectiveSpec`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CollectiveKind {
    Broadcast,
    Allgatherv,
    Reduce,
    ReduceScatter,
}

impl CollectiveKind {
    pub fn name(&self) -> &'static str {
        match self {
            CollectiveKind::Broadcast => "broadcast",
            CollectiveKind::Allgatherv => "allgatherv",
            CollectiveKind::Reduce => "reduce",
            CollectiveKind::ReduceScatter => "reduce-scatter",
        }
    }
}

/// Reduction operator tag. Reductions require a commutative operator;
/// sequence concatenation is associative only and is rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReduceOp {
    IntSum,
    TagSetUnion,
    SeqConcat,
}

impl ReduceOp {
    pub fn is_commutative(&self) -> bool {
        !matches!(self, ReduceOp::SeqConcat)
    }

    pub fn name(&self) -> &'static str {
        match self {
            ReduceOp::IntSum => "int-sum",
            ReduceOp::TagSetUnion => "tag-set-union",
            ReduceOp::SeqConcat => "seq-concat",
        }
    }
}

/// How the `m` elements of an irregular collective are spread over ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Distribution {
    /// Even chunks of roughly `m / p` elements.
    Regular,
    /// Chunks of `(i mod 3) * (m / p)` elements for rank `i`.
    Irregular,
    /// Rank 0 holds all `m` elements, everyone else none.
    Degenerate,
}

impl Distribution {
    pub fn name(&self) -> &'static str {
        match self {
            Distribution::Regular => "regular",
            Distribution::Irregular => "irregular",
            Distribution::Degenerate => "degenerate",
        }
    }
}

/// Full description of one collective run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollectiveSpec {
    pub kind: CollectiveKind,
    pub p: usize,
    /// Blocks per root (broadcast, reduce) or per rank (allgatherv,
    /// reduce-scatter).
    pub n: usize,
    /// Root rank; meaningful for broadcast and reduce only.
    pub root: usize,
    pub op: ReduceOp,
    pub dist: Distribution,
    /// Total element count spread over ranks by `dist` (allgatherv and
    /// reduce-scatter partitions).
    pub m: usize,
}

impl CollectiveSpec {
    pub fn broadcast(p: usize, n: usize, root: usize) -> Self {
        CollectiveSpec {
            kind: CollectiveKind::Broadcast,
            p,
            n,
            root,
            op: ReduceOp::IntSum,
            dist: Distribution::Regular,
            m: 0,
        }
    }

    pub fn allgatherv(p: usize, n: usize, m: usize, dist: Distribution) -> Self {
        CollectiveSpec {
            kind: CollectiveKind::Allgatherv,
            p,
            n,
            root: 0,
            op: ReduceOp::IntSum,
            dist,
            m,
        }
    }

    pub fn reduce(p: usize, n: usize, root: usize, op: ReduceOp) -> Self {
        CollectiveSpec {
            kind: CollectiveKind::Reduce,
            p,
            n,
            root,
            op,
            dist: Distribution::Regular,
            m: 0,
        }
    }

    pub fn reduce_scatter(p: usize, n: usize, op: ReduceOp) -> Self {
        CollectiveSpec {
            kind: CollectiveKind::ReduceScatter,
            p,
            n,
            root: 0,
            op,
            dist: Distribution::Regular,
            m: p * n,
        }
    }

    pub fn reduce_scatter_dist(p: usize, n: usize, op: ReduceOp, m: usize, dist: Distribution) -> Self {
        CollectiveSpec {
            kind: CollectiveKind::ReduceScatter,
            p,
            n,
            root: 0,
            op,
            dist,
            m,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.p == 0 {
            return Err(Error::ZeroProcessors);
        }
        if self.n == 0 {
            return Err(Error::ZeroBlocks);
        }
        if self.root >= self.p {
            return Err(Error::RootOutOfRange { root: self.root, p: self.p });
        }
        if matches!(self.kind, CollectiveKind::Reduce | CollectiveKind::ReduceScatter)
            && !self.op.is_commutative()
        {
            return Err(Error::NonCommutativeOp { op: self.op.name() });
        }
        Ok(())
    }

    pub(crate) fn expect_kind(&self, kind: CollectiveKind) -> Result<(), Error> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::WrongCollective {
                expected: kind.name(),
                found: self.kind.name(),
            })
        }
    }
}

/// One block transfer. Multi-root collectives record one event per packed
/// per-root block, with `block = root * n + b`; events sharing
/// `(round, sender, receiver)` belong to one message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub round: usize,
    pub sender: usize,
    pub receiver: usize,
    pub block: usize,
}

/// Element range of one block within its root's buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSlice {
    pub start: usize,
    pub len: usize,
}

/// A reduction payload: an integer partial or a set of contributing ranks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    Tags(BTreeSet<usize>),
}

impl Value {
    pub fn merge(&mut self, other: &Value) -> Result<(), &'static str> {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => {
                *a += *b;
                Ok(())
            }
            (Value::Tags(a), Value::Tags(b)) => {
                a.extend(b.iter().copied());
                Ok(())
            }
            _ => Err("mismatched reduction payloads"),
        }
    }
}

/// Deterministic per-rank contribution used by the reduction collectives:
/// `(rank + 1) * (block + 1)` for integer sums, `{rank}` for tag sets.
pub fn contribution(op: ReduceOp, rank: usize, block: usize) -> Value {
    match op {
        ReduceOp::IntSum => Value::Int((rank as i64 + 1) * (block as i64 + 1)),
        ReduceOp::TagSetUnion => Value::Tags(BTreeSet::from([rank])),
        ReduceOp::SeqConcat => unreachable!("rejected by CollectiveSpec::validate"),
    }
}

/// Final data placement of a finished simulation.
#[derive(Debug, Clone, PartialEq)]
pub enum FinalState {
    /// `held[rank][block]` after a broadcast.
    Blocks(Vec<Vec<bool>>),
    /// `gathered[rank][root * n + b]` after an all-broadcast.
    Gathered(Vec<Vec<Option<BlockSlice>>>),
    /// The root's per-block reduced values.
    Reduced(Vec<Value>),
    /// `scattered[rank][b]`: each rank's reduced own partition.
    Scattered(Vec<Vec<Option<Value>>>),
}

/// Outcome of one simulation run.
#[derive(Debug, Clone)]
pub struct SimResult {
    /// Communication rounds executed; `n - 1 + q` for `p > 1`, 0 for `p = 1`.
    pub rounds_used: usize,
    /// True when the run finished without model violations and the final
    /// placement is correct.
    pub ok: bool,
    pub diagnostics: Vec<String>,
    pub trace: Vec<TraceEvent>,
    pub final_state: FinalState,
    /// Per-rank count of blocks sent / received (packed blocks counted
    /// individually).
    pub blocks_sent: Vec<usize>,
    pub blocks_received: Vec<usize>,
}

/// Per-rank element counts for a distribution of `m` elements.
pub fn element_counts(p: usize, m: usize, dist: Distribution) -> Vec<usize> {
    match dist {
        Distribution::Regular => {
            let base = m / p;
            let extra = m % p;
            (0..p).map(|i| base + usize::from(i < extra)).collect()
        }
        Distribution::Irregular => (0..p).map(|i| (i % 3) * (m / p)).collect(),
        Distribution::Degenerate => {
            let mut counts = vec![0; p];
            counts[0] = m;
            counts
        }
    }
}

/// Element range of block `b` when `mj` elements are split into `n` blocks of
/// `ceil(mj / n)` elements (last block short).
pub fn block_slice(mj: usize, n: usize, b: usize) -> BlockSlice {
    if mj == 0 {
        return BlockSlice { start: 0, len: 0 };
    }
    let size = mj.div_ceil(n);
    let start = (b * size).min(mj);
    let end = (start + size).min(mj);
    BlockSlice { start, len: end - start }
}

/// Mode selector for [`choose_block_count`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockCountMode {
    Broadcast,
    Allgather,
}

/// Pick a block count for `m` elements: block size `F * sqrt(m / q)` for
/// broadcast, `sqrt(m * q) / G` blocks for all-broadcast, clamped to
/// `[1, m]`. The factor is a system-dependent tuning constant.
pub fn choose_block_count(m: usize, p: usize, mode: BlockCountMode, factor: f64) -> usize {
    assert!(m >= 1, "element count must be positive");
    assert!(factor > 0.0, "tuning factor must be positive");
    let q = ceil_log2(p).max(1);
    match mode {
        BlockCountMode::Broadcast => {
            let size = (factor * (m as f64 / q as f64).sqrt()).max(1.0);
            ((m as f64 / size).ceil() as usize).clamp(1, m)
        }
        BlockCountMode::Allgather => {
            (((m as f64 * q as f64).sqrt() / factor).floor() as usize).clamp(1, m)
        }
    }
}

/// Effective block value of a schedule entry at absolute round `i` with
/// `k = i mod q`: the raw entry shifted by the virtual rounds `x` and
/// advanced one phase per elapsed period.
pub(crate) fn value_at(raw: i32, k: usize, i: usize, x: usize) -> i64 {
    raw as i64 + (i - k) as i64 - x as i64
}

/// Schedules indexed `[rank][round]`.
pub(crate) type RankSchedules = Vec<Vec<i32>>;

/// Raw (un-offset) receive and send schedules for all ranks, renumbered so
/// that `root` plays rank 0.
pub(crate) fn schedules_for_root(
    topo: &Topology,
    root: usize,
) -> Result<(RankSchedules, RankSchedules), Error> {
    let p = topo.p();
    let mut recv = Vec::with_capacity(p);
    let mut send = Vec::with_capacity(p);
    for r in 0..p {
        let rr = renumber_for_root(r, root, p);
        recv.push(recv_schedule(topo, rr)?.blocks);
        send.push(send_schedule(topo, rr)?.blocks);
    }
    Ok((recv, send))
}

/// Schedules indexed `[rank][root][round]`.
pub(crate) type PerRootSchedules = Vec<Vec<Vec<i32>>>;

/// Per-root raw receive schedules (`recv[r][j]` is rank `r`'s schedule with
/// rank `j` as root) and the matching send schedules derived from them.
pub(crate) fn per_root_schedules(
    topo: &Topology,
) -> Result<(PerRootSchedules, PerRootSchedules), Error> {
    let p = topo.p();
    let q = topo.q();
    let mut recv = Vec::with_capacity(p);
    for r in 0..p {
        let mut per_root = Vec::with_capacity(p);
        for j in 0..p {
            per_root.push(recv_schedule(topo, renumber_for_root(r, j, p))?.blocks);
        }
        recv.push(per_root);
    }
    let mut send = vec![vec![vec![0i32; q]; p]; p];
    for r in 0..p {
        for j in 0..p {
            for k in 0..q {
                let f = (j + p - topo.skip(k)) % p;
                send[r][j][k] = recv[r][f][k];
            }
        }
    }
    Ok((recv, send))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_count_clamps_to_one() {
        assert_eq!(choose_block_count(1, 17, BlockCountMode::Broadcast, 70.0), 1);
        assert_eq!(choose_block_count(1, 1, BlockCountMode::Allgather, 40.0), 1);
    }

    #[test]
    fn block_count_formulas() {
        // F * sqrt(m/q) = 70 * sqrt(200000) = 31304.95..; ceil(1e6 / s) = 32.
        assert_eq!(
            choose_block_count(1_000_000, 17, BlockCountMode::Broadcast, 70.0),
            32
        );
        // sqrt(m * q) / G = sqrt(1.1e7) / 40 = 82.91..; floor = 82.
        assert_eq!(
            choose_block_count(1_000_000, 1152, BlockCountMode::Allgather, 40.0),
            82
        );
    }

    #[test]
    fn element_count_distributions() {
        assert_eq!(element_counts(4, 10, Distribution::Regular), vec![3, 3, 2, 2]);
        assert_eq!(element_counts(4, 12, Distribution::Irregular), vec![0, 3, 6, 0]);
        assert_eq!(element_counts(4, 12, Distribution::Degenerate), vec![12, 0, 0, 0]);
    }

    #[test]
    fn block_slices_cover_buffer() {
        let slices: Vec<BlockSlice> = (0..4).map(|b| block_slice(10, 4, b)).collect();
        assert_eq!(slices[0], BlockSlice { start: 0, len: 3 });
        assert_eq!(slices[3], BlockSlice { start: 9, len: 1 });
        assert_eq!(slices.iter().map(|s| s.len).sum::<usize>(), 10);
        assert_eq!(block_slice(0, 4, 2), BlockSlice { start: 0, len: 0 });
    }

    #[test]
    fn non_commutative_op_rejected() {
        let spec = CollectiveSpec::reduce(4, 1, 0, ReduceOp::SeqConcat);
        assert_eq!(
            spec.validate(),
            Err(Error::NonCommutativeOp { op: "seq-concat" })
        );
    }
}
