//! Structural checks over simulation traces.

use super::TraceEvent;
use crate::circulant::Topology;
use crate::schedule::{renumber_for_root, virtual_rounds};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A violation of the communication model or of the phase semantics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceViolation {
    /// A rank sent to more than one receiver in one round.
    MultiSend { round: usize, rank: usize },
    /// A rank received from more than one sender in one round.
    MultiRecv { round: usize, rank: usize },
    /// An edge whose offset is not `+-sigma[k]` for its round.
    NonCirculantEdge { round: usize, sender: usize, receiver: usize },
    /// A rank's held blocks after a complete phase do not match the
    /// phase formula.
    PhaseMismatch { phase: usize, rank: usize, detail: String },
}

impl fmt::Display for TraceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceViolation::MultiSend { round, rank } => {
                write!(f, "round {round}: rank {rank} sends more than once")
            }
            TraceViolation::MultiRecv { round, rank } => {
                write!(f, "round {round}: rank {rank} receives more than once")
            }
            TraceViolation::NonCirculantEdge { round, sender, receiver } => {
                write!(f, "round {round}: edge {sender}->{receiver} is not a circulant edge")
            }
            TraceViolation::PhaseMismatch { phase, rank, detail } => {
                write!(f, "phase {phase}: rank {rank}: {detail}")
            }
        }
    }
}

/// Check the one-port discipline and edge set of a trace against the
/// topology. Events sharing `(round, sender, receiver)` count as one packed
/// message; the edge offset must be `sigma[k]` in either direction for
/// `k = round mod q`.
pub fn check_trace(trace: &[TraceEvent], topo: &Topology) -> Vec<TraceViolation> {
    let p = topo.p();
    let q = topo.q();
    let mut violations = Vec::new();

    let mut rounds: BTreeMap<usize, BTreeSet<(usize, usize)>> = BTreeMap::new();
    for ev in trace {
        rounds.entry(ev.round).or_default().insert((ev.sender, ev.receiver));
    }

    for (&round, edges) in &rounds {
        let mut senders: BTreeMap<usize, usize> = BTreeMap::new();
        let mut receivers: BTreeMap<usize, usize> = BTreeMap::new();
        for &(s, r) in edges {
            *senders.entry(s).or_insert(0) += 1;
            *receivers.entry(r).or_insert(0) += 1;
            let skip = if q == 0 { 0 } else { topo.skip(round % q) };
            let forward = (r + p - s) % p;
            if q == 0 || (forward != skip && (p - forward) % p != skip) {
                violations.push(TraceViolation::NonCirculantEdge {
                    round,
                    sender: s,
                    receiver: r,
                });
            }
        }
        for (rank, count) in senders {
            if count > 1 {
                violations.push(TraceViolation::MultiSend { round, rank });
            }
        }
        for (rank, count) in receivers {
            if count > 1 {
                violations.push(TraceViolation::MultiRecv { round, rank });
            }
        }
    }
    violations
}

/// Check a broadcast trace against the per-phase block-set formula: after
/// `K` complete phases, rank `r` holds blocks `{0,..,(K-1)q-1}` plus
/// `baseblock + (K-1)q`, shifted down by the virtual rounds `x` and capped
/// at `n - 1`.
pub fn check_broadcast_phases(
    trace: &[TraceEvent],
    topo: &Topology,
    n: usize,
    root: usize,
) -> Vec<TraceViolation> {
    let p = topo.p();
    let q = topo.q();
    let mut violations = Vec::new();
    if q == 0 {
        return violations;
    }
    let x = virtual_rounds(n, q);
    let phases = (n + q - 1 + x) / q;

    let mut held: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); p];
    held[root] = (0..n).collect();

    let mut events: Vec<&TraceEvent> = trace.iter().collect();
    events.sort_by_key(|ev| ev.round);
    let mut next = 0usize;

    for phase in 1..=phases {
        while next < events.len() && events[next].round < phase * q {
            let ev = events[next];
            held[ev.receiver].insert(ev.block);
            next += 1;
        }
        for r in 0..p {
            if r == root {
                continue;
            }
            let b = topo
                .baseblock(renumber_for_root(r, root, p))
                .expect("rank in range");
            let expected: BTreeSet<usize> = (0..(phase - 1) * q)
                .chain(std::iter::once(b + (phase - 1) * q))
                .filter(|&v| v >= x)
                .map(|v| (v - x).min(n - 1))
                .collect();
            if held[r] != expected {
                violations.push(TraceViolation::PhaseMismatch {
                    phase,
                    rank: r,
                    detail: format!("held {:?}, expected {:?}", held[r], expected),
                });
            }
        }
    }
    violations
}
