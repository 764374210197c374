//! Shared test oracles: frozen schedule tables, the p -> 2p doubling
//! constructions, and direct (non-distributed) reduction. Everything here is
//! independent of the schedule-computation path it is used to check.

#![allow(dead_code)]

use circulant_collectives::sim::{contribution, ReduceOp, Value};

/// A full schedule table: one column per rank, baseblock row, `q` receive
/// rows, `q` send rows.
pub struct GoldenTable {
    pub p: usize,
    pub baseblocks: &'static [usize],
    pub recv: &'static [&'static [i32]],
    pub send: &'static [&'static [i32]],
}

pub const TABLE_P17: GoldenTable = GoldenTable {
    p: 17,
    baseblocks: &[5, 0, 1, 2, 0, 3, 0, 1, 2, 4, 0, 1, 2, 0, 3, 0, 1],
    recv: &[
        &[-4, 0, -5, -4, -3, -5, -2, -5, -4, -3, -1, -5, -4, -3, -5, -2, -5],
        &[-5, -4, 1, -5, -4, -3, -3, -2, -5, -4, -3, -1, -5, -4, -3, -3, -2],
        &[-2, -2, -2, 2, 0, -4, -4, -3, -2, -2, -4, -3, -1, -1, -4, -4, -3],
        &[-1, -3, -3, -2, -2, 3, 0, 1, 2, -5, -2, -2, -2, -2, -1, -1, -1],
        &[-3, -1, -1, -1, -1, -1, -1, -1, -1, 4, 0, 1, 2, 0, 3, 0, 1],
    ],
    send: &[
        &[0, -5, -4, -3, -5, -2, -5, -4, -3, -1, -5, -4, -3, -5, -2, -5, -4],
        &[1, -5, -4, -3, -3, -2, -5, -4, -3, -1, -5, -4, -3, -3, -2, -5, -4],
        &[2, 0, -4, -4, -3, -2, -2, -4, -3, -1, -1, -4, -4, -3, -2, -2, -2],
        &[3, 0, 1, 2, -5, -2, -2, -2, -2, -1, -1, -1, -1, -3, -3, -2, -2],
        &[4, 0, 1, 2, 0, 3, 0, 1, -3, -1, -1, -1, -1, -1, -1, -1, -1],
    ],
};

pub const TABLE_P9: GoldenTable = GoldenTable {
    p: 9,
    baseblocks: &[4, 0, 1, 2, 0, 3, 0, 1, 2],
    recv: &[
        &[-2, 0, -4, -3, -2, -4, -1, -4, -3],
        &[-3, -2, 1, -4, -3, -2, -2, -1, -4],
        &[-1, -3, -2, 2, 0, -3, -3, -2, -1],
        &[-4, -1, -1, -1, -1, 3, 0, 1, 2],
    ],
    send: &[
        &[0, -4, -3, -2, -4, -1, -4, -3, -2],
        &[1, -4, -3, -2, -2, -1, -4, -3, -2],
        &[2, 0, -3, -3, -2, -1, -1, -3, -2],
        &[3, 0, 1, 2, -4, -1, -1, -1, -1],
    ],
};

pub const TABLE_P18: GoldenTable = GoldenTable {
    p: 18,
    baseblocks: &[5, 0, 1, 2, 0, 3, 0, 1, 2, 4, 0, 1, 2, 0, 3, 0, 1, 2],
    recv: &[
        &[-3, 0, -5, -4, -3, -5, -2, -5, -4, -3, -1, -5, -4, -3, -5, -2, -5, -4],
        &[-4, -3, 1, -5, -4, -3, -3, -2, -5, -4, -3, -1, -5, -4, -3, -3, -2, -5],
        &[-2, -4, -3, 2, 0, -4, -4, -3, -2, -2, -4, -3, -1, -1, -4, -4, -3, -2],
        &[-5, -2, -2, -2, -2, 3, 0, 1, 2, -5, -2, -2, -2, -2, -1, -1, -1, -1],
        &[-1, -1, -1, -1, -1, -1, -1, -1, -1, 4, 0, 1, 2, 0, 3, 0, 1, 2],
    ],
    send: &[
        &[0, -5, -4, -3, -5, -2, -5, -4, -3, -1, -5, -4, -3, -5, -2, -5, -4, -3],
        &[1, -5, -4, -3, -3, -2, -5, -4, -3, -1, -5, -4, -3, -3, -2, -5, -4, -3],
        &[2, 0, -4, -4, -3, -2, -2, -4, -3, -1, -1, -4, -4, -3, -2, -2, -4, -3],
        &[3, 0, 1, 2, -5, -2, -2, -2, -2, -1, -1, -1, -1, -5, -2, -2, -2, -2],
        &[4, 0, 1, 2, 0, 3, 0, 1, 2, -1, -1, -1, -1, -1, -1, -1, -1, -1],
    ],
};

/// Per-rank schedules in rank-major order, plus baseblocks.
pub struct ScheduleSet {
    pub p: usize,
    pub q: usize,
    pub baseblocks: Vec<usize>,
    pub recv: Vec<Vec<i32>>,
    pub send: Vec<Vec<i32>>,
}

impl ScheduleSet {
    pub fn computed(p: usize) -> ScheduleSet {
        use circulant_collectives::{recv_schedule, send_schedule, Topology};
        let topo = Topology::new(p).unwrap();
        let mut baseblocks = Vec::with_capacity(p);
        let mut recv = Vec::with_capacity(p);
        let mut send = Vec::with_capacity(p);
        for r in 0..p {
            let rs = recv_schedule(&topo, r).unwrap();
            baseblocks.push(rs.baseblock);
            recv.push(rs.blocks);
            send.push(send_schedule(&topo, r).unwrap().blocks);
        }
        ScheduleSet { p, q: topo.q(), baseblocks, recv, send }
    }
}

/// Receive-schedule doubling, p -> 2p: copy each schedule to the mirror
/// rank, drop every negative entry one further down, give rank p the new
/// baseblock `q`, move each other large rank's baseblock into the new last
/// round, and give small ranks a `-1` there.
pub fn double_recv(set: &ScheduleSet) -> ScheduleSet {
    let (p, q) = (set.p, set.q);
    let mut baseblocks = Vec::with_capacity(2 * p);
    let mut recv = Vec::with_capacity(2 * p);
    for r in 0..2 * p {
        let src = &set.recv[r % p];
        let mut blocks: Vec<i32> = src
            .iter()
            .map(|&v| if v < 0 { v - 1 } else { v })
            .collect();
        if r < p {
            blocks.push(-1);
            baseblocks.push(if r == 0 { q + 1 } else { set.baseblocks[r] });
        } else if r == p {
            blocks.push(q as i32);
            baseblocks.push(q);
        } else {
            let b = set.baseblocks[r - p] as i32;
            let pos = blocks.iter().position(|&v| v == b).expect("baseblock entry");
            blocks[pos] = -1;
            blocks.push(b);
            baseblocks.push(b as usize);
        }
        recv.push(blocks);
    }
    ScheduleSet { p: 2 * p, q: q + 1, baseblocks, recv, send: Vec::new() }
}

/// Send-schedule doubling, p -> 2p: copy to the mirror rank, drop negatives
/// one down, blank the large ranks' positive entries, and let each small
/// rank send its baseblock in the new last round.
pub fn double_send(set: &ScheduleSet) -> Vec<Vec<i32>> {
    let p = set.p;
    let mut send = Vec::with_capacity(2 * p);
    for r in 0..2 * p {
        let src = &set.send[r % p];
        let mut blocks: Vec<i32> = src
            .iter()
            .map(|&v| if v < 0 { v - 1 } else { v })
            .collect();
        if r < p {
            blocks.push(set.baseblocks[r] as i32);
        } else {
            for v in blocks.iter_mut() {
                if *v >= 0 {
                    *v = -1;
                }
            }
            blocks.push(-1);
        }
        send.push(blocks);
    }
    send
}

/// Direct reduction: fold every rank's contribution for each block.
pub fn direct_reduce(op: ReduceOp, p: usize, n: usize) -> Vec<Value> {
    (0..n)
        .map(|j| {
            let mut acc = contribution(op, 0, j);
            for r in 1..p {
                acc.merge(&contribution(op, r, j)).unwrap();
            }
            acc
        })
        .collect()
}

/// Direct reduce-scatter: for each partition j and block b, fold every
/// rank's contribution for global block `j * n + b`.
pub fn direct_reduce_scatter(op: ReduceOp, p: usize, n: usize) -> Vec<Vec<Value>> {
    (0..p)
        .map(|j| {
            (0..n)
                .map(|b| {
                    let g = j * n + b;
                    let mut acc = contribution(op, 0, g);
                    for r in 1..p {
                        acc.merge(&contribution(op, r, g)).unwrap();
                    }
                    acc
                })
                .collect()
        })
        .collect()
}
