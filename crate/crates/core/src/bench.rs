//! Wall-clock timing of per-rank schedule computation.
//!
//! For one `p`, the receive and send schedules of every rank (or of an
//! evenly strided sample above [`SAMPLE_CAP`] ranks) are computed back to
//! back; the median over `reps` repetitions gives the per-rank figure.
//! Absolute numbers are hardware-dependent; trends over `p` are the metric.

use crate::circulant::{Topology, MAX_Q};
use crate::error::Error;
use crate::schedule::{recv_into, send_into, send_oracle_into};
use serde::{Deserialize, Serialize};
use std::hint::black_box;
use std::time::Instant;

/// Ranks measured per `p` before sampling kicks in.
pub const SAMPLE_CAP: usize = 1 << 15;

/// One bench measurement. When ranks were sampled, `total_seconds` is the
/// per-rank median scaled to all `p` ranks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub p: usize,
    pub total_seconds: f64,
    pub per_rank_us: f64,
}

fn measure(p: usize, reps: usize, oracle: bool) -> Result<Option<BenchRow>, Error> {
    if reps == 0 {
        return Ok(None);
    }
    let topo = Topology::new(p)?;
    let q = topo.q();
    let stride = (p / SAMPLE_CAP).max(1);
    let mut recv = [0i32; MAX_Q];
    let mut send = [0i32; MAX_Q];

    let mut runs: Vec<(f64, usize)> = Vec::with_capacity(reps);
    for _ in 0..reps {
        let mut measured = 0usize;
        let start = Instant::now();
        let mut r = 0;
        while r < p {
            recv_into(&topo, r, &mut recv[..q])?;
            if oracle {
                send_oracle_into(&topo, r, &mut send[..q])?;
            } else {
                send_into(&topo, r, &mut send[..q])?;
            }
            black_box((&recv, &send));
            measured += 1;
            r += stride;
        }
        runs.push((start.elapsed().as_secs_f64(), measured));
    }
    runs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (elapsed, measured) = runs[reps / 2];
    let per_rank_us = elapsed * 1e6 / measured as f64;
    Ok(Some(BenchRow {
        p,
        total_seconds: per_rank_us * p as f64 / 1e6,
        per_rank_us,
    }))
}

/// Time the `O(log p)` receive + send schedule computation.
pub fn time_schedules(p: usize, reps: usize) -> Result<Option<BenchRow>, Error> {
    measure(p, reps, false)
}

/// Time the receive schedule plus the `O(log^2 p)` oracle send schedule.
pub fn time_schedules_oracle(p: usize, reps: usize) -> Result<Option<BenchRow>, Error> {
    measure(p, reps, true)
}
