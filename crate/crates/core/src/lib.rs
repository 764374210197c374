//! Round-optimal broadcast schedules on circulant graphs.
//!
//! Broadcasting `n` indivisible blocks over `p` fully connected, one-ported,
//! bidirectional ranks needs `n - 1 + ceil(log2 p)` communication rounds.
//! This crate computes per-rank receive and send schedules that reach that
//! bound in `O(log p)` time and space per rank, with no communication, over
//! a `ceil(log2 p)`-regular circulant graph. The same schedules drive
//! round-optimal all-broadcast (allgatherv), reduction and reduce-scatter,
//! which the [`sim`] module executes in a deterministic round-synchronous
//! simulator. The [`verify`] module checks the four schedule correctness
//! conditions and the structural bounds of the computation exhaustively over
//! ranges of `p`.

// Rank- and round-indexed loops over parallel arrays are the idiom here.
#![allow(clippy::needless_range_loop)]

pub mod bench;
pub mod circulant;
mod error;
pub mod formats;
pub mod schedule;
pub mod sim;
pub mod verify;

pub use circulant::{SkipSequence, Topology};
pub use error::Error;
pub use schedule::{
    offset_for_virtual_rounds, recv_schedule, recv_schedule_with_stats, renumber_for_root,
    send_schedule, send_schedule_oracle, send_schedule_with_stats, virtual_rounds, RecvSchedule,
    SearchStats, SendSchedule, SendStats,
};
pub use verify::{verify_document, verify_range, verify_schedules, VerificationReport};
