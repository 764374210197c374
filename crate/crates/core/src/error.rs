/// Errors for invalid inputs to topology, schedule and simulator operations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("processor count must be at least 1")]
    ZeroProcessors,
    #[error("rank {rank} out of range for p={p}")]
    RankOutOfRange { rank: usize, p: usize },
    #[error("root {root} out of range for p={p}")]
    RootOutOfRange { root: usize, p: usize },
    #[error("block count must be at least 1")]
    ZeroBlocks,
    #[error("reduction operator {op} is not commutative")]
    NonCommutativeOp { op: &'static str },
    #[error("collective {found} cannot be run by {expected}")]
    WrongCollective {
        expected: &'static str,
        found: &'static str,
    },
}
