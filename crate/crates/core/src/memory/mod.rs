//! Approximate ST-MRAM word storage.

mod fixed;
mod profile;
mod sampler;
mod store;

pub use fixed::{Encoding, FixedPointFormat, WORD_BITS};
pub use profile::{BitProgram, ProgrammingProfile, Scheme};
pub use sampler::{naive_failure_mask, FastSampler, GEOMETRIC_MAX_BER};
pub use store::{read_snapshot, ApproxWeightStore, EnergyLedger, SamplerKind};

use crate::error::SolveError;

#[derive(Debug, thiserror::Error)]
pub enum MemoryError {
    #[error("index {index} out of range for store of {len} words")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("expected {expected} target words, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid BER {0}")]
    InvalidBer(f64),
    #[error("number of LSBs must be at most 16, got {0}")]
    InvalidLsbCount(u32),
    #[error("custom profiles must be built from explicit per-bit values")]
    CustomScheme,
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("snapshot is not an AMEM file")]
    SnapshotMagic,
    #[error("unsupported snapshot version {0}")]
    SnapshotVersion(u32),
    #[error("snapshot has invalid format field {0:#x}")]
    SnapshotFormat(u32),
    #[error("snapshot truncated or payload length does not match word count")]
    SnapshotTruncated,
    #[error("snapshot format {got:?} does not match the store's {expected:?}")]
    FormatMismatch { expected: FixedPointFormat, got: FixedPointFormat },
    #[error("store of {0} words is too large for a snapshot")]
    SnapshotTooLarge(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
