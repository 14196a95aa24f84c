//! LZ78-based sequential probability assignments and their surroundings.
//!
//! The crate is organized around a streaming LZ78 prefix tree ([`tree::Lz78Tree`])
//! and the family of next-symbol probability rules that condition on the LZ78
//! context of each symbol ([`spa::Lz78Spa`]). On top of those sit:
//!
//! - [`oracle`]: exact optimal Markov / finite-state log losses for a finite
//!   sequence, used as ground truth when evaluating the LZ78 models,
//! - [`source`]: probability sources that sample the LZ78 model (per-node
//!   mixture parameters, or direct sampling of the sequential assignment),
//! - [`codebook`]: lossless compression by drawing codewords from the source
//!   until the target prefix is matched,
//! - [`generate`]: frozen-tree sequence generation with top-k, temperature,
//!   and back-shift re-seeding,
//! - [`classify`]: one model per class, minimum-log-loss classification,
//! - [`storage`]: a fixed binary model format with byte-identical round trips.

pub mod classify;
pub mod codebook;
pub mod generate;
pub mod oracle;
pub mod sequence;
pub mod source;
pub mod spa;
pub mod storage;
pub mod tree;

pub use sequence::{Alphabet, Sequence};
pub use spa::{Lz78Spa, PriorSpec};
pub use tree::{Lz78Tree, NodeId, ParseSummary};

/// Errors surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("symbol {symbol} out of range for alphabet of size {alphabet_size}")]
    SymbolOutOfRange { symbol: u32, alphabet_size: u32 },

    #[error("alphabet size must be at least 2, got {0}")]
    AlphabetTooSmall(u32),

    #[error("charmap must contain exactly {expected} distinct characters, got {got}")]
    BadCharmap { expected: u32, got: usize },

    #[error("window {start}..={end} out of range for sequence of length {len}")]
    WindowOutOfRange {
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("operation requires a nonempty sequence")]
    EmptySequence,

    #[error("prior is not valid here: {0}")]
    InvalidPrior(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("sequence is not a realization of the Bernoulli LZ78 source: {0}")]
    NotBernoulliRealization(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
