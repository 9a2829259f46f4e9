//! Exact finite computation with symbolic matrix systems, lambda-graph
//! systems, textile systems, and strong shift equivalences between them.
//!
//! The library works with leveled presentations of subshifts:
//!
//! - [`symbolic`] — words, formal sums, symbolic matrices over formal sums,
//!   0/1 matrices, and specifications (finite word bijections).
//! - [`sms`] — symbolic matrix systems `(M_l, I_l)`, their axioms, higher
//!   blocks, product systems, and exact language enumeration.
//! - [`lgs`] — the same objects as leveled labeled graphs, with structural
//!   checks (essential, left-resolving, local property) and path enumeration.
//! - [`textile`] — textile systems on lambda-graph systems: duals, higher
//!   blocks, the LR construction from a commuting specification, bounded
//!   decoders, weave patches, and the induced automorphism.
//! - [`sse`] — properly strong shift equivalences, the induced systems and
//!   specifications, forward automorphisms as sliding block codes, and
//!   subshift-identification of `phi^k sigma^n`.
//!
//! All values are immutable after construction and all operations are pure,
//! so concurrent evaluation needs no synchronization.

#![allow(clippy::needless_range_loop)]

pub mod lgs;
pub mod sms;
pub mod sse;
pub mod symbolic;
pub mod textile;

pub use symbolic::{Alphabet, BitMatrix, FormalSum, Specification, Sym, SymbolicMatrix, Word};

/// Library-wide error type.
///
/// Validation operations return verdict values with structured witnesses
/// instead of errors; `Error` is reserved for misuse (shape mismatches,
/// exhausted level windows, inadmissible inputs) and for constructions whose
/// preconditions fail.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Matrix or map dimensions are incompatible.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Word lengths or specification shapes are incompatible.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A term is not covered by a specification's domain.
    #[error("unmapped term: {0}")]
    UnmappedTerm(String),

    /// A specification table is not injective or not single-valued.
    #[error("not a bijection: {0}")]
    NotBijective(String),

    /// A system fails its defining axioms where a construction requires them.
    #[error("invalid system: {0}")]
    InvalidSystem(String),

    /// A level window needed by an operation does not exist.
    #[error("level window unavailable: {0}")]
    WindowUnavailable(String),

    /// A construction requires a left-resolving system.
    #[error("not left-resolving: {0}")]
    NotLeftResolving(String),

    /// The local property fails where a construction requires it.
    #[error("local property violated: {0}")]
    LocalProperty(String),

    /// Brute-force search bounds exceeded.
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    /// Two systems do not form squares where an operation requires it.
    #[error("squares precondition violated: {0}")]
    SquaresMismatch(String),

    /// A required specified equivalence fails; carries the first witness.
    #[error("specified equivalence fails: {0}")]
    EquivalenceFails(String),

    /// No decoder exists within the window bound; carries an ambiguous pair.
    #[error("decoder ambiguous: {0}")]
    DecoderAmbiguous(String),

    /// An input word is not admissible for the system at hand.
    #[error("inadmissible word: {0}")]
    Inadmissible(String),

    /// An input word is too short for the requested trimming.
    #[error("word too short: {0}")]
    WordTooShort(String),

    /// A weave patch is malformed or too small for the requested read.
    #[error("patch error: {0}")]
    Patch(String),

    /// Patch extension failed, signalling a nondegeneracy violation.
    #[error("extension failed: {0}")]
    ExtensionFailed(String),
}

/// Library-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
