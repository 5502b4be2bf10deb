use thiserror::Error;

use crate::word::Word;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("letter {letter} out of range for arity {arity}")]
    LetterOutOfRange { letter: u8, arity: usize },

    #[error("label {label} out of range for {count} labels")]
    LabelOutOfRange { label: u8, count: usize },

    #[error("invalid block: {0}")]
    InvalidBlock(String),

    #[error("window of height {height} at depth {offset} exceeds block height {block_height}")]
    WindowOutOfRange {
        offset: usize,
        height: usize,
        block_height: usize,
    },

    #[error("depth exhausted: cannot shift a tree of depth {0}")]
    DepthExhausted(usize),

    #[error("depth mismatch: {0} vs {1}")]
    DepthMismatch(usize, usize),

    #[error("arity mismatch: {0} vs {1}")]
    ArityMismatch(usize, usize),

    #[error("tree too shallow: need depth {need}, have {have}")]
    TooShallow { need: usize, have: usize },

    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("height {height} too small for a pattern of height {needed}")]
    HeightTooSmall { height: usize, needed: usize },

    #[error("enumeration budget exceeded: {needed} blocks requested, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },

    #[error("count overflow")]
    CountOverflow,

    #[error("block is not in the language of the shift")]
    NotInLanguage,

    #[error("the shift is empty")]
    EmptyShift,

    #[error("shift is not perfect: cylinder of rigid block [{rigid}] is an isolated point")]
    NotPerfect { rigid: String },

    #[error("insufficient depth to separate entries: need slack {required_slack}")]
    InsufficientDepth { required_slack: usize },

    #[error("family is not a pseudo-orbit at its declared resolution (first violation at {word}, node {node})")]
    Unverified { word: Word, node: Word },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("certification failed: {0}")]
    CertificationFailed(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}
