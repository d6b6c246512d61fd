use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid subset {subset:?} for n={n}, r={r}: {reason}")]
    InvalidSubset {
        subset: Vec<usize>,
        n: usize,
        r: usize,
        reason: &'static str,
    },

    #[error("index {index} out of range (count {count})")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("invalid dimensions n={n}, r={r}: {reason}")]
    InvalidDimensions { n: usize, r: usize, reason: &'static str },

    #[error("invalid word: {0}")]
    InvalidWord(String),

    #[error("dimension mismatch: ({0}, {1}) vs ({2}, {3})")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("pattern length {found} does not match rank {rank} (expected {expected})")]
    PatternLength { rank: usize, expected: usize, found: usize },

    #[error("invalid gadget problem: {0}")]
    InvalidProblem(String),

    #[error("malformed model: {0}")]
    MalformedModel(String),

    #[error("construction error: {0}")]
    Construction(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("exhaustive enumeration budget exceeded ({candidates} candidates > {budget})")]
    BudgetExceeded { candidates: u128, budget: u128 },

    #[error("timed out")]
    Timeout,

    #[error("no reduction: {0}")]
    NoReduction(String),

    #[error("gadget combination is unsound: {0}")]
    Combination(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
