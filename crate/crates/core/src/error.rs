use thiserror::Error;

/// Errors shared across the group arithmetic, protocol, attack and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Two elements built over different group parameters were combined.
    #[error("mismatched group parameters: n={left} vs n={right}")]
    MismatchedParams { left: usize, right: usize },

    /// An exponent left the checked 64-bit integer range.
    #[error("integer overflow in exponent arithmetic")]
    Overflow,

    /// A word letter or key factor referenced a generator that does not exist.
    #[error("generator index {index} out of range (count {count})")]
    BadIndex { index: usize, count: usize },

    /// An invalid sampling range such as L1 > L2 or L1 = 0.
    #[error("invalid length range [{min}, {max}]")]
    BadRange { min: usize, max: usize },

    /// Structurally invalid parameters (empty public set, zero key length, ...).
    #[error("bad parameters: {0}")]
    BadParams(String),

    /// The collection engine hit its iteration cap; the presentation is
    /// malformed or not polycyclic.
    #[error("collection did not terminate within {steps} steps")]
    NonTerminating { steps: u64 },

    /// The two derived session keys failed the K_A = K_B^-1 identity.
    #[error("protocol mismatch: derived shared keys are not mutually inverse")]
    ProtocolMismatch,

    /// An experiment configuration failed validation.
    #[error("config error: {0}")]
    ConfigError(String),

    /// Trend analysis was asked to compare rows that vary in more than one
    /// parameter (or in none).
    #[error("incomparable rows: {0}")]
    IncomparableRows(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
