use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range input (bad indices, redundant bundles, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Operation requires the other preference mode (ordinal vs cardinal).
    #[error("preference mode mismatch: {0}")]
    Mode(String),

    /// A value outside the operation's domain, e.g. a nonpositive utility under Nash welfare.
    #[error("domain error: {0}")]
    Domain(String),

    /// Exhaustive work refused because the state space exceeds the budget.
    #[error("refused: {what} needs {required} states, budget is {budget}")]
    TooLarge {
        what: &'static str,
        required: u128,
        budget: u128,
    },

    #[error("formula: {0}")]
    Formula(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
