use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("provider {0} owns no items")]
    EmptyProvider(usize),

    #[error("score {value} for (user {user}, item {item}) lies outside [0, 1]")]
    ScoreOutOfRange { user: usize, item: usize, value: f64 },

    #[error("no preference score stored for (user {user}, item {item})")]
    MissingScore { user: usize, item: usize },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("all scores are equal ({0}); min-max normalization is degenerate")]
    DegenerateNormalization(f64),

    #[error("dual variable lies outside the feasible region; the conjugate is unbounded")]
    InfeasibleDual,

    #[error("only {available} candidate items for a ranking of size {needed}")]
    InsufficientCandidates { needed: usize, available: usize },

    #[error("oracle needs {required} trajectories but the budget is {budget}")]
    BudgetExceeded { required: String, budget: u64 },

    #[error("no trajectory satisfies the exposure caps")]
    NoFeasibleTrajectory,

    #[error("original list at step {step} has zero DCG")]
    ZeroDcg { step: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code: 1 for configuration problems, 3 when the oracle
    /// budget is exceeded, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Config(_) => 1,
            Error::BudgetExceeded { .. } => 3,
            _ => 2,
        }
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}
