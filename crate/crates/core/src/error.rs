use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown proposition `{0}`")]
    UnknownProposition(String),

    #[error("invalid proposition set: {0}")]
    InvalidPropSet(String),

    #[error("effect `{0}` is unsatisfiable")]
    UnsatisfiableEffect(String),

    #[error("effect `{0}` is not in the action library")]
    EffectNotInLibrary(String),

    #[error("ill-formed action: {}", .0.join("; "))]
    IllFormed(Vec<String>),

    #[error("{what}: {count} objects exceed the budget of {budget}")]
    BudgetExceeded {
        what: &'static str,
        count: String,
        budget: u64,
    },

    #[error("action depth {action} exceeds available depth {available}")]
    DepthExceeded { action: usize, available: usize },

    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("selection function undefined for state `{state}` and effect atoms {effect:?}")]
    MissingSelection { state: String, effect: Vec<usize> },

    #[error("invalid selection model: {0}")]
    InvalidModel(String),

    #[error("progress function has unknown provenance")]
    UnknownProvenance,

    #[error("action is not in the preference pool: {0}")]
    NotInPool(String),

    #[error("invalid preference data: {0}")]
    InvalidPreferences(String),

    #[error("linear system is inconsistent: {0}")]
    Inconsistent(String),

    #[error("depth {depth}: constrained utility system is infeasible")]
    StitchInfeasible { depth: usize },

    #[error("malformed JSON: {0}")]
    Json(String),

    #[error("{0}")]
    Io(String),
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Json(err.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
