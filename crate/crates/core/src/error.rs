use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty itemset")]
    EmptyItemSet,

    #[error("empty item name")]
    EmptyItemName,

    #[error("itemset mixes namespaces {0} and {1}")]
    MixedNamespaces(&'static str, &'static str),

    #[error("malformed itemset key {0:?}")]
    MalformedKey(String),

    #[error("invalid rule: {0}")]
    InvalidRule(String),

    #[error("duplicate transaction id {0:?}")]
    DuplicateTransactionId(String),

    #[error("transactions mix generic and issue/tech records (first mismatch at {0:?})")]
    MixedDatabaseModes(String),

    #[error("database has no transactions")]
    EmptyDatabase,

    #[error("invalid mining configuration: {0}")]
    InvalidMiningConfig(String),

    #[error(
        "pair budget of {budget} exceeded at transaction {transaction:?} ({required} enumerations needed)"
    )]
    BudgetExceeded {
        transaction: String,
        budget: u64,
        required: u64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("undefined confidence: cf(X) = 0")]
    UndefinedConfidence,

    #[error("inconsistent frequencies: {0}")]
    InconsistentFrequencies(String),

    #[error("rule {rule} has no {measure} score")]
    MissingScore { rule: String, measure: &'static str },

    #[error("k must be at least 1")]
    InvalidK,

    #[error("need rules with at least two distinct labels to sample a pair")]
    NotEnoughLabels,

    #[error("unknown item {0:?}")]
    UnknownItem(String),

    #[error("unknown namespace tag {0:?}")]
    UnknownNamespace(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: unknown namespace tag {tag:?}")]
    UnknownNamespaceTag {
        path: PathBuf,
        line: usize,
        tag: String,
    },

    #[error("item name {0:?} contains the reserved separator ';'")]
    ReservedCharacter(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
