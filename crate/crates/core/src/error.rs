use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite state")]
    NonFinite,

    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("action dimension mismatch for {task}: expected {expected}, got {got}")]
    ActionDimension {
        task: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("point count mismatch: {current} current vs {goal} goal")]
    CountMismatch { current: usize, goal: usize },

    #[error("episode finished")]
    EpisodeFinished,

    #[error("environment has not been reset")]
    NotReset,

    #[error("variation index {0} out of range (must be < 1000)")]
    IndexOutOfRange(usize),

    #[error("variation {index} is not in the cache; generate it with `softgym gen-cache {task} --seed <S>`")]
    MissingVariation { task: &'static str, index: usize },

    #[error("snapshot belongs to task {found}, environment runs {expected}")]
    SnapshotMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("variation cache {0} not found; create it with `softgym gen-cache`")]
    CacheMissing(String),

    #[error("unknown task `{0}`")]
    UnknownTask(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error("planner configuration: {0}")]
    Config(String),

    #[error("variation {index}: {source}")]
    Variation {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }
}
