use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("pose ({x:.3}, {y:.3}) lies inside an obstacle cell")]
    PoseInObstacle { x: f64, y: f64 },

    #[error("pose ({x:.3}, {y:.3}) lies outside the world bounds")]
    PoseOutOfBounds { x: f64, y: f64 },

    #[error("no path between the requested cells")]
    NoPath,

    #[error("invalid path endpoint {cell:?}: cost {cost} is not traversable")]
    InvalidEndpoint { cell: (usize, usize), cost: u8 },

    #[error("unknown topic `{0}`")]
    UnknownTopic(String),

    #[error("topic `{topic}` carries {expected} payloads, got {found}")]
    TopicTypeMismatch {
        topic: String,
        expected: &'static str,
        found: &'static str,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("invalid detector profile: {0}")]
    Profile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}
