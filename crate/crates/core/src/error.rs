use thiserror::Error;

pub type Result<T, E = XlabelError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum XlabelError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("labels contain a single class; both classes are required to train")]
    DegenerateLabels,
    #[error("cannot deserialize model: {0}")]
    Deserialize(String),
    #[error("no unlabeled records left to sample")]
    EmptyPool,
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("chain order error: {0}")]
    ChainOrder(String),
    #[error("csv error: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl XlabelError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        XlabelError::InvalidInput(msg.into())
    }
}
