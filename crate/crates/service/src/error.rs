use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;
use xlabel_core::XlabelError;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("{0} not found")]
    NotFound(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Conflict(String),
    #[error("nothing left to present")]
    Empty,
    #[error(transparent)]
    Core(#[from] XlabelError),
    #[error("storage: {0}")]
    Io(#[from] std::io::Error),
    #[error("storage: {0}")]
    Json(#[from] serde_json::Error),
    #[error("background task failed: {0}")]
    Join(#[from] tokio::task::JoinError),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Conflict(_) => StatusCode::CONFLICT,
            ServiceError::Empty => StatusCode::NO_CONTENT,
            ServiceError::Core(e) => match e {
                XlabelError::InvalidInput(_) | XlabelError::Csv(_) | XlabelError::Deserialize(_) => {
                    StatusCode::BAD_REQUEST
                }
                XlabelError::Protocol(_) | XlabelError::ChainOrder(_) | XlabelError::DegenerateLabels => {
                    StatusCode::CONFLICT
                }
                XlabelError::EmptyPool => StatusCode::NO_CONTENT,
                XlabelError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
            },
            ServiceError::Io(_) | ServiceError::Json(_) | ServiceError::Join(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status == StatusCode::NO_CONTENT {
            return status.into_response();
        }
        if status.is_server_error() {
            log::error!("{self}");
        }
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

pub type ServiceResult<T> = Result<T, ServiceError>;
