use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use stagewatch_core::workspace::Violation;

/// Error body returned by every endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("no session '{0}'")]
    NotFound(String),
    #[error("session '{0}' has completed its plan")]
    Completed(String),
    #[error("session '{0}' has not completed its plan")]
    Incomplete(String),
    #[error("plan is invalid")]
    InvalidPlan(Vec<Violation>),
    #[error("malformed request: {0}")]
    MalformedPlan(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    OutOfOrder(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Completed(_) | ApiError::Incomplete(_) => StatusCode::CONFLICT,
            ApiError::InvalidPlan(_) | ApiError::MalformedPlan(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::BadRequest(_) | ApiError::OutOfOrder(_) => StatusCode::BAD_REQUEST,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ApiError::NotFound(_) => "not_found",
            ApiError::Completed(_) => "session_completed",
            ApiError::Incomplete(_) => "session_incomplete",
            ApiError::InvalidPlan(_) | ApiError::MalformedPlan(_) => "invalid_plan",
            ApiError::BadRequest(_) => "bad_request",
            ApiError::OutOfOrder(_) => "out_of_order",
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let violations = match &self {
            ApiError::InvalidPlan(v) => v.iter().map(ToString::to_string).collect(),
            _ => Vec::new(),
        };
        let body = ErrorBody { code: self.code().to_owned(), message: self.to_string(), violations };
        (self.status(), Json(body)).into_response()
    }
}
