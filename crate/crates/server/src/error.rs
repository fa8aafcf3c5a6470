use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use histwidget_core::Error;
use serde_json::json;

/// An error as returned over HTTP: `{"error": {"code", "message"}}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.to_owned(),
            message: message.into(),
        }
    }

    pub fn unknown_widget(widget_id: &str) -> Self {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "unknown_widget",
            format!("no widget `{widget_id}`"),
        )
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Contract(_) | Error::Protocol(_) => StatusCode::BAD_REQUEST,
            Error::NotFound(_) => StatusCode::NOT_FOUND,
            Error::Payload(_) | Error::Udf { .. } | Error::Format(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Error::Backend(_) | Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
