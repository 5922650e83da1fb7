use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum SurveyError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("{0}")]
    Sequencing(String),
    #[error("question {question}: {reason}")]
    Validation { question: String, reason: String },
    #[error("no answers recorded yet")]
    EmptyLog,
    #[error("answer log: {0}")]
    Log(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] ctxsum_core::Error),
}

impl SurveyError {
    pub fn status(&self) -> StatusCode {
        match self {
            SurveyError::BadRequest(_) => StatusCode::BAD_REQUEST,
            SurveyError::UnknownSession(_) => StatusCode::NOT_FOUND,
            SurveyError::Sequencing(_) | SurveyError::EmptyLog => StatusCode::CONFLICT,
            SurveyError::Validation { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            SurveyError::Config(_) | SurveyError::Log(_) | SurveyError::Core(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for SurveyError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.to_string() });
        if let SurveyError::Validation { question, reason } = &self {
            body["question"] = json!(question);
            body["reason"] = json!(reason);
        }
        (self.status(), Json(body)).into_response()
    }
}
