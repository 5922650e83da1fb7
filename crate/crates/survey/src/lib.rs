//! Survey service: hands out video sets and questions, records answers in an
//! append-only log and reports human-evaluation scores.
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/sessions` | `{count}` → `{session_id, videoset_ids}` |
//! | GET | `/sessions/{id}/sets/{pos}` | set and questions at 1-based `pos` |
//! | POST | `/sessions/{id}/sets/{sid}/answers` | `{answers: [{question, answer}]}` |
//! | GET | `/report` | score tables |
//! | GET | `/media/{file}` | static media |

mod app;
mod config;
mod error;
mod log;

use std::sync::Arc;

use ctxsum_core::corpus::QuestionBank;

pub use app::{router, Ack, AppState, CreateSession, SessionCreated, SetPage, Submission, SubmittedAnswer};
pub use config::{ServiceConfig, ENV_PREFIX};
pub use error::SurveyError;
pub use log::AnswerLog;

/// Loads the corpus and log named by `cfg` into a ready router state.
pub fn build_state(cfg: &ServiceConfig) -> Result<Arc<AppState>, SurveyError> {
    let text = std::fs::read_to_string(&cfg.corpus)
        .map_err(|e| SurveyError::Config(format!("{}: {e}", cfg.corpus.display())))?;
    let bank = QuestionBank::from_json(&text)?;
    let log = AnswerLog::open(&cfg.log, &bank)?;
    Ok(Arc::new(AppState::new(
        bank,
        log,
        cfg.max_sets,
        cfg.seed,
        cfg.media.clone(),
    )))
}

/// Serves until Ctrl-C.
pub async fn serve(cfg: ServiceConfig) -> Result<(), SurveyError> {
    let state = build_state(&cfg)?;
    let listener = tokio::net::TcpListener::bind(&cfg.bind).await?;
    tracing::info!(addr = %listener.local_addr()?, log = %cfg.log.display(), "survey service listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
