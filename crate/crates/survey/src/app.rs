use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use ctxsum_core::corpus::{AnswerPayload, AnswerRecord, Question, QuestionBank, VideoSet};
use ctxsum_core::human_eval::{score_corpus, ScoreReport};
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::error::SurveyError;
use crate::log::AnswerLog;

struct Session {
    sets: Vec<String>,
    submitted: Vec<bool>,
}

pub struct AppState {
    bank: QuestionBank,
    log: Arc<AnswerLog>,
    sessions: Mutex<HashMap<String, Session>>,
    rng: Mutex<ChaCha8Rng>,
    max_sets: usize,
    media: PathBuf,
}

impl AppState {
    pub fn new(bank: QuestionBank, log: AnswerLog, max_sets: usize, seed: Option<u64>, media: PathBuf) -> Self {
        let rng = match seed {
            Some(s) => ChaCha8Rng::seed_from_u64(s),
            None => ChaCha8Rng::from_os_rng(),
        };
        AppState {
            bank,
            log: Arc::new(log),
            sessions: Mutex::new(HashMap::new()),
            rng: Mutex::new(rng),
            max_sets,
            media,
        }
    }

    pub fn log(&self) -> &AnswerLog {
        &self.log
    }
}

#[derive(Debug, Deserialize)]
pub struct CreateSession {
    pub count: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub videoset_ids: Vec<String>,
}

/// A video set with its questions, or the completion marker past the last position.
#[derive(Debug, Serialize, Deserialize)]
pub struct SetPage {
    pub position: usize,
    pub total: usize,
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub video_set: Option<VideoSet>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub questions: Vec<Question>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SubmittedAnswer {
    pub question: String,
    pub answer: AnswerPayload,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Submission {
    pub answers: Vec<SubmittedAnswer>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Ack {
    pub recorded: usize,
    pub resubmission: bool,
}

pub fn router(state: Arc<AppState>) -> Router {
    let media = ServeDir::new(&state.media);
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/sets/{pos}", get(next_videoset))
        .route("/sessions/{id}/sets/{sid}/answers", post(submit_answers))
        .route("/report", get(report))
        .nest_service("/media", media)
        .with_state(state)
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    Json(req): Json<CreateSession>,
) -> Result<(StatusCode, Json<SessionCreated>), SurveyError> {
    let available = state.bank.video_sets.len();
    if req.count == 0 || req.count > state.max_sets {
        return Err(SurveyError::BadRequest(format!(
            "set count must be between 1 and {}",
            state.max_sets
        )));
    }
    if req.count > available {
        return Err(SurveyError::BadRequest(format!(
            "only {available} video sets are available"
        )));
    }
    let sets: Vec<String> = {
        let mut rng = state.rng.lock().expect("rng lock poisoned");
        state
            .bank
            .video_sets
            .choose_multiple(&mut *rng, req.count)
            .map(|s| s.id.clone())
            .collect()
    };
    let id = uuid::Uuid::new_v4().simple().to_string();
    state.sessions.lock().expect("session lock poisoned").insert(
        id.clone(),
        Session {
            submitted: vec![false; sets.len()],
            sets: sets.clone(),
        },
    );
    tracing::info!(session = %id, sets = sets.len(), "session created");
    Ok((
        StatusCode::CREATED,
        Json(SessionCreated {
            session_id: id,
            videoset_ids: sets,
        }),
    ))
}

async fn next_videoset(
    State(state): State<Arc<AppState>>,
    Path((id, pos)): Path<(String, usize)>,
) -> Result<Json<SetPage>, SurveyError> {
    let set_id = {
        let sessions = state.sessions.lock().expect("session lock poisoned");
        let session = sessions
            .get(&id)
            .ok_or_else(|| SurveyError::UnknownSession(id.clone()))?;
        let total = session.sets.len();
        if pos == 0 {
            return Err(SurveyError::BadRequest("positions start at 1".into()));
        }
        if let Some(open) = session.submitted[..(pos - 1).min(total)].iter().position(|s| !s) {
            return Err(SurveyError::Sequencing(format!(
                "set {} must be answered before set {pos}",
                open + 1
            )));
        }
        if pos > total {
            return Ok(Json(SetPage {
                position: pos,
                total,
                complete: true,
                video_set: None,
                questions: vec![],
            }));
        }
        session.sets[pos - 1].clone()
    };
    let set = state.bank.video_set(&set_id).expect("sessions hold bank sets");
    let questions = state.bank.questions_for(set).cloned().collect();
    let total = state.sessions.lock().expect("session lock poisoned")[&id].sets.len();
    Ok(Json(SetPage {
        position: pos,
        total,
        complete: false,
        video_set: Some(set.clone()),
        questions,
    }))
}

fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

async fn submit_answers(
    State(state): State<Arc<AppState>>,
    Path((id, set_id)): Path<(String, String)>,
    Json(sub): Json<Submission>,
) -> Result<Json<Ack>, SurveyError> {
    let (index, resubmission) = {
        let sessions = state.sessions.lock().expect("session lock poisoned");
        let session = sessions
            .get(&id)
            .ok_or_else(|| SurveyError::UnknownSession(id.clone()))?;
        let index = session
            .sets
            .iter()
            .position(|s| *s == set_id)
            .ok_or_else(|| SurveyError::BadRequest(format!("video set {set_id} is not part of this session")))?;
        if let Some(open) = session.submitted[..index].iter().position(|s| !s) {
            return Err(SurveyError::Sequencing(format!(
                "set {} must be answered before set {}",
                open + 1,
                index + 1
            )));
        }
        (index, session.submitted[index])
    };

    let set = state.bank.video_set(&set_id).expect("sessions hold bank sets");
    let timestamp = now_millis();
    let mut seen = BTreeSet::new();
    let mut records = Vec::with_capacity(sub.answers.len());
    for a in sub.answers {
        if !seen.insert(a.question.clone()) {
            return Err(SurveyError::Validation {
                question: a.question,
                reason: "answered twice in one submission".into(),
            });
        }
        let record = AnswerRecord {
            participant: id.clone(),
            video_set: set_id.clone(),
            question: a.question,
            answer: a.answer,
            timestamp,
        };
        state.bank.validate_record(&record).map_err(|e| match e {
            ctxsum_core::Error::InvalidAnswer { question, reason } => SurveyError::Validation { question, reason },
            other => SurveyError::Validation {
                question: record.question.clone(),
                reason: other.to_string(),
            },
        })?;
        records.push(record);
    }
    if let Some(missing) = state.bank.questions_for(set).find(|q| !seen.contains(&q.id)) {
        return Err(SurveyError::Validation {
            question: missing.id.clone(),
            reason: "no answer given".into(),
        });
    }

    let log = Arc::clone(&state.log);
    let count = records.len();
    tokio::task::spawn_blocking(move || log.append(&records))
        .await
        .map_err(|e| SurveyError::Log(std::io::Error::other(e)))??;
    if let Some(s) = state.sessions.lock().expect("session lock poisoned").get_mut(&id) {
        s.submitted[index] = true;
    }
    Ok(Json(Ack {
        recorded: count,
        resubmission,
    }))
}

async fn report(State(state): State<Arc<AppState>>) -> Result<Json<ScoreReport>, SurveyError> {
    let snapshot = state.log.snapshot();
    if snapshot.is_empty() {
        return Err(SurveyError::EmptyLog);
    }
    Ok(Json(score_corpus(&state.bank, &snapshot)?))
}
