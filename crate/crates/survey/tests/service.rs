use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use ctxsum_core::corpus::{AnswerPayload, Question, QuestionBank, QuestionType};
use ctxsum_core::human_eval::{parse_answer_log, score_corpus, ScoreReport};
use ctxsum_survey::{build_state, router, AppState, ServiceConfig, SessionCreated, SetPage};
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

struct Harness {
    dir: TempDir,
    state: Arc<AppState>,
    app: Router,
}

fn harness_with_log(log: Option<&str>) -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let media = dir.path().join("media");
    std::fs::create_dir(&media).unwrap();
    std::fs::write(media.join("v1.mp4"), b"not really a video").unwrap();
    let log_path = dir.path().join("answers.log");
    if let Some(text) = log {
        std::fs::write(&log_path, text).unwrap();
    }
    let cfg = ServiceConfig {
        corpus: fixtures().join("question_bank.json"),
        log: log_path,
        media,
        max_sets: 5,
        seed: Some(7),
        ..ServiceConfig::default()
    };
    let state = build_state(&cfg).unwrap();
    let app = router(Arc::clone(&state));
    Harness { dir, state, app }
}

fn harness() -> Harness {
    harness_with_log(None)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, value)
}

async fn session(app: &Router, count: usize) -> SessionCreated {
    let (status, body) = call(app, "POST", "/sessions", Some(json!({ "count": count }))).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    serde_json::from_value(body).unwrap()
}

fn valid_answers(questions: &[Question]) -> Value {
    let answers: Vec<Value> = questions
        .iter()
        .map(|q| {
            let answer = match q.kind {
                QuestionType::Mcq => AnswerPayload::Mcq(q.options[0].clone()),
                QuestionType::Checkbox => AnswerPayload::Checkbox(vec![q.options[0].clone()]),
                QuestionType::Linear => AnswerPayload::Linear(q.scale.unwrap()),
            };
            json!({ "question": q.id, "answer": answer })
        })
        .collect();
    json!({ "answers": answers })
}

async fn page(app: &Router, id: &str, pos: usize) -> SetPage {
    let (status, body) = call(app, "GET", &format!("/sessions/{id}/sets/{pos}"), None).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    serde_json::from_value(body).unwrap()
}

async fn answer_set(app: &Router, id: &str, pos: usize) -> (StatusCode, Value) {
    let p = page(app, id, pos).await;
    let set = p.video_set.unwrap();
    call(
        app,
        "POST",
        &format!("/sessions/{id}/sets/{}/answers", set.id),
        Some(valid_answers(&p.questions)),
    )
    .await
}

#[tokio::test]
async fn sessions_get_distinct_sets_within_bounds() {
    let h = harness();
    let s = session(&h.app, 3).await;
    assert_eq!(s.videoset_ids.len(), 3);
    let mut ids = s.videoset_ids.clone();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 3);
    let other = session(&h.app, 3).await;
    assert_ne!(s.session_id, other.session_id);

    let (status, _) = call(&h.app, "POST", "/sessions", Some(json!({ "count": 0 }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&h.app, "POST", "/sessions", Some(json!({ "count": 6 }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn sets_are_served_in_order() {
    let h = harness();
    let s = session(&h.app, 2).await;
    let first = page(&h.app, &s.session_id, 1).await;
    assert!(!first.complete);
    assert_eq!(first.video_set.as_ref().unwrap().id, s.videoset_ids[0]);

    let (status, _) = call(&h.app, "GET", &format!("/sessions/{}/sets/2", s.session_id), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _) = call(
        &h.app,
        "POST",
        &format!("/sessions/{}/sets/{}/answers", s.session_id, s.videoset_ids[1]),
        Some(json!({ "answers": [] })),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);

    let (status, ack) = answer_set(&h.app, &s.session_id, 1).await;
    assert_eq!(status, StatusCode::OK, "{ack}");
    assert_eq!(ack["resubmission"], false);
    answer_set(&h.app, &s.session_id, 2).await;
    let done = page(&h.app, &s.session_id, 3).await;
    assert!(done.complete && done.video_set.is_none());

    let (status, _) = call(&h.app, "GET", "/sessions/nope/sets/1", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn invalid_answers_name_the_question() {
    let h = harness();
    // The first set holding a linear question is a pair set; find one by sampling sessions.
    for _ in 0..50 {
        let s = session(&h.app, 1).await;
        let p = page(&h.app, &s.session_id, 1).await;
        let Some(q) = p.questions.iter().find(|q| q.kind == QuestionType::Linear) else {
            continue;
        };
        let body = json!({ "answers": [{ "question": q.id, "answer": { "linear": 11 } }] });
        let uri = format!("/sessions/{}/sets/{}/answers", s.session_id, p.video_set.unwrap().id);
        let (status, err) = call(&h.app, "POST", &uri, Some(body)).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
        assert_eq!(err["question"], q.id.as_str());
        assert!(err["reason"].as_str().unwrap().contains("outside"));
        assert!(h.state.log().is_empty());
        return;
    }
    panic!("no pair set sampled");
}

#[tokio::test]
async fn incomplete_submissions_are_rejected() {
    let h = harness();
    let s = session(&h.app, 1).await;
    let p = page(&h.app, &s.session_id, 1).await;
    let uri = format!("/sessions/{}/sets/{}/answers", s.session_id, p.video_set.unwrap().id);
    let (status, err) = call(&h.app, "POST", &uri, Some(json!({ "answers": [] }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["question"], p.questions[0].id.as_str());
}

#[tokio::test]
async fn log_is_append_only_and_resubmission_supersedes() {
    let h = harness();
    let s = session(&h.app, 1).await;
    answer_set(&h.app, &s.session_id, 1).await;
    let log_path = h.dir.path().join("answers.log");
    let before = std::fs::read(&log_path).unwrap();
    assert!(!before.is_empty());

    let (status, ack) = answer_set(&h.app, &s.session_id, 1).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ack["resubmission"], true);
    let after = std::fs::read(&log_path).unwrap();
    assert!(after.len() > before.len());
    assert_eq!(&after[..before.len()], before.as_slice());

    let records = parse_answer_log(std::str::from_utf8(&after).unwrap()).unwrap();
    for r in &records {
        let line = serde_json::to_value(r).unwrap();
        let keys: Vec<&str> = line.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, ["answer", "participant", "question", "timestamp", "video_set"]);
    }
}

#[tokio::test]
async fn report_needs_answers() {
    let h = harness();
    let (status, _) = call(&h.app, "GET", "/report", None).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn report_matches_offline_scoring_of_fixture_log() {
    let text = std::fs::read_to_string(fixtures().join("answers.log")).unwrap();
    let h = harness_with_log(Some(&text));
    let (status, body) = call(&h.app, "GET", "/report", None).await;
    assert_eq!(status, StatusCode::OK);
    let served: ScoreReport = serde_json::from_value(body).unwrap();

    let bank =
        QuestionBank::from_json(&std::fs::read_to_string(fixtures().join("question_bank.json")).unwrap()).unwrap();
    let offline = score_corpus(&bank, &parse_answer_log(&text).unwrap()).unwrap();
    assert_eq!(served, offline);
    assert!((served.method.machine_summary.unwrap() - 301.0 / 360.0).abs() < 1e-12);
}

#[tokio::test]
async fn only_original_answers_leave_summary_columns_empty() {
    let log = r#"{"participant":"p","video_set":"o2","question":"q4","answer":{"mcq":"yes"},"timestamp":1}"#;
    let h = harness_with_log(Some(log));
    let (status, body) = call(&h.app, "GET", "/report", None).await;
    assert_eq!(status, StatusCode::OK);
    let report: ScoreReport = serde_json::from_value(body).unwrap();
    assert!(report.method.machine_summary.is_none() && report.method.user_summary.is_none());
}

#[tokio::test]
async fn restart_replays_the_log() {
    let h = harness();
    let s = session(&h.app, 2).await;
    answer_set(&h.app, &s.session_id, 1).await;
    answer_set(&h.app, &s.session_id, 2).await;
    let before = h.state.log().snapshot();

    let cfg = ServiceConfig {
        corpus: fixtures().join("question_bank.json"),
        log: h.dir.path().join("answers.log"),
        media: h.dir.path().join("media"),
        ..ServiceConfig::default()
    };
    let again = build_state(&cfg).unwrap();
    assert_eq!(again.log().snapshot(), before);
}

#[tokio::test]
async fn corrupt_log_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("answers.log");
    std::fs::write(
        &log,
        "{\"participant\":\"p\",\"video_set\":\"o1\",\"question\":\"q3\",\"answer\":{\"linear\":3},\"timestamp\":1}\n",
    )
    .unwrap();
    let cfg = ServiceConfig {
        corpus: fixtures().join("question_bank.json"),
        log,
        ..ServiceConfig::default()
    };
    assert!(build_state(&cfg).is_err());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_submissions_are_all_recorded() {
    let h = harness();
    let mut tasks = Vec::new();
    for _ in 0..16 {
        let app = h.app.clone();
        tasks.push(tokio::spawn(async move {
            let s = session(&app, 1).await;
            let (status, ack) = answer_set(&app, &s.session_id, 1).await;
            assert_eq!(status, StatusCode::OK);
            ack["recorded"].as_u64().unwrap() as usize
        }));
    }
    let mut total = 0;
    for t in tasks {
        total += t.await.unwrap();
    }
    let text = std::fs::read_to_string(h.dir.path().join("answers.log")).unwrap();
    assert_eq!(parse_answer_log(&text).unwrap().len(), total);
    assert_eq!(h.state.log().len(), total);
}

#[tokio::test]
async fn media_is_served_statically() {
    let h = harness();
    let resp = h
        .app
        .clone()
        .oneshot(Request::get("/media/v1.mp4").body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    assert_eq!(&bytes[..], b"not really a video");
    let (status, _) = call(&h.app, "GET", "/media/missing.mp4", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}
