//! Scores for the question-answering evaluation of summaries.
//!
//! Nominal questions compare answers given after watching a summary with answers given
//! after watching the original. Linear questions rate comprehension of a summary shown
//! next to its original on a `0..=C` scale.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{AnswerPayload, AnswerRecord, QuestionBank, QuestionType, VideoSetKind};
use crate::error::{Error, Result};

pub fn mcq_score(answer: &str, truth: &str, options: &[String]) -> Result<f64> {
    for a in [answer, truth] {
        if !options.iter().any(|o| o == a) {
            return Err(Error::invalid(format!("{a:?} is not one of the options")));
        }
    }
    Ok(if answer == truth { 1.0 } else { 0.0 })
}

/// Intersection over union of two non-empty option sets.
pub fn checkbox_score(answer: &BTreeSet<&str>, truth: &BTreeSet<&str>) -> Result<f64> {
    if answer.is_empty() || truth.is_empty() {
        return Err(Error::invalid("checkbox answers must select at least one option"));
    }
    let inter = answer.intersection(truth).count();
    let union = answer.union(truth).count();
    Ok(inter as f64 / union as f64)
}

fn pair_score(kind: QuestionType, a: &AnswerPayload, b: &AnswerPayload) -> Result<f64> {
    match (kind, a, b) {
        (QuestionType::Mcq, AnswerPayload::Mcq(x), AnswerPayload::Mcq(y)) => Ok(if x == y { 1.0 } else { 0.0 }),
        (QuestionType::Checkbox, AnswerPayload::Checkbox(_), AnswerPayload::Checkbox(_)) => {
            checkbox_score(&a.option_set(), &b.option_set())
        }
        _ => Err(Error::invalid(format!("answers do not match a {kind:?} question"))),
    }
}

/// Mean over summary answers of the best match among the original answers.
pub fn nominal_question_score(
    summary_answers: &[AnswerPayload],
    original_answers: &[AnswerPayload],
    kind: QuestionType,
) -> Result<f64> {
    if kind == QuestionType::Linear {
        return Err(Error::invalid("linear questions are not nominal"));
    }
    if original_answers.is_empty() {
        return Err(Error::invalid("no original answers to compare against"));
    }
    if summary_answers.is_empty() {
        return Err(Error::invalid("no summary answers to score"));
    }
    let mut total = 0.0;
    for a in summary_answers {
        let mut best: f64 = 0.0;
        for o in original_answers {
            best = best.max(pair_score(kind, a, o)?);
        }
        total += best;
    }
    Ok(total / summary_answers.len() as f64)
}

/// Mean rating divided by the scale `C`.
pub fn linear_question_score(ratings: &[f64], scale: f64) -> Result<f64> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::invalid(format!("rating scale must be positive, got {scale}")));
    }
    if ratings.is_empty() {
        return Err(Error::invalid("no ratings to score"));
    }
    if let Some(r) = ratings.iter().find(|r| !(**r >= 0.0 && **r <= scale)) {
        return Err(Error::invalid(format!("rating {r} outside [0, {scale}]")));
    }
    Ok(ratings.iter().sum::<f64>() / ratings.len() as f64 / scale)
}

fn mean(xs: &[f64], what: &str) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::invalid(format!("no {what} to average")));
    }
    Ok(xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Mean of a summary's question scores.
pub fn summary_score(question_scores: &[f64]) -> Result<f64> {
    mean(question_scores, "question scores")
}

/// Mean of a method's summary scores.
pub fn method_score(summary_scores: &[f64]) -> Result<f64> {
    mean(summary_scores, "summary scores")
}

/// Keeps the last record for every (participant, video set, question), in log order.
pub fn resolve_superseded(records: &[AnswerRecord]) -> Vec<AnswerRecord> {
    let mut last: HashMap<(&str, &str, &str), usize> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        last.insert((&r.participant, &r.video_set, &r.question), i);
    }
    let mut keep: Vec<usize> = last.into_values().collect();
    keep.sort_unstable();
    keep.into_iter().map(|i| records[i].clone()).collect()
}

/// Scores of one kind of summary (user-made or machine-made).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct KindScores {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_summary: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub machine_summary: Option<f64>,
}

impl KindScores {
    fn slot(&mut self, kind: VideoSetKind) -> &mut Option<f64> {
        match kind {
            VideoSetKind::UserSummary => &mut self.user_summary,
            _ => &mut self.machine_summary,
        }
    }

    fn get(&self, kind: VideoSetKind) -> Option<f64> {
        match kind {
            VideoSetKind::UserSummary => self.user_summary,
            _ => self.machine_summary,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRow {
    pub question: String,
    pub video_id: String,
    #[serde(rename = "type")]
    pub kind: QuestionType,
    #[serde(flatten)]
    pub scores: KindScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRow {
    pub video_id: String,
    #[serde(flatten)]
    pub scores: KindScores,
}

/// Question, summary and method scores computed from an answer log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub questions: Vec<QuestionRow>,
    pub videos: Vec<VideoRow>,
    pub method: KindScores,
    /// Multiplier for display on the rating scale.
    pub display_scale: f64,
    pub records: usize,
}

const SCORED: [VideoSetKind; 2] = [VideoSetKind::UserSummary, VideoSetKind::MachineSummary];

/// Scores every question, video and summary kind from a log. Superseded records are
/// dropped first. A question gets no score for a kind without any answers on that
/// kind, or, for nominal questions, without answers on the original video.
pub fn score_corpus(bank: &QuestionBank, records: &[AnswerRecord]) -> Result<ScoreReport> {
    if records.is_empty() {
        return Err(Error::invalid("the answer log is empty"));
    }
    let live = resolve_superseded(records);
    // (question, kind of the set answered on) -> answers
    let mut by_kind: HashMap<(&str, VideoSetKind), Vec<&AnswerPayload>> = HashMap::new();
    // (question, summary kind) -> answers given on pair sets
    let mut by_pair: HashMap<(&str, VideoSetKind), Vec<&AnswerPayload>> = HashMap::new();
    for r in &live {
        bank.validate_record(r)?;
        let set = bank.video_set(&r.video_set).expect("validated");
        if set.kind == VideoSetKind::Pair {
            let k = set.summary_kind.expect("validated pair");
            by_pair.entry((r.question.as_str(), k)).or_default().push(&r.answer);
        } else {
            by_kind
                .entry((r.question.as_str(), set.kind))
                .or_default()
                .push(&r.answer);
        }
    }

    let mut questions = Vec::new();
    for q in &bank.questions {
        let mut scores = KindScores::default();
        for kind in SCORED {
            let value = match q.kind {
                QuestionType::Linear => {
                    let ratings: Vec<f64> = by_pair
                        .get(&(q.id.as_str(), kind))
                        .into_iter()
                        .flatten()
                        .chain(by_kind.get(&(q.id.as_str(), kind)).into_iter().flatten())
                        .filter_map(|a| match a {
                            AnswerPayload::Linear(v) => Some(*v),
                            _ => None,
                        })
                        .collect();
                    if ratings.is_empty() {
                        None
                    } else {
                        Some(linear_question_score(&ratings, q.scale.expect("validated bank"))?)
                    }
                }
                QuestionType::Mcq | QuestionType::Checkbox => {
                    let summary = by_kind.get(&(q.id.as_str(), kind));
                    let original = by_kind.get(&(q.id.as_str(), VideoSetKind::Original));
                    match (summary, original) {
                        (Some(s), Some(o)) => {
                            let s: Vec<AnswerPayload> = s.iter().map(|a| (*a).clone()).collect();
                            let o: Vec<AnswerPayload> = o.iter().map(|a| (*a).clone()).collect();
                            Some(nominal_question_score(&s, &o, q.kind)?)
                        }
                        _ => None,
                    }
                }
            };
            *scores.slot(kind) = value;
        }
        questions.push(QuestionRow {
            question: q.id.clone(),
            video_id: q.video_id.clone(),
            kind: q.kind,
            scores,
        });
    }

    let mut per_video: BTreeMap<&str, Vec<&QuestionRow>> = BTreeMap::new();
    for row in &questions {
        per_video.entry(row.video_id.as_str()).or_default().push(row);
    }
    let mut videos = Vec::new();
    for (video_id, rows) in &per_video {
        let mut scores = KindScores::default();
        for kind in SCORED {
            let qs: Vec<f64> = rows.iter().filter_map(|r| r.scores.get(kind)).collect();
            *scores.slot(kind) = (!qs.is_empty()).then(|| summary_score(&qs)).transpose()?;
        }
        videos.push(VideoRow {
            video_id: video_id.to_string(),
            scores,
        });
    }
    let mut method = KindScores::default();
    for kind in SCORED {
        let us: Vec<f64> = videos.iter().filter_map(|v| v.scores.get(kind)).collect();
        *method.slot(kind) = (!us.is_empty()).then(|| method_score(&us)).transpose()?;
    }
    let display_scale = bank
        .questions
        .iter()
        .find_map(|q| (q.kind == QuestionType::Linear).then_some(q.scale).flatten())
        .unwrap_or(10.0);
    Ok(ScoreReport {
        questions,
        videos,
        method,
        display_scale,
        records: live.len(),
    })
}

/// Reads newline-delimited answer records, skipping blank lines.
pub fn parse_answer_log(text: &str) -> Result<Vec<AnswerRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::invalid(format!("answer log line {}: {e}", i + 1))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set<'a>(xs: &[&'a str]) -> BTreeSet<&'a str> {
        xs.iter().copied().collect()
    }

    #[test]
    fn mcq() {
        let o: Vec<String> = vec!["a".into(), "b".into()];
        assert_eq!(mcq_score("a", "a", &o).unwrap(), 1.0);
        assert_eq!(mcq_score("a", "b", &o).unwrap(), 0.0);
        assert!(mcq_score("z", "a", &o).is_err());
    }

    #[test]
    fn checkbox() {
        assert!((checkbox_score(&set(&["a", "b"]), &set(&["b", "c"])).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(checkbox_score(&set(&["a"]), &set(&["a"])).unwrap(), 1.0);
        assert_eq!(checkbox_score(&set(&["a"]), &set(&["b"])).unwrap(), 0.0);
        assert!(checkbox_score(&set(&[]), &set(&["b"])).is_err());
    }

    #[test]
    fn nominal() {
        let m = |s: &str| AnswerPayload::Mcq(s.into());
        let originals = [m("a"), m("b"), m("c")];
        assert_eq!(
            nominal_question_score(&[m("b")], &originals, QuestionType::Mcq).unwrap(),
            1.0
        );
        assert_eq!(
            nominal_question_score(&[m("a"), m("z")], &[m("a")], QuestionType::Mcq).unwrap(),
            0.5
        );
        assert!(nominal_question_score(&[m("a")], &[], QuestionType::Mcq).is_err());
    }

    #[test]
    fn linear() {
        assert!((linear_question_score(&[8.0, 9.0], 10.0).unwrap() - 0.85).abs() < 1e-15);
        assert!(linear_question_score(&[11.0], 10.0).is_err());
    }

    #[test]
    fn levels() {
        assert_eq!(summary_score(&[1.0, 0.5]).unwrap(), 0.75);
        assert_eq!(method_score(&[0.75, 0.25]).unwrap(), 0.5);
        assert!(method_score(&[]).is_err());
    }

    #[test]
    fn latest_record_wins() {
        let rec = |a: &str, ts| AnswerRecord {
            participant: "p".into(),
            video_set: "s".into(),
            question: "q".into(),
            answer: AnswerPayload::Mcq(a.into()),
            timestamp: ts,
        };
        let live = resolve_superseded(&[rec("a", 1), rec("b", 2)]);
        assert_eq!(live, vec![rec("b", 2)]);
    }
}
