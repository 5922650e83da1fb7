//! Survey corpus: video sets, the question bank and anonymous answer records.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const QUESTION_BANK_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VideoSetKind {
    Original,
    UserSummary,
    MachineSummary,
    Pair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoSet {
    pub id: String,
    pub kind: VideoSetKind,
    /// Source video this set is derived from.
    pub video_id: String,
    /// For `pair` sets: which kind of summary is paired with the original.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary_kind: Option<VideoSetKind>,
    #[serde(default)]
    pub media: Vec<String>,
}

impl VideoSet {
    /// The summary kind whose score an answer on this set contributes to, if any.
    pub fn scored_kind(&self) -> Option<VideoSetKind> {
        match self.kind {
            VideoSetKind::UserSummary | VideoSetKind::MachineSummary => Some(self.kind),
            VideoSetKind::Pair => self.summary_kind,
            VideoSetKind::Original => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionType {
    Mcq,
    Checkbox,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Question {
    pub id: String,
    pub video_id: String,
    #[serde(rename = "type")]
    pub kind: QuestionType,
    #[serde(default)]
    pub prompt: String,
    /// Options for nominal questions.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub options: Vec<String>,
    /// Upper end `C` of the rating scale for linear questions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// Video-set kinds this question is asked on.
    pub applies_to: Vec<VideoSetKind>,
}

impl Question {
    pub fn applies(&self, set: &VideoSet) -> bool {
        self.video_id == set.video_id && self.applies_to.contains(&set.kind)
    }

    pub fn validate_answer(&self, answer: &AnswerPayload) -> Result<()> {
        let fail = |reason: String| Error::InvalidAnswer {
            question: self.id.clone(),
            reason,
        };
        match (self.kind, answer) {
            (QuestionType::Mcq, AnswerPayload::Mcq(choice)) => {
                if !self.options.contains(choice) {
                    return Err(fail(format!("{choice:?} is not one of the options")));
                }
            }
            (QuestionType::Checkbox, AnswerPayload::Checkbox(choices)) => {
                if choices.is_empty() {
                    return Err(fail("checkbox answer selects nothing".into()));
                }
                if let Some(c) = choices.iter().find(|c| !self.options.contains(c)) {
                    return Err(fail(format!("{c:?} is not one of the options")));
                }
            }
            (QuestionType::Linear, AnswerPayload::Linear(a)) => {
                let c = self.scale.unwrap_or(0.0);
                if !(a.is_finite() && *a >= 0.0 && *a <= c) {
                    return Err(fail(format!("rating {a} outside [0, {c}]")));
                }
            }
            (kind, _) => return Err(fail(format!("answer type does not match {kind:?} question"))),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerPayload {
    Mcq(String),
    Checkbox(Vec<String>),
    Linear(f64),
}

impl AnswerPayload {
    pub fn option_set(&self) -> BTreeSet<&str> {
        match self {
            AnswerPayload::Mcq(c) => std::iter::once(c.as_str()).collect(),
            AnswerPayload::Checkbox(cs) => cs.iter().map(String::as_str).collect(),
            AnswerPayload::Linear(_) => BTreeSet::new(),
        }
    }
}

/// One stored answer. The field set is closed: nothing identifying a person fits in it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerRecord {
    /// Random per-session id.
    pub participant: String,
    pub video_set: String,
    pub question: String,
    pub answer: AnswerPayload,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionBank {
    pub schema_version: u32,
    pub video_sets: Vec<VideoSet>,
    pub questions: Vec<Question>,
}

impl QuestionBank {
    pub fn from_json(text: &str) -> Result<Self> {
        let bank: QuestionBank = serde_json::from_str(text)?;
        bank.validate()?;
        Ok(bank)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != QUESTION_BANK_SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "unsupported question bank schema_version {}",
                self.schema_version
            )));
        }
        let mut ids = BTreeSet::new();
        for s in &self.video_sets {
            if !ids.insert(s.id.as_str()) {
                return Err(Error::invalid(format!("duplicate video set id {}", s.id)));
            }
            if s.kind == VideoSetKind::Pair
                && !matches!(
                    s.summary_kind,
                    Some(VideoSetKind::UserSummary | VideoSetKind::MachineSummary)
                )
            {
                return Err(Error::invalid(format!(
                    "pair set {} needs summary_kind user_summary or machine_summary",
                    s.id
                )));
            }
        }
        let mut qids = BTreeSet::new();
        for q in &self.questions {
            if !qids.insert(q.id.as_str()) {
                return Err(Error::invalid(format!("duplicate question id {}", q.id)));
            }
            match q.kind {
                QuestionType::Mcq | QuestionType::Checkbox if q.options.is_empty() => {
                    return Err(Error::invalid(format!("question {} has no options", q.id)));
                }
                QuestionType::Linear if !q.scale.is_some_and(|c| c.is_finite() && c > 0.0) => {
                    return Err(Error::invalid(format!(
                        "linear question {} needs a positive scale",
                        q.id
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn video_set(&self, id: &str) -> Option<&VideoSet> {
        self.video_sets.iter().find(|s| s.id == id)
    }

    pub fn question(&self, id: &str) -> Option<&Question> {
        self.questions.iter().find(|q| q.id == id)
    }

    pub fn questions_for<'a>(&'a self, set: &'a VideoSet) -> impl Iterator<Item = &'a Question> + 'a {
        self.questions.iter().filter(move |q| q.applies(set))
    }

    /// Checks a record against the bank: known set, applicable question, valid payload.
    pub fn validate_record(&self, record: &AnswerRecord) -> Result<()> {
        let set = self
            .video_set(&record.video_set)
            .ok_or_else(|| Error::invalid(format!("unknown video set {}", record.video_set)))?;
        let q = self.question(&record.question).ok_or_else(|| Error::InvalidAnswer {
            question: record.question.clone(),
            reason: "unknown question".into(),
        })?;
        if !q.applies(set) {
            return Err(Error::InvalidAnswer {
                question: q.id.clone(),
                reason: format!("not asked on video set {}", set.id),
            });
        }
        q.validate_answer(&record.answer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear() -> Question {
        Question {
            id: "q".into(),
            video_id: "v".into(),
            kind: QuestionType::Linear,
            prompt: String::new(),
            options: vec![],
            scale: Some(10.0),
            applies_to: vec![VideoSetKind::Pair],
        }
    }

    #[test]
    fn linear_range() {
        let q = linear();
        assert!(q.validate_answer(&AnswerPayload::Linear(10.0)).is_ok());
        assert!(q.validate_answer(&AnswerPayload::Linear(11.0)).is_err());
        assert!(q.validate_answer(&AnswerPayload::Mcq("a".into())).is_err());
    }

    #[test]
    fn checkbox_rules() {
        let q = Question {
            kind: QuestionType::Checkbox,
            options: vec!["a".into(), "b".into()],
            scale: None,
            ..linear()
        };
        assert!(q.validate_answer(&AnswerPayload::Checkbox(vec![])).is_err());
        assert!(q.validate_answer(&AnswerPayload::Checkbox(vec!["z".into()])).is_err());
        assert!(q
            .validate_answer(&AnswerPayload::Checkbox(vec!["a".into(), "b".into()]))
            .is_ok());
    }

    #[test]
    fn record_with_extra_field_rejected() {
        let text =
            r#"{"participant":"p","video_set":"s","question":"q","answer":{"linear":3},"timestamp":0,"email":"x"}"#;
        assert!(serde_json::from_str::<AnswerRecord>(text).is_err());
    }
}
