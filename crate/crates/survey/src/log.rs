//! Append-only answer log with a single serialized writer.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use ctxsum_core::corpus::{AnswerRecord, QuestionBank};
use ctxsum_core::human_eval::parse_answer_log;

use crate::error::SurveyError;

pub struct AnswerLog {
    path: PathBuf,
    inner: Mutex<Inner>,
}

struct Inner {
    file: File,
    records: Vec<AnswerRecord>,
}

impl AnswerLog {
    /// Opens (creating if needed) the log and replays the records already in it.
    /// Every replayed record must validate against `bank`.
    pub fn open(path: &Path, bank: &QuestionBank) -> Result<Self, SurveyError> {
        let existing = match std::fs::read_to_string(path) {
            Ok(text) => parse_answer_log(&text)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        for r in &existing {
            bank.validate_record(r)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(AnswerLog {
            path: path.to_path_buf(),
            inner: Mutex::new(Inner {
                file,
                records: existing,
            }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends all records in one write and syncs before returning.
    pub fn append(&self, records: &[AnswerRecord]) -> Result<(), SurveyError> {
        let mut buf = Vec::new();
        for r in records {
            serde_json::to_writer(&mut buf, r).expect("records serialize");
            buf.push(b'\n');
        }
        let mut inner = self.inner.lock().expect("log lock poisoned");
        inner.file.write_all(&buf)?;
        inner.file.sync_data()?;
        inner.records.extend_from_slice(records);
        Ok(())
    }

    /// Copy of every record written so far.
    pub fn snapshot(&self) -> Vec<AnswerRecord> {
        self.inner.lock().expect("log lock poisoned").records.clone()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("log lock poisoned").records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
