use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::SurveyError;

/// Service settings. Read from a TOML file, then overridden by `CTXSUM_SURVEY_*` variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServiceConfig {
    pub bind: String,
    /// Question bank JSON.
    pub corpus: PathBuf,
    /// Append-only answer log, one JSON record per line.
    pub log: PathBuf,
    /// Directory served under `/media`.
    pub media: PathBuf,
    pub max_sets: usize,
    /// Seed for video-set sampling; random when absent.
    pub seed: Option<u64>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: "127.0.0.1:8080".into(),
            corpus: "question_bank.json".into(),
            log: "answers.log".into(),
            media: "media".into(),
            max_sets: 10,
            seed: None,
        }
    }
}

pub const ENV_PREFIX: &str = "CTXSUM_SURVEY_";

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, SurveyError> {
        toml::from_str(text).map_err(|e| SurveyError::Config(e.to_string()))
    }

    /// Loads `path` when given (defaults otherwise) and applies environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, SurveyError> {
        let mut cfg = match path {
            Some(p) => {
                let text =
                    std::fs::read_to_string(p).map_err(|e| SurveyError::Config(format!("{}: {e}", p.display())))?;
                Self::from_toml(&text)?
            }
            None => ServiceConfig::default(),
        };
        cfg.apply_overrides(std::env::vars())?;
        Ok(cfg)
    }

    pub fn apply_overrides(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<(), SurveyError> {
        for (key, value) in vars {
            let Some(name) = key.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let bad = |what: &str| SurveyError::Config(format!("{key}={value:?} is not a valid {what}"));
            match name {
                "BIND" => self.bind = value,
                "CORPUS" => self.corpus = value.into(),
                "LOG" => self.log = value.into(),
                "MEDIA" => self.media = value.into(),
                "MAX_SETS" => self.max_sets = value.parse().map_err(|_| bad("count"))?,
                "SEED" => self.seed = Some(value.parse().map_err(|_| bad("seed"))?),
                _ => {
                    return Err(SurveyError::Config(format!(
                        "unknown variable {key}; expected one of BIND, CORPUS, LOG, MEDIA, MAX_SETS, SEED"
                    )))
                }
            }
        }
        if self.max_sets == 0 {
            return Err(SurveyError::Config("max_sets must be at least 1".into()));
        }
        Ok(())
    }
}
