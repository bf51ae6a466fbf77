//! Knowledge base of leak-relevant library functions.
//!
//! The file format is TOML with four string-list keys:
//!
//! ```toml
//! reset = ["fit_transform", "transform", "sklearn.preprocessing.scale"]
//! train = ["fit"]
//! test = ["predict", "score"]
//! ingest = ["read_csv", "open"]
//! ```
//!
//! A pattern without a dot matches the unqualified callee name. A dotted
//! pattern matches when it is a suffix of the callee path on segment
//! boundaries (`preprocessing.scale` matches `sklearn.preprocessing.scale`).

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::CallSite;

pub const KB_ENV_VAR: &str = "NBPROBE_KB";

#[derive(Debug, Error)]
pub enum KbError {
    #[error("cannot read knowledge base {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid knowledge base: {0}")]
    Format(#[from] toml::de::Error),
    #[error("pattern `{pattern}` is listed in both `{first}` and `{second}`")]
    Overlap { pattern: String, first: &'static str, second: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CallClass {
    Reset,
    Train,
    Test,
    Propagate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeBase {
    #[serde(default)]
    pub reset: BTreeSet<String>,
    #[serde(default)]
    pub train: BTreeSet<String>,
    #[serde(default)]
    pub test: BTreeSet<String>,
    #[serde(default)]
    pub ingest: BTreeSet<String>,
}

impl Default for KnowledgeBase {
    fn default() -> Self {
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Self {
            reset: set(&[
                "fit_transform",
                "transform",
                "scale",
                "normalize",
                "minmax_scale",
                "maxabs_scale",
                "robust_scale",
            ]),
            train: set(&["fit", "fit_generator", "partial_fit", "train"]),
            test: set(&["predict", "predict_proba", "predict_log_proba", "score", "evaluate"]),
            ingest: set(&[
                "read_csv",
                "read_parquet",
                "read_json",
                "read_excel",
                "read_table",
                "read_sql",
                "open",
                "load",
                "loadtxt",
            ]),
        }
    }
}

impl KnowledgeBase {
    pub fn from_toml(text: &str) -> Result<Self, KbError> {
        let kb: KnowledgeBase = toml::from_str(text)?;
        kb.validate()?;
        Ok(kb)
    }

    pub fn load(path: &Path) -> Result<Self, KbError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| KbError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    /// The file named by `NBPROBE_KB` when set, otherwise the built-in set.
    pub fn from_env() -> Result<Self, KbError> {
        match std::env::var_os(KB_ENV_VAR) {
            Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
            _ => Ok(Self::default()),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("string lists always serialize")
    }

    pub fn validate(&self) -> Result<(), KbError> {
        let groups: [(&'static str, &BTreeSet<String>); 3] =
            [("reset", &self.reset), ("train", &self.train), ("test", &self.test)];
        for (i, (first, a)) in groups.iter().enumerate() {
            for (second, b) in &groups[i + 1..] {
                if let Some(p) = a.intersection(b).next() {
                    return Err(KbError::Overlap { pattern: p.clone(), first, second });
                }
            }
        }
        Ok(())
    }

    pub fn classify(&self, call: &CallSite) -> CallClass {
        if matches_any(&self.reset, call) {
            CallClass::Reset
        } else if matches_any(&self.train, call) {
            CallClass::Train
        } else if matches_any(&self.test, call) {
            CallClass::Test
        } else {
            CallClass::Propagate
        }
    }

    pub fn is_ingest(&self, call: &CallSite) -> bool {
        matches_any(&self.ingest, call)
    }
}

fn matches_any(patterns: &BTreeSet<String>, call: &CallSite) -> bool {
    patterns.iter().any(|p| pattern_matches(p, call))
}

pub fn pattern_matches(pattern: &str, call: &CallSite) -> bool {
    if !pattern.contains('.') {
        return pattern == call.name;
    }
    call.path == pattern
        || call
            .path
            .strip_suffix(pattern)
            .is_some_and(|rest| rest.ends_with('.'))
}
