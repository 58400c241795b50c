//! Instance files: JSON documents describing one scheduling problem.
//!
//! ```json
//! {
//!   "bandwidth": 10.0,
//!   "jobs": [{"size": 4.0, "weight": 0.25}, {"size": 2.0, "weight": 0.5}],
//!   "speedup": {"family": "log", "a": 1.0, "p": 1.0},
//!   "label": "example"
//! }
//! ```
//!
//! Parsing distinguishes malformed documents from semantically invalid ones
//! (axiom failures, bad orderings); the CLI maps the two onto different exit
//! codes. Jobs may arrive in any order and are normalized by the scheduler's
//! sort; the caller can surface a warning via
//! [`ProblemInstance::was_reordered`].

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::scheduler::{Job, ProblemInstance, SchedulerError};
use crate::speedup::{SpeedupError, SpeedupSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub bandwidth: f64,
    pub jobs: Vec<JobEntry>,
    pub speedup: SpeedupSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobEntry {
    pub size: f64,
    pub weight: f64,
}

/// A parsed and validated instance.
#[derive(Debug, Clone)]
pub struct ParsedInstance {
    pub instance: ProblemInstance,
    pub label: Option<String>,
}

#[derive(Debug)]
pub enum InstanceError {
    Io {
        path: String,
        source: io::Error,
    },
    /// Malformed document; the message carries line and column context.
    Parse(String),
    /// Well-formed but semantically invalid.
    Validation(String),
}

impl fmt::Display for InstanceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceError::Io { path, source } => write!(f, "cannot read {path}: {source}"),
            InstanceError::Parse(msg) => write!(f, "parse error: {msg}"),
            InstanceError::Validation(msg) => write!(f, "validation error: {msg}"),
        }
    }
}

impl std::error::Error for InstanceError {}

impl From<SpeedupError> for InstanceError {
    fn from(e: SpeedupError) -> Self {
        InstanceError::Validation(e.to_string())
    }
}

impl From<SchedulerError> for InstanceError {
    fn from(e: SchedulerError) -> Self {
        InstanceError::Validation(e.to_string())
    }
}

pub fn parse_instance(path: &Path) -> Result<ParsedInstance, InstanceError> {
    let text = fs::read_to_string(path).map_err(|source| InstanceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_instance_str(&text)
}

pub fn parse_instance_str(text: &str) -> Result<ParsedInstance, InstanceError> {
    let file: InstanceFile =
        serde_json::from_str(text).map_err(|e| InstanceError::Parse(e.to_string()))?;
    build_instance(&file)
}

pub fn build_instance(file: &InstanceFile) -> Result<ParsedInstance, InstanceError> {
    let speedup = file.speedup.into_function(file.bandwidth)?;
    let report = speedup.validate();
    if !report.is_valid() {
        let details: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        return Err(InstanceError::Validation(format!(
            "speedup axioms: {}",
            details.join("; ")
        )));
    }
    let jobs = file
        .jobs
        .iter()
        .map(|j| Job {
            size: j.size,
            weight: j.weight,
        })
        .collect();
    let instance = ProblemInstance::new(file.bandwidth, jobs, speedup)?;
    Ok(ParsedInstance {
        instance,
        label: file.label.clone(),
    })
}
