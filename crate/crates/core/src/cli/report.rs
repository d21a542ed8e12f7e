//! JSON analysis reports.
//!
//! The layout is described by `schema/report.schema.json`, whose version
//! is embedded in every report as `schema_version`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::cache::CacheRecord;
use super::config::AnalysisConfig;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: &str = "1.0.0";

/// The published report schema.
pub const SCHEMA: &str = include_str!("../../schema/report.schema.json");

/// How a command ended. Each status has its own exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// A criterion was evaluated and does not certify.
    FailsToCertify,
    /// A kernel dimension or verdict could not be decided.
    Undecided,
    /// The input violates a precondition (not a soliton, unnormalized, ...).
    Precondition,
    Usage,
    Internal,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Internal => 1,
            Status::Usage => 2,
            Status::Precondition => 3,
            Status::Undecided => 4,
            Status::FailsToCertify => 5,
        }
    }

    /// The status for a library error.
    pub fn of_error(e: &Error) -> Status {
        match e {
            Error::InvalidParameter(_) | Error::Unsupported(_) | Error::Toml(_) => Status::Usage,
            Error::Precondition(_) | Error::ConstraintViolated { .. } | Error::NotPositiveDefinite { .. } | Error::NoClosedForm(_) => {
                Status::Precondition
            }
            Error::Undecidable(_) => Status::Undecided,
            _ => Status::Internal,
        }
    }

    /// Tool errors rank above scientific outcomes.
    fn severity(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::FailsToCertify => 1,
            Status::Undecided => 2,
            Status::Precondition => 3,
            Status::Usage => 4,
            Status::Internal => 5,
        }
    }

    /// The more severe of two statuses, for multi-part commands.
    pub fn worst(self, other: Status) -> Status {
        if other.severity() > self.severity() {
            other
        } else {
            self
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommandResult {
    pub command: String,
    pub arguments: Value,
    pub status: Status,
    pub exit_code: i32,
    pub message: String,
    pub data: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub cache_dir: Option<String>,
    pub cached_operators: Vec<CacheRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub command: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: String,
    pub seed: u64,
    pub config: AnalysisConfig,
    pub results: Vec<CommandResult>,
    pub provenance: Provenance,
    /// Wall-clock times; the only part that varies between identical runs.
    pub timings: Vec<Timing>,
}

impl AnalysisReport {
    pub fn new(config: &AnalysisConfig) -> Self {
        AnalysisReport {
            schema_version: SCHEMA_VERSION.into(),
            seed: config.seed,
            config: config.clone(),
            results: Vec::new(),
            provenance: Provenance {
                tool: env!("CARGO_PKG_NAME").into(),
                version: env!("CARGO_PKG_VERSION").into(),
                cache_dir: None,
                cached_operators: Vec::new(),
            },
            timings: Vec::new(),
        }
    }

    /// Worst status over all results.
    pub fn status(&self) -> Status {
        self.results.iter().fold(Status::Ok, |s, r| s.worst(r.status))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable report")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let report: AnalysisReport = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "{}: schema version {} is not {SCHEMA_VERSION}",
                path.display(),
                report.schema_version
            )));
        }
        Ok(report)
    }
}

/// Concatenates reports. All inputs must share one seed; the merged config
/// is the first one's.
pub fn merge(reports: &[AnalysisReport]) -> Result<AnalysisReport> {
    let first = reports.first().ok_or_else(|| Error::InvalidParameter("nothing to merge".into()))?;
    if let Some(r) = reports.iter().find(|r| r.seed != first.seed) {
        return Err(Error::InvalidParameter(format!("cannot merge reports with seeds {} and {}", first.seed, r.seed)));
    }
    let mut out = AnalysisReport::new(&first.config);
    for r in reports {
        out.results.extend(r.results.iter().cloned());
        out.timings.extend(r.timings.iter().cloned());
        out.provenance.cached_operators.extend(r.provenance.cached_operators.iter().cloned());
    }
    out.provenance.cache_dir = first.provenance.cache_dir.clone();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct() {
        let all = [Status::Ok, Status::FailsToCertify, Status::Undecided, Status::Precondition, Status::Usage, Status::Internal];
        let mut codes: Vec<i32> = all.iter().map(|s| s.exit_code()).collect();
        codes.sort();
        codes.dedup();
        assert_eq!(codes.len(), all.len());
    }

    #[test]
    fn errors_outrank_outcomes() {
        assert_eq!(Status::Ok.worst(Status::Undecided), Status::Undecided);
        assert_eq!(Status::FailsToCertify.worst(Status::Undecided), Status::Undecided);
        assert_eq!(Status::Precondition.worst(Status::FailsToCertify), Status::Precondition);
        assert_eq!(Status::FailsToCertify.worst(Status::Internal), Status::Internal);
        assert_eq!(Status::Internal.worst(Status::FailsToCertify), Status::Internal);
    }

    #[test]
    fn schema_parses_and_names_version() {
        let schema: Value = serde_json::from_str(SCHEMA).unwrap();
        assert_eq!(schema["properties"]["schema_version"]["const"], SCHEMA_VERSION);
    }

    #[test]
    fn merge_rejects_mixed_seeds() {
        let a = AnalysisReport::new(&AnalysisConfig::default());
        let b = AnalysisReport::new(&AnalysisConfig { seed: 99, ..AnalysisConfig::default() });
        assert!(merge(&[a.clone(), b]).is_err());
        assert_eq!(merge(&[a.clone(), a]).unwrap().results.len(), 0);
    }
}
