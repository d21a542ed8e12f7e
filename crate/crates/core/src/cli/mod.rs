//! Command-line orchestration: configuration, the command runner, JSON
//! reports and the operator cache.
//!
//! Exit codes: 0 success, 1 internal error, 2 usage error, 3 precondition
//! failure, 4 undecided kernel or verdict, 5 a criterion fails to certify.

pub mod args;
pub mod cache;
pub mod config;
pub mod report;
pub mod run;
pub mod studies;

pub use cache::{OperatorCache, CACHE_ENV};
pub use config::AnalysisConfig;
pub use report::{AnalysisReport, Status};
pub use run::{run, Command};
