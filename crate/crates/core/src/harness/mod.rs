//! Configures cgroups and policies, replays event streams, and reports
//! per-cgroup metrics as CSV.

mod isolation;
mod metrics;
mod run;
mod spec;

use std::fmt;

use thiserror::Error;

use crate::cache::CacheError;
use crate::workloads::TraceError;

pub use isolation::{merge_proportional, scenario_isolation, IsolationConfig, Tenant, ISOLATION_LABELS};
pub use metrics::{write_csv, CgroupMetrics, OpCounts, CSV_COLUMNS, RATIO_OPS};
pub use run::{compare, reports_csv, run, CgroupConfig, Replayer, RunReport, ScenarioConfig};
pub use spec::{BuildContext, EventStream, PolicySpec, WorkloadSpec, POLICY_NAMES};

/// Every validation problem found in a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub Vec<String>);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration")?;
        for p in &self.0 {
            write!(f, "\n  - {p}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("event {seq}: {source}")]
    Event { seq: u64, source: CacheError },
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("replay aborted: {0}")]
    Replay(#[from] ReplayError),
    #[error("invariant violated after replay: {0}")]
    Invariant(String),
    #[error("report: {0}")]
    Io(#[from] std::io::Error),
    #[error("report: {0}")]
    Csv(#[from] csv::Error),
}
