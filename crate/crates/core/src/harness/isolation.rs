use std::path::PathBuf;

use super::run::{run_events, CgroupConfig, RunReport, ScenarioConfig};
use super::spec::{PolicySpec, WorkloadSpec};
use super::{ConfigError, HarnessError, ReplayError};
use crate::api::{DEFAULT_SCAN_LIMIT, MAX_CANDIDATES};
use crate::types::{CgroupId, FileId};
use crate::workloads::TraceEvent;

/// Shift applied to each tenant's file ids so the two corpora never share pages.
const TENANT_FILE_SHIFT: u32 = 48;

/// Labels of the four configurations, in report order.
pub const ISOLATION_LABELS: [&str; 4] = ["both-default", "both-lfu", "both-mru", "tailored"];

#[derive(Clone, Debug, PartialEq)]
pub struct Tenant {
    pub cgroup: CgroupId,
    pub limit_bytes: u64,
    pub workload: WorkloadSpec,
    pub tailored: PolicySpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsolationConfig {
    pub tenants: Vec<Tenant>,
    pub seed: u64,
    pub candidates: usize,
    pub scan_window: usize,
    pub report: Option<PathBuf>,
}

impl IsolationConfig {
    pub fn new(a: Tenant, b: Tenant) -> Self {
        Self {
            tenants: vec![a, b],
            seed: 0,
            candidates: MAX_CANDIDATES,
            scan_window: DEFAULT_SCAN_LIMIT,
            report: None,
        }
    }
}

/// Interleaves streams in proportion to their lengths, keeping each
/// stream's own order; `seq` is renumbered to the merged position.
pub fn merge_proportional(streams: Vec<Vec<TraceEvent>>) -> Vec<TraceEvent> {
    let lens: Vec<u128> = streams.iter().map(|s| s.len() as u128).collect();
    let total: usize = streams.iter().map(Vec::len).sum();
    let mut taken = vec![0u128; streams.len()];
    let mut out = Vec::with_capacity(total);
    for seq in 0..total {
        // Next stream is the one whose next event sits earliest on a
        // common 0..1 timeline: (taken + 1/2) / len, ties to the lower index.
        let pick = (0..streams.len())
            .filter(|&i| taken[i] < lens[i])
            .min_by(|&i, &j| ((2 * taken[i] + 1) * lens[j]).cmp(&((2 * taken[j] + 1) * lens[i])))
            .expect("events remain");
        let mut ev = streams[pick][taken[pick] as usize];
        ev.seq = seq as u64;
        out.push(ev);
        taken[pick] += 1;
    }
    out
}

/// Runs the two-tenant experiment under both-default, both-LFU, both-MRU and
/// the tailored assignment, on one merged event stream.
pub fn scenario_isolation(cfg: &IsolationConfig) -> Result<Vec<RunReport>, HarnessError> {
    if cfg.tenants.len() != 2 {
        return Err(ConfigError(vec![format!(
            "isolation needs exactly two cgroups, got {}",
            cfg.tenants.len()
        )])
        .into());
    }
    if cfg.tenants[0].cgroup == cfg.tenants[1].cgroup {
        return Err(ConfigError(vec!["isolation needs two distinct cgroups".into()]).into());
    }
    let scenario = |label: &str, policy: &dyn Fn(&Tenant) -> PolicySpec| ScenarioConfig {
        label: label.to_string(),
        cgroups: cfg
            .tenants
            .iter()
            .map(|t| CgroupConfig {
                id: t.cgroup,
                limit_bytes: t.limit_bytes,
                policy: policy(t),
            })
            .collect(),
        workload: cfg.tenants[0].workload.clone(),
        seed: cfg.seed,
        candidates: cfg.candidates,
        scan_window: cfg.scan_window,
        warmup_events: 0,
        report: None,
    };
    let configs = [
        scenario(ISOLATION_LABELS[0], &|_| PolicySpec::named("default")),
        scenario(ISOLATION_LABELS[1], &|_| PolicySpec::named("lfu")),
        scenario(ISOLATION_LABELS[2], &|_| PolicySpec::named("mru")),
        scenario(ISOLATION_LABELS[3], &|t| t.tailored.clone()),
    ];
    let mut problems = Vec::new();
    for c in &configs {
        if let Err(ConfigError(e)) = c.validate() {
            problems.extend(e);
        }
    }
    for t in &cfg.tenants[1..] {
        problems.extend(t.workload.problems());
    }
    problems.dedup();
    if !problems.is_empty() {
        return Err(ConfigError(problems).into());
    }

    let mut streams = Vec::new();
    for (i, t) in cfg.tenants.iter().enumerate() {
        let events = t
            .workload
            .events(cfg.seed.wrapping_add(i as u64), t.cgroup)
            .map_err(ReplayError::from)?;
        let mut stream = Vec::new();
        for ev in events {
            let mut ev = ev.map_err(ReplayError::from)?;
            ev.cgroup = t.cgroup;
            ev.file = FileId(ev.file.0 | ((i as u64) << TENANT_FILE_SHIFT));
            stream.push(ev);
        }
        streams.push(stream);
    }
    let merged = merge_proportional(streams);

    let results: Vec<Result<RunReport, HarnessError>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| {
                let merged = &merged;
                s.spawn(move || run_events(c, merged.iter().copied().map(Ok)))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(HarnessError::Invariant("run panicked".into()))))
            .collect()
    });
    let reports = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    if let Some(path) = &cfg.report {
        std::fs::write(path, super::run::reports_csv(&reports))?;
    }
    Ok(reports)
}
