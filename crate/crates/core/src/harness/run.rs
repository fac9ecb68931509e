use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use super::metrics::{write_csv, CgroupMetrics};
use super::spec::{BuildContext, PolicySpec, WorkloadSpec};
use super::{ConfigError, HarnessError, ReplayError};
use crate::api::{MAX_CANDIDATES, DEFAULT_SCAN_LIMIT};
use crate::cache::{CgroupStats, PageCache};
use crate::types::{CgroupId, PAGE_SIZE};
use crate::workloads::{Op, TraceEvent};

#[derive(Clone, Debug, PartialEq)]
pub struct CgroupConfig {
    pub id: CgroupId,
    pub limit_bytes: u64,
    pub policy: PolicySpec,
}

impl CgroupConfig {
    pub fn new(id: u64, limit_bytes: u64, policy: PolicySpec) -> Self {
        Self {
            id: CgroupId(id),
            limit_bytes,
            policy,
        }
    }

    pub fn limit_pages(&self) -> u64 {
        self.limit_bytes / PAGE_SIZE
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub label: String,
    pub cgroups: Vec<CgroupConfig>,
    pub workload: WorkloadSpec,
    pub seed: u64,
    pub candidates: usize,
    pub scan_window: usize,
    /// Events replayed before counters start.
    pub warmup_events: u64,
    pub report: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn new(cgroups: Vec<CgroupConfig>, workload: WorkloadSpec) -> Self {
        Self {
            label: String::new(),
            cgroups,
            workload,
            seed: 0,
            candidates: MAX_CANDIDATES,
            scan_window: DEFAULT_SCAN_LIMIT,
            warmup_events: 0,
            report: None,
        }
    }

    /// One cgroup, id 0.
    pub fn single(limit_bytes: u64, policy: PolicySpec, workload: WorkloadSpec) -> Self {
        Self::new(vec![CgroupConfig::new(0, limit_bytes, policy)], workload)
    }

    /// Every problem with the configuration.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errors = Vec::new();
        if self.cgroups.is_empty() {
            errors.push("at least one cgroup is required".to_string());
        }
        let mut seen = Vec::new();
        for cg in &self.cgroups {
            if seen.contains(&cg.id) {
                errors.push(format!("cgroup {} listed twice", cg.id.0));
            }
            seen.push(cg.id);
            if cg.limit_bytes == 0 {
                errors.push(format!("cgroup {}: limit of 0 bytes", cg.id.0));
            } else if cg.limit_bytes % PAGE_SIZE != 0 {
                errors.push(format!(
                    "cgroup {}: limit {} bytes is not a multiple of {PAGE_SIZE}",
                    cg.id.0, cg.limit_bytes
                ));
            }
            errors.extend(cg.policy.problems().into_iter().map(|e| format!("cgroup {}: {e}", cg.id.0)));
        }
        if !(1..=MAX_CANDIDATES).contains(&self.candidates) {
            errors.push(format!("candidates {} outside 1..={MAX_CANDIDATES}", self.candidates));
        }
        if self.scan_window < self.candidates {
            errors.push(format!(
                "scan window {} smaller than candidate batch {}",
                self.scan_window, self.candidates
            ));
        }
        errors.extend(self.workload.problems());
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(errors))
        }
    }

    fn build_cache(&self) -> Result<PageCache, HarnessError> {
        let ctx = BuildContext {
            scan_window: self.scan_window,
            scan_threads: self.workload.scan_threads(),
        };
        let mut cache = PageCache::new()
            .with_batch(self.candidates)
            .map_err(|e| ConfigError(vec![e.to_string()]))?;
        for cg in &self.cgroups {
            let policy = cg.policy.build(&ctx).map_err(|e| ConfigError(vec![e]))?;
            cache
                .add_cgroup(cg.id, cg.limit_pages(), policy)
                .map_err(|e| ConfigError(vec![format!("cgroup {}: {e}", cg.id.0)]))?;
        }
        Ok(cache)
    }
}

/// Result of one run: a metrics row per cgroup in configuration order.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub label: String,
    pub rows: Vec<CgroupMetrics>,
    pub events: u64,
    pub wall_time: Duration,
}

impl RunReport {
    pub fn cgroup(&self, id: CgroupId) -> Option<&CgroupMetrics> {
        self.rows.iter().find(|r| r.cgroup == id)
    }

    pub fn csv_string(&self) -> String {
        reports_csv(std::slice::from_ref(self))
    }
}

pub fn reports_csv(reports: &[RunReport]) -> String {
    let mut out = Vec::new();
    write_csv(&mut out, reports.iter().flat_map(|r| &r.rows)).expect("writing to memory");
    String::from_utf8(out).expect("csv is utf-8")
}

/// Replays events against a cache and tallies per-cgroup metrics.
pub struct Replayer {
    cache: PageCache,
    counters: BTreeMap<CgroupId, CgroupMetrics>,
    baseline: BTreeMap<CgroupId, CgroupStats>,
    events: u64,
    capacity_violations: u64,
}

impl Replayer {
    pub fn new(cache: PageCache) -> Self {
        let mut r = Self {
            cache,
            counters: BTreeMap::new(),
            baseline: BTreeMap::new(),
            events: 0,
            capacity_violations: 0,
        };
        r.reset_counters();
        r
    }

    pub fn cache(&self) -> &PageCache {
        &self.cache
    }

    pub fn cache_mut(&mut self) -> &mut PageCache {
        &mut self.cache
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    /// Starts counting afresh from the current cache state.
    pub fn reset_counters(&mut self) {
        self.counters.clear();
        self.baseline = self.cache.cgroups().map(|cg| (cg.id(), cg.stats().clone())).collect();
        self.capacity_violations = 0;
    }

    pub fn apply(&mut self, ev: &TraceEvent) -> Result<(), ReplayError> {
        let err = |source| ReplayError::Event { seq: ev.seq, source };
        if ev.op == Op::DeleteFile {
            self.cache.remove_file(ev.cgroup, ev.file).map_err(err)?;
        } else if let Some(pages) = ev.pages() {
            for page in pages {
                let outcome = self
                    .cache
                    .access(ev.cgroup, ev.file, page, ev.op.is_write(), ev.thread)
                    .map_err(err)?;
                self.counters.entry(ev.cgroup).or_default().record(ev.op, outcome.is_hit());
            }
        }
        self.cache.end_event();
        self.capacity_violations += self.cache.capacity_violations() as u64;
        self.events += 1;
        Ok(())
    }

    pub fn capacity_violations(&self) -> u64 {
        self.capacity_violations
    }

    /// Metrics per cgroup, ordered by cgroup id.
    pub fn metrics(&self, label: &str) -> Vec<CgroupMetrics> {
        self.cache
            .cgroups()
            .map(|cg| {
                let mut m = self.counters.get(&cg.id()).cloned().unwrap_or_default();
                m.label = label.to_string();
                m.policy = cg.policy_name().to_string();
                m.cgroup = cg.id();
                let base = self.baseline.get(&cg.id()).cloned().unwrap_or_default();
                m.set_cache_stats(cg.stats(), &base);
                m.capacity_violations = self.capacity_violations;
                m
            })
            .collect()
    }
}

pub(crate) fn run_events(
    cfg: &ScenarioConfig,
    events: impl IntoIterator<Item = Result<TraceEvent, ReplayError>>,
) -> Result<RunReport, HarnessError> {
    let start = Instant::now();
    let mut replay = Replayer::new(cfg.build_cache()?);
    for ev in events {
        let ev = ev?;
        replay.apply(&ev)?;
        if replay.events() == cfg.warmup_events {
            replay.reset_counters();
        }
    }
    replay.cache().check_invariants().map_err(HarnessError::Invariant)?;
    let all = replay.metrics(&cfg.label);
    for m in &all {
        if m.hits + m.misses != m.accesses {
            return Err(HarnessError::Invariant(format!("{}: hits + misses != accesses", m.cgroup)));
        }
    }
    let rows = cfg
        .cgroups
        .iter()
        .filter_map(|c| all.iter().find(|m| m.cgroup == c.id).cloned())
        .collect();
    Ok(RunReport {
        label: cfg.label.clone(),
        rows,
        events: replay.events(),
        wall_time: start.elapsed(),
    })
}

fn write_report(path: &PathBuf, reports: &[RunReport]) -> Result<(), HarnessError> {
    let file = BufWriter::new(File::create(path)?);
    write_csv(file, reports.iter().flat_map(|r| &r.rows))?;
    Ok(())
}

/// Replays the configured workload once.
pub fn run(cfg: &ScenarioConfig) -> Result<RunReport, HarnessError> {
    cfg.validate()?;
    let cgroup = cfg.cgroups[0].id;
    let events = cfg.workload.events(cfg.seed, cgroup).map_err(ReplayError::from)?;
    let report = run_events(cfg, events.map(|e| e.map_err(ReplayError::from)))?;
    if let Some(path) = &cfg.report {
        write_report(path, std::slice::from_ref(&report))?;
    }
    Ok(report)
}

/// Runs the same workload once per policy, in parallel. Every cgroup gets
/// the policy under test; reports come back in `policies` order.
pub fn compare(cfg: &ScenarioConfig, policies: &[PolicySpec]) -> Result<Vec<RunReport>, HarnessError> {
    if policies.is_empty() {
        return Err(ConfigError(vec!["compare needs at least one policy".into()]).into());
    }
    let configs: Vec<ScenarioConfig> = policies
        .iter()
        .map(|p| ScenarioConfig {
            label: p.to_string(),
            cgroups: cfg
                .cgroups
                .iter()
                .map(|c| CgroupConfig {
                    policy: p.clone(),
                    ..c.clone()
                })
                .collect(),
            report: None,
            ..cfg.clone()
        })
        .collect();
    let mut problems = Vec::new();
    for c in &configs {
        if let Err(ConfigError(e)) = c.validate() {
            problems.extend(e.into_iter().filter(|p| !problems.contains(p)).collect::<Vec<_>>());
        }
    }
    if !problems.is_empty() {
        return Err(ConfigError(problems).into());
    }
    let results: Vec<Result<RunReport, HarnessError>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs.iter().map(|c| s.spawn(move || run(c))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(HarnessError::Invariant("run panicked".into()))))
            .collect()
    });
    let reports = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    if let Some(path) = &cfg.report {
        write_report(path, &reports)?;
    }
    Ok(reports)
}
