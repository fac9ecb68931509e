//! Textual policy and workload specs: `name` or `name:key=value,key=value`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::api::{Policy, DEFAULT_SCAN_LIMIT};
use crate::policies::lhd::DESK_RECONFIG_INTERVAL;
use crate::policies::{Fifo, GetScan, Lfu, Lhd, Mru, S3Fifo, DEFAULT_MRU_SKIP};
use crate::types::{CgroupId, ThreadId};
use crate::workloads::{
    gen_filesearch, gen_getscan, gen_ycsb, parse_trace, FileSearchConfig, GetScanConfig, TraceError, TraceEvent,
    YcsbConfig, YcsbVariant,
};

pub const POLICY_NAMES: [&str; 7] = ["default", "fifo", "mru", "lfu", "s3fifo", "lhd", "getscan"];

type Params = BTreeMap<String, String>;

fn split_spec(s: &str) -> Result<(String, Params), String> {
    let (name, rest) = s.split_once(':').unwrap_or((s, ""));
    let name = name.trim().to_ascii_lowercase();
    if name.is_empty() {
        return Err(format!("empty name in spec {s:?}"));
    }
    let mut params = Params::new();
    for kv in rest.split(',').map(str::trim).filter(|kv| !kv.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("parameter {kv:?} is not key=value"))?;
        params.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
    }
    Ok((name, params))
}

fn join_params(f: &mut fmt::Formatter<'_>, name: &str, params: &Params) -> fmt::Result {
    f.write_str(name)?;
    for (i, (k, v)) in params.iter().enumerate() {
        write!(f, "{}{k}={v}", if i == 0 { ':' } else { ',' })?;
    }
    Ok(())
}

fn check_keys(what: &str, params: &Params, allowed: &[&str], errors: &mut Vec<String>) {
    for k in params.keys() {
        if !allowed.contains(&k.as_str()) {
            errors.push(format!("{what}: unknown parameter {k:?} (expected one of {})", allowed.join(", ")));
        }
    }
}

fn get<T: FromStr>(what: &str, params: &Params, key: &str, default: T, errors: &mut Vec<String>) -> T {
    match params.get(key) {
        None => default,
        Some(v) => v.parse().unwrap_or_else(|_| {
            errors.push(format!("{what}: parameter {key}: invalid value {v:?}"));
            default
        }),
    }
}

fn threads(what: &str, raw: &str, errors: &mut Vec<String>) -> Vec<ThreadId> {
    raw.split('+')
        .filter(|t| !t.is_empty())
        .filter_map(|t| match t.parse() {
            Ok(n) => Some(ThreadId(n)),
            Err(_) => {
                errors.push(format!("{what}: parameter scan_threads: invalid thread id {t:?}"));
                None
            }
        })
        .collect()
}

/// Settings shared by every policy built for one run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuildContext {
    pub scan_window: usize,
    pub scan_threads: Vec<ThreadId>,
}

impl Default for BuildContext {
    fn default() -> Self {
        Self {
            scan_window: DEFAULT_SCAN_LIMIT,
            scan_threads: Vec::new(),
        }
    }
}

/// A policy name plus parameters, e.g. `lfu:window=256` or `mru:skip=0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicySpec {
    pub name: String,
    pub params: Params,
}

impl PolicySpec {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            params: Params::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn is_default(&self) -> bool {
        self.name == "default"
    }

    /// Problems with this spec, all of them.
    pub fn problems(&self) -> Vec<String> {
        match self.try_build(&BuildContext::default()) {
            Ok(_) => Vec::new(),
            Err(e) => e,
        }
    }

    /// `None` means the kernel's default two-list policy.
    pub fn build(&self, ctx: &BuildContext) -> Result<Option<Box<dyn Policy>>, String> {
        self.try_build(ctx).map_err(|e| e.join("; "))
    }

    fn try_build(&self, ctx: &BuildContext) -> Result<Option<Box<dyn Policy>>, Vec<String>> {
        let what = format!("policy {}", self.name);
        let p = &self.params;
        let mut errors = Vec::new();
        let built: Option<Box<dyn Policy>> = match self.name.as_str() {
            "default" => {
                check_keys(&what, p, &[], &mut errors);
                None
            }
            "fifo" => {
                check_keys(&what, p, &[], &mut errors);
                Some(Box::new(Fifo::new()))
            }
            "mru" => {
                check_keys(&what, p, &["skip"], &mut errors);
                Some(Box::new(Mru::new(get(&what, p, "skip", DEFAULT_MRU_SKIP, &mut errors))))
            }
            "lfu" => {
                check_keys(&what, p, &["window"], &mut errors);
                Some(Box::new(Lfu::new(get(&what, p, "window", ctx.scan_window, &mut errors))))
            }
            "s3fifo" => {
                check_keys(&what, p, &["audit"], &mut errors);
                let s3 = S3Fifo::new();
                Some(Box::new(if get(&what, p, "audit", false, &mut errors) {
                    s3.with_audit()
                } else {
                    s3
                }))
            }
            "lhd" => {
                check_keys(&what, p, &["reconfig", "window"], &mut errors);
                let window = get(&what, p, "window", ctx.scan_window, &mut errors);
                let interval = get(&what, p, "reconfig", DESK_RECONFIG_INTERVAL, &mut errors);
                if interval == 0 {
                    errors.push(format!("{what}: parameter reconfig must be at least 1"));
                }
                Some(Box::new(Lhd::new(interval, window)))
            }
            "getscan" => {
                check_keys(&what, p, &["window", "scan_threads"], &mut errors);
                let window = get(&what, p, "window", ctx.scan_window, &mut errors);
                let scan = match p.get("scan_threads") {
                    Some(raw) => threads(&what, raw, &mut errors),
                    None => ctx.scan_threads.clone(),
                };
                Some(Box::new(GetScan::with_window(scan, window)))
            }
            other => {
                errors.push(format!("unknown policy {other:?} (expected one of {})", POLICY_NAMES.join(", ")));
                None
            }
        };
        if errors.is_empty() {
            Ok(built)
        } else {
            Err(errors)
        }
    }
}

impl FromStr for PolicySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, params) = split_spec(s)?;
        Ok(Self { name, params })
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        join_params(f, &self.name, &self.params)
    }
}

/// Where the events of a run come from.
#[derive(Clone, Debug, PartialEq)]
pub enum WorkloadSpec {
    Ycsb(YcsbConfig),
    FileSearch(FileSearchConfig),
    GetScan(GetScanConfig),
    Trace(PathBuf),
}

pub type EventStream = Box<dyn Iterator<Item = Result<TraceEvent, TraceError>> + Send>;

impl WorkloadSpec {
    /// Events for this workload; generated workloads take their seed and
    /// target cgroup from the arguments.
    pub fn events(&self, seed: u64, cgroup: CgroupId) -> Result<EventStream, TraceError> {
        Ok(match self {
            WorkloadSpec::Ycsb(c) => Box::new(gen_ycsb(YcsbConfig { seed, cgroup, ..c.clone() }).map(Ok)),
            WorkloadSpec::FileSearch(c) => Box::new(gen_filesearch(FileSearchConfig { cgroup, ..c.clone() }).map(Ok)),
            WorkloadSpec::GetScan(c) => Box::new(gen_getscan(GetScanConfig { seed, cgroup, ..c.clone() }).map(Ok)),
            WorkloadSpec::Trace(path) => Box::new(parse_trace(path)?),
        })
    }

    /// Threads the workload marks as scanners.
    pub fn scan_threads(&self) -> Vec<ThreadId> {
        match self {
            WorkloadSpec::GetScan(c) => c.scan_thread_ids(),
            _ => Vec::new(),
        }
    }

    pub fn problems(&self) -> Vec<String> {
        let mut errors = Vec::new();
        match self {
            WorkloadSpec::Ycsb(c) => {
                if c.keyspace == 0 || c.count == 0 || c.value_size == 0 || c.keys_per_file == 0 {
                    errors.push("workload ycsb: keyspace, count, value_size and keys_per_file must be positive".into());
                }
                if c.theta.is_nan() || c.theta < 0.0 {
                    errors.push("workload ycsb: theta must be non-negative".into());
                }
            }
            WorkloadSpec::FileSearch(c) => {
                if c.files == 0 || c.file_pages == 0 || c.passes == 0 {
                    errors.push("workload filesearch: files, file_pages and passes must be positive".into());
                }
            }
            WorkloadSpec::GetScan(c) => {
                if !(0.0..=1.0).contains(&c.scan_fraction) {
                    errors.push("workload getscan: scan_fraction must be within 0..=1".into());
                }
                if c.scan_len_pages == 0 || c.get_keyspace == 0 || c.count == 0 || c.value_size == 0 {
                    errors.push("workload getscan: scan_len, get_keyspace, count and value_size must be positive".into());
                }
                if c.theta.is_nan() || c.theta < 0.0 {
                    errors.push("workload getscan: theta must be non-negative".into());
                }
            }
            WorkloadSpec::Trace(p) => {
                if !p.is_file() {
                    errors.push(format!("trace {} does not exist", p.display()));
                }
            }
        }
        errors
    }
}

impl FromStr for WorkloadSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, p) = split_spec(s)?;
        let what = format!("workload {name}");
        let mut errors = Vec::new();
        let spec = match name.as_str() {
            "ycsb" => {
                check_keys(
                    &what,
                    &p,
                    &["variant", "keyspace", "value_size", "keys_per_file", "theta", "count", "threads"],
                    &mut errors,
                );
                let d = YcsbConfig::default();
                let variant = match p.get("variant").map(|v| v.to_ascii_lowercase()).as_deref() {
                    None | Some("c") => YcsbVariant::C,
                    Some("a") => YcsbVariant::A,
                    Some("uniform") => YcsbVariant::Uniform,
                    Some("uniformrw") | Some("uniform-rw") => YcsbVariant::UniformRW,
                    Some(v) => {
                        errors.push(format!("{what}: parameter variant: invalid value {v:?}"));
                        YcsbVariant::C
                    }
                };
                WorkloadSpec::Ycsb(YcsbConfig {
                    variant,
                    keyspace: get(&what, &p, "keyspace", d.keyspace, &mut errors),
                    value_size: get(&what, &p, "value_size", d.value_size, &mut errors),
                    keys_per_file: get(&what, &p, "keys_per_file", d.keys_per_file, &mut errors),
                    theta: get(&what, &p, "theta", d.theta, &mut errors),
                    count: get(&what, &p, "count", d.count, &mut errors),
                    threads: get(&what, &p, "threads", d.threads, &mut errors),
                    ..d
                })
            }
            "filesearch" => {
                check_keys(&what, &p, &["files", "file_pages", "passes", "threads"], &mut errors);
                let d = FileSearchConfig::default();
                WorkloadSpec::FileSearch(FileSearchConfig {
                    files: get(&what, &p, "files", d.files, &mut errors),
                    file_pages: get(&what, &p, "file_pages", d.file_pages, &mut errors),
                    passes: get(&what, &p, "passes", d.passes, &mut errors),
                    threads: get(&what, &p, "threads", d.threads, &mut errors),
                    ..d
                })
            }
            "getscan" => {
                check_keys(
                    &what,
                    &p,
                    &[
                        "scan_fraction",
                        "scan_len",
                        "scan_region",
                        "get_keyspace",
                        "value_size",
                        "theta",
                        "count",
                        "get_threads",
                        "scan_threads",
                    ],
                    &mut errors,
                );
                let d = GetScanConfig::default();
                WorkloadSpec::GetScan(GetScanConfig {
                    scan_fraction: get(&what, &p, "scan_fraction", d.scan_fraction, &mut errors),
                    scan_len_pages: get(&what, &p, "scan_len", d.scan_len_pages, &mut errors),
                    scan_region_pages: get(&what, &p, "scan_region", d.scan_region_pages, &mut errors),
                    get_keyspace: get(&what, &p, "get_keyspace", d.get_keyspace, &mut errors),
                    value_size: get(&what, &p, "value_size", d.value_size, &mut errors),
                    theta: get(&what, &p, "theta", d.theta, &mut errors),
                    count: get(&what, &p, "count", d.count, &mut errors),
                    get_threads: get(&what, &p, "get_threads", d.get_threads, &mut errors),
                    scan_threads: get(&what, &p, "scan_threads", d.scan_threads, &mut errors),
                    ..d
                })
            }
            "trace" => {
                check_keys(&what, &p, &["path"], &mut errors);
                match p.get("path") {
                    Some(path) => WorkloadSpec::Trace(PathBuf::from(path)),
                    None => return Err(format!("{what}: missing parameter path")),
                }
            }
            other => return Err(format!("unknown workload {other:?} (expected ycsb, filesearch, getscan or trace)")),
        };
        if errors.is_empty() {
            Ok(spec)
        } else {
            Err(errors.join("; "))
        }
    }
}
