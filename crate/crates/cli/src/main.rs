use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use cachesim_core::api::{DEFAULT_SCAN_LIMIT, MAX_CANDIDATES};
use cachesim_core::harness::{
    compare, reports_csv, run, scenario_isolation, IsolationConfig, PolicySpec, ScenarioConfig, Tenant, WorkloadSpec,
};
use cachesim_core::workloads::write_trace;
use cachesim_core::CgroupId;
use clap::{Args, Parser, Subcommand};

/// Trace-driven page-cache simulator with per-cgroup eviction policies.
#[derive(Parser, Debug)]
#[command(name = "cachesim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Replay one workload under one policy.
    Run {
        #[command(flatten)]
        common: Common,
        /// Cgroup memory limit in bytes, a multiple of 4096.
        #[arg(long)]
        limit_bytes: u64,
        /// Policy spec, `name` or `name:key=value,...`.
        #[arg(long, default_value = "default")]
        policy: PolicySpec,
        /// Extra policy parameter, `key=value`.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
    },
    /// Replay one workload under several policies, one CSV row each.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        limit_bytes: u64,
        /// Repeat once per policy; rows follow this order.
        #[arg(long = "policy", required = true)]
        policies: Vec<PolicySpec>,
        /// Extra parameter for one policy, `policy.key=value`.
        #[arg(long = "param", value_name = "POLICY.KEY=VALUE")]
        params: Vec<String>,
    },
    /// Two tenants under both-default, both-lfu, both-mru and tailored policies.
    Isolation {
        /// Limit of cgroup 1, then cgroup 2.
        #[arg(long, num_args = 2, required = true)]
        limit_bytes: Vec<u64>,
        /// Workload of cgroup 1, then cgroup 2.
        #[arg(long, num_args = 2, default_values = ["ycsb", "filesearch"])]
        workload: Vec<WorkloadSpec>,
        /// Tailored policy of cgroup 1, then cgroup 2.
        #[arg(long = "policy", num_args = 2, default_values = ["lfu", "mru"])]
        policies: Vec<PolicySpec>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = MAX_CANDIDATES)]
        candidates: usize,
        #[arg(long, default_value_t = DEFAULT_SCAN_LIMIT)]
        scan_window: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a generated workload as a trace CSV.
    GenTrace {
        #[arg(long)]
        workload: WorkloadSpec,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        cgroup: u64,
        /// Output path; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Workload spec, e.g. `ycsb:variant=c,count=100000`.
    #[arg(long, conflicts_with = "trace", required_unless_present = "trace")]
    workload: Option<WorkloadSpec>,
    /// Trace CSV to replay instead of a generated workload.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Eviction candidates requested per round.
    #[arg(long, default_value_t = MAX_CANDIDATES)]
    candidates: usize,
    /// Nodes a policy may examine per round.
    #[arg(long, default_value_t = DEFAULT_SCAN_LIMIT)]
    scan_window: usize,
    /// Events replayed before counting starts.
    #[arg(long, default_value_t = 0)]
    warmup: u64,
    /// CSV report path; the report also goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn scenario(self, limit_bytes: u64, policy: PolicySpec) -> ScenarioConfig {
        let workload = match (self.workload, self.trace) {
            (_, Some(path)) => WorkloadSpec::Trace(path),
            (Some(w), None) => w,
            (None, None) => unreachable!("clap requires one of them"),
        };
        let mut cfg = ScenarioConfig::single(limit_bytes, policy.clone(), workload);
        cfg.label = policy.to_string();
        cfg.seed = self.seed;
        cfg.candidates = self.candidates;
        cfg.scan_window = self.scan_window;
        cfg.warmup_events = self.warmup;
        cfg.report = self.out;
        cfg
    }
}

fn split_param(p: &str) -> Result<(&str, &str)> {
    p.split_once('=')
        .filter(|(k, _)| !k.is_empty())
        .with_context(|| format!("--param {p:?}: expected key=value"))
}

fn execute(cli: Cli) -> Result<()> {
    let csv = match cli.command {
        Command::Run {
            common,
            limit_bytes,
            mut policy,
            params,
        } => {
            for p in &params {
                let (k, v) = split_param(p)?;
                policy = policy.with(k, v);
            }
            let cfg = common.scenario(limit_bytes, policy);
            run(&cfg)?.csv_string()
        }
        Command::Compare {
            common,
            limit_bytes,
            mut policies,
            params,
        } => {
            for p in &params {
                let (target, v) = split_param(p)?;
                let Some((name, k)) = target.split_once('.') else {
                    bail!("--param {p:?}: expected policy.key=value");
                };
                let mut hit = false;
                for spec in policies.iter_mut().filter(|s| s.name == name) {
                    *spec = spec.clone().with(k, v);
                    hit = true;
                }
                if !hit {
                    bail!("--param {p:?}: no policy named {name:?} in the comparison");
                }
            }
            let cfg = common.scenario(limit_bytes, PolicySpec::named("default"));
            reports_csv(&compare(&cfg, &policies)?)
        }
        Command::Isolation {
            limit_bytes,
            workload,
            policies,
            seed,
            candidates,
            scan_window,
            out,
        } => {
            let tenant = |i: usize| Tenant {
                cgroup: CgroupId(i as u64 + 1),
                limit_bytes: limit_bytes[i],
                workload: workload[i].clone(),
                tailored: policies[i].clone(),
            };
            let mut cfg = IsolationConfig::new(tenant(0), tenant(1));
            cfg.seed = seed;
            cfg.candidates = candidates;
            cfg.scan_window = scan_window;
            cfg.report = out;
            reports_csv(&scenario_isolation(&cfg)?)
        }
        Command::GenTrace {
            workload,
            seed,
            cgroup,
            out,
        } => {
            let events = workload
                .events(seed, CgroupId(cgroup))?
                .collect::<Result<Vec<_>, _>>()?;
            match out {
                Some(path) => {
                    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                    write_trace(BufWriter::new(file), events)?;
                }
                None => write_trace(io::stdout().lock(), events)?,
            }
            return Ok(());
        }
    };
    io::stdout().lock().write_all(csv.as_bytes())?;
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
