use std::io::Write;

use crate::cache::CgroupStats;
use crate::types::CgroupId;
use crate::workloads::Op;

/// Column order of the CSV report; one row per (run, cgroup).
pub const CSV_COLUMNS: [&str; 17] = [
    "label",
    "policy",
    "cgroup",
    "accesses",
    "hits",
    "misses",
    "hit_ratio",
    "get_hit_ratio",
    "scan_hit_ratio",
    "read_hit_ratio",
    "write_hit_ratio",
    "evictions_policy",
    "evictions_fallback",
    "invalid_candidates",
    "refault_activations",
    "writebacks",
    "file_removed_folios",
];

/// Op kinds with their own hit ratio, in column order.
pub const RATIO_OPS: [Op; 4] = [Op::Get, Op::Scan, Op::Read, Op::Write];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub accesses: u64,
    pub hits: u64,
}

impl OpCounts {
    pub fn hit_ratio(&self) -> Option<f64> {
        (self.accesses > 0).then(|| self.hits as f64 / self.accesses as f64)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CgroupMetrics {
    pub label: String,
    pub policy: String,
    pub cgroup: CgroupId,
    pub accesses: u64,
    pub hits: u64,
    pub misses: u64,
    pub ops: [OpCounts; 4],
    pub evictions_policy: u64,
    pub evictions_fallback: u64,
    pub invalid_candidates: u64,
    pub refault_activations: u64,
    pub writebacks: u64,
    pub file_removed_folios: u64,
    pub policy_faults: u64,
    pub capacity_violations: u64,
}

fn op_slot(op: Op) -> Option<usize> {
    RATIO_OPS.iter().position(|&o| o == op)
}

impl CgroupMetrics {
    pub fn record(&mut self, op: Op, hit: bool) {
        self.accesses += 1;
        if hit {
            self.hits += 1;
        } else {
            self.misses += 1;
        }
        if let Some(i) = op_slot(op) {
            self.ops[i].accesses += 1;
            self.ops[i].hits += u64::from(hit);
        }
    }

    pub fn hit_ratio(&self) -> f64 {
        if self.accesses == 0 {
            0.0
        } else {
            self.hits as f64 / self.accesses as f64
        }
    }

    pub fn op(&self, op: Op) -> OpCounts {
        op_slot(op).map(|i| self.ops[i]).unwrap_or_default()
    }

    pub fn op_hit_ratio(&self, op: Op) -> Option<f64> {
        self.op(op).hit_ratio()
    }

    pub fn total_removals(&self) -> u64 {
        self.evictions_policy + self.evictions_fallback + self.file_removed_folios
    }

    /// Copies eviction-side counters accumulated since `base`.
    pub fn set_cache_stats(&mut self, now: &CgroupStats, base: &CgroupStats) {
        self.evictions_policy = now.evictions_policy - base.evictions_policy;
        self.evictions_fallback = now.evictions_fallback - base.evictions_fallback;
        self.invalid_candidates = now.invalid_candidates - base.invalid_candidates;
        self.refault_activations = now.refault_activations - base.refault_activations;
        self.writebacks = now.writebacks - base.writebacks;
        self.file_removed_folios = now.file_removed_folios - base.file_removed_folios;
        self.policy_faults = now.policy_faults - base.policy_faults;
    }

    pub fn csv_record(&self) -> Vec<String> {
        let ratio = |r: Option<f64>| r.map(|r| format!("{r:.6}")).unwrap_or_default();
        let mut rec = vec![
            self.label.clone(),
            self.policy.clone(),
            self.cgroup.0.to_string(),
            self.accesses.to_string(),
            self.hits.to_string(),
            self.misses.to_string(),
            format!("{:.6}", self.hit_ratio()),
        ];
        rec.extend(RATIO_OPS.iter().map(|&op| ratio(self.op_hit_ratio(op))));
        rec.extend(
            [
                self.evictions_policy,
                self.evictions_fallback,
                self.invalid_candidates,
                self.refault_activations,
                self.writebacks,
                self.file_removed_folios,
            ]
            .map(|v| v.to_string()),
        );
        rec
    }
}

pub fn write_csv<'a, W: Write>(writer: W, rows: impl IntoIterator<Item = &'a CgroupMetrics>) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_COLUMNS)?;
    for row in rows {
        w.write_record(row.csv_record())?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_and_ratios() {
        let mut m = CgroupMetrics::default();
        m.record(Op::Get, true);
        m.record(Op::Get, false);
        m.record(Op::Scan, false);
        assert_eq!((m.accesses, m.hits, m.misses), (3, 1, 2));
        assert_eq!(m.op_hit_ratio(Op::Get), Some(0.5));
        assert_eq!(m.op_hit_ratio(Op::Scan), Some(0.0));
        assert_eq!(m.op_hit_ratio(Op::Write), None);
    }

    #[test]
    fn csv_shape() {
        let mut m = CgroupMetrics {
            label: "x".into(),
            policy: "lfu".into(),
            ..Default::default()
        };
        m.record(Op::Read, true);
        assert_eq!(m.csv_record().len(), CSV_COLUMNS.len());
        let mut out = Vec::new();
        write_csv(&mut out, [&m]).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            format!("{}\nx,lfu,0,1,1,0,1.000000,,,1.000000,,0,0,0,0,0,0\n", CSV_COLUMNS.join(","))
        );
    }
}
