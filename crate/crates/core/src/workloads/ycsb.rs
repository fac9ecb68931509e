use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use super::{Op, TraceEvent};
use crate::types::{CgroupId, FileId, ThreadId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum YcsbVariant {
    /// 50% reads, 50% updates, Zipfian keys.
    A,
    /// Reads only, Zipfian keys.
    C,
    /// Reads only, uniform keys.
    Uniform,
    /// 50% reads, 50% updates, uniform keys.
    UniformRW,
}

impl YcsbVariant {
    fn write_fraction(self) -> f64 {
        match self {
            YcsbVariant::A | YcsbVariant::UniformRW => 0.5,
            YcsbVariant::C | YcsbVariant::Uniform => 0.0,
        }
    }

    fn zipfian(self) -> bool {
        matches!(self, YcsbVariant::A | YcsbVariant::C)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct YcsbConfig {
    pub variant: YcsbVariant,
    pub keyspace: u64,
    pub value_size: u64,
    pub keys_per_file: u64,
    pub theta: f64,
    pub count: u64,
    pub threads: u64,
    pub cgroup: CgroupId,
    pub file_base: u64,
    pub seed: u64,
}

impl Default for YcsbConfig {
    fn default() -> Self {
        Self {
            variant: YcsbVariant::C,
            keyspace: 100_000,
            value_size: 1024,
            keys_per_file: 1 << 16,
            theta: 0.99,
            count: 100_000,
            threads: 1,
            cgroup: CgroupId(0),
            file_base: 0,
            seed: 0,
        }
    }
}

impl YcsbConfig {
    /// Distinct 4 KiB pages the keyspace spans.
    pub fn footprint_pages(&self) -> u64 {
        let kpf = self.keys_per_file.max(1);
        let full = self.keyspace / kpf;
        let rest = self.keyspace % kpf;
        full * (kpf * self.value_size).div_ceil(4096) + (rest * self.value_size).div_ceil(4096)
    }
}

/// YCSB-style point requests. Key `k` lives in file `k / keys_per_file` at
/// byte offset `(k % keys_per_file) * value_size`.
pub struct Ycsb {
    cfg: YcsbConfig,
    rng: ChaCha8Rng,
    zipf: Option<Zipf<f64>>,
    seq: u64,
}

pub fn gen_ycsb(cfg: YcsbConfig) -> Ycsb {
    assert!(cfg.keyspace >= 1, "keyspace must be at least 1");
    let zipf = cfg
        .variant
        .zipfian()
        .then(|| Zipf::new(cfg.keyspace as f64, cfg.theta).expect("invalid zipf parameters"));
    Ycsb {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        zipf,
        seq: 0,
        cfg,
    }
}

impl Ycsb {
    pub fn config(&self) -> &YcsbConfig {
        &self.cfg
    }

    /// Next key, 0-based; key 0 is the most popular under Zipf.
    pub fn next_key(&mut self) -> u64 {
        match &self.zipf {
            Some(z) => (z.sample(&mut self.rng) as u64).clamp(1, self.cfg.keyspace) - 1,
            None => self.rng.random_range(0..self.cfg.keyspace),
        }
    }
}

impl Iterator for Ycsb {
    type Item = TraceEvent;

    fn next(&mut self) -> Option<TraceEvent> {
        if self.seq >= self.cfg.count {
            return None;
        }
        let key = self.next_key();
        let write = self.rng.random_bool(self.cfg.variant.write_fraction());
        let kpf = self.cfg.keys_per_file.max(1);
        let ev = TraceEvent {
            seq: self.seq,
            op: if write { Op::Write } else { Op::Read },
            cgroup: self.cfg.cgroup,
            file: FileId(self.cfg.file_base + key / kpf),
            offset_bytes: (key % kpf) * self.cfg.value_size,
            len_bytes: self.cfg.value_size,
            thread: ThreadId(self.seq % self.cfg.threads.max(1)),
        };
        self.seq += 1;
        Some(ev)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.cfg.count - self.seq).unwrap_or(usize::MAX);
        (n, Some(n))
    }
}
