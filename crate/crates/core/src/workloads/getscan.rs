use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use super::{Op, TraceEvent};
use crate::types::{CgroupId, FileId, ThreadId, PAGE_SIZE};

/// First file id of the scanned region, far above any GET key file.
pub const SCAN_FILE_BASE: u64 = 1 << 32;

const GET_KEYS_PER_FILE: u64 = 1 << 16;

#[derive(Clone, Debug, PartialEq)]
pub struct GetScanConfig {
    pub scan_fraction: f64,
    pub scan_len_pages: u64,
    pub scan_region_pages: u64,
    pub get_keyspace: u64,
    pub value_size: u64,
    pub theta: f64,
    pub count: u64,
    pub get_threads: u64,
    pub scan_threads: u64,
    pub cgroup: CgroupId,
    pub seed: u64,
}

impl Default for GetScanConfig {
    fn default() -> Self {
        Self {
            scan_fraction: 0.0005,
            scan_len_pages: 4096,
            scan_region_pages: 8192,
            get_keyspace: 100_000,
            value_size: 1024,
            theta: 0.99,
            count: 100_000,
            get_threads: 4,
            scan_threads: 1,
            cgroup: CgroupId(0),
            seed: 0,
        }
    }
}

impl GetScanConfig {
    pub fn scan_count(&self) -> u64 {
        (self.count as f64 * self.scan_fraction).round() as u64
    }

    /// Thread ids used for scans; they follow the GET thread ids.
    pub fn scan_thread_ids(&self) -> Vec<ThreadId> {
        (0..self.scan_threads.max(1))
            .map(|i| ThreadId(self.get_threads.max(1) + i))
            .collect()
    }

    pub fn get_footprint_pages(&self) -> u64 {
        (self.get_keyspace * self.value_size).div_ceil(PAGE_SIZE)
    }
}

/// Zipfian GETs with rare, long sequential SCANs over a cold region. Scans
/// sit at evenly spaced positions in the stream and start where the previous
/// one ended, wrapping around the region.
pub struct GetScanWorkload {
    cfg: GetScanConfig,
    rng: ChaCha8Rng,
    zipf: Zipf<f64>,
    seq: u64,
    scans_done: u64,
    scan_slots: u64,
}

pub fn gen_getscan(cfg: GetScanConfig) -> GetScanWorkload {
    assert!((0.0..=1.0).contains(&cfg.scan_fraction), "scan_fraction outside 0..=1");
    assert!(cfg.scan_len_pages >= 1 && cfg.get_keyspace >= 1);
    let zipf = Zipf::new(cfg.get_keyspace as f64, cfg.theta).expect("invalid zipf parameters");
    let scan_slots = (cfg.scan_region_pages / cfg.scan_len_pages).max(1);
    GetScanWorkload {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        zipf,
        seq: 0,
        scans_done: 0,
        scan_slots,
        cfg,
    }
}

impl GetScanWorkload {
    pub fn config(&self) -> &GetScanConfig {
        &self.cfg
    }

    /// Position of the `i`-th scan: the middle of its equal share of the stream.
    fn scan_position(&self, i: u64) -> u64 {
        let n = self.cfg.scan_count();
        ((2 * i + 1) as u128 * self.cfg.count as u128 / (2 * n) as u128) as u64
    }
}

impl Iterator for GetScanWorkload {
    type Item = TraceEvent;

    fn next(&mut self) -> Option<TraceEvent> {
        if self.seq >= self.cfg.count {
            return None;
        }
        let seq = self.seq;
        self.seq += 1;
        let is_scan = self.scans_done < self.cfg.scan_count() && self.scan_position(self.scans_done) == seq;
        if is_scan {
            let i = self.scans_done;
            self.scans_done += 1;
            let start = (i % self.scan_slots) * self.cfg.scan_len_pages;
            let threads = self.cfg.scan_thread_ids();
            return Some(TraceEvent {
                seq,
                op: Op::Scan,
                cgroup: self.cfg.cgroup,
                file: FileId(SCAN_FILE_BASE),
                offset_bytes: start * PAGE_SIZE,
                len_bytes: self.cfg.scan_len_pages * PAGE_SIZE,
                thread: threads[(i % threads.len() as u64) as usize],
            });
        }
        let key = (self.zipf.sample(&mut self.rng) as u64).clamp(1, self.cfg.get_keyspace) - 1;
        let kpf = GET_KEYS_PER_FILE;
        Some(TraceEvent {
            seq,
            op: Op::Get,
            cgroup: self.cfg.cgroup,
            file: FileId(key / kpf),
            offset_bytes: (key % kpf) * self.cfg.value_size,
            len_bytes: self.cfg.value_size,
            thread: ThreadId(seq % self.cfg.get_threads.max(1)),
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.cfg.count - self.seq).unwrap_or(usize::MAX);
        (n, Some(n))
    }
}
