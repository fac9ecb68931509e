//! Trace-driven page-cache simulator with pluggable, per-cgroup eviction
//! policies.
//!
//! [`cache::PageCache`] plays the kernel: it owns folios, runs the default
//! two-list policy, and drives eviction through any attached
//! [`api::Policy`]. [`policies`] holds FIFO, MRU, LFU, S3-FIFO, LHD and
//! GET-SCAN. [`workloads`] generates and parses event streams and
//! [`harness`] replays them into metrics and CSV reports.

pub mod api;
pub mod bounded;
pub mod cache;
pub mod harness;
mod linked;
pub mod policies;
pub mod types;
pub mod workloads;

pub use api::{
    CgroupInfo, Disposition, EvictionContext, EvictionLists, IterMode, IterOptions, IterVerdict, ListId,
    Policy, PolicyError, RemovalReason,
};
pub use cache::{CacheError, CgroupStats, PageCache};
pub use types::{AccessOutcome, CgroupId, FileId, Folio, FolioId, FolioView, ThreadId, PAGE_SIZE};
