//! The six eviction policies, each written purely against the policy API.

mod fifo;
mod getscan;
pub mod lfu;
pub mod lhd;
mod mru;
pub mod s3fifo;

#[cfg(test)]
pub(crate) mod testing;

pub use fifo::Fifo;
pub use getscan::GetScan;
pub use lfu::{FreqMap, Lfu};
pub use lhd::Lhd;
pub use mru::{Mru, DEFAULT_MRU_SKIP};
pub use s3fifo::S3Fifo;
