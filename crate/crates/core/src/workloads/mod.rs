//! Deterministic workload generators and the trace CSV format.

mod filesearch;
mod getscan;
mod trace;
mod ycsb;

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use crate::types::{page_of, CgroupId, FileId, ThreadId};

pub use filesearch::{gen_filesearch, FileSearch, FileSearchConfig};
pub use getscan::{gen_getscan, GetScanConfig, GetScanWorkload, SCAN_FILE_BASE};
pub use trace::{parse_trace, read_trace, write_trace, TraceError, TraceReader};
pub use ycsb::{gen_ycsb, Ycsb, YcsbConfig, YcsbVariant};

/// Request kind. `Get`, `Scan` and `Read` are all reads; they differ only in
/// how metrics are bucketed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Get,
    Scan,
    Read,
    Write,
    DeleteFile,
}

impl Op {
    pub const ALL: [Op; 5] = [Op::Get, Op::Scan, Op::Read, Op::Write, Op::DeleteFile];

    pub fn as_str(self) -> &'static str {
        match self {
            Op::Get => "get",
            Op::Scan => "scan",
            Op::Read => "read",
            Op::Write => "write",
            Op::DeleteFile => "delete",
        }
    }

    pub fn is_write(self) -> bool {
        self == Op::Write
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownOp(pub String);

impl fmt::Display for UnknownOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown op {:?}", self.0)
    }
}

impl std::error::Error for UnknownOp {}

impl FromStr for Op {
    type Err = UnknownOp;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Op::ALL
            .into_iter()
            .find(|op| op.as_str() == s)
            .ok_or_else(|| UnknownOp(s.to_string()))
    }
}

/// One I/O request.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub seq: u64,
    pub op: Op,
    pub cgroup: CgroupId,
    pub file: FileId,
    pub offset_bytes: u64,
    pub len_bytes: u64,
    pub thread: ThreadId,
}

impl TraceEvent {
    /// Pages touched, `floor(offset / 4096)..=floor((offset + len - 1) / 4096)`.
    /// `None` for deletes and zero-length requests.
    pub fn pages(&self) -> Option<RangeInclusive<u64>> {
        if self.op == Op::DeleteFile || self.len_bytes == 0 {
            return None;
        }
        let last = self.offset_bytes.saturating_add(self.len_bytes - 1);
        Some(page_of(self.offset_bytes)..=page_of(last))
    }

    pub fn page_count(&self) -> u64 {
        self.pages().map_or(0, |r| r.end() - r.start() + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(op: Op, off: u64, len: u64) -> TraceEvent {
        TraceEvent {
            seq: 0,
            op,
            cgroup: CgroupId(0),
            file: FileId(1),
            offset_bytes: off,
            len_bytes: len,
            thread: ThreadId(0),
        }
    }

    #[test]
    fn page_ranges() {
        assert_eq!(ev(Op::Read, 8192, 4096).pages(), Some(2..=2));
        assert_eq!(ev(Op::Read, 4095, 2).pages(), Some(0..=1));
        assert_eq!(ev(Op::Read, 0, 3 * 4096 + 1).page_count(), 4);
        assert_eq!(ev(Op::Read, 0, 0).pages(), None);
        assert_eq!(ev(Op::DeleteFile, 0, 4096).pages(), None);
    }

    #[test]
    fn op_round_trip() {
        for op in Op::ALL {
            assert_eq!(op.as_str().parse::<Op>().unwrap(), op);
        }
        assert!("GET".parse::<Op>().is_err());
    }
}
