//! Trace CSV: header `seq,op,file,offset,len,thread,cgroup`, one event per
//! line, base-10 integers, op one of get/scan/read/write/delete.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{Op, TraceEvent};
use crate::types::{CgroupId, FileId, ThreadId};

pub const HEADER: [&str; 7] = ["seq", "op", "file", "offset", "len", "thread", "cgroup"];

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("cannot open trace: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Csv { line: u64, source: csv::Error },
    #[error("line {line}: expected {expected} fields, found {found}")]
    FieldCount { line: u64, expected: usize, found: usize },
    #[error("line {line}: field {field}: invalid value {value:?}")]
    Field {
        line: u64,
        field: &'static str,
        value: String,
    },
    #[error("line {line}: field op: unknown op {op:?}")]
    UnknownOp { line: u64, op: String },
    #[error("line {line}: field len_bytes: access with zero length")]
    ZeroLength { line: u64 },
    #[error("trace write failed: {0}")]
    Write(csv::Error),
}

/// Streaming reader over a trace; yields one event per data line.
pub struct TraceReader<R: Read> {
    inner: csv::Reader<R>,
    record: csv::StringRecord,
}

pub fn parse_trace(path: impl AsRef<Path>) -> Result<TraceReader<File>, TraceError> {
    Ok(read_trace(File::open(path)?))
}

pub fn read_trace<R: Read>(reader: R) -> TraceReader<R> {
    let inner = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    TraceReader {
        inner,
        record: csv::StringRecord::new(),
    }
}

fn num(rec: &csv::StringRecord, idx: usize, field: &'static str, line: u64) -> Result<u64, TraceError> {
    let raw = rec.get(idx).unwrap_or("");
    raw.parse().map_err(|_| TraceError::Field {
        line,
        field,
        value: raw.to_string(),
    })
}

fn decode(rec: &csv::StringRecord, line: u64) -> Result<TraceEvent, TraceError> {
    if rec.len() != HEADER.len() {
        return Err(TraceError::FieldCount {
            line,
            expected: HEADER.len(),
            found: rec.len(),
        });
    }
    let op_raw = rec.get(1).unwrap_or("");
    let op: Op = op_raw.parse().map_err(|_| TraceError::UnknownOp {
        line,
        op: op_raw.to_string(),
    })?;
    let seq = num(rec, 0, "seq", line)?;
    let file = num(rec, 2, "file", line)?;
    let (offset_bytes, len_bytes) = if op == Op::DeleteFile {
        (0, 0)
    } else {
        (num(rec, 3, "offset_bytes", line)?, num(rec, 4, "len_bytes", line)?)
    };
    if op != Op::DeleteFile && len_bytes == 0 {
        return Err(TraceError::ZeroLength { line });
    }
    Ok(TraceEvent {
        seq,
        op,
        file: FileId(file),
        offset_bytes,
        len_bytes,
        thread: ThreadId(num(rec, 5, "thread", line)?),
        cgroup: CgroupId(num(rec, 6, "cgroup", line)?),
    })
}

impl<R: Read> Iterator for TraceReader<R> {
    type Item = Result<TraceEvent, TraceError>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.inner.read_record(&mut self.record) {
            Ok(false) => None,
            Ok(true) => {
                let line = self.record.position().map_or(0, |p| p.line());
                Some(decode(&self.record, line))
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                Some(Err(TraceError::Csv { line, source: e }))
            }
        }
    }
}

/// Writes events in trace CSV form, header included.
pub fn write_trace<W: Write>(writer: W, events: impl IntoIterator<Item = TraceEvent>) -> Result<(), TraceError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER).map_err(TraceError::Write)?;
    for e in events {
        w.write_record([
            e.seq.to_string().as_str(),
            e.op.as_str(),
            &e.file.0.to_string(),
            &e.offset_bytes.to_string(),
            &e.len_bytes.to_string(),
            &e.thread.0.to_string(),
            &e.cgroup.0.to_string(),
        ])
        .map_err(TraceError::Write)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workloads::{gen_ycsb, YcsbConfig, YcsbVariant};

    fn parse(text: &str) -> Vec<Result<TraceEvent, TraceError>> {
        read_trace(text.as_bytes()).collect()
    }

    #[test]
    fn get_line_maps_fields() {
        let evs = parse("seq,op,file,offset,len,thread,cgroup\n1,get,7,8192,4096,3,0\n");
        let e = evs[0].as_ref().unwrap();
        assert_eq!(e.op, Op::Get);
        assert_eq!(e.file, FileId(7));
        assert_eq!(e.pages(), Some(2..=2));
        assert_eq!(e.thread, ThreadId(3));
        assert_eq!(e.cgroup, CgroupId(0));
    }

    #[test]
    fn header_only_is_empty() {
        assert!(parse("seq,op,file,offset,len,thread,cgroup\n").is_empty());
    }

    #[test]
    fn bad_number_names_line_and_field() {
        let evs = parse("seq,op,file,offset,len,thread,cgroup\n1,get,7,notanumber,4096,3,0\n");
        match &evs[0] {
            Err(TraceError::Field { line, field, value }) => {
                assert_eq!((*line, *field, value.as_str()), (2, "offset_bytes", "notanumber"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let msg = evs[0].as_ref().unwrap_err().to_string();
        assert!(msg.contains("line 2") && msg.contains("offset_bytes"), "{msg}");
    }

    #[test]
    fn unknown_op_rejected() {
        let evs = parse("seq,op,file,offset,len,thread,cgroup\n1,get,1,0,1,0,0\n2,fetch,1,0,1,0,0\n");
        assert!(evs[0].is_ok());
        assert!(matches!(&evs[1], Err(TraceError::UnknownOp { line: 3, op }) if op == "fetch"));
    }

    #[test]
    fn delete_ignores_offset_and_len() {
        let evs = parse("seq,op,file,offset,len,thread,cgroup\n4,delete,9,x,y,0,1\n");
        let e = evs[0].as_ref().unwrap();
        assert_eq!((e.op, e.file, e.cgroup), (Op::DeleteFile, FileId(9), CgroupId(1)));
    }

    #[test]
    fn short_line_and_zero_length_rejected() {
        let evs = parse("seq,op,file,offset,len,thread,cgroup\n1,get,7\n2,read,1,0,0,0,0\n");
        assert!(matches!(evs[0], Err(TraceError::FieldCount { line: 2, found: 3, .. })));
        assert!(matches!(evs[1], Err(TraceError::ZeroLength { line: 3 })));
    }

    #[test]
    fn write_then_parse_round_trips() {
        let evs: Vec<_> = gen_ycsb(YcsbConfig {
            variant: YcsbVariant::A,
            count: 500,
            seed: 9,
            ..YcsbConfig::default()
        })
        .collect();
        let mut buf = Vec::new();
        write_trace(&mut buf, evs.iter().copied()).unwrap();
        assert!(buf.starts_with(b"seq,op,file,offset,len,thread,cgroup\n"));
        let back: Vec<_> = read_trace(buf.as_slice()).map(Result::unwrap).collect();
        assert_eq!(back, evs);
    }

    #[test]
    fn parse_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "seq,op,file,offset,len,thread,cgroup\n0,scan,2,0,16384,1,0\n").unwrap();
        let evs: Vec<_> = parse_trace(&path).unwrap().map(Result::unwrap).collect();
        assert_eq!(evs[0].page_count(), 4);
        assert!(parse_trace(dir.path().join("missing.csv")).is_err());
    }
}
