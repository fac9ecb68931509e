use super::{Op, TraceEvent};
use crate::types::{CgroupId, FileId, ThreadId, PAGE_SIZE};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FileSearchConfig {
    pub files: u64,
    pub file_pages: u64,
    pub passes: u64,
    pub threads: u64,
    pub cgroup: CgroupId,
    pub file_base: u64,
}

impl Default for FileSearchConfig {
    fn default() -> Self {
        Self {
            files: 100,
            file_pages: 64,
            passes: 10,
            threads: 4,
            cgroup: CgroupId(0),
            file_base: 0,
        }
    }
}

impl FileSearchConfig {
    pub fn corpus_pages(&self) -> u64 {
        self.files * self.file_pages
    }

    pub fn event_count(&self) -> u64 {
        self.corpus_pages() * self.passes
    }
}

/// Repeated sequential search over a corpus: every pass reads every page of
/// every file, files in a fixed order, one page per event.
pub struct FileSearch {
    cfg: FileSearchConfig,
    seq: u64,
}

pub fn gen_filesearch(cfg: FileSearchConfig) -> FileSearch {
    FileSearch { cfg, seq: 0 }
}

impl Iterator for FileSearch {
    type Item = TraceEvent;

    fn next(&mut self) -> Option<TraceEvent> {
        let corpus = self.cfg.corpus_pages();
        if corpus == 0 || self.seq >= self.cfg.event_count() {
            return None;
        }
        let in_pass = self.seq % corpus;
        let file = in_pass / self.cfg.file_pages;
        let page = in_pass % self.cfg.file_pages;
        let ev = TraceEvent {
            seq: self.seq,
            op: Op::Read,
            cgroup: self.cfg.cgroup,
            file: FileId(self.cfg.file_base + file),
            offset_bytes: page * PAGE_SIZE,
            len_bytes: PAGE_SIZE,
            thread: ThreadId(file % self.cfg.threads.max(1)),
        };
        self.seq += 1;
        Some(ev)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.cfg.event_count() - self.seq).unwrap_or(usize::MAX);
        (n, Some(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_offset_order() {
        let evs: Vec<_> = gen_filesearch(FileSearchConfig {
            files: 2,
            file_pages: 2,
            passes: 1,
            threads: 2,
            ..FileSearchConfig::default()
        })
        .collect();
        let got: Vec<_> = evs.iter().map(|e| (e.file.0, e.offset_bytes / PAGE_SIZE, e.thread.0)).collect();
        assert_eq!(got, vec![(0, 0, 0), (0, 1, 0), (1, 0, 1), (1, 1, 1)]);
        assert!(evs.iter().all(|e| e.op == Op::Read && e.len_bytes == PAGE_SIZE));
    }

    #[test]
    fn passes_repeat_corpus() {
        let cfg = FileSearchConfig {
            files: 3,
            file_pages: 5,
            passes: 4,
            ..FileSearchConfig::default()
        };
        let evs: Vec<_> = gen_filesearch(cfg.clone()).collect();
        assert_eq!(evs.len() as u64, cfg.event_count());
        assert_eq!(evs[..15].iter().map(|e| (e.file, e.offset_bytes)).collect::<Vec<_>>(),
                   evs[45..].iter().map(|e| (e.file, e.offset_bytes)).collect::<Vec<_>>());
        assert_eq!(evs.last().unwrap().seq, 59);
    }
}
