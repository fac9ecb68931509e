//! Application-informed policy for mixed point-lookup and scan workloads.
//! Folios inserted by scan threads go to their own list, which is drained
//! first; each list runs approximate LFU.

use rustc_hash::FxHashSet;

use crate::api::{
    CgroupInfo, EvictionContext, EvictionLists, IterOptions, ListId, Policy, PolicyError, RemovalReason,
    DEFAULT_SCAN_LIMIT,
};
use crate::policies::lfu::FreqMap;
use crate::types::{FolioId, FolioView, ThreadId};

#[derive(Debug)]
pub struct GetScan {
    get: Option<ListId>,
    scan: Option<ListId>,
    scan_threads: FxHashSet<ThreadId>,
    freq: FreqMap,
    scan_window: usize,
}

impl GetScan {
    pub fn new(scan_threads: impl IntoIterator<Item = ThreadId>) -> Self {
        Self::with_window(scan_threads, DEFAULT_SCAN_LIMIT)
    }

    pub fn with_window(scan_threads: impl IntoIterator<Item = ThreadId>, scan_window: usize) -> Self {
        Self {
            get: None,
            scan: None,
            scan_threads: scan_threads.into_iter().collect(),
            freq: FreqMap::default(),
            scan_window,
        }
    }

    pub fn get_list(&self) -> Option<ListId> {
        self.get
    }

    pub fn scan_list(&self) -> Option<ListId> {
        self.scan
    }

    pub fn is_scan_thread(&self, thread: ThreadId) -> bool {
        self.scan_threads.contains(&thread)
    }

    pub fn frequency(&self, id: FolioId) -> Option<u64> {
        self.freq.get(id)
    }

    fn lists(&self) -> (ListId, ListId) {
        (
            self.get.expect("getscan used before policy_init"),
            self.scan.expect("getscan used before policy_init"),
        )
    }
}

impl Policy for GetScan {
    fn name(&self) -> &str {
        "getscan"
    }

    fn policy_init(&mut self, lists: &mut EvictionLists, _: CgroupInfo) -> Result<(), PolicyError> {
        self.get = Some(lists.list_create());
        self.scan = Some(lists.list_create());
        Ok(())
    }

    fn evict_folios(&mut self, lists: &mut EvictionLists, ctx: &mut EvictionContext) {
        let (get, scan) = self.lists();
        let freq = &self.freq;
        for list in [scan, get] {
            if ctx.is_full() {
                break;
            }
            let opts = IterOptions::score(self.scan_window.max(ctx.remaining()));
            let _ = lists.list_iterate(list, &opts, ctx, |_, id| freq.score(id));
        }
    }

    fn folio_added(&mut self, lists: &mut EvictionLists, folio: &FolioView) {
        let (get, scan) = self.lists();
        let list = if self.is_scan_thread(folio.thread) { scan } else { get };
        let _ = lists.list_add(list, folio.id, true);
        self.freq.admit(folio.id);
    }

    fn folio_accessed(&mut self, _: &mut EvictionLists, folio: &FolioView) {
        self.freq.bump(folio.id);
    }

    fn folio_removed(&mut self, folio: &FolioView, _: RemovalReason) {
        self.freq.forget(folio.id);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::lfu::Lfu;
    use crate::policies::testing::Harness;
    use crate::types::FileId;

    const SCAN: ThreadId = ThreadId(9);
    const GET: ThreadId = ThreadId(1);

    #[test]
    fn routes_by_inserting_thread() {
        let mut h = Harness::new(GetScan::new([SCAN]));
        let g = h.add_page(FileId(0), 0, GET);
        let s = h.add_page(FileId(0), 1, SCAN);
        assert_eq!(h.list_order(0), vec![g]);
        assert_eq!(h.list_order(1), vec![s]);
    }

    #[test]
    fn scan_list_drains_first() {
        let mut h = Harness::new(GetScan::new([SCAN]));
        let mut scans = Vec::new();
        for i in 0..20 {
            let g = h.add_page(FileId(0), i, GET);
            let s = h.add_page(FileId(1), i, SCAN);
            // Scan folios are hotter; they still go first.
            h.access(s);
            h.access(s);
            let _ = g;
            scans.push(s);
        }
        let mut got = h.evict(10);
        got.sort();
        assert_eq!(got, scans[..10].to_vec());
    }

    #[test]
    fn short_scan_list_tops_up_from_get() {
        let mut h = Harness::new(GetScan::new([SCAN]));
        let gets: Vec<_> = (0..12).map(|i| h.add_page(FileId(0), i, GET)).collect();
        let scans: Vec<_> = (0..3).map(|i| h.add_page(FileId(1), i, SCAN)).collect();
        for &g in &gets[..5] {
            h.access(g);
        }
        let got = h.evict(10);
        assert_eq!(got[..3], scans[..]);
        let mut rest = got[3..].to_vec();
        rest.sort();
        assert_eq!(rest, gets[5..12].to_vec());
    }

    #[test]
    fn without_scan_threads_matches_lfu() {
        let mut a = Harness::new(GetScan::new([]));
        let mut b = Harness::new(Lfu::default());
        for i in 0..50u64 {
            let x = a.add();
            let y = b.add();
            for _ in 0..(i * 7 % 5) {
                a.access(x);
                b.access(y);
            }
        }
        assert_eq!(a.evict(16), b.evict(16));
    }
}
