use rustc_hash::FxHashMap;

use crate::api::{
    CgroupInfo, EvictionContext, EvictionLists, IterOptions, IterVerdict, ListId, Policy, PolicyError,
    RemovalReason, DEFAULT_SCAN_LIMIT,
};
use crate::types::{FolioId, FolioView};

/// Access counts keyed by folio. An entry exists from `folio_added` until
/// `folio_removed`, starting at 1.
#[derive(Debug, Default, Clone)]
pub struct FreqMap(FxHashMap<FolioId, u64>);

impl FreqMap {
    pub fn admit(&mut self, id: FolioId) {
        self.0.insert(id, 1);
    }

    pub fn bump(&mut self, id: FolioId) {
        if let Some(f) = self.0.get_mut(&id) {
            *f += 1;
        }
    }

    pub fn forget(&mut self, id: FolioId) {
        self.0.remove(&id);
    }

    pub fn get(&self, id: FolioId) -> Option<u64> {
        self.0.get(&id).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn score(&self, id: FolioId) -> IterVerdict {
        let f = self.get(id).unwrap_or(0);
        IterVerdict::Score(i64::try_from(f).unwrap_or(i64::MAX))
    }
}

/// Approximate LFU: each round scores the first `scan_window` folios of the
/// list by access count and proposes the least-used ones.
#[derive(Debug)]
pub struct Lfu {
    list: Option<ListId>,
    freq: FreqMap,
    scan_window: usize,
}

impl Default for Lfu {
    fn default() -> Self {
        Self::new(DEFAULT_SCAN_LIMIT)
    }
}

impl Lfu {
    pub fn new(scan_window: usize) -> Self {
        Self {
            list: None,
            freq: FreqMap::default(),
            scan_window,
        }
    }

    pub fn frequency(&self, id: FolioId) -> Option<u64> {
        self.freq.get(id)
    }

    pub fn list_id(&self) -> Option<ListId> {
        self.list
    }

    pub fn scan_window(&self) -> usize {
        self.scan_window
    }
}

impl Policy for Lfu {
    fn name(&self) -> &str {
        "lfu"
    }

    fn policy_init(&mut self, lists: &mut EvictionLists, _: CgroupInfo) -> Result<(), PolicyError> {
        self.list = Some(lists.list_create());
        Ok(())
    }

    fn evict_folios(&mut self, lists: &mut EvictionLists, ctx: &mut EvictionContext) {
        let list = self.list.expect("lfu used before policy_init");
        let freq = &self.freq;
        let _ = lists.list_iterate(list, &IterOptions::score(self.scan_window), ctx, |_, id| freq.score(id));
    }

    fn folio_added(&mut self, lists: &mut EvictionLists, folio: &FolioView) {
        let list = self.list.expect("lfu used before policy_init");
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
