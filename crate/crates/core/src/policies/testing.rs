//! Drives a single policy the way the cache would, without a cache.

use crate::api::{CgroupInfo, EvictionContext, EvictionLists, ListId, Policy, RemovalReason};
use crate::types::{CgroupId, FileId, FolioId, FolioView, ThreadId};

pub(crate) struct Harness<P: Policy> {
    policy: P,
    pub lists: EvictionLists,
    next: u64,
    views: rustc_hash::FxHashMap<FolioId, FolioView>,
}

impl<P: Policy> Harness<P> {
    pub fn new(policy: P) -> Self {
        Self::with_limit(policy, 1024)
    }

    pub fn with_limit(mut policy: P, limit_pages: u64) -> Self {
        let mut lists = EvictionLists::new(CgroupId(0));
        policy
            .policy_init(&mut lists, CgroupInfo { id: CgroupId(0), limit_pages })
            .unwrap();
        Self {
            policy,
            lists,
            next: 1,
            views: Default::default(),
        }
    }

    pub fn policy(&self) -> &P {
        &self.policy
    }

    pub fn policy_mut(&mut self) -> &mut P {
        &mut self.policy
    }

    pub fn add(&mut self) -> FolioId {
        let n = self.next;
        self.add_page(FileId(0), n, ThreadId(0))
    }

    pub fn add_page(&mut self, file: FileId, offset: u64, thread: ThreadId) -> FolioId {
        let id = FolioId(self.next);
        self.next += 1;
        let view = FolioView {
            id,
            file,
            offset,
            owner: CgroupId(0),
            dirty: false,
            thread,
        };
        self.lists.register_folio(id);
        self.policy.folio_added(&mut self.lists, &view);
        self.views.insert(id, view);
        id
    }

    pub fn access(&mut self, id: FolioId) {
        let view = self.views[&id];
        self.policy.folio_accessed(&mut self.lists, &view);
    }

    /// Asks for `n` candidates; nothing is removed.
    pub fn evict(&mut self, n: usize) -> Vec<FolioId> {
        let mut ctx = EvictionContext::new(n);
        self.policy.evict_folios(&mut self.lists, &mut ctx);
        ctx.candidates().to_vec()
    }

    /// Evicts `id` the way the cache does: detach, then notify.
    pub fn remove(&mut self, id: FolioId) {
        self.remove_for(id, RemovalReason::Evicted);
    }

    pub fn remove_for(&mut self, id: FolioId, reason: RemovalReason) {
        let view = self.views.remove(&id).expect("removing unknown folio");
        self.lists.unregister_folio(id);
        self.policy.folio_removed(&view, reason);
    }

    /// Folios on the `idx`-th list the policy created, head first.
    pub fn list_order(&self, idx: u64) -> Vec<FolioId> {
        self.lists.list_folios(ListId(idx + 1)).unwrap()
    }
}
