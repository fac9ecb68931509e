use crate::api::{EvictionLists, Policy};
use crate::bounded::BoundedMap;
use crate::linked::LinkedLists;
use crate::types::{CgroupId, FileId, FolioId};

pub(super) const INACTIVE: u64 = 0;
pub(super) const ACTIVE: u64 = 1;

/// Where a missed page is inserted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InsertTarget {
    InactiveTail,
    ActiveTail,
}

/// Per-cgroup event counters kept by the cache.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CgroupStats {
    pub insertions: u64,
    /// Evictions of candidates proposed by the attached policy.
    pub evictions_policy: u64,
    /// Evictions performed by the built-in two-list path. With no policy
    /// attached this is every eviction.
    pub evictions_fallback: u64,
    /// Eviction rounds in which an attached policy under-delivered.
    pub fallback_rounds: u64,
    pub invalid_candidates: u64,
    pub refault_activations: u64,
    pub writebacks: u64,
    pub file_removed_folios: u64,
    pub promotions: u64,
    pub demotions: u64,
    /// Hook invocations that panicked.
    pub policy_faults: u64,
}

impl CgroupStats {
    pub fn evictions(&self) -> u64 {
        self.evictions_policy + self.evictions_fallback
    }
}

/// One simulated memory cgroup: its limit, its default active/inactive
/// lists, shadow entries for refault detection, and an optional policy.
pub struct CgroupSim {
    pub(super) id: CgroupId,
    pub(super) limit_pages: u64,
    pub(super) resident_pages: u64,
    pub(super) lru: LinkedLists,
    pub(super) shadow: BoundedMap<(FileId, u64), u64>,
    pub(super) eviction_epoch: u64,
    pub(super) policy: Option<Box<dyn Policy>>,
    pub(super) lists: EvictionLists,
    pub(super) stats: CgroupStats,
}

impl CgroupSim {
    pub(super) fn new(id: CgroupId, limit_pages: u64) -> Self {
        let mut lru = LinkedLists::default();
        lru.create(INACTIVE);
        lru.create(ACTIVE);
        Self {
            id,
            limit_pages,
            resident_pages: 0,
            lru,
            shadow: BoundedMap::new(usize::try_from(limit_pages).unwrap_or(usize::MAX)),
            eviction_epoch: 0,
            policy: None,
            lists: EvictionLists::new(id),
            stats: CgroupStats::default(),
        }
    }

    pub fn id(&self) -> CgroupId {
        self.id
    }

    pub fn limit_pages(&self) -> u64 {
        self.limit_pages
    }

    pub fn resident_pages(&self) -> u64 {
        self.resident_pages
    }

    pub fn eviction_epoch(&self) -> u64 {
        self.eviction_epoch
    }

    pub fn stats(&self) -> &CgroupStats {
        &self.stats
    }

    pub fn active_len(&self) -> usize {
        self.lru.len(ACTIVE)
    }

    pub fn inactive_len(&self) -> usize {
        self.lru.len(INACTIVE)
    }

    /// Active list, head first.
    pub fn active_folios(&self) -> Vec<FolioId> {
        self.lru.iter(ACTIVE).collect()
    }

    /// Inactive list, head first.
    pub fn inactive_folios(&self) -> Vec<FolioId> {
        self.lru.iter(INACTIVE).collect()
    }

    pub fn shadow_len(&self) -> usize {
        self.shadow.len()
    }

    pub fn has_shadow(&self, file: FileId, offset: u64) -> bool {
        self.shadow.contains(&(file, offset))
    }

    pub fn lists(&self) -> &EvictionLists {
        &self.lists
    }

    pub fn policy(&self) -> Option<&dyn Policy> {
        self.policy.as_deref()
    }

    pub fn policy_name(&self) -> &str {
        self.policy.as_ref().map_or("default", |p| p.name())
    }

    /// Decides where a missed page goes. A shadow entry whose refault
    /// distance (evictions since it was written) is at most the cgroup's
    /// resident size sends the page straight to the active list. The shadow
    /// entry is consumed either way.
    pub fn refault_check(&mut self, file: FileId, offset: u64) -> InsertTarget {
        match self.shadow.remove(&(file, offset)) {
            Some(evicted_at) if self.eviction_epoch - evicted_at <= self.resident_pages => {
                InsertTarget::ActiveTail
            }
            _ => InsertTarget::InactiveTail,
        }
    }

    pub(super) fn record_shadow(&mut self, file: FileId, offset: u64) {
        self.shadow.insert((file, offset), self.eviction_epoch);
        self.eviction_epoch += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cg_at(epoch: u64, resident: u64) -> CgroupSim {
        let mut cg = CgroupSim::new(CgroupId(0), 1000);
        cg.eviction_epoch = epoch;
        cg.resident_pages = resident;
        cg
    }

    #[test]
    fn no_shadow_goes_inactive() {
        let mut cg = cg_at(0, 0);
        assert_eq!(cg.refault_check(FileId(1), 0), InsertTarget::InactiveTail);
    }

    // Replays the epoch counter: evict at 100, then let 50 (or 200) more
    // evictions pass before the refault.
    fn refault_after(gap: u64, resident: u64) -> (InsertTarget, bool) {
        let mut cg = cg_at(100, resident);
        cg.record_shadow(FileId(1), 7);
        for i in 0..gap - 1 {
            cg.record_shadow(FileId(2), i);
        }
        assert_eq!(cg.eviction_epoch, 100 + gap);
        let t = cg.refault_check(FileId(1), 7);
        (t, cg.has_shadow(FileId(1), 7))
    }

    #[test]
    fn short_refault_distance_activates() {
        assert_eq!(refault_after(50, 100), (InsertTarget::ActiveTail, false));
    }

    #[test]
    fn long_refault_distance_stays_inactive() {
        assert_eq!(refault_after(200, 100), (InsertTarget::InactiveTail, false));
    }

    #[test]
    fn distance_equal_to_resident_activates() {
        assert_eq!(refault_after(100, 100), (InsertTarget::ActiveTail, false));
    }

    #[test]
    fn shadow_table_bounded_by_limit() {
        let mut cg = CgroupSim::new(CgroupId(0), 4);
        for i in 0..10 {
            cg.record_shadow(FileId(0), i);
        }
        assert_eq!(cg.shadow_len(), 4);
        assert!(!cg.has_shadow(FileId(0), 5));
        assert!(cg.has_shadow(FileId(0), 6));
    }
}
