use std::sync::{Arc, Mutex};

use super::*;
use crate::api::{EvictionLists, IterOptions, IterVerdict, ListId};
use crate::types::FolioView;

const CG: CgroupId = CgroupId(0);
const T0: ThreadId = ThreadId(0);

fn cache_with(limit: u64, policy: Option<Box<dyn Policy>>) -> PageCache {
    let mut c = PageCache::new();
    c.add_cgroup(CG, limit, policy).unwrap();
    c.record_evictions();
    c
}

fn read(c: &mut PageCache, file: u64, off: u64) -> AccessOutcome {
    c.access(CG, FileId(file), off, false, T0).unwrap()
}

fn evicted_pages(c: &mut PageCache) -> Vec<(u64, u64)> {
    c.take_eviction_log()
        .into_iter()
        .map(|r| (r.file.0, r.offset))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Call {
    Added(FolioId),
    Accessed(FolioId),
    Removed(FolioId, RemovalReason),
}

/// FIFO over one list that records every hook call, and optionally
/// proposes only a fraction of what is asked.
struct Recorder {
    list: Option<ListId>,
    calls: Arc<Mutex<Vec<Call>>>,
    propose_div: usize,
    bogus: Option<FolioId>,
}

impl Recorder {
    fn new(calls: Arc<Mutex<Vec<Call>>>) -> Self {
        Self {
            list: None,
            calls,
            propose_div: 1,
            bogus: None,
        }
    }
}

impl Policy for Recorder {
    fn name(&self) -> &str {
        "recorder"
    }
    fn policy_init(&mut self, lists: &mut EvictionLists, _: CgroupInfo) -> Result<(), PolicyError> {
        self.list = Some(lists.list_create());
        Ok(())
    }
    fn evict_folios(&mut self, lists: &mut EvictionLists, ctx: &mut EvictionContext) {
        if let Some(b) = self.bogus {
            ctx.propose(b);
        }
        let want = ctx.nr_requested() / self.propose_div;
        let mut n = 0;
        let _ = lists.list_iterate(self.list.unwrap(), &IterOptions::default(), ctx, |_, _| {
            if n < want {
                n += 1;
                IterVerdict::Evict
            } else {
                IterVerdict::Stop
            }
        });
    }
    fn folio_added(&mut self, lists: &mut EvictionLists, f: &FolioView) {
        lists.list_add(self.list.unwrap(), f.id, true).unwrap();
        self.calls.lock().unwrap().push(Call::Added(f.id));
    }
    fn folio_accessed(&mut self, _: &mut EvictionLists, f: &FolioView) {
        self.calls.lock().unwrap().push(Call::Accessed(f.id));
    }
    fn folio_removed(&mut self, f: &FolioView, reason: RemovalReason) {
        self.calls.lock().unwrap().push(Call::Removed(f.id, reason));
    }
}

#[test]
fn cold_start_miss_lands_on_inactive_tail() {
    let mut c = cache_with(8, None);
    assert_eq!(read(&mut c, 1, 0), AccessOutcome::Miss);
    let cg = c.cgroup(CG).unwrap();
    assert_eq!(cg.resident_pages(), 1);
    let id = c.lookup(FileId(1), 0).unwrap();
    assert_eq!(cg.inactive_folios(), vec![id]);
    c.check_invariants().unwrap();
}

#[test]
fn second_access_promotes_to_active() {
    let mut c = cache_with(8, None);
    read(&mut c, 1, 0);
    assert_eq!(read(&mut c, 1, 0), AccessOutcome::Hit);
    let id = c.lookup(FileId(1), 0).unwrap();
    let cg = c.cgroup(CG).unwrap();
    assert_eq!(cg.active_folios(), vec![id]);
    assert!(c.folio(id).unwrap().active);
    assert_eq!(cg.stats().promotions, 1);
}

#[test]
fn cross_cgroup_hit_charges_owner_hooks_only() {
    let calls = Arc::new(Mutex::new(Vec::new()));
    let mut c = PageCache::new();
    c.add_cgroup(CgroupId(1), 4, None).unwrap();
    c.add_cgroup(CgroupId(2), 4, Some(Box::new(Recorder::new(calls.clone()))))
        .unwrap();
    c.access(CgroupId(2), FileId(9), 3, false, T0).unwrap();
    let out = c.access(CgroupId(1), FileId(9), 3, false, T0).unwrap();
    assert_eq!(out, AccessOutcome::Hit);
    assert_eq!(c.cgroup(CgroupId(1)).unwrap().resident_pages(), 0);
    assert_eq!(c.cgroup(CgroupId(2)).unwrap().resident_pages(), 1);
    let id = c.lookup(FileId(9), 3).unwrap();
    assert_eq!(*calls.lock().unwrap(), vec![Call::Added(id), Call::Accessed(id)]);
    assert_eq!(c.folio(id).unwrap().owner, CgroupId(2));
}

#[test]
fn unknown_cgroup_is_an_error() {
    let mut c = cache_with(4, None);
    assert_eq!(
        c.access(CgroupId(7), FileId(0), 0, false, T0),
        Err(CacheError::UnknownCgroup(CgroupId(7)))
    );
}

#[test]
fn write_sets_dirty_and_eviction_counts_writeback() {
    let mut c = cache_with(1, None);
    c.access(CG, FileId(0), 0, true, T0).unwrap();
    assert!(c.folio(c.lookup(FileId(0), 0).unwrap()).unwrap().dirty);
    read(&mut c, 0, 1);
    assert_eq!(c.cgroup(CG).unwrap().stats().writebacks, 1);
}

#[test]
fn default_evict_takes_inactive_head_in_order() {
    let mut c = cache_with(10, None);
    for off in 0..3 {
        read(&mut c, 1, off);
    }
    assert_eq!(c.default_evict(CG, 2), Ok(2));
    assert_eq!(evicted_pages(&mut c), vec![(1, 0), (1, 1)]);
}

#[test]
fn default_evict_skips_pinned() {
    let mut c = cache_with(10, None);
    read(&mut c, 1, 0);
    read(&mut c, 1, 1);
    assert!(c.pin(FileId(1), 0));
    assert_eq!(c.default_evict(CG, 1), Ok(1));
    assert_eq!(evicted_pages(&mut c), vec![(1, 1)]);
    assert!(c.lookup(FileId(1), 0).is_some());
}

#[test]
fn default_evict_demotes_when_inactive_empty() {
    let mut c = cache_with(10, None);
    read(&mut c, 1, 0);
    read(&mut c, 1, 0);
    read(&mut c, 1, 1);
    read(&mut c, 1, 1);
    let cg = c.cgroup(CG).unwrap();
    assert_eq!((cg.active_len(), cg.inactive_len()), (2, 0));
    assert_eq!(c.default_evict(CG, 1), Ok(1));
    assert_eq!(evicted_pages(&mut c), vec![(1, 0)]);
    assert_eq!(c.cgroup(CG).unwrap().stats().demotions, 1);
}

#[test]
fn all_pinned_evicts_nothing() {
    let mut c = cache_with(10, None);
    read(&mut c, 1, 0);
    c.pin(FileId(1), 0);
    assert_eq!(c.default_evict(CG, 1), Ok(0));
}

#[test]
fn capacity_holds_after_every_access() {
    let mut c = cache_with(5, None);
    for i in 0..100 {
        read(&mut c, i % 3, i * 7 % 23);
        assert_eq!(c.capacity_violations(), 0);
        c.check_invariants().unwrap();
    }
}

#[test]
fn refault_within_distance_goes_active() {
    let mut c = cache_with(4, None);
    for off in 0..5 {
        read(&mut c, 0, off);
    }
    // Page 0 was evicted one eviction ago.
    assert!(c.cgroup(CG).unwrap().has_shadow(FileId(0), 0));
    read(&mut c, 0, 0);
    let id = c.lookup(FileId(0), 0).unwrap();
    assert!(c.folio(id).unwrap().active);
    assert_eq!(c.cgroup(CG).unwrap().stats().refault_activations, 1);
}

#[test]
fn faulty_policy_half_proposals_fall_back() {
    let calls = Arc::new(Mutex::new(Vec::new()));
    let mut rec = Recorder::new(calls);
    rec.propose_div = 2;
    let mut c = cache_with(20, Some(Box::new(rec)));
    for off in 0..20 {
        read(&mut c, 0, off);
    }
    c.set_limit(CG, 10).unwrap();
    let s = c.cgroup(CG).unwrap().stats().clone();
    assert_eq!(s.evictions_policy, 5);
    assert_eq!(s.evictions_fallback, 5);
    assert_eq!(s.fallback_rounds, 1);
    assert_eq!(c.cgroup(CG).unwrap().resident_pages(), 10);
    c.check_invariants().unwrap();
}

#[test]
fn unknown_candidate_is_rejected_and_covered() {
    let calls = Arc::new(Mutex::new(Vec::new()));
    let mut rec = Recorder::new(calls);
    rec.bogus = Some(FolioId(999_999));
    rec.propose_div = usize::MAX;
    let mut c = cache_with(2, Some(Box::new(rec)));
    for off in 0..3 {
        read(&mut c, 0, off);
    }
    let s = c.cgroup(CG).unwrap().stats().clone();
    assert_eq!(s.invalid_candidates, 1);
    assert_eq!(s.evictions_fallback, 1);
    assert_eq!(s.evictions_policy, 0);
}

#[test]
fn foreign_and_pinned_candidates_rejected() {
    struct Proposer(Vec<FolioId>);
    impl Policy for Proposer {
        fn name(&self) -> &str {
            "proposer"
        }
        fn policy_init(&mut self, _: &mut EvictionLists, _: CgroupInfo) -> Result<(), PolicyError> {
            Ok(())
        }
        fn evict_folios(&mut self, _: &mut EvictionLists, ctx: &mut EvictionContext) {
            for &f in &self.0 {
                ctx.propose(f);
            }
        }
        fn folio_added(&mut self, _: &mut EvictionLists, _: &FolioView) {}
        fn folio_accessed(&mut self, _: &mut EvictionLists, _: &FolioView) {}
        fn folio_removed(&mut self, _: &FolioView, _: RemovalReason) {}
    }

    let mut c = PageCache::new();
    c.add_cgroup(CgroupId(1), 10, None).unwrap();
    c.access(CgroupId(1), FileId(5), 0, false, T0).unwrap();
    let foreign = c.lookup(FileId(5), 0).unwrap();
    // Folio ids are sequential; the next one allocated is foreign + 1.
    let pinned = FolioId(foreign.0 + 1);
    c.add_cgroup(CgroupId(2), 4, Some(Box::new(Proposer(vec![foreign, pinned]))))
        .unwrap();
    for off in 0..4 {
        c.access(CgroupId(2), FileId(6), off, false, T0).unwrap();
    }
    assert_eq!(c.lookup(FileId(6), 0), Some(pinned));
    c.pin(FileId(6), 0);
    // Shrinking asks for three candidates in one round.
    c.set_limit(CgroupId(2), 1).unwrap();
    let s = c.cgroup(CgroupId(2)).unwrap().stats().clone();
    assert_eq!(s.invalid_candidates, 2);
    assert_eq!(s.evictions_fallback, 3);
    assert!(c.lookup(FileId(5), 0).is_some(), "foreign folio must survive");
    assert!(c.lookup(FileId(6), 0).is_some(), "pinned folio must survive");
    assert_eq!(c.cgroup(CgroupId(2)).unwrap().resident_pages(), 1);
}

#[test]
fn duplicate_candidates_evict_once() {
    struct Twice(Option<ListId>);
    impl Policy for Twice {
        fn name(&self) -> &str {
            "twice"
        }
        fn policy_init(&mut self, lists: &mut EvictionLists, _: CgroupInfo) -> Result<(), PolicyError> {
            self.0 = Some(lists.list_create());
            Ok(())
        }
        fn evict_folios(&mut self, lists: &mut EvictionLists, ctx: &mut EvictionContext) {
            let head = lists.list_folios(self.0.unwrap()).unwrap()[0];
            ctx.propose(head);
            ctx.propose(head);
        }
        fn folio_added(&mut self, lists: &mut EvictionLists, f: &FolioView) {
            lists.list_add(self.0.unwrap(), f.id, true).unwrap();
        }
        fn folio_accessed(&mut self, _: &mut EvictionLists, _: &FolioView) {}
        fn folio_removed(&mut self, _: &FolioView, _: RemovalReason) {}
    }
    let mut c = PageCache::new().with_batch(2).unwrap();
    c.add_cgroup(CG, 4, Some(Box::new(Twice(None)))).unwrap();
    c.record_evictions();
    for off in 0..4 {
        read(&mut c, 0, off);
    }
    c.set_limit(CG, 2).unwrap();
    let s = c.cgroup(CG).unwrap().stats().clone();
    assert_eq!(s.evictions_policy, 1);
    assert_eq!(s.evictions_fallback, 1);
    assert_eq!(s.invalid_candidates, 0);
    c.check_invariants().unwrap();
}

#[test]
fn panicking_policy_round_falls_back() {
    struct Boom;
    impl Policy for Boom {
        fn name(&self) -> &str {
            "boom"
        }
        fn policy_init(&mut self, _: &mut EvictionLists, _: CgroupInfo) -> Result<(), PolicyError> {
            Ok(())
        }
        fn evict_folios(&mut self, _: &mut EvictionLists, _: &mut EvictionContext) {
            panic!("policy bug");
        }
        fn folio_added(&mut self, _: &mut EvictionLists, _: &FolioView) {}
        fn folio_accessed(&mut self, _: &mut EvictionLists, _: &FolioView) {}
        fn folio_removed(&mut self, _: &FolioView, _: RemovalReason) {}
    }
    let mut c = cache_with(2, Some(Box::new(Boom)));
    for off in 0..5 {
        read(&mut c, 0, off);
    }
    let s = c.cgroup(CG).unwrap().stats().clone();
    assert_eq!(s.policy_faults, 3);
    assert_eq!(s.evictions_fallback, 3);
    assert_eq!(c.capacity_violations(), 0);
}

#[test]
fn no_policy_matches_default_evict() {
    let mut a = cache_with(3, None);
    let mut b = cache_with(100, None);
    for off in [0, 1, 0, 2, 3, 1, 4, 5, 0] {
        read(&mut a, 0, off);
        read(&mut b, 0, off);
        let over = b.cgroup(CG).unwrap().resident_pages().saturating_sub(3);
        if over > 0 {
            b.default_evict(CG, over as usize).unwrap();
        }
    }
    assert_eq!(evicted_pages(&mut a), evicted_pages(&mut b));
}

#[test]
fn remove_file_drops_pages_and_fires_hooks() {
    let calls = Arc::new(Mutex::new(Vec::new()));
    let mut c = cache_with(10, Some(Box::new(Recorder::new(calls.clone()))));
    for off in 0..3 {
        read(&mut c, 4, off);
    }
    read(&mut c, 5, 0);
    let list = c.cgroup(CG).unwrap().lists().list_of(c.lookup(FileId(4), 0).unwrap()).unwrap();
    assert_eq!(c.cgroup(CG).unwrap().lists().list_len(list), Ok(4));

    assert_eq!(c.remove_file(CG, FileId(4)), Ok(3));
    let removed = calls
        .lock()
        .unwrap()
        .iter()
        .filter(|c| matches!(c, Call::Removed(_, RemovalReason::FileRemoved)))
        .count();
    assert_eq!(removed, 3);
    let cg = c.cgroup(CG).unwrap();
    assert_eq!(cg.lists().list_len(list), Ok(1));
    assert_eq!(cg.shadow_len(), 0);
    assert_eq!(cg.stats().file_removed_folios, 3);
    assert_eq!(c.remove_file(CG, FileId(4)), Ok(0));
    c.check_invariants().unwrap();
}

#[test]
fn removed_fires_once_after_added() {
    let calls = Arc::new(Mutex::new(Vec::new()));
    let mut c = cache_with(4, Some(Box::new(Recorder::new(calls.clone()))));
    for i in 0..200u64 {
        read(&mut c, i % 5, (i * 13) % 17);
        if i % 37 == 0 {
            c.remove_file(CG, FileId(i % 5)).unwrap();
        }
    }
    let calls = calls.lock().unwrap();
    let mut added = std::collections::HashSet::new();
    let mut removed = std::collections::HashSet::new();
    for call in calls.iter() {
        match call {
            Call::Added(id) => assert!(added.insert(*id)),
            Call::Removed(id, _) => {
                assert!(added.contains(id), "{id} removed before added");
                assert!(removed.insert(*id), "{id} removed twice");
            }
            Call::Accessed(id) => assert!(added.contains(id) && !removed.contains(id)),
        }
    }
}

#[test]
fn bad_configuration_rejected() {
    let mut c = PageCache::new();
    assert_eq!(c.add_cgroup(CG, 0, None), Err(CacheError::ZeroLimit(CG)));
    c.add_cgroup(CG, 1, None).unwrap();
    assert_eq!(c.add_cgroup(CG, 1, None), Err(CacheError::DuplicateCgroup(CG)));
    assert!(matches!(PageCache::new().with_batch(33), Err(CacheError::BadBatch(33))));

    struct LongName;
    impl Policy for LongName {
        fn name(&self) -> &str {
            "a-policy-name-that-is-far-too-long-to-fit"
        }
        fn policy_init(&mut self, _: &mut EvictionLists, _: CgroupInfo) -> Result<(), PolicyError> {
            Ok(())
        }
        fn evict_folios(&mut self, _: &mut EvictionLists, _: &mut EvictionContext) {}
        fn folio_added(&mut self, _: &mut EvictionLists, _: &FolioView) {}
        fn folio_accessed(&mut self, _: &mut EvictionLists, _: &FolioView) {}
        fn folio_removed(&mut self, _: &FolioView, _: RemovalReason) {}
    }
    assert!(matches!(
        c.add_cgroup(CgroupId(9), 4, Some(Box::new(LongName))),
        Err(CacheError::Policy(PolicyError::NameTooLong(_)))
    ));
}
