//! The kernel side of the simulation: folio lifecycle, per-cgroup
//! accounting, the default two-list policy, and the eviction driver that
//! consults custom policies and falls back to the default path.

mod cgroup;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::api::{CgroupInfo, EvictionContext, Policy, PolicyError, RemovalReason, MAX_CANDIDATES, POLICY_NAME_LEN};
use crate::types::{AccessOutcome, CgroupId, FileId, Folio, FolioId, ThreadId};

pub use cgroup::{CgroupSim, CgroupStats, InsertTarget};
use cgroup::{ACTIVE, INACTIVE};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CacheError {
    #[error("unknown cgroup {0}")]
    UnknownCgroup(CgroupId),
    #[error("cgroup {0} already exists")]
    DuplicateCgroup(CgroupId),
    #[error("cgroup {0} has a zero page limit")]
    ZeroLimit(CgroupId),
    #[error("candidate batch {0} outside 1..={MAX_CANDIDATES}")]
    BadBatch(usize),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

/// How a folio left the cache, as recorded in the eviction log.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvictionSource {
    Policy,
    Fallback,
    FileRemoved,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvictionRecord {
    pub cgroup: CgroupId,
    pub folio: FolioId,
    pub file: FileId,
    pub offset: u64,
    pub source: EvictionSource,
}

#[derive(Default)]
struct FolioTable {
    folios: FxHashMap<FolioId, Folio>,
    index: FxHashMap<FileId, FxHashMap<u64, FolioId>>,
}

impl FolioTable {
    fn lookup(&self, file: FileId, offset: u64) -> Option<FolioId> {
        self.index.get(&file).and_then(|m| m.get(&offset)).copied()
    }

    fn insert(&mut self, folio: Folio) {
        self.index
            .entry(folio.file)
            .or_default()
            .insert(folio.offset, folio.id);
        self.folios.insert(folio.id, folio);
    }

    fn remove(&mut self, id: FolioId) -> Folio {
        let folio = self.folios.remove(&id).expect("removing unknown folio");
        if let Some(pages) = self.index.get_mut(&folio.file) {
            pages.remove(&folio.offset);
            if pages.is_empty() {
                self.index.remove(&folio.file);
            }
        }
        folio
    }
}

/// Runs a policy hook, turning a panic into `None`.
fn guarded<R>(f: impl FnOnce() -> R) -> Option<R> {
    catch_unwind(AssertUnwindSafe(f)).ok()
}

pub struct PageCache {
    cgroups: BTreeMap<CgroupId, CgroupSim>,
    table: FolioTable,
    next_folio: u64,
    clock: u64,
    batch: usize,
    log: Option<Vec<EvictionRecord>>,
}

impl Default for PageCache {
    fn default() -> Self {
        Self::new()
    }
}

impl PageCache {
    pub fn new() -> Self {
        Self {
            cgroups: BTreeMap::new(),
            table: FolioTable::default(),
            next_folio: 1,
            clock: 0,
            batch: MAX_CANDIDATES,
            log: None,
        }
    }

    /// Caps the number of candidates requested per eviction round.
    pub fn with_batch(mut self, batch: usize) -> Result<Self, CacheError> {
        if !(1..=MAX_CANDIDATES).contains(&batch) {
            return Err(CacheError::BadBatch(batch));
        }
        self.batch = batch;
        Ok(self)
    }

    /// Starts recording every folio removal in order.
    pub fn record_evictions(&mut self) {
        self.log.get_or_insert_with(Vec::new);
    }

    pub fn take_eviction_log(&mut self) -> Vec<EvictionRecord> {
        self.log.as_mut().map(std::mem::take).unwrap_or_default()
    }

    /// Creates a cgroup, optionally governed by a custom policy.
    pub fn add_cgroup(
        &mut self,
        id: CgroupId,
        limit_pages: u64,
        policy: Option<Box<dyn Policy>>,
    ) -> Result<(), CacheError> {
        if self.cgroups.contains_key(&id) {
            return Err(CacheError::DuplicateCgroup(id));
        }
        if limit_pages == 0 {
            return Err(CacheError::ZeroLimit(id));
        }
        let mut cg = CgroupSim::new(id, limit_pages);
        if let Some(mut policy) = policy {
            let name = policy.name();
            if name.chars().count() > POLICY_NAME_LEN {
                return Err(PolicyError::NameTooLong(name.to_owned()).into());
            }
            let info = CgroupInfo { id, limit_pages };
            match guarded(|| policy.policy_init(&mut cg.lists, info)) {
                Some(Ok(())) => {}
                Some(Err(e)) => return Err(e.into()),
                None => return Err(PolicyError::Init("policy_init panicked".into()).into()),
            }
            cg.policy = Some(policy);
        }
        self.cgroups.insert(id, cg);
        Ok(())
    }

    pub fn cgroup(&self, id: CgroupId) -> Option<&CgroupSim> {
        self.cgroups.get(&id)
    }

    pub fn cgroups(&self) -> impl Iterator<Item = &CgroupSim> {
        self.cgroups.values()
    }

    pub fn folio(&self, id: FolioId) -> Option<&Folio> {
        self.table.folios.get(&id)
    }

    pub fn lookup(&self, file: FileId, offset: u64) -> Option<FolioId> {
        self.table.lookup(file, offset)
    }

    pub fn resident_total(&self) -> usize {
        self.table.folios.len()
    }

    /// Marks a resident page as in use; pinned folios are never evicted.
    pub fn pin(&mut self, file: FileId, offset: u64) -> bool {
        self.set_pinned(file, offset, true)
    }

    pub fn unpin(&mut self, file: FileId, offset: u64) -> bool {
        self.set_pinned(file, offset, false)
    }

    fn set_pinned(&mut self, file: FileId, offset: u64, pinned: bool) -> bool {
        match self.table.lookup(file, offset) {
            Some(id) => {
                self.table.folios.get_mut(&id).unwrap().pinned = pinned;
                true
            }
            None => false,
        }
    }

    /// One page access by `cgroup`.
    ///
    /// A hit updates the folio wherever it lives, including in another
    /// cgroup, and notifies the owner's policy. A miss creates a folio owned
    /// by the faulting cgroup and then reclaims down to its limit.
    pub fn access(
        &mut self,
        cgroup: CgroupId,
        file: FileId,
        offset: u64,
        write: bool,
        thread: ThreadId,
    ) -> Result<AccessOutcome, CacheError> {
        if !self.cgroups.contains_key(&cgroup) {
            return Err(CacheError::UnknownCgroup(cgroup));
        }
        self.clock += 1;

        if let Some(id) = self.table.lookup(file, offset) {
            let folio = self.table.folios.get_mut(&id).unwrap();
            folio.last_access = self.clock;
            folio.dirty |= write;
            let owner = self.cgroups.get_mut(&folio.owner).expect("folio owner vanished");
            if !folio.active && folio.referenced {
                owner.lru.relink(ACTIVE, id, true);
                folio.active = true;
                folio.referenced = false;
                owner.stats.promotions += 1;
            } else {
                folio.referenced = true;
            }
            let view = folio.view(thread);
            if let Some(policy) = owner.policy.as_mut() {
                if guarded(|| policy.folio_accessed(&mut owner.lists, &view)).is_none() {
                    owner.stats.policy_faults += 1;
                }
            }
            return Ok(AccessOutcome::Hit);
        }

        let cg = self.cgroups.get_mut(&cgroup).unwrap();
        let target = cg.refault_check(file, offset);
        let id = FolioId(self.next_folio);
        self.next_folio += 1;
        let active = target == InsertTarget::ActiveTail;
        let folio = Folio {
            id,
            file,
            offset,
            owner: cgroup,
            referenced: true,
            active,
            dirty: write,
            pinned: false,
            inserted_at: self.clock,
            last_access: self.clock,
        };
        let view = folio.view(thread);
        self.table.insert(folio);
        cg.lru.push(if active { ACTIVE } else { INACTIVE }, id, true);
        cg.resident_pages += 1;
        cg.stats.insertions += 1;
        if active {
            cg.stats.refault_activations += 1;
        }
        cg.lists.register_folio(id);
        if let Some(policy) = cg.policy.as_mut() {
            if guarded(|| policy.folio_added(&mut cg.lists, &view)).is_none() {
                cg.stats.policy_faults += 1;
            }
        }

        drive_eviction(cg, &mut self.table, &mut self.log, self.batch, thread);
        Ok(AccessOutcome::Miss)
    }

    /// Drops every resident page of `file`, whoever owns it. No shadow
    /// entries are written.
    pub fn remove_file(&mut self, cgroup: CgroupId, file: FileId) -> Result<usize, CacheError> {
        if !self.cgroups.contains_key(&cgroup) {
            return Err(CacheError::UnknownCgroup(cgroup));
        }
        let Some(pages) = self.table.index.get(&file) else {
            return Ok(0);
        };
        let mut pages: Vec<(u64, FolioId)> = pages.iter().map(|(&o, &id)| (o, id)).collect();
        pages.sort_unstable();
        for &(_, id) in &pages {
            let folio = self.table.remove(id);
            let cg = self.cgroups.get_mut(&folio.owner).expect("folio owner vanished");
            cg.lru.unlink(id);
            cg.lists.unregister_folio(id);
            cg.resident_pages -= 1;
            cg.stats.file_removed_folios += 1;
            let view = folio.view(ThreadId::default());
            if let Some(policy) = cg.policy.as_mut() {
                if guarded(|| policy.folio_removed(&view, RemovalReason::FileRemoved)).is_none() {
                    cg.stats.policy_faults += 1;
                }
            }
            if let Some(log) = self.log.as_mut() {
                log.push(EvictionRecord {
                    cgroup: cg.id,
                    folio: id,
                    file: folio.file,
                    offset: folio.offset,
                    source: EvictionSource::FileRemoved,
                });
            }
        }
        Ok(pages.len())
    }

    /// Reclaims `needed` folios from `cgroup` through the default two-list
    /// path only, bypassing any attached policy.
    pub fn default_evict(&mut self, cgroup: CgroupId, needed: usize) -> Result<usize, CacheError> {
        let cg = self
            .cgroups
            .get_mut(&cgroup)
            .ok_or(CacheError::UnknownCgroup(cgroup))?;
        Ok(default_evict(cg, &mut self.table, &mut self.log, needed, ThreadId::default()))
    }

    /// Changes a cgroup's limit and reclaims immediately if it is now over.
    pub fn set_limit(&mut self, cgroup: CgroupId, limit_pages: u64) -> Result<(), CacheError> {
        if limit_pages == 0 {
            return Err(CacheError::ZeroLimit(cgroup));
        }
        let cg = self
            .cgroups
            .get_mut(&cgroup)
            .ok_or(CacheError::UnknownCgroup(cgroup))?;
        cg.limit_pages = limit_pages;
        drive_eviction(cg, &mut self.table, &mut self.log, self.batch, ThreadId::default());
        Ok(())
    }

    /// Runs deferred policy maintenance. Called between trace events.
    pub fn end_event(&mut self) {
        for cg in self.cgroups.values_mut() {
            if let Some(policy) = cg.policy.as_mut() {
                if policy.maintenance_due() && guarded(|| policy.run_maintenance()).is_none() {
                    cg.stats.policy_faults += 1;
                }
            }
        }
    }

    /// Number of cgroups currently above their limit.
    pub fn capacity_violations(&self) -> usize {
        self.cgroups
            .values()
            .filter(|cg| cg.resident_pages > cg.limit_pages)
            .count()
    }

    /// Full structural audit; used by tests after every step.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut owned: FxHashMap<CgroupId, u64> = FxHashMap::default();
        for (id, folio) in &self.table.folios {
            *owned.entry(folio.owner).or_default() += 1;
            let cg = self
                .cgroups
                .get(&folio.owner)
                .ok_or_else(|| format!("{id} owned by unknown {}", folio.owner))?;
            let want = if folio.active { ACTIVE } else { INACTIVE };
            if cg.lru.list_of(*id) != Some(want) {
                return Err(format!("{id} not on the list its active flag names"));
            }
            if !cg.lists.is_registered(*id) {
                return Err(format!("{id} resident but not registered"));
            }
            if self.table.lookup(folio.file, folio.offset) != Some(*id) {
                return Err(format!("{id} missing from page index"));
            }
        }
        let indexed: usize = self.table.index.values().map(|m| m.len()).sum();
        if indexed != self.table.folios.len() {
            return Err("page index and folio table disagree".into());
        }
        for cg in self.cgroups.values() {
            let mine = owned.get(&cg.id).copied().unwrap_or(0);
            if cg.resident_pages != mine {
                return Err(format!("{} resident {} but owns {mine}", cg.id, cg.resident_pages));
            }
            if cg.lru.total_len() as u64 != mine || cg.lists.registry_len() as u64 != mine {
                return Err(format!("{} list/registry size mismatch", cg.id));
            }
            let s = &cg.stats;
            if s.insertions - s.evictions() - s.file_removed_folios != cg.resident_pages {
                return Err(format!("{} insert/evict conservation broken", cg.id));
            }
            cg.lru.check()?;
            cg.lists.check_consistency()?;
        }
        Ok(())
    }
}

/// Removes one folio on the eviction path: shadow entry, epoch bump,
/// registry and list cleanup, then the policy's `folio_removed`.
fn evict_one(
    cg: &mut CgroupSim,
    table: &mut FolioTable,
    log: &mut Option<Vec<EvictionRecord>>,
    id: FolioId,
    source: EvictionSource,
    thread: ThreadId,
) {
    let folio = table.remove(id);
    cg.lru.unlink(id);
    cg.record_shadow(folio.file, folio.offset);
    cg.lists.unregister_folio(id);
    cg.resident_pages -= 1;
    if folio.dirty {
        cg.stats.writebacks += 1;
    }
    match source {
        EvictionSource::Policy => cg.stats.evictions_policy += 1,
        _ => cg.stats.evictions_fallback += 1,
    }
    let view = folio.view(thread);
    if let Some(policy) = cg.policy.as_mut() {
        if guarded(|| policy.folio_removed(&view, RemovalReason::Evicted)).is_none() {
            cg.stats.policy_faults += 1;
        }
    }
    if let Some(log) = log.as_mut() {
        log.push(EvictionRecord {
            cgroup: cg.id,
            folio: id,
            file: folio.file,
            offset: folio.offset,
            source,
        });
    }
}

fn demote(cg: &mut CgroupSim, table: &mut FolioTable, id: FolioId) {
    cg.lru.relink(INACTIVE, id, true);
    let folio = table.folios.get_mut(&id).unwrap();
    folio.active = false;
    folio.referenced = false;
    cg.stats.demotions += 1;
}

/// The default two-list reclaim: balance the lists, then evict unpinned
/// folios from the inactive head.
fn default_evict(
    cg: &mut CgroupSim,
    table: &mut FolioTable,
    log: &mut Option<Vec<EvictionRecord>>,
    needed: usize,
    thread: ThreadId,
) -> usize {
    while cg.lru.len(INACTIVE) < needed.max(cg.lru.len(ACTIVE) / 2) {
        match cg.lru.head(ACTIVE) {
            Some(h) => demote(cg, table, h),
            None => break,
        }
    }

    let mut evicted = 0;
    let mut cur = cg.lru.head(INACTIVE);
    while let Some(id) = cur {
        if evicted == needed {
            return evicted;
        }
        cur = cg.lru.next(id);
        if !table.folios[&id].pinned {
            evict_one(cg, table, log, id, EvictionSource::Fallback, thread);
            evicted += 1;
        }
    }
    // Everything left on the inactive list is pinned; keep pulling from the
    // active list until satisfied or out of folios.
    while evicted < needed {
        let Some(h) = cg.lru.head(ACTIVE) else { break };
        demote(cg, table, h);
        if !table.folios[&h].pinned {
            evict_one(cg, table, log, h, EvictionSource::Fallback, thread);
            evicted += 1;
        }
    }
    evicted
}

/// Reclaims until the cgroup is back under its limit. Each round asks the
/// policy (if any) for up to `batch` candidates, validates them against the
/// registry, and lets the default path make up any shortfall.
fn drive_eviction(
    cg: &mut CgroupSim,
    table: &mut FolioTable,
    log: &mut Option<Vec<EvictionRecord>>,
    batch: usize,
    thread: ThreadId,
) {
    let mut round: Vec<FolioId> = Vec::with_capacity(MAX_CANDIDATES);
    while cg.resident_pages > cg.limit_pages {
        let over = cg.resident_pages - cg.limit_pages;
        let needed = usize::try_from(over).unwrap_or(usize::MAX).min(batch);
        let mut evicted = 0;

        if let Some(policy) = cg.policy.as_mut() {
            let mut ctx = EvictionContext::new(needed);
            let lists = &mut cg.lists;
            if guarded(|| policy.evict_folios(lists, &mut ctx)).is_none() {
                cg.stats.policy_faults += 1;
            } else {
                round.clear();
                for &cand in ctx.candidates() {
                    if round.contains(&cand) {
                        continue;
                    }
                    let valid = cg.lists.is_registered(cand)
                        && table.folios.get(&cand).is_some_and(|f| !f.pinned);
                    if !valid {
                        cg.stats.invalid_candidates += 1;
                        continue;
                    }
                    round.push(cand);
                    evict_one(cg, table, log, cand, EvictionSource::Policy, thread);
                    evicted += 1;
                }
            }
            if evicted < needed {
                cg.stats.fallback_rounds += 1;
            }
        }

        if evicted < needed {
            evicted += default_evict(cg, table, log, needed - evicted, thread);
        }
        if evicted == 0 {
            // Every resident folio is pinned.
            break;
        }
    }
}

#[cfg(test)]
mod tests;
