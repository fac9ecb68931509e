//! Policy-owned eviction lists and the valid-folio registry behind them.

use rustc_hash::FxHashSet;
use thiserror::Error;

use super::context::EvictionContext;
use crate::linked::LinkedLists;
use crate::types::{CgroupId, FolioId};

/// Handle to one eviction list. Only meaningful to the store that created it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ListId(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum ListError {
    #[error("unknown eviction list")]
    InvalidList,
    #[error("folio is not in the registry")]
    NotRegistered,
    #[error("folio is already on an eviction list")]
    AlreadyListed,
    #[error("folio is not on any eviction list")]
    NotListed,
    #[error("callback verdict does not match the iteration mode")]
    VerdictMismatch,
    #[error("score window {scan_limit} is smaller than the {requested} candidates requested")]
    ScanWindowTooSmall { scan_limit: usize, requested: usize },
}

/// How `list_iterate` treats the nodes it visits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IterMode {
    /// The callback returns a keep/evict decision per node.
    Evaluate,
    /// The callback returns a score per node; the lowest scores are proposed.
    Score,
}

/// What happens to an examined node that was not proposed (Evaluate mode).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Disposition {
    LeaveInPlace,
    MoveToTail,
    MoveToList(ListId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IterOptions {
    pub mode: IterMode,
    /// Number of nodes to examine after skipping.
    pub scan_limit: usize,
    pub disposition: Disposition,
    /// Head nodes passed over without being examined.
    pub skip: usize,
}

pub const DEFAULT_SCAN_LIMIT: usize = 512;

impl Default for IterOptions {
    fn default() -> Self {
        Self {
            mode: IterMode::Evaluate,
            scan_limit: DEFAULT_SCAN_LIMIT,
            disposition: Disposition::LeaveInPlace,
            skip: 0,
        }
    }
}

impl IterOptions {
    pub fn evaluate(scan_limit: usize, disposition: Disposition) -> Self {
        Self {
            mode: IterMode::Evaluate,
            scan_limit,
            disposition,
            skip: 0,
        }
    }

    pub fn score(scan_limit: usize) -> Self {
        Self {
            mode: IterMode::Score,
            scan_limit,
            disposition: Disposition::LeaveInPlace,
            skip: 0,
        }
    }

    pub fn with_skip(mut self, skip: usize) -> Self {
        self.skip = skip;
        self
    }
}

/// Callback result for one node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IterVerdict {
    Keep,
    Evict,
    /// Propose the folio and rotate it to the tail of its list.
    EvictAndMoveTail,
    Stop,
    /// Score-mode result; lower is evicted first.
    Score(i64),
}

/// The eviction lists of one (cgroup, policy) pair, together with the
/// registry of folios resident in that cgroup.
///
/// The registry and the list-node index share one key space: a folio's list
/// node is found directly from its id.
#[derive(Clone, Debug)]
pub struct EvictionLists {
    cgroup: CgroupId,
    registry: FxHashSet<FolioId>,
    nodes: LinkedLists,
    next_list: u64,
}

impl EvictionLists {
    pub fn new(cgroup: CgroupId) -> Self {
        Self {
            cgroup,
            registry: FxHashSet::default(),
            nodes: LinkedLists::default(),
            next_list: 0,
        }
    }

    pub fn cgroup(&self) -> CgroupId {
        self.cgroup
    }

    pub fn list_create(&mut self) -> ListId {
        self.next_list += 1;
        // Fold the cgroup into the id so that lists from another cgroup's
        // store are never mistaken for local ones.
        let id = (self.cgroup.0 << 32) ^ self.next_list;
        self.nodes.create(id);
        ListId(id)
    }

    pub fn list_len(&self, list: ListId) -> Result<usize, ListError> {
        self.check_list(list)?;
        Ok(self.nodes.len(list.0))
    }

    /// Folio ids on `list`, head first.
    pub fn list_folios(&self, list: ListId) -> Result<Vec<FolioId>, ListError> {
        self.check_list(list)?;
        Ok(self.nodes.iter(list.0).collect())
    }

    /// Which of this store's lists holds `folio`, if any.
    pub fn list_of(&self, folio: FolioId) -> Option<ListId> {
        self.nodes.list_of(folio).map(ListId)
    }

    pub fn listed_count(&self) -> usize {
        self.nodes.total_len()
    }

    pub fn list_add(&mut self, list: ListId, folio: FolioId, tail: bool) -> Result<(), ListError> {
        self.check_list(list)?;
        if !self.registry.contains(&folio) {
            return Err(ListError::NotRegistered);
        }
        if self.nodes.list_of(folio).is_some() {
            return Err(ListError::AlreadyListed);
        }
        self.nodes.push(list.0, folio, tail);
        Ok(())
    }

    pub fn list_move(&mut self, list: ListId, folio: FolioId, tail: bool) -> Result<(), ListError> {
        self.check_list(list)?;
        if self.nodes.list_of(folio).is_none() {
            return Err(ListError::NotListed);
        }
        self.nodes.relink(list.0, folio, tail);
        Ok(())
    }

    pub fn list_del(&mut self, folio: FolioId) -> Result<(), ListError> {
        self.nodes.unlink(folio).map(|_| ()).ok_or(ListError::NotListed)
    }

    /// Walks `list` from the head and fills `ctx` with candidates.
    ///
    /// In Evaluate mode the callback decides per node; examined nodes that
    /// are kept receive `opts.disposition`. In Score mode the callback scores
    /// up to `opts.scan_limit` nodes and the lowest-scoring ones (earlier list
    /// position wins ties) are proposed; no node moves. The callback receives
    /// the node's zero-based position in the list at the start of the walk.
    ///
    /// Returns the number of nodes examined. Nothing is examined when `ctx`
    /// is already full.
    pub fn list_iterate<F>(
        &mut self,
        list: ListId,
        opts: &IterOptions,
        ctx: &mut EvictionContext,
        mut callback: F,
    ) -> Result<usize, ListError>
    where
        F: FnMut(usize, FolioId) -> IterVerdict,
    {
        self.check_list(list)?;
        if let Disposition::MoveToList(target) = opts.disposition {
            self.check_list(target)?;
        }
        if ctx.is_full() {
            return Ok(0);
        }
        if opts.mode == IterMode::Score && opts.scan_limit < ctx.remaining() {
            return Err(ListError::ScanWindowTooSmall {
                scan_limit: opts.scan_limit,
                requested: ctx.remaining(),
            });
        }

        let mut cur = self.nodes.head(list.0);
        for _ in 0..opts.skip {
            match cur {
                Some(id) => cur = self.nodes.next(id),
                None => break,
            }
        }

        match opts.mode {
            IterMode::Evaluate => self.evaluate(list, cur, opts, ctx, &mut callback),
            IterMode::Score => self.score(cur, opts, ctx, &mut callback),
        }
    }

    fn evaluate<F>(
        &mut self,
        list: ListId,
        mut cur: Option<FolioId>,
        opts: &IterOptions,
        ctx: &mut EvictionContext,
        callback: &mut F,
    ) -> Result<usize, ListError>
    where
        F: FnMut(usize, FolioId) -> IterVerdict,
    {
        let mut examined = 0;
        while let Some(id) = cur {
            if examined >= opts.scan_limit || ctx.is_full() {
                break;
            }
            let next = self.nodes.next(id);
            let verdict = callback(opts.skip + examined, id);
            examined += 1;
            match verdict {
                IterVerdict::Keep => match opts.disposition {
                    Disposition::LeaveInPlace => {}
                    Disposition::MoveToTail => self.nodes.relink(list.0, id, true),
                    Disposition::MoveToList(target) => self.nodes.relink(target.0, id, true),
                },
                IterVerdict::Evict => {
                    ctx.propose(id);
                }
                IterVerdict::EvictAndMoveTail => {
                    ctx.propose(id);
                    self.nodes.relink(list.0, id, true);
                }
                IterVerdict::Stop => break,
                IterVerdict::Score(_) => return Err(ListError::VerdictMismatch),
            }
            cur = next;
        }
        Ok(examined)
    }

    fn score<F>(
        &mut self,
        mut cur: Option<FolioId>,
        opts: &IterOptions,
        ctx: &mut EvictionContext,
        callback: &mut F,
    ) -> Result<usize, ListError>
    where
        F: FnMut(usize, FolioId) -> IterVerdict,
    {
        let mut scored: Vec<(i64, usize, FolioId)> = Vec::with_capacity(opts.scan_limit.min(1024));
        while let Some(id) = cur {
            if scored.len() >= opts.scan_limit {
                break;
            }
            let pos = opts.skip + scored.len();
            match callback(pos, id) {
                IterVerdict::Score(s) => scored.push((s, pos, id)),
                IterVerdict::Stop => break,
                _ => return Err(ListError::VerdictMismatch),
            }
            cur = self.nodes.next(id);
        }
        let examined = scored.len();
        let k = ctx.remaining().min(examined);
        if k > 0 {
            if k < examined {
                scored.select_nth_unstable_by_key(k - 1, |&(s, p, _)| (s, p));
                scored.truncate(k);
            }
            scored.sort_unstable_by_key(|&(s, p, _)| (s, p));
            for &(_, _, id) in &scored {
                ctx.propose(id);
            }
        }
        Ok(examined)
    }

    pub fn is_registered(&self, folio: FolioId) -> bool {
        self.registry.contains(&folio)
    }

    pub fn registry_len(&self) -> usize {
        self.registry.len()
    }

    /// Registers a folio that just entered the cache.
    ///
    /// # Panics
    ///
    /// On double registration; that is a cache bug, not policy misbehavior.
    pub fn register_folio(&mut self, folio: FolioId) {
        let fresh = self.registry.insert(folio);
        assert!(fresh, "{folio} registered twice");
    }

    /// Drops a folio from the registry and from any eviction list.
    ///
    /// # Panics
    ///
    /// If the folio was not registered.
    pub fn unregister_folio(&mut self, folio: FolioId) {
        let present = self.registry.remove(&folio);
        assert!(present, "{folio} unregistered but not registered");
        self.nodes.unlink(folio);
    }

    /// Checks that every listed folio is registered and that list links are
    /// consistent in both directions.
    pub fn check_consistency(&self) -> Result<(), String> {
        self.nodes.check()?;
        if self.nodes.total_len() > self.registry.len() {
            return Err("more listed folios than registered ones".into());
        }
        if let Some(stray) = self.nodes.linked_ids().find(|id| !self.registry.contains(id)) {
            return Err(format!("{stray} is listed but not registered"));
        }
        Ok(())
    }

    fn check_list(&self, list: ListId) -> Result<(), ListError> {
        if self.nodes.has_list(list.0) {
            Ok(())
        } else {
            Err(ListError::InvalidList)
        }
    }
}

/// Bytes used by a registry sized for `limit_pages` buckets with `resident`
/// filled entries: 16 bytes per bucket head plus a 32-byte list node per entry.
pub fn registry_memory_estimate(limit_pages: u64, resident: u64) -> u64 {
    const BUCKET_BYTES: u64 = 16;
    const NODE_BYTES: u64 = 32;
    limit_pages * BUCKET_BYTES + resident * NODE_BYTES
}
