//! S3-FIFO over two eviction lists (small, main) plus a ghost map of
//! recently evicted page keys.
//!
//! New folios enter the small list with a zero access count. Eviction drains
//! the small list while it holds more than its target share: folios seen at
//! least twice move to the main list, the rest are proposed. Otherwise the
//! main list is searched for the coldest folios, decrementing counts as it
//! goes. A ghost hit on admission sends the folio straight to main.

use rustc_hash::{FxHashMap, FxHashSet};

use crate::api::{
    CgroupInfo, Disposition, EvictionContext, EvictionLists, IterOptions, IterVerdict, ListId, Policy,
    PolicyError, RemovalReason,
};
use crate::bounded::BoundedMap;
use crate::types::{FileId, FolioId, FolioView};

pub const MAX_FREQ: u8 = 3;
/// Small list target, as a fraction (numerator, denominator) of all folios.
const SMALL_SHARE: (usize, usize) = (1, 10);

type PageKey = (FileId, u64);

#[derive(Clone, Copy, Debug)]
struct Meta {
    freq: u8,
    key: PageKey,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct S3Counters {
    pub promotions: u64,
    pub ghost_admissions: u64,
    pub small_proposals: u64,
    pub main_proposals: u64,
}

#[derive(Debug)]
pub struct S3Fifo {
    small: Option<ListId>,
    main: Option<ListId>,
    ghost: BoundedMap<PageKey, ()>,
    meta: FxHashMap<FolioId, Meta>,
    counters: S3Counters,
    // Keys that ever reached the main list; only kept when auditing.
    audit: Option<FxHashSet<PageKey>>,
}

impl Default for S3Fifo {
    fn default() -> Self {
        Self::new()
    }
}

impl S3Fifo {
    pub fn new() -> Self {
        Self {
            small: None,
            main: None,
            ghost: BoundedMap::new(0),
            meta: FxHashMap::default(),
            counters: S3Counters::default(),
            audit: None,
        }
    }

    /// Remembers every page key admitted to the main list.
    pub fn with_audit(mut self) -> Self {
        self.audit = Some(FxHashSet::default());
        self
    }

    pub fn reached_main(&self, file: FileId, offset: u64) -> Option<bool> {
        self.audit.as_ref().map(|a| a.contains(&(file, offset)))
    }

    pub fn counters(&self) -> &S3Counters {
        &self.counters
    }

    pub fn frequency(&self, id: FolioId) -> Option<u8> {
        self.meta.get(&id).map(|m| m.freq)
    }

    pub fn ghost_len(&self) -> usize {
        self.ghost.len()
    }

    pub fn ghost_capacity(&self) -> usize {
        self.ghost.capacity()
    }

    pub fn small_list(&self) -> Option<ListId> {
        self.small
    }

    pub fn main_list(&self) -> Option<ListId> {
        self.main
    }

    fn lists(&self) -> (ListId, ListId) {
        (
            self.small.expect("s3fifo used before policy_init"),
            self.main.expect("s3fifo used before policy_init"),
        )
    }

    fn evict_small(&mut self, lists: &mut EvictionLists, ctx: &mut EvictionContext, small: ListId, main: ListId) {
        let len = lists.list_len(small).unwrap_or(0);
        let meta = &mut self.meta;
        let counters = &mut self.counters;
        let audit = &mut self.audit;
        let opts = IterOptions::evaluate(len, Disposition::MoveToList(main));
        let _ = lists.list_iterate(small, &opts, ctx, |_, id| {
            let Some(m) = meta.get(&id) else {
                return IterVerdict::Keep;
            };
            if m.freq > 1 {
                counters.promotions += 1;
                if let Some(a) = audit.as_mut() {
                    a.insert(m.key);
                }
                IterVerdict::Keep
            } else {
                counters.small_proposals += 1;
                IterVerdict::EvictAndMoveTail
            }
        });
    }

    fn evict_main(&mut self, lists: &mut EvictionLists, ctx: &mut EvictionContext, main: ListId) {
        let mut proposed: Vec<FolioId> = Vec::with_capacity(ctx.remaining());
        for threshold in 0..=MAX_FREQ {
            if ctx.is_full() {
                break;
            }
            let len = lists.list_len(main).unwrap_or(0);
            if len == 0 {
                break;
            }
            let meta = &mut self.meta;
            let counters = &mut self.counters;
            let opts = IterOptions::evaluate(len, Disposition::MoveToTail);
            let _ = lists.list_iterate(main, &opts, ctx, |_, id| {
                if proposed.contains(&id) {
                    return IterVerdict::Keep;
                }
                let Some(m) = meta.get_mut(&id) else {
                    return IterVerdict::Keep;
                };
                let freq = m.freq;
                m.freq = freq.saturating_sub(1);
                if freq <= threshold {
                    proposed.push(id);
                    counters.main_proposals += 1;
                    IterVerdict::EvictAndMoveTail
                } else {
                    IterVerdict::Keep
                }
            });
        }
    }
}

impl Policy for S3Fifo {
    fn name(&self) -> &str {
        "s3fifo"
    }

    fn policy_init(&mut self, lists: &mut EvictionLists, cgroup: CgroupInfo) -> Result<(), PolicyError> {
        self.small = Some(lists.list_create());
        self.main = Some(lists.list_create());
        self.ghost = BoundedMap::new(usize::try_from(cgroup.limit_pages).unwrap_or(usize::MAX));
        Ok(())
    }

    fn evict_folios(&mut self, lists: &mut EvictionLists, ctx: &mut EvictionContext) {
        let (small, main) = self.lists();
        let small_len = lists.list_len(small).unwrap_or(0);
        let main_len = lists.list_len(main).unwrap_or(0);
        let (num, den) = SMALL_SHARE;
        if small_len * den > (small_len + main_len) * num {
            self.evict_small(lists, ctx, small, main);
        }
        if !ctx.is_full() {
            self.evict_main(lists, ctx, main);
        }
    }

    fn folio_added(&mut self, lists: &mut EvictionLists, folio: &FolioView) {
        let (small, main) = self.lists();
        let key = (folio.file, folio.offset);
        let target = if self.ghost.remove(&key).is_some() {
            self.counters.ghost_admissions += 1;
            if let Some(a) = self.audit.as_mut() {
                a.insert(key);
            }
            main
        } else {
            small
        };
        let _ = lists.list_add(target, folio.id, true);
        self.meta.insert(folio.id, Meta { freq: 0, key });
    }

    fn folio_accessed(&mut self, _: &mut EvictionLists, folio: &FolioView) {
        if let Some(m) = self.meta.get_mut(&folio.id) {
            m.freq = (m.freq + 1).min(MAX_FREQ);
        }
    }

    fn folio_removed(&mut self, folio: &FolioView, reason: RemovalReason) {
        self.meta.remove(&folio.id);
        if reason == RemovalReason::Evicted {
            self.ghost.insert((folio.file, folio.offset), ());
        }
    }
}
