use std::any::Any;

use thiserror::Error;

use super::context::EvictionContext;
use super::lists::EvictionLists;
use crate::types::{CgroupId, FolioView};

/// Longest accepted policy name.
pub const POLICY_NAME_LEN: usize = 32;

/// Static facts about the cgroup a policy is attached to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CgroupInfo {
    pub id: CgroupId,
    pub limit_pages: u64,
}

/// Why a folio left the cache.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RemovalReason {
    /// Reclaimed by the eviction driver (policy round or fallback).
    Evicted,
    /// Dropped because its file was deleted.
    FileRemoved,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("policy name {0:?} is longer than {POLICY_NAME_LEN} characters")]
    NameTooLong(String),
    #[error("policy init failed: {0}")]
    Init(String),
}

/// The five callbacks a custom eviction policy implements.
///
/// Hooks never evict anything themselves. They maintain eviction lists and
/// private state, and during `evict_folios` they append candidates to the
/// context; the cache validates and performs the evictions.
///
/// `folio_removed` gets no list access: the cache has already detached the
/// folio from every eviction list by the time it runs.
pub trait Policy: Any + Send {
    fn name(&self) -> &str;

    fn policy_init(&mut self, lists: &mut EvictionLists, cgroup: CgroupInfo) -> Result<(), PolicyError>;

    fn evict_folios(&mut self, lists: &mut EvictionLists, ctx: &mut EvictionContext);

    fn folio_added(&mut self, lists: &mut EvictionLists, folio: &FolioView);

    fn folio_accessed(&mut self, lists: &mut EvictionLists, folio: &FolioView);

    fn folio_removed(&mut self, folio: &FolioView, reason: RemovalReason);

    /// Whether deferred maintenance is due. Checked by the cache between
    /// trace events, never inside another hook.
    fn maintenance_due(&self) -> bool {
        false
    }

    /// Deferred, comparatively expensive upkeep (statistics aging and so on).
    fn run_maintenance(&mut self) {}
}
