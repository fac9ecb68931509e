//! The extension surface that custom eviction policies program against.

mod context;
mod hooks;
mod lists;

pub use context::{EvictionContext, MAX_CANDIDATES};
pub use hooks::{CgroupInfo, Policy, PolicyError, RemovalReason, POLICY_NAME_LEN};
pub use lists::{
    registry_memory_estimate, Disposition, EvictionLists, IterMode, IterOptions, IterVerdict,
    ListError, ListId, DEFAULT_SCAN_LIMIT,
};
