use std::fmt;

/// Size of one simulated page. Every folio covers exactly one page.
pub const PAGE_SIZE: u64 = 4096;

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
        pub struct $name(pub u64);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }

        impl From<u64> for $name {
            fn from(v: u64) -> Self {
                Self(v)
            }
        }
    };
}

id_newtype!(
    /// Identity of one cache residency. Allocated from a monotone counter and
    /// never reused, so a stale id can always be told apart from a live one.
    FolioId,
    "folio#"
);
id_newtype!(FileId, "file#");
id_newtype!(CgroupId, "cg#");
id_newtype!(ThreadId, "tid#");

/// Byte offset to page index.
#[inline]
pub fn page_of(byte_offset: u64) -> u64 {
    byte_offset / PAGE_SIZE
}

/// Full metadata for one resident page, owned by the cache.
#[derive(Clone, Debug)]
pub struct Folio {
    pub id: FolioId,
    pub file: FileId,
    /// Page index within the file.
    pub offset: u64,
    pub owner: CgroupId,
    pub referenced: bool,
    pub active: bool,
    pub dirty: bool,
    pub pinned: bool,
    pub inserted_at: u64,
    pub last_access: u64,
}

impl Folio {
    pub fn view(&self, thread: ThreadId) -> FolioView {
        FolioView {
            id: self.id,
            file: self.file,
            offset: self.offset,
            owner: self.owner,
            dirty: self.dirty,
            thread,
        }
    }
}

/// What a policy hook gets to see of a folio.
///
/// `thread` is the thread whose request triggered the hook; it plays the part
/// of "the current task" for policies that route folios by requester.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FolioView {
    pub id: FolioId,
    pub file: FileId,
    pub offset: u64,
    pub owner: CgroupId,
    pub dirty: bool,
    pub thread: ThreadId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AccessOutcome {
    Hit,
    Miss,
}

impl AccessOutcome {
    pub fn is_hit(self) -> bool {
        matches!(self, AccessOutcome::Hit)
    }
}
