use crate::types::FolioId;

/// Capacity of one eviction round's candidate array.
pub const MAX_CANDIDATES: usize = 32;

/// Request/response record for one eviction round.
///
/// The cache fills in how many folios it wants; the policy appends the
/// candidates it proposes. Fields are private so that a policy can only
/// grow the proposed set up to what was requested.
#[derive(Clone, Debug)]
pub struct EvictionContext {
    requested: usize,
    proposed: usize,
    candidates: [FolioId; MAX_CANDIDATES],
}

impl EvictionContext {
    /// # Panics
    ///
    /// If `requested` is zero or above [`MAX_CANDIDATES`].
    pub fn new(requested: usize) -> Self {
        assert!(
            (1..=MAX_CANDIDATES).contains(&requested),
            "candidate request {requested} outside 1..={MAX_CANDIDATES}"
        );
        Self {
            requested,
            proposed: 0,
            candidates: [FolioId(0); MAX_CANDIDATES],
        }
    }

    pub fn nr_requested(&self) -> usize {
        self.requested
    }

    pub fn nr_proposed(&self) -> usize {
        self.proposed
    }

    pub fn remaining(&self) -> usize {
        self.requested - self.proposed
    }

    pub fn is_full(&self) -> bool {
        self.proposed >= self.requested
    }

    /// Appends a candidate. Returns `false` (and drops it) once full.
    pub fn propose(&mut self, folio: FolioId) -> bool {
        if self.is_full() {
            return false;
        }
        self.candidates[self.proposed] = folio;
        self.proposed += 1;
        true
    }

    pub fn candidates(&self) -> &[FolioId] {
        &self.candidates[..self.proposed]
    }
}
