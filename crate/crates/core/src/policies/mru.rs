use crate::api::{
    CgroupInfo, Disposition, EvictionContext, EvictionLists, IterOptions, IterVerdict, ListId, Policy,
    PolicyError, RemovalReason, DEFAULT_SCAN_LIMIT, MAX_CANDIDATES,
};
use crate::types::FolioView;

/// Head folios passed over by default: the most recent ones may still be
/// busy servicing the request that brought them in.
pub const DEFAULT_MRU_SKIP: usize = MAX_CANDIDATES;

/// Most-recently-used eviction. New and re-accessed folios go to the head;
/// eviction proposes from the head after skipping `skip` folios.
#[derive(Debug)]
pub struct Mru {
    list: Option<ListId>,
    skip: usize,
}

impl Default for Mru {
    fn default() -> Self {
        Self::new(DEFAULT_MRU_SKIP)
    }
}

impl Mru {
    pub fn new(skip: usize) -> Self {
        Self { list: None, skip }
    }

    fn list(&self) -> ListId {
        self.list.expect("mru used before policy_init")
    }
}

impl Policy for Mru {
    fn name(&self) -> &str {
        "mru"
    }

    fn policy_init(&mut self, lists: &mut EvictionLists, _: CgroupInfo) -> Result<(), PolicyError> {
        self.list = Some(lists.list_create());
        Ok(())
    }

    fn evict_folios(&mut self, lists: &mut EvictionLists, ctx: &mut EvictionContext) {
        let opts = IterOptions::evaluate(DEFAULT_SCAN_LIMIT, Disposition::LeaveInPlace).with_skip(self.skip);
        let _ = lists.list_iterate(self.list(), &opts, ctx, |_, _| IterVerdict::Evict);
    }

    fn folio_added(&mut self, lists: &mut EvictionLists, folio: &FolioView) {
        let _ = lists.list_add(self.list(), folio.id, false);
    }

    fn folio_accessed(&mut self, lists: &mut EvictionLists, folio: &FolioView) {
        let _ = lists.list_move(self.list(), folio.id, false);
    }

    fn folio_removed(&mut self, _: &FolioView, _: RemovalReason) {}
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::testing::Harness;

    #[test]
    fn newest_first() {
        let mut h = Harness::new(Mru::new(0));
        let [_a, _b, c] = [h.add(), h.add(), h.add()];
        assert_eq!(h.evict(1), vec![c]);
    }

    #[test]
    fn access_moves_to_head() {
        let mut h = Harness::new(Mru::new(0));
        let [a, b, c] = [h.add(), h.add(), h.add()];
        h.access(a);
        assert_eq!(h.list_order(0), vec![a, c, b]);
        assert_eq!(h.evict(1), vec![a]);
    }

    #[test]
    fn skip_passes_over_head() {
        let mut h = Harness::new(Mru::default());
        let ids: Vec<_> = (0..40).map(|_| h.add()).collect();
        // Head is the newest; the 33rd from the head is ids[40 - 33].
        assert_eq!(h.evict(1), vec![ids[7]]);
    }

    #[test]
    fn pure_inserts_evict_lifo() {
        let mut h = Harness::new(Mru::new(0));
        let ids: Vec<_> = (0..10).map(|_| h.add()).collect();
        for want in ids.iter().rev() {
            let got = h.evict(1);
            assert_eq!(got, vec![*want]);
            h.remove(got[0]);
        }
    }
}
