use crate::api::{
    CgroupInfo, Disposition, EvictionContext, EvictionLists, IterOptions, IterVerdict, ListId, Policy,
    PolicyError, RemovalReason, DEFAULT_SCAN_LIMIT,
};
use crate::types::FolioView;

/// Insertion-order eviction over a single list.
#[derive(Debug, Default)]
pub struct Fifo {
    list: Option<ListId>,
}

impl Fifo {
    pub fn new() -> Self {
        Self::default()
    }

    fn list(&self) -> ListId {
        self.list.expect("fifo used before policy_init")
    }
}

impl Policy for Fifo {
    fn name(&self) -> &str {
        "fifo"
    }

    fn policy_init(&mut self, lists: &mut EvictionLists, _: CgroupInfo) -> Result<(), PolicyError> {
        self.list = Some(lists.list_create());
        Ok(())
    }

    fn evict_folios(&mut self, lists: &mut EvictionLists, ctx: &mut EvictionContext) {
        let opts = IterOptions::evaluate(DEFAULT_SCAN_LIMIT, Disposition::LeaveInPlace);
        let _ = lists.list_iterate(self.list(), &opts, ctx, |_, _| IterVerdict::Evict);
    }

    fn folio_added(&mut self, lists: &mut EvictionLists, folio: &FolioView) {
        let _ = lists.list_add(self.list(), folio.id, true);
    }

    fn folio_accessed(&mut self, _: &mut EvictionLists, _: &FolioView) {}

    fn folio_removed(&mut self, _: &FolioView, _: RemovalReason) {}
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::testing::Harness;

    #[test]
    fn evicts_in_insertion_order() {
        let mut h = Harness::new(Fifo::new());
        let [a, b, c] = [h.add(), h.add(), h.add()];
        assert_eq!(h.evict(1), vec![a]);
        h.remove(a);
        h.access(b);
        assert_eq!(h.evict(1), vec![b], "FIFO ignores recency");
        h.remove(b);
        assert_eq!(h.evict(3), vec![c]);
    }
}
