//! Doubly-linked lists of folio ids with O(1) lookup of any node.
//!
//! Nodes are keyed by `FolioId`, so a folio can sit on at most one list of a
//! given store. Both the default active/inactive lists and the policy-owned
//! eviction lists are built on this.

use rustc_hash::FxHashMap;

use crate::types::FolioId;

#[derive(Clone, Copy, Debug)]
struct Node {
    list: u64,
    prev: Option<FolioId>,
    next: Option<FolioId>,
}

#[derive(Clone, Copy, Debug, Default)]
struct Ends {
    head: Option<FolioId>,
    tail: Option<FolioId>,
    len: usize,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct LinkedLists {
    nodes: FxHashMap<FolioId, Node>,
    lists: FxHashMap<u64, Ends>,
}

impl LinkedLists {
    pub fn create(&mut self, list: u64) {
        self.lists.entry(list).or_default();
    }

    pub fn has_list(&self, list: u64) -> bool {
        self.lists.contains_key(&list)
    }

    pub fn list_of(&self, id: FolioId) -> Option<u64> {
        self.nodes.get(&id).map(|n| n.list)
    }

    pub fn len(&self, list: u64) -> usize {
        self.lists.get(&list).map_or(0, |e| e.len)
    }

    pub fn total_len(&self) -> usize {
        self.nodes.len()
    }

    pub fn linked_ids(&self) -> impl Iterator<Item = FolioId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn head(&self, list: u64) -> Option<FolioId> {
        self.lists.get(&list).and_then(|e| e.head)
    }

    pub fn next(&self, id: FolioId) -> Option<FolioId> {
        self.nodes.get(&id).and_then(|n| n.next)
    }

    /// Links `id` at the head or tail of `list`. The caller guarantees the
    /// list exists and `id` is not linked anywhere.
    pub fn push(&mut self, list: u64, id: FolioId, tail: bool) {
        debug_assert!(!self.nodes.contains_key(&id), "{id} already linked");
        let ends = self.lists.get_mut(&list).expect("push onto unknown list");
        let node = if tail {
            let node = Node {
                list,
                prev: ends.tail,
                next: None,
            };
            match ends.tail {
                Some(t) => self.nodes.get_mut(&t).unwrap().next = Some(id),
                None => ends.head = Some(id),
            }
            ends.tail = Some(id);
            node
        } else {
            let node = Node {
                list,
                prev: None,
                next: ends.head,
            };
            match ends.head {
                Some(h) => self.nodes.get_mut(&h).unwrap().prev = Some(id),
                None => ends.tail = Some(id),
            }
            ends.head = Some(id);
            node
        };
        ends.len += 1;
        self.nodes.insert(id, node);
    }

    /// Detaches `id` from whatever list holds it and returns that list.
    pub fn unlink(&mut self, id: FolioId) -> Option<u64> {
        let node = self.nodes.remove(&id)?;
        let ends = self.lists.get_mut(&node.list).expect("node on unknown list");
        match node.prev {
            Some(p) => self.nodes.get_mut(&p).unwrap().next = node.next,
            None => ends.head = node.next,
        }
        match node.next {
            Some(n) => self.nodes.get_mut(&n).unwrap().prev = node.prev,
            None => ends.tail = node.prev,
        }
        ends.len -= 1;
        Some(node.list)
    }

    /// Detach and re-link. Moving to the tail of the list it is already on
    /// is a rotation.
    pub fn relink(&mut self, list: u64, id: FolioId, tail: bool) {
        self.unlink(id);
        self.push(list, id, tail);
    }

    pub fn iter(&self, list: u64) -> Iter<'_> {
        Iter {
            store: self,
            cur: self.head(list),
        }
    }

    /// Walks every list in both directions and checks node/list agreement.
    pub fn check(&self) -> Result<(), String> {
        let mut seen = 0usize;
        for (&list, ends) in &self.lists {
            let mut prev = None;
            let mut cur = ends.head;
            let mut n = 0usize;
            while let Some(id) = cur {
                let node = self
                    .nodes
                    .get(&id)
                    .ok_or_else(|| format!("{id} linked from list {list} but has no node"))?;
                if node.list != list {
                    return Err(format!("{id} on list {list} claims list {}", node.list));
                }
                if node.prev != prev {
                    return Err(format!("{id} has bad prev link"));
                }
                prev = cur;
                cur = node.next;
                n += 1;
                if n > self.nodes.len() {
                    return Err(format!("cycle in list {list}"));
                }
            }
            if prev != ends.tail {
                return Err(format!("list {list} tail mismatch"));
            }
            if n != ends.len {
                return Err(format!("list {list} length {} but walked {n}", ends.len));
            }
            seen += n;
        }
        if seen != self.nodes.len() {
            return Err(format!("{} nodes but {seen} reachable", self.nodes.len()));
        }
        Ok(())
    }
}

pub(crate) struct Iter<'a> {
    store: &'a LinkedLists,
    cur: Option<FolioId>,
}

impl Iterator for Iter<'_> {
    type Item = FolioId;

    fn next(&mut self) -> Option<FolioId> {
        let id = self.cur?;
        self.cur = self.store.next(id);
        Some(id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(l: &LinkedLists, list: u64) -> Vec<u64> {
        l.iter(list).map(|f| f.0).collect()
    }

    #[test]
    fn push_head_and_tail() {
        let mut l = LinkedLists::default();
        l.create(7);
        l.push(7, FolioId(1), true);
        l.push(7, FolioId(2), true);
        l.push(7, FolioId(0), false);
        assert_eq!(ids(&l, 7), vec![0, 1, 2]);
        assert_eq!(l.len(7), 3);
        l.check().unwrap();
    }

    #[test]
    fn unlink_middle_and_ends() {
        let mut l = LinkedLists::default();
        l.create(1);
        for i in 0..5 {
            l.push(1, FolioId(i), true);
        }
        assert_eq!(l.unlink(FolioId(2)), Some(1));
        assert_eq!(l.unlink(FolioId(0)), Some(1));
        assert_eq!(l.unlink(FolioId(4)), Some(1));
        assert_eq!(l.unlink(FolioId(4)), None);
        assert_eq!(ids(&l, 1), vec![1, 3]);
        l.check().unwrap();
    }

    #[test]
    fn relink_across_lists() {
        let mut l = LinkedLists::default();
        l.create(1);
        l.create(2);
        l.push(1, FolioId(10), true);
        l.push(1, FolioId(11), true);
        l.relink(2, FolioId(10), true);
        l.relink(1, FolioId(11), true);
        assert_eq!(ids(&l, 1), vec![11]);
        assert_eq!(ids(&l, 2), vec![10]);
        assert_eq!(l.list_of(FolioId(10)), Some(2));
        l.check().unwrap();
    }
}
