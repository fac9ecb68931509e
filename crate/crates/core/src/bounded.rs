use std::collections::VecDeque;
use std::hash::Hash;

use rustc_hash::FxHashMap;

/// A map with a hard entry limit that forgets its least-recently inserted or
/// updated key when full.
///
/// Removals are lazy on the order queue: stale queue slots are skipped when
/// they reach the front, and the queue is compacted once it grows to twice
/// the live size.
#[derive(Clone, Debug)]
pub struct BoundedMap<K, V> {
    map: FxHashMap<K, (V, u64)>,
    order: VecDeque<(K, u64)>,
    capacity: usize,
    stamp: u64,
}

impl<K: Copy + Eq + Hash, V> BoundedMap<K, V> {
    pub fn new(capacity: usize) -> Self {
        Self {
            map: FxHashMap::default(),
            order: VecDeque::new(),
            capacity,
            stamp: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn contains(&self, key: &K) -> bool {
        self.map.contains_key(key)
    }

    pub fn get(&self, key: &K) -> Option<&V> {
        self.map.get(key).map(|(v, _)| v)
    }

    /// Inserts or refreshes `key`. Returns the key that was forgotten to make
    /// room, if any.
    pub fn insert(&mut self, key: K, value: V) -> Option<K> {
        if self.capacity == 0 {
            return None;
        }
        self.stamp += 1;
        let stamp = self.stamp;
        self.map.insert(key, (value, stamp));
        self.order.push_back((key, stamp));
        let mut dropped = None;
        while self.map.len() > self.capacity {
            let (old, s) = self.order.pop_front().expect("order queue underflow");
            if self.map.get(&old).is_some_and(|(_, live)| *live == s) {
                self.map.remove(&old);
                dropped = Some(old);
            }
        }
        if self.order.len() > 2 * self.map.len() + 16 {
            let map = &self.map;
            self.order
                .retain(|(k, s)| map.get(k).is_some_and(|(_, live)| live == s));
        }
        dropped
    }

    pub fn remove(&mut self, key: &K) -> Option<V> {
        self.map.remove(key).map(|(v, _)| v)
    }
}
