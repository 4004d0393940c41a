//! Addressable min-queues keyed by `WeightKey`, addressed by item id.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Debug;
use std::hash::Hash;

use crate::edge::WeightKey;

/// An addressable min-queue. Each item appears at most once.
pub trait MinQueue<T: Copy + Eq + Hash + Ord + Debug>: Default + Clone + Debug {
    /// Inserts `item` or changes its key if already present.
    fn upsert(&mut self, item: T, key: WeightKey);
    fn remove(&mut self, item: T) -> bool;
    fn get(&self, item: T) -> Option<WeightKey>;
    /// The minimum entry and one entry that is minimal among the rest.
    fn peek_two(&self) -> [Option<(T, WeightKey)>; 2];
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn peek_min(&self) -> Option<(T, WeightKey)> {
        self.peek_two()[0]
    }

    /// All entries sorted by key, then item.
    fn entries(&self) -> Vec<(T, WeightKey)>;
}

/// Binary heap with a position index for `O(log k)` updates.
#[derive(Clone, Debug)]
pub struct IndexedHeap<T> {
    heap: Vec<(WeightKey, T)>,
    pos: HashMap<T, usize>,
}

impl<T> Default for IndexedHeap<T> {
    fn default() -> Self {
        IndexedHeap {
            heap: Vec::new(),
            pos: HashMap::new(),
        }
    }
}

impl<T: Copy + Eq + Hash + Ord + Debug> IndexedHeap<T> {
    fn swap(&mut self, a: usize, b: usize) {
        self.heap.swap(a, b);
        self.pos.insert(self.heap[a].1, a);
        self.pos.insert(self.heap[b].1, b);
    }

    fn sift_up(&mut self, mut i: usize) {
        while i > 0 {
            let p = (i - 1) / 2;
            if self.heap[i].0 < self.heap[p].0 {
                self.swap(i, p);
                i = p;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        loop {
            let l = 2 * i + 1;
            let r = l + 1;
            let mut m = i;
            if l < self.heap.len() && self.heap[l].0 < self.heap[m].0 {
                m = l;
            }
            if r < self.heap.len() && self.heap[r].0 < self.heap[m].0 {
                m = r;
            }
            if m == i {
                break;
            }
            self.swap(i, m);
            i = m;
        }
    }
}

impl<T: Copy + Eq + Hash + Ord + Debug> MinQueue<T> for IndexedHeap<T> {
    fn upsert(&mut self, item: T, key: WeightKey) {
        match self.pos.get(&item) {
            Some(&i) => {
                let old = self.heap[i].0;
                self.heap[i].0 = key;
                if key < old {
                    self.sift_up(i);
                } else {
                    self.sift_down(i);
                }
            }
            None => {
                self.heap.push((key, item));
                let i = self.heap.len() - 1;
                self.pos.insert(item, i);
                self.sift_up(i);
            }
        }
    }

    fn remove(&mut self, item: T) -> bool {
        let Some(i) = self.pos.remove(&item) else {
            return false;
        };
        let last = self.heap.len() - 1;
        if i != last {
            self.heap.swap(i, last);
            self.pos.insert(self.heap[i].1, i);
        }
        self.heap.pop();
        if i < self.heap.len() {
            let moved = self.heap[i].1;
            self.sift_up(i);
            let j = self.pos[&moved];
            self.sift_down(j);
        }
        true
    }

    fn get(&self, item: T) -> Option<WeightKey> {
        self.pos.get(&item).map(|&i| self.heap[i].0)
    }

    fn peek_two(&self) -> [Option<(T, WeightKey)>; 2] {
        let first = self.heap.first().map(|&(k, t)| (t, k));
        let second = [1, 2]
            .iter()
            .filter_map(|&i| self.heap.get(i))
            .min_by_key(|e| e.0)
            .map(|&(k, t)| (t, k));
        [first, second]
    }

    fn len(&self) -> usize {
        self.heap.len()
    }

    fn entries(&self) -> Vec<(T, WeightKey)> {
        let mut v: Vec<(T, WeightKey)> = self.heap.iter().map(|&(k, t)| (t, k)).collect();
        v.sort_by_key(|&(t, k)| (k, t));
        v
    }
}

/// Ordered-set queue; the second plug-in.
#[derive(Clone, Debug)]
pub struct BTreeQueue<T> {
    set: BTreeSet<(WeightKey, T)>,
    keys: HashMap<T, WeightKey>,
}

impl<T> Default for BTreeQueue<T> {
    fn default() -> Self {
        BTreeQueue {
            set: BTreeSet::new(),
            keys: HashMap::new(),
        }
    }
}

impl<T: Copy + Eq + Hash + Ord + Debug> MinQueue<T> for BTreeQueue<T> {
    fn upsert(&mut self, item: T, key: WeightKey) {
        if let Some(old) = self.keys.insert(item, key) {
            self.set.remove(&(old, item));
        }
        self.set.insert((key, item));
    }

    fn remove(&mut self, item: T) -> bool {
        match self.keys.remove(&item) {
            Some(k) => {
                self.set.remove(&(k, item));
                true
            }
            None => false,
        }
    }

    fn get(&self, item: T) -> Option<WeightKey> {
        self.keys.get(&item).copied()
    }

    fn peek_two(&self) -> [Option<(T, WeightKey)>; 2] {
        let mut it = self.set.iter().map(|&(k, t)| (t, k));
        [it.next(), it.next()]
    }

    fn len(&self) -> usize {
        self.set.len()
    }

    fn entries(&self) -> Vec<(T, WeightKey)> {
        self.set.iter().map(|&(k, t)| (t, k)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[derive(Clone, Debug)]
    enum Op {
        Upsert(u8, u8),
        Remove(u8),
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            (0u8..16, 0u8..8).prop_map(|(i, k)| Op::Upsert(i, k)),
            (0u8..16).prop_map(Op::Remove),
        ]
    }

    fn check<Q: MinQueue<u8>>(ops: &[Op]) {
        let mut q = Q::default();
        let mut model: std::collections::BTreeMap<u8, WeightKey> = Default::default();
        for o in ops {
            match *o {
                Op::Upsert(i, k) => {
                    // equal ranks are allowed; tiebreak keeps distinct items distinguishable
                    let key = WeightKey::real(k as u64, 0);
                    q.upsert(i, key);
                    model.insert(i, key);
                }
                Op::Remove(i) => {
                    assert_eq!(q.remove(i), model.remove(&i).is_some());
                }
            }
            assert_eq!(q.len(), model.len());
            let min = model.values().min().copied();
            assert_eq!(q.peek_min().map(|e| e.1), min);
            let [a, b] = q.peek_two();
            if let (Some(a), Some(b)) = (a, b) {
                assert_ne!(a.0, b.0);
                let mut ks: Vec<WeightKey> = model.values().copied().collect();
                ks.sort();
                assert_eq!(b.1, ks[1]);
            }
            let mut want: Vec<(u8, WeightKey)> = model.iter().map(|(&i, &k)| (i, k)).collect();
            want.sort_by_key(|&(t, k)| (k, t));
            assert_eq!(q.entries(), want);
        }
    }

    proptest! {
        #[test]
        fn heap_matches_model(ops in prop::collection::vec(op(), 0..200)) {
            check::<IndexedHeap<u8>>(&ops);
        }

        #[test]
        fn btree_matches_model(ops in prop::collection::vec(op(), 0..200)) {
            check::<BTreeQueue<u8>>(&ops);
        }
    }
}
