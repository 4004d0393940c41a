//! Downward shortcuts: queue nodes of the binarised forest carry one
//! min-queue per level over their nearest descending queue nodes, so a
//! search for the cheapest level-`i` edge below a node can jump between
//! queue nodes instead of walking every node on the way down.
//!
//! A queue entry for descendant `v` at level `i` is keyed by the cheapest
//! level-`i` non-tree key below `v`, which the forest keeps in
//! `min_key[i]`. Queues are kept in sync by draining the forest's event log.

mod ledger;
pub mod queue;

use std::collections::{BTreeMap, HashSet};

use crate::cforest::{ClusterForest, NodeId, NodeKind, TopoEvent, TreeKind};
use crate::edge::{VertexId, WeightKey};
use crate::params::Thresholds;

pub use ledger::CreditLedger;
pub use queue::{BTreeQueue, IndexedHeap, MinQueue};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ShortcutStats {
    pub hops: u64,
    pub queue_ops: u64,
    pub searches: u64,
    pub rebuilds: u64,
    pub max_hops: u64,
    pub max_cluster_ndq: usize,
    pub hop_violations: u64,
    pub ndq_violations: u64,
}

#[derive(Clone, Debug)]
pub struct Shortcuts<Q = IndexedHeap<NodeId>> {
    th: Thresholds,
    levels: usize,
    is_queue: Vec<bool>,
    queues: Vec<Option<BTreeMap<u8, Q>>>,
    pub stats: ShortcutStats,
    pub ledger: CreditLedger,
}

/// True if `x` lies in the heavy tree of its cluster (rank nodes, path nodes
/// and heavy leaves).
fn in_heavy_tree(f: &ClusterForest, x: NodeId) -> bool {
    let node = f.node(x);
    match node.kind {
        NodeKind::HeavyRank | NodeKind::RankPath => true,
        NodeKind::Cluster | NodeKind::Vertex => match node.parent {
            Some(p) => {
                let pn = f.node(p);
                matches!(pn.kind, NodeKind::HeavyRank | NodeKind::RankPath)
                    || (pn.kind == NodeKind::Cluster && pn.children[0] == Some(x))
            }
            None => false,
        },
        _ => false,
    }
}

/// Queue-node classification.
pub fn classify(f: &ClusterForest, x: NodeId) -> bool {
    let q = f.thresholds().q.max(1);
    let node = f.node(x);
    let parent_kind = node.parent.map(|p| f.node(p).kind);
    let bst_leaf = matches!(
        parent_kind,
        Some(
            NodeKind::Buffer
                | NodeKind::BufferInner
                | NodeKind::Bottom
                | NodeKind::BottomInner
                | NodeKind::Top
                | NodeKind::TopInner
        )
    );
    let type2 = || {
        let Some(p) = node.parent else { return false };
        if !in_heavy_tree(f, x) {
            return false;
        }
        let r = node.rank as u32;
        let next_multiple = r.div_ceil(q) * q;
        next_multiple < f.node(p).rank as u32
    };
    match node.kind {
        NodeKind::Vertex | NodeKind::Buffer | NodeKind::Bottom | NodeKind::Top => true,
        NodeKind::BufferInner | NodeKind::BottomInner | NodeKind::TopInner => false,
        NodeKind::Cluster => (node.level as u32).is_multiple_of(q) || bst_leaf || type2(),
        NodeKind::LightRank => (node.rank as u32).is_multiple_of(q) || bst_leaf,
        NodeKind::HeavyRank | NodeKind::RankPath => type2(),
    }
}

impl<Q: MinQueue<NodeId>> Shortcuts<Q> {
    /// Classifies every node and builds all queues. Pending forest events
    /// are discarded; initial construction is not charged to the ledger.
    pub fn new(forest: &mut ClusterForest) -> Self {
        forest.take_events();
        let th = *forest.thresholds();
        let mut s = Shortcuts {
            th,
            levels: forest.levels(),
            is_queue: Vec::new(),
            queues: Vec::new(),
            stats: ShortcutStats::default(),
            ledger: CreditLedger::initial(forest),
        };
        s.grow(forest);
        let alive: Vec<NodeId> = forest.alive_nodes().collect();
        for &x in &alive {
            s.is_queue[x.index()] = classify(forest, x);
        }
        for &x in &alive {
            if s.is_queue[x.index()] {
                s.rebuild(forest, x);
            }
        }
        s.stats = ShortcutStats::default();
        s
    }

    fn grow(&mut self, forest: &ClusterForest) {
        let n = forest.node_count();
        if self.is_queue.len() < n {
            self.is_queue.resize(n, false);
            self.queues.resize_with(n, || None);
        }
    }

    pub fn is_queue_node(&self, x: NodeId) -> bool {
        self.is_queue.get(x.index()).copied().unwrap_or(false)
    }

    /// Entries of `Q_i(u)`, sorted by key.
    pub fn queue_entries(&self, u: NodeId, i: u8) -> Vec<(NodeId, WeightKey)> {
        self.queues
            .get(u.index())
            .and_then(|q| q.as_ref())
            .and_then(|m| m.get(&i))
            .map(|q| q.entries())
            .unwrap_or_default()
    }

    /// Levels with a non-empty queue at `u`.
    pub fn queue_levels(&self, u: NodeId) -> Vec<u8> {
        self.queues
            .get(u.index())
            .and_then(|q| q.as_ref())
            .map(|m| m.keys().copied().collect())
            .unwrap_or_default()
    }

    /// Nearest descending queue nodes of `u`, with the number of nodes visited.
    pub fn ndq(&self, forest: &ClusterForest, u: NodeId) -> (Vec<NodeId>, u64) {
        let mut out = Vec::new();
        let mut visits = 0;
        let mut stack: Vec<NodeId> = forest.node(u).child_iter().collect();
        while let Some(x) = stack.pop() {
            visits += 1;
            if self.is_queue[x.index()] {
                out.push(x);
            } else {
                stack.extend(forest.node(x).child_iter());
            }
        }
        out.sort();
        (out, visits)
    }

    fn nearest_queue_above(&self, forest: &ClusterForest, x: NodeId) -> Option<NodeId> {
        let mut y = forest.node(x).parent;
        while let Some(z) = y {
            if self.is_queue[z.index()] {
                return Some(z);
            }
            y = forest.node(z).parent;
        }
        None
    }

    fn nearest_queue_at_or_above(&self, forest: &ClusterForest, x: NodeId) -> Option<NodeId> {
        if self.is_queue[x.index()] {
            Some(x)
        } else {
            self.nearest_queue_above(forest, x)
        }
    }

    /// Rebuilds all queues of queue node `a` from its nearest descending
    /// queue nodes. Returns the work done (visits plus queue mutations).
    fn rebuild(&mut self, forest: &ClusterForest, a: NodeId) -> u64 {
        let (ndq, visits) = self.ndq(forest, a);
        if forest.node(a).kind == NodeKind::Cluster {
            self.stats.max_cluster_ndq = self.stats.max_cluster_ndq.max(ndq.len());
            if ndq.len() as f64 > self.th.ndq_cap {
                self.stats.ndq_violations += 1;
            }
        }
        let mut desired: BTreeMap<u8, Vec<(NodeId, WeightKey)>> = BTreeMap::new();
        for &d in &ndq {
            for (l, k) in forest.node(d).min_key.iter().enumerate() {
                if let Some(k) = *k {
                    desired.entry(l as u8).or_default().push((d, k));
                }
            }
        }
        let qs = self.queues[a.index()].get_or_insert_with(BTreeMap::new);
        let mut mutations = 0u64;
        let mut removals = 0u64;
        for (l, q) in qs.iter_mut() {
            let want = desired.get(l);
            for (item, _) in q.entries() {
                if !want.is_some_and(|w| w.iter().any(|&(d, _)| d == item)) {
                    q.remove(item);
                    removals += 1;
                }
            }
        }
        for (l, list) in desired {
            let q = qs.entry(l).or_default();
            for (d, k) in list {
                if q.get(d) != Some(k) {
                    q.upsert(d, k);
                    mutations += 1;
                }
            }
        }
        qs.retain(|_, q| !q.is_empty());
        self.stats.queue_ops += mutations + removals;
        self.stats.rebuilds += 1;
        visits + mutations
    }

    /// Refreshes the entry of queue node `z` in the queues of `a`.
    fn refresh_entry(&mut self, forest: &ClusterForest, a: NodeId, z: NodeId) -> u64 {
        let qs = self.queues[a.index()].get_or_insert_with(BTreeMap::new);
        let mut ops = 0;
        for (l, k) in forest.node(z).min_key.iter().enumerate() {
            let l = l as u8;
            match *k {
                Some(k) => {
                    let q = qs.entry(l).or_default();
                    if q.get(z) != Some(k) {
                        q.upsert(z, k);
                        ops += 1;
                    }
                }
                None => {
                    if let Some(q) = qs.get_mut(&l) {
                        if q.remove(z) {
                            ops += 1;
                            if q.is_empty() {
                                qs.remove(&l);
                            }
                        }
                    }
                }
            }
        }
        self.stats.queue_ops += ops;
        ops
    }

    fn drop_queues(&mut self, x: NodeId) {
        self.queues[x.index()] = None;
    }

    /// Applies all pending forest events to the queues.
    pub fn sync(&mut self, forest: &mut ClusterForest) {
        let events = forest.take_events();
        if events.is_empty() {
            return;
        }
        self.grow(forest);
        let mut touched = Vec::new();
        let mut reclass: Vec<NodeId> = Vec::new();
        let mut leaf_changes: Vec<(NodeId, NodeId, bool)> = Vec::new();
        let mut key_changed: Vec<NodeId> = Vec::new();
        for ev in events {
            match ev {
                TopoEvent::Touched(z) => {
                    touched.push(z);
                    reclass.push(z);
                    reclass.extend(forest.node(z).child_iter());
                }
                TopoEvent::Reparented(z) => reclass.push(z),
                TopoEvent::RankChanged(z) => {
                    reclass.push(z);
                    reclass.extend(forest.node(z).child_iter());
                }
                TopoEvent::Freed(z) => {
                    self.is_queue[z.index()] = false;
                    self.drop_queues(z);
                }
                TopoEvent::KeysChanged(z) => key_changed.push(z),
                TopoEvent::BstLeafAdded { root, leaf } => leaf_changes.push((root, leaf, true)),
                TopoEvent::BstLeafRemoved { root, leaf } => leaf_changes.push((root, leaf, false)),
                TopoEvent::LeafEntered { tree, .. } => {
                    self.ledger.deposits += match tree {
                        TreeKind::Heavy => self.th.heavy_leaf_credits(),
                        TreeKind::Buffer => self.th.buffer_leaf_credits(1),
                        TreeKind::Bottom => 1.0,
                    };
                }
                TopoEvent::BufferMoved { .. } => {}
            }
        }

        let mut full: HashSet<NodeId> = HashSet::new();
        let mut seen = HashSet::new();
        for z in reclass {
            if !forest.node(z).alive || !seen.insert(z) {
                continue;
            }
            let now = classify(forest, z);
            if now != self.is_queue[z.index()] {
                self.is_queue[z.index()] = now;
                if now {
                    full.insert(z);
                } else {
                    self.drop_queues(z);
                }
                if let Some(a) = self.nearest_queue_above(forest, z) {
                    full.insert(a);
                }
            }
        }
        for z in touched {
            if forest.node(z).alive {
                if let Some(a) = self.nearest_queue_at_or_above(forest, z) {
                    full.insert(a);
                }
            }
        }
        let mut work = 0u64;
        for (root, leaf, added) in leaf_changes {
            if !forest.node(root).alive || !self.is_queue[root.index()] || full.contains(&root) {
                continue;
            }
            if added {
                if forest.node(leaf).alive && forest.node(leaf).parent.is_some() {
                    work += self.refresh_entry(forest, root, leaf);
                }
            } else if let Some(qs) = self.queues[root.index()].as_mut() {
                for q in qs.values_mut() {
                    if q.remove(leaf) {
                        self.stats.queue_ops += 1;
                    }
                }
                qs.retain(|_, q| !q.is_empty());
            }
        }
        let mut full: Vec<NodeId> = full.into_iter().collect();
        full.sort();
        for &a in &full {
            if forest.node(a).alive && self.is_queue[a.index()] {
                work += self.rebuild(forest, a);
            }
        }
        self.ledger.spent += work as f64;
        let full: HashSet<NodeId> = full.into_iter().collect();
        let mut done = HashSet::new();
        for z in key_changed {
            if !forest.node(z).alive || !self.is_queue[z.index()] || !done.insert(z) {
                continue;
            }
            if let Some(a) = self.nearest_queue_above(forest, z) {
                if !full.contains(&a) {
                    self.refresh_entry(forest, a, z);
                }
            }
        }
    }

    /// Follows queue minima from `u` down to the vertex (or the two
    /// vertices, when both endpoints of the cheapest edge lie below `u`)
    /// carrying the cheapest level-`i` non-tree key.
    pub fn search(&mut self, forest: &ClusterForest, u: NodeId, i: u8) -> Option<Vec<VertexId>> {
        self.stats.searches += 1;
        if forest.node(u).kind == NodeKind::Vertex {
            return forest.node(u).min_key[i as usize].map(|_| vec![VertexId(u.0)]);
        }
        let mut hops = 0u64;
        let mut frontier: Vec<NodeId> = if self.is_queue[u.index()] {
            vec![u]
        } else {
            let (ndq, _) = self.ndq(forest, u);
            let best = ndq.iter().filter_map(|&d| forest.node(d).min_key[i as usize]).min()?;
            let picks: Vec<NodeId> = ndq
                .into_iter()
                .filter(|&d| forest.node(d).min_key[i as usize] == Some(best))
                .collect();
            hops += picks.len() as u64;
            picks
        };
        let mut leaves = Vec::new();
        while let Some(x) = frontier.pop() {
            if forest.node(x).kind == NodeKind::Vertex {
                leaves.push(VertexId(x.0));
                continue;
            }
            let q = self.queues[x.index()].as_ref().and_then(|m| m.get(&i));
            let Some(q) = q else {
                debug_assert!(x == u, "queue below a witnessed minimum is empty");
                break;
            };
            let [a, b] = q.peek_two();
            let (a_item, a_key) = a.expect("non-empty queue");
            frontier.push(a_item);
            hops += 1;
            if let Some((b_item, b_key)) = b {
                if b_key == a_key {
                    frontier.push(b_item);
                    hops += 1;
                }
            }
        }
        self.stats.hops += hops;
        self.stats.max_hops = self.stats.max_hops.max(hops);
        if hops as f64 > self.th.hop_cap {
            self.stats.hop_violations += 1;
        }
        if leaves.is_empty() {
            return None;
        }
        leaves.sort();
        Some(leaves)
    }

    /// Compares every queue with a from-scratch rebuild and checks the
    /// classification, the ledger and the configured caps.
    pub fn audit(&self, forest: &ClusterForest) -> Vec<String> {
        let mut errs = Vec::new();
        for x in forest.alive_nodes() {
            let want = classify(forest, x);
            if self.is_queue_node(x) != want {
                errs.push(format!("{x} classified {} but should be {want}", self.is_queue_node(x)));
                continue;
            }
            let stored = self.queues.get(x.index()).and_then(|q| q.as_ref());
            if !want {
                if stored.is_some_and(|m| !m.is_empty()) {
                    errs.push(format!("non-queue node {x} holds queues"));
                }
                continue;
            }
            let (ndq, _) = self.ndq(forest, x);
            for l in 0..self.levels as u8 {
                let mut expect: Vec<(NodeId, WeightKey)> = ndq
                    .iter()
                    .filter_map(|&d| forest.node(d).min_key[l as usize].map(|k| (d, k)))
                    .collect();
                expect.sort_by_key(|&(d, k)| (k, d));
                let got = self.queue_entries(x, l);
                if got != expect {
                    errs.push(format!("Q_{l}({x}) = {got:?}, rebuild gives {expect:?}"));
                }
            }
        }
        if self.ledger.balance() < -1e-9 {
            errs.push(format!("credit ledger negative: {:?}", self.ledger));
        }
        if self.ledger.endowment > self.ledger.endowment_bound + 1e-9 {
            errs.push(format!(
                "initial endowment {:.1} exceeds bound {:.1}",
                self.ledger.endowment, self.ledger.endowment_bound
            ));
        }
        if self.stats.hop_violations > 0 {
            errs.push(format!("{} searches exceeded the hop cap", self.stats.hop_violations));
        }
        if self.stats.ndq_violations > 0 {
            errs.push(format!(
                "{} cluster nodes exceeded the descendant cap",
                self.stats.ndq_violations
            ));
        }
        errs
    }
}
