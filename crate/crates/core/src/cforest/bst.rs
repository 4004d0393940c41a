//! Leaf-oriented scapegoat search trees used for buffer, bottom and top trees.
//!
//! The root node is persistent: it is created once per tree and keeps its
//! identity through rebuilds, so queues stored on it stay attached. Leaves
//! are ordered by `(n, id)`. Inner nodes carry the largest key of their left
//! subtree as routing key. Sizes are maintained eagerly.

use super::{ClusterForest, NodeId, NodeKind, TopoEvent};

/// Scapegoat balance factor.
const ALPHA: f64 = 0.7;

impl ClusterForest {
    #[inline]
    pub(crate) fn leaf_key(&self, x: NodeId) -> u64 {
        ((self.node(x).n as u64) << 32) | x.0 as u64
    }

    #[inline]
    fn is_bst_internal(&self, x: NodeId) -> bool {
        self.node(x).kind.is_bst_inner()
    }

    #[inline]
    fn bst_weight(&self, x: NodeId) -> u32 {
        if self.is_bst_internal(x) {
            self.node(x).size
        } else {
            1
        }
    }

    /// Leaves below a search-tree root or inner node, in order.
    pub fn bst_leaves(&self, x: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![x];
        while let Some(y) = stack.pop() {
            let node = self.node(y);
            if y == x || node.kind.is_bst_inner() {
                if let Some(r) = node.children[1] {
                    stack.push(r);
                }
                if let Some(l) = node.children[0] {
                    stack.push(l);
                }
            } else {
                out.push(y);
            }
        }
        out
    }

    /// Leaves of the tree rooted at `root` from the right, for as long as
    /// `keep` holds.
    pub(crate) fn bst_leaves_desc_while(
        &mut self,
        root: NodeId,
        mut keep: impl FnMut(&Self, NodeId) -> bool,
    ) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![root];
        while let Some(y) = stack.pop() {
            self.stats.scan_visits += 1;
            let node = self.node(y);
            if y == root || node.kind.is_bst_inner() {
                if let Some(l) = node.children[0] {
                    stack.push(l);
                }
                if let Some(r) = node.children[1] {
                    stack.push(r);
                }
            } else if keep(self, y) {
                out.push(y);
            } else {
                break;
            }
        }
        out
    }

    /// Root of the search tree containing leaf `x`.
    pub(crate) fn bst_root_of(&self, x: NodeId) -> NodeId {
        let mut y = self.node(x).parent.expect("leaf has a parent");
        while self.node(y).kind.is_bst_inner() {
            y = self.node(y).parent.expect("inner node has a parent");
        }
        y
    }

    /// Builds a balanced subtree over sorted `leaves`; returns its top node.
    fn bst_build(&mut self, leaves: &[NodeId], inner: NodeKind, level: u8) -> NodeId {
        if leaves.len() == 1 {
            return leaves[0];
        }
        let mid = leaves.len() / 2;
        let l = self.bst_build(&leaves[..mid], inner, level);
        let r = self.bst_build(&leaves[mid..], inner, level);
        let m = self.alloc(inner, level);
        let route = self.leaf_key(leaves[mid - 1]);
        let node = self.node_mut(m);
        node.route = route;
        node.size = leaves.len() as u32;
        self.set_children(m, [Some(l), Some(r)]);
        m
    }

    /// Lays out sorted `leaves` below `x` (a root or an inner node whose old
    /// inner descendants have already been freed).
    fn bst_fill(&mut self, x: NodeId, leaves: &[NodeId]) {
        let inner = self.node(x).kind.inner_of();
        let level = self.node(x).level;
        match leaves.len() {
            0 => {
                self.node_mut(x).children = [None, None];
                self.agg_dirty.push(x);
            }
            1 => self.set_children(x, [Some(leaves[0]), None]),
            len => {
                let mid = len / 2;
                let l = self.bst_build(&leaves[..mid], inner, level);
                let r = self.bst_build(&leaves[mid..], inner, level);
                self.node_mut(x).route = self.leaf_key(leaves[mid - 1]);
                self.set_children(x, [Some(l), Some(r)]);
            }
        }
        self.node_mut(x).size = leaves.len() as u32;
    }

    fn free_inner_below(&mut self, x: NodeId) {
        let mut stack: Vec<NodeId> = self.node(x).child_iter().collect();
        while let Some(y) = stack.pop() {
            if self.node(y).kind.is_bst_inner() {
                stack.extend(self.node(y).child_iter());
                self.free(y);
            }
        }
    }

    /// Replaces the contents of tree `root` by `leaves` (sorted by the caller).
    pub(crate) fn bst_set_leaves(&mut self, root: NodeId, leaves: &[NodeId]) {
        self.free_inner_below(root);
        self.bst_fill(root, leaves);
        let node = self.node_mut(root);
        node.high_water = leaves.len() as u32;
    }

    fn bst_rebuild_at(&mut self, x: NodeId) {
        let leaves = self.bst_leaves(x);
        self.free_inner_below(x);
        self.bst_fill(x, &leaves);
        if !self.is_bst_internal(x) {
            self.node_mut(x).high_water = leaves.len() as u32;
        }
    }

    /// Inserts `leaf` (currently detached) into the keyed tree at `root`.
    pub(crate) fn bst_insert(&mut self, root: NodeId, leaf: NodeId) {
        let key = self.leaf_key(leaf);
        let size = self.node(root).size;
        match size {
            0 => {
                self.set_children(root, [Some(leaf), None]);
                self.node_mut(root).size = 1;
            }
            1 => {
                let a = self.node(root).children[0].expect("one leaf");
                let (l, r) = if key < self.leaf_key(a) { (leaf, a) } else { (a, leaf) };
                self.node_mut(root).route = self.leaf_key(l);
                self.set_children(root, [Some(l), Some(r)]);
                self.node_mut(root).size = 2;
            }
            _ => {
                let inner = self.node(root).kind.inner_of();
                let level = self.node(root).level;
                let mut path = vec![root];
                let mut x = root;
                loop {
                    let side = if key <= self.node(x).route { 0 } else { 1 };
                    let c = self.node(x).children[side].expect("full inner node");
                    if self.is_bst_internal(c) {
                        path.push(c);
                        x = c;
                        continue;
                    }
                    let m = self.alloc(inner, level);
                    let (l, r) = if key < self.leaf_key(c) { (leaf, c) } else { (c, leaf) };
                    self.node_mut(m).route = self.leaf_key(l);
                    self.node_mut(m).size = 2;
                    self.set_children(m, [Some(l), Some(r)]);
                    self.node_mut(x).children[side] = Some(m);
                    self.node_mut(m).parent = Some(x);
                    self.agg_dirty.push(x);
                    path.push(m);
                    break;
                }
                for &p in &path[..path.len() - 1] {
                    self.node_mut(p).size += 1;
                }
                let new_size = self.node(root).size;
                let depth = path.len();
                let limit = ((new_size as f64).ln() / (1.0 / ALPHA).ln()).floor() as usize + 1;
                if depth > limit {
                    let goat = path
                        .iter()
                        .rev()
                        .copied()
                        .find(|&y| {
                            let node = self.node(y);
                            let big = node
                                .child_iter()
                                .map(|c| self.bst_weight(c))
                                .max()
                                .unwrap_or(0);
                            big as f64 > ALPHA * node.size as f64
                        })
                        .unwrap_or(root);
                    self.bst_rebuild_at(goat);
                }
            }
        }
        let node = self.node_mut(root);
        node.high_water = node.high_water.max(node.size);
        self.emit(TopoEvent::BstLeafAdded { root, leaf });
    }

    /// Removes `leaf` from its keyed tree; returns the tree root.
    pub(crate) fn bst_remove(&mut self, leaf: NodeId) -> NodeId {
        let root = self.bst_root_of(leaf);
        let q = self.node(leaf).parent.expect("leaf has a parent");
        let sibling = self
            .node(q)
            .child_iter()
            .find(|&c| c != leaf);
        if q == root {
            match sibling {
                None => self.node_mut(root).children = [None, None],
                Some(o) if !self.is_bst_internal(o) => {
                    self.node_mut(root).children = [Some(o), None];
                }
                Some(o) => {
                    let ch = self.node(o).children;
                    let route = self.node(o).route;
                    self.free(o);
                    self.node_mut(root).route = route;
                    for c in ch.into_iter().flatten() {
                        self.node_mut(c).parent = Some(root);
                    }
                    self.node_mut(root).children = ch;
                }
            }
            self.node_mut(root).size -= 1;
        } else {
            let o = sibling.expect("inner node has two children");
            let g = self.node(q).parent.expect("inner node has a parent");
            let slot = self
                .node(g)
                .children
                .iter()
                .position(|&c| c == Some(q))
                .expect("parent links back");
            self.free(q);
            self.node_mut(g).children[slot] = Some(o);
            self.node_mut(o).parent = Some(g);
            let mut y = Some(g);
            while let Some(z) = y {
                self.node_mut(z).size -= 1;
                if z == root {
                    break;
                }
                y = self.node(z).parent;
            }
            self.agg_dirty.push(g);
        }
        self.node_mut(leaf).parent = None;
        self.agg_dirty.push(root);
        let node = self.node(root);
        if (node.size as f64) < ALPHA * node.high_water as f64 {
            self.bst_rebuild_at(root);
        }
        self.emit(TopoEvent::BstLeafRemoved { root, leaf });
        root
    }

    /// Balanced, key-free tree over `leaves` below the top root `top`.
    pub(crate) fn top_fill(&mut self, top: NodeId, leaves: &[NodeId]) {
        self.free_inner_below(top);
        self.bst_fill(top, leaves);
        self.emit(TopoEvent::Touched(top));
    }
}

#[cfg(test)]
mod tests {
    use super::super::{ClusterForest, NodeId, NodeKind};
    use crate::params::Params;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn depth_below(f: &ClusterForest, root: NodeId, leaf: NodeId) -> usize {
        let mut d = 0;
        let mut x = leaf;
        while x != root {
            x = f.node(x).parent.unwrap();
            d += 1;
        }
        d
    }

    #[test]
    fn keyed_tree_tracks_sorted_set() {
        let n = 300;
        let th = Params::default().thresholds(n);
        let mut f = ClusterForest::new(n, th, false);
        let root = f.alloc(NodeKind::Buffer, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut ids: Vec<u32> = (0..n as u32).collect();
        ids.shuffle(&mut rng);
        let mut present: Vec<NodeId> = Vec::new();
        for (step, &v) in ids.iter().enumerate() {
            f.bst_insert(root, NodeId(v));
            present.push(NodeId(v));
            if step % 3 == 2 {
                let k = present.swap_remove(step % present.len());
                f.bst_remove(k);
            }
            let mut want = present.clone();
            want.sort_by_key(|&x| f.leaf_key(x));
            assert_eq!(f.bst_leaves(root), want);
            assert_eq!(f.node(root).size as usize, want.len());
        }
        // depth bound of a scapegoat tree
        let size = f.node(root).size as f64;
        let bound = (size.ln() / (1.0f64 / 0.7).ln()).floor() as usize + 2;
        for &x in &present {
            assert!(depth_below(&f, root, x) <= bound);
        }
        while let Some(x) = present.pop() {
            f.bst_remove(x);
        }
        assert!(f.node(root).is_leaf());
        assert_eq!(f.node(root).size, 0);
    }

    #[test]
    fn descending_scan_stops_early() {
        let th = Params::default().thresholds(20);
        let mut f = ClusterForest::new(20, th, false);
        let root = f.alloc(NodeKind::Bottom, 0);
        for v in 0..20 {
            f.bst_insert(root, NodeId(v));
        }
        let got = f.bst_leaves_desc_while(root, |_, x| x.0 >= 15);
        assert_eq!(got, (15..20).rev().map(NodeId).collect::<Vec<_>>());
    }
}
