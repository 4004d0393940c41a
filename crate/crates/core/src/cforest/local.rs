//! Local tree maintenance: heavy trees, buffer/bottom trees, rank pairing,
//! and the merge, split and initial-build operations built on them.

use std::collections::BTreeMap;

use super::{ClusterForest, LocalTree, NodeId, NodeKind, TopoEvent, TreeKind};
use crate::edge::VertexId;
use crate::error::{Error, Result};
use crate::params::floor_log2;

impl ClusterForest {
    pub(crate) fn local(&self, u: NodeId) -> &LocalTree {
        self.locals[u.index()].as_ref().expect("cluster has a local tree")
    }

    fn local_mut(&mut self, u: NodeId) -> &mut LocalTree {
        self.locals[u.index()].as_mut().expect("cluster has a local tree")
    }

    /// Heavy rank-tree roots, buffer root, bottom roots and top root of `u`.
    pub fn local_summary(&self, u: NodeId) -> (Vec<NodeId>, NodeId, Vec<NodeId>, NodeId) {
        let lt = self.local(u);
        (lt.heavy_roots.clone(), lt.buffer, lt.bottoms.clone(), lt.top)
    }

    fn new_cluster(&mut self, level: u8, n: u32) -> NodeId {
        let u = self.alloc(NodeKind::Cluster, level);
        self.node_mut(u).n = n;
        self.node_mut(u).rank = floor_log2(n.max(1) as u64) as u8;
        let buffer = self.alloc(NodeKind::Buffer, level);
        let top = self.alloc(NodeKind::Top, level);
        self.locals[u.index()] = Some(LocalTree {
            buffer,
            top,
            ..LocalTree::default()
        });
        self.top_fill(top, &[buffer]);
        self.set_children(u, [None, Some(top)]);
        u
    }

    /// Pairs equal-rank roots smallest rank first until all ranks differ.
    fn pair(&mut self, roots: Vec<NodeId>, kind: NodeKind, level: u8) -> Vec<NodeId> {
        let mut buckets: BTreeMap<u8, Vec<NodeId>> = BTreeMap::new();
        for r in roots {
            buckets.entry(self.node(r).rank).or_default().push(r);
        }
        let mut out = Vec::new();
        while let Some((rank, mut v)) = buckets.pop_first() {
            v.sort();
            let mut it = v.chunks_exact(2);
            for pair in &mut it {
                let m = self.alloc(kind, level);
                self.node_mut(m).rank = rank + 1;
                self.set_children(m, [Some(pair[0]), Some(pair[1])]);
                buckets.entry(rank + 1).or_default().push(m);
            }
            out.extend_from_slice(it.remainder());
        }
        out
    }

    fn free_path(&mut self, u: NodeId) {
        let path = std::mem::take(&mut self.local_mut(u).path);
        for p in path {
            self.free(p);
        }
    }

    /// Pairs `roots` into rank trees and strings them on a fresh rank path.
    /// The old path must already be freed.
    fn heavy_layout(&mut self, u: NodeId, roots: Vec<NodeId>) {
        let level = self.node(u).level;
        let mut roots = self.pair(roots, NodeKind::HeavyRank, level);
        roots.sort_by_key(|&r| std::cmp::Reverse((self.node(r).rank, r)));
        let mut path = Vec::new();
        let top = match roots.len() {
            0 => None,
            1 => Some(roots[0]),
            len => {
                let mut cur = roots[len - 1];
                for k in (0..len - 1).rev() {
                    let p = self.alloc(NodeKind::RankPath, level);
                    self.node_mut(p).rank = self.node(roots[k]).rank;
                    self.set_children(p, [Some(roots[k]), Some(cur)]);
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                Some(cur)
            }
        };
        let lt = self.local_mut(u);
        lt.heavy_roots = roots;
        lt.path = path;
        let top_root = lt.top;
        if let Some(t) = top {
            self.node_mut(t).parent = None;
        }
        self.set_children(u, [top, Some(top_root)]);
    }

    /// Cuts `leaf` out of its heavy rank tree. Returns the root of the tree
    /// it was in and the subtrees left behind.
    fn heavy_strip(&mut self, leaf: NodeId) -> (NodeId, Vec<NodeId>) {
        let mut sibs = Vec::new();
        let mut x = leaf;
        while let Some(p) = self.node(x).parent {
            if self.node(p).kind != NodeKind::HeavyRank {
                break;
            }
            let s = self.node(p).child_iter().find(|&c| c != x).expect("rank nodes are full");
            sibs.push(s);
            x = p;
        }
        let root = x;
        let mut y = leaf;
        while y != root {
            let p = self.node(y).parent.expect("chain");
            y = p;
            self.free(p);
        }
        self.node_mut(leaf).parent = None;
        for &s in &sibs {
            self.node_mut(s).parent = None;
        }
        (root, sibs)
    }

    fn heavy_remove(&mut self, u: NodeId, leaf: NodeId) {
        self.free_path(u);
        let (old, sibs) = self.heavy_strip(leaf);
        let mut roots = std::mem::take(&mut self.local_mut(u).heavy_roots);
        roots.retain(|&r| r != old);
        roots.extend(sibs);
        self.heavy_layout(u, roots);
    }

    fn heavy_insert(&mut self, u: NodeId, leaf: NodeId, deposit: bool) {
        self.free_path(u);
        let mut roots = std::mem::take(&mut self.local_mut(u).heavy_roots);
        roots.push(leaf);
        self.heavy_layout(u, roots);
        if deposit {
            self.emit(TopoEvent::LeafEntered {
                leaf,
                tree: TreeKind::Heavy,
                size_after: 0,
            });
        }
    }

    /// Leaves of the heavy tree of `u`.
    pub fn heavy_leaves(&self, u: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack: Vec<NodeId> = self.local(u).heavy_roots.clone();
        while let Some(x) = stack.pop() {
            let node = self.node(x);
            if node.kind == NodeKind::HeavyRank {
                stack.extend(node.child_iter());
            } else {
                out.push(x);
            }
        }
        out
    }

    /// Re-pairs the light rank trees and rebuilds the top tree.
    fn light_layout(&mut self, u: NodeId) {
        let level = self.node(u).level;
        let roots = std::mem::take(&mut self.local_mut(u).light_roots);
        for &r in &roots {
            self.node_mut(r).parent = None;
        }
        let mut roots = self.pair(roots, NodeKind::LightRank, level);
        roots.sort_by_key(|&r| (self.node(r).rank, r));
        let lt = self.local_mut(u);
        lt.light_roots = roots.clone();
        let (buffer, top) = (lt.buffer, lt.top);
        self.node_mut(buffer).parent = None;
        let mut leaves = vec![buffer];
        leaves.extend(roots);
        self.top_fill(top, &leaves);
    }

    /// Cuts bottom root `b` out of its light rank tree.
    fn light_strip(&mut self, u: NodeId, b: NodeId) {
        let mut sibs = Vec::new();
        let mut x = b;
        let mut freed = Vec::new();
        while let Some(p) = self.node(x).parent {
            if self.node(p).kind != NodeKind::LightRank {
                break;
            }
            sibs.push(self.node(p).child_iter().find(|&c| c != x).expect("rank nodes are full"));
            freed.push(p);
            x = p;
        }
        let old = x;
        for p in freed {
            self.free(p);
        }
        self.node_mut(b).parent = None;
        let lt = self.local_mut(u);
        lt.light_roots.retain(|&r| r != old);
        lt.light_roots.extend(sibs);
    }

    fn bottom_remove(&mut self, u: NodeId, leaf: NodeId) {
        let b = self.bst_root_of(leaf);
        self.bst_remove(leaf);
        self.flush_aggregates();
        if self.node(b).size == 0 {
            self.light_strip(u, b);
            self.local_mut(u).bottoms.retain(|&x| x != b);
            self.free(b);
            self.light_layout(u);
            return;
        }
        // the leaf's size may have shrunk before removal, so compare with
        // the rank the pairing was built for rather than the old stored rank
        let rank = self.node(b).rank;
        let parent = self.node(b).parent.expect("bottom tree is attached");
        let stale = if self.node(parent).kind == NodeKind::LightRank {
            self.node(parent).rank != rank + 1
        } else {
            self.local(u)
                .light_roots
                .iter()
                .any(|&r| r != b && self.node(r).rank == rank)
        };
        if stale {
            self.light_strip(u, b);
            self.local_mut(u).light_roots.push(b);
            self.light_layout(u);
        }
    }

    /// Turns the full buffer of `u` into a bottom tree and starts a new one.
    fn retire_buffer(&mut self, u: NodeId) {
        self.flush_aggregates();
        let level = self.node(u).level;
        let old = self.local(u).buffer;
        self.node_mut(old).kind = NodeKind::Bottom;
        let mut stack: Vec<NodeId> = self.node(old).child_iter().collect();
        while let Some(y) = stack.pop() {
            if self.node(y).kind == NodeKind::BufferInner {
                self.node_mut(y).kind = NodeKind::BottomInner;
                stack.extend(self.node(y).child_iter());
            }
        }
        let fresh = self.alloc(NodeKind::Buffer, level);
        let lt = self.local_mut(u);
        lt.buffer = fresh;
        lt.bottoms.push(old);
        lt.light_roots.push(old);
        self.light_layout(u);
    }

    fn buffer_insert(&mut self, u: NodeId, leaf: NodeId, deposit: bool) {
        if self.node(self.local(u).buffer).size as usize >= self.thresholds().s_max {
            self.retire_buffer(u);
        }
        let buf = self.local(u).buffer;
        self.bst_insert(buf, leaf);
        if deposit {
            let size_after = self.node(buf).size as usize;
            self.emit(TopoEvent::LeafEntered {
                leaf,
                tree: TreeKind::Buffer,
                size_after,
            });
        }
    }

    /// Removes child `c` (a cluster node or vertex) from the local tree of `u`.
    pub(crate) fn remove_child(&mut self, u: NodeId, c: NodeId) {
        let p = self.node(c).parent.expect("child is attached");
        match self.node(p).kind {
            NodeKind::Buffer | NodeKind::BufferInner => {
                self.bst_remove(c);
            }
            NodeKind::Bottom | NodeKind::BottomInner => self.bottom_remove(u, c),
            NodeKind::HeavyRank | NodeKind::RankPath | NodeKind::Cluster => {
                self.heavy_remove(u, c)
            }
            k => panic!("unexpected parent kind {k:?} of a cluster child"),
        }
    }

    /// Inserts detached child `c` into the local tree of `u`, whose size
    /// once `c` is in place is `u_n`.
    pub(crate) fn insert_child(&mut self, u: NodeId, c: NodeId, u_n: u32) {
        if self.thresholds().is_heavy(self.node(c).n, u_n) {
            self.heavy_insert(u, c, true);
        } else {
            self.buffer_insert(u, c, true);
        }
    }

    /// Merges sibling cluster nodes into one new child of their parent.
    ///
    /// The children of the merged nodes become children of the new node.
    /// Vertex leaves among the inputs become children of the new node too.
    pub fn merge_clusters(&mut self, nodes: &[NodeId]) -> Result<NodeId> {
        let mut nodes = nodes.to_vec();
        nodes.sort();
        nodes.dedup();
        let first = *nodes.first().ok_or(Error::NotSiblings)?;
        for &c in &nodes {
            let node = self.node(c);
            if !node.alive || !matches!(node.kind, NodeKind::Cluster | NodeKind::Vertex) {
                return Err(Error::NotSiblings);
            }
        }
        let p = self.cluster_parent(first).ok_or(Error::NotSiblings)?;
        for &c in &nodes[1..] {
            if self.cluster_parent(c) != Some(p) {
                return Err(Error::NotSiblings);
            }
        }
        if nodes.len() == 1 {
            return Ok(first);
        }
        self.flush_aggregates();
        let level = self.node(p).level + 1;
        let p_n = self.node(p).n;
        let total: u32 = nodes.iter().map(|&c| self.node(c).n).sum();
        for &c in &nodes {
            self.remove_child(p, c);
        }

        let mut heavy_roots = Vec::new();
        let mut buffers = Vec::new();
        let mut bottoms = Vec::new();
        let mut light_roots = Vec::new();
        let mut singles = Vec::new();
        for &c in &nodes {
            if self.node(c).kind == NodeKind::Vertex {
                singles.push(c);
                continue;
            }
            self.free_path(c);
            let lt = self.locals[c.index()].take().expect("cluster has a local tree");
            heavy_roots.extend(lt.heavy_roots);
            buffers.push(lt.buffer);
            bottoms.extend(lt.bottoms);
            light_roots.extend(lt.light_roots);
            let top = lt.top;
            let mut stack: Vec<NodeId> = self.node(top).child_iter().collect();
            while let Some(y) = stack.pop() {
                if self.node(y).kind == NodeKind::TopInner {
                    stack.extend(self.node(y).child_iter());
                    self.free(y);
                }
            }
            self.free(top);
            self.free(c);
        }
        for &r in heavy_roots.iter().chain(&light_roots).chain(&buffers) {
            self.node_mut(r).parent = None;
        }

        let w = self.alloc(NodeKind::Cluster, level);
        self.node_mut(w).n = total;
        self.node_mut(w).rank = floor_log2(total as u64) as u8;

        // heavy leaves that turned light
        let mut demoted = Vec::new();
        let mut stack = heavy_roots.clone();
        let mut leaves = Vec::new();
        while let Some(x) = stack.pop() {
            if self.node(x).kind == NodeKind::HeavyRank {
                stack.extend(self.node(x).child_iter());
            } else {
                leaves.push(x);
            }
        }
        leaves.sort();
        for x in leaves {
            if !self.thresholds().is_heavy(self.node(x).n, total) {
                let (old, sibs) = self.heavy_strip(x);
                heavy_roots.retain(|&r| r != old);
                heavy_roots.extend(sibs);
                demoted.push(x);
            }
        }
        for &v in &singles {
            if self.thresholds().is_heavy(1, total) {
                heavy_roots.push(v);
            } else {
                demoted.push(v);
            }
        }

        buffers.sort_by_key(|&b| std::cmp::Reverse((self.node(b).size, b)));
        let base = match buffers.first() {
            Some(&b) => b,
            None => self.alloc(NodeKind::Buffer, level),
        };
        let top = self.alloc(NodeKind::Top, level);
        self.locals[w.index()] = Some(LocalTree {
            buffer: base,
            top,
            bottoms,
            light_roots,
            ..LocalTree::default()
        });
        self.set_children(w, [None, Some(top)]);
        self.heavy_layout(w, heavy_roots);
        for leaf in self.heavy_leaves(w) {
            self.emit(TopoEvent::LeafEntered {
                leaf,
                tree: TreeKind::Heavy,
                size_after: 0,
            });
        }
        self.light_layout(w);
        // smaller buffers are poured into the largest one, smallest first
        for &b in buffers.iter().skip(1).rev() {
            let moved = self.bst_leaves(b);
            let mut stack: Vec<NodeId> = self.node(b).child_iter().collect();
            while let Some(y) = stack.pop() {
                if self.node(y).kind == NodeKind::BufferInner {
                    stack.extend(self.node(y).child_iter());
                    self.free(y);
                }
            }
            self.free(b);
            for leaf in moved {
                self.node_mut(leaf).parent = None;
                self.buffer_insert(w, leaf, false);
                self.emit(TopoEvent::BufferMoved { leaf });
            }
        }
        demoted.sort();
        for leaf in demoted {
            self.buffer_insert(w, leaf, true);
        }
        self.flush_aggregates();
        self.insert_child(p, w, p_n);
        self.flush_aggregates();
        self.stats.merges += 1;
        Ok(w)
    }

    /// Detaches child `w` of cluster `p` into a new sibling `p'` of `p`
    /// (a new root if `p` is a root). Returns `p'`.
    pub fn split_cluster(&mut self, p: NodeId, w: NodeId) -> Result<NodeId> {
        if !self.node(p).alive || self.node(p).kind != NodeKind::Cluster {
            return Err(Error::NotAChild);
        }
        if !self.node(w).alive || self.cluster_parent(w) != Some(p) {
            return Err(Error::NotAChild);
        }
        self.flush_aggregates();
        let pp = self.cluster_parent(p);
        let pp_n = pp.map(|x| self.node(x).n);
        self.remove_child(p, w);
        self.flush_aggregates();
        let level = self.node(p).level;
        let p2 = self.new_cluster(level, self.node(w).n);
        self.heavy_insert(p2, w, true);
        self.flush_aggregates();
        if let (Some(pp), Some(pp_n)) = (pp, pp_n) {
            self.remove_child(pp, p);
            self.flush_aggregates();
            self.insert_child(pp, p, pp_n);
            self.insert_child(pp, p2, pp_n);
        }
        self.flush_aggregates();

        // light children of p that became heavy
        let pn = self.node(p).n;
        let mut roots = vec![self.local(p).buffer];
        roots.extend(self.local(p).bottoms.iter().copied());
        let mut promote = Vec::new();
        for r in roots {
            let found = self.bst_leaves_desc_while(r, |f, x| f.thresholds().is_heavy(f.node(x).n, pn));
            promote.extend(found);
        }
        for x in promote {
            self.remove_child(p, x);
            self.heavy_insert(p, x, true);
        }
        self.flush_aggregates();
        self.stats.splits += 1;
        Ok(p2)
    }

    /// Builds one level-0 root per vertex set with at least two vertices.
    pub fn build_initial(&mut self, components: &[Vec<VertexId>]) {
        let s_max = self.thresholds().s_max;
        for comp in components {
            if comp.len() < 2 {
                continue;
            }
            let size = comp.len() as u32;
            let u = self.new_cluster(0, size);
            let mut heavy = Vec::new();
            let mut light = Vec::new();
            for &v in comp {
                let x = Self::vertex_node(v);
                if self.thresholds().is_heavy(1, size) {
                    heavy.push(x);
                } else {
                    light.push(x);
                }
            }
            self.heavy_layout(u, heavy);
            light.sort_by_key(|&x| self.leaf_key(x));
            let chunks: Vec<&[NodeId]> = light.chunks(s_max).collect();
            if let Some((last, full)) = chunks.split_last() {
                for chunk in full {
                    let b = self.alloc(NodeKind::Bottom, 0);
                    self.bst_set_leaves(b, chunk);
                    let lt = self.local_mut(u);
                    lt.bottoms.push(b);
                    lt.light_roots.push(b);
                }
                let buf = self.local(u).buffer;
                self.bst_set_leaves(buf, last);
            }
            self.flush_aggregates();
            self.light_layout(u);
        }
        self.flush_aggregates();
    }
}
