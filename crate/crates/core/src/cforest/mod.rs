//! The cluster forest and its binarised local-tree forest.
//!
//! Every node of the hierarchy lives in one arena. Vertices of the graph
//! are the first `n` nodes (`NodeId(v)` is vertex `v`). A cluster node's
//! local tree hangs directly below it: child 0 is the heavy tree root (if
//! any heavy children exist) and child 1 is the top tree root of the light
//! tree. Node ids are never reused.

mod audit;
mod bst;
mod local;

use std::fmt;

use crate::edge::{VertexId, WeightKey};
use crate::params::{floor_log2, Thresholds};

pub use audit::ForestAudit;

/// Level stored on vertex nodes, which have no cluster level of their own.
pub const VERTEX_LEVEL: u8 = u8::MAX;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Vertex,
    Cluster,
    HeavyRank,
    LightRank,
    RankPath,
    Buffer,
    BufferInner,
    Bottom,
    BottomInner,
    Top,
    TopInner,
}

impl NodeKind {
    pub fn is_bst_inner(self) -> bool {
        matches!(
            self,
            NodeKind::BufferInner | NodeKind::BottomInner | NodeKind::TopInner
        )
    }

    pub fn is_bst_root(self) -> bool {
        matches!(self, NodeKind::Buffer | NodeKind::Bottom | NodeKind::Top)
    }

    fn inner_of(self) -> NodeKind {
        match self {
            NodeKind::Buffer | NodeKind::BufferInner => NodeKind::BufferInner,
            NodeKind::Bottom | NodeKind::BottomInner => NodeKind::BottomInner,
            NodeKind::Top | NodeKind::TopInner => NodeKind::TopInner,
            k => panic!("{k:?} is not a search tree kind"),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            NodeKind::Vertex => "VERTEX",
            NodeKind::Cluster => "CLUSTER",
            NodeKind::HeavyRank => "RANK_TREE_H",
            NodeKind::LightRank => "RANK_TREE_L",
            NodeKind::RankPath => "RANK_PATH",
            NodeKind::Buffer => "BUFFER",
            NodeKind::BufferInner => "BUFFER_IN",
            NodeKind::Bottom => "BOTTOM",
            NodeKind::BottomInner => "BOTTOM_IN",
            NodeKind::Top => "TOP",
            NodeKind::TopInner => "TOP_IN",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Node {
    pub kind: NodeKind,
    pub parent: Option<NodeId>,
    pub children: [Option<NodeId>; 2],
    /// Cluster level; for local-tree nodes the level of the owning cluster.
    pub level: u8,
    pub n: u32,
    pub rank: u8,
    /// Leaf count for search-tree roots and inner nodes.
    pub size: u32,
    /// Routing key of search-tree inner nodes, and the scapegoat high-water
    /// mark on search-tree roots.
    pub(crate) route: u64,
    pub(crate) high_water: u32,
    pub tree_bits: u64,
    pub nontree_bits: u64,
    pub min_key: Box<[Option<WeightKey>]>,
    pub alive: bool,
}

impl Node {
    pub fn child_iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.children.iter().flatten().copied()
    }

    pub fn is_leaf(&self) -> bool {
        self.children[0].is_none() && self.children[1].is_none()
    }
}

/// Which part of a local tree a leaf entered; used for credit deposits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeKind {
    Heavy,
    Buffer,
    Bottom,
}

/// Structural notifications consumed by the shortcut system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TopoEvent {
    /// Node was created or its child set changed.
    Touched(NodeId),
    /// Node got a new parent.
    Reparented(NodeId),
    /// Node's rank changed in place.
    RankChanged(NodeId),
    Freed(NodeId),
    /// Some per-level minimum key of the node changed.
    KeysChanged(NodeId),
    BstLeafAdded { root: NodeId, leaf: NodeId },
    BstLeafRemoved { root: NodeId, leaf: NodeId },
    LeafEntered { leaf: NodeId, tree: TreeKind, size_after: usize },
    /// Leaf moved into another buffer tree during a merge.
    BufferMoved { leaf: NodeId },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ForestStats {
    /// Nodes visited by `simple_down_search`.
    pub down_visits: u64,
    /// Nodes visited by tree-edge enumeration and split scans.
    pub scan_visits: u64,
    pub up_visits: u64,
    pub merges: u64,
    pub splits: u64,
}

/// Bookkeeping for one cluster's local tree.
#[derive(Clone, Debug, Default)]
pub(crate) struct LocalTree {
    /// Rank-tree roots of the heavy tree, by decreasing rank.
    pub heavy_roots: Vec<NodeId>,
    pub path: Vec<NodeId>,
    pub buffer: NodeId,
    pub bottoms: Vec<NodeId>,
    /// Roots of the light rank trees (leaves of the top tree besides the buffer).
    pub light_roots: Vec<NodeId>,
    pub top: NodeId,
}

#[derive(Clone, Debug)]
pub struct ClusterForest {
    pub(crate) nodes: Vec<Node>,
    pub(crate) locals: Vec<Option<LocalTree>>,
    n: usize,
    levels: usize,
    th: Thresholds,
    pub stats: ForestStats,
    record_events: bool,
    events: Vec<TopoEvent>,
    agg_dirty: Vec<NodeId>,
}

impl ClusterForest {
    /// Creates the vertex leaves only; call `build_initial` to add clusters.
    pub fn new(n: usize, th: Thresholds, record_events: bool) -> Self {
        let levels = th.l_max as usize + 1;
        let mut f = ClusterForest {
            nodes: Vec::with_capacity(2 * n + 1),
            locals: Vec::with_capacity(2 * n + 1),
            n,
            levels,
            th,
            stats: ForestStats::default(),
            record_events,
            events: Vec::new(),
            agg_dirty: Vec::new(),
        };
        for _ in 0..n {
            f.push_node(NodeKind::Vertex, VERTEX_LEVEL);
            let last = f.nodes.len() - 1;
            f.nodes[last].n = 1;
        }
        f
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.th
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    #[inline]
    pub(crate) fn node_mut(&mut self, id: NodeId) -> &mut Node {
        &mut self.nodes[id.index()]
    }

    #[inline]
    pub fn vertex_node(v: VertexId) -> NodeId {
        NodeId(v.0)
    }

    pub fn as_vertex(&self, id: NodeId) -> Option<VertexId> {
        (self.node(id).kind == NodeKind::Vertex).then_some(VertexId(id.0))
    }

    pub fn alive_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.alive)
            .map(|(i, _)| NodeId(i as u32))
    }

    pub fn roots(&self) -> Vec<NodeId> {
        self.alive_nodes()
            .filter(|&x| self.node(x).parent.is_none())
            .collect()
    }

    pub fn take_events(&mut self) -> Vec<TopoEvent> {
        std::mem::take(&mut self.events)
    }

    #[inline]
    pub(crate) fn emit(&mut self, ev: TopoEvent) {
        if self.record_events {
            self.events.push(ev);
        }
    }

    fn push_node(&mut self, kind: NodeKind, level: u8) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node {
            kind,
            parent: None,
            children: [None, None],
            level,
            n: 0,
            rank: 0,
            size: 0,
            route: 0,
            high_water: 0,
            tree_bits: 0,
            nontree_bits: 0,
            min_key: vec![None; self.levels].into_boxed_slice(),
            alive: true,
        });
        self.locals.push(None);
        id
    }

    pub(crate) fn alloc(&mut self, kind: NodeKind, level: u8) -> NodeId {
        let id = self.push_node(kind, level);
        if !kind.is_bst_inner() {
            self.emit(TopoEvent::Touched(id));
        }
        self.agg_dirty.push(id);
        id
    }

    pub(crate) fn free(&mut self, id: NodeId) {
        let node = self.node_mut(id);
        debug_assert!(node.alive);
        node.alive = false;
        node.parent = None;
        node.children = [None, None];
        self.locals[id.index()] = None;
        self.emit(TopoEvent::Freed(id));
    }

    /// Sets both children of `x` and their parent pointers.
    pub(crate) fn set_children(&mut self, x: NodeId, ch: [Option<NodeId>; 2]) {
        self.nodes[x.index()].children = ch;
        for c in ch.into_iter().flatten() {
            let old = self.nodes[c.index()].parent;
            self.nodes[c.index()].parent = Some(x);
            if old != Some(x) && !self.node(c).kind.is_bst_inner() {
                self.emit(TopoEvent::Reparented(c));
            }
        }
        let k = self.node(x).kind;
        if !(k.is_bst_inner() || k == NodeKind::Buffer || k == NodeKind::Bottom) {
            self.emit(TopoEvent::Touched(x));
        }
        self.agg_dirty.push(x);
    }

    pub fn depth(&self, mut x: NodeId) -> usize {
        let mut d = 0;
        while let Some(p) = self.node(x).parent {
            x = p;
            d += 1;
        }
        d
    }

    pub fn height(&self) -> usize {
        // leaves are the vertices; every alive node is above some vertex or is an empty buffer
        (0..self.n)
            .map(|v| self.depth(NodeId(v as u32)))
            .max()
            .unwrap_or(0)
    }

    /// Nearest proper ancestor that is a cluster node.
    pub fn cluster_parent(&mut self, x: NodeId) -> Option<NodeId> {
        let mut y = self.node(x).parent;
        while let Some(z) = y {
            self.stats.up_visits += 1;
            if self.node(z).kind == NodeKind::Cluster {
                return Some(z);
            }
            y = self.node(z).parent;
        }
        None
    }

    /// The cluster node at `level` containing `x`, if any.
    pub fn cluster_at_level(&mut self, x: NodeId, level: u8) -> Option<NodeId> {
        let mut y = Some(x);
        while let Some(z) = y {
            let node = self.node(z);
            if node.kind == NodeKind::Cluster {
                if node.level == level {
                    return Some(z);
                }
                if node.level < level {
                    return None;
                }
            }
            y = node.parent;
            self.stats.up_visits += 1;
        }
        None
    }

    /// The child (in the cluster forest) of cluster `p` whose subtree holds `x`.
    pub fn child_of_cluster_containing(&mut self, p: NodeId, x: NodeId) -> Option<NodeId> {
        let mut cur = x;
        loop {
            let parent = self.cluster_parent_no_count(cur)?;
            self.stats.up_visits += 1;
            if parent == p {
                return Some(cur);
            }
            cur = parent;
        }
    }

    fn cluster_parent_no_count(&self, x: NodeId) -> Option<NodeId> {
        let mut y = self.node(x).parent;
        while let Some(z) = y {
            if self.node(z).kind == NodeKind::Cluster {
                return Some(z);
            }
            y = self.node(z).parent;
        }
        None
    }

    /// Walks up from vertex `y` and reports whether it lies below cluster
    /// node (or vertex) `w` of level `w_level`.
    pub fn is_below(&mut self, y: NodeId, w: NodeId) -> bool {
        if y == w {
            return true;
        }
        let w_level = self.node(w).level;
        let mut cur = self.node(y).parent;
        while let Some(z) = cur {
            self.stats.up_visits += 1;
            if z == w {
                return true;
            }
            let node = self.node(z);
            if node.kind == NodeKind::Cluster && node.level <= w_level {
                return false;
            }
            cur = node.parent;
        }
        false
    }

    /// Children of cluster `u` in the cluster forest (leaves of its local tree).
    pub fn cluster_children(&self, u: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack: Vec<NodeId> = self.node(u).child_iter().collect();
        while let Some(x) = stack.pop() {
            let node = self.node(x);
            match node.kind {
                NodeKind::Cluster | NodeKind::Vertex => out.push(x),
                _ => stack.extend(node.child_iter()),
            }
        }
        out.sort();
        out
    }

    /// Vertices below `u`.
    pub fn vertices_below(&self, u: NodeId) -> Vec<VertexId> {
        let mut out = Vec::new();
        let mut stack = vec![u];
        while let Some(x) = stack.pop() {
            let node = self.node(x);
            if node.kind == NodeKind::Vertex {
                out.push(VertexId(x.0));
            } else {
                stack.extend(node.child_iter());
            }
        }
        out.sort();
        out
    }

    // ---- aggregates -------------------------------------------------------

    fn compute_rank(&self, x: NodeId) -> u8 {
        let node = self.node(x);
        match node.kind {
            NodeKind::Vertex | NodeKind::Cluster => floor_log2(node.n.max(1) as u64) as u8,
            NodeKind::HeavyRank | NodeKind::LightRank => node.rank,
            _ => node
                .child_iter()
                .map(|c| self.node(c).rank)
                .max()
                .unwrap_or(0),
        }
    }

    /// Recomputes every aggregate of `x` from its children. Returns true if
    /// anything changed.
    fn recompute(&mut self, x: NodeId) -> bool {
        let node = self.node(x);
        if node.kind == NodeKind::Vertex {
            return false;
        }
        let kids: Vec<NodeId> = node.child_iter().collect();
        let mut n = 0u32;
        let mut tb = 0u64;
        let mut ntb = 0u64;
        let mut size = 0u32;
        let mut mk: Vec<Option<WeightKey>> = vec![None; self.levels];
        for &c in &kids {
            let cn = self.node(c);
            n += cn.n;
            tb |= cn.tree_bits;
            ntb |= cn.nontree_bits;
            size += if cn.kind.is_bst_inner() { cn.size } else { 1 };
            for (i, slot) in mk.iter_mut().enumerate() {
                if let Some(k) = cn.min_key[i] {
                    if slot.is_none_or(|s| k < s) {
                        *slot = Some(k);
                    }
                }
            }
        }
        let kind = node.kind;
        let old_rank = node.rank;
        let node = self.node_mut(x);
        let keys_changed = node.min_key[..] != mk[..];
        let mut changed =
            node.n != n || node.tree_bits != tb || node.nontree_bits != ntb || keys_changed;
        node.n = n;
        node.tree_bits = tb;
        node.nontree_bits = ntb;
        node.min_key = mk.into_boxed_slice();
        if kind.is_bst_inner() || kind.is_bst_root() {
            if kind == NodeKind::Top {
                node.size = size;
            } else if node.size != size {
                node.size = size;
                changed = true;
            }
        }
        if keys_changed {
            self.emit(TopoEvent::KeysChanged(x));
        }
        let r = self.compute_rank(x);
        if r != old_rank {
            self.node_mut(x).rank = r;
            changed = true;
            if !kind.is_bst_inner() {
                self.emit(TopoEvent::RankChanged(x));
            }
        }
        changed
    }

    /// Recomputes aggregates of all nodes queued by structural edits and of
    /// all their ancestors, bottom-up.
    pub(crate) fn flush_aggregates(&mut self) {
        if self.agg_dirty.is_empty() {
            return;
        }
        let dirty = std::mem::take(&mut self.agg_dirty);
        let mut keyed: Vec<(usize, NodeId)> = Vec::with_capacity(dirty.len());
        let mut seen = std::collections::HashSet::new();
        for x in dirty {
            if self.node(x).alive && seen.insert(x) {
                keyed.push((self.depth(x), x));
            }
        }
        // process deepest first; parents are pushed with depth - 1
        let mut heap: std::collections::BinaryHeap<(usize, NodeId)> = keyed.into_iter().collect();
        let mut done = std::collections::HashSet::new();
        while let Some((d, x)) = heap.pop() {
            if !done.insert(x) {
                continue;
            }
            self.recompute(x);
            if let Some(p) = self.node(x).parent {
                if !done.contains(&p) {
                    heap.push((d.saturating_sub(1), p));
                }
            }
        }
    }

    // ---- leaf summaries and path updates ----------------------------------

    /// Sets the per-level summary of vertex `x`: whether a tree edge of
    /// `level` is incident, and the cheapest incident non-tree edge there.
    pub fn set_leaf_summary(
        &mut self,
        x: VertexId,
        level: u8,
        tree_present: bool,
        min_nontree: Option<WeightKey>,
    ) {
        let node = self.node_mut(NodeId(x.0));
        let bit = 1u64 << level;
        if tree_present {
            node.tree_bits |= bit;
        } else {
            node.tree_bits &= !bit;
        }
        if min_nontree.is_some() {
            node.nontree_bits |= bit;
        } else {
            node.nontree_bits &= !bit;
        }
        let old = std::mem::replace(&mut node.min_key[level as usize], min_nontree);
        if old != min_nontree {
            self.emit(TopoEvent::KeysChanged(NodeId(x.0)));
        }
    }

    /// Recomputes bitmaps and minimum keys for `levels` on the path from
    /// vertex `x` to its root, stopping once a node is unchanged.
    pub fn update_paths(&mut self, x: VertexId, levels: &[u8]) {
        let mut cur = self.node(NodeId(x.0)).parent;
        while let Some(z) = cur {
            let mut changed = false;
            for &lv in levels {
                changed |= self.recompute_level(z, lv);
            }
            if !changed {
                break;
            }
            cur = self.node(z).parent;
        }
    }

    fn recompute_level(&mut self, z: NodeId, lv: u8) -> bool {
        let bit = 1u64 << lv;
        let mut tb = false;
        let mut ntb = false;
        let mut mk: Option<WeightKey> = None;
        for c in self.node(z).child_iter() {
            let cn = self.node(c);
            tb |= cn.tree_bits & bit != 0;
            ntb |= cn.nontree_bits & bit != 0;
            if let Some(k) = cn.min_key[lv as usize] {
                if mk.is_none_or(|m| k < m) {
                    mk = Some(k);
                }
            }
        }
        let node = self.node_mut(z);
        let old = (
            node.tree_bits & bit != 0,
            node.nontree_bits & bit != 0,
            node.min_key[lv as usize],
        );
        if old == (tb, ntb, mk) {
            return false;
        }
        node.tree_bits = (node.tree_bits & !bit) | if tb { bit } else { 0 };
        node.nontree_bits = (node.nontree_bits & !bit) | if ntb { bit } else { 0 };
        node.min_key[lv as usize] = mk;
        if old.2 != mk {
            self.emit(TopoEvent::KeysChanged(z));
        }
        true
    }

    // ---- searches ---------------------------------------------------------

    /// Follows the cheapest level-`i` key down from `u` to a vertex.
    pub fn simple_down_search(&mut self, u: NodeId, i: u8) -> Option<VertexId> {
        let target = self.node(u).min_key[i as usize]?;
        let mut x = u;
        self.stats.down_visits += 1;
        while self.node(x).kind != NodeKind::Vertex {
            let next = self
                .node(x)
                .child_iter()
                .find(|&c| self.node(c).min_key[i as usize] == Some(target))
                .expect("min key witnessed by a child");
            x = next;
            self.stats.down_visits += 1;
        }
        Some(VertexId(x.0))
    }

    /// Some vertex below `u` with an incident level-`i` tree edge.
    pub fn tree_leaf_search(&mut self, u: NodeId, i: u8) -> Option<VertexId> {
        let bit = 1u64 << i;
        if self.node(u).tree_bits & bit == 0 {
            return None;
        }
        let mut x = u;
        self.stats.scan_visits += 1;
        while self.node(x).kind != NodeKind::Vertex {
            x = self
                .node(x)
                .child_iter()
                .find(|&c| self.node(c).tree_bits & bit != 0)
                .expect("tree bit witnessed by a child");
            self.stats.scan_visits += 1;
        }
        Some(VertexId(x.0))
    }

    /// All vertices below `u` with an incident level-`i` tree edge, found by
    /// a bitmap-pruned traversal.
    pub fn tree_leaves(&mut self, u: NodeId, i: u8) -> Vec<VertexId> {
        let bit = 1u64 << i;
        let mut out = Vec::new();
        if self.node(u).tree_bits & bit == 0 {
            return out;
        }
        let mut stack = vec![u];
        while let Some(x) = stack.pop() {
            self.stats.scan_visits += 1;
            let node = self.node(x);
            if node.kind == NodeKind::Vertex {
                out.push(VertexId(x.0));
                continue;
            }
            for c in node.child_iter() {
                if self.node(c).tree_bits & bit != 0 {
                    stack.push(c);
                }
            }
        }
        out
    }
}
