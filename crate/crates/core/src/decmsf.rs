//! Decremental minimum spanning forest over a cluster hierarchy.
//!
//! Non-tree edges of level `i` incident to a vertex `x` live in the list
//! `E_i(x)`, an intrusive doubly linked list kept sorted by key. Tree edges
//! are kept in unordered per-vertex per-level vectors so that a deletion can
//! enumerate the level-`j` spanning tree of one side.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::cforest::{ClusterForest, NodeId};
use crate::counters::OpCounters;
use crate::edge::{EdgeId, EdgeRecord, EdgeStatus, EdgeStore, VertexId, WeightKey};
use crate::error::{Error, Result};
use crate::params::Params;
use crate::shortcuts::{IndexedHeap, MinQueue, Shortcuts};

/// Which downward search finds the cheapest incident edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SearchMode {
    Simple,
    Shortcut,
}

#[derive(Clone, Copy, Debug, Default)]
struct Link {
    prev: Option<EdgeId>,
    next: Option<EdgeId>,
}

/// One decremental MSF instance.
#[derive(Clone, Debug)]
pub struct DecMsf<Q: MinQueue<NodeId> = IndexedHeap<NodeId>> {
    levels: usize,
    l_max: u8,
    edges: EdgeStore,
    forest: ClusterForest,
    shortcuts: Option<Shortcuts<Q>>,
    mode: SearchMode,
    // E lists: head/tail per (vertex, level), links per (edge, side)
    heads: Vec<Option<EdgeId>>,
    tails: Vec<Option<EdgeId>>,
    links: Vec<[Link; 2]>,
    // tree edges per (vertex, level) with each edge's slot per side
    tree_adj: Vec<Vec<EdgeId>>,
    tree_slot: Vec<[u32; 2]>,
    promotions: u64,
    searches: u64,
    violations: Vec<String>,
}

/// Index of `x` among the endpoints of `rec`.
fn side_of(rec: &EdgeRecord, x: VertexId) -> usize {
    if rec.endpoints.0 == x {
        0
    } else {
        1
    }
}

impl DecMsf<IndexedHeap<NodeId>> {
    pub fn new(
        n: usize,
        edges: &[(VertexId, VertexId, WeightKey)],
        params: Params,
        mode: SearchMode,
    ) -> Result<Self> {
        Self::with_queue(n, edges, params, mode)
    }
}

impl<Q: MinQueue<NodeId>> DecMsf<Q> {
    /// Builds the structure with all edges at level 0 and the tree edges
    /// forming the unique MSF. Edge ids follow input order.
    pub fn with_queue(
        n: usize,
        input: &[(VertexId, VertexId, WeightKey)],
        params: Params,
        mode: SearchMode,
    ) -> Result<Self> {
        let th = params.thresholds(n.max(1));
        let levels = th.l_max as usize + 1;
        let mut edges = EdgeStore::new(n);
        let mut pairs: HashMap<(u32, u32), bool> = HashMap::new();
        let mut keys = HashSet::new();
        for &(u, v, key) in input {
            let id = edges.push(u, v, key)?;
            let pair = (u.0.min(v.0), u.0.max(v.0));
            let real = key.is_real();
            if let Some(prev_real) = pairs.insert(pair, real) {
                if prev_real && real {
                    return Err(Error::DuplicateEdge(pair.0, pair.1));
                }
                pairs.insert(pair, prev_real || real);
            }
            if !keys.insert(key) {
                return Err(Error::Precondition {
                    index: id.0 as usize,
                    msg: format!("key {key:?} is not distinct"),
                });
            }
        }
        let m = edges.edge_count();
        let mut s = DecMsf {
            levels,
            l_max: th.l_max,
            edges,
            forest: ClusterForest::new(n, th, mode == SearchMode::Shortcut),
            shortcuts: None,
            mode,
            heads: vec![None; n * levels],
            tails: vec![None; n * levels],
            links: vec![[Link::default(); 2]; m],
            tree_adj: vec![Vec::new(); n * levels],
            tree_slot: vec![[0; 2]; m],
            promotions: 0,
            searches: 0,
            violations: Vec::new(),
        };

        let mut order: Vec<EdgeId> = (0..m as u32).map(EdgeId).collect();
        order.sort_by_key(|&e| s.edges.get(e).key);
        let mut dsu = Dsu::new(n);
        for &e in &order {
            let (u, v) = s.edges.get(e).endpoints;
            if dsu.union(u.index(), v.index()) {
                s.edges.get_mut(e).status = EdgeStatus::Tree;
                s.tree_add(e, 0);
            } else {
                s.e_push_back(e, 0);
            }
        }
        for v in 0..n as u32 {
            s.refresh(VertexId(v), &[0]);
        }
        let mut comps: HashMap<usize, Vec<VertexId>> = HashMap::new();
        for v in 0..n {
            comps.entry(dsu.find(v)).or_default().push(VertexId(v as u32));
        }
        let mut comps: Vec<Vec<VertexId>> = comps.into_values().collect();
        comps.sort();
        s.forest.build_initial(&comps);
        if mode == SearchMode::Shortcut {
            s.shortcuts = Some(Shortcuts::new(&mut s.forest));
        }
        Ok(s)
    }

    // ---- accessors ----------------------------------------------------

    pub fn mode(&self) -> SearchMode {
        self.mode
    }

    pub fn vertex_count(&self) -> usize {
        self.edges.vertex_count()
    }

    pub fn l_max(&self) -> u8 {
        self.l_max
    }

    pub fn edges(&self) -> &EdgeStore {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> Option<&EdgeRecord> {
        self.edges.try_get(e)
    }

    pub fn forest(&self) -> &ClusterForest {
        &self.forest
    }

    pub fn shortcuts(&self) -> Option<&Shortcuts<Q>> {
        self.shortcuts.as_ref()
    }

    /// Current spanning forest.
    pub fn msf(&self) -> Vec<EdgeId> {
        self.edges
            .iter()
            .filter(|r| r.status == EdgeStatus::Tree)
            .map(|r| r.id)
            .collect()
    }

    /// Live non-tree edges.
    pub fn nontree(&self) -> Vec<EdgeId> {
        self.edges
            .iter()
            .filter(|r| r.status == EdgeStatus::NonTree)
            .map(|r| r.id)
            .collect()
    }

    /// Level of every edge, by id (deleted edges keep their last level).
    pub fn level_assignment(&self) -> Vec<u8> {
        self.edges.iter().map(|r| r.level).collect()
    }

    pub fn counters(&self) -> OpCounters {
        let st = &self.forest.stats;
        let mut c = OpCounters {
            promotions: self.promotions,
            down_visits: st.down_visits,
            up_visits: st.up_visits,
            ..OpCounters::default()
        };
        if let Some(sc) = &self.shortcuts {
            c.queue_ops = sc.stats.queue_ops;
            c.hops = sc.stats.hops;
            c.credits_spent = sc.ledger.spent;
        }
        c
    }

    /// Number of cheapest-incident searches run so far.
    pub fn search_count(&self) -> u64 {
        self.searches
    }

    /// The non-tree edges of `E_i(x)` in list order.
    pub fn e_list(&self, x: VertexId, i: u8) -> Vec<EdgeId> {
        let mut out = Vec::new();
        let mut cur = self.heads[self.slot(x, i)];
        while let Some(e) = cur {
            out.push(e);
            let side = side_of(self.edges.get(e), x);
            cur = self.links[e.index()][side].next;
        }
        out
    }

    // ---- list plumbing ------------------------------------------------

    #[inline]
    fn slot(&self, x: VertexId, i: u8) -> usize {
        x.index() * self.levels + i as usize
    }

    fn e_push_back(&mut self, e: EdgeId, i: u8) {
        let (u, v) = self.edges.get(e).endpoints;
        for (side, x) in [u, v].into_iter().enumerate() {
            let s = self.slot(x, i);
            let tail = self.tails[s];
            self.links[e.index()][side] = Link {
                prev: tail,
                next: None,
            };
            match tail {
                Some(t) => {
                    let ts = side_of(self.edges.get(t), x);
                    self.links[t.index()][ts].next = Some(e);
                }
                None => self.heads[s] = Some(e),
            }
            self.tails[s] = Some(e);
        }
    }

    fn e_unlink(&mut self, e: EdgeId, i: u8) {
        let (u, v) = self.edges.get(e).endpoints;
        for (side, x) in [u, v].into_iter().enumerate() {
            let s = self.slot(x, i);
            let Link { prev, next } = self.links[e.index()][side];
            match prev {
                Some(p) => {
                    let ps = side_of(self.edges.get(p), x);
                    self.links[p.index()][ps].next = next;
                }
                None => self.heads[s] = next,
            }
            match next {
                Some(nx) => {
                    let ns = side_of(self.edges.get(nx), x);
                    self.links[nx.index()][ns].prev = prev;
                }
                None => self.tails[s] = prev,
            }
            self.links[e.index()][side] = Link::default();
        }
    }

    fn tree_add(&mut self, e: EdgeId, i: u8) {
        let (u, v) = self.edges.get(e).endpoints;
        for (side, x) in [u, v].into_iter().enumerate() {
            let s = self.slot(x, i);
            self.tree_slot[e.index()][side] = self.tree_adj[s].len() as u32;
            self.tree_adj[s].push(e);
        }
    }

    fn tree_remove(&mut self, e: EdgeId, i: u8) {
        let (u, v) = self.edges.get(e).endpoints;
        for (side, x) in [u, v].into_iter().enumerate() {
            let s = self.slot(x, i);
            let pos = self.tree_slot[e.index()][side] as usize;
            self.tree_adj[s].swap_remove(pos);
            if let Some(&moved) = self.tree_adj[s].get(pos) {
                let ms = side_of(self.edges.get(moved), x);
                self.tree_slot[moved.index()][ms] = pos as u32;
            }
        }
    }

    /// Pushes the level summaries of `x` into the forest.
    fn refresh(&mut self, x: VertexId, levels: &[u8]) {
        for &i in levels {
            let s = self.slot(x, i);
            let present = !self.tree_adj[s].is_empty();
            let min = self.heads[s].map(|e| self.edges.get(e).key);
            self.forest.set_leaf_summary(x, i, present, min);
        }
        self.forest.update_paths(x, levels);
    }

    fn refresh_edge(&mut self, e: EdgeId, levels: &[u8]) {
        let (u, v) = self.edges.get(e).endpoints;
        self.refresh(u, levels);
        self.refresh(v, levels);
    }

    fn sync(&mut self) {
        if let Some(sc) = self.shortcuts.as_mut() {
            sc.sync(&mut self.forest);
        }
    }

    // ---- operations ---------------------------------------------------

    /// Raises the level of `e` by one.
    pub fn promote(&mut self, e: EdgeId) -> Result<()> {
        let rec = self
            .edges
            .try_get(e)
            .filter(|r| r.is_live())
            .cloned()
            .ok_or(Error::EdgeIdNotLive(e.0))?;
        let i = rec.level;
        if i >= self.l_max {
            self.violations
                .push(format!("promotion of {e:?} beyond level {}", self.l_max));
            return Err(Error::Precondition {
                index: e.index(),
                msg: format!("level {i} is already the top level"),
            });
        }
        match rec.status {
            EdgeStatus::Tree => {
                self.tree_remove(e, i);
                self.edges.get_mut(e).level = i + 1;
                self.tree_add(e, i + 1);
            }
            _ => {
                let (u, v) = rec.endpoints;
                if self.heads[self.slot(u, i)] != Some(e) || self.heads[self.slot(v, i)] != Some(e) {
                    self.violations
                        .push(format!("promoted {e:?} was not at the head of both level-{i} lists"));
                }
                self.e_unlink(e, i);
                self.edges.get_mut(e).level = i + 1;
                self.e_push_back(e, i + 1);
            }
        }
        self.promotions += 1;
        self.refresh_edge(e, &[i, i + 1]);
        Ok(())
    }

    /// Cheapest level-`i` non-tree edge with an endpoint below `w`, and
    /// whether both of its endpoints are below `w`.
    pub fn cheapest_incident(&mut self, w: NodeId, i: u8) -> Option<(EdgeId, bool)> {
        self.sync();
        self.searches += 1;
        let (leaf, both) = match self.mode {
            SearchMode::Simple => (self.forest.simple_down_search(w, i)?, false),
            SearchMode::Shortcut => {
                let sc = self.shortcuts.as_mut().expect("shortcut mode keeps queues");
                let leaves = sc.search(&self.forest, w, i)?;
                (leaves[0], leaves.len() == 2)
            }
        };
        let e = self.heads[self.slot(leaf, i)].expect("search ends at a list head");
        if both {
            return Some((e, true));
        }
        let other = self.edges.get(e).other(leaf);
        let inside = self.forest.is_below(ClusterForest::vertex_node(other), w);
        Some((e, inside))
    }

    /// Deletes `e` and returns the replacement tree edge, if any.
    pub fn delete(&mut self, e: EdgeId) -> Result<Option<EdgeId>> {
        let rec = self
            .edges
            .try_get(e)
            .filter(|r| r.is_live())
            .cloned()
            .ok_or(Error::EdgeIdNotLive(e.0))?;
        let (x, y) = rec.endpoints;
        let i = rec.level;
        if rec.status == EdgeStatus::NonTree {
            self.e_unlink(e, i);
            self.edges.tombstone(e);
            self.refresh_edge(e, &[i]);
            self.sync();
            return Ok(None);
        }
        self.tree_remove(e, i);
        self.edges.tombstone(e);
        self.refresh_edge(e, &[i]);
        self.sync();

        let xn = ClusterForest::vertex_node(x);
        let yn = ClusterForest::vertex_node(y);
        for j in (0..=i).rev() {
            let p = self
                .forest
                .cluster_at_level(xn, j)
                .expect("tree edge endpoints share a cluster at its level");
            let a = self.forest.child_of_cluster_containing(p, xn).expect("x below p");
            let b = self.forest.child_of_cluster_containing(p, yn).expect("y below p");
            let (side, side_edges) = self.smaller_side(p, a, b, j);
            let w = if side.len() == 1 {
                side[0]
            } else {
                self.forest.merge_clusters(&side)?
            };
            let p_n = self.forest.node(p).n;
            if 2 * self.forest.node(w).n > p_n {
                self.violations.push(format!(
                    "smaller side of {p} holds {} of {p_n} vertices",
                    self.forest.node(w).n
                ));
            }
            for te in side_edges {
                self.promote(te)?;
            }
            loop {
                match self.cheapest_incident(w, j) {
                    None => break,
                    Some((f, true)) => self.promote(f)?,
                    Some((f, false)) => {
                        self.e_unlink(f, j);
                        self.edges.get_mut(f).status = EdgeStatus::Tree;
                        self.tree_add(f, j);
                        self.refresh_edge(f, &[j]);
                        self.sync();
                        return Ok(Some(f));
                    }
                }
            }
            self.forest.split_cluster(p, w)?;
            self.sync();
        }
        Ok(None)
    }

    /// Children of `p` on the side of `a` and of `b` after a tree edge
    /// between them was cut, explored in lockstep until the smaller side is
    /// known. Returns that side's clusters and its level-`j` tree edges.
    /// Ties go to the side of `a`.
    fn smaller_side(&mut self, p: NodeId, a: NodeId, b: NodeId, j: u8) -> (Vec<NodeId>, Vec<EdgeId>) {
        let total = self.forest.node(p).n;
        let mut sides = [Side::new(a, self.forest.node(a).n), Side::new(b, self.forest.node(b).n)];
        let winner = loop {
            // expand the side with fewer vertices; ties go to `a`
            let s = if sides[0].count <= sides[1].count { 0 } else { 1 };
            if sides[s].queue.is_empty() {
                // side s is complete
                let c = sides[s].count;
                if 2 * c < total || (2 * c == total && s == 0) {
                    break s;
                }
                break 1 - s;
            }
            let c = sides[s].queue.pop_front().expect("non-empty");
            self.expand(p, c, j, &mut sides[s]);
        };
        // finish the chosen side if it was decided by the other one
        while let Some(c) = sides[winner].queue.pop_front() {
            self.expand(p, c, j, &mut sides[winner]);
        }
        let side = std::mem::replace(&mut sides[winner], Side::new(a, 0));
        (side.order, side.edges)
    }

    fn expand(&mut self, p: NodeId, c: NodeId, j: u8, side: &mut Side) {
        for v in self.forest.tree_leaves(c, j) {
            let list = self.tree_adj[self.slot(v, j)].clone();
            for te in list {
                if !side.edge_seen.insert(te) {
                    continue;
                }
                side.edges.push(te);
                let other = self.edges.get(te).other(v);
                let oc = self
                    .forest
                    .child_of_cluster_containing(p, ClusterForest::vertex_node(other))
                    .expect("tree edge stays inside its cluster");
                if side.visited.insert(oc) {
                    side.count += self.forest.node(oc).n;
                    side.queue.push_back(oc);
                    side.order.push(oc);
                }
            }
        }
    }

    // ---- audit --------------------------------------------------------

    /// Checks the forest, the lists, the level invariants and, in shortcut
    /// mode, the queues. Returns every violation found.
    pub fn audit(&self) -> Vec<String> {
        self.audit_with(true)
    }

    /// As [`DecMsf::audit`]; the queue comparison runs only if `queues`.
    pub fn audit_with(&self, queues: bool) -> Vec<String> {
        let mut errs = self.violations.clone();
        let fa = self.forest.audit();
        errs.extend(fa.errors.iter().cloned());
        let n = self.vertex_count();
        for x in 0..n as u32 {
            let x = VertexId(x);
            for i in 0..self.levels as u8 {
                let list = self.e_list(x, i);
                let keys: Vec<WeightKey> = list.iter().map(|&e| self.edges.get(e).key).collect();
                if keys.windows(2).any(|w| w[0] >= w[1]) {
                    errs.push(format!("E_{i}({}) not sorted", x.0));
                }
                for &e in &list {
                    let r = self.edges.get(e);
                    if r.status != EdgeStatus::NonTree || r.level != i {
                        errs.push(format!("E_{i}({}) holds {e:?} in state {:?}", x.0, r));
                    }
                }
                let s = self.slot(x, i);
                for &e in &self.tree_adj[s] {
                    let r = self.edges.get(e);
                    if r.status != EdgeStatus::Tree || r.level != i {
                        errs.push(format!("tree list {i} of {} holds {r:?}", x.0));
                    }
                }
                let node = self.forest.node(ClusterForest::vertex_node(x));
                let want = self.heads[s].map(|e| self.edges.get(e).key);
                if node.min_key[i as usize] != want {
                    errs.push(format!("leaf {} level {i} key out of date", x.0));
                }
            }
        }
        let mut listed = 0usize;
        for r in self.edges.live() {
            if r.level > self.l_max {
                errs.push(format!("{:?} above the top level", r.id));
            }
            let (u, v) = r.endpoints;
            match r.status {
                EdgeStatus::NonTree => {
                    listed += 1;
                    for x in [u, v] {
                        if !self.e_list(x, r.level).contains(&r.id) {
                            errs.push(format!("{:?} missing from E_{}({})", r.id, r.level, x.0));
                        }
                    }
                }
                EdgeStatus::Tree => {
                    for x in [u, v] {
                        if !self.tree_adj[self.slot(x, r.level)].contains(&r.id) {
                            errs.push(format!("{:?} missing from tree list of {}", r.id, x.0));
                        }
                    }
                }
                EdgeStatus::Deleted => {}
            }
        }
        let total: usize = (0..n as u32)
            .flat_map(|x| (0..self.levels as u8).map(move |i| (VertexId(x), i)))
            .map(|(x, i)| self.e_list(x, i).len())
            .sum();
        if total != 2 * listed {
            errs.push(format!("E lists hold {total} entries for {listed} non-tree edges"));
        }
        errs.extend(self.audit_levels());
        if let (true, Some(sc)) = (queues, &self.shortcuts) {
            errs.extend(sc.audit(&self.forest));
        }
        errs
    }

    /// Level-`i` clusters must be spanned by tree edges of level at least
    /// `i`, and every edge of level `i` must lie inside one level-`i` cluster.
    fn audit_levels(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let n = self.vertex_count();
        let mut f = self.forest.clone();
        let clusters: Vec<NodeId> = f
            .alive_nodes()
            .filter(|&u| f.node(u).kind == crate::cforest::NodeKind::Cluster)
            .collect();
        for i in 0..self.levels as u8 {
            let mut dsu = Dsu::new(n);
            for r in self.edges.live() {
                if r.status == EdgeStatus::Tree && r.level >= i {
                    dsu.union(r.endpoints.0.index(), r.endpoints.1.index());
                }
            }
            for &u in clusters.iter().filter(|&&u| f.node(u).level == i) {
                let vs = f.vertices_below(u);
                let root = dsu.find(vs[0].index());
                if vs.iter().any(|v| dsu.find(v.index()) != root) {
                    errs.push(format!("level-{i} cluster {u} not spanned by its tree edges"));
                }
            }
            for r in self.edges.live().filter(|r| r.level == i) {
                let a = f.cluster_at_level(ClusterForest::vertex_node(r.endpoints.0), i);
                let b = f.cluster_at_level(ClusterForest::vertex_node(r.endpoints.1), i);
                if a.is_none() || a != b {
                    errs.push(format!("{:?} of level {i} crosses level-{i} clusters", r.id));
                }
            }
        }
        errs
    }
}

#[derive(Debug)]
struct Side {
    count: u32,
    queue: VecDeque<NodeId>,
    visited: HashSet<NodeId>,
    order: Vec<NodeId>,
    edges: Vec<EdgeId>,
    edge_seen: HashSet<EdgeId>,
}

impl Side {
    fn new(start: NodeId, count: u32) -> Self {
        Side {
            count,
            queue: VecDeque::from([start]),
            visited: HashSet::from([start]),
            order: vec![start],
            edges: Vec::new(),
            edge_seen: HashSet::new(),
        }
    }
}

/// Union-find with path halving.
#[derive(Clone, Debug)]
pub(crate) struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    pub(crate) fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}
