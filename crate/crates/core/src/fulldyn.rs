//! Fully-dynamic MSF from decremental structures.
//!
//! The live MSF `F` sits in a dynamic forest. Every non-tree edge of the
//! graph is a non-tree edge of at least one decremental structure `A_i`,
//! and `A_i` holds at most `2^i` non-tree edges. A structure is built over
//! its non-tree edges plus the part of `F` that connects their endpoints,
//! with paths of `F` compressed into super edges.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::cforest::NodeId;
use crate::counters::OpCounters;
use crate::decmsf::{DecMsf, Dsu, SearchMode};
use crate::dyntree::{DynForest, EdgeHandle};
use crate::edge::{EdgeId, EdgeStatus, EdgeStore, VertexId, WeightKey};
use crate::error::{Error, Result};
use crate::params::Params;
use crate::shortcuts::{IndexedHeap, MinQueue};

/// How much [`FullDynMsf::audit`] checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum AuditDepth {
    /// Reduction invariants only.
    Reduction,
    /// Also every decremental structure, without its queues.
    Structures,
    /// Also every queue against a rebuild.
    Queues,
}

/// Edges changing state in one update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct MsfChange {
    pub became_tree: Option<EdgeId>,
    pub became_nontree: Option<EdgeId>,
}

/// What a local edge of a decremental structure stands for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LocalEdge {
    Real(EdgeId),
    /// A path of forest edges.
    Super(Vec<EdgeId>),
}

/// Compressed local graph handed to a decremental structure.
#[derive(Clone, Debug, Default)]
pub struct Compressed {
    /// Global vertex of each local vertex.
    pub vertices: Vec<VertexId>,
    pub edges: Vec<(VertexId, VertexId, WeightKey)>,
    pub meaning: Vec<LocalEdge>,
}

impl Compressed {
    pub fn nontree_count(&self) -> usize {
        self.meaning.iter().filter(|m| matches!(m, LocalEdge::Real(_))).count()
    }
}

#[derive(Clone, Debug)]
struct Slot<Q: MinQueue<NodeId>> {
    dec: DecMsf<Q>,
    meaning: Vec<LocalEdge>,
    generation: u64,
}

/// Statistics of the reduction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReductionStats {
    pub collapses: u64,
    pub rebuilt_edges: u64,
    pub max_slot: usize,
}

/// The fully-dynamic structure.
#[derive(Clone, Debug)]
pub struct FullDynMsf<Q: MinQueue<NodeId> = IndexedHeap<NodeId>> {
    params: Params,
    mode: SearchMode,
    edges: EdgeStore,
    live_pairs: HashMap<(u32, u32), EdgeId>,
    by_key: HashMap<WeightKey, EdgeId>,
    forest: DynForest,
    handles: HashMap<EdgeId, EdgeHandle>,
    f_adj: Vec<BTreeSet<EdgeId>>,
    slots: Vec<Option<Slot<Q>>>,
    containment: HashMap<EdgeId, Vec<(usize, EdgeId)>>,
    retired: OpCounters,
    pub stats: ReductionStats,
    violations: Vec<String>,
}

fn pair_of(u: VertexId, v: VertexId) -> (u32, u32) {
    (u.0.min(v.0), u.0.max(v.0))
}

/// Number of decremental slots for `n` vertices: enough for `n^2` edges.
fn slot_count(n: usize) -> usize {
    let mut k = 0;
    while (1u128 << k) < (n as u128) * (n as u128) {
        k += 1;
    }
    k + 1
}

impl FullDynMsf<IndexedHeap<NodeId>> {
    pub fn new(n: usize, params: Params, mode: SearchMode) -> Self {
        Self::with_queue(n, params, mode)
    }
}

impl<Q: MinQueue<NodeId>> FullDynMsf<Q> {
    pub fn with_queue(n: usize, params: Params, mode: SearchMode) -> Self {
        FullDynMsf {
            params,
            mode,
            edges: EdgeStore::new(n),
            live_pairs: HashMap::new(),
            by_key: HashMap::new(),
            forest: DynForest::new(n),
            handles: HashMap::new(),
            f_adj: vec![BTreeSet::new(); n],
            slots: (0..slot_count(n)).map(|_| None).collect(),
            containment: HashMap::new(),
            retired: OpCounters::default(),
            stats: ReductionStats::default(),
            violations: Vec::new(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.edges.vertex_count()
    }

    pub fn edges(&self) -> &EdgeStore {
        &self.edges
    }

    /// Live edge between `u` and `v`.
    pub fn edge_between(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        self.live_pairs.get(&pair_of(u, v)).copied()
    }

    /// Tree edges, by id.
    pub fn msf(&self) -> Vec<EdgeId> {
        let mut v: Vec<EdgeId> = self.handles.keys().copied().collect();
        v.sort();
        v
    }

    /// Sum of the ranks of the tree edges.
    pub fn msf_weight(&self) -> u64 {
        self.handles.keys().map(|&e| self.edges.get(e).key.rank).sum()
    }

    /// Work counters summed over every decremental structure ever built.
    pub fn counters(&self) -> OpCounters {
        let mut c = self.retired;
        for s in self.slots.iter().flatten() {
            c.add(&s.dec.counters());
        }
        c
    }

    /// Number of slots; structure `i` may hold up to `2^i` non-tree edges.
    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    /// The decremental structure in slot `i`, if built.
    pub fn structure(&self, i: usize) -> Option<&DecMsf<Q>> {
        self.slots.get(i)?.as_ref().map(|s| &s.dec)
    }

    /// Identifier of the build that produced structure `i`; changes
    /// whenever the slot is rebuilt.
    pub fn generation(&self, i: usize) -> Option<u64> {
        self.slots.get(i)?.as_ref().map(|s| s.generation)
    }

    /// Meaning of local edge `e` of structure `i`.
    pub fn local_meaning(&self, i: usize, e: EdgeId) -> Option<&LocalEdge> {
        self.slots.get(i)?.as_ref()?.meaning.get(e.index())
    }

    /// Non-tree edge count of each slot.
    pub fn nontree_counts(&self) -> Vec<usize> {
        self.slots
            .iter()
            .map(|s| s.as_ref().map_or(0, |s| s.dec.nontree().len()))
            .collect()
    }

    /// Live containers of global edge `g`: (slot, local edge).
    pub fn containers(&self, g: EdgeId) -> Vec<(usize, EdgeId)> {
        self.containment
            .get(&g)
            .map(|v| {
                v.iter()
                    .copied()
                    .filter(|&(i, l)| {
                        self.structure(i)
                            .and_then(|d| d.edge(l))
                            .is_some_and(|r| r.is_live())
                    })
                    .collect()
            })
            .unwrap_or_default()
    }

    fn nontree_somewhere(&self, g: EdgeId) -> bool {
        self.containers(g).into_iter().any(|(i, l)| {
            self.structure(i).and_then(|d| d.edge(l)).map(|r| r.status) == Some(EdgeStatus::NonTree)
        })
    }

    fn f_link(&mut self, e: EdgeId) -> Result<()> {
        let r = self.edges.get(e);
        let (u, v) = r.endpoints;
        let h = self.forest.link(u, v, r.key)?;
        self.handles.insert(e, h);
        self.f_adj[u.index()].insert(e);
        self.f_adj[v.index()].insert(e);
        self.edges.get_mut(e).status = EdgeStatus::Tree;
        Ok(())
    }

    fn f_cut(&mut self, e: EdgeId) -> Result<()> {
        let h = self.handles.remove(&e).ok_or(Error::StaleHandle)?;
        self.forest.cut(h)?;
        let (u, v) = self.edges.get(e).endpoints;
        self.f_adj[u.index()].remove(&e);
        self.f_adj[v.index()].remove(&e);
        self.edges.get_mut(e).status = EdgeStatus::NonTree;
        Ok(())
    }

    /// Inserts edge `(u, v)` with `key`, which must differ from every live key.
    pub fn insert(&mut self, u: VertexId, v: VertexId, key: WeightKey) -> Result<(EdgeId, MsfChange)> {
        if u.index() < self.vertex_count()
            && v.index() < self.vertex_count()
            && u != v
            && self.live_pairs.contains_key(&pair_of(u, v))
        {
            return Err(Error::DuplicateEdge(pair_of(u, v).0, pair_of(u, v).1));
        }
        if self.by_key.contains_key(&key) {
            return Err(Error::Precondition {
                index: self.edges.edge_count(),
                msg: format!("key {key:?} already in use"),
            });
        }
        let e = self.edges.push(u, v, key)?;
        self.live_pairs.insert(pair_of(u, v), e);
        self.by_key.insert(key, e);
        let mut change = MsfChange::default();
        if !self.forest.connected(u, v) {
            self.f_link(e)?;
            change.became_tree = Some(e);
            return Ok((e, change));
        }
        let h = self.forest.path_max(u, v)?;
        let heavy = self.by_key[&self.forest.key(h)?];
        let loser = if key < self.edges.get(heavy).key {
            self.f_cut(heavy)?;
            self.f_link(e)?;
            change.became_tree = Some(e);
            change.became_nontree = Some(heavy);
            heavy
        } else {
            e
        };
        let d: Vec<EdgeId> = if self.nontree_somewhere(loser) {
            Vec::new()
        } else {
            vec![loser]
        };
        if !d.is_empty() {
            self.collapse(&d)?;
        }
        Ok((e, change))
    }

    /// Deletes the live edge between `u` and `v`.
    pub fn delete(&mut self, u: VertexId, v: VertexId) -> Result<MsfChange> {
        let e = self
            .live_pairs
            .remove(&pair_of(u, v))
            .ok_or(Error::EdgeNotLive(u.0, v.0))?;
        let was_tree = self.edges.get(e).status == EdgeStatus::Tree;
        if was_tree {
            self.f_cut(e)?;
        }
        self.by_key.remove(&self.edges.get(e).key);
        self.edges.tombstone(e);

        let mut candidates: Vec<EdgeId> = Vec::new();
        for (i, local) in self.containers(e) {
            let slot = self.slots[i].as_mut().expect("container exists");
            if let Some(r) = slot.dec.delete(local)? {
                match &slot.meaning[r.index()] {
                    LocalEdge::Real(g) => candidates.push(*g),
                    LocalEdge::Super(_) => self
                        .violations
                        .push(format!("structure {i} returned a super edge as replacement")),
                }
            }
        }
        self.containment.remove(&e);
        candidates.sort_by_key(|&g| self.edges.get(g).key);
        candidates.dedup();

        let mut change = MsfChange::default();
        if was_tree {
            let pick = candidates.iter().copied().find(|&g| {
                let (a, b) = self.edges.get(g).endpoints;
                !self.forest.connected(a, b)
            });
            if let Some(r) = pick {
                self.f_link(r)?;
                change.became_tree = Some(r);
            }
        }
        let d: Vec<EdgeId> = candidates
            .into_iter()
            .filter(|&g| {
                self.edges.get(g).status == EdgeStatus::NonTree && !self.nontree_somewhere(g)
            })
            .collect();
        if !d.is_empty() {
            self.collapse(&d)?;
        }
        Ok(change)
    }

    /// Rebuilds the smallest slot `j` that can absorb `d` together with
    /// the non-tree edges of slots `0..=j`.
    pub fn collapse(&mut self, d: &[EdgeId]) -> Result<()> {
        let counts = self.nontree_counts();
        let mut total = d.len();
        let mut j = 0;
        loop {
            total += counts[j];
            if total <= 1usize << j {
                break;
            }
            j += 1;
            if j == self.slots.len() {
                return Err(Error::Audit("no slot can absorb the collapse".into()));
            }
        }
        let mut pool: BTreeSet<EdgeId> = d.iter().copied().collect();
        for i in 0..=j {
            if let Some(slot) = self.slots[i].take() {
                for l in slot.dec.nontree() {
                    if let LocalEdge::Real(g) = slot.meaning[l.index()] {
                        pool.insert(g);
                    }
                }
                self.retire(i, slot);
            }
        }
        let nontree: Vec<EdgeId> = pool
            .into_iter()
            .filter(|&g| self.edges.get(g).status == EdgeStatus::NonTree)
            .collect();
        self.stats.collapses += 1;
        self.stats.max_slot = self.stats.max_slot.max(j);
        if nontree.is_empty() {
            return Ok(());
        }
        let comp = self.build_compressed(&nontree);
        self.check_compressed(j, &comp);
        let dec = DecMsf::with_queue(comp.vertices.len(), &comp.edges, self.params, self.mode)?;
        for (l, m) in comp.meaning.iter().enumerate() {
            let local = EdgeId(l as u32);
            let globals: &[EdgeId] = match m {
                LocalEdge::Real(g) => std::slice::from_ref(g),
                LocalEdge::Super(path) => path,
            };
            for &g in globals {
                self.containment.entry(g).or_default().push((j, local));
            }
        }
        self.stats.rebuilt_edges += comp.edges.len() as u64;
        self.slots[j] = Some(Slot {
            dec,
            meaning: comp.meaning,
            generation: self.stats.collapses,
        });
        Ok(())
    }

    fn retire(&mut self, i: usize, slot: Slot<Q>) {
        self.retired.add(&slot.dec.counters());
        self.check_promotions(i, &slot.dec);
        for m in &slot.meaning {
            let globals: &[EdgeId] = match m {
                LocalEdge::Real(g) => std::slice::from_ref(g),
                LocalEdge::Super(path) => path,
            };
            for g in globals {
                if let Some(list) = self.containment.get_mut(g) {
                    list.retain(|&(k, _)| k != i);
                    if list.is_empty() {
                        self.containment.remove(g);
                    }
                }
            }
        }
    }

    fn check_promotions(&mut self, i: usize, dec: &DecMsf<Q>) {
        if let Some(sc) = dec.shortcuts() {
            if sc.stats.hop_violations + sc.stats.ndq_violations > 0 {
                self.violations.push(format!(
                    "structure {i}: {} hop and {} descendant cap violations",
                    sc.stats.hop_violations, sc.stats.ndq_violations
                ));
            }
        }
        let m = dec.edges().edge_count() as u64;
        let c = dec.counters();
        if c.promotions > m * dec.l_max() as u64 {
            self.violations.push(format!(
                "structure {i}: {} promotions exceed {m} edges times {} levels",
                c.promotions,
                dec.l_max()
            ));
        }
    }

    fn check_compressed(&mut self, j: usize, comp: &Compressed) {
        let k = comp.nontree_count();
        if comp.edges.len() > 5 * k {
            self.violations.push(format!(
                "structure {j} has {} edges for {k} non-tree edges",
                comp.edges.len()
            ));
        }
        let nl = comp.vertices.len();
        let mut dsu = Dsu::new(nl);
        for &(a, b, _) in &comp.edges {
            dsu.union(a.index(), b.index());
        }
        let mut has_nontree = vec![false; nl];
        for (&(a, _, _), m) in comp.edges.iter().zip(&comp.meaning) {
            if matches!(m, LocalEdge::Real(_)) {
                let r = dsu.find(a.index());
                has_nontree[r] = true;
            }
        }
        for (x, &has) in has_nontree.iter().enumerate() {
            if dsu.find(x) == x && !has {
                self.violations
                    .push(format!("structure {j} has a component without non-tree edges"));
            }
        }
    }

    /// Local graph over `nontree` plus the compressed Steiner forest of `F`
    /// spanning their endpoints.
    pub fn build_compressed(&self, nontree: &[EdgeId]) -> Compressed {
        let n = self.vertex_count();
        let mut terminal = vec![false; n];
        for &g in nontree {
            let (a, b) = self.edges.get(g).endpoints;
            terminal[a.index()] = true;
            terminal[b.index()] = true;
        }
        // Steiner edges: forest edges whose far side (rooted at a terminal)
        // holds a terminal
        let mut in_steiner: BTreeSet<EdgeId> = BTreeSet::new();
        let mut visited = vec![false; n];
        for t in 0..n {
            if !terminal[t] || visited[t] {
                continue;
            }
            let mut order = vec![(t, None::<EdgeId>)];
            visited[t] = true;
            let mut k = 0;
            while k < order.len() {
                let (x, _) = order[k];
                for &fe in &self.f_adj[x] {
                    let y = self.edges.get(fe).other(VertexId(x as u32)).index();
                    if !visited[y] {
                        visited[y] = true;
                        order.push((y, Some(fe)));
                    }
                }
                k += 1;
            }
            let mut below: HashMap<usize, bool> = HashMap::new();
            for &(x, up) in order.iter().rev() {
                let has = terminal[x] || below.get(&x).copied().unwrap_or(false);
                if let (true, Some(fe)) = (has, up) {
                    in_steiner.insert(fe);
                    let p = self.edges.get(fe).other(VertexId(x as u32)).index();
                    below.insert(p, true);
                }
            }
        }
        let mut s_adj: BTreeMap<usize, Vec<EdgeId>> = BTreeMap::new();
        for &fe in &in_steiner {
            let (a, b) = self.edges.get(fe).endpoints;
            s_adj.entry(a.index()).or_default().push(fe);
            s_adj.entry(b.index()).or_default().push(fe);
        }
        let is_key = |x: usize| terminal[x] || s_adj.get(&x).map_or(0, |v| v.len()) != 2;
        let keys: Vec<usize> = (0..n).filter(|&x| terminal[x] || (s_adj.contains_key(&x) && is_key(x))).collect();
        let local: HashMap<usize, u32> = keys.iter().enumerate().map(|(i, &x)| (x, i as u32)).collect();

        let mut out = Compressed {
            vertices: keys.iter().map(|&x| VertexId(x as u32)).collect(),
            ..Compressed::default()
        };
        let mut used: BTreeSet<EdgeId> = BTreeSet::new();
        for &start in &keys {
            for &first in s_adj.get(&start).map(|v| v.as_slice()).unwrap_or(&[]) {
                if used.contains(&first) {
                    continue;
                }
                let mut path = vec![first];
                used.insert(first);
                let mut cur = self.edges.get(first).other(VertexId(start as u32)).index();
                let mut via = first;
                while !is_key(cur) {
                    let next = *s_adj[&cur].iter().find(|&&fe| fe != via).expect("degree two");
                    used.insert(next);
                    path.push(next);
                    cur = self.edges.get(next).other(VertexId(cur as u32)).index();
                    via = next;
                }
                let tb = out.edges.len() as u64;
                out.edges.push((
                    VertexId(local[&start]),
                    VertexId(local[&cur]),
                    WeightKey::super_edge(tb),
                ));
                out.meaning.push(LocalEdge::Super(path));
            }
        }
        for &g in nontree {
            let r = self.edges.get(g);
            let (a, b) = r.endpoints;
            out.edges.push((VertexId(local[&a.index()]), VertexId(local[&b.index()]), r.key));
            out.meaning.push(LocalEdge::Real(g));
        }
        out
    }

    /// Checks the reduction invariants and, depending on `depth`, the
    /// decremental structures.
    pub fn audit(&self, depth: AuditDepth) -> Vec<String> {
        let mut errs = self.violations.clone();
        for (i, c) in self.nontree_counts().into_iter().enumerate() {
            if c > 1usize << i {
                errs.push(format!("structure {i} holds {c} non-tree edges"));
            }
        }
        for r in self.edges.live() {
            let tree = self.handles.contains_key(&r.id);
            if tree != (r.status == EdgeStatus::Tree) {
                errs.push(format!("{:?} status disagrees with the forest", r.id));
            }
            if r.status == EdgeStatus::NonTree && !self.nontree_somewhere(r.id) {
                errs.push(format!("non-tree {:?} is not non-tree in any structure", r.id));
            }
        }
        for (i, slot) in self.slots.iter().enumerate() {
            let Some(slot) = slot else { continue };
            for (l, m) in slot.meaning.iter().enumerate() {
                let rec = slot.dec.edge(EdgeId(l as u32)).expect("local edge");
                if matches!(m, LocalEdge::Super(_)) && rec.status == EdgeStatus::NonTree {
                    errs.push(format!("super edge {l} of structure {i} is non-tree"));
                }
            }
            let m = slot.dec.edges().edge_count() as u64;
            if slot.dec.counters().promotions > m * slot.dec.l_max() as u64 {
                errs.push(format!("structure {i} exceeds its promotion budget"));
            }
            if let Some(sc) = slot.dec.shortcuts() {
                if sc.stats.hop_violations + sc.stats.ndq_violations > 0 {
                    errs.push(format!("structure {i} broke a shortcut cap"));
                }
            }
            if depth >= AuditDepth::Structures {
                let queues = depth == AuditDepth::Queues;
                errs.extend(
                    slot.dec
                        .audit_with(queues)
                        .into_iter()
                        .map(|e| format!("structure {i}: {e}")),
                );
            }
        }
        errs
    }
}
