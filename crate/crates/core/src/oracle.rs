//! Ground truth and workloads: Kruskal and Prim, exhaustive cut scans,
//! seeded workload generation, the workload text format and replay.
//!
//! Workloads are generated with ChaCha8 (`rand_chacha`), so a seed yields
//! the same byte stream on every platform.

use std::collections::{BTreeSet, BinaryHeap, HashSet};
use std::cmp::Reverse;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::counters::OpCounters;
use crate::decmsf::{Dsu, SearchMode};
use crate::edge::{EdgeId, VertexId, WeightKey};
use crate::error::{Error, Result};
use crate::fulldyn::{AuditDepth, FullDynMsf, MsfChange};
use crate::params::Params;

pub type KeyedEdge = (VertexId, VertexId, WeightKey);

/// MSF by Kruskal: positions of the tree edges (ascending) and their total rank.
pub fn kruskal(n: usize, edges: &[KeyedEdge]) -> (Vec<usize>, u64) {
    let mut idx: Vec<usize> = (0..edges.len()).collect();
    idx.sort_by_key(|&i| edges[i].2);
    let mut dsu = Dsu::new(n);
    let mut out = Vec::new();
    let mut total = 0;
    for i in idx {
        let (u, v, k) = edges[i];
        if dsu.union(u.index(), v.index()) {
            out.push(i);
            total += k.rank;
        }
    }
    out.sort();
    (out, total)
}

/// MSF by Prim with a binary heap, started from every unreached vertex.
pub fn prim(n: usize, edges: &[KeyedEdge]) -> (Vec<usize>, u64) {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, &(u, v, _)) in edges.iter().enumerate() {
        adj[u.index()].push(i);
        adj[v.index()].push(i);
    }
    let mut done = vec![false; n];
    let mut out = Vec::new();
    let mut total = 0;
    for s in 0..n {
        if done[s] {
            continue;
        }
        done[s] = true;
        let mut heap: BinaryHeap<Reverse<(WeightKey, usize, usize)>> = BinaryHeap::new();
        for &i in &adj[s] {
            let (u, v, k) = edges[i];
            let far = if u.index() == s { v } else { u };
            heap.push(Reverse((k, i, far.index())));
        }
        while let Some(Reverse((k, i, x))) = heap.pop() {
            if done[x] {
                continue;
            }
            done[x] = true;
            out.push(i);
            total += k.rank;
            for &j in &adj[x] {
                let (u, v, kj) = edges[j];
                let far = if u.index() == x { v } else { u };
                if !done[far.index()] {
                    heap.push(Reverse((kj, j, far.index())));
                }
            }
        }
    }
    out.sort();
    (out, total)
}

/// Cheapest edge with exactly one endpoint inside `side`, skipping `removed`.
pub fn min_cut_replacement(edges: &[KeyedEdge], removed: usize, side: &[bool]) -> Option<usize> {
    (0..edges.len())
        .filter(|&i| i != removed)
        .filter(|&i| side[edges[i].0.index()] != side[edges[i].1.index()])
        .min_by_key(|&i| edges[i].2)
}

/// One workload operation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Op {
    Insert(VertexId, VertexId, f64),
    Delete(VertexId, VertexId),
    Query,
}

impl Op {
    pub fn code(&self) -> &'static str {
        match self {
            Op::Insert(..) => "I",
            Op::Delete(..) => "D",
            Op::Query => "Q",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Workload {
    pub n: usize,
    pub ops: Vec<Op>,
}

fn pair(u: VertexId, v: VertexId) -> (u32, u32) {
    (u.0.min(v.0), u.0.max(v.0))
}

impl Workload {
    /// Ranks of the inserted edges, in insert order: sorted position of the
    /// raw weight, ties broken by insert order.
    pub fn keys(&self) -> Vec<WeightKey> {
        let raws: Vec<f64> = self
            .ops
            .iter()
            .filter_map(|op| match *op {
                Op::Insert(_, _, w) => Some(w),
                _ => None,
            })
            .collect();
        let mut order: Vec<usize> = (0..raws.len()).collect();
        order.sort_by(|&a, &b| raws[a].total_cmp(&raws[b]).then(a.cmp(&b)));
        let mut keys = vec![WeightKey::real(0, 0); raws.len()];
        for (rank, &i) in order.iter().enumerate() {
            keys[i] = WeightKey::real(rank as u64, i as u64);
        }
        keys
    }

    /// Checks that every insert targets an absent pair and every delete a
    /// live one. Errors name the op index.
    pub fn validate(&self) -> Result<()> {
        let mut live = HashSet::new();
        for (i, op) in self.ops.iter().enumerate() {
            let bad = |msg: String| Error::Precondition { index: i, msg };
            match *op {
                Op::Insert(u, v, w) => {
                    if u.index() >= self.n || v.index() >= self.n || u == v {
                        return Err(bad(format!("bad endpoints {} {}", u.0, v.0)));
                    }
                    if !w.is_finite() {
                        return Err(bad("weight is not finite".into()));
                    }
                    if !live.insert(pair(u, v)) {
                        return Err(bad(format!("edge {} {} already present", u.0, v.0)));
                    }
                }
                Op::Delete(u, v) => {
                    if !live.remove(&pair(u, v)) {
                        return Err(bad(format!("edge {} {} is not live", u.0, v.0)));
                    }
                }
                Op::Query => {}
            }
        }
        Ok(())
    }

    /// True if no insert follows the first delete.
    pub fn is_build_then_delete(&self) -> bool {
        let first_delete = self.ops.iter().position(|o| matches!(o, Op::Delete(..)));
        match first_delete {
            None => true,
            Some(p) => !self.ops[p..].iter().any(|o| matches!(o, Op::Insert(..))),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut n = None;
        let mut ops = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = ln + 1;
            let err = |msg: &str| Error::Parse {
                line,
                msg: msg.to_string(),
            };
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let toks: Vec<&str> = body.split_whitespace().collect();
            let vert = |s: &str| -> Result<VertexId> {
                s.parse::<u32>().map(VertexId).map_err(|_| err(&format!("bad vertex '{s}'")))
            };
            match (toks[0], toks.len()) {
                ("N", 2) => {
                    if n.is_some() {
                        return Err(err("repeated N line"));
                    }
                    n = Some(toks[1].parse::<usize>().map_err(|_| err("bad vertex count"))?);
                }
                ("I", 4) => {
                    let w = toks[3].parse::<f64>().map_err(|_| err("bad weight"))?;
                    ops.push(Op::Insert(vert(toks[1])?, vert(toks[2])?, w));
                }
                ("D", 3) => ops.push(Op::Delete(vert(toks[1])?, vert(toks[2])?)),
                ("Q", 1) => ops.push(Op::Query),
                _ => return Err(err(&format!("unrecognised line '{body}'"))),
            }
            if n.is_none() {
                return Err(err("first statement must be N"));
            }
        }
        let n = n.ok_or(Error::Parse {
            line: 0,
            msg: "missing N line".into(),
        })?;
        Ok(Workload { n, ops })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "N {}", self.n).unwrap();
        for op in &self.ops {
            match *op {
                Op::Insert(u, v, w) => writeln!(s, "I {} {} {}", u.0, v.0, w).unwrap(),
                Op::Delete(u, v) => writeln!(s, "D {} {}", u.0, v.0).unwrap(),
                Op::Query => s.push_str("Q\n"),
            }
        }
        s
    }
}

/// Random workload: each step is a query with probability 1/20, otherwise
/// an insert with probability `mix` (forced when no edge is live) or a
/// delete. Raw weights are distinct integers.
pub fn gen_workload(n: usize, ops: usize, mix: f64, seed: u64) -> Workload {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_edges = n * n.saturating_sub(1) / 2;
    let mut live: Vec<(u32, u32)> = Vec::new();
    let mut live_set: HashSet<(u32, u32)> = HashSet::new();
    let mut used_w: HashSet<u64> = HashSet::new();
    let mut out = Vec::with_capacity(ops);
    let span = (ops as u64 + 1) * 1000;
    for _ in 0..ops {
        if rng.gen_ratio(1, 20) {
            out.push(Op::Query);
            continue;
        }
        let want_insert = live.is_empty() || rng.gen_bool(mix.clamp(0.0, 1.0));
        if want_insert && live.len() >= max_edges {
            out.push(Op::Query);
        } else if want_insert {
            let p = loop {
                let a = rng.gen_range(0..n as u32);
                let b = rng.gen_range(0..n as u32);
                let p = (a.min(b), a.max(b));
                if a != b && !live_set.contains(&p) {
                    break (a, b);
                }
            };
            let w = loop {
                let w = rng.gen_range(0..span);
                if used_w.insert(w) {
                    break w;
                }
            };
            live.push((p.0.min(p.1), p.0.max(p.1)));
            live_set.insert((p.0.min(p.1), p.0.max(p.1)));
            out.push(Op::Insert(VertexId(p.0), VertexId(p.1), w as f64));
        } else {
            let k = rng.gen_range(0..live.len());
            let (a, b) = live.swap_remove(k);
            live_set.remove(&(a, b));
            let (a, b) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
            out.push(Op::Delete(VertexId(a), VertexId(b)));
        }
    }
    Workload { n, ops: out }
}

#[derive(Clone, Copy, Debug)]
pub struct ReplayConfig {
    pub mode: SearchMode,
    pub params: Params,
    /// Compare against Kruskal after every op.
    pub check_oracle: bool,
    /// Audit after every op.
    pub audit: bool,
    /// Depth of those audits.
    pub audit_depth: AuditDepth,
}

impl ReplayConfig {
    pub fn new(mode: SearchMode) -> Self {
        ReplayConfig {
            mode,
            params: Params::default(),
            check_oracle: true,
            audit: false,
            audit_depth: AuditDepth::Queues,
        }
    }
}

/// Outcome of one op.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OpRecord {
    pub index: usize,
    pub op: &'static str,
    pub change: MsfChange,
    pub msf_weight: u64,
    pub counters: OpCounters,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Divergence {
    pub index: usize,
    pub msg: String,
}

#[derive(Clone, Debug, Default)]
pub struct ReplayOutcome {
    pub records: Vec<OpRecord>,
    pub divergences: Vec<Divergence>,
}

/// Runs `w` through the fully-dynamic structure, checking it against the
/// oracles as configured. Precondition violations abort with an error
/// naming the op index.
pub fn replay(w: &Workload, cfg: &ReplayConfig) -> Result<ReplayOutcome> {
    w.validate()?;
    let keys = w.keys();
    let mut s = FullDynMsf::new(w.n, cfg.params, cfg.mode);
    let mut all: Vec<KeyedEdge> = Vec::new();
    let mut live: BTreeSet<usize> = BTreeSet::new();
    let mut out = ReplayOutcome::default();
    let mut prev = OpCounters::default();
    for (index, op) in w.ops.iter().enumerate() {
        let change = match *op {
            Op::Insert(u, v, _) => {
                let key = keys[all.len()];
                let (id, ch) = s.insert(u, v, key).map_err(|e| Error::Precondition {
                    index,
                    msg: e.to_string(),
                })?;
                debug_assert_eq!(id.index(), all.len());
                live.insert(all.len());
                all.push((u, v, key));
                ch
            }
            Op::Delete(u, v) => {
                let id = s.edge_between(u, v).ok_or(Error::Precondition {
                    index,
                    msg: format!("edge {} {} is not live", u.0, v.0),
                })?;
                live.remove(&id.index());
                s.delete(u, v).map_err(|e| Error::Precondition {
                    index,
                    msg: e.to_string(),
                })?
            }
            Op::Query => MsfChange::default(),
        };
        let now = s.counters();
        let rec = OpRecord {
            index,
            op: op.code(),
            change,
            msf_weight: s.msf_weight(),
            counters: now - prev,
        };
        prev = now;
        if cfg.check_oracle {
            let ids: Vec<usize> = live.iter().copied().collect();
            let sub: Vec<KeyedEdge> = ids.iter().map(|&i| all[i]).collect();
            let (tree, weight) = kruskal(w.n, &sub);
            let want: Vec<EdgeId> = tree.into_iter().map(|t| EdgeId(ids[t] as u32)).collect();
            if s.msf() != want {
                out.divergences.push(Divergence {
                    index,
                    msg: format!("forest {:?} but Kruskal gives {:?}", s.msf(), want),
                });
            }
            if weight != rec.msf_weight {
                out.divergences.push(Divergence {
                    index,
                    msg: format!("weight {} but Kruskal gives {weight}", rec.msf_weight),
                });
            }
        }
        if cfg.audit {
            for msg in s.audit(cfg.audit_depth) {
                out.divergences.push(Divergence { index, msg });
            }
        }
        out.records.push(rec);
    }
    Ok(out)
}

/// Build-then-delete workload: `m` random edges (capped at the complete
/// graph) followed by `deletes` deletions of random live edges.
pub fn gen_decremental(n: usize, m: usize, deletes: usize, seed: u64) -> Workload {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = m.min(n * n.saturating_sub(1) / 2);
    let mut live: Vec<(u32, u32)> = Vec::with_capacity(m);
    let mut seen: HashSet<(u32, u32)> = HashSet::with_capacity(m);
    let mut ops = Vec::with_capacity(m + deletes);
    while live.len() < m {
        let a = rng.gen_range(0..n as u32);
        let b = rng.gen_range(0..n as u32);
        if a == b || !seen.insert((a.min(b), a.max(b))) {
            continue;
        }
        live.push((a, b));
        ops.push(Op::Insert(VertexId(a), VertexId(b), rng.gen::<u32>() as f64));
    }
    for _ in 0..deletes.min(m) {
        let k = rng.gen_range(0..live.len());
        let (a, b) = live.swap_remove(k);
        ops.push(Op::Delete(VertexId(a), VertexId(b)));
    }
    Workload { n, ops }
}

/// Totals of a decremental run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DecSummary {
    pub searches: u64,
    pub counters: OpCounters,
    pub max_hops: u64,
    pub hop_violations: u64,
    pub ndq_violations: u64,
    pub max_cluster_ndq: usize,
    pub min_balance: f64,
}

/// Runs a build-then-delete workload on one decremental structure built
/// from the inserts before the first delete. Records are emitted for the
/// delete and query ops only; `became_tree` is the replacement edge.
pub fn replay_decremental(w: &Workload, cfg: &ReplayConfig) -> Result<(ReplayOutcome, DecSummary)> {
    w.validate()?;
    if !w.is_build_then_delete() {
        return Err(Error::Precondition {
            index: 0,
            msg: "workload inserts after deleting".into(),
        });
    }
    let keys = w.keys();
    let first = w
        .ops
        .iter()
        .position(|o| !matches!(o, Op::Insert(..)))
        .unwrap_or(w.ops.len());
    let mut all: Vec<KeyedEdge> = Vec::new();
    for op in &w.ops[..first] {
        if let Op::Insert(u, v, _) = *op {
            all.push((u, v, keys[all.len()]));
        }
    }
    let mut by_pair: std::collections::HashMap<(u32, u32), EdgeId> = all
        .iter()
        .enumerate()
        .map(|(i, &(u, v, _))| (pair(u, v), EdgeId(i as u32)))
        .collect();
    let mut d = crate::decmsf::DecMsf::new(w.n, &all, cfg.params, cfg.mode)?;
    let mut live: BTreeSet<usize> = (0..all.len()).collect();
    let mut out = ReplayOutcome::default();
    let mut prev = d.counters();
    let mut summary = DecSummary {
        min_balance: f64::INFINITY,
        ..DecSummary::default()
    };
    for (index, op) in w.ops.iter().enumerate().skip(first) {
        let mut change = MsfChange::default();
        if let Op::Delete(u, v) = *op {
            let e = by_pair.remove(&pair(u, v)).ok_or(Error::Precondition {
                index,
                msg: format!("edge {} {} is not live", u.0, v.0),
            })?;
            live.remove(&e.index());
            change.became_tree = d.delete(e)?;
        }
        let now = d.counters();
        let weight = d.msf().iter().map(|&e| all[e.index()].2.rank).sum();
        out.records.push(OpRecord {
            index,
            op: op.code(),
            change,
            msf_weight: weight,
            counters: now - prev,
        });
        prev = now;
        if cfg.check_oracle {
            let ids: Vec<usize> = live.iter().copied().collect();
            let sub: Vec<KeyedEdge> = ids.iter().map(|&i| all[i]).collect();
            let (tree, _) = kruskal(w.n, &sub);
            let want: Vec<EdgeId> = tree.into_iter().map(|t| EdgeId(ids[t] as u32)).collect();
            if d.msf() != want {
                out.divergences.push(Divergence {
                    index,
                    msg: format!("forest {:?} but Kruskal gives {:?}", d.msf(), want),
                });
            }
        }
        if cfg.audit {
            for msg in d.audit() {
                out.divergences.push(Divergence { index, msg });
            }
        }
        if let Some(sc) = d.shortcuts() {
            summary.min_balance = summary.min_balance.min(sc.ledger.balance());
        }
    }
    summary.searches = d.search_count();
    summary.counters = d.counters();
    if let Some(sc) = d.shortcuts() {
        summary.max_hops = sc.stats.max_hops;
        summary.hop_violations = sc.stats.hop_violations;
        summary.ndq_violations = sc.stats.ndq_violations;
        summary.max_cluster_ndq = sc.stats.max_cluster_ndq;
    }
    Ok((out, summary))
}

/// One row of the scaling report.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleRow {
    pub n: usize,
    pub m: usize,
    pub deletes: usize,
    pub simple_searches: u64,
    pub simple_visits: u64,
    pub shortcut_searches: u64,
    pub shortcut_hops: u64,
    pub promotions: u64,
    pub queue_ops: u64,
    pub credits_spent: f64,
    pub max_hops: u64,
    pub hop_violations: u64,
    pub ndq_violations: u64,
}

impl ScaleRow {
    pub fn mean_visits(&self) -> f64 {
        self.simple_visits as f64 / self.simple_searches.max(1) as f64
    }

    pub fn mean_hops(&self) -> f64 {
        self.shortcut_hops as f64 / self.shortcut_searches.max(1) as f64
    }

    pub fn ratio(&self) -> f64 {
        self.mean_hops() / self.mean_visits()
    }
}

/// Deletes `ops` random edges from a random graph with `4n + ops` edges,
/// so at least `4n` edges stay live throughout, in both search modes, and
/// reports per-search work. Fails if the modes disagree.
pub fn scale_point(n: usize, ops: usize, seed: u64, params: Params) -> Result<ScaleRow> {
    scale_point_with(n, 4 * n + ops, ops, seed, params)
}

/// As [`scale_point`] with an explicit edge count `m`.
pub fn scale_point_with(n: usize, m: usize, ops: usize, seed: u64, params: Params) -> Result<ScaleRow> {
    let w = gen_decremental(n, m, ops, seed);
    let mut cfg = ReplayConfig::new(SearchMode::Simple);
    cfg.params = params;
    cfg.check_oracle = false;
    let (a, sa) = replay_decremental(&w, &cfg)?;
    cfg.mode = SearchMode::Shortcut;
    let (b, sb) = replay_decremental(&w, &cfg)?;
    let strip = |r: &OpRecord| (r.index, r.change, r.msf_weight);
    if a.records.iter().map(strip).ne(b.records.iter().map(strip)) {
        return Err(Error::Audit(format!("modes disagree at n = {n}")));
    }
    let m = w.ops.iter().filter(|o| matches!(o, Op::Insert(..))).count();
    Ok(ScaleRow {
        n,
        m,
        deletes: w.ops.len() - m,
        simple_searches: sa.searches,
        simple_visits: sa.counters.down_visits,
        shortcut_searches: sb.searches,
        shortcut_hops: sb.counters.hops,
        promotions: sb.counters.promotions,
        queue_ops: sb.counters.queue_ops,
        credits_spent: sb.counters.credits_spent,
        max_hops: sb.max_hops,
        hop_violations: sb.hop_violations,
        ndq_violations: sb.ndq_violations,
    })
}
