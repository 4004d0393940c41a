//! Acceptance checks, one line per criterion. Run with
//! `cargo test --test acceptance` (optionally followed by `-- c2 c8` to pick
//! a subset).

mod common;

use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::Instant;

use common::{cheapest_crossing, kruskal, reach, Edge};
use dynmsf::fulldyn::{AuditDepth, FullDynMsf, MsfChange};
use dynmsf::oracle::{self, Op, ReplayConfig, Workload};
use dynmsf::{DecMsf, EdgeId, Params, SearchMode, VertexId, WeightKey};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

/// Keeps the first few messages and a total.
#[derive(Default)]
struct Faults {
    count: usize,
    first: Vec<String>,
}

impl Faults {
    fn push(&mut self, msg: String) {
        self.count += 1;
        if self.first.len() < 5 {
            self.first.push(msg);
        }
    }

    fn verdict(&self, ok: String) -> Check {
        if self.count == 0 {
            Ok(ok)
        } else {
            Err(format!("{} faults, first: {}", self.count, self.first.join(" | ")))
        }
    }
}

/// What one audited fully-dynamic run observed, sorted by criterion.
#[derive(Default)]
struct RunLog {
    oracle: Faults,
    reduction: Faults,
    hierarchy: Faults,
    counting: Faults,
    ops: usize,
    collapses_seen: usize,
}

fn kruskal_ids(n: usize, all: &[Edge], live: &[bool]) -> Vec<EdgeId> {
    kruskal(n, all, live).into_iter().map(|i| EdgeId(i as u32)).collect()
}

/// Test-side invariants on every live structure; `prev` carries level
/// assignments per slot and generation for the monotonicity check.
fn check_structures(
    s: &FullDynMsf,
    at: usize,
    prev: &mut BTreeMap<usize, (u64, Vec<u8>)>,
    log: &mut RunLog,
) {
    for (i, &c) in s.nontree_counts().iter().enumerate() {
        if c > 1 << i {
            log.reduction.push(format!("op {at}: slot {i} holds {c} non-tree edges"));
        }
    }
    for i in 0..s.slot_count() {
        let Some(d) = s.structure(i) else {
            prev.remove(&i);
            continue;
        };
        let gen = s.generation(i).expect("live slot");
        let levels = d.level_assignment();
        let cap = 63 - (d.vertex_count().max(1) as u64).leading_zeros();
        if let Some(&l) = levels.iter().find(|&&l| l as u32 > cap) {
            log.hierarchy.push(format!("op {at}: slot {i} has level {l} above {cap}"));
        }
        if let Some((g, old)) = prev.get(&i) {
            if *g == gen {
                if let Some(e) = (0..old.len()).find(|&e| levels[e] < old[e]) {
                    log.hierarchy.push(format!("op {at}: slot {i} edge {e} level decreased"));
                }
            } else {
                log.collapses_seen += 1;
            }
        }
        prev.insert(i, (gen, levels));
        let m = d.edges().edge_count() as u64;
        let promos = d.counters().promotions;
        if promos > m * cap as u64 {
            log.counting.push(format!("op {at}: slot {i} made {promos} promotions, m = {m}"));
        }
        if let Some(sc) = d.shortcuts() {
            if sc.stats.hop_violations + sc.stats.ndq_violations > 0 {
                log.counting.push(format!("op {at}: slot {i} broke a shortcut cap"));
            }
        }
    }
}

/// Routes a library audit message to the criterion it belongs to.
fn file_audit(msg: String, at: usize, log: &mut RunLog) {
    let msg = format!("op {at}: {msg}");
    if msg.contains("promotion") || msg.contains("cap") {
        log.counting.push(msg);
    } else if msg.contains("structure ") && msg.contains(": ") && msg.matches(':').count() >= 2 {
        log.hierarchy.push(msg);
    } else {
        log.reduction.push(msg);
    }
}

/// Replays `w` with a Kruskal check and an audit of `depth` after every op.
fn audited_run(w: &Workload, mode: SearchMode, depth: AuditDepth) -> RunLog {
    let keys = w.keys();
    let mut s = FullDynMsf::new(w.n, Params::default(), mode);
    let mut all: Vec<Edge> = Vec::new();
    let mut live: Vec<bool> = Vec::new();
    let mut ids: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    let mut prev = BTreeMap::new();
    let mut log = RunLog::default();
    for (at, op) in w.ops.iter().enumerate() {
        match *op {
            Op::Insert(u, v, _) => {
                let key = keys[all.len()];
                if let Err(e) = s.insert(u, v, key) {
                    log.oracle.push(format!("op {at}: insert failed: {e}"));
                    return log;
                }
                ids.insert((u.0.min(v.0), u.0.max(v.0)), all.len());
                all.push((u, v, key));
                live.push(true);
            }
            Op::Delete(u, v) => {
                let i = ids.remove(&(u.0.min(v.0), u.0.max(v.0))).expect("valid workload");
                live[i] = false;
                if let Err(e) = s.delete(u, v) {
                    log.oracle.push(format!("op {at}: delete failed: {e}"));
                    return log;
                }
            }
            Op::Query => {}
        }
        let want = kruskal_ids(w.n, &all, &live);
        if s.msf() != want {
            log.oracle.push(format!("op {at}: forest differs from Kruskal"));
        }
        for msg in s.audit(depth) {
            file_audit(msg, at, &mut log);
        }
        check_structures(&s, at, &mut prev, &mut log);
        log.ops += 1;
    }
    log
}

fn sizes() -> [usize; 4] {
    [8, 16, 32, 64]
}

/// The shared runs behind the oracle, reduction, hierarchy and counting
/// checks: 200 workloads of 2000 mixed ops, shortcut mode.
fn main_runs() -> &'static (Vec<RunLog>, f64) {
    static RUNS: OnceLock<(Vec<RunLog>, f64)> = OnceLock::new();
    RUNS.get_or_init(|| {
        let t = Instant::now();
        let logs = (0..200u64)
            .map(|k| {
                let n = sizes()[k as usize % 4];
                let w = oracle::gen_workload(n, 2000, 0.6, 10_000 + k);
                audited_run(&w, SearchMode::Shortcut, AuditDepth::Structures)
            })
            .collect();
        (logs, t.elapsed().as_secs_f64())
    })
}

fn summarize(pick: impl Fn(&RunLog) -> &Faults, what: &str) -> Check {
    let (logs, secs) = main_runs();
    let mut all = Faults::default();
    for (k, log) in logs.iter().enumerate() {
        let f = pick(log);
        all.count += f.count;
        for m in &f.first {
            if all.first.len() < 5 {
                all.first.push(format!("run {k} {m}"));
            }
        }
    }
    let ops: usize = logs.iter().map(|l| l.ops).sum();
    let collapses: usize = logs.iter().map(|l| l.collapses_seen).sum();
    all.verdict(format!(
        "{} runs, {ops} ops, {collapses} rebuilds seen, {what} ({secs:.1}s for the shared runs)",
        logs.len()
    ))
}

fn c1_oracle() -> Check {
    summarize(|l| &l.oracle, "forest equals Kruskal after every op")
}

fn c4_reduction() -> Check {
    summarize(|l| &l.reduction, "slot and rebuild invariants hold")
}

fn c5_hierarchy() -> Check {
    summarize(|l| &l.hierarchy, "full structure audit clean after every op")
}

fn c7_counting() -> Check {
    summarize(|l| &l.counting, "promotion budget and shortcut caps respected")
}

// ---------- exhaustive small graphs ----------

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// One representative edge mask per isomorphism class of simple graphs on
/// `n` vertices.
fn graph_classes(n: usize) -> Vec<u32> {
    let ps = pairs(n);
    let index: BTreeMap<(usize, usize), usize> = ps.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let perms = permutations(n);
    let mut reps = std::collections::BTreeSet::new();
    for mask in 0u32..(1 << ps.len()) {
        let canon = perms
            .iter()
            .map(|p| {
                let mut m = 0u32;
                for (i, &(a, b)) in ps.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        let (x, y) = (p[a].min(p[b]), p[a].max(p[b]));
                        m |= 1 << index[&(x, y)];
                    }
                }
                m
            })
            .min()
            .expect("at least one permutation");
        reps.insert(canon);
    }
    reps.into_iter().collect()
}

fn deletion_orders(m: usize, cap: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let fact: usize = (1..=m).product();
    if fact <= cap {
        permutations(m)
    } else {
        let base: Vec<usize> = (0..m).collect();
        (0..cap)
            .map(|_| {
                let mut o = base.clone();
                o.shuffle(rng);
                o
            })
            .collect()
    }
}

/// Deletes edges of `edges` in `order`, checking every replacement against
/// the cut oracle and the forest against Kruskal.
fn exhaust_order(n: usize, edges: &[Edge], order: &[usize], mode: SearchMode) -> Result<(), String> {
    let mut d: DecMsf = DecMsf::new(n, edges, Params::default(), mode).map_err(|e| e.to_string())?;
    let mut live = vec![true; edges.len()];
    let mut tree = kruskal(n, edges, &live);
    for &e in order {
        let was_tree = tree.contains(&e);
        live[e] = false;
        let want = if was_tree {
            tree.retain(|&t| t != e);
            let side = reach(n, edges, &tree, edges[e].0);
            cheapest_crossing(edges, &live, &side)
        } else {
            None
        };
        let got = d.delete(EdgeId(e as u32)).map_err(|x| x.to_string())?;
        if got.map(|g| g.index()) != want {
            return Err(format!("deleting {e}: replacement {got:?}, oracle {want:?}"));
        }
        if let Some(r) = want {
            tree.push(r);
            tree.sort();
        }
        let msf: Vec<usize> = d.msf().into_iter().map(|x| x.index()).collect();
        if msf != tree {
            return Err(format!("after deleting {e}: forest {msf:?}, oracle {tree:?}"));
        }
    }
    let errs = d.audit();
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs.join("; "))
    }
}

fn c2_exhaustive() -> Check {
    let mut faults = Faults::default();
    let (mut classes, mut orders) = (0, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 2..=5 {
        let ps = pairs(n);
        for mask in graph_classes(n) {
            let chosen: Vec<(usize, usize)> =
                ps.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p).collect();
            if chosen.is_empty() {
                continue;
            }
            classes += 1;
            let mut ranks: Vec<u64> = (0..chosen.len() as u64).collect();
            ranks.shuffle(&mut rng);
            let edges: Vec<Edge> = chosen
                .iter()
                .zip(&ranks)
                .enumerate()
                .map(|(i, (&(a, b), &r))| (VertexId(a as u32), VertexId(b as u32), WeightKey::real(r, i as u64)))
                .collect();
            for order in deletion_orders(edges.len(), 10_000, &mut rng) {
                orders += 1;
                for mode in [SearchMode::Simple, SearchMode::Shortcut] {
                    if let Err(e) = exhaust_order(n, &edges, &order, mode) {
                        faults.push(format!("n = {n}, mask {mask:#x}, {mode:?}, order {order:?}: {e}"));
                    }
                }
            }
        }
    }
    faults.verdict(format!("{classes} graph classes, {orders} deletion orders in both modes, replacements match the cut oracle"))
}

// ---------- mode agreement ----------

/// Generation and level of every edge, per slot.
type SlotLevels = Vec<Option<(u64, Vec<u8>)>>;

/// Change stream and final per-slot levels of one replay.
fn trace(w: &Workload, mode: SearchMode) -> Result<(Vec<MsfChange>, SlotLevels), String> {
    let keys = w.keys();
    let mut s = FullDynMsf::new(w.n, Params::default(), mode);
    let mut stream = Vec::new();
    let mut inserted = 0;
    for op in &w.ops {
        let ch = match *op {
            Op::Insert(u, v, _) => {
                inserted += 1;
                s.insert(u, v, keys[inserted - 1]).map_err(|e| e.to_string())?.1
            }
            Op::Delete(u, v) => s.delete(u, v).map_err(|e| e.to_string())?,
            Op::Query => MsfChange::default(),
        };
        stream.push(ch);
    }
    let levels = (0..s.slot_count())
        .map(|i| s.structure(i).map(|d| (s.generation(i).expect("live"), d.level_assignment())))
        .collect();
    Ok((stream, levels))
}

fn c3_modes() -> Check {
    let mut faults = Faults::default();
    for k in 0..100u64 {
        let n = sizes()[k as usize % 4];
        let w = oracle::gen_workload(n, 1000, 0.6, 30_000 + k);
        match (trace(&w, SearchMode::Simple), trace(&w, SearchMode::Shortcut)) {
            (Ok(a), Ok(b)) => {
                if let Some(i) = a.0.iter().zip(&b.0).position(|(x, y)| x != y) {
                    faults.push(format!("workload {k}: streams differ at op {i}"));
                } else if a.1 != b.1 {
                    faults.push(format!("workload {k}: final levels differ"));
                }
            }
            (a, b) => faults.push(format!("workload {k}: {:?} {:?}", a.err(), b.err())),
        }
    }
    faults.verdict("100 workloads of 1000 ops, identical streams and final levels".into())
}

// ---------- queue soundness ----------

fn c6_queues() -> Check {
    let mut faults = Faults::default();
    let mut ops = 0;
    for k in 0..24u64 {
        let n = sizes()[k as usize % 4];
        let w = oracle::gen_workload(n, 1000, 0.6, 60_000 + k);
        let log = audited_run(&w, SearchMode::Shortcut, AuditDepth::Queues);
        ops += log.ops;
        for f in [&log.oracle, &log.reduction, &log.hierarchy, &log.counting] {
            for m in &f.first {
                faults.push(format!("mixed {k}: {m}"));
            }
        }
    }
    let mut dec_ops = 0;
    for (k, n) in [16usize, 32, 64].into_iter().enumerate() {
        let w = oracle::gen_decremental(n, 8 * n, 8 * n, 70_000 + k as u64);
        let mut cfg = ReplayConfig::new(SearchMode::Shortcut);
        cfg.audit = true;
        cfg.audit_depth = AuditDepth::Queues;
        match oracle::replay_decremental(&w, &cfg) {
            Ok((out, sum)) => {
                dec_ops += out.records.len();
                for d in out.divergences.iter().take(3) {
                    faults.push(format!("decremental n = {n} op {}: {}", d.index, d.msg));
                }
                if sum.min_balance < -1e-9 {
                    faults.push(format!("decremental n = {n}: ledger reached {}", sum.min_balance));
                }
            }
            Err(e) => faults.push(format!("decremental n = {n}: {e}")),
        }
    }
    faults.verdict(format!(
        "{ops} mixed ops and {dec_ops} decremental ops with every queue rebuilt and compared, ledger never negative"
    ))
}

// ---------- scaling ----------

fn c8_scaling() -> Check {
    let mut rows = Vec::new();
    for n in [256usize, 1024, 4096, 16384] {
        let r = oracle::scale_point(n, 10_000, 0, Params::default()).map_err(|e| e.to_string())?;
        rows.push(r);
    }
    let table: Vec<String> = rows
        .iter()
        .map(|r| format!("n={} hops/search={:.3} visits/search={:.3} ratio={:.4}", r.n, r.mean_hops(), r.mean_visits(), r.ratio()))
        .collect();
    let table = table.join("; ");
    if let Some(r) = rows.iter().find(|r| r.mean_hops() > r.mean_visits()) {
        return Err(format!("hops exceed visits at n = {}: {table}", r.n));
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio()).collect();
    let inversions: Vec<f64> = ratios.windows(2).filter(|w| w[1] > w[0]).map(|w| w[1] / w[0] - 1.0).collect();
    let ok = inversions.is_empty() || (inversions.len() == 1 && inversions[0] <= 0.05);
    if ok {
        Ok(table)
    } else {
        Err(format!("ratio rises {inversions:?}: {table}"))
    }
}

// ---------- buffer credit formula ----------

fn c9_credits() -> Check {
    let mut checked = 0;
    for alpha in [1.0, 2.0, 3.0] {
        for n in [16usize, 256, 4096, 65_536, 1 << 20] {
            let p = Params { alpha, ..Params::default() };
            let th = p.thresholds(n);
            let s_max = th.s_max as f64;
            let f = |s: f64| s * (2.0 + s_max.log2() - s.log2());
            for s in 1..th.s_max {
                let (a, b) = (f(s as f64), f(s as f64 + 1.0));
                if a >= b {
                    return Err(format!("alpha {alpha}, n {n}: f({s}) = {a} >= f({}) = {b}", s + 1));
                }
                let lib = th.buffer_tree_credits(s) / th.log_n;
                if (lib - a).abs() > 1e-9 * a.max(1.0) {
                    return Err(format!("alpha {alpha}, n {n}, s {s}: library gives {lib}, formula {a}"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} consecutive pairs strictly increasing over alpha in 1..=3"))
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    type Criterion = (&'static str, fn() -> Check);
    let checks: [Criterion; 9] = [
        ("c1 oracle equivalence, fully dynamic", c1_oracle),
        ("c2 oracle equivalence, decremental exhaustive", c2_exhaustive),
        ("c3 search mode agreement", c3_modes),
        ("c4 reduction invariants", c4_reduction),
        ("c5 hierarchy invariants", c5_hierarchy),
        ("c6 queue soundness", c6_queues),
        ("c7 counting bounds", c7_counting),
        ("c8 scaling trend", c8_scaling),
        ("c9 buffer credit monotonicity", c9_credits),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        if !filters.is_empty() && !filters.iter().any(|f| name.starts_with(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let res = check();
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(msg) => println!("PASS {name} [{secs:.1}s]: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name} [{secs:.1}s]: {msg}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
