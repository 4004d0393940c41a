mod common;

use common::random_graph;
use dynmsf::oracle::{gen_workload, kruskal, min_cut_replacement, prim, replay, Op, ReplayConfig, Workload};
use dynmsf::{Error, SearchMode, VertexId, WeightKey};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn kruskal_small_cases() {
    assert_eq!(kruskal(3, &[]), (vec![], 0));
    let tri = [
        (VertexId(0), VertexId(1), WeightKey::real(0, 0)),
        (VertexId(1), VertexId(2), WeightKey::real(1, 1)),
        (VertexId(0), VertexId(2), WeightKey::real(2, 2)),
    ];
    assert_eq!(kruskal(3, &tri), (vec![0, 1], 1));
}

#[test]
fn kruskal_agrees_with_prim() {
    for seed in 0..1000 {
        let n = 2 + (seed as usize % 20);
        let m = (seed as usize * 7) % (n * (n - 1) / 2 + 1);
        let g = random_graph(n, m, seed);
        assert_eq!(kruskal(n, &g), prim(n, &g), "seed {seed}");
    }
}

#[test]
fn kruskal_ignores_input_order() {
    let g = random_graph(20, 80, 3);
    let (tree, w) = kruskal(20, &g);
    let want: Vec<_> = tree.iter().map(|&i| g[i]).collect();
    let mut h = g.clone();
    h.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
    let (t2, w2) = kruskal(20, &h);
    let mut got: Vec<_> = t2.iter().map(|&i| h[i]).collect();
    got.sort_by_key(|e| e.2);
    let mut want = want;
    want.sort_by_key(|e| e.2);
    assert_eq!((got, w2), (want, w));
}

#[test]
fn cut_scan_cases() {
    let g = [
        (VertexId(0), VertexId(1), WeightKey::real(0, 0)),
        (VertexId(1), VertexId(2), WeightKey::real(1, 1)),
        (VertexId(0), VertexId(2), WeightKey::real(2, 2)),
    ];
    // cut {0} after removing edge 0: crossing edges are 2 only
    assert_eq!(min_cut_replacement(&g, 0, &[true, false, false]), Some(2));
    assert_eq!(min_cut_replacement(&g[..1], 0, &[true, false, false]), None);
}

#[test]
fn generation_is_deterministic_and_valid() {
    let a = gen_workload(16, 500, 0.6, 7).to_text();
    let b = gen_workload(16, 500, 0.6, 7).to_text();
    assert_eq!(a, b);
    for seed in 0..1000 {
        let w = gen_workload(2 + seed as usize % 30, 200, 0.55, seed);
        w.validate().unwrap();
    }
}

#[test]
fn insert_only_grows() {
    let w = gen_workload(10, 300, 1.0, 1);
    assert!(w.ops.iter().all(|o| !matches!(o, Op::Delete(..))));
    // saturates at the complete graph, then only queries remain
    let inserts = w.ops.iter().filter(|o| matches!(o, Op::Insert(..))).count();
    assert_eq!(inserts, 45);
}

#[test]
fn text_round_trip_and_errors() {
    let w = gen_workload(12, 200, 0.6, 4);
    let back = Workload::parse(&w.to_text()).unwrap();
    assert_eq!(back, w);
    let text = "# comment\nN 4\nI 0 1 2.5\nI 1 2 -3 # trailing\nQ\nD 1 0\n";
    let w = Workload::parse(text).unwrap();
    assert_eq!(w.n, 4);
    assert_eq!(w.ops.len(), 4);
    assert!(matches!(Workload::parse("N 3\nI 0 x 1\n"), Err(Error::Parse { line: 2, .. })));
    assert!(matches!(Workload::parse("I 0 1 1\n"), Err(Error::Parse { line: 1, .. })));
    assert!(matches!(Workload::parse("N 3\nX\n"), Err(Error::Parse { line: 2, .. })));
    let bad = Workload::parse("N 3\nI 0 1 1\nD 1 2\n").unwrap();
    assert!(matches!(replay(&bad, &ReplayConfig::new(SearchMode::Simple)), Err(Error::Precondition { index: 1, .. })));
}

#[test]
fn ranks_follow_raw_weights() {
    let w = Workload::parse("N 3\nI 0 1 5\nI 1 2 2\nI 0 2 9\n").unwrap();
    let ranks: Vec<u64> = w.keys().iter().map(|k| k.rank).collect();
    assert_eq!(ranks, vec![1, 0, 2]);
    let w = Workload::parse("N 3\nI 0 1 3\nI 1 2 3\n").unwrap();
    let ranks: Vec<u64> = w.keys().iter().map(|k| k.rank).collect();
    assert_eq!(ranks, vec![0, 1]);
}

#[test]
fn trivial_replay_has_no_divergence() {
    let w = Workload { n: 1, ops: vec![Op::Query] };
    let out = replay(&w, &ReplayConfig::new(SearchMode::Shortcut)).unwrap();
    assert!(out.divergences.is_empty());
    assert_eq!(out.records.len(), 1);
}

#[test]
fn deleting_from_a_tree_lowers_weight() {
    let mut text = String::from("N 8\n");
    for a in 0..7 {
        text += &format!("I {a} {} {}\n", a + 1, 10 + a);
    }
    // heaviest first, so every deletion drops a positive rank until the last
    for a in (0..7).rev() {
        text += &format!("D {a} {}\n", a + 1);
    }
    let w = Workload::parse(&text).unwrap();
    let out = replay(&w, &ReplayConfig::new(SearchMode::Simple)).unwrap();
    let weights: Vec<u64> = out.records[6..].iter().map(|r| r.msf_weight).collect();
    assert!(weights[..7].windows(2).all(|p| p[1] < p[0]));
    assert_eq!(*weights.last().unwrap(), 0);
}

#[test]
fn modes_give_identical_records_apart_from_counters() {
    for seed in 0..20 {
        let w = gen_workload(24, 400, 0.6, seed);
        let a = replay(&w, &ReplayConfig::new(SearchMode::Simple)).unwrap();
        let b = replay(&w, &ReplayConfig::new(SearchMode::Shortcut)).unwrap();
        assert!(a.divergences.is_empty() && b.divergences.is_empty());
        let strip = |r: &dynmsf::oracle::OpRecord| (r.index, r.op, r.change, r.msf_weight);
        assert_eq!(a.records.iter().map(strip).collect::<Vec<_>>(), b.records.iter().map(strip).collect::<Vec<_>>());
    }
}

#[test]
fn decremental_replay_matches_kruskal() {
    use dynmsf::oracle::{gen_decremental, replay_decremental, scale_point};
    for seed in 0..10 {
        let w = gen_decremental(32, 120, 120, seed);
        for mode in [SearchMode::Simple, SearchMode::Shortcut] {
            let mut cfg = ReplayConfig::new(mode);
            cfg.audit = true;
            let (out, sum) = replay_decremental(&w, &cfg).unwrap();
            assert!(out.divergences.is_empty(), "{:?}", out.divergences);
            assert_eq!(out.records.last().unwrap().msf_weight, 0);
            assert!(sum.searches > 0);
        }
    }
    let row = scale_point(64, 200, 1, dynmsf::Params::default()).unwrap();
    println!("{row:?} ratio {}", row.ratio());
    assert!(row.mean_hops() <= row.mean_visits());
}
