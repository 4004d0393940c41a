mod common;

use std::collections::BTreeMap;

use common::{kruskal, Edge};
use dynmsf::decmsf::SearchMode;
use dynmsf::fulldyn::{AuditDepth, FullDynMsf, LocalEdge, MsfChange};
use dynmsf::{EdgeId, EdgeStatus, Params, VertexId, WeightKey};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn v(x: u32) -> VertexId {
    VertexId(x)
}

fn key(r: u64) -> WeightKey {
    WeightKey::real(r, r)
}

/// Drives `s` with random inserts and deletes, checking `F` against
/// Kruskal after every update. Returns the change stream.
fn drive(n: usize, ops: usize, seed: u64, mode: SearchMode, audit_every: usize) -> Vec<MsfChange> {
    let mut s = FullDynMsf::new(n, Params::default(), mode);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all: Vec<Edge> = Vec::new();
    let mut live_ids: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    let mut next_rank = 0u64;
    let mut stream = Vec::new();
    let mut model_f: std::collections::BTreeSet<EdgeId> = Default::default();
    for step in 0..ops {
        let insert = live_ids.is_empty() || (live_ids.len() < n * (n - 1) / 2 && rng.gen_bool(0.6));
        let change = if insert {
            let (a, b) = loop {
                let a = rng.gen_range(0..n as u32);
                let b = rng.gen_range(0..n as u32);
                if a != b && !live_ids.contains_key(&(a.min(b), a.max(b))) {
                    break (a, b);
                }
            };
            // ranks drawn without replacement from a wide range
            next_rank += rng.gen_range(1..50);
            let r = if rng.gen_bool(0.5) { next_rank } else { 1_000_000 - next_rank };
            let (id, ch) = s.insert(v(a), v(b), key(r)).unwrap();
            assert_eq!(id.index(), all.len());
            all.push((v(a), v(b), key(r)));
            live_ids.insert((a.min(b), a.max(b)), id.index());
            ch
        } else {
            let k = rng.gen_range(0..live_ids.len());
            let (&p, _) = live_ids.iter().nth(k).unwrap();
            live_ids.remove(&p);
            s.delete(v(p.1), v(p.0)).unwrap()
        };
        let mut live = vec![false; all.len()];
        for &i in live_ids.values() {
            live[i] = true;
        }
        let want: Vec<EdgeId> = kruskal(n, &all, &live).into_iter().map(|i| EdgeId(i as u32)).collect();
        assert_eq!(s.msf(), want, "seed {seed} step {step}");
        let w: u64 = want.iter().map(|e| all[e.index()].2.rank).sum();
        assert_eq!(s.msf_weight(), w);
        // replaying the change stream reconstructs F
        if !insert {
            let gone: Vec<EdgeId> = model_f.iter().copied().filter(|e| !live[e.index()]).collect();
            for e in gone {
                model_f.remove(&e);
            }
        }
        if let Some(e) = change.became_nontree {
            assert!(model_f.remove(&e));
        }
        if let Some(e) = change.became_tree {
            assert!(model_f.insert(e));
            assert!(all[e.index()].2.is_real());
        }
        assert_eq!(model_f.iter().copied().collect::<Vec<_>>(), want);
        if audit_every > 0 && step % audit_every == 0 {
            let errs = s.audit(AuditDepth::Queues);
            assert!(errs.is_empty(), "seed {seed} step {step}: {errs:#?}");
        } else {
            let errs = s.audit(AuditDepth::Reduction);
            assert!(errs.is_empty(), "seed {seed} step {step}: {errs:#?}");
        }
        stream.push(change);
    }
    stream
}

#[test]
fn empty_structure() {
    let s = FullDynMsf::new(5, Params::default(), SearchMode::Simple);
    assert!(s.msf().is_empty());
    assert_eq!(s.msf_weight(), 0);
    let s = FullDynMsf::new(1, Params::default(), SearchMode::Simple);
    assert!(s.msf().is_empty());
}

#[test]
fn triangle_heaviest_last_is_nontree() {
    let mut s = FullDynMsf::new(3, Params::default(), SearchMode::Shortcut);
    s.insert(v(0), v(1), key(0)).unwrap();
    s.insert(v(1), v(2), key(1)).unwrap();
    let (e, ch) = s.insert(v(0), v(2), key(2)).unwrap();
    assert_eq!(ch, MsfChange::default());
    assert_eq!(s.edges().get(e).status, EdgeStatus::NonTree);
    let held: Vec<_> = s
        .containers(e)
        .into_iter()
        .filter(|&(i, l)| s.structure(i).unwrap().edge(l).unwrap().status == EdgeStatus::NonTree)
        .collect();
    assert!(!held.is_empty());
    // delete the lightest edge: the remaining light edge stays, (0,2) joins
    let ch = s.delete(v(1), v(0)).unwrap();
    assert_eq!(ch.became_tree, Some(e));
    assert!(s.audit(AuditDepth::Queues).is_empty());
}

#[test]
fn lighter_insert_swaps_out_path_max() {
    let mut s = FullDynMsf::new(3, Params::default(), SearchMode::Simple);
    s.insert(v(0), v(1), key(5)).unwrap();
    let (b, _) = s.insert(v(1), v(2), key(9)).unwrap();
    let (c, ch) = s.insert(v(0), v(2), key(1)).unwrap();
    assert_eq!(ch, MsfChange { became_tree: Some(c), became_nontree: Some(b) });
    assert!(s.audit(AuditDepth::Queues).is_empty());
}

#[test]
fn bridge_deletion_splits() {
    let mut s = FullDynMsf::new(4, Params::default(), SearchMode::Simple);
    s.insert(v(0), v(1), key(1)).unwrap();
    s.insert(v(2), v(3), key(2)).unwrap();
    s.insert(v(1), v(2), key(3)).unwrap();
    let ch = s.delete(v(1), v(2)).unwrap();
    assert_eq!(ch.became_tree, None);
    assert_eq!(s.msf().len(), 2);
}

#[test]
fn duplicate_and_missing_edges_error() {
    let mut s = FullDynMsf::new(3, Params::default(), SearchMode::Simple);
    s.insert(v(0), v(1), key(1)).unwrap();
    assert!(s.insert(v(1), v(0), key(2)).is_err());
    assert!(s.delete(v(1), v(2)).is_err());
    assert!(s.insert(v(1), v(1), key(3)).is_err());
}

#[test]
fn compression_of_a_path() {
    // F = a-x-y-b plus a pendant that must be dropped
    let mut s = FullDynMsf::new(6, Params::default(), SearchMode::Simple);
    s.insert(v(0), v(2), key(1)).unwrap();
    s.insert(v(2), v(3), key(2)).unwrap();
    s.insert(v(3), v(1), key(3)).unwrap();
    s.insert(v(3), v(4), key(4)).unwrap();
    let (e, _) = s.insert(v(0), v(1), key(10)).unwrap();
    let comp = s.build_compressed(&[e]);
    assert_eq!(comp.vertices, vec![v(0), v(1)]);
    assert_eq!(comp.edges.len(), 2);
    assert_eq!(comp.meaning.iter().filter(|m| matches!(m, LocalEdge::Super(p) if p.len() == 3)).count(), 1);
    assert!(comp.edges.iter().any(|&(_, _, k)| !k.is_real()));
}

#[test]
fn two_separate_nontree_edges_compress_separately() {
    let mut s = FullDynMsf::new(8, Params::default(), SearchMode::Simple);
    for (a, b, r) in [(0, 1, 1), (1, 2, 2), (4, 5, 3), (5, 6, 4)] {
        s.insert(v(a), v(b), key(r)).unwrap();
    }
    let (e1, _) = s.insert(v(0), v(2), key(20)).unwrap();
    let (e2, _) = s.insert(v(4), v(6), key(21)).unwrap();
    let comp = s.build_compressed(&[e1, e2]);
    assert_eq!(comp.vertices.len(), 4);
    assert_eq!(comp.edges.len(), 4);
}

#[test]
fn collapse_picks_smallest_admissible_slot() {
    // build a state with one non-tree edge in slot 0 and two in slot 1
    let mut s = FullDynMsf::new(16, Params::default(), SearchMode::Simple);
    for a in 0..15 {
        s.insert(v(a), v(a + 1), key(a as u64)).unwrap();
    }
    let mut r = 100;
    let mut add = |s: &mut FullDynMsf, a: u32, b: u32| {
        r += 1;
        s.insert(v(a), v(b), key(r)).unwrap();
    };
    add(&mut s, 0, 2);
    assert_eq!(s.nontree_counts()[..2], [1, 0]);
    add(&mut s, 3, 5);
    assert_eq!(s.nontree_counts()[..2], [0, 2]);
    add(&mut s, 6, 8);
    assert_eq!(s.nontree_counts()[..3], [1, 2, 0]);
    add(&mut s, 9, 11);
    // 1 + 2 + 1 exceeds 2 but fits in 4
    assert_eq!(s.nontree_counts()[..3], [0, 0, 4]);
    assert!(s.audit(AuditDepth::Queues).is_empty());
}

#[test]
fn mixed_workloads_match_kruskal() {
    for seed in 0..24 {
        let n = [8, 16, 32][seed as usize % 3];
        drive(n, 600, seed, SearchMode::Shortcut, 25);
    }
}

#[test]
fn modes_agree_on_change_streams() {
    for seed in 0..10 {
        let a = drive(16, 400, 50 + seed, SearchMode::Simple, 0);
        let b = drive(16, 400, 50 + seed, SearchMode::Shortcut, 0);
        assert_eq!(a, b);
    }
}
