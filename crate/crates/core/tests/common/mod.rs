#![allow(dead_code)]

use dynmsf::{VertexId, WeightKey};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Edge = (VertexId, VertexId, WeightKey);

fn find(p: &mut [usize], mut x: usize) -> usize {
    while p[x] != x {
        x = p[x];
    }
    x
}

/// Indices of the MSF edges among `live` (positions into `edges`).
pub fn kruskal(n: usize, edges: &[Edge], live: &[bool]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..edges.len()).filter(|&i| live[i]).collect();
    idx.sort_by_key(|&i| edges[i].2);
    let mut p: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    for i in idx {
        let (a, b) = (find(&mut p, edges[i].0 .0 as usize), find(&mut p, edges[i].1 .0 as usize));
        if a != b {
            p[a] = b;
            out.push(i);
        }
    }
    out.sort();
    out
}

/// Vertices reachable from `s` through the edges `tree` (indices into `edges`).
pub fn reach(n: usize, edges: &[Edge], tree: &[usize], s: VertexId) -> Vec<bool> {
    let mut seen = vec![false; n];
    seen[s.0 as usize] = true;
    let mut changed = true;
    while changed {
        changed = false;
        for &i in tree {
            let (a, b) = (edges[i].0 .0 as usize, edges[i].1 .0 as usize);
            if seen[a] != seen[b] {
                seen[a] = true;
                seen[b] = true;
                changed = true;
            }
        }
    }
    seen
}

/// Cheapest live edge with exactly one endpoint in `side`.
pub fn cheapest_crossing(edges: &[Edge], live: &[bool], side: &[bool]) -> Option<usize> {
    (0..edges.len())
        .filter(|&i| live[i] && side[edges[i].0 .0 as usize] != side[edges[i].1 .0 as usize])
        .min_by_key(|&i| edges[i].2)
}

/// Random simple graph with distinct real keys.
pub fn random_graph(n: usize, m: usize, seed: u64) -> Vec<Edge> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: Vec<(u32, u32)> = (0..n as u32)
        .flat_map(|a| (a + 1..n as u32).map(move |b| (a, b)))
        .collect();
    pairs.shuffle(&mut rng);
    pairs.truncate(m);
    let mut ranks: Vec<u64> = (0..pairs.len() as u64).collect();
    ranks.shuffle(&mut rng);
    pairs
        .into_iter()
        .zip(ranks)
        .enumerate()
        .map(|(i, ((a, b), r))| {
            let (a, b) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
            (VertexId(a), VertexId(b), WeightKey::real(r, i as u64))
        })
        .collect()
}
