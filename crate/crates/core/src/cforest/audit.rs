//! Whole-forest consistency checks and a deterministic text dump.

use std::fmt::Write as _;

use super::{ClusterForest, NodeId, NodeKind};
use crate::edge::WeightKey;
use crate::params::floor_log2;

#[derive(Clone, Debug, Default)]
pub struct ForestAudit {
    pub errors: Vec<String>,
    pub height: usize,
    pub height_cap: f64,
}

impl ForestAudit {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

struct Agg {
    n: u32,
    rank: u8,
    tree_bits: u64,
    nontree_bits: u64,
    min_key: Vec<Option<WeightKey>>,
}

impl ClusterForest {
    /// Recomputes every aggregate from the vertex summaries and checks the
    /// structural invariants of all local trees.
    pub fn audit(&self) -> ForestAudit {
        let mut errs = Vec::new();
        let th = *self.thresholds();
        for x in self.alive_nodes() {
            let node = self.node(x);
            for c in node.child_iter() {
                let cn = self.node(c);
                if !cn.alive {
                    errs.push(format!("{x} has dead child {c}"));
                } else if cn.parent != Some(x) {
                    errs.push(format!("{c} does not point back to parent {x}"));
                }
            }
            if let Some(p) = node.parent {
                if !self.node(p).alive || !self.node(p).child_iter().any(|c| c == x) {
                    errs.push(format!("{x} has a stale parent {p}"));
                }
            }
            let full = node.children[0].is_some() && node.children[1].is_some();
            match node.kind {
                NodeKind::Vertex if !node.is_leaf() => errs.push(format!("vertex {x} has children")),
                NodeKind::HeavyRank
                | NodeKind::LightRank
                | NodeKind::RankPath
                | NodeKind::BufferInner
                | NodeKind::BottomInner
                | NodeKind::TopInner
                    if !full =>
                {
                    errs.push(format!("{} {x} is not full", node.kind.label()))
                }
                _ => {}
            }
        }
        // aggregates from scratch, children before parents
        let roots = self.roots();
        for &r in &roots {
            let node = self.node(r);
            if node.kind != NodeKind::Vertex && !(node.kind == NodeKind::Cluster && node.level == 0) {
                errs.push(format!("root {r} is {} at level {}", node.kind.label(), node.level));
            }
            self.audit_aggregates(r, &mut errs);
        }
        for u in self.alive_nodes() {
            if self.node(u).kind == NodeKind::Cluster {
                self.audit_local(u, &mut errs);
            }
        }
        let height = self.height();
        if height as f64 > th.height_cap {
            errs.push(format!("height {height} exceeds cap {:.1}", th.height_cap));
        }
        ForestAudit {
            errors: errs,
            height,
            height_cap: th.height_cap,
        }
    }

    fn audit_aggregates(&self, root: NodeId, errs: &mut Vec<String>) -> Agg {
        // explicit post-order to keep deep trees off the call stack
        let levels = self.levels();
        let mut stack = vec![(root, false)];
        let mut results: std::collections::HashMap<NodeId, Agg> = std::collections::HashMap::new();
        while let Some((x, expanded)) = stack.pop() {
            let node = self.node(x);
            if node.kind == NodeKind::Vertex {
                results.insert(
                    x,
                    Agg {
                        n: 1,
                        rank: 0,
                        tree_bits: node.tree_bits,
                        nontree_bits: node.nontree_bits,
                        min_key: node.min_key.to_vec(),
                    },
                );
                continue;
            }
            if !expanded {
                stack.push((x, true));
                for c in node.child_iter() {
                    stack.push((c, false));
                }
                continue;
            }
            let kids: Vec<Agg> = node
                .child_iter()
                .map(|c| results.remove(&c).expect("child processed"))
                .collect();
            let mut agg = Agg {
                n: 0,
                rank: 0,
                tree_bits: 0,
                nontree_bits: 0,
                min_key: vec![None; levels],
            };
            for k in &kids {
                agg.n += k.n;
                agg.tree_bits |= k.tree_bits;
                agg.nontree_bits |= k.nontree_bits;
                for (i, slot) in agg.min_key.iter_mut().enumerate() {
                    if let Some(key) = k.min_key[i] {
                        if slot.is_none_or(|s| key < s) {
                            *slot = Some(key);
                        }
                    }
                }
            }
            agg.rank = match node.kind {
                NodeKind::Cluster => floor_log2(agg.n.max(1) as u64) as u8,
                NodeKind::HeavyRank | NodeKind::LightRank => {
                    if kids.len() != 2 || kids[0].rank != kids[1].rank {
                        errs.push(format!("rank node {x} pairs unequal ranks"));
                    }
                    kids.first().map_or(0, |k| k.rank + 1)
                }
                _ => kids.iter().map(|k| k.rank).max().unwrap_or(0),
            };
            if node.kind == NodeKind::RankPath && kids.len() == 2 && kids[0].rank <= kids[1].rank {
                errs.push(format!("rank path {x} is not decreasing"));
            }
            if (node.n, node.rank, node.tree_bits, node.nontree_bits)
                != (agg.n, agg.rank, agg.tree_bits, agg.nontree_bits)
                || node.min_key[..] != agg.min_key[..]
            {
                errs.push(format!(
                    "{} {x} aggregates stale: stored n={} rank={} bits={:b}/{:b}, want n={} rank={} bits={:b}/{:b}",
                    node.kind.label(),
                    node.n,
                    node.rank,
                    node.tree_bits,
                    node.nontree_bits,
                    agg.n,
                    agg.rank,
                    agg.tree_bits,
                    agg.nontree_bits
                ));
            }
            if node.kind.is_bst_inner() || matches!(node.kind, NodeKind::Buffer | NodeKind::Bottom) {
                let leaves = self.bst_leaves(x).len() as u32;
                if node.size != leaves {
                    errs.push(format!("{x} size {} but {} leaves", node.size, leaves));
                }
            }
            results.insert(x, agg);
        }
        results.remove(&root).expect("root processed")
    }

    fn audit_local(&self, u: NodeId, errs: &mut Vec<String>) {
        let th = self.thresholds();
        let node = self.node(u);
        let Some(lt) = self.locals[u.index()].as_ref() else {
            errs.push(format!("cluster {u} has no local tree"));
            return;
        };
        let cap = (self.vertex_count() >> node.level.min(63)) as u32;
        if node.n > cap.max(1) {
            errs.push(format!("cluster {u} at level {} has {} vertices", node.level, node.n));
        }
        if node.children[1] != Some(lt.top) {
            errs.push(format!("cluster {u} does not hang its top tree at child 1"));
        }
        for w in lt.heavy_roots.windows(2) {
            if self.node(w[0]).rank <= self.node(w[1]).rank {
                errs.push(format!("heavy roots of {u} not strictly decreasing"));
            }
        }
        let mut ranks: Vec<u8> = lt.light_roots.iter().map(|&r| self.node(r).rank).collect();
        ranks.sort();
        if ranks.windows(2).any(|w| w[0] == w[1]) {
            errs.push(format!("light rank trees of {u} share a rank"));
        }
        for h in self.heavy_leaves(u) {
            if !th.is_heavy(self.node(h).n, node.n) {
                errs.push(format!("{h} in heavy tree of {u} is light"));
            }
        }
        let mut bsts = vec![lt.buffer];
        bsts.extend(lt.bottoms.iter().copied());
        for (k, &b) in bsts.iter().enumerate() {
            let leaves = self.bst_leaves(b);
            if leaves.len() > th.s_max {
                errs.push(format!("search tree {b} of {u} holds {} > s_max leaves", leaves.len()));
            }
            if k > 0 && leaves.is_empty() {
                errs.push(format!("bottom tree {b} of {u} is empty"));
            }
            if leaves.windows(2).any(|w| self.leaf_key(w[0]) >= self.leaf_key(w[1])) {
                errs.push(format!("search tree {b} of {u} out of order"));
            }
            for l in leaves {
                if th.is_heavy(self.node(l).n, node.n) {
                    errs.push(format!("{l} in light tree of {u} is heavy"));
                }
            }
        }
        for c in self.cluster_children(u) {
            let cn = self.node(c);
            if cn.kind == NodeKind::Cluster && cn.level != node.level + 1 {
                errs.push(format!("child {c} of {u} at level {}", cn.level));
            }
        }
        let mut listed: Vec<NodeId> = self.heavy_leaves(u);
        for b in bsts {
            listed.extend(self.bst_leaves(b));
        }
        listed.sort();
        if listed != self.cluster_children(u) {
            errs.push(format!("local tree bookkeeping of {u} disagrees with its children"));
        }
    }

    /// Preorder dump: one line per node, indented by depth.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for r in self.roots() {
            let mut stack = vec![(r, 0usize)];
            while let Some((x, d)) = stack.pop() {
                let node = self.node(x);
                let _ = writeln!(
                    out,
                    "{:indent$}{} {} lvl={} n={} rank={} size={} tb={:b} nb={:b}",
                    "",
                    node.kind.label(),
                    x.0,
                    if node.kind == NodeKind::Vertex { -1 } else { node.level as i32 },
                    node.n,
                    node.rank,
                    node.size,
                    node.tree_bits,
                    node.nontree_bits,
                    indent = 2 * d
                );
                for c in node.children.iter().rev().flatten() {
                    stack.push((*c, d + 1));
                }
            }
        }
        out
    }
}
