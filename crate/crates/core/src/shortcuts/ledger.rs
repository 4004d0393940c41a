use crate::cforest::{ClusterForest, NodeKind};

/// Credits held against the work of rebuilding queues after topological
/// changes. One credit pays for one node visit or one queue mutation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CreditLedger {
    /// Credits required by the initial local trees.
    pub endowment: f64,
    /// Upper bound the initial credits must respect, summed over components.
    pub endowment_bound: f64,
    pub deposits: f64,
    pub spent: f64,
}

impl CreditLedger {
    pub fn balance(&self) -> f64 {
        self.endowment + self.deposits - self.spent
    }

    /// Credits demanded by the heavy, buffer and bottom tree invariants of
    /// the forest as it stands.
    pub fn initial(forest: &ClusterForest) -> Self {
        let th = forest.thresholds();
        let mut endowment = 0.0;
        let mut bound = 0.0;
        for u in forest.alive_nodes() {
            let node = forest.node(u);
            if node.kind != NodeKind::Cluster {
                continue;
            }
            let (_, buffer, bottoms, _) = forest.local_summary(u);
            endowment += forest.heavy_leaves(u).len() as f64 * th.heavy_leaf_credits();
            endowment += th.buffer_tree_credits(forest.node(buffer).size as usize);
            endowment += bottoms.iter().map(|&b| forest.node(b).size as f64).sum::<f64>();
            if node.parent.is_none() {
                bound += th.log_n.powf(th.params.eps_h) * th.heavy_leaf_credits()
                    + 2.0 * th.s_max as f64 * th.log_n
                    + node.n as f64;
            }
        }
        CreditLedger {
            endowment,
            endowment_bound: bound,
            deposits: 0.0,
            spent: 0.0,
        }
    }
}
