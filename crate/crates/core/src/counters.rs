use std::ops::Sub;

/// Work counters reported per operation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OpCounters {
    pub promotions: u64,
    pub down_visits: u64,
    pub up_visits: u64,
    pub queue_ops: u64,
    pub hops: u64,
    pub credits_spent: f64,
}

impl OpCounters {
    pub fn add(&mut self, o: &OpCounters) {
        self.promotions += o.promotions;
        self.down_visits += o.down_visits;
        self.up_visits += o.up_visits;
        self.queue_ops += o.queue_ops;
        self.hops += o.hops;
        self.credits_spent += o.credits_spent;
    }
}

impl Sub for OpCounters {
    type Output = OpCounters;

    fn sub(self, o: OpCounters) -> OpCounters {
        OpCounters {
            promotions: self.promotions - o.promotions,
            down_visits: self.down_visits - o.down_visits,
            up_visits: self.up_visits - o.up_visits,
            queue_ops: self.queue_ops - o.queue_ops,
            hops: self.hops - o.hops,
            credits_spent: self.credits_spent - o.credits_spent,
        }
    }
}
