//! Tunable constants and the thresholds derived from them for a given `n`.
//!
//! All logarithms are base 2 of `max(n, 2)`. The asymptotic thresholds are
//! clamped from below so that tiny structures stay well formed.

/// User-facing constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params {
    /// Heavy-child exponent.
    pub eps_h: f64,
    /// Queue-node spacing exponent.
    pub eps_q: f64,
    /// Buffer/bottom tree capacity exponent.
    pub alpha: f64,
    /// Height cap constant.
    pub c_h: f64,
    /// Shortcut hop cap constant.
    pub c_p: f64,
    /// Descendant queue node cap constant.
    pub c_v: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            eps_h: 0.4,
            eps_q: 0.15,
            alpha: 3.0,
            c_h: 6.0,
            c_p: 16.0,
            c_v: 16.0,
        }
    }
}

impl Params {
    /// True when the constants lie in the ranges the amortised analysis needs.
    pub fn in_recommended_range(&self) -> bool {
        self.eps_h > 0.0 && self.eps_h < 0.5 && self.eps_q > 0.0 && self.eps_q <= 1.0 / 6.0
    }

    pub fn thresholds(&self, n: usize) -> Thresholds {
        Thresholds::new(*self, n)
    }
}

#[inline]
pub fn log2n(n: usize) -> f64 {
    (n.max(2) as f64).log2()
}

/// `floor(log2 x)` for `x >= 1`.
#[inline]
pub fn floor_log2(x: u64) -> u32 {
    debug_assert!(x >= 1);
    63 - x.leading_zeros()
}

/// Derived per-structure values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    pub params: Params,
    pub n: usize,
    pub log_n: f64,
    /// `max(1, log^{eps_h} n)`: a child `v` of `u` is heavy iff `n(v) >= n(u) / heavy_div`.
    pub heavy_div: f64,
    /// `max(1, ceil(eps_q log log n))`.
    pub q: u32,
    /// `max(4, floor(log^alpha n))`.
    pub s_max: usize,
    pub l_max: u8,
    pub height_cap: f64,
    pub hop_cap: f64,
    pub ndq_cap: f64,
}

impl Thresholds {
    pub fn new(params: Params, n: usize) -> Self {
        let log_n = log2n(n);
        let loglog = log_n.log2();
        let heavy_div = log_n.powf(params.eps_h).max(1.0);
        let q = ((params.eps_q * loglog).ceil() as i64).max(1) as u32;
        let s_max = (log_n.powf(params.alpha).floor() as usize).max(4);
        let l_max = floor_log2(n.max(1) as u64) as u8;
        let height_cap = params.c_h * (1.0 / params.eps_h) * log_n;
        let loglog4 = log2n(n.max(4)).log2();
        let hop_cap = params.c_p * (1.0 / params.eps_h + 1.0 / params.eps_q) * log_n / loglog4
            + params.c_p * log_n.powf(3.0 * params.eps_q);
        let ndq_cap = params.c_v * log_n.powf(3.0 * params.eps_q);
        Thresholds {
            params,
            n,
            log_n,
            heavy_div,
            q,
            s_max,
            l_max,
            height_cap,
            hop_cap,
            ndq_cap,
        }
    }

    #[inline]
    pub fn is_heavy(&self, child_n: u32, parent_n: u32) -> bool {
        child_n as f64 >= parent_n as f64 / self.heavy_div
    }

    /// Credits each heavy-tree leaf holds.
    pub fn heavy_leaf_credits(&self) -> f64 {
        (2.0 + (self.s_max as f64).log2()) * self.log_n
    }

    /// Credits each leaf of a buffer tree with `s` leaves holds.
    pub fn buffer_leaf_credits(&self, s: usize) -> f64 {
        let s = s.max(1) as f64;
        (2.0 + (self.s_max as f64).log2() - s.log2()) * self.log_n
    }

    /// Total credits of a buffer tree with `s` leaves.
    pub fn buffer_tree_credits(&self, s: usize) -> f64 {
        if s == 0 {
            return 0.0;
        }
        s as f64 * self.buffer_leaf_credits(s)
    }

    /// Upper bound on the initial endowment of one connected component with
    /// `n_comp` vertices.
    pub fn initial_endowment_bound(&self) -> f64 {
        self.log_n.powf(self.params.eps_h) * self.heavy_leaf_credits()
            + 2.0 * self.s_max as f64 * self.log_n
            + self.n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamps_at_small_n() {
        let t = Params::default().thresholds(1);
        assert_eq!(t.q, 1);
        assert_eq!(t.s_max, 4);
        assert_eq!(t.heavy_div, 1.0);
        assert_eq!(t.l_max, 0);
        let t = Params::default().thresholds(8);
        assert_eq!(t.l_max, 3);
        assert_eq!(t.s_max, 27);
    }

    #[test]
    fn q_at_two_to_sixteen() {
        let t = Params::default().thresholds(1 << 16);
        assert_eq!(t.q, 1);
        assert_eq!(t.l_max, 16);
    }

    #[test]
    fn buffer_credits_increasing() {
        for alpha in [1.0, 2.0, 3.0, 4.0] {
            let p = Params {
                alpha,
                ..Params::default()
            };
            for n in [2usize, 8, 64, 1 << 10, 1 << 14] {
                let t = p.thresholds(n);
                for s in 1..t.s_max {
                    assert!(t.buffer_tree_credits(s + 1) > t.buffer_tree_credits(s));
                }
            }
        }
    }
}
