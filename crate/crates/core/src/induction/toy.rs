use serde::{Deserialize, Serialize};

use crate::interval::Interval;

/// `g(x) = x + c (x - a)^2` on `[a, b]`: an orientation preserving
/// diffeomorphism whose only fixed point is the neutral point `a`.
///
/// Its first entry map into `J = (b, g(b))` has the branches
/// `A_n = g^{-n}(J) = (a_{n+1}, a_n)` with `a_n = g^{-n}(g(b))`, `G = g^n`
/// on `A_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeutralEntryModel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeutralEntryCheck {
    /// Strict bound on `|g' - 1|` over `[a, b]`.
    pub epsilon: f64,
    /// Strict bound on the distortion of `G` over the sampled branches.
    pub k: f64,
    /// `(1 / (ε K)) |J| / |b - a|`.
    pub bound: f64,
    /// Smallest sampled `G'`.
    pub min_derivative: f64,
    pub branches: usize,
    pub holds: bool,
}

impl NeutralEntryModel {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        assert!(a < b && c > 0.0, "need a < b and c > 0");
        NeutralEntryModel { a, b, c }
    }

    pub fn g(&self, x: f64) -> f64 {
        x + self.c * (x - self.a).powi(2)
    }

    pub fn dg(&self, x: f64) -> f64 {
        1.0 + 2.0 * self.c * (x - self.a)
    }

    pub fn g_inv(&self, y: f64) -> f64 {
        let s = 4.0 * self.c * (y - self.a);
        // (sqrt(1 + s) - 1) / (2c), written to avoid cancellation
        self.a + 2.0 * (y - self.a) / (1.0 + (1.0 + s).sqrt())
    }

    pub fn target(&self) -> Interval {
        Interval::new(self.b, self.g(self.b))
    }

    pub fn epsilon(&self) -> f64 {
        2.0 * self.c * (self.b - self.a) * (1.0 + 1e-9)
    }

    /// `A_1, ..., A_n`.
    pub fn entry_branches(&self, n: usize) -> Vec<Interval> {
        let mut out = Vec::with_capacity(n);
        let mut hi = self.b;
        for _ in 0..n {
            let lo = self.g_inv(hi);
            out.push(Interval::new(lo, hi));
            hi = lo;
        }
        out
    }

    /// `(g^n)'(x)`.
    pub fn entry_derivative(&self, x: f64, n: usize) -> f64 {
        let mut y = x;
        let mut d = 1.0;
        for _ in 0..n {
            d *= self.dg(y);
            y = self.g(y);
        }
        d
    }

    pub fn check(&self, n_max: usize, probes: usize) -> NeutralEntryCheck {
        let branches = self.entry_branches(n_max);
        let pts = |iv: &Interval| -> Vec<f64> {
            (0..probes).map(|k| iv.at((k as f64 + 0.5) / probes as f64)).collect()
        };
        let mut k: f64 = 1.0;
        let mut min_d = f64::INFINITY;
        for (i, iv) in branches.iter().enumerate() {
            let d: Vec<f64> = pts(iv).iter().map(|&x| self.entry_derivative(x, i + 1)).collect();
            let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = d.iter().copied().fold(0.0, f64::max);
            k = k.max(hi / lo);
            min_d = min_d.min(lo);
        }
        let k = k * (1.0 + 1e-9);
        let epsilon = self.epsilon();
        let bound = self.target().len() / (epsilon * k * (self.b - self.a));
        NeutralEntryCheck {
            epsilon,
            k,
            bound,
            min_derivative: min_d,
            branches: branches.len(),
            holds: min_d >= bound,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branches_tile_towards_the_fixed_point() {
        let g = NeutralEntryModel::new(0.0, 0.1, 1.0);
        let br = g.entry_branches(50);
        assert_eq!(br.len(), 50);
        assert_eq!(br[0].hi, 0.1);
        for w in br.windows(2) {
            assert_eq!(w[1].hi, w[0].lo);
        }
        for (n, iv) in br.iter().enumerate() {
            let y = (0..=n).fold(iv.mid(), |y, _| g.g(y));
            assert!(g.target().contains(y), "A_{} misses J", n + 1);
        }
    }

    #[test]
    fn lower_bound_holds() {
        for c in [0.5, 2.0, 10.0] {
            let r = NeutralEntryModel::new(0.2, 0.3, c).check(200, 9);
            assert!(r.holds, "{r:?}");
        }
    }

    #[test]
    fn inverse_round_trip() {
        let g = NeutralEntryModel::new(0.0, 1.0, 3.0);
        for y in [1e-12, 0.3, 2.0] {
            assert!((g.g(g.g_inv(y)) - y).abs() <= 1e-15 * y.max(1.0) * 4.0);
        }
    }
}
