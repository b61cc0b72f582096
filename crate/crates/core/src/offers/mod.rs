//! Randomness sources: vertex offers, uniform spanning trees of `K_n`, Poisson
//! round counts, and an exact sampler for the trace of a uniform spanning tree on
//! a fixed edge set.

mod intersect;

use rand::Rng;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::graph::{edge_key, normalize};

pub use intersect::{
    sample_tree_intersection, EdgeSource, FailedEdgesView, FrozenEdges, IntersectScratch,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StarOffer(pub usize);

pub fn sample_star_offer<R: Rng + ?Sized>(rng: &mut R, n: usize) -> StarOffer {
    StarOffer(rng.gen_range(0..n))
}

/// A spanning tree of `K_n` with constant-time edge lookup.
#[derive(Clone, Debug)]
pub struct TreeOffer {
    n: usize,
    edges: Vec<(usize, usize)>,
    index: FxHashSet<u64>,
}

impl TreeOffer {
    pub fn from_edges(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let edges: Vec<_> = edges.into_iter().map(|(a, b)| normalize(a, b)).collect();
        let index = edges.iter().map(|&(a, b)| edge_key(a, b)).collect();
        Self { n, edges, index }
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.index.contains(&edge_key(x, y))
    }

    /// Whether the edges form a spanning tree of `K_n`.
    pub fn is_spanning_tree(&self) -> bool {
        if self.edges.len() + 1 != self.n || self.index.len() != self.edges.len() {
            return false;
        }
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(a, b) in &self.edges {
            if a >= self.n || b >= self.n || a == b {
                return false;
            }
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return false;
            }
            parent[ra] = rb;
        }
        true
    }

    /// Positions `i` with `edges(i)` in the tree.
    pub fn intersect<S: EdgeSource + ?Sized>(&self, set: &S, out: &mut Vec<usize>) {
        out.clear();
        for i in 0..set.len() {
            let (a, b) = set.edge(i);
            if self.contains(a, b) {
                out.push(i);
            }
        }
    }
}

/// Uniform spanning tree of `K_n` by the Aldous–Broder walk: each step moves to a
/// uniform vertex of `[n]` (self-loops allowed) and the first entrance to a vertex
/// records the edge it came along.
pub fn sample_spanning_tree<R: Rng + ?Sized>(rng: &mut R, n: usize) -> TreeOffer {
    assert!(n >= 1, "spanning tree needs n >= 1");
    let mut visited = vec![false; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut cur = rng.gen_range(0..n);
    visited[cur] = true;
    let mut remaining = n - 1;
    while remaining > 0 {
        let next = rng.gen_range(0..n);
        if !visited[next] {
            visited[next] = true;
            edges.push((cur, next));
            remaining -= 1;
        }
        cur = next;
    }
    let tree = TreeOffer::from_edges(n, edges);
    debug_assert!(tree.is_spanning_tree());
    tree
}

/// How phase durations are realized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RoundMode {
    /// `⌈mean⌉` rounds.
    Fixed,
    /// `Poi(mean)` rounds.
    #[default]
    Poisson,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundSchedule {
    pub mode: RoundMode,
    pub mean: f64,
    pub realized_rounds: u64,
}

pub fn sample_round_count<R: Rng + ?Sized>(rng: &mut R, mean: f64, mode: RoundMode) -> u64 {
    schedule_rounds(rng, mean, mode).realized_rounds
}

pub fn schedule_rounds<R: Rng + ?Sized>(rng: &mut R, mean: f64, mode: RoundMode) -> RoundSchedule {
    assert!(mean >= 0.0 && mean.is_finite(), "round mean must be finite and >= 0");
    let realized_rounds = match mode {
        RoundMode::Fixed => mean.ceil() as u64,
        RoundMode::Poisson => sample_poisson(rng, mean),
    };
    RoundSchedule {
        mode,
        mean,
        realized_rounds,
    }
}

/// Poisson variate. Sequential inversion for `mean < 30`; otherwise Hörmann's PTRD
/// transformed rejection (squeeze box `us >= 0.07, v <= v_r`, exact log test).
pub fn sample_poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < 30.0 {
        let mut p = (-mean).exp();
        let mut cdf = p;
        let u: f64 = rng.gen();
        let mut k = 0u64;
        while u > cdf && k < 1000 {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
        }
        return k;
    }
    let smu = mean.sqrt();
    let b = 0.931 + 2.53 * smu;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    let ln_mean = mean.ln();
    loop {
        let u: f64 = rng.gen::<f64>() - 0.5;
        let v: f64 = rng.gen();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = (v * inv_alpha / (a / (us * us) + b)).ln();
        let rhs = -mean + k * ln_mean - ln_factorial(k as u64);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// `ln k!`: exact summation below 32, Stirling series above.
pub fn ln_factorial(k: u64) -> f64 {
    if k < 32 {
        return (2..=k).map(|i| (i as f64).ln()).sum();
    }
    let x = k as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn star_offers_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(sample_star_offer(&mut rng, 1).0, 0);
        let mut counts = [0u64; 10];
        for _ in 0..1_000_000 {
            counts[sample_star_offer(&mut rng, 10).0] += 1;
        }
        let sd = (1e6f64 * 0.1 * 0.9).sqrt();
        for c in counts {
            assert!((c as f64 - 1e5).abs() < 5.0 * sd, "count {c}");
        }
    }

    #[test]
    fn spanning_trees_are_trees() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = sample_spanning_tree(&mut rng, 2);
        assert_eq!(t.edges(), &[(0, 1)]);
        for n in [1, 3, 10, 57] {
            assert!(sample_spanning_tree(&mut rng, n).is_spanning_tree());
        }
        let bad = TreeOffer::from_edges(4, vec![(0, 1), (1, 0), (2, 3)]);
        assert!(!bad.is_spanning_tree());
    }

    #[test]
    fn edge_marginal_at_n4() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let trials = 1_000_000;
        let hits = (0..trials)
            .filter(|_| sample_spanning_tree(&mut rng, 4).contains(1, 3))
            .count() as f64;
        let sd = (trials as f64 * 0.25).sqrt();
        assert!((hits - 0.5 * trials as f64).abs() < 5.0 * sd);
    }

    #[test]
    fn poisson_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(sample_poisson(&mut rng, 0.0), 0);
        for &(mean, draws) in &[(3.5, 200_000usize), (29.9, 100_000), (30.0, 100_000), (1e6, 1000)] {
            let xs: Vec<f64> = (0..draws).map(|_| sample_poisson(&mut rng, mean) as f64).collect();
            let m = xs.iter().sum::<f64>() / draws as f64;
            let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (draws as f64 - 1.0);
            let se = (mean / draws as f64).sqrt();
            assert!((m - mean).abs() < 4.0 * se, "mean {m} vs {mean}");
            assert!((var / mean - 1.0).abs() < 0.2, "variance {var} vs {mean}");
        }
    }

    #[test]
    fn fixed_rounds_round_up() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_round_count(&mut rng, 10.2, RoundMode::Fixed), 11);
        assert_eq!(sample_round_count(&mut rng, 0.0, RoundMode::Poisson), 0);
    }

    #[test]
    fn ln_factorial_matches_sum() {
        for k in [0u64, 1, 5, 31, 32, 40, 100, 1000] {
            let exact: f64 = (2..=k).map(|i| (i as f64).ln()).sum();
            assert!((ln_factorial(k) - exact).abs() < 1e-9 * exact.max(1.0), "k={k}");
        }
    }

    #[test]
    fn poisson_tail_beats_chernoff() {
        // frequency of Poi(μ) > (1+δ)μ is below the Chernoff bound exp(-δ²μ/3)
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (mu, delta) = (200.0f64, 0.15f64);
        let trials = 20_000;
        let over = (0..trials)
            .filter(|_| sample_poisson(&mut rng, mu) as f64 > (1.0 + delta) * mu)
            .count() as f64
            / trials as f64;
        let bound = (-delta * delta * mu / 3.0).exp();
        assert!(over <= bound, "{over} > {bound}");
    }
}
