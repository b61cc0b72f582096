//! Exact small-n ground truth: every labeled tree on `[n]` via Prüfer sequences,
//! exact edge, pair and intersection probabilities as rationals, rooted-forest
//! containment counts, and Poisson tail evaluation.

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::graph::normalize;
use crate::offers::ln_factorial;
use crate::state::BuilderState;
use crate::strategy::CandidateList;

pub const MAX_ENUMERATION_N: usize = 8;
const ROOT: u8 = u8::MAX;

/// All labeled trees on `[n]`, each stored as a bitmask over the edges of `K_n`.
#[derive(Clone, Debug)]
pub struct TreeEnsemble {
    n: usize,
    masks: Vec<u32>,
    bit: Vec<Vec<u8>>,
    pairs: Vec<(usize, usize)>,
}

impl TreeEnsemble {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn masks(&self) -> &[u32] {
        &self.masks
    }

    /// Bit of edge `{u, v}` in the masks.
    pub fn edge_bit(&self, u: usize, v: usize) -> u32 {
        1 << self.bit[u][v]
    }

    /// Mask of an edge set.
    pub fn set_mask(&self, edges: &[(usize, usize)]) -> u32 {
        edges.iter().fold(0, |m, &(u, v)| m | self.edge_bit(u, v))
    }

    /// The edges of `K_n` in bit order.
    pub fn all_edges(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn tree_edges(&self, i: usize) -> Vec<(usize, usize)> {
        let m = self.masks[i];
        self.pairs
            .iter()
            .enumerate()
            .filter(|(b, _)| m & (1 << b) != 0)
            .map(|(_, &e)| e)
            .collect()
    }

    /// Index of the tree with the given mask, if present.
    pub fn position(&self, mask: u32) -> Option<usize> {
        self.masks.binary_search(&mask).ok()
    }

    /// Drops one tree. Test fixture for negative controls of the oracle suite.
    pub fn tampered(mut self) -> Self {
        if self.masks.len() > 1 {
            self.masks.pop();
        }
        self
    }

    /// Whether each member is acyclic and spanning.
    pub fn all_spanning(&self) -> bool {
        (0..self.len()).all(|i| {
            let edges = self.tree_edges(i);
            crate::offers::TreeOffer::from_edges(self.n, edges).is_spanning_tree()
        })
    }
}

/// Decodes a Prüfer sequence over `[n]` (length `n - 2`) into tree edges.
pub fn prufer_decode(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
    assert!(n >= 2 && seq.len() == n - 2, "Prüfer sequence of length n-2 required");
    let mut degree = vec![1usize; n];
    for &x in seq {
        degree[x] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &x in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).unwrap_or(0);
        edges.push(normalize(leaf, x));
        degree[leaf] -= 1;
        degree[x] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push(normalize(rest[0], rest[1]));
    edges
}

/// Enumerates all `n^{n-2}` labeled trees, `2 <= n <= 8`.
pub fn enumerate_trees(n: usize) -> TreeEnsemble {
    assert!(
        (2..=MAX_ENUMERATION_N).contains(&n),
        "enumeration supports 2 <= n <= {MAX_ENUMERATION_N}"
    );
    let mut bit = vec![vec![0u8; n]; n];
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            bit[u][v] = pairs.len() as u8;
            bit[v][u] = pairs.len() as u8;
            pairs.push((u, v));
        }
    }
    let len = n - 2;
    let total = (n as u64).pow(len as u32) as usize;
    let mut masks = Vec::with_capacity(total);
    let mut seq = vec![0usize; len];
    for _ in 0..total {
        let mask = prufer_decode(&seq, n)
            .iter()
            .fold(0u32, |m, &(u, v)| m | (1 << bit[u][v]));
        masks.push(mask);
        for d in seq.iter_mut().rev() {
            *d += 1;
            if *d < n {
                break;
            }
            *d = 0;
        }
    }
    masks.sort_unstable();
    TreeEnsemble {
        n,
        masks,
        bit,
        pairs,
    }
}

pub fn exact_edge_probability(ens: &TreeEnsemble, e: (usize, usize)) -> Ratio<u64> {
    let b = ens.edge_bit(e.0, e.1);
    let hits = ens.masks.iter().filter(|&&m| m & b != 0).count() as u64;
    Ratio::new(hits, ens.len() as u64)
}

pub fn exact_pair_probability(ens: &TreeEnsemble, e: (usize, usize), f: (usize, usize)) -> Ratio<u64> {
    Ratio::new(pair_count(ens, e, f), ens.len() as u64)
}

/// Number of trees containing both `e` and `f`.
pub fn pair_count(ens: &TreeEnsemble, e: (usize, usize), f: (usize, usize)) -> u64 {
    let b = ens.edge_bit(e.0, e.1) | ens.edge_bit(f.0, f.1);
    ens.masks.iter().filter(|&&m| m & b == b).count() as u64
}

/// Exact law of the trace of a uniform tree on `S`: probability of missing `S`
/// entirely and, per edge, of `T ∩ S` being exactly that edge.
#[derive(Clone, Debug, PartialEq)]
pub struct IntersectionStats {
    pub n: usize,
    pub set_size: usize,
    pub total: u64,
    pub miss_count: u64,
    pub unique_counts: Vec<u64>,
}

impl IntersectionStats {
    pub fn miss(&self) -> Ratio<u64> {
        Ratio::new(self.miss_count, self.total)
    }

    pub fn unique(&self, i: usize) -> Ratio<u64> {
        Ratio::new(self.unique_counts[i], self.total)
    }

    /// `P(S ∩ T = ∅) <= exp(-|S|/n)`, compared in floating point with `1e-12` slack.
    pub fn miss_bound_holds(&self) -> bool {
        let p = self.miss_count as f64 / self.total as f64;
        p <= (-(self.set_size as f64) / self.n as f64).exp() + 1e-12
    }

    /// `P(S ∩ T = {e}) >= 1/n` for every `e`, checked exactly. Meaningful for `|S| <= n/4`.
    pub fn unique_bound_holds(&self) -> bool {
        self.unique_counts
            .iter()
            .all(|&c| c * self.n as u64 >= self.total)
    }
}

pub fn exact_intersection_stats(ens: &TreeEnsemble, set: &[(usize, usize)]) -> IntersectionStats {
    let bits: Vec<u32> = set.iter().map(|&(u, v)| ens.edge_bit(u, v)).collect();
    let all = bits.iter().fold(0, |m, b| m | b);
    let mut miss_count = 0;
    let mut unique_counts = vec![0u64; set.len()];
    for &m in &ens.masks {
        let hit = m & all;
        if hit == 0 {
            miss_count += 1;
        } else if hit.is_power_of_two() {
            if let Some(i) = bits.iter().position(|&b| b == hit) {
                unique_counts[i] += 1;
            }
        }
    }
    IntersectionStats {
        n: ens.n,
        set_size: set.len(),
        total: ens.len() as u64,
        miss_count,
        unique_counts,
    }
}

/// A rooted forest on `[n]`: `parent[v] = None` marks a root, and every arc points
/// from a child to its parent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedForest {
    pub parent: Vec<Option<usize>>,
}

impl RootedForest {
    pub fn roots(&self) -> usize {
        self.parent.iter().filter(|p| p.is_none()).count()
    }
}

/// Every rooted tree on `[n]` as a parent array (root marked `u8::MAX`).
pub fn enumerate_rooted_trees(ens: &TreeEnsemble) -> Vec<Vec<u8>> {
    let n = ens.n;
    let mut out = Vec::with_capacity(ens.len() * n);
    let mut adj = vec![Vec::new(); n];
    for i in 0..ens.len() {
        adj.iter_mut().for_each(Vec::clear);
        for (u, v) in ens.tree_edges(i) {
            adj[u].push(v);
            adj[v].push(u);
        }
        for root in 0..n {
            let mut parent = vec![ROOT; n];
            let mut seen = vec![false; n];
            let mut stack = vec![root];
            seen[root] = true;
            while let Some(x) = stack.pop() {
                for &y in &adj[x] {
                    if !seen[y] {
                        seen[y] = true;
                        parent[y] = x as u8;
                        stack.push(y);
                    }
                }
            }
            out.push(parent);
        }
    }
    out
}

/// Number of rooted trees whose arcs (oriented toward the root) include every
/// arc of `forest`.
pub fn count_rooted_containing(rooted: &[Vec<u8>], forest: &RootedForest) -> u64 {
    let arcs: Vec<(usize, u8)> = forest
        .parent
        .iter()
        .enumerate()
        .filter_map(|(c, p)| p.map(|p| (c, p as u8)))
        .collect();
    rooted
        .iter()
        .filter(|par| arcs.iter().all(|&(c, p)| par[c] == p))
        .count() as u64
}

/// A random rooted forest with `m` roots: a random rooted tree with `m - 1`
/// random non-root vertices cut from their parents.
pub fn random_rooted_forest<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> RootedForest {
    assert!(n >= 2 && (1..=n).contains(&m));
    let seq: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
    let edges = prufer_decode(&seq, n);
    let mut adj = vec![Vec::new(); n];
    for (u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let root = rng.gen_range(0..n);
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    let mut stack = vec![root];
    seen[root] = true;
    while let Some(x) = stack.pop() {
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                parent[y] = Some(x);
                stack.push(y);
            }
        }
    }
    let mut others: Vec<usize> = (0..n).filter(|&v| v != root).collect();
    others.shuffle(rng);
    for &v in others.iter().take(m - 1) {
        parent[v] = None;
    }
    RootedForest { parent }
}

/// `P(Poi(mean) = k)`.
pub fn poisson_pmf(mean: f64, k: u64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * mean.ln() - mean - ln_factorial(k)).exp()
}

/// `P(Poi(mean) <= k)` by compensated (Neumaier) summation of the mass function.
pub fn poisson_cdf(mean: f64, k: u64) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for j in 0..=k {
        let term = poisson_pmf(mean, j);
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    (sum + comp).min(1.0)
}

/// `P(Poi(mean) < k)`.
pub fn poisson_cdf_below(mean: f64, k: u64) -> f64 {
    if k == 0 {
        0.0
    } else {
        poisson_cdf(mean, k - 1)
    }
}

/// Chernoff-type tail bounds for `X ~ Poi(μ)` and deviation `t > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChernoffBounds {
    /// `P(X >= μ+t) <= e^{-μ} (eμ/(μ+t))^{μ+t}`.
    pub upper: f64,
    /// `P(X >= μ+t) <= (eμ/t)^t`.
    pub upper_weak: f64,
    /// `P(X <= μ-t) <= exp(-t²/(2μ))`.
    pub lower: f64,
    /// `P(X >= μ+t) <= exp(-t²/(3μ))` for `t <= μ`.
    pub upper_simple: f64,
}

pub fn chernoff_bounds(mean: f64, t: f64) -> ChernoffBounds {
    let e = std::f64::consts::E;
    let s = mean + t;
    ChernoffBounds {
        upper: (-mean + s * (e * mean / s).ln()).exp(),
        upper_weak: (t * (e * mean / t).ln()).exp(),
        lower: (-t * t / (2.0 * mean)).exp(),
        upper_simple: (-t * t / (3.0 * mean)).exp(),
    }
}

/// Direct check that some candidate of `v` has its whole gadget claimed.
pub fn brute_force_repairable(state: &BuilderState, clist: &CandidateList, v: usize) -> bool {
    let h = state.target();
    let Some(pos) = clist.independent().iter().position(|&u| u == v) else {
        return false;
    };
    clist.candidates()[pos].iter().any(|&c| {
        h.neighbors(v)
            .iter()
            .all(|&w| state.is_claimed(state.label(c), state.label(w)))
            && h.neighbors(c)
                .iter()
                .all(|&w| state.is_claimed(state.label(v), state.label(w)))
    })
}

/// One line of the oracle suite.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub max_n: usize,
    /// Drop one tree from each enumeration (negative control).
    pub tamper: bool,
    pub forests_per_n: usize,
    pub random_sets: usize,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            max_n: MAX_ENUMERATION_N,
            tamper: false,
            forests_per_n: 100,
            random_sets: 500,
            seed: 0x5eed,
        }
    }
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> OracleCheck {
    OracleCheck {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

/// Runs every exact identity for `2 <= n <= max_n` (forests for `n <= 7`).
pub fn run_oracle_suite(opts: &SuiteOptions) -> Vec<OracleCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = Vec::new();
    let max_n = opts.max_n.min(MAX_ENUMERATION_N);
    let mut sets_done = 0usize;
    let mut bound_failures = Vec::new();
    let mut unique_checked = 0usize;
    for n in 2..=max_n {
        let mut ens = enumerate_trees(n);
        if opts.tamper {
            ens = ens.tampered();
        }
        let cayley = (n as u64).pow(n as u32 - 2);
        out.push(check(
            format!("cayley n={n}"),
            ens.len() as u64 == cayley && ens.all_spanning(),
            format!("{} trees, expected {cayley}", ens.len()),
        ));

        let target = Ratio::new(2u64, n as u64);
        let bad: Vec<_> = ens
            .all_edges()
            .iter()
            .filter(|&&e| exact_edge_probability(&ens, e) != target)
            .collect();
        out.push(check(
            format!("edge marginal n={n}"),
            bad.is_empty(),
            format!("P(e in T) = 2/{n} for all {} edges ({} mismatches)", ens.all_edges().len(), bad.len()),
        ));

        if n >= 3 {
            let nn = n as u64;
            // 3n^(n-4) and 4n^(n-4); at n = 3 every pair of edges is a path, counted once
            let (adj_want, dis_want) = if n >= 4 {
                (3 * nn.pow(n as u32 - 4), 4 * nn.pow(n as u32 - 4))
            } else {
                (1, 0)
            };
            let edges = ens.all_edges();
            let mut mismatches = 0;
            for (i, &e) in edges.iter().enumerate() {
                for &f in &edges[i + 1..] {
                    let adjacent = e.0 == f.0 || e.0 == f.1 || e.1 == f.0 || e.1 == f.1;
                    let want = if adjacent { adj_want } else { dis_want };
                    if pair_count(&ens, e, f) != want {
                        mismatches += 1;
                    }
                }
            }
            out.push(check(
                format!("pair counts n={n}"),
                mismatches == 0,
                format!("adjacent 3n^(n-4), disjoint 4n^(n-4); {mismatches} mismatches"),
            ));
        }

        if n <= 7 {
            let rooted = enumerate_rooted_trees(&ens);
            let mut wrong = 0;
            let mut cases: Vec<RootedForest> = vec![RootedForest {
                parent: vec![None; n],
            }];
            for _ in 0..opts.forests_per_n {
                let m = rng.gen_range(1..=n);
                cases.push(random_rooted_forest(&mut rng, n, m));
            }
            for f in &cases {
                let want = (n as u64).pow(f.roots() as u32 - 1);
                if count_rooted_containing(&rooted, f) != want {
                    wrong += 1;
                }
            }
            out.push(check(
                format!("rooted forests n={n}"),
                wrong == 0 && rooted.len() as u64 == (n as u64).pow(n as u32 - 1),
                format!("{} forests, count n^(m-1); {wrong} mismatches", cases.len()),
            ));
        }

        // intersection bounds on random edge sets
        let per_n = opts.random_sets.div_ceil(max_n - 1);
        let edges = ens.all_edges().to_vec();
        for _ in 0..per_n {
            let size = rng.gen_range(0..=edges.len());
            let set: Vec<_> = edges.choose_multiple(&mut rng, size).copied().collect();
            let stats = exact_intersection_stats(&ens, &set);
            sets_done += 1;
            if !stats.miss_bound_holds() {
                bound_failures.push(format!("miss n={n} |S|={size}"));
            }
            // small sets for the unique-hit bound
            let small = rng.gen_range(1..=(n / 4).max(1));
            if small * 4 <= n {
                let set: Vec<_> = edges.choose_multiple(&mut rng, small).copied().collect();
                let stats = exact_intersection_stats(&ens, &set);
                unique_checked += 1;
                if !stats.unique_bound_holds() {
                    bound_failures.push(format!("unique n={n} |S|={small}"));
                }
            }
        }
    }
    out.push(check(
        "intersection bounds",
        bound_failures.is_empty(),
        format!(
            "{sets_done} random sets (miss <= exp(-|S|/n)), {unique_checked} small sets (unique >= 1/n); failures: {:?}",
            bound_failures
        ),
    ));

    let p0 = poisson_pmf(1.0, 0);
    out.push(check(
        "poisson pmf",
        (p0 - (-1.0f64).exp()).abs() < 1e-12 && (poisson_cdf(30.0, 200) - 1.0).abs() < 1e-12,
        format!("P(Poi(1)=0) = {p0:.12}"),
    ));
    let mut tail_bad = 0;
    let mut grid = 0;
    for mu in [0.5f64, 2.0, 8.9, 25.0, 100.0] {
        for frac in [0.1, 0.3, 0.5, 0.8, 0.99] {
            let t = frac * mu;
            let k = (mu - t).floor();
            let lower_tail = poisson_cdf(mu, k as u64);
            let up_k = (mu + t).ceil() as u64;
            let upper_tail = 1.0 - poisson_cdf_below(mu, up_k);
            let b = chernoff_bounds(mu, t);
            grid += 1;
            if lower_tail > b.lower + 1e-12 || upper_tail > b.upper + 1e-12 || upper_tail > b.upper_simple + 1e-12 {
                tail_bad += 1;
            }
        }
    }
    out.push(check(
        "poisson tails",
        tail_bad == 0,
        format!("{grid} grid points against Chernoff bounds; {tail_bad} violations"),
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_counts() {
        assert_eq!(enumerate_trees(2).len(), 1);
        assert_eq!(enumerate_trees(3).len(), 3);
        assert_eq!(enumerate_trees(6).len(), 1296);
    }

    #[test]
    fn marginals_and_pairs() {
        let e4 = enumerate_trees(4);
        assert_eq!(exact_edge_probability(&e4, (0, 1)), Ratio::new(1, 2));
        assert_eq!(exact_pair_probability(&e4, (0, 1), (1, 2)), Ratio::new(3, 16));
        assert_eq!(exact_pair_probability(&e4, (0, 1), (2, 3)), Ratio::new(1, 4));
        assert_eq!(exact_edge_probability(&enumerate_trees(2), (0, 1)), Ratio::new(1, 1));
        let e7 = enumerate_trees(7);
        assert_eq!(e7.len(), 16807);
        assert_eq!(exact_edge_probability(&e7, (2, 5)), Ratio::new(2, 7));
    }

    #[test]
    fn forests() {
        let e4 = enumerate_trees(4);
        let r4 = enumerate_rooted_trees(&e4);
        assert_eq!(count_rooted_containing(&r4, &RootedForest { parent: vec![None; 4] }), 64);
        let f = RootedForest {
            parent: vec![None, Some(0), None, None],
        };
        assert_eq!(count_rooted_containing(&r4, &f), 16);
        let e5 = enumerate_trees(5);
        let r5 = enumerate_rooted_trees(&e5);
        let f = RootedForest {
            parent: vec![None, Some(0), Some(1), None, Some(3)],
        };
        assert_eq!(count_rooted_containing(&r5, &f), 5);
    }

    #[test]
    fn intersection_examples() {
        let e6 = enumerate_trees(6);
        let s = exact_intersection_stats(&e6, &[]);
        assert_eq!(s.miss(), Ratio::new(1, 1));
        let set = [(0, 1), (1, 2), (2, 3), (3, 4), (0, 5)];
        let s = exact_intersection_stats(&e6, &set);
        assert!(s.miss_bound_holds());
        let e8 = enumerate_trees(8);
        let s = exact_intersection_stats(&e8, &[(0, 1), (1, 2)]);
        assert!(s.unique_bound_holds());
        assert!(s.unique(0) >= Ratio::new(1, 8));
    }

    #[test]
    fn poisson_values() {
        assert!((poisson_pmf(1.0, 0) - 0.367_879_441_171_442_3).abs() < 1e-15);
        let p = poisson_cdf_below(8.9, 3);
        let direct = (-8.9f64).exp() * (1.0 + 8.9 + 8.9 * 8.9 / 2.0);
        assert!((p - direct).abs() < 1e-15);
    }

    #[test]
    fn suite_passes_and_tamper_fails() {
        let quick = SuiteOptions {
            max_n: 6,
            forests_per_n: 20,
            random_sets: 60,
            ..SuiteOptions::default()
        };
        let res = run_oracle_suite(&quick);
        assert!(res.iter().all(|c| c.passed), "{res:#?}");
        let bad = run_oracle_suite(&SuiteOptions { tamper: true, ..quick });
        assert!(bad.iter().any(|c| !c.passed));
    }
}
