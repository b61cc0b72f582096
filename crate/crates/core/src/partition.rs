//! Near-equitable partitions of a vertex subset into parts whose members are
//! pairwise far apart in H, plus greedy independent sets.

use crate::error::PartitionError;
use crate::graph::{BallScratch, TargetGraph};

const UNASSIGNED: usize = usize::MAX;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistancePartition {
    /// Parts, each sorted. At least `requested_parts` of them; more when the
    /// coloring or rebalancing needed extra colors.
    pub parts: Vec<Vec<usize>>,
    /// Minimum H-distance between two members of the same part.
    pub distance: usize,
    pub requested_parts: usize,
    /// Allowed difference between the largest and smallest part.
    pub size_slack: usize,
}

impl DistancePartition {
    pub fn sizes(&self) -> Vec<usize> {
        self.parts.iter().map(Vec::len).collect()
    }

    /// BFS check of the distance constraint and of the balance bound.
    pub fn verify(&self, h: &TargetGraph, subset: &[usize]) -> Result<(), String> {
        let mut all: Vec<usize> = self.parts.iter().flatten().copied().collect();
        all.sort_unstable();
        let mut expect = subset.to_vec();
        expect.sort_unstable();
        expect.dedup();
        if all != expect {
            return Err("parts do not partition the subset".into());
        }
        let mut part_of = vec![UNASSIGNED; h.n()];
        for (i, p) in self.parts.iter().enumerate() {
            for &v in p {
                part_of[v] = i;
            }
        }
        let mut scratch = BallScratch::new(h.n());
        for (i, p) in self.parts.iter().enumerate() {
            for &v in p {
                for &w in scratch.ball(h, v, self.distance - 1) {
                    if w != v && part_of[w] == i {
                        return Err(format!("{v} and {w} in part {i} are closer than {}", self.distance));
                    }
                }
            }
        }
        let sizes = self.sizes();
        let (lo, hi) = (
            sizes.iter().min().copied().unwrap_or(0),
            sizes.iter().max().copied().unwrap_or(0),
        );
        if hi - lo > self.size_slack {
            return Err(format!("part sizes {lo}..{hi} exceed slack {}", self.size_slack));
        }
        Ok(())
    }
}

/// `max(1, ⌈0.1·|subset|/k⌉)`.
pub fn size_slack(subset_len: usize, k: usize) -> usize {
    ((subset_len as f64 * 0.1 / k as f64).ceil() as usize).max(1)
}

/// Splits `subset` into at least `k` parts with all same-part pairs at H-distance
/// `>= d`. Greedy coloring in vertex-id order (smallest feasible color), then
/// conflict-free moves from the largest part to smaller ones; a part that cannot
/// shed vertices is split in two.
pub fn equitable_distance_partition(
    h: &TargetGraph,
    subset: &[usize],
    d: usize,
    k: usize,
) -> Result<DistancePartition, PartitionError> {
    if k == 0 {
        return Err(PartitionError::NoParts);
    }
    if d == 0 {
        return Err(PartitionError::ZeroDistance);
    }
    if let Some(&bad) = subset.iter().find(|&&v| v >= h.n()) {
        return Err(PartitionError::BadVertex(bad));
    }
    let mut verts = subset.to_vec();
    verts.sort_unstable();
    verts.dedup();
    let slack = size_slack(verts.len(), k);

    let mut part_of = vec![UNASSIGNED; h.n()];
    let mut parts: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut scratch = BallScratch::new(h.n());
    let mut blocked: Vec<bool> = Vec::new();
    for &v in &verts {
        blocked.clear();
        blocked.resize(parts.len(), false);
        for &w in scratch.ball(h, v, d - 1) {
            if part_of[w] != UNASSIGNED {
                blocked[part_of[w]] = true;
            }
        }
        let c = match blocked.iter().position(|b| !b) {
            Some(c) => c,
            None => {
                parts.push(Vec::new());
                parts.len() - 1
            }
        };
        part_of[v] = c;
        parts[c].push(v);
    }

    loop {
        let (big, small) = extremes(&parts);
        if parts[big].len() - parts[small].len() <= slack {
            break;
        }
        let target_len = parts[big].len();
        let mut moved = false;
        // prefer the smallest part, then any part at least two smaller
        let mut order: Vec<usize> = (0..parts.len())
            .filter(|&p| p != big && parts[p].len() + 1 < target_len)
            .collect();
        order.sort_by_key(|&p| (parts[p].len(), p));
        'search: for &dst in &order {
            for idx in 0..parts[big].len() {
                let u = parts[big][idx];
                let clash = scratch
                    .ball(h, u, d - 1)
                    .iter()
                    .any(|&w| w != u && part_of[w] == dst);
                if !clash {
                    parts[big].swap_remove(idx);
                    parts[dst].push(u);
                    part_of[u] = dst;
                    moved = true;
                    break 'search;
                }
            }
        }
        if !moved {
            parts[big].sort_unstable();
            let half = parts[big].len() / 2;
            let tail = parts[big].split_off(half);
            let id = parts.len();
            for &u in &tail {
                part_of[u] = id;
            }
            parts.push(tail);
        }
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    Ok(DistancePartition {
        parts,
        distance: d,
        requested_parts: k,
        size_slack: slack,
    })
}

fn extremes(parts: &[Vec<usize>]) -> (usize, usize) {
    let mut big = 0;
    let mut small = 0;
    for (i, p) in parts.iter().enumerate() {
        if p.len() > parts[big].len() {
            big = i;
        }
        if p.len() < parts[small].len() {
            small = i;
        }
    }
    (big, small)
}

/// Greedy independent subset of `f` with at most `size` members, scanning `f` in the
/// given order. Returns fewer than `size` only when `f` has no larger greedy
/// independent set, which cannot happen for `size <= ⌈|f|/(Δ+1)⌉`.
pub fn greedy_independent_set(h: &TargetGraph, f: &[usize], size: usize) -> Vec<usize> {
    let mut blocked = vec![false; h.n()];
    let mut out = Vec::with_capacity(size);
    for &v in f {
        if out.len() == size {
            break;
        }
        if blocked[v] {
            continue;
        }
        out.push(v);
        blocked[v] = true;
        for &w in h.neighbors(v) {
            blocked[w] = true;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_target, TargetSpec};
    use rand::{seq::SliceRandom, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cycle(n: usize) -> TargetGraph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        TargetGraph::from_edges(n, &edges).unwrap()
    }

    #[test]
    fn c6_opposite_pairs_at_distance_three() {
        let h = cycle(6);
        let all: Vec<_> = (0..6).collect();
        let p = equitable_distance_partition(&h, &all, 3, 3).unwrap();
        assert_eq!(p.parts, vec![vec![0, 3], vec![1, 4], vec![2, 5]]);
        p.verify(&h, &all).unwrap();
        let p2 = equitable_distance_partition(&h, &all, 2, 3).unwrap();
        assert_eq!(p2.sizes(), vec![2, 2, 2]);
        p2.verify(&h, &all).unwrap();
    }

    #[test]
    fn edgeless_is_balanced() {
        let h = TargetGraph::from_edges(11, &[]).unwrap();
        let sub: Vec<_> = (0..11).collect();
        let p = equitable_distance_partition(&h, &sub, 2, 4).unwrap();
        let s = p.sizes();
        assert_eq!(s.len(), 4);
        assert!(s.iter().max().unwrap() - s.iter().min().unwrap() <= 1);
    }

    #[test]
    fn random_subsets_verify() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..20 {
            let h = generate_target(&TargetSpec::Regular { delta: 4 }, 400, &mut rng).unwrap();
            let mut sub: Vec<_> = (0..400).collect();
            sub.shuffle(&mut rng);
            sub.truncate(40 + trial * 10);
            for d in 1..=3 {
                let p = equitable_distance_partition(&h, &sub, d, 3).unwrap();
                p.verify(&h, &sub).unwrap();
            }
        }
    }

    #[test]
    fn independent_sets() {
        let k4 = TargetGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(greedy_independent_set(&k4, &[0, 1, 2, 3], 1).len(), 1);
        let h = cycle(8);
        assert_eq!(greedy_independent_set(&h, &[0, 2, 4], 3), vec![0, 2, 4]);
        let got = greedy_independent_set(&h, &(0..8).collect::<Vec<_>>(), 3);
        assert_eq!(got.len(), 3);
        for &a in &got {
            for &b in &got {
                assert!(!h.has_edge(a, b));
            }
        }
    }
}
