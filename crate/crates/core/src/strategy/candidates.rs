//! Candidate lists: an independent set `I` of failed vertices, disjoint swap
//! candidate sets `C(v)` of common size, and the index of gadget edges they need.

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::CandidateError;
use crate::graph::{edge_key, normalize, BallScratch, TargetGraph};
use crate::state::BuilderState;

/// Blocking radii used by the greedy construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CandidatePolicy {
    /// Each member of `I` blocks its ball of this radius.
    pub independent_radius: usize,
    /// Each chosen candidate blocks its ball of this radius.
    pub candidate_radius: usize,
}

impl CandidatePolicy {
    /// 1-balls around `I`, 2-balls around candidates: the minimum that guarantees the
    /// distance constraints.
    pub const BRIDGING: Self = Self {
        independent_radius: 1,
        candidate_radius: 2,
    };
    /// 2-balls around `I`, 3-balls around candidates.
    pub const FINAL: Self = Self {
        independent_radius: 2,
        candidate_radius: 3,
    };
}

/// Per-vertex lists of relevant edges, sorted, with a cursor that skips claimed
/// edges lazily (claims are permanent, so skipped entries never come back).
#[derive(Clone, Debug, Default)]
struct RelevantIndex {
    edges: Vec<(usize, usize)>,
    by_vertex: FxHashMap<usize, (Vec<u32>, usize)>,
}

impl RelevantIndex {
    fn build(state: &BuilderState, independent: &[usize], candidates: &[Vec<usize>]) -> Self {
        let h = state.target();
        let mut seen = FxHashSet::default();
        let mut edges = Vec::new();
        for (&v, cs) in independent.iter().zip(candidates) {
            for &c in cs {
                for e in gadget_pairs(h, state, v, c) {
                    if seen.insert(edge_key(e.0, e.1)) {
                        edges.push(e);
                    }
                }
            }
        }
        edges.sort_unstable();
        let mut by_vertex: FxHashMap<usize, (Vec<u32>, usize)> = FxHashMap::default();
        for (i, &(a, b)) in edges.iter().enumerate() {
            by_vertex.entry(a).or_default().0.push(i as u32);
            by_vertex.entry(b).or_default().0.push(i as u32);
        }
        Self { edges, by_vertex }
    }
}

/// `R(v, c)` in `[n]` under the current labeling.
fn gadget_pairs<'a>(
    h: &'a TargetGraph,
    state: &'a BuilderState,
    v: usize,
    c: usize,
) -> impl Iterator<Item = (usize, usize)> + 'a {
    let (lv, lc) = (state.label(v), state.label(c));
    h.neighbors(v)
        .iter()
        .map(move |&w| normalize(lc, state.label(w)))
        .chain(h.neighbors(c).iter().map(move |&w| normalize(lv, state.label(w))))
}

#[derive(Clone, Debug)]
pub struct CandidateList {
    independent: Vec<usize>,
    candidates: Vec<Vec<usize>>,
    coverage: usize,
    relevant: RelevantIndex,
}

impl CandidateList {
    pub fn independent(&self) -> &[usize] {
        &self.independent
    }

    /// `C(v)` for the `i`-th member of `I`, sorted.
    pub fn candidates(&self) -> &[Vec<usize>] {
        &self.candidates
    }

    pub fn coverage(&self) -> usize {
        self.coverage
    }

    /// All relevant edges in `[n]`, sorted.
    pub fn relevant_edges(&self) -> &[(usize, usize)] {
        &self.relevant.edges
    }

    pub fn is_relevant(&self, x: usize, y: usize) -> bool {
        self.relevant.edges.binary_search(&normalize(x, y)).is_ok()
    }

    /// The sub-list for the members of `subset` (in list order), with its relevant
    /// edges recomputed under the current labeling.
    pub fn restrict(&self, state: &BuilderState, subset: &[usize]) -> CandidateList {
        let keep: FxHashSet<usize> = subset.iter().copied().collect();
        let mut independent = Vec::new();
        let mut candidates = Vec::new();
        for (v, c) in self.independent.iter().zip(&self.candidates) {
            if keep.contains(v) {
                independent.push(*v);
                candidates.push(c.clone());
            }
        }
        let relevant = RelevantIndex::build(state, &independent, &candidates);
        CandidateList {
            independent,
            candidates,
            coverage: self.coverage,
            relevant,
        }
    }

    /// Drops candidates beyond the first `s` of every set.
    pub fn truncate(&self, state: &BuilderState, s: usize) -> CandidateList {
        let candidates: Vec<Vec<usize>> = self
            .candidates
            .iter()
            .map(|c| c.iter().copied().take(s).collect())
            .collect();
        let relevant = RelevantIndex::build(state, &self.independent, &candidates);
        CandidateList {
            independent: self.independent.clone(),
            candidates,
            coverage: s.min(self.coverage),
            relevant,
        }
    }

    /// `⋃ C(v) ∪ N_H(C(v))`.
    pub fn candidate_neighborhood(&self, h: &TargetGraph) -> Vec<usize> {
        let mut out = Vec::new();
        for c in self.candidates.iter().flatten() {
            out.push(*c);
            out.extend_from_slice(h.neighbors(*c));
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// `N_H(I)`.
    pub fn independent_neighborhood(&self, h: &TargetGraph) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .independent
            .iter()
            .flat_map(|&v| h.neighbors(v).iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Next unclaimed relevant edge at `x` in lexicographic order, advancing the
    /// lazy cursor past claimed ones.
    pub(crate) fn next_unclaimed(&mut self, state: &BuilderState, x: usize) -> Option<(usize, usize)> {
        let (list, cursor) = self.relevant.by_vertex.get_mut(&x)?;
        while *cursor < list.len() {
            let e = self.relevant.edges[list[*cursor] as usize];
            if state.is_claimed(e.0, e.1) {
                *cursor += 1;
            } else {
                return Some(e);
            }
        }
        None
    }

    /// Checks the four list invariants by BFS distances in H.
    pub fn verify(&self, h: &TargetGraph) -> Result<(), String> {
        let mut owner: FxHashMap<usize, usize> = FxHashMap::default();
        for &v in &self.independent {
            if owner.insert(v, usize::MAX).is_some() {
                return Err(format!("{v} repeated in I"));
            }
        }
        for (i, cs) in self.candidates.iter().enumerate() {
            if cs.len() != self.coverage {
                return Err(format!("C({}) has {} members, coverage {}", self.independent[i], cs.len(), self.coverage));
            }
            for &c in cs {
                if owner.insert(c, i).is_some() {
                    return Err(format!("candidate {c} not disjoint from I or other sets"));
                }
            }
        }
        let union: Vec<usize> = self.candidates.iter().flatten().copied().collect();
        let everything: Vec<usize> = self.independent.iter().copied().chain(union.iter().copied()).collect();
        for &a in &everything {
            let dist = h.distances_from(a);
            for &b in &everything {
                if a == b {
                    continue;
                }
                let d = dist[b].unwrap_or(usize::MAX);
                if d < 2 {
                    return Err(format!("{a} and {b} at distance {d} < 2"));
                }
                let both_candidates = owner[&a] != usize::MAX && owner[&b] != usize::MAX;
                if both_candidates && d < 3 {
                    return Err(format!("candidates {a} and {b} at distance {d} < 3"));
                }
            }
        }
        Ok(())
    }
}

/// Greedy candidate list of coverage `s` for `independent`. Members of `I` block
/// balls of `policy.independent_radius`; the pool is scanned in vertex-id order,
/// skipping blocked and failed vertices, and each accepted candidate goes to the
/// member with the fewest so far and blocks its `policy.candidate_radius` ball.
pub fn build_candidate_list(
    state: &BuilderState,
    independent: &[usize],
    s: usize,
    policy: CandidatePolicy,
) -> Result<CandidateList, CandidateError> {
    build(state, independent, s, policy, true)
}

/// As [`build_candidate_list`] but `members` need not be independent: the result is
/// only a valid list after [`CandidateList::restrict`] to an independent subset.
pub fn build_shared_candidate_list(
    state: &BuilderState,
    members: &[usize],
    s: usize,
    policy: CandidatePolicy,
) -> Result<CandidateList, CandidateError> {
    build(state, members, s, policy, false)
}

fn build(
    state: &BuilderState,
    independent: &[usize],
    s: usize,
    policy: CandidatePolicy,
    check_independent: bool,
) -> Result<CandidateList, CandidateError> {
    if independent.is_empty() {
        return Err(CandidateError::EmptyIndependentSet);
    }
    if s == 0 {
        return Err(CandidateError::ZeroCoverage);
    }
    let h = state.target();
    let n = h.n();
    let mut in_i = vec![false; n];
    for &v in independent {
        in_i[v] = true;
    }
    if check_independent {
        for &v in independent {
            if let Some(&w) = h.neighbors(v).iter().find(|&&w| in_i[w]) {
                return Err(CandidateError::NotIndependent(v.min(w), v.max(w)));
            }
        }
    }
    let mut blocked = vec![false; n];
    let mut scratch = BallScratch::new(n);
    for &v in independent {
        for &w in scratch.ball(h, v, policy.independent_radius) {
            blocked[w] = true;
        }
    }
    let k = independent.len();
    let need = k * s;
    let mut candidates: Vec<Vec<usize>> = vec![Vec::with_capacity(s); k];
    let mut placed = 0;
    for u in 0..n {
        if placed == need {
            break;
        }
        if blocked[u] || state.is_failed(u) {
            continue;
        }
        candidates[placed % k].push(u);
        placed += 1;
        for &w in scratch.ball(h, u, policy.candidate_radius) {
            blocked[w] = true;
        }
    }
    if placed < need {
        return Err(CandidateError::InfeasibleCoverage {
            requested: s,
            achieved: placed / k,
        });
    }
    let relevant = RelevantIndex::build(state, independent, &candidates);
    Ok(CandidateList {
        independent: independent.to_vec(),
        candidates,
        coverage: s,
        relevant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_target, TargetSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn rejects_bad_input() {
        let h = Arc::new(TargetGraph::from_edges(4, &[(0, 1), (2, 3)]).unwrap());
        let s = BuilderState::new(h);
        assert_eq!(
            build_candidate_list(&s, &[], 1, CandidatePolicy::BRIDGING).unwrap_err(),
            CandidateError::EmptyIndependentSet
        );
        assert_eq!(
            build_candidate_list(&s, &[0, 1], 1, CandidatePolicy::BRIDGING).unwrap_err(),
            CandidateError::NotIndependent(0, 1)
        );
    }

    #[test]
    fn single_candidate() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = Arc::new(generate_target(&TargetSpec::Regular { delta: 3 }, 60, &mut rng).unwrap());
        let mut st = BuilderState::new(Arc::clone(&h));
        for &(u, w) in h.edges() {
            if u != 0 && w != 0 {
                st.claim_edge(u, w).unwrap();
            }
        }
        let cl = build_candidate_list(&st, &[0], 1, CandidatePolicy::BRIDGING).unwrap();
        cl.verify(&h).unwrap();
        let c = cl.candidates()[0][0];
        assert!(h.distances_from(0)[c].unwrap() >= 2);
        assert!(cl.relevant_edges().len() <= 2 * h.max_degree());
    }

    #[test]
    fn random_lists_verify_and_report_shortfall() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = Arc::new(generate_target(&TargetSpec::Regular { delta: 4 }, 2000, &mut rng).unwrap());
        let st = BuilderState::new(Arc::clone(&h));
        // nothing is claimed so every vertex with an edge is failed: use an edgeless host pool
        assert!(matches!(
            build_candidate_list(&st, &[0], 1, CandidatePolicy::BRIDGING),
            Err(CandidateError::InfeasibleCoverage { achieved: 0, .. })
        ));
        let mut st = BuilderState::new(Arc::clone(&h));
        for &(u, w) in h.edges() {
            st.claim_edge(u, w).unwrap();
        }
        let ind = crate::partition::greedy_independent_set(&h, &[0, 5, 10, 400, 999], 5);
        for policy in [CandidatePolicy::BRIDGING, CandidatePolicy::FINAL] {
            let cl = build_candidate_list(&st, &ind, 3, policy).unwrap();
            cl.verify(&h).unwrap();
            let sub = cl.restrict(&st, &ind[..2]);
            assert_eq!(sub.independent(), &ind[..2]);
            sub.verify(&h).unwrap();
        }
        let err = build_candidate_list(&st, &ind, 400, CandidatePolicy::FINAL).unwrap_err();
        match err {
            CandidateError::InfeasibleCoverage { requested, achieved } => {
                assert_eq!(requested, 400);
                assert!(achieved < 400);
                let cl = build_candidate_list(&st, &ind, achieved.max(1), CandidatePolicy::FINAL).unwrap();
                cl.verify(&h).unwrap();
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
