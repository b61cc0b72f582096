//! Single-offer decision rules and the swap step.

use crate::graph::normalize;
use crate::orientation::Orientation;
use crate::state::BuilderState;

use super::{CandidateList, Marks};

fn first_unclaimed<'a>(
    state: &BuilderState,
    x: usize,
    mut others: impl Iterator<Item = &'a usize>,
) -> Option<(usize, usize)> {
    others
        .find(|&&w| !state.is_claimed(x, state.label(w)))
        .map(|&w| normalize(x, state.label(w)))
}

/// Out rule: for the offered `x`, claim `x π(w)` for the first out-neighbour `w` of
/// `π⁻¹(x)` whose edge is still missing.
pub fn out_rule_step(
    state: &mut BuilderState,
    orient: &Orientation,
    x: usize,
) -> Option<(usize, usize)> {
    let v = state.vertex_at(x);
    let e = first_unclaimed(state, x, orient.out_neighbors(v).iter())?;
    state.claim_edge(e.0, e.1).expect("rule edges are valid");
    Some(e)
}

/// In rule: as the Out rule but over in-neighbours.
pub fn in_rule_step(
    state: &mut BuilderState,
    orient: &Orientation,
    x: usize,
) -> Option<(usize, usize)> {
    let v = state.vertex_at(x);
    let e = first_unclaimed(state, x, orient.in_neighbors(v).iter())?;
    state.claim_edge(e.0, e.1).expect("rule edges are valid");
    Some(e)
}

/// Meta rule: if `π⁻¹(x)` is active, claim the lexicographically smallest unclaimed
/// relevant edge at `x`.
pub fn meta_rule_step(
    state: &mut BuilderState,
    clist: &mut CandidateList,
    active: &Marks,
    x: usize,
) -> Option<(usize, usize)> {
    if !active.contains(state.vertex_at(x)) {
        return None;
    }
    let e = clist.next_unclaimed(state, x)?;
    state.claim_edge(e.0, e.1).expect("relevant edges are valid");
    Some(e)
}

/// The `[n]`-pairs that swapping `v` with `c` needs present.
pub fn gadget_edges(state: &BuilderState, v: usize, c: usize) -> Vec<(usize, usize)> {
    let h = state.target();
    let (lv, lc) = (state.label(v), state.label(c));
    h.neighbors(v)
        .iter()
        .map(|&w| normalize(lc, state.label(w)))
        .chain(h.neighbors(c).iter().map(|&w| normalize(lv, state.label(w))))
        .collect()
}

pub fn gadget_complete(state: &BuilderState, v: usize, c: usize) -> bool {
    let h = state.target();
    let (lv, lc) = (state.label(v), state.label(c));
    h.neighbors(v).iter().all(|&w| state.is_claimed(lc, state.label(w)))
        && h.neighbors(c).iter().all(|&w| state.is_claimed(lv, state.label(w)))
}

/// For every still-failed `v ∈ I`, swaps it with the lowest-id candidate whose
/// gadget is complete. Returns the number of swaps. Panics if a swap leaves `v`, its
/// partner, or a previously successful neighbour failed.
pub fn execute_swaps(state: &mut BuilderState, clist: &CandidateList) -> usize {
    let h = state.target_arc();
    let mut swaps = 0;
    for (&v, cs) in clist.independent().iter().zip(clist.candidates()) {
        if !state.is_failed(v) {
            continue;
        }
        let Some(&c) = cs.iter().find(|&&c| gadget_complete(state, v, c)) else {
            continue;
        };
        let watch: Vec<usize> = h
            .neighbors(v)
            .iter()
            .chain(h.neighbors(c))
            .copied()
            .chain([c])
            .filter(|&u| !state.is_failed(u))
            .collect();
        state.swap_labels(v, c);
        assert!(!state.is_failed(v), "swap left {v} failed");
        for u in watch {
            assert!(!state.is_failed(u), "swap of {v} with {c} broke {u}");
        }
        swaps += 1;
    }
    swaps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::TargetGraph;
    use crate::orientation::balanced_orientation;
    use crate::strategy::{build_candidate_list, CandidatePolicy};
    use std::sync::Arc;

    #[test]
    fn out_then_in_rule_claim_missing_edges() {
        let h = Arc::new(TargetGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap());
        let o = balanced_orientation(&h);
        let mut st = BuilderState::new(Arc::clone(&h));
        for x in 0..3 {
            assert!(out_rule_step(&mut st, &o, x).is_some());
        }
        assert!(st.contains_copy());
        assert!(out_rule_step(&mut st, &o, 0).is_none());
        assert!(in_rule_step(&mut st, &o, 0).is_none());
    }

    #[test]
    fn swap_repairs_failed_vertex() {
        // edge 0-1 missing, a missing triangle on 2,3,4, isolated 5: the only
        // successful vertex outside the ball of 0 is 5
        let h = Arc::new(TargetGraph::from_edges(6, &[(0, 1), (2, 3), (3, 4), (2, 4)]).unwrap());
        let mut st = BuilderState::new(Arc::clone(&h));
        assert_eq!(st.failed_vertices().len(), 5);
        let mut cl = build_candidate_list(&st, &[0], 1, CandidatePolicy::BRIDGING).unwrap();
        assert_eq!(cl.candidates()[0], vec![5]);
        let mut active = Marks::new(6);
        for v in cl.candidate_neighborhood(&h) {
            active.insert(v);
        }
        for v in cl.independent_neighborhood(&h) {
            active.insert(v);
        }
        assert_eq!(gadget_edges(&st, 0, 5), vec![(1, 5)]);
        assert!(meta_rule_step(&mut st, &mut cl, &active, 1).is_some());
        assert!(meta_rule_step(&mut st, &mut cl, &active, 1).is_none());
        assert_eq!(execute_swaps(&mut st, &cl), 1);
        assert_eq!(st.label(0), 5);
        let mut left = st.failed_vertices().to_vec();
        left.sort();
        assert_eq!(left, vec![2, 3, 4]);
    }
}
