//! Phase drivers: turn a schedule and a randomness source into offers and apply
//! the rules to a [`BuilderState`].

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::Process;
use crate::error::CandidateError;
use crate::graph::TargetGraph;
use crate::offers::{
    sample_spanning_tree, sample_tree_intersection, schedule_rounds, EdgeSource, FailedEdgesView,
    FrozenEdges, IntersectScratch, RoundMode,
};
use crate::orientation::{balanced_orientation, Orientation};
use crate::partition::{equitable_distance_partition, greedy_independent_set};
use crate::state::{BuilderState, Phase};

use super::rules::{execute_swaps, in_rule_step, meta_rule_step, out_rule_step};
use super::{
    build_shared_candidate_list, candidates::build_candidate_list, BatchReport, CandidateList,
    CandidatePolicy, FinalIteration, Marks, PhaseReport, PhaseSchedule, StrategyVariant,
};

/// How the tree process reveals `T ∩ S`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TreeSampling {
    /// Draw `T ∩ S` directly from its exact law; cost scales with `|S|`, not `n`.
    #[default]
    Intersection,
    /// Draw the whole tree by the Aldous–Broder walk and intersect.
    FullTree,
}

pub struct Driver<R> {
    pub rng: R,
    pub mode: RoundMode,
    pub sampling: TreeSampling,
    pub schedule: PhaseSchedule,
    /// Cap on final-phase rounds, as a multiple of `Δn/2`.
    pub final_round_factor: f64,
    /// When set, counts offers per H-vertex during the Out phase.
    pub offer_counts: Option<Vec<u32>>,
    scratch: IntersectScratch,
    hits: Vec<usize>,
}

impl<R: Rng> Driver<R> {
    pub fn new(rng: R, schedule: PhaseSchedule) -> Self {
        Self {
            rng,
            mode: RoundMode::Poisson,
            sampling: TreeSampling::Intersection,
            schedule,
            final_round_factor: 100.0,
            offer_counts: None,
            scratch: IntersectScratch::default(),
            hits: Vec::new(),
        }
    }

    /// Runs every phase of the strategy for `process`.
    pub fn run(&mut self, state: &mut BuilderState, process: Process) -> Vec<PhaseReport> {
        let mut reports = match process {
            Process::Star => {
                let orient = balanced_orientation(state.target());
                let mut r = self.run_greedy_star(state, &orient);
                r.push(self.run_bridging_star(state));
                r
            }
            Process::Tree => {
                let mut r = self.run_greedy_tree(state);
                r.push(self.run_bridging_tree(state));
                r
            }
        };
        reports.push(self.run_final(state, process));
        reports
    }

    fn rounds(&mut self, mean: f64) -> u64 {
        schedule_rounds(&mut self.rng, mean, self.mode).realized_rounds
    }

    fn trace<S: EdgeSource + ?Sized>(&mut self, n: usize, set: &S) {
        match self.sampling {
            TreeSampling::Intersection => {
                sample_tree_intersection(&mut self.rng, n, set, &mut self.scratch, &mut self.hits)
            }
            TreeSampling::FullTree => sample_spanning_tree(&mut self.rng, n).intersect(set, &mut self.hits),
        }
    }

    /// Out phase then (for the default variant) In phase.
    pub fn run_greedy_star(&mut self, state: &mut BuilderState, orient: &Orientation) -> Vec<PhaseReport> {
        let n = state.n();
        let mut out = Vec::new();
        let mut phases = vec![(Phase::OutGreedy, self.schedule.tau_out)];
        if self.schedule.variant == StrategyVariant::Paper {
            phases.push((Phase::InGreedy, self.schedule.tau_in));
        }
        for (phase, tau) in phases {
            let before = state.rounds_in(phase);
            let mut rep = PhaseReport::start(phase);
            rep.round_mean = tau * n as f64;
            let rounds = self.rounds(rep.round_mean);
            for _ in 0..rounds {
                let x = self.rng.gen_range(0..n);
                let claimed = if phase == Phase::OutGreedy {
                    if let Some(c) = self.offer_counts.as_mut() {
                        c[state.vertex_at(x)] += 1;
                    }
                    out_rule_step(state, orient, x)
                } else {
                    in_rule_step(state, orient, x)
                };
                rep.claims += claimed.is_some() as u64;
                state.tick(phase);
            }
            out.push(rep.finish(state, before));
        }
        out
    }

    /// The three tree greedy subphases: two of fixed length claiming the smallest
    /// failed edge of each tree, then unique acceptance over the frozen failed set.
    pub fn run_greedy_tree(&mut self, state: &mut BuilderState) -> Vec<PhaseReport> {
        let n = state.n();
        let mut out = Vec::new();
        let fixed = [
            (Phase::TreeGreedy1, self.schedule.tree_first_rounds()),
            (Phase::TreeGreedy2, self.schedule.tree_second_rounds()),
        ];
        for (phase, rounds) in fixed {
            let before = state.rounds_in(phase);
            let mut rep = PhaseReport::start(phase);
            rep.round_mean = rounds as f64;
            for _ in 0..rounds {
                let pick = {
                    let view = FailedEdgesView(state);
                    self.trace(n, &view);
                    self.hits.iter().map(|&i| view.edge(i)).min()
                };
                if let Some((a, b)) = pick {
                    state.claim_edge(a, b).expect("failed edges are valid");
                    rep.claims += 1;
                }
                state.tick(phase);
            }
            out.push(rep.finish(state, before));
        }
        let phase = Phase::TreeGreedy3;
        let before = state.rounds_in(phase);
        let mut rep = PhaseReport::start(phase);
        rep.round_mean = self.schedule.tree_third_mean();
        let frozen = {
            let view = FailedEdgesView(state);
            FrozenEdges::new((0..view.len()).map(|i| view.edge(i)))
        };
        if frozen.is_empty() {
            rep.notes.push("no failed edges; subphase skipped".into());
        } else {
            let rounds = self.rounds(rep.round_mean);
            rep.claims = self.unique_acceptance(state, &frozen, rounds, phase);
        }
        out.push(rep.finish(state, before));
        out
    }

    fn unique_acceptance(&mut self, state: &mut BuilderState, set: &FrozenEdges, rounds: u64, phase: Phase) -> u64 {
        let n = state.n();
        let mut claims = 0;
        for _ in 0..rounds {
            self.trace(n, set);
            if self.hits.len() == 1 {
                let (a, b) = set.edge(self.hits[0]);
                claims += state.claim_edge(a, b).expect("frozen edges are valid") as u64;
            }
            state.tick(phase);
        }
        claims
    }

    /// The bridging set and its batches, or a note explaining why there is none.
    fn bridging_batches(
        &self,
        state: &BuilderState,
        exclude_hub_neighbours: bool,
        rep: &mut PhaseReport,
    ) -> Option<(Vec<Vec<usize>>, CandidateList)> {
        let h = state.target();
        let mut excluded = vec![false; h.n()];
        for &m in state.hubs() {
            excluded[m] = true;
            if exclude_hub_neighbours {
                for &w in h.neighbors(m) {
                    excluded[w] = true;
                }
            }
        }
        let mut members: Vec<usize> = state.failed_vertices().iter().copied().filter(|&v| !excluded[v]).collect();
        members.sort_unstable();
        if members.is_empty() {
            rep.notes.push("nothing to bridge; phase skipped".into());
            return None;
        }
        let part = match equitable_distance_partition(h, &members, 2, self.schedule.k_batches) {
            Ok(p) => p,
            Err(e) => {
                rep.failure = Some(format!("partition: {e}"));
                return None;
            }
        };
        match build_shared_candidate_list(state, &members, self.schedule.s_bridge, CandidatePolicy::BRIDGING) {
            Ok(list) => Some((part.parts, list)),
            Err(e) => {
                rep.failure = Some(format!("candidate list for {} vertices: {e}", members.len()));
                None
            }
        }
    }

    fn batch_report(index: usize, part: &[usize], live: usize, list: &CandidateList) -> BatchReport {
        BatchReport {
            index,
            size: part.len(),
            active: live,
            coverage: list.coverage(),
            relevant_edges: list.relevant_edges().len(),
            rounds: 0,
            swaps: 0,
            repaired: 0,
            skipped: None,
        }
    }

    /// Star bridging: per batch, offers in `N(I_b)` then in `⋃C ∪ N(C)`, then swaps.
    pub fn run_bridging_star(&mut self, state: &mut BuilderState) -> PhaseReport {
        let phase = Phase::Bridging;
        let before = state.rounds_in(phase);
        let mut rep = PhaseReport::start(phase);
        let n = state.n();
        rep.round_mean = self.schedule.tau_bridge * n as f64;
        let Some((parts, global)) = self.bridging_batches(state, true, &mut rep) else {
            return rep.finish(state, before);
        };
        let h = state.target_arc();
        let mut active = Marks::new(n);
        for (index, part) in parts.iter().enumerate() {
            let live: Vec<usize> = part.iter().copied().filter(|&v| state.is_failed(v)).collect();
            let mut list = global.restrict(state, &live);
            let mut b = Self::batch_report(index, part, live.len(), &list);
            if live.is_empty() {
                b.skipped = Some("no failed members".into());
                rep.batches.push(b);
                continue;
            }
            let failed_before = state.failed_vertex_count() as i64;
            for stage in [list.independent_neighborhood(&h), list.candidate_neighborhood(&h)] {
                active.clear();
                stage.into_iter().for_each(|v| active.insert(v));
                let rounds = self.rounds(rep.round_mean);
                for _ in 0..rounds {
                    let x = self.rng.gen_range(0..n);
                    rep.claims += meta_rule_step(state, &mut list, &active, x).is_some() as u64;
                    state.tick(phase);
                }
                b.rounds += rounds;
            }
            b.swaps = execute_swaps(state, &list);
            b.repaired = failed_before - state.failed_vertex_count() as i64;
            rep.swaps += b.swaps;
            rep.batches.push(b);
        }
        rep.finish(state, before)
    }

    /// Tree bridging: per batch, one unique-acceptance subphase over the unclaimed
    /// relevant edges, then swaps. Batches whose relevant set exceeds `n/4` are skipped.
    pub fn run_bridging_tree(&mut self, state: &mut BuilderState) -> PhaseReport {
        let phase = Phase::Bridging;
        let before = state.rounds_in(phase);
        let mut rep = PhaseReport::start(phase);
        let n = state.n();
        rep.round_mean = self.schedule.tau_bridge * n as f64;
        let Some((parts, global)) = self.bridging_batches(state, false, &mut rep) else {
            return rep.finish(state, before);
        };
        for (index, part) in parts.iter().enumerate() {
            let live: Vec<usize> = part.iter().copied().filter(|&v| state.is_failed(v)).collect();
            let list = global.restrict(state, &live);
            let mut b = Self::batch_report(index, part, live.len(), &list);
            if live.is_empty() {
                b.skipped = Some("no failed members".into());
                rep.batches.push(b);
                continue;
            }
            let set = unclaimed_relevant(state, &list);
            if set.len() > n / 4 {
                let msg = format!("batch {index}: {} relevant edges exceed n/4", set.len());
                b.skipped = Some(msg.clone());
                rep.failure.get_or_insert(msg);
                rep.batches.push(b);
                continue;
            }
            let failed_before = state.failed_vertex_count() as i64;
            let rounds = self.rounds(rep.round_mean);
            rep.claims += self.unique_acceptance(state, &set, rounds, phase);
            b.rounds = rounds;
            b.swaps = execute_swaps(state, &list);
            b.repaired = failed_before - state.failed_vertex_count() as i64;
            rep.swaps += b.swaps;
            rep.batches.push(b);
        }
        rep.finish(state, before)
    }

    /// Candidate list for a final iteration: the scheduled coverage under the final
    /// policy, else the achievable coverage, else the same under the bridging policy,
    /// else halving `I` at coverage 1.
    fn final_list(&self, state: &BuilderState, ind: &[usize], notes: &mut Vec<String>) -> Option<CandidateList> {
        let s0 = self.schedule.final_coverage(ind.len());
        for (name, policy) in [("final", CandidatePolicy::FINAL), ("bridging", CandidatePolicy::BRIDGING)] {
            match build_candidate_list(state, ind, s0, policy) {
                Ok(list) => return Some(list),
                Err(CandidateError::InfeasibleCoverage { achieved, .. }) if achieved > 0 => {
                    notes.push(format!("coverage {s0} infeasible under {name} policy; using {achieved}"));
                    return build_candidate_list(state, ind, achieved, policy).ok();
                }
                Err(_) => {}
            }
        }
        let mut m = ind.len();
        while m > 1 {
            m /= 2;
            if let Ok(list) = build_candidate_list(state, &ind[..m], 1, CandidatePolicy::BRIDGING) {
                notes.push(format!("independent set shrunk from {} to {m}", ind.len()));
                return Some(list);
            }
        }
        None
    }

    /// Repeats list construction, one offer subphase and swaps until nothing is
    /// failed or a cap is hit. An iteration that repairs nothing is retried with a
    /// freshly shuffled independent set.
    pub fn run_final(&mut self, state: &mut BuilderState, process: Process) -> PhaseReport {
        let phase = Phase::Final;
        let before = state.rounds_in(phase);
        let mut rep = PhaseReport::start(phase);
        if state.failed_vertex_count() == 0 {
            rep.notes.push("no failed vertices; phase skipped".into());
            return rep.finish(state, before);
        }
        let h = state.target_arc();
        let n = h.n();
        let delta = h.max_degree();
        let round_cap = (self.final_round_factor * delta.max(1) as f64 * n as f64 / 2.0).ceil() as u64;
        let iter_cap = 50 * n;
        let mut active = Marks::new(n);
        let mut retry = false;
        let mut used = 0u64;
        while state.failed_vertex_count() > 0 {
            if rep.iterations.len() >= iter_cap {
                rep.failure = Some(format!("iteration cap {iter_cap} reached"));
                break;
            }
            if used >= round_cap {
                rep.failure = Some(format!(
                    "round cap {round_cap} reached with {} failed vertices",
                    state.failed_vertex_count()
                ));
                break;
            }
            let mut f = state.failed_vertices().to_vec();
            f.sort_unstable();
            if retry {
                f.shuffle(&mut self.rng);
            }
            let ind = greedy_independent_set(&h, &f, f.len().div_ceil(delta + 1));
            let Some(mut list) = self.final_list(state, &ind, &mut rep.notes) else {
                rep.failure = Some("no candidate list can be built".into());
                break;
            };
            let mut set = None;
            if process == Process::Tree {
                match self.fit_relevant(state, list, &h, &mut rep) {
                    Some((l, s)) => {
                        list = l;
                        set = Some(s);
                    }
                    None => break,
                }
            }
            let s = list.coverage();
            let tau = self.schedule.tau_final(s);
            let rounds = self.rounds(tau * n as f64).min(round_cap - used);
            let failed_before = state.failed_vertex_count();
            match set {
                None => {
                    active.clear();
                    list.independent_neighborhood(&h).into_iter().for_each(|v| active.insert(v));
                    list.candidate_neighborhood(&h).into_iter().for_each(|v| active.insert(v));
                    for _ in 0..rounds {
                        let x = self.rng.gen_range(0..n);
                        rep.claims += meta_rule_step(state, &mut list, &active, x).is_some() as u64;
                        state.tick(phase);
                    }
                }
                Some(set) => rep.claims += self.unique_acceptance(state, &set, rounds, phase),
            }
            used += rounds;
            let swaps = execute_swaps(state, &list);
            let repaired = failed_before as i64 - state.failed_vertex_count() as i64;
            rep.swaps += swaps;
            rep.iterations.push(FinalIteration {
                failed: failed_before,
                independent: list.independent().len(),
                coverage: s,
                tau,
                rounds,
                swaps,
                repaired,
                retry,
            });
            retry = repaired <= 0;
        }
        rep.finish(state, before)
    }

    /// Keeps the tree relevant set within `n/4`, lowering coverage when needed.
    fn fit_relevant(
        &self,
        state: &BuilderState,
        list: CandidateList,
        h: &TargetGraph,
        rep: &mut PhaseReport,
    ) -> Option<(CandidateList, FrozenEdges)> {
        let limit = state.n() / 4;
        let set = unclaimed_relevant(state, &list);
        if set.len() <= limit {
            return Some((list, set));
        }
        let per = 2 * h.max_degree().max(1) * list.independent().len();
        let s = (limit / per).max(1);
        let smaller = list.truncate(state, s);
        let set = unclaimed_relevant(state, &smaller);
        if set.len() <= limit {
            rep.notes.push(format!("coverage lowered to {s} to keep relevant edges within n/4"));
            Some((smaller, set))
        } else {
            rep.failure = Some(format!("{} relevant edges exceed n/4 = {limit}", set.len()));
            None
        }
    }
}

fn unclaimed_relevant(state: &BuilderState, list: &CandidateList) -> FrozenEdges {
    FrozenEdges::new(list.relevant_edges().iter().copied().filter(|&(a, b)| !state.is_claimed(a, b)))
}
