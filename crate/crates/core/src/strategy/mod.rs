//! Builder decision rules and phase drivers for both offer models.

mod candidates;
mod driver;
mod rules;

use serde::{Deserialize, Serialize};

use crate::state::{BuilderState, Phase};

pub use candidates::{build_candidate_list, build_shared_candidate_list, CandidateList, CandidatePolicy};
pub use driver::{Driver, TreeSampling};
pub use rules::{execute_swaps, gadget_complete, gadget_edges, in_rule_step, meta_rule_step, out_rule_step};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyVariant {
    /// Greedy Out and In rules, bridging, final repair.
    #[default]
    Paper,
    /// Out rule alone with `τ = ⌈Δ/2⌉ + 2√(Δ ln n)` in the star greedy phase; the
    /// repair phases still run when something is left to fix.
    LargeDeltaShortcut,
}

fn pow_ceil(delta: usize, x: f64) -> usize {
    ((delta as f64).powf(x).ceil() as usize).max(1)
}

/// Durations (as multiples of `n`) and sizes used by every phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSchedule {
    pub delta: usize,
    pub n: usize,
    pub variant: StrategyVariant,
    pub tau_out: f64,
    pub tau_in: f64,
    pub k_batches: usize,
    pub s_bridge: usize,
    pub tau_bridge: f64,
    /// Tree greedy subphase lengths as multiples of `n`: `Δ/2`, `Δ^0.99`, `Δ^0.99`.
    pub tree_greedy: [f64; 3],
    /// Quantities that were raised to 1 because Δ is small.
    pub clamped: Vec<String>,
}

impl PhaseSchedule {
    pub fn new(delta: usize, n: usize, variant: StrategyVariant) -> Self {
        let d = delta as f64;
        let half = delta.div_ceil(2) as f64;
        let tau_out = match variant {
            StrategyVariant::Paper => half + d.powf(0.99),
            StrategyVariant::LargeDeltaShortcut => half + 2.0 * (d * (n.max(2) as f64).ln()).sqrt(),
        };
        let mut clamped = Vec::new();
        for (name, x) in [("k_batches", 0.1), ("s_bridge", 0.6), ("hub_threshold", 0.1)] {
            if d.powf(x).ceil() < 1.0 {
                clamped.push(name.to_string());
            }
        }
        Self {
            delta,
            n,
            variant,
            tau_out,
            tau_in: d.powf(0.99),
            k_batches: pow_ceil(delta, 0.1),
            s_bridge: pow_ceil(delta, 0.6),
            tau_bridge: d.powf(0.8),
            tree_greedy: [d / 2.0, d.powf(0.99), d.powf(0.99)],
            clamped,
        }
    }

    /// `max(1, ⌊n / (2(Δ³+1))⌋)`: total candidate budget of one final iteration.
    pub fn final_pool_cap(&self) -> usize {
        let d = self.delta as f64;
        ((self.n as f64 / (2.0 * (d * d * d + 1.0))).floor() as usize).max(1)
    }

    /// Final-phase coverage for an independent set of the given size.
    pub fn final_coverage(&self, independent: usize) -> usize {
        (self.final_pool_cap() / independent.max(1)).max(1)
    }

    /// `τ(s) = √Δ · s^{-1/(3Δ)}`.
    pub fn tau_final(&self, s: usize) -> f64 {
        let d = self.delta.max(1) as f64;
        d.sqrt() * (s.max(1) as f64).powf(-1.0 / (3.0 * d))
    }

    /// Rounds of tree greedy subphase 1, `⌈Δn/2⌉` by default.
    pub fn tree_first_rounds(&self) -> u64 {
        (self.tree_greedy[0] * self.n as f64).ceil() as u64
    }

    /// Rounds of tree greedy subphase 2, `⌈Δ^0.99 n⌉` by default.
    pub fn tree_second_rounds(&self) -> u64 {
        (self.tree_greedy[1] * self.n as f64).ceil() as u64
    }

    /// Mean of tree greedy subphase 3 in rounds.
    pub fn tree_third_mean(&self) -> f64 {
        self.tree_greedy[2] * self.n as f64
    }

    /// The overall round budget per vertex, `½Δ + 2Δ^0.99 + 3Δ^0.9 + e^{-Δ^0.01/4}`.
    pub fn budget_per_vertex(&self) -> f64 {
        let d = self.delta as f64;
        0.5 * d + 2.0 * d.powf(0.99) + 3.0 * d.powf(0.9) + (-0.25 * d.powf(0.01)).exp()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub index: usize,
    pub size: usize,
    /// Members still failed when the batch started.
    pub active: usize,
    pub coverage: usize,
    pub relevant_edges: usize,
    pub rounds: u64,
    pub swaps: usize,
    pub repaired: i64,
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalIteration {
    pub failed: usize,
    pub independent: usize,
    pub coverage: usize,
    pub tau: f64,
    pub rounds: u64,
    pub swaps: usize,
    /// Decrease of the failed-vertex count over the iteration.
    pub repaired: i64,
    pub retry: bool,
}

impl FinalIteration {
    /// Whether at least `|F|/(2Δ)` vertices were repaired.
    pub fn met_progress_target(&self, delta: usize) -> bool {
        self.repaired as f64 >= self.failed as f64 / (2.0 * delta.max(1) as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub phase: Phase,
    pub rounds: u64,
    pub round_mean: f64,
    pub claims: u64,
    pub swaps: usize,
    pub failed_edges_after: usize,
    pub failed_vertices_after: usize,
    pub hubs_after: usize,
    pub batches: Vec<BatchReport>,
    pub iterations: Vec<FinalIteration>,
    pub notes: Vec<String>,
    pub failure: Option<String>,
}

impl PhaseReport {
    fn start(phase: Phase) -> Self {
        Self {
            phase,
            rounds: 0,
            round_mean: 0.0,
            claims: 0,
            swaps: 0,
            failed_edges_after: 0,
            failed_vertices_after: 0,
            hubs_after: 0,
            batches: Vec::new(),
            iterations: Vec::new(),
            notes: Vec::new(),
            failure: None,
        }
    }

    fn finish(mut self, state: &BuilderState, rounds_before: u64) -> Self {
        self.rounds = state.rounds_in(self.phase) - rounds_before;
        self.failed_edges_after = state.failed_edge_count();
        self.failed_vertices_after = state.failed_vertex_count();
        self.hubs_after = state.hub_count();
        self
    }
}

/// Membership marks over H-vertices.
#[derive(Clone, Debug)]
pub struct Marks {
    on: Vec<bool>,
    set: Vec<usize>,
}

impl Marks {
    pub fn new(n: usize) -> Self {
        Self {
            on: vec![false; n],
            set: Vec::new(),
        }
    }

    pub fn clear(&mut self) {
        for &v in &self.set {
            self.on[v] = false;
        }
        self.set.clear();
    }

    pub fn insert(&mut self, v: usize) {
        if !self.on[v] {
            self.on[v] = true;
            self.set.push(v);
        }
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        self.on[v]
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_values() {
        let s = PhaseSchedule::new(8, 1000, StrategyVariant::Paper);
        assert!((s.tau_out - (4.0 + 8f64.powf(0.99))).abs() < 1e-12);
        assert_eq!(s.k_batches, 2);
        assert_eq!(s.s_bridge, 4);
        assert!((s.tau_final(1) - 8f64.sqrt()).abs() < 1e-12);
        assert!(s.tau_final(100) < s.tau_final(10));
        assert_eq!(s.final_pool_cap(), 1);
        assert_eq!(s.tree_first_rounds(), 4000);
        let z = PhaseSchedule::new(0, 10, StrategyVariant::Paper);
        assert_eq!((z.tau_out, z.tau_in, z.k_batches, z.s_bridge), (0.0, 0.0, 1, 1));
        assert!(!z.clamped.is_empty());
        let big = PhaseSchedule::new(8, 100_000, StrategyVariant::LargeDeltaShortcut);
        assert!(big.tau_out > s.tau_out);
    }
}
