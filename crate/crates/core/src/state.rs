//! Builder state: claimed edges on `[n]`, the labeling of H into `[n]`, and
//! incrementally maintained failed-edge, failed-vertex and hub indices.

use std::sync::Arc;

use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::error::StateError;
use crate::graph::{edge_key, TargetGraph};

/// Strategy phases, used for round accounting and trajectory tags.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    OutGreedy,
    InGreedy,
    #[serde(rename = "tree-greedy-1")]
    TreeGreedy1,
    #[serde(rename = "tree-greedy-2")]
    TreeGreedy2,
    #[serde(rename = "tree-greedy-3")]
    TreeGreedy3,
    Bridging,
    Final,
}

impl Phase {
    pub const ALL: [Phase; 7] = [
        Phase::OutGreedy,
        Phase::InGreedy,
        Phase::TreeGreedy1,
        Phase::TreeGreedy2,
        Phase::TreeGreedy3,
        Phase::Bridging,
        Phase::Final,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::OutGreedy => "out-greedy",
            Phase::InGreedy => "in-greedy",
            Phase::TreeGreedy1 => "tree-greedy-1",
            Phase::TreeGreedy2 => "tree-greedy-2",
            Phase::TreeGreedy3 => "tree-greedy-3",
            Phase::Bridging => "bridging",
            Phase::Final => "final",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// One trajectory sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub round: u64,
    pub failed_edges: usize,
    pub failed_vertices: usize,
    pub hubs: usize,
    pub phase: Phase,
}

/// Index set over `0..n` with O(1) insert, remove and membership.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseSet {
    items: Vec<usize>,
    pos: Vec<usize>,
}

const ABSENT: usize = usize::MAX;

impl SparseSet {
    pub fn new(universe: usize) -> Self {
        Self {
            items: Vec::new(),
            pos: vec![ABSENT; universe],
        }
    }

    pub fn contains(&self, x: usize) -> bool {
        self.pos[x] != ABSENT
    }

    pub fn insert(&mut self, x: usize) -> bool {
        if self.contains(x) {
            return false;
        }
        self.pos[x] = self.items.len();
        self.items.push(x);
        true
    }

    pub fn remove(&mut self, x: usize) -> bool {
        let p = self.pos[x];
        if p == ABSENT {
            return false;
        }
        let last = self.items.pop().unwrap_or(x);
        if last != x {
            self.items[p] = last;
            self.pos[last] = p;
        }
        self.pos[x] = ABSENT;
        true
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Members in internal (history-dependent but deterministic) order.
    pub fn as_slice(&self) -> &[usize] {
        &self.items
    }

    pub fn sorted(&self) -> Vec<usize> {
        let mut v = self.items.clone();
        v.sort_unstable();
        v
    }
}

/// Failed edges (as H-edges `(u, w)`, `u < w`), failed vertices and hubs, all sorted.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FailureSets {
    pub failed_edges: Vec<(usize, usize)>,
    pub failed_vertices: Vec<usize>,
    pub hubs: Vec<usize>,
}

/// `⌈Δ^0.1⌉`, at least 1.
pub fn hub_threshold(delta: usize) -> usize {
    ((delta as f64).powf(0.1).ceil() as usize).max(1)
}

#[derive(Clone, Debug)]
pub struct BuilderState {
    target: Arc<TargetGraph>,
    pi: Vec<usize>,
    inv: Vec<usize>,
    claimed: FxHashSet<u64>,
    failed_edges: SparseSet,
    failed_deg: Vec<u32>,
    failed_vertices: SparseSet,
    failed_nbrs: Vec<u32>,
    hubs: SparseSet,
    hub_threshold: usize,
    rounds: [u64; 7],
    total_rounds: u64,
    cadence: u64,
    trajectory: Vec<Snapshot>,
}

impl BuilderState {
    /// Empty Builder graph, identity labeling, snapshots every `n` rounds.
    pub fn new(target: Arc<TargetGraph>) -> Self {
        let n = target.n();
        let threshold = hub_threshold(target.max_degree());
        let mut failed_edges = SparseSet::new(target.edge_count());
        for id in 0..target.edge_count() {
            failed_edges.insert(id);
        }
        let failed_deg: Vec<u32> = (0..n).map(|v| target.degree(v) as u32).collect();
        let mut failed_vertices = SparseSet::new(n);
        for v in 0..n {
            if failed_deg[v] > 0 {
                failed_vertices.insert(v);
            }
        }
        let failed_nbrs: Vec<u32> = (0..n)
            .map(|v| {
                target
                    .neighbors(v)
                    .iter()
                    .filter(|&&w| failed_deg[w] > 0)
                    .count() as u32
            })
            .collect();
        let mut hubs = SparseSet::new(n);
        for v in 0..n {
            if failed_nbrs[v] as usize >= threshold {
                hubs.insert(v);
            }
        }
        Self {
            pi: (0..n).collect(),
            inv: (0..n).collect(),
            claimed: FxHashSet::default(),
            failed_edges,
            failed_deg,
            failed_vertices,
            failed_nbrs,
            hubs,
            hub_threshold: threshold,
            rounds: [0; 7],
            total_rounds: 0,
            cadence: n.max(1) as u64,
            trajectory: Vec::new(),
            target,
        }
    }

    pub fn target(&self) -> &TargetGraph {
        &self.target
    }

    pub fn target_arc(&self) -> Arc<TargetGraph> {
        Arc::clone(&self.target)
    }

    pub fn n(&self) -> usize {
        self.target.n()
    }

    /// π(v) for an H-vertex.
    #[inline]
    pub fn label(&self, v: usize) -> usize {
        self.pi[v]
    }

    /// π⁻¹(x) for a vertex of `[n]`.
    #[inline]
    pub fn vertex_at(&self, x: usize) -> usize {
        self.inv[x]
    }

    pub fn labeling(&self) -> &[usize] {
        &self.pi
    }

    pub fn hub_threshold(&self) -> usize {
        self.hub_threshold
    }

    #[inline]
    pub fn is_claimed(&self, x: usize, y: usize) -> bool {
        self.claimed.contains(&edge_key(x, y))
    }

    /// Whether the H-edge `uw` is present under the current labeling.
    #[inline]
    pub fn h_edge_present(&self, u: usize, w: usize) -> bool {
        self.is_claimed(self.pi[u], self.pi[w])
    }

    pub fn claimed_count(&self) -> usize {
        self.claimed.len()
    }

    /// Adds `{x, y}` to Builder's graph. Returns whether the edge was new.
    pub fn claim_edge(&mut self, x: usize, y: usize) -> Result<bool, StateError> {
        let n = self.n();
        if x == y {
            return Err(StateError::SelfLoop(x));
        }
        if x >= n || y >= n {
            return Err(StateError::VertexOutOfRange { vertex: x.max(y), n });
        }
        if !self.claimed.insert(edge_key(x, y)) {
            return Ok(false);
        }
        let (u, w) = (self.inv[x], self.inv[y]);
        if let Some(id) = self.target.edge_id(u, w) {
            self.set_edge_failed(id, false);
        }
        Ok(true)
    }

    /// Exchanges π(v) and π(v′) and refreshes every index touched by the edges at
    /// `v` and `v′`.
    pub fn swap_labels(&mut self, v: usize, v2: usize) {
        if v == v2 {
            return;
        }
        let (a, b) = (self.pi[v], self.pi[v2]);
        self.pi.swap(v, v2);
        self.inv[a] = v2;
        self.inv[b] = v;
        let target = Arc::clone(&self.target);
        for &c in &[v, v2] {
            for (&w, &id) in target.neighbors(c).iter().zip(target.incident_edges(c)) {
                let failed = !self.is_claimed(self.pi[c], self.pi[w]);
                self.set_edge_failed(id, failed);
            }
        }
    }

    fn set_edge_failed(&mut self, id: usize, failed: bool) {
        if self.failed_edges.contains(id) == failed {
            return;
        }
        if failed {
            self.failed_edges.insert(id);
        } else {
            self.failed_edges.remove(id);
        }
        let (u, w) = self.target.edge(id);
        for x in [u, w] {
            let was = self.failed_deg[x] > 0;
            if failed {
                self.failed_deg[x] += 1;
            } else {
                self.failed_deg[x] -= 1;
            }
            let now = self.failed_deg[x] > 0;
            if was != now {
                self.set_vertex_failed(x, now);
            }
        }
    }

    fn set_vertex_failed(&mut self, x: usize, failed: bool) {
        if failed {
            self.failed_vertices.insert(x);
        } else {
            self.failed_vertices.remove(x);
        }
        let target = Arc::clone(&self.target);
        for &y in target.neighbors(x) {
            if failed {
                self.failed_nbrs[y] += 1;
            } else {
                self.failed_nbrs[y] -= 1;
            }
            if self.failed_nbrs[y] as usize >= self.hub_threshold {
                self.hubs.insert(y);
            } else {
                self.hubs.remove(y);
            }
        }
    }

    pub fn is_failed(&self, v: usize) -> bool {
        self.failed_deg[v] > 0
    }

    pub fn is_hub(&self, v: usize) -> bool {
        self.hubs.contains(v)
    }

    /// Number of failed H-edges at `v`.
    pub fn failed_degree(&self, v: usize) -> usize {
        self.failed_deg[v] as usize
    }

    pub fn failed_edge_count(&self) -> usize {
        self.failed_edges.len()
    }

    pub fn failed_vertex_count(&self) -> usize {
        self.failed_vertices.len()
    }

    pub fn hub_count(&self) -> usize {
        self.hubs.len()
    }

    /// Failed H-edge ids in internal order.
    pub fn failed_edge_ids(&self) -> &[usize] {
        self.failed_edges.as_slice()
    }

    pub fn failed_vertices(&self) -> &[usize] {
        self.failed_vertices.as_slice()
    }

    pub fn hubs(&self) -> &[usize] {
        self.hubs.as_slice()
    }

    /// Current indices, sorted.
    pub fn failed_sets(&self) -> FailureSets {
        let mut failed_edges: Vec<_> = self
            .failed_edges
            .as_slice()
            .iter()
            .map(|&id| self.target.edge(id))
            .collect();
        failed_edges.sort_unstable();
        FailureSets {
            failed_edges,
            failed_vertices: self.failed_vertices.sorted(),
            hubs: self.hubs.sorted(),
        }
    }

    /// Recomputes all indices from the target, labeling and claimed set alone.
    pub fn recompute_failed_sets(&self) -> FailureSets {
        let h = &*self.target;
        let failed_edges: Vec<_> = h
            .edges()
            .iter()
            .copied()
            .filter(|&(u, w)| !self.is_claimed(self.pi[u], self.pi[w]))
            .collect();
        let mut is_failed = vec![false; h.n()];
        for &(u, w) in &failed_edges {
            is_failed[u] = true;
            is_failed[w] = true;
        }
        let failed_vertices: Vec<_> = (0..h.n()).filter(|&v| is_failed[v]).collect();
        let hubs: Vec<_> = (0..h.n())
            .filter(|&v| {
                h.neighbors(v).iter().filter(|&&w| is_failed[w]).count() >= self.hub_threshold
            })
            .collect();
        FailureSets {
            failed_edges,
            failed_vertices,
            hubs,
        }
    }

    pub fn contains_copy(&self) -> bool {
        self.failed_edges.is_empty()
    }

    /// Edge-by-edge containment scan that ignores the incremental indices.
    pub fn contains_copy_by_scan(&self) -> bool {
        self.target
            .edges()
            .iter()
            .all(|&(u, w)| self.is_claimed(self.pi[u], self.pi[w]))
    }

    /// Sets the trajectory sampling cadence (rounds between snapshots).
    pub fn set_snapshot_cadence(&mut self, every: u64) {
        self.cadence = every.max(1);
    }

    /// Counts one offered round in `phase`, sampling the trajectory on cadence.
    #[inline]
    pub fn tick(&mut self, phase: Phase) {
        self.rounds[phase.index()] += 1;
        self.total_rounds += 1;
        if self.total_rounds % self.cadence == 0 {
            self.push_snapshot(phase);
        }
    }

    pub fn push_snapshot(&mut self, phase: Phase) {
        self.trajectory.push(Snapshot {
            round: self.total_rounds,
            failed_edges: self.failed_edges.len(),
            failed_vertices: self.failed_vertices.len(),
            hubs: self.hubs.len(),
            phase,
        });
    }

    pub fn rounds_in(&self, phase: Phase) -> u64 {
        self.rounds[phase.index()]
    }

    pub fn total_rounds(&self) -> u64 {
        self.total_rounds
    }

    pub fn trajectory(&self) -> &[Snapshot] {
        &self.trajectory
    }

    pub fn take_trajectory(&mut self) -> Vec<Snapshot> {
        std::mem::take(&mut self.trajectory)
    }

    /// True when every observable field matches `other` (used by involution tests).
    pub fn same_contents(&self, other: &Self) -> bool {
        self.pi == other.pi
            && self.inv == other.inv
            && self.claimed == other.claimed
            && self.failed_sets() == other.failed_sets()
            && self.failed_deg == other.failed_deg
            && self.failed_nbrs == other.failed_nbrs
    }
}
