//! Target graphs: adjacency storage, family generators and edge-list I/O.

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::GraphError;

/// Packs an unordered vertex pair into a single key (smaller id in the high half).
#[inline]
pub fn edge_key(x: usize, y: usize) -> u64 {
    let (a, b) = if x < y { (x, y) } else { (y, x) };
    ((a as u64) << 32) | b as u64
}

/// Returns `(min, max)` of a pair.
#[inline]
pub fn normalize(x: usize, y: usize) -> (usize, usize) {
    if x < y {
        (x, y)
    } else {
        (y, x)
    }
}

/// Immutable simple graph on `0..n` with sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetGraph {
    n: usize,
    adj: Vec<Vec<usize>>,
    // edge id of adj[v][i], parallel to `adj`
    adj_edge: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    max_degree: usize,
}

impl TargetGraph {
    /// Builds a graph from an edge list. Duplicate edges are merged; self-loops and
    /// out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut list = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if u >= n || v >= n {
                return Err(GraphError::VertexOutOfRange { vertex: u.max(v), n });
            }
            list.push(normalize(u, v));
        }
        list.sort_unstable();
        list.dedup();

        let mut adj = vec![Vec::new(); n];
        for (id, &(u, v)) in list.iter().enumerate() {
            adj[u].push((v, id));
            adj[v].push((u, id));
        }
        let mut a = Vec::with_capacity(n);
        let mut ae = Vec::with_capacity(n);
        for mut nb in adj.drain(..) {
            nb.sort_unstable();
            a.push(nb.iter().map(|p| p.0).collect::<Vec<_>>());
            ae.push(nb.iter().map(|p| p.1).collect::<Vec<_>>());
        }
        let max_degree = a.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Self {
            n,
            adj: a,
            adj_edge: ae,
            edges: list,
            max_degree,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// All edges as `(u, v)` with `u < v`, sorted; the position is the edge id.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> (usize, usize) {
        self.edges[id]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    /// Edge ids incident to `v`, parallel to [`neighbors`](Self::neighbors).
    pub fn incident_edges(&self, v: usize) -> &[usize] {
        &self.adj_edge[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_id(u, v).is_some()
    }

    pub fn edge_id(&self, u: usize, v: usize) -> Option<usize> {
        if u >= self.n || v >= self.n {
            return None;
        }
        let (a, b) = if self.adj[u].len() <= self.adj[v].len() {
            (u, v)
        } else {
            (v, u)
        };
        self.adj[a]
            .binary_search(&b)
            .ok()
            .map(|i| self.adj_edge[a][i])
    }

    /// Renders the edge-list text format (one `u v` pair per line).
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# n={} m={} max_degree={}", self.n, self.edges.len(), self.max_degree);
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    /// Unweighted distances from `source`, `None` for unreachable vertices.
    pub fn distances_from(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        let mut queue = std::collections::VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(x) = queue.pop_front() {
            let d = dist[x].unwrap_or(0);
            for &y in &self.adj[x] {
                if dist[y].is_none() {
                    dist[y] = Some(d + 1);
                    queue.push_back(y);
                }
            }
        }
        dist
    }
}

/// Parses the edge-list format. With `n = None` the vertex count is one past the
/// largest id seen; otherwise ids must be below `n` and missing vertices are isolated.
pub fn parse_edge_list(text: &str, n: Option<usize>) -> Result<TargetGraph, GraphError> {
    let mut edges = Vec::new();
    let mut max_id = None::<usize>;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<usize, GraphError> {
            tok.ok_or_else(|| GraphError::Parse {
                line: lineno + 1,
                message: "expected two vertex ids".into(),
            })?
            .parse::<usize>()
            .map_err(|e| GraphError::Parse {
                line: lineno + 1,
                message: e.to_string(),
            })
        };
        let u = parse(it.next())?;
        let v = parse(it.next())?;
        if it.next().is_some() {
            return Err(GraphError::Parse {
                line: lineno + 1,
                message: "trailing tokens".into(),
            });
        }
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v));
    }
    let needed = max_id.map_or(0, |m| m + 1);
    let n = match n {
        Some(n) if n < needed => {
            return Err(GraphError::VertexOutOfRange {
                vertex: needed - 1,
                n,
            })
        }
        Some(n) => n,
        None => needed,
    };
    TargetGraph::from_edges(n, &edges)
}

/// Reusable bounded-radius BFS with epoch stamping, so repeated ball queries do not
/// clear an `n`-sized buffer.
#[derive(Clone, Debug)]
pub struct BallScratch {
    stamp: Vec<u32>,
    epoch: u32,
    frontier: Vec<usize>,
    next: Vec<usize>,
    ball: Vec<usize>,
}

impl BallScratch {
    pub fn new(n: usize) -> Self {
        Self {
            stamp: vec![0; n],
            epoch: 0,
            frontier: Vec::new(),
            next: Vec::new(),
            ball: Vec::new(),
        }
    }

    /// Vertices within distance `radius` of `center`, `center` first.
    pub fn ball(&mut self, h: &TargetGraph, center: usize, radius: usize) -> &[usize] {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let e = self.epoch;
        self.ball.clear();
        self.frontier.clear();
        self.stamp[center] = e;
        self.ball.push(center);
        self.frontier.push(center);
        for _ in 0..radius {
            self.next.clear();
            for &x in &self.frontier {
                for &y in h.neighbors(x) {
                    if self.stamp[y] != e {
                        self.stamp[y] = e;
                        self.ball.push(y);
                        self.next.push(y);
                    }
                }
            }
            std::mem::swap(&mut self.frontier, &mut self.next);
            if self.frontier.is_empty() {
                break;
            }
        }
        &self.ball
    }
}

/// Graph families the simulator can instantiate as H.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum TargetSpec {
    /// Random simple `delta`-regular graph.
    Regular { delta: usize },
    /// Disjoint copies of `K_{delta+1}`.
    CliqueFactor { delta: usize },
    Cycle,
    /// Perfect matching (one isolated vertex when `n` is odd).
    Matching,
    /// Square-ish grid, rows of width `ceil(sqrt(n))`.
    Grid,
    File { path: PathBuf },
}

impl TargetSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TargetSpec::Regular { .. } => "regular",
            TargetSpec::CliqueFactor { .. } => "clique-factor",
            TargetSpec::Cycle => "cycle",
            TargetSpec::Matching => "matching",
            TargetSpec::Grid => "grid",
            TargetSpec::File { .. } => "file",
        }
    }
}

/// Instantiates a target graph on `n` vertices.
pub fn generate_target<R: Rng + ?Sized>(
    spec: &TargetSpec,
    n: usize,
    rng: &mut R,
) -> Result<TargetGraph, GraphError> {
    if n == 0 {
        return Err(GraphError::Infeasible("n must be at least 1".into()));
    }
    match spec {
        TargetSpec::Regular { delta } => random_regular(n, *delta, rng),
        TargetSpec::CliqueFactor { delta } => {
            let k = delta + 1;
            if n % k != 0 {
                return Err(GraphError::Infeasible(format!(
                    "clique factor needs n divisible by delta+1 = {k}, got n = {n}"
                )));
            }
            let mut edges = Vec::with_capacity(n * delta / 2);
            for base in (0..n).step_by(k) {
                for i in 0..k {
                    for j in i + 1..k {
                        edges.push((base + i, base + j));
                    }
                }
            }
            TargetGraph::from_edges(n, &edges)
        }
        TargetSpec::Cycle => {
            if n < 3 {
                return Err(GraphError::Infeasible(format!("cycle needs n >= 3, got {n}")));
            }
            let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            TargetGraph::from_edges(n, &edges)
        }
        TargetSpec::Matching => {
            let edges: Vec<_> = (0..n / 2).map(|i| (2 * i, 2 * i + 1)).collect();
            TargetGraph::from_edges(n, &edges)
        }
        TargetSpec::Grid => {
            let w = (n as f64).sqrt().ceil() as usize;
            let mut edges = Vec::new();
            for i in 0..n {
                if (i + 1) % w != 0 && i + 1 < n {
                    edges.push((i, i + 1));
                }
                if i + w < n {
                    edges.push((i, i + w));
                }
            }
            TargetGraph::from_edges(n, &edges)
        }
        TargetSpec::File { path } => {
            let text = std::fs::read_to_string(path).map_err(|e| GraphError::Io {
                path: path.clone(),
                message: e.to_string(),
            })?;
            parse_edge_list(&text, Some(n))
        }
    }
}

/// Random simple regular graph by sequential pairing of configuration points,
/// rejecting loops and multi-edges and restarting when the pairing gets stuck.
fn random_regular<R: Rng + ?Sized>(
    n: usize,
    delta: usize,
    rng: &mut R,
) -> Result<TargetGraph, GraphError> {
    if delta >= n.max(1) && delta > 0 {
        return Err(GraphError::Infeasible(format!(
            "regular graph needs delta < n, got delta = {delta}, n = {n}"
        )));
    }
    if (n * delta) % 2 != 0 {
        return Err(GraphError::Infeasible(format!(
            "regular graph needs delta*n even, got delta = {delta}, n = {n}"
        )));
    }
    if delta == 0 {
        return TargetGraph::from_edges(n, &[]);
    }
    const MAX_RESTARTS: usize = 1000;
    for _ in 0..MAX_RESTARTS {
        if let Some(edges) = try_pairing(n, delta, rng) {
            return TargetGraph::from_edges(n, &edges);
        }
    }
    Err(GraphError::Infeasible(format!(
        "pairing failed {MAX_RESTARTS} times for delta = {delta}, n = {n}"
    )))
}

fn try_pairing<R: Rng + ?Sized>(n: usize, delta: usize, rng: &mut R) -> Option<Vec<(usize, usize)>> {
    let mut points: Vec<u32> = (0..n as u32)
        .flat_map(|v| std::iter::repeat(v).take(delta))
        .collect();
    let mut nbrs: Vec<Vec<u32>> = vec![Vec::with_capacity(delta); n];
    let mut edges = Vec::with_capacity(n * delta / 2);
    while !points.is_empty() {
        let len = points.len();
        let mut found = None;
        for _ in 0..64 {
            let i = rng.gen_range(0..len);
            let j = rng.gen_range(0..len);
            let (u, v) = (points[i], points[j]);
            if i != j && u != v && !nbrs[u as usize].contains(&v) {
                found = Some((i, j));
                break;
            }
        }
        if found.is_none() && len <= 4 * delta * delta + 16 {
            // exhaustive scan near the end of the pairing
            'outer: for i in 0..len {
                for j in i + 1..len {
                    let (u, v) = (points[i], points[j]);
                    if u != v && !nbrs[u as usize].contains(&v) {
                        found = Some((i, j));
                        break 'outer;
                    }
                }
            }
        }
        let (i, j) = found?;
        let (u, v) = (points[i], points[j]);
        nbrs[u as usize].push(v);
        nbrs[v as usize].push(u);
        edges.push((u as usize, v as usize));
        let (hi, lo) = if i > j { (i, j) } else { (j, i) };
        points.swap_remove(hi);
        points.swap_remove(lo);
    }
    Some(edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cycle_and_matching() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c5 = generate_target(&TargetSpec::Cycle, 5, &mut rng).unwrap();
        assert_eq!(c5.edge_count(), 5);
        assert_eq!(c5.max_degree(), 2);
        assert!((0..5).all(|v| c5.degree(v) == 2));
        let m = generate_target(&TargetSpec::Matching, 4, &mut rng).unwrap();
        assert_eq!(m.edges(), &[(0, 1), (2, 3)]);
        assert_eq!(m.max_degree(), 1);
    }

    #[test]
    fn regular_graph_is_simple_and_regular() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = generate_target(&TargetSpec::Regular { delta: 3 }, 20, &mut rng).unwrap();
        assert!((0..20).all(|v| h.degree(v) == 3));
        for v in 0..20 {
            assert!(!h.neighbors(v).contains(&v));
            for &w in h.neighbors(v) {
                assert!(h.neighbors(w).contains(&v));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let again = generate_target(&TargetSpec::Regular { delta: 3 }, 20, &mut rng).unwrap();
        assert_eq!(h, again);
    }

    #[test]
    fn regular_rejects_odd_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(generate_target(&TargetSpec::Regular { delta: 3 }, 7, &mut rng).is_err());
        assert!(generate_target(&TargetSpec::CliqueFactor { delta: 3 }, 10, &mut rng).is_err());
    }

    #[test]
    fn clique_factor_and_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let k = generate_target(&TargetSpec::CliqueFactor { delta: 3 }, 8, &mut rng).unwrap();
        assert_eq!(k.edge_count(), 12);
        assert!(k.has_edge(4, 7) && !k.has_edge(3, 4));
        let g = generate_target(&TargetSpec::Grid, 9, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 12);
        assert_eq!(g.max_degree(), 4);
    }

    #[test]
    fn edge_list_round_trip() {
        let text = "# comment\n0 1\n\n1 2\n2 0\n1 0\n";
        let g = parse_edge_list(text, Some(5)).unwrap();
        assert_eq!(g.n(), 5);
        assert_eq!(g.edge_count(), 3);
        let back = parse_edge_list(&g.to_edge_list(), Some(5)).unwrap();
        assert_eq!(g, back);
        assert!(parse_edge_list("0 0\n", None).is_err());
        assert!(parse_edge_list("0 x\n", None).is_err());
        assert!(parse_edge_list("0 9\n", Some(4)).is_err());
    }

    #[test]
    fn balls_have_expected_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = generate_target(&TargetSpec::Cycle, 10, &mut rng).unwrap();
        let mut scratch = BallScratch::new(10);
        let mut b: Vec<_> = scratch.ball(&c, 0, 2).to_vec();
        b.sort_unstable();
        assert_eq!(b, vec![0, 1, 2, 8, 9]);
        assert_eq!(scratch.ball(&c, 3, 0), &[3]);
    }
}
