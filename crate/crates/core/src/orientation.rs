//! Balanced orientations: every vertex gets outdegree at most `⌈d(v)/2⌉`.
//!
//! One auxiliary vertex is joined to all odd-degree vertices, which makes every
//! component Eulerian. Hierholzer's walk then orients each edge in the direction it
//! is first traversed; the traversal splits into closed trails, so in- and
//! outdegrees agree in the augmented graph and differ by at most one in H.

use crate::graph::TargetGraph;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Orientation {
    out: Vec<Vec<usize>>,
    inn: Vec<Vec<usize>>,
}

impl Orientation {
    /// Out-neighbours of `v`, sorted.
    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        &self.out[v]
    }

    /// In-neighbours of `v`, sorted.
    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.inn[v]
    }

    pub fn outdegree(&self, v: usize) -> usize {
        self.out[v].len()
    }

    /// Checks the balance bound and that each H-edge is oriented exactly once.
    pub fn verify(&self, h: &TargetGraph) -> Result<(), String> {
        if self.out.len() != h.n() {
            return Err("vertex count mismatch".into());
        }
        let mut seen = 0usize;
        for v in 0..h.n() {
            if self.out[v].len() > h.degree(v).div_ceil(2) {
                return Err(format!(
                    "vertex {v}: outdegree {} exceeds ceil({}/2)",
                    self.out[v].len(),
                    h.degree(v)
                ));
            }
            for &w in &self.out[v] {
                if !h.has_edge(v, w) {
                    return Err(format!("arc {v}->{w} is not an edge of H"));
                }
                if self.out[w].binary_search(&v).is_ok() {
                    return Err(format!("edge {v}{w} oriented both ways"));
                }
                if self.inn[w].binary_search(&v).is_err() {
                    return Err(format!("arc {v}->{w} missing from in-lists"));
                }
                seen += 1;
            }
        }
        if seen != h.edge_count() {
            return Err(format!("{seen} arcs for {} edges", h.edge_count()));
        }
        Ok(())
    }
}

/// Deterministic balanced orientation of `h`.
pub fn balanced_orientation(h: &TargetGraph) -> Orientation {
    let n = h.n();
    let m = h.edge_count();
    let aux = n;
    // augmented adjacency: (neighbour, edge id); ids >= m are auxiliary edges
    let mut adj: Vec<Vec<(usize, usize)>> = (0..n)
        .map(|v| {
            h.neighbors(v)
                .iter()
                .copied()
                .zip(h.incident_edges(v).iter().copied())
                .collect()
        })
        .collect();
    adj.push(Vec::new());
    let mut next_id = m;
    for v in 0..n {
        if h.degree(v) % 2 == 1 {
            adj[v].push((aux, next_id));
            adj[aux].push((v, next_id));
            next_id += 1;
        }
    }

    let mut used = vec![false; next_id];
    let mut ptr = vec![0usize; n + 1];
    let mut out = vec![Vec::new(); n];
    let mut inn = vec![Vec::new(); n];
    let mut stack = Vec::new();
    for start in 0..=n {
        stack.clear();
        stack.push(start);
        while let Some(&x) = stack.last() {
            while ptr[x] < adj[x].len() && used[adj[x][ptr[x]].1] {
                ptr[x] += 1;
            }
            if let Some(&(y, id)) = adj[x].get(ptr[x]) {
                used[id] = true;
                if id < m {
                    out[x].push(y);
                    inn[y].push(x);
                }
                stack.push(y);
            } else {
                stack.pop();
            }
        }
    }
    for list in out.iter_mut().chain(inn.iter_mut()) {
        list.sort_unstable();
    }
    Orientation { out, inn }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_target, TargetSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn small_cases() {
        let c4 = TargetGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let o = balanced_orientation(&c4);
        assert!((0..4).all(|v| o.outdegree(v) == 1));
        let k3 = TargetGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let o = balanced_orientation(&k3);
        assert_eq!((0..3).map(|v| o.outdegree(v)).collect::<Vec<_>>(), vec![1, 1, 1]);
        let star = TargetGraph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let o = balanced_orientation(&star);
        o.verify(&star).unwrap();
        assert!(o.outdegree(0) <= 2);
    }

    #[test]
    fn random_graphs_are_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (n, d) in [(50, 3), (101, 4), (200, 7), (64, 0)] {
            let h = generate_target(&TargetSpec::Regular { delta: d }, n, &mut rng).unwrap();
            let o = balanced_orientation(&h);
            o.verify(&h).unwrap();
            assert_eq!(o, balanced_orientation(&h));
        }
        let g = generate_target(&TargetSpec::Grid, 30, &mut rng).unwrap();
        balanced_orientation(&g).verify(&g).unwrap();
    }
}
