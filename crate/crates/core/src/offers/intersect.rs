//! Exact sampling of `T ∩ S` for a uniform spanning tree `T` of `K_n` and a fixed
//! edge set `S`, without building `T`.
//!
//! The edges of a uniform spanning tree form a determinantal process whose kernel
//! is the transfer-current matrix. On `K_n` this kernel restricted to `S` is
//! `K = B Bᵀ / n`, with `B` the signed incidence matrix of `S`: diagonal entries
//! `2/n`, `±1/n` for edges sharing a vertex, zero otherwise.
//!
//! Sampling goes in two stages. Diagonal dominance gives `K ⪯ D` for
//! `D = diag((d(a)+d(b))/n)`, with `d` the degree in `S`. So first each edge is
//! proposed independently with probability `D_e`. The accepted set is then a
//! determinantal sample with kernel `D^{-1/2} K D^{-1/2}` restricted to the
//! proposals. That kernel is block diagonal over connected components of the
//! proposal graph, so each component is resolved independently by sequential
//! conditioning. Expected work per call is `O(Σ d(v)²/n)`.

use rand::Rng;
use rustc_hash::FxHashMap;

use crate::graph::normalize;
use crate::state::BuilderState;

/// Read access to an edge set on `[n]`, indexed `0..len`.
pub trait EdgeSource {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Endpoints of edge `i` as labels in `[n]`.
    fn edge(&self, i: usize) -> (usize, usize);
    /// Number of set edges at `x`.
    fn degree(&self, x: usize) -> usize;
    /// Any upper bound on [`degree`](Self::degree).
    fn degree_bound(&self) -> usize;
}

/// An immutable edge set with precomputed degrees.
#[derive(Clone, Debug, Default)]
pub struct FrozenEdges {
    edges: Vec<(usize, usize)>,
    deg: FxHashMap<usize, u32>,
    max_deg: usize,
}

impl FrozenEdges {
    /// Builds the set; duplicate edges are merged, input order otherwise kept.
    pub fn new(edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut seen = rustc_hash::FxHashSet::default();
        let mut list = Vec::new();
        let mut deg: FxHashMap<usize, u32> = FxHashMap::default();
        for (a, b) in edges {
            let e = normalize(a, b);
            if seen.insert(e) {
                list.push(e);
                *deg.entry(e.0).or_default() += 1;
                *deg.entry(e.1).or_default() += 1;
            }
        }
        let max_deg = deg.values().copied().max().unwrap_or(0) as usize;
        Self {
            edges: list,
            deg,
            max_deg,
        }
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

impl EdgeSource for FrozenEdges {
    fn len(&self) -> usize {
        self.edges.len()
    }
    fn edge(&self, i: usize) -> (usize, usize) {
        self.edges[i]
    }
    fn degree(&self, x: usize) -> usize {
        self.deg.get(&x).copied().unwrap_or(0) as usize
    }
    fn degree_bound(&self) -> usize {
        self.max_deg
    }
}

/// The current failed edges of a Builder state, mapped into `[n]` by the labeling.
pub struct FailedEdgesView<'a>(pub &'a BuilderState);

impl EdgeSource for FailedEdgesView<'_> {
    fn len(&self) -> usize {
        self.0.failed_edge_count()
    }
    fn edge(&self, i: usize) -> (usize, usize) {
        let (u, w) = self.0.target().edge(self.0.failed_edge_ids()[i]);
        normalize(self.0.label(u), self.0.label(w))
    }
    fn degree(&self, x: usize) -> usize {
        self.0.failed_degree(self.0.vertex_at(x))
    }
    fn degree_bound(&self) -> usize {
        self.0.target().max_degree()
    }
}

#[derive(Clone, Copy, Debug)]
struct Proposal {
    index: usize,
    a: usize,
    b: usize,
    p: f64,
}

/// Reusable buffers for [`sample_tree_intersection`].
#[derive(Clone, Debug, Default)]
pub struct IntersectScratch {
    props: Vec<Proposal>,
    first_at: FxHashMap<usize, usize>,
    parent: Vec<usize>,
    order: Vec<usize>,
    kernel: Vec<f64>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Writes into `out` the indices `i` of `set` whose edge lies in a uniform spanning
/// tree of `K_n`, drawn exactly from the law of `T ∩ S`. Indices are unordered.
pub fn sample_tree_intersection<R, S>(
    rng: &mut R,
    n: usize,
    set: &S,
    scratch: &mut IntersectScratch,
    out: &mut Vec<usize>,
) where
    R: Rng + ?Sized,
    S: EdgeSource + ?Sized,
{
    out.clear();
    let m = set.len();
    if m == 0 || n < 2 {
        return;
    }
    let nf = n as f64;
    let bound = set.degree_bound();
    // when degrees are large relative to n, fall back to D = I (K ⪯ I always holds)
    let identity = 2 * bound >= n;
    let p_max = if identity { 1.0 } else { 2.0 * bound as f64 / nf };

    let props = &mut scratch.props;
    props.clear();
    let push = |i: usize, rng: &mut R, props: &mut Vec<Proposal>| {
        let (a, b) = set.edge(i);
        let p = if identity {
            1.0
        } else {
            (set.degree(a) + set.degree(b)) as f64 / nf
        };
        if p >= p_max || rng.gen::<f64>() * p_max < p {
            props.push(Proposal { index: i, a, b, p });
        }
    };
    if p_max >= 1.0 {
        for i in 0..m {
            push(i, rng, props);
        }
    } else {
        let ln_q = (-p_max).ln_1p();
        let skip = |rng: &mut R| -> usize {
            let u: f64 = rng.gen();
            let g = ((-u).ln_1p() / ln_q).floor();
            if g >= usize::MAX as f64 {
                usize::MAX
            } else {
                g as usize
            }
        };
        let mut i = skip(rng);
        while i < m {
            push(i, rng, props);
            i = i.saturating_add(1).saturating_add(skip(rng));
        }
    }
    if props.is_empty() {
        return;
    }

    // components of the proposal graph
    let k = props.len();
    scratch.first_at.clear();
    scratch.parent.clear();
    scratch.parent.extend(0..k);
    for j in 0..k {
        for v in [props[j].a, props[j].b] {
            match scratch.first_at.get(&v) {
                Some(&other) => {
                    let (ra, rb) = (find(&mut scratch.parent, j), find(&mut scratch.parent, other));
                    if ra != rb {
                        scratch.parent[ra] = rb;
                    }
                }
                None => {
                    scratch.first_at.insert(v, j);
                }
            }
        }
    }
    if scratch.first_at.len() == 2 * k {
        // all proposals disjoint: independent Bernoulli((2/n)/p)
        for pr in props.iter() {
            if rng.gen::<f64>() * pr.p * nf < 2.0 {
                out.push(pr.index);
            }
        }
        return;
    }
    scratch.order.clear();
    for j in 0..k {
        let r = find(&mut scratch.parent, j);
        scratch.order.push(r * k + j);
    }
    scratch.order.sort_unstable();
    let mut start = 0;
    while start < k {
        let root = scratch.order[start] / k;
        let mut end = start;
        while end < k && scratch.order[end] / k == root {
            end += 1;
        }
        let members: Vec<usize> = scratch.order[start..end].iter().map(|c| c % k).collect();
        if members.len() == 1 {
            let pr = props[members[0]];
            if rng.gen::<f64>() * pr.p * nf < 2.0 {
                out.push(pr.index);
            }
        } else {
            resolve_component(rng, nf, props, &members, &mut scratch.kernel, out);
        }
        start = end;
    }
}

/// Sequential conditioning on a small dense kernel.
fn resolve_component<R: Rng + ?Sized>(
    rng: &mut R,
    nf: f64,
    props: &[Proposal],
    members: &[usize],
    kernel: &mut Vec<f64>,
    out: &mut Vec<usize>,
) {
    let q = members.len();
    kernel.clear();
    kernel.resize(q * q, 0.0);
    let sign = |e: &Proposal, v: usize| if v == e.a.min(e.b) { 1.0 } else { -1.0 };
    for i in 0..q {
        let ei = &props[members[i]];
        kernel[i * q + i] = 2.0 / (nf * ei.p);
        for j in i + 1..q {
            let ej = &props[members[j]];
            let shared = if ei.a == ej.a || ei.a == ej.b {
                Some(ei.a)
            } else if ei.b == ej.a || ei.b == ej.b {
                Some(ei.b)
            } else {
                None
            };
            if let Some(v) = shared {
                let val = sign(ei, v) * sign(ej, v) / (nf * (ei.p * ej.p).sqrt());
                kernel[i * q + j] = val;
                kernel[j * q + i] = val;
            }
        }
    }
    for i in 0..q {
        let pii = kernel[i * q + i].clamp(0.0, 1.0);
        let take = rng.gen::<f64>() < pii;
        if take {
            out.push(props[members[i]].index);
        }
        let pivot = if take { kernel[i * q + i] } else { kernel[i * q + i] - 1.0 };
        if pivot == 0.0 {
            continue;
        }
        for r in i + 1..q {
            let f = kernel[r * q + i] / pivot;
            if f == 0.0 {
                continue;
            }
            for c in i + 1..q {
                kernel[r * q + c] -= f * kernel[i * q + c];
            }
        }
    }
}
