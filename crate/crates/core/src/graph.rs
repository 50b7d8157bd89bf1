//! Weighted undirected graphs, Laplacians and incidence vectors.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected edge stored with `u < v`; `u` is the head of `b_e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// Default upper bound on edge weights for an `n`-vertex graph.
pub fn default_weight_bound(n: usize) -> f64 {
    (n.max(2) as f64).powi(8)
}

/// A weighted undirected graph without self-loops or parallel edges.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    index: HashMap<(usize, usize), usize>,
}

fn canonical(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl WeightedGraph {
    /// Builds a graph; weights must lie in `[0, default_weight_bound(n)]`.
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        Self::with_weight_bound(n, edges, default_weight_bound(n))
    }

    pub fn with_weight_bound<I>(n: usize, edges: I, bound: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        if n == 0 {
            return Err(Error::Input("vertex count must be positive".into()));
        }
        let mut g = WeightedGraph {
            n,
            edges: Vec::new(),
            index: HashMap::new(),
        };
        for (u, v, w) in edges {
            g.push(u, v, w, bound)?;
        }
        Ok(g)
    }

    /// A graph on `n` vertices with unit weights.
    pub fn unit<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Self::new(n, edges.into_iter().map(|(u, v)| (u, v, 1.0)))
    }

    fn push(&mut self, u: usize, v: usize, w: f64, bound: f64) -> Result<()> {
        if u >= self.n || v >= self.n {
            return Err(Error::Input(format!(
                "edge ({u}, {v}) has an endpoint outside 0..{}",
                self.n
            )));
        }
        if u == v {
            return Err(Error::Input(format!("self-loop at vertex {u}")));
        }
        if !w.is_finite() || w < 0.0 {
            return Err(Error::Input(format!(
                "weight must be nonnegative, got {w} on ({u}, {v})"
            )));
        }
        if w > bound {
            return Err(Error::Input(format!(
                "weight {w} on ({u}, {v}) exceeds the bound {bound}"
            )));
        }
        let key = canonical(u, v);
        if self.index.contains_key(&key) {
            return Err(Error::Input(format!("duplicate edge ({}, {})", key.0, key.1)));
        }
        self.index.insert(key, self.edges.len());
        self.edges.push(Edge {
            u: key.0,
            v: key.1,
            w,
        });
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.index.contains_key(&canonical(u, v))
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        self.index
            .get(&canonical(u, v))
            .map(|&i| self.edges[i].w)
    }

    pub fn laplacian(&self) -> DMatrix<f64> {
        laplacian(self)
    }

    /// Weighted degree of every vertex.
    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for e in &self.edges {
            d[e.u] += e.w;
            d[e.v] += e.w;
        }
        d
    }

    /// This graph plus extra weighted edges; weights on existing pairs add up.
    pub fn with_added(&self, extra: &[(usize, usize, f64)]) -> Result<WeightedGraph> {
        let mut map: Vec<Edge> = self.edges.clone();
        let mut index = self.index.clone();
        for &(u, v, w) in extra {
            if u >= self.n || v >= self.n || u == v {
                return Err(Error::Input(format!("invalid added edge ({u}, {v})")));
            }
            let key = canonical(u, v);
            match index.get(&key) {
                Some(&i) => map[i].w += w,
                None => {
                    index.insert(key, map.len());
                    map.push(Edge {
                        u: key.0,
                        v: key.1,
                        w,
                    });
                }
            }
        }
        Ok(WeightedGraph {
            n: self.n,
            edges: map,
            index,
        })
    }

    /// Number of connected components, counting only positive-weight edges.
    pub fn components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let next = p[y];
                p[y] = r;
                y = next;
            }
            r
        }
        let mut count = self.n;
        for e in self.edges.iter().filter(|e| e.w > 0.0) {
            let (a, b) = (find(&mut parent, e.u), find(&mut parent, e.v));
            if a != b {
                parent[a] = b;
                count -= 1;
            }
        }
        count
    }
}

/// `L = sum_e w_e b_e b_e^T`.
pub fn laplacian(g: &WeightedGraph) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(g.n, g.n);
    for e in &g.edges {
        add_edge_laplacian(&mut l, e.u, e.v, e.w);
    }
    l
}

/// Adds `w * b_e b_e^T` in place.
pub fn add_edge_laplacian(l: &mut DMatrix<f64>, u: usize, v: usize, w: f64) {
    l[(u, u)] += w;
    l[(v, v)] += w;
    l[(u, v)] -= w;
    l[(v, u)] -= w;
}

/// `b_e` with `+1` at `head` and `-1` at `tail`.
pub fn incidence_vector(head: usize, tail: usize, n: usize) -> Result<DVector<f64>> {
    if head >= n || tail >= n {
        return Err(Error::Input(format!(
            "edge ({head}, {tail}) has an endpoint outside 0..{n}"
        )));
    }
    if head == tail {
        return Err(Error::Input(format!("self-loop at vertex {head}")));
    }
    let mut b = DVector::zeros(n);
    b[head] = 1.0;
    b[tail] = -1.0;
    Ok(b)
}

/// `P = I - 11^T / n`.
pub fn center_projector(n: usize) -> DMatrix<f64> {
    let inv = 1.0 / n as f64;
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 - inv } else { -inv })
}

/// Maximum weighted degree; zero for an edgeless graph.
pub fn max_degree(g: &WeightedGraph) -> f64 {
    g.degrees().into_iter().fold(0.0, f64::max)
}

/// Candidate edges for augmentation together with the degree bound `Δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    edges: Vec<(usize, usize)>,
    delta: f64,
}

impl CandidateSet {
    /// Validates candidates against `base`; `delta` defaults to the largest
    /// weighted degree of the base graph united with the unit-weight candidates.
    pub fn new(base: &WeightedGraph, edges: &[(usize, usize)], delta: Option<f64>) -> Result<Self> {
        let n = base.n();
        let mut seen = HashMap::new();
        let mut canon = Vec::with_capacity(edges.len());
        let mut cand_deg = vec![0.0; n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Input(format!(
                    "candidate ({u}, {v}) has an endpoint outside 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::Input(format!("candidate self-loop at {u}")));
            }
            let key = canonical(u, v);
            if base.has_edge(key.0, key.1) {
                return Err(Error::Input(format!(
                    "candidate ({}, {}) is already a base edge",
                    key.0, key.1
                )));
            }
            if seen.insert(key, ()).is_some() {
                return Err(Error::Input(format!(
                    "duplicate candidate ({}, {})",
                    key.0, key.1
                )));
            }
            cand_deg[key.0] += 1.0;
            cand_deg[key.1] += 1.0;
            canon.push(key);
        }
        let base_deg = base.degrees();
        let max_base = base_deg.iter().cloned().fold(0.0, f64::max);
        let max_cand = cand_deg.iter().cloned().fold(0.0, f64::max);
        let union = base_deg
            .iter()
            .zip(&cand_deg)
            .map(|(a, b)| a + b)
            .fold(0.0, f64::max);
        let delta = match delta {
            Some(d) => {
                if !(d.is_finite() && d > 0.0) {
                    return Err(Error::Input(format!("Δ must be positive, got {d}")));
                }
                if d + 1e-12 < max_base.max(max_cand) {
                    return Err(Error::Input(format!(
                        "Δ = {d} is below the maximum degree {}",
                        max_base.max(max_cand)
                    )));
                }
                d
            }
            None if union > 0.0 => union,
            None => 1.0,
        };
        Ok(CandidateSet { edges: canon, delta })
    }

    /// All vertex pairs of `base` that are not edges.
    pub fn complement(base: &WeightedGraph, delta: Option<f64>) -> Result<Self> {
        let n = base.n();
        let mut pairs = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if !base.has_edge(u, v) {
                    pairs.push((u, v));
                }
            }
        }
        Self::new(base, &pairs, delta)
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Common graph families used by tests, examples and the CLI.
pub mod families {
    use super::WeightedGraph;
    use rand::Rng;

    pub fn path(n: usize) -> WeightedGraph {
        WeightedGraph::unit(n, (1..n).map(|i| (i - 1, i))).expect("valid path")
    }

    pub fn complete(n: usize) -> WeightedGraph {
        let mut e = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                e.push((u, v));
            }
        }
        WeightedGraph::unit(n, e).expect("valid complete graph")
    }

    pub fn star(leaves: usize) -> WeightedGraph {
        WeightedGraph::unit(leaves + 1, (1..=leaves).map(|i| (0, i))).expect("valid star")
    }

    /// Two cliques of size `a` and `b` joined by one edge.
    pub fn barbell(a: usize, b: usize) -> WeightedGraph {
        let mut e = Vec::new();
        for u in 0..a {
            for v in (u + 1)..a {
                e.push((u, v));
            }
        }
        for u in a..a + b {
            for v in (u + 1)..a + b {
                e.push((u, v));
            }
        }
        e.push((a - 1, a));
        WeightedGraph::unit(a + b, e).expect("valid barbell")
    }

    /// Disjoint triangles on vertices `3i, 3i+1, 3i+2`.
    pub fn triangles(count: usize) -> WeightedGraph {
        let mut e = Vec::new();
        for t in 0..count {
            let b = 3 * t;
            e.extend([(b, b + 1), (b + 1, b + 2), (b, b + 2)]);
        }
        WeightedGraph::unit(3 * count, e).expect("valid triangles")
    }

    /// Erdős–Rényi `G(n, p)` with unit weights.
    pub fn gnp<R: Rng>(n: usize, p: f64, rng: &mut R) -> WeightedGraph {
        let mut e = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.gen::<f64>() < p {
                    e.push((u, v));
                }
            }
        }
        WeightedGraph::unit(n, e).expect("valid gnp")
    }

    /// `G(n, p)` conditioned on connectivity by adding a random spanning path.
    pub fn connected_gnp<R: Rng>(n: usize, p: f64, rng: &mut R) -> WeightedGraph {
        let g = gnp(n, p, rng);
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let extra: Vec<(usize, usize, f64)> = order
            .windows(2)
            .filter(|w| !g.has_edge(w[0], w[1]))
            .map(|w| (w[0], w[1], 1.0))
            .collect();
        g.with_added(&extra).expect("valid augmentation")
    }
}
