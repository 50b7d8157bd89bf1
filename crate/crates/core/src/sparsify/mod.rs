//! Randomized subgraph sparsification with a two-subspace barrier potential.
//!
//! All matrices live on the complement of the all-ones vector, expressed in
//! the orthonormal basis returned by [`complement_basis`]; the working
//! dimension is `d = n - 1`.

mod approx;
mod backend;
mod projection;
mod run;
mod state;

pub use approx::{
    approx_extreme_eigs, approx_lower_resistances, approx_lower_resistances_with, approx_upper_resistances,
    assumption_eta, check_assumption, chebyshev_degree, trace_power_max, ExtremeEigs,
};
pub use backend::{ApproxBackend, ExactBackend, ResistanceBackend, SampleContext};
pub use projection::{compute_projection, ApproxProjection, ExactProjection, ProjectionData, ProjectionMode, ProjectionStrategy};
pub use run::{
    certify, run_sparsifier, run_with_retries, support_cap, Certification, IterationRecord, RetryOutcome,
    Sampler, SparsifierResult, SparsifyParams,
};
pub use state::{
    lower_block, lower_potential, relative_resistances, sample_count, upper_potential, Resistances, SampleCount,
    SparsifyState,
};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dense::{complement_basis, eig_sym, symmetrize};
use crate::error::{Error, Result};
use crate::graph::{add_edge_laplacian, WeightedGraph};

/// Where a sampleable vector came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VectorSource {
    /// The `index`-th weighted candidate edge.
    Candidate { index: usize, u: usize, v: usize, w: f64 },
    /// A regularizing self-loop along one working-space axis.
    Regularizer { axis: usize },
}

/// The matrices and vectors the sparsifier operates on.
#[derive(Debug, Clone)]
pub struct SparsifyInstance {
    n: usize,
    basis: DMatrix<f64>,
    x: DMatrix<f64>,
    mbar: DMatrix<f64>,
    vectors: DMatrix<f64>,
    sources: Vec<VectorSource>,
    costs: DVector<f64>,
    candidate_count: usize,
    k: usize,
    t: usize,
    reg: f64,
}

/// `10^-8` times the mean base edge weight, falling back to the candidates.
pub fn default_regularization(g: &WeightedGraph, candidates: &[(usize, usize, f64)]) -> f64 {
    let mean = |ws: Vec<f64>| {
        if ws.is_empty() {
            None
        } else {
            Some(ws.iter().sum::<f64>() / ws.len() as f64)
        }
    };
    let base = mean(g.edges().iter().map(|e| e.w).collect());
    let cand = mean(candidates.iter().map(|c| c.2).collect());
    1e-8 * base.or(cand).unwrap_or(1.0)
}

/// Builds `X`, `M̄` and the vectors `v_i` for base `g` and weighted candidates.
///
/// The regularizer adds `reg · I` on the working space. Each axis of that term
/// becomes one extra sampleable vector of zero cost.
pub fn setup_instance(g: &WeightedGraph, candidates: &[(usize, usize, f64)], reg: f64, k: usize) -> Result<SparsifyInstance> {
    let n = g.n();
    if n < 2 {
        return Err(Error::Input("sparsification needs at least two vertices".into()));
    }
    if !(reg > 0.0 && reg.is_finite()) {
        return Err(Error::Input(format!("regularization must be positive, got {reg}")));
    }
    if k == 0 {
        return Err(Error::Input("k must be at least 1".into()));
    }
    for &(u, v, w) in candidates {
        if u >= n || v >= n || u == v {
            return Err(Error::Input(format!("candidate ({u}, {v}) is not a valid pair on {n} vertices")));
        }
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::Input(format!("candidate ({u}, {v}) has non-positive weight {w}")));
        }
    }
    let d = n - 1;
    let q = complement_basis(n);
    let lg = q.transpose() * g.laplacian() * &q;
    let mut lw_full = DMatrix::zeros(n, n);
    for &(u, v, w) in candidates {
        add_edge_laplacian(&mut lw_full, u, v, w);
    }
    let lw = q.transpose() * lw_full * &q;
    let mut total = &lg + &lw;
    for i in 0..d {
        total[(i, i)] += reg;
    }
    let eig = eig_sym(&symmetrize(&total))?;
    if eig.min() <= 0.0 {
        return Err(Error::Numerical(format!(
            "regularized Laplacian is not positive definite (min eigenvalue {:e})",
            eig.min()
        )));
    }
    let h = eig.map(|x| x.powf(-0.5));

    let count = candidates.len() + d;
    let mut vectors = DMatrix::zeros(d, count);
    let mut sources = Vec::with_capacity(count);
    let total_weight: f64 = candidates.iter().map(|c| c.2).sum();
    let mut costs = DVector::zeros(count);
    for (i, &(u, v, w)) in candidates.iter().enumerate() {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        let bq = q.row(a).transpose() - q.row(b).transpose();
        vectors.set_column(i, &(&h * bq * w.sqrt()));
        sources.push(VectorSource::Candidate { index: i, u: a, v: b, w });
        costs[i] = w / total_weight;
    }
    let s = reg.sqrt();
    for axis in 0..d {
        vectors.set_column(candidates.len() + axis, &(h.column(axis) * s));
        sources.push(VectorSource::Regularizer { axis });
    }
    let x = symmetrize(&(&h * lg * &h));
    let mbar = symmetrize(&(&vectors * vectors.transpose()));
    let trace = mbar.trace();
    let t = ((trace - 1e-9).ceil().max(1.0) as usize).min(d);
    Ok(SparsifyInstance {
        n,
        basis: q,
        x,
        mbar,
        vectors,
        sources,
        costs,
        candidate_count: candidates.len(),
        k: k.min(d),
        t,
        reg,
    })
}

/// The spectral-sparsifier specialization: empty base, every edge of `g` a
/// candidate, so `X = 0`, `M̄ = I` and `k = T = d`.
pub fn spectral_instance(g: &WeightedGraph, reg: f64) -> Result<SparsifyInstance> {
    let empty = WeightedGraph::new(g.n(), std::iter::empty::<(usize, usize, f64)>())?;
    let cands: Vec<(usize, usize, f64)> = g.edges().iter().map(|e| (e.u, e.v, e.w)).collect();
    let d = g.n().saturating_sub(1).max(1);
    setup_instance(&empty, &cands, reg, d)
}

impl SparsifyInstance {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Working dimension `n - 1`.
    pub fn dim(&self) -> usize {
        self.x.nrows()
    }

    /// Columns span the complement of the all-ones vector.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn mbar(&self) -> &DMatrix<f64> {
        &self.mbar
    }

    /// One column per sampleable vector.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn sources(&self) -> &[VectorSource] {
        &self.sources
    }

    pub fn costs(&self) -> &DVector<f64> {
        &self.costs
    }

    pub fn candidate_count(&self) -> usize {
        self.candidate_count
    }

    pub fn vector_count(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `⌈tr M̄⌉`, capped at the working dimension.
    pub fn t(&self) -> usize {
        self.t
    }

    /// `max(k, T)`.
    pub fn lambda_cap(&self) -> usize {
        self.k.max(self.t)
    }

    pub fn reg(&self) -> f64 {
        self.reg
    }

    /// Whether the base graph contributes nothing, as in spectral mode.
    pub fn x_is_zero(&self) -> bool {
        self.x.abs().max() == 0.0
    }

    /// `(u, v, c_i w_i)` for every candidate with a positive coefficient.
    pub fn added_edges(&self, c: &DVector<f64>) -> Vec<(usize, usize, f64)> {
        self.sources
            .iter()
            .zip(c.iter())
            .filter_map(|(s, &ci)| match *s {
                VectorSource::Candidate { u, v, w, .. } if ci > 0.0 => Some((u, v, ci * w)),
                _ => None,
            })
            .collect()
    }
}
