//! The augmentation SDP pair, its block embedding, the width-3 oracle and the
//! multiplicative-weights feasibility solver.

mod blocks;
mod mwu;
mod oracle;
mod sketch;
mod solver;
mod verify;

pub use blocks::{assemble_blocks, loss_matrix, BlockMatrices, LossMatrix};
pub use mwu::{mwu_update, SdpIterate};
pub use oracle::{oracle, oracle_from_products, DualCertificate, InnerProducts, OracleOutcome, UpdateCase};
pub use sketch::{laplacian_dot_sketched, sketch_embedding, sketched_products};
pub use solver::{round_bound, solve_psdp, SolveOptions, SolveResult, SolveStatus};
pub use verify::{verify_dual_feasible, verify_primal_feasible, Verdict};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{CandidateSet, WeightedGraph};

/// One feasibility question: can `k` units of candidate weight lift `λ₂` to `γΔ`?
#[derive(Debug, Clone)]
pub struct SdpInstance {
    base: WeightedGraph,
    candidates: CandidateSet,
    k: usize,
    gamma: f64,
    lg: DMatrix<f64>,
}

impl SdpInstance {
    pub fn new(base: WeightedGraph, candidates: CandidateSet, k: usize, gamma: f64) -> Result<Self> {
        if base.n() < 2 {
            return Err(Error::Input("the SDP needs at least two vertices".into()));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::Input(format!("γ must lie in (0, 1], got {gamma}")));
        }
        let lg = base.laplacian();
        Ok(SdpInstance {
            base,
            candidates,
            k,
            gamma,
            lg,
        })
    }

    /// The same instance at a different target level.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::Input(format!("γ must lie in (0, 1], got {gamma}")));
        }
        let mut out = self.clone();
        out.gamma = gamma;
        Ok(out)
    }

    pub fn base(&self) -> &WeightedGraph {
        &self.base
    }

    pub fn candidates(&self) -> &CandidateSet {
        &self.candidates
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta(&self) -> f64 {
        self.candidates.delta()
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn m(&self) -> usize {
        self.candidates.m()
    }

    pub fn base_laplacian(&self) -> &DMatrix<f64> {
        &self.lg
    }
}

/// `L_e • Z` for the edge `(u, v)`.
pub(crate) fn edge_dot(z: &DMatrix<f64>, u: usize, v: usize) -> f64 {
    z[(u, u)] + z[(v, v)] - z[(u, v)] - z[(v, u)]
}

/// `P_⊥ • Z`.
pub(crate) fn centered_trace(z: &DMatrix<f64>) -> f64 {
    let n = z.nrows();
    z.trace() - z.sum() / n as f64
}
