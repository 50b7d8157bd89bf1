use nalgebra::DMatrix;

use super::{InnerProducts, SdpInstance};
use crate::dense::{complement_basis, jl_sketch, power_psd};
use crate::error::Result;
use crate::graph::WeightedGraph;

/// Rows of `Z^{1/2} S` for a Rademacher `S` with `dim` columns. The sketch of
/// `Z` is `(Z^{1/2} S)(Z^{1/2} S)^T`.
pub fn sketch_embedding(z: &DMatrix<f64>, dim: usize, seed: u64) -> Result<DMatrix<f64>> {
    let half = power_psd(z, 0.5)?;
    jl_sketch(&half, dim, seed)
}

fn row_dist2(emb: &DMatrix<f64>, u: usize, v: usize) -> f64 {
    let mut s = 0.0;
    for c in 0..emb.ncols() {
        let d = emb[(u, c)] - emb[(v, c)];
        s += d * d;
    }
    s
}

/// `L_H • Z̃` from a sketched embedding.
pub fn laplacian_dot_sketched(emb: &DMatrix<f64>, h: &WeightedGraph) -> f64 {
    h.edges().iter().map(|e| e.w * row_dist2(emb, e.u, e.v)).sum()
}

/// Oracle inner products read from a sketch of `Z`.
pub fn sketched_products(z: &DMatrix<f64>, inst: &SdpInstance, dim: usize, seed: u64) -> Result<InnerProducts> {
    let emb = sketch_embedding(z, dim, seed)?;
    let edge = inst
        .candidates()
        .edges()
        .iter()
        .map(|&(u, v)| row_dist2(&emb, u, v))
        .collect();
    let base = laplacian_dot_sketched(&emb, inst.base());
    let q = complement_basis(inst.n());
    let centered = q.transpose() * &emb;
    Ok(InnerProducts {
        edge,
        base,
        t: inst.delta() * centered.norm_squared(),
    })
}
