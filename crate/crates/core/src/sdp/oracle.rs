use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{centered_trace, edge_dot, SdpInstance, SdpIterate};
use crate::error::{Error, Result};

/// The inner products the oracle reads from a candidate `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerProducts {
    /// `L_e • Z` per candidate edge.
    pub edge: Vec<f64>,
    /// `L_G • Z`.
    pub base: f64,
    /// `Z • ΔP_⊥`.
    pub t: f64,
}

impl InnerProducts {
    pub fn exact(z: &DMatrix<f64>, inst: &SdpInstance) -> Self {
        let edge = inst
            .candidates()
            .edges()
            .iter()
            .map(|&(u, v)| edge_dot(z, u, v))
            .collect();
        let base = inst
            .base()
            .edges()
            .iter()
            .map(|e| e.w * edge_dot(z, e.u, e.v))
            .sum();
        InnerProducts {
            edge,
            base,
            t: inst.delta() * centered_trace(z),
        }
    }
}

/// A point claimed feasible for the dual program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub z: DMatrix<f64>,
    pub v: f64,
    pub beta: DVector<f64>,
}

/// Which update branch produced the weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateCase {
    /// `w_e = γ` on every candidate.
    Uniform,
    /// `w` is the indicator of the violated candidates.
    Violated,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleOutcome {
    Fail { certificate: DualCertificate },
    Update { lambda: f64, w: DVector<f64>, case: UpdateCase },
}

impl OracleOutcome {
    pub fn is_fail(&self) -> bool {
        matches!(self, OracleOutcome::Fail { .. })
    }
}

pub fn oracle(it: &SdpIterate, inst: &SdpInstance) -> Result<OracleOutcome> {
    let p = InnerProducts::exact(&it.z_perp, inst);
    oracle_from_products(&p, &it.z_perp, it.v, &it.beta, inst)
}

/// The separation step on precomputed (possibly sketched) inner products.
pub fn oracle_from_products(
    p: &InnerProducts,
    z: &DMatrix<f64>,
    v: f64,
    beta: &DVector<f64>,
    inst: &SdpInstance,
) -> Result<OracleOutcome> {
    let m = inst.m();
    if p.edge.len() != m || beta.len() != m {
        return Err(Error::Input("iterate does not match the candidate count".into()));
    }
    if !(p.t >= 0.0) {
        return Err(Error::Numerical(format!("Z • ΔP_⊥ = {} is not a trace", p.t)));
    }
    let gamma = inst.gamma();
    let k = inst.k() as f64;
    let violated: Vec<bool> = (0..m).map(|e| v + beta[e] < p.edge[e]).collect();
    let gap: f64 = (0..m)
        .filter(|&e| violated[e])
        .map(|e| p.edge[e] - v - beta[e])
        .sum();
    let t_tol = p.base + k * v + beta.sum();

    if gap <= p.t * gamma - t_tol {
        if p.t == 0.0 {
            return Err(Error::Degenerate("Z • ΔP_⊥ = 0 leaves nothing to rescale".into()));
        }
        let t = p.t;
        let beta_c = DVector::from_fn(m, |e, _| {
            if violated[e] {
                (p.edge[e] - v) / t
            } else {
                beta[e] / t
            }
        });
        return Ok(OracleOutcome::Fail {
            certificate: DualCertificate {
                z: z / t,
                v: v / t,
                beta: beta_c,
            },
        });
    }
    let edge_sum: f64 = p.edge.iter().sum();
    if t_tol > gamma * m as f64 - gamma * edge_sum {
        Ok(OracleOutcome::Update {
            lambda: gamma,
            w: DVector::from_element(m, gamma),
            case: UpdateCase::Uniform,
        })
    } else {
        Ok(OracleOutcome::Update {
            lambda: gamma,
            w: DVector::from_fn(m, |e, _| if violated[e] { 1.0 } else { 0.0 }),
            case: UpdateCase::Violated,
        })
    }
}
