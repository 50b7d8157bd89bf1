use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{
    mwu_update, oracle, oracle_from_products, sketched_products, DualCertificate, InnerProducts, LossMatrix,
    OracleOutcome, SdpInstance,
};
use crate::dense::jl_dimension;
use crate::error::{Error, Result};
use crate::graph::{add_edge_laplacian, center_projector};
use crate::rng;

/// Oracle width.
pub const RHO: f64 = 3.0;
/// Oracle lower width.
pub const ELL: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub delta_prime: f64,
    pub use_sketch: bool,
    /// Target distortion of the sketched inner products.
    pub sketch_eps: f64,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            delta_prime: 0.1,
            use_sketch: false,
            sketch_eps: 0.125,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SolveStatus {
    Feasible { lambda: f64, weights: DVector<f64> },
    Infeasible { certificate: DualCertificate },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    #[serde(flatten)]
    pub status: SolveStatus,
    pub gamma: f64,
    /// The level `(1 - δ')γ` at which a feasible answer is certified.
    pub level: f64,
    pub rounds: u64,
    pub round_bound: u64,
    pub delta: f64,
    pub eps: f64,
}

impl SolveResult {
    pub fn is_feasible(&self) -> bool {
        matches!(self.status, SolveStatus::Feasible { .. })
    }
}

/// `(δ, ε, T)` for the given size and target.
pub fn round_bound(n: usize, gamma: f64, delta_prime: f64) -> (f64, f64, u64) {
    let delta = delta_prime * gamma / 3.0;
    let eps = (0.5f64).min(delta / (2.0 * ELL));
    let t = (4.0 * RHO * (n as f64).ln() / (delta * eps)).ceil();
    (delta, eps, t.max(1.0) as u64)
}

struct Accumulator {
    rounds: u64,
    weights: DVector<f64>,
    lambda: f64,
}

impl Accumulator {
    /// `Σ_s M^(s)` rebuilt from the running totals.
    fn loss_sum(&self, inst: &SdpInstance, p: &DMatrix<f64>) -> LossMatrix {
        let t = self.rounds as f64;
        let mut a = inst.base_laplacian() * t;
        for (i, &(u, v)) in inst.candidates().edges().iter().enumerate() {
            add_edge_laplacian(&mut a, u, v, self.weights[i]);
        }
        a -= p * (self.lambda * inst.delta());
        LossMatrix {
            a,
            b: t * inst.k() as f64 - self.weights.sum(),
            c: self.weights.map(|w| t - w),
            value: self.lambda,
        }
    }
}

/// Multiplicative-weights search for a primal point or a dual certificate.
pub fn solve_psdp(inst: &SdpInstance, opts: &SolveOptions) -> Result<SolveResult> {
    if !(opts.delta_prime > 0.0 && opts.delta_prime < 1.0) {
        return Err(Error::Input(format!(
            "δ' must lie in (0, 1), got {}",
            opts.delta_prime
        )));
    }
    let n = inst.n();
    let m = inst.m();
    let gamma = inst.gamma();
    let (delta, eps, bound) = round_bound(n, gamma, opts.delta_prime);
    let p = center_projector(n);
    let sketch_dim = jl_dimension(n, opts.sketch_eps);
    let mut acc = Accumulator {
        rounds: 0,
        weights: DVector::zeros(m),
        lambda: 0.0,
    };

    for round in 1..=bound {
        let it = mwu_update(&acc.loss_sum(inst, &p), eps, RHO, inst.delta())?;
        let mut outcome = if opts.use_sketch {
            let prods: InnerProducts = sketched_products(&it.z_perp, inst, sketch_dim, rng::split(opts.seed, round))?;
            oracle_from_products(&prods, &it.z_perp, it.v, &it.beta, inst)?
        } else {
            oracle(&it, inst)?
        };
        if opts.use_sketch && outcome.is_fail() {
            outcome = oracle(&it, inst)?;
        }
        match outcome {
            OracleOutcome::Fail { certificate } => {
                return Ok(SolveResult {
                    status: SolveStatus::Infeasible { certificate },
                    gamma,
                    level: gamma,
                    rounds: round,
                    round_bound: bound,
                    delta,
                    eps,
                });
            }
            OracleOutcome::Update { lambda, w, .. } => {
                acc.rounds += 1;
                acc.weights += &w;
                acc.lambda += lambda;
            }
        }
    }

    let t = acc.rounds as f64;
    let lambda = acc.lambda / t - 3.0 * delta;
    let weights = acc.weights.map(|w| (w / t - delta).max(0.0));
    Ok(SolveResult {
        status: SolveStatus::Feasible { lambda, weights },
        gamma,
        level: (1.0 - opts.delta_prime) * gamma,
        rounds: acc.rounds,
        round_bound: bound,
        delta,
        eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::min_eig_on_complement;
    use crate::graph::{families, CandidateSet, WeightedGraph};
    use crate::sdp::{verify_dual_feasible, verify_primal_feasible};

    fn k5_minus_edge() -> (WeightedGraph, CandidateSet) {
        let k5 = families::complete(5);
        let g = WeightedGraph::unit(
            5,
            k5.edges().iter().filter(|e| !(e.u == 0 && e.v == 1)).map(|e| (e.u, e.v)),
        )
        .unwrap();
        let c = CandidateSet::new(&g, &[(0, 1)], None).unwrap();
        (g, c)
    }

    #[test]
    fn round_bound_formula() {
        let (d, e, t) = round_bound(10, 0.9, 0.1);
        assert!((d - 0.03).abs() < 1e-15);
        assert!((e - 0.015).abs() < 1e-15);
        assert_eq!(t, (4.0 * 3.0 * 10f64.ln() / (0.03 * 0.015)).ceil() as u64);
    }

    #[test]
    fn k5_minus_edge_is_feasible_and_uses_the_edge() {
        let (g, c) = k5_minus_edge();
        // λ₂(K5 - e) = 3 and λ₂(K5) = 5 with Δ = 4, so the level 0.9Δ needs the edge.
        let with_edge = min_eig_on_complement(&families::complete(5).laplacian()).unwrap();
        assert!((with_edge - 5.0).abs() < 1e-12);
        let gamma = 1.0;
        assert!(0.9 * gamma * c.delta() > 3.0);
        let inst = SdpInstance::new(g, c, 1, gamma).unwrap();
        let res = solve_psdp(&inst, &SolveOptions::default()).unwrap();
        match &res.status {
            SolveStatus::Feasible { lambda, weights } => {
                assert!(weights[0] > 0.0);
                let at = inst.with_gamma(res.level).unwrap();
                assert!(verify_primal_feasible(&at, *lambda, weights, 1e-6).ok);
            }
            SolveStatus::Infeasible { .. } => panic!("expected feasible"),
        }
        assert!(res.rounds <= res.round_bound);
    }

    #[test]
    fn two_triangles_without_candidates_are_infeasible() {
        let g = families::triangles(2);
        let c = CandidateSet::new(&g, &[], None).unwrap();
        let inst = SdpInstance::new(g, c, 0, 0.5).unwrap();
        let res = solve_psdp(&inst, &SolveOptions::default()).unwrap();
        assert!(res.rounds <= res.round_bound);
        match res.status {
            SolveStatus::Infeasible { certificate } => {
                assert!(verify_dual_feasible(&inst, &certificate.z, certificate.v, &certificate.beta, 1e-6).ok);
            }
            _ => panic!("expected infeasible"),
        }
    }

    #[test]
    fn sketched_solver_stays_sound() {
        let (g, c) = k5_minus_edge();
        let inst = SdpInstance::new(g, c, 1, 1.0).unwrap();
        let opts = SolveOptions {
            use_sketch: true,
            seed: 4,
            ..SolveOptions::default()
        };
        let res = solve_psdp(&inst, &opts).unwrap();
        match &res.status {
            SolveStatus::Infeasible { certificate } => {
                assert!(verify_dual_feasible(&inst, &certificate.z, certificate.v, &certificate.beta, 1e-6).ok);
            }
            SolveStatus::Feasible { lambda, weights } => {
                let at = inst.with_gamma(res.level).unwrap();
                assert!(verify_primal_feasible(&at, *lambda, weights, 1e-6).ok);
            }
        }
    }
}
