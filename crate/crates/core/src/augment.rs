//! The doubling search over `γ` that couples the SDP solver, the subgraph
//! sparsifier and a `λ₂` check.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dense::min_eig_on_complement;
use crate::error::{Error, Result};
use crate::graph::{CandidateSet, WeightedGraph};
use crate::rng;
use crate::sdp::{solve_psdp, verify_dual_feasible, DualCertificate, SdpInstance, SolveOptions, SolveStatus};
use crate::sparsify::{
    default_regularization, run_with_retries, setup_instance, Certification, ExactBackend, ExactProjection,
    ProjectionStrategy, ResistanceBackend, SparsifyParams,
};

/// Estimates `λ₂` of a weighted graph.
pub trait Lambda2Estimator: Send + Sync {
    fn name(&self) -> &'static str;
    fn estimate(&self, h: &WeightedGraph) -> Result<f64>;
}

/// The exact value from a dense eigendecomposition.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactLambda2;

/// Inverse power iteration on `L + c 11^T` through a Cholesky factor.
#[derive(Debug, Clone, Copy)]
pub struct IterativeLambda2 {
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for IterativeLambda2 {
    fn default() -> Self {
        IterativeLambda2 {
            max_iters: 500,
            tol: 1e-10,
            seed: 0,
        }
    }
}

impl Lambda2Estimator for ExactLambda2 {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn estimate(&self, h: &WeightedGraph) -> Result<f64> {
        estimate_lambda2(h)
    }
}

impl Lambda2Estimator for IterativeLambda2 {
    fn name(&self) -> &'static str {
        "iterative"
    }

    fn estimate(&self, h: &WeightedGraph) -> Result<f64> {
        let n = h.n();
        if n < 2 || h.components() > 1 {
            return Ok(0.0);
        }
        let max_deg = h.degrees().into_iter().fold(0.0, f64::max);
        // λ₂ ≤ 2 max-degree, so pushing the all-ones direction above that
        // leaves λ₂ at the bottom of the spectrum.
        let shift = (2.0 * max_deg + 1.0) / n as f64;
        let mut l = h.laplacian();
        l.add_scalar_mut(shift);
        let chol = l
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("shifted Laplacian is not positive definite".into()))?;
        let mut r = rng::stream(self.seed, 0x4c32);
        let mut x = nalgebra::DVector::from_fn(n, |_, _| r.gen_range(-1.0..1.0));
        let mean = x.mean();
        x.add_scalar_mut(-mean);
        x.normalize_mut();
        let mut value = f64::INFINITY;
        for _ in 0..self.max_iters {
            let mut y = chol.solve(&x);
            let norm = y.norm();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::Numerical("inverse iteration collapsed".into()));
            }
            y /= norm;
            let next = (y.transpose() * &l * &y)[(0, 0)];
            x = y;
            let done = (value - next).abs() <= self.tol * next.abs();
            value = next;
            if done {
                break;
            }
        }
        Ok(value)
    }
}

/// Exact `λ₂(L_H)`; zero when `H` is disconnected.
pub fn estimate_lambda2(h: &WeightedGraph) -> Result<f64> {
    if h.n() < 2 || h.components() > 1 {
        return Ok(0.0);
    }
    min_eig_on_complement(&h.laplacian())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentParams {
    pub k: usize,
    pub q: f64,
    pub eps: f64,
    pub delta_prime: f64,
    pub seed: u64,
    /// Leading constant of the rejection threshold `c Δ n^{-2/q}`.
    pub c_reject: f64,
    pub retries: usize,
    /// SDP weights at or below this are left out of the sparsifier.
    pub support_threshold: f64,
    pub use_sketch: bool,
}

impl Default for AugmentParams {
    fn default() -> Self {
        AugmentParams {
            k: 1,
            q: 10.0,
            eps: 0.05,
            delta_prime: 0.1,
            seed: 0,
            c_reject: 1.0,
            retries: 5,
            support_threshold: 1e-10,
            use_sketch: false,
        }
    }
}

/// The pluggable pieces of the pipeline.
pub struct Strategies {
    pub resistance: Box<dyn ResistanceBackend>,
    pub projection: Box<dyn ProjectionStrategy>,
    pub lambda2: Box<dyn Lambda2Estimator>,
}

impl Default for Strategies {
    fn default() -> Self {
        Strategies {
            resistance: Box::new(ExactBackend),
            projection: Box::new(ExactProjection),
            lambda2: Box::new(ExactLambda2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AddedEdge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsifierStats {
    pub attempts: usize,
    pub iterations: usize,
    pub samples: usize,
    pub certification: Certification,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accepted {
    pub added: Vec<AddedEdge>,
    pub lambda2_estimate: f64,
    pub gamma_used: f64,
    pub sdp_rounds: u64,
    pub support_cap: usize,
    pub total_weight: f64,
    /// `Σ_{e ∈ supp} w_e` times the per-unit cost cap of the sparsifier.
    pub weight_cap: f64,
    pub sparsifier: Option<SparsifierStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    SdpInfeasibleAtGamma0,
    Lambda2BelowThreshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub reason: RejectReason,
    pub last_gamma: f64,
    pub certificate: Option<DualCertificate>,
    pub certificate_verified: Option<bool>,
    pub lambda2_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AugmentResult {
    Accepted(Accepted),
    Reject(Rejection),
}

/// What happened at one `γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaRecord {
    pub gamma: f64,
    pub feasible: bool,
    pub sdp_rounds: u64,
    pub round_bound: u64,
    pub lambda: Option<f64>,
    pub weight_sum: Option<f64>,
    pub support: Option<usize>,
    pub sparsifier_attempts: Option<usize>,
    pub lambda2_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentReport {
    #[serde(flatten)]
    pub result: AugmentResult,
    pub gamma0: f64,
    pub delta: f64,
    pub threshold: f64,
    pub audit: Vec<GammaRecord>,
}

fn validate(params: &AugmentParams) -> Result<()> {
    if params.k == 0 {
        return Err(Error::Input("k must be at least 1".into()));
    }
    if !(params.q >= 10.0) {
        return Err(Error::Input(format!("q must be at least 10, got {}", params.q)));
    }
    if !(params.eps > 0.0 && params.eps <= 0.05) {
        return Err(Error::Input(format!("ε must lie in (0, 1/20], got {}", params.eps)));
    }
    if !(params.c_reject > 0.0) {
        return Err(Error::Input("the rejection constant must be positive".into()));
    }
    Ok(())
}

/// Runs the doubling search. A sparsifier that exhausts its retries surfaces
/// as [`Error::RetryExhausted`], distinct from a rejection.
pub fn augment(g: &WeightedGraph, w: &CandidateSet, params: &AugmentParams, strategies: &Strategies) -> Result<AugmentReport> {
    validate(params)?;
    let n = g.n();
    let nf = n as f64;
    let gamma0 = nf.powf(-1.0 / params.q);
    let delta = w.delta();
    let threshold = params.c_reject * delta * nf.powf(-2.0 / params.q);
    let mut gamma = gamma0;
    let mut stored: Option<Accepted> = None;
    let mut audit = Vec::new();
    let mut total_rounds = 0u64;
    let report = |result: AugmentResult, audit: Vec<GammaRecord>| AugmentReport {
        result,
        gamma0,
        delta,
        threshold,
        audit,
    };

    let mut step = 0u64;
    while gamma < 1.0 {
        gamma = (2.0 * gamma).min(1.0);
        step += 1;
        let inst = SdpInstance::new(g.clone(), w.clone(), params.k, gamma)?;
        let opts = SolveOptions {
            delta_prime: params.delta_prime,
            use_sketch: params.use_sketch,
            seed: rng::split(params.seed, step),
            ..SolveOptions::default()
        };
        let res = solve_psdp(&inst, &opts)?;
        total_rounds += res.rounds;
        let mut record = GammaRecord {
            gamma,
            feasible: res.is_feasible(),
            sdp_rounds: res.rounds,
            round_bound: res.round_bound,
            lambda: None,
            weight_sum: None,
            support: None,
            sparsifier_attempts: None,
            lambda2_estimate: None,
        };
        match res.status {
            SolveStatus::Infeasible { certificate } => {
                audit.push(record);
                return Ok(match stored {
                    Some(acc) => report(AugmentResult::Accepted(acc), audit),
                    None => {
                        let ok = verify_dual_feasible(&inst, &certificate.z, certificate.v, &certificate.beta, 1e-6).ok;
                        report(
                            AugmentResult::Reject(Rejection {
                                reason: RejectReason::SdpInfeasibleAtGamma0,
                                last_gamma: gamma,
                                certificate: Some(certificate),
                                certificate_verified: Some(ok),
                                lambda2_estimate: None,
                            }),
                            audit,
                        )
                    }
                });
            }
            SolveStatus::Feasible { lambda, weights } => {
                record.lambda = Some(lambda);
                record.weight_sum = Some(weights.sum());
                let support: Vec<(usize, usize, f64)> = w
                    .edges()
                    .iter()
                    .zip(weights.iter())
                    .filter(|(_, &we)| we > params.support_threshold)
                    .map(|(&(u, v), &we)| (u, v, we))
                    .collect();
                record.support = Some(support.len());
                let support_cap = crate::sparsify::support_cap(params.q, params.k, params.eps);
                let (added, stats, weight_cap) = if support.is_empty() {
                    (Vec::new(), None, 0.0)
                } else {
                    let reg = default_regularization(g, &support);
                    let sinst = setup_instance(g, &support, reg, params.k)?;
                    let proj = strategies.projection.project(&sinst, rng::split(params.seed, 1000 + step))?;
                    let sp = SparsifyParams {
                        eps: params.eps,
                        q: params.q,
                        seed: rng::split(params.seed, 2000 + step),
                        retries: params.retries,
                        ..SparsifyParams::default()
                    };
                    let out = run_with_retries(&sinst, &proj, &sp, strategies.resistance.as_ref())?;
                    record.sparsifier_attempts = Some(out.attempts);
                    let added = sinst.added_edges(&out.result.coefficients);
                    let wsum: f64 = support.iter().map(|s| s.2).sum();
                    let cap = wsum * out.certification.cost_cap;
                    let stats = SparsifierStats {
                        attempts: out.attempts,
                        iterations: out.result.iterations,
                        samples: out.result.samples,
                        certification: out.certification,
                        failures: out.failures,
                    };
                    (added, Some(stats), cap)
                };
                let h = g.with_added(&added)?;
                let eta2 = strategies.lambda2.estimate(&h)?;
                record.lambda2_estimate = Some(eta2);
                audit.push(record);
                if eta2 <= threshold {
                    return Ok(report(
                        AugmentResult::Reject(Rejection {
                            reason: RejectReason::Lambda2BelowThreshold,
                            last_gamma: gamma,
                            certificate: None,
                            certificate_verified: None,
                            lambda2_estimate: Some(eta2),
                        }),
                        audit,
                    ));
                }
                let total_weight = added.iter().map(|e| e.2).sum();
                stored = Some(Accepted {
                    added: added.into_iter().map(|(u, v, w)| AddedEdge { u, v, w }).collect(),
                    lambda2_estimate: eta2,
                    gamma_used: gamma,
                    sdp_rounds: total_rounds,
                    support_cap,
                    total_weight,
                    weight_cap,
                    sparsifier: stats,
                });
            }
        }
    }
    let acc = stored.ok_or_else(|| Error::Degenerate("the search ended without a solved level".into()))?;
    Ok(report(AugmentResult::Accepted(acc), audit))
}

/// `L_G + Σ_{e ∈ F} w_e L_e`.
pub fn augmented_laplacian(g: &WeightedGraph, added: &[AddedEdge]) -> DMatrix<f64> {
    let mut l = g.laplacian();
    for e in added {
        crate::graph::add_edge_laplacian(&mut l, e.u, e.v, e.w);
    }
    l
}
