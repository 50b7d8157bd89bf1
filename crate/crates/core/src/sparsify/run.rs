use nalgebra::{DMatrix, DVector};
use rand::distributions::{Distribution, WeightedIndex};
use serde::{Deserialize, Serialize};

use super::{
    lower_block, lower_potential, sample_count, upper_potential, ProjectionData, ResistanceBackend, SampleContext,
    SparsifyInstance, SparsifyState,
};
use crate::dense::eig_sym;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsifyParams {
    pub eps: f64,
    pub q: f64,
    pub seed: u64,
    /// Leading constant of `c_N`.
    pub c_n_scale: f64,
    /// The constant in the denominator of the `N_j` base.
    pub base_const: f64,
    /// Multiple of the iteration bound allowed before giving up on a run.
    pub cap_factor: f64,
    /// Attempts made by [`run_with_retries`].
    pub retries: usize,
    /// Record potentials per iteration (two extra eigendecompositions each).
    pub trace_potentials: bool,
}

impl Default for SparsifyParams {
    fn default() -> Self {
        SparsifyParams {
            eps: 0.05,
            q: 10.0,
            seed: 0,
            c_n_scale: 1.0 / 16.0,
            base_const: 4.0,
            cap_factor: 10.0,
            retries: 5,
            trace_potentials: false,
        }
    }
}

/// State summary at the start of one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub u: f64,
    pub ell: f64,
    pub rho: f64,
    pub phi: Option<f64>,
    /// `N_j` before flooring.
    pub n_value: f64,
    pub n_count: usize,
    /// Samples actually drawn before the stopping rule fired.
    pub taken: usize,
    /// `Σ_{t<j} (δ_{u,t} - δ_{ℓ,t})`.
    pub gap_sum_before: f64,
    pub approximate: bool,
}

#[derive(Debug, Clone)]
pub struct SparsifierResult {
    /// One coefficient per sampleable vector.
    pub coefficients: DVector<f64>,
    pub iterations: usize,
    pub samples: usize,
    pub u0: f64,
    pub ell0: f64,
    pub alpha: f64,
    pub u_final: f64,
    pub ell_final: f64,
    pub final_a: DMatrix<f64>,
    pub final_lower: DMatrix<f64>,
    pub trace: Vec<IterationRecord>,
    pub iteration_cap: u64,
    pub c_n: f64,
}

/// Draws vector indices with probability proportional to their resistance.
#[derive(Debug, Clone)]
pub struct Sampler {
    total: DVector<f64>,
    dist: WeightedIndex<f64>,
}

impl Sampler {
    pub fn new(total: &DVector<f64>) -> Result<Sampler> {
        let dist = WeightedIndex::new(total.iter().cloned())
            .map_err(|e| Error::Degenerate(format!("sampling distribution: {e}")))?;
        Ok(Sampler {
            total: total.clone(),
            dist,
        })
    }

    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.dist.sample(rng)
    }

    /// The coefficient `ε / (q R_i)` that a draw of `i` adds.
    pub fn scale(&self, i: usize, eps: f64, q: f64) -> f64 {
        eps / (q * self.total[i])
    }
}

/// `⌈20 q k / (3 ε²)⌉`.
pub fn support_cap(q: f64, k: usize, eps: f64) -> usize {
    (20.0 * q * k as f64 / (3.0 * eps * eps)).ceil() as usize
}

fn validate(params: &SparsifyParams) -> Result<()> {
    if !(params.eps > 0.0 && params.eps <= 0.05) {
        return Err(Error::Input(format!("ε must lie in (0, 1/20], got {}", params.eps)));
    }
    if !(params.q >= 10.0) {
        return Err(Error::Input(format!("q must be at least 10, got {}", params.q)));
    }
    if params.retries == 0 {
        return Err(Error::Input("at least one attempt is required".into()));
    }
    Ok(())
}

/// One run of the barrier sampler.
pub fn run_sparsifier(
    inst: &SparsifyInstance,
    proj: &ProjectionData,
    params: &SparsifyParams,
    backend: &dyn ResistanceBackend,
) -> Result<SparsifierResult> {
    validate(params)?;
    let (eps, q) = (params.eps, params.q);
    let k = proj.k();
    let lam = inst.lambda_cap() as f64;
    let x_max = eig_sym(inst.x())?.max();
    let u0 = 2.0 + x_max;
    let ell0 = -2.0 * k as f64 / lam;
    let alpha = 4.0 * k as f64 / lam;
    let threshold = alpha + u0 - ell0;
    let mbar_min = eig_sym(inst.mbar())?.min().max(f64::MIN_POSITIVE);
    let expo = 2.0 * eps / q;
    let c_n = params.c_n_scale * mbar_min.powf(expo) * (inst.n() as f64).powf(-expo);
    let cap = (params.cap_factor * 80.0 * q / (3.0 * eps * eps) / c_n * lam.powf((1.0 + 2.0 * eps) / q)).ceil() as u64;

    let mut state = SparsifyState::initial(inst, u0, ell0);
    let mut rng = rng::stream(params.seed, 0x5350);
    let ctx = SampleContext {
        eps,
        q,
        seed: params.seed,
    };
    let (mut uh, mut lh) = (u0, ell0);
    let mut samples = 0usize;
    let mut gap_sum = 0.0;
    let mut trace = Vec::new();

    while uh - lh <= threshold {
        if state.iteration as u64 >= cap {
            return Err(Error::IterationCap { cap });
        }
        state.u = uh;
        state.ell = lh;
        let iter_ctx = SampleContext {
            seed: rng::split(ctx.seed, state.iteration as u64),
            ..ctx
        };
        let res = backend.resistances(inst, proj, &state, &iter_ctx)?;
        let rho = res.rho();
        let total = res.total();
        let nj = sample_count(&res, eps, q, params.base_const);
        let phi = if params.trace_potentials {
            let up = upper_potential(&state.a, state.u, inst.t(), q)?;
            let lo = lower_potential(&lower_block(&state.added, proj), state.ell, q)?;
            Some(up + lo)
        } else {
            None
        };
        let sampler = Sampler::new(&total)?;
        let du = (1.0 + 3.0 * eps) * eps / (q * rho);
        let dl = (1.0 - 3.0 * eps) * eps / (q * rho);
        let mut picks = Vec::with_capacity(nj.count.min(1 << 20));
        for _ in 0..nj.count {
            let i = sampler.draw(&mut rng);
            picks.push(i);
            uh += du;
            lh += dl;
            if uh - lh > threshold {
                break;
            }
        }
        trace.push(IterationRecord {
            iteration: state.iteration,
            u: state.u,
            ell: state.ell,
            rho,
            phi,
            n_value: nj.value,
            n_count: nj.count,
            taken: picks.len(),
            gap_sum_before: gap_sum,
            approximate: res.approximate,
        });
        gap_sum += picks.len() as f64 * (du - dl);
        samples += picks.len();
        for i in picks {
            state.add_scaled(inst, i, sampler.scale(i, eps, q));
        }
        state.iteration += 1;
    }

    let lower = lower_block(&state.added, proj);
    let amax = eig_sym(&state.a)?.max();
    let bmin = eig_sym(&lower)?.min();
    if !(amax < uh) {
        return Err(Error::BarrierViolation(format!(
            "final λ_max(A) = {amax} is not below û = {uh}"
        )));
    }
    if !(bmin > lh) {
        return Err(Error::BarrierViolation(format!(
            "final λ_min(B|S') = {bmin} is not above ℓ̂ = {lh}"
        )));
    }
    Ok(SparsifierResult {
        coefficients: state.c,
        iterations: state.iteration,
        samples,
        u0,
        ell0,
        alpha,
        u_final: uh,
        ell_final: lh,
        final_a: state.a,
        final_lower: lower,
        trace,
        iteration_cap: cap,
        c_n,
    })
}

/// Exact spectral checks on a finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lower_min: f64,
    /// The two-bound lower estimate on `λ_min(A)`, when `V` is a proper subspace.
    pub lower_bound: Option<f64>,
    pub lower_bound_ok: bool,
    pub support: usize,
    pub support_cap: usize,
    pub cost: f64,
    pub cost_cap: f64,
    pub cost_ok: bool,
    /// `(û - ℓ̂) / û`.
    pub barrier_gap: f64,
    pub condition: f64,
    /// Spectral mode only: gap `≤ 12ε` and condition within the sandwich.
    pub spectral_ok: Option<bool>,
    pub accepted: bool,
}

/// `θ_min (λ*/2) / ((λ*/2)^{1/2} + θ_min^{1/2} + θ_max^{1/2})²`.
fn two_bound(lambda_star: f64, theta_min: f64, theta_max: f64) -> f64 {
    let h = lambda_star / 2.0;
    let tmin = theta_min.max(0.0);
    let denom = h.sqrt() + tmin.sqrt() + theta_max.max(0.0).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        tmin * h / (denom * denom)
    }
}

pub fn certify(inst: &SparsifyInstance, proj: &ProjectionData, res: &SparsifierResult, params: &SparsifyParams) -> Result<Certification> {
    let ea = eig_sym(&res.final_a)?;
    let lower_min = eig_sym(&res.final_lower)?.min();
    let lower_bound = proj
        .lambda_star
        .map(|ls| two_bound(ls, res.ell_final, res.u_final));
    let lower_bound_ok = match lower_bound {
        Some(b) => ea.min() >= b - 1e-7,
        None => true,
    };
    let support = res.coefficients.iter().filter(|&&c| c > 0.0).count();
    let cap = support_cap(params.q, inst.k(), params.eps);
    let cost: f64 = res
        .coefficients
        .iter()
        .zip(inst.costs().iter())
        .map(|(c, w)| c * w)
        .sum();
    let cost_cap = 3.0 * (1.0 + 3.0 * params.eps) / (2.0 * params.q) * cap as f64 / inst.lambda_cap() as f64 + 1e-9;
    let barrier_gap = (res.u_final - res.ell_final) / res.u_final;
    let condition = ea.max() / ea.min();
    let spectral_ok = if inst.x_is_zero() {
        let e12 = 12.0 * params.eps;
        Some(barrier_gap <= e12 && condition > 0.0 && condition <= (1.0 + e12) / (1.0 - e12) * (1.0 + 1e-6))
    } else {
        None
    };
    let accepted = lower_bound_ok && support <= cap && spectral_ok.unwrap_or(true);
    Ok(Certification {
        lambda_min: ea.min(),
        lambda_max: ea.max(),
        lower_min,
        lower_bound,
        lower_bound_ok,
        support,
        support_cap: cap,
        cost,
        cost_cap,
        cost_ok: cost <= cost_cap,
        barrier_gap,
        condition,
        spectral_ok,
        accepted,
    })
}

#[derive(Debug, Clone)]
pub struct RetryOutcome {
    pub result: SparsifierResult,
    pub certification: Certification,
    /// Attempts used, counting the accepted one.
    pub attempts: usize,
    pub failures: Vec<String>,
}

fn retryable(e: &Error) -> bool {
    matches!(
        e,
        Error::BarrierViolation(_) | Error::IterationCap { .. } | Error::Numerical(_) | Error::Degenerate(_)
    )
}

/// Runs with per-attempt seeds until one output passes [`certify`].
pub fn run_with_retries(
    inst: &SparsifyInstance,
    proj: &ProjectionData,
    params: &SparsifyParams,
    backend: &dyn ResistanceBackend,
) -> Result<RetryOutcome> {
    validate(params)?;
    let mut failures = Vec::new();
    for attempt in 0..params.retries {
        let p = SparsifyParams {
            seed: rng::split(params.seed, attempt as u64),
            ..*params
        };
        match run_sparsifier(inst, proj, &p, backend) {
            Ok(result) => {
                let certification = certify(inst, proj, &result, &p)?;
                if certification.accepted {
                    return Ok(RetryOutcome {
                        result,
                        certification,
                        attempts: attempt + 1,
                        failures,
                    });
                }
                failures.push(format!(
                    "attempt {attempt}: output failed certification (λ_min {:e}, bound {:?}, support {}/{})",
                    certification.lambda_min,
                    certification.lower_bound,
                    certification.support,
                    certification.support_cap
                ));
            }
            Err(e) if retryable(&e) => failures.push(format!("attempt {attempt}: {e}")),
            Err(e) => return Err(e),
        }
    }
    Err(Error::RetryExhausted {
        attempts: params.retries,
        last: failures.last().cloned().unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;
    use crate::sparsify::{compute_projection, setup_instance, spectral_instance, ApproxBackend, ExactBackend, ProjectionMode};

    #[test]
    fn spectral_mode_initial_barriers() {
        let inst = spectral_instance(&families::complete(8), 1e-8).unwrap();
        let proj = compute_projection(&inst, ProjectionMode::Exact, 0).unwrap();
        let res = run_sparsifier(&inst, &proj, &SparsifyParams::default(), &ExactBackend).unwrap();
        assert_eq!(res.u0, 2.0);
        assert_eq!(res.ell0, -2.0);
        assert_eq!(res.alpha, 4.0);
        let cert = certify(&inst, &proj, &res, &SparsifyParams::default()).unwrap();
        assert_eq!(cert.spectral_ok, Some(true));
        assert!(cert.barrier_gap <= 0.6);
    }

    #[test]
    fn subgraph_run_meets_certification() {
        let mut r = crate::rng::stream(2, 0);
        let g = families::connected_gnp(12, 0.25, &mut r);
        let cands: Vec<_> = (0..12)
            .flat_map(|u| (u + 1..12).map(move |v| (u, v)))
            .filter(|&(u, v)| !g.has_edge(u, v))
            .map(|(u, v)| (u, v, 0.4))
            .collect();
        let inst = setup_instance(&g, &cands, 1e-8, 2).unwrap();
        let proj = compute_projection(&inst, ProjectionMode::Exact, 0).unwrap();
        let params = SparsifyParams {
            seed: 5,
            trace_potentials: true,
            ..SparsifyParams::default()
        };
        let out = run_with_retries(&inst, &proj, &params, &ExactBackend).unwrap();
        assert!(out.certification.accepted);
        assert!(out.certification.support <= out.certification.support_cap);
        assert!(out.result.trace.iter().all(|t| t.phi.is_some()));
    }

    #[test]
    fn approx_backend_runs() {
        let inst = spectral_instance(&families::complete(6), 1e-8).unwrap();
        let proj = compute_projection(&inst, ProjectionMode::Exact, 0).unwrap();
        let backend = ApproxBackend::default();
        let out = run_with_retries(&inst, &proj, &SparsifyParams::default(), &backend).unwrap();
        assert!(out.certification.accepted);
        assert!(out.result.trace.iter().any(|t| t.approximate));
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        let inst = spectral_instance(&families::complete(4), 1e-8).unwrap();
        let proj = compute_projection(&inst, ProjectionMode::Exact, 0).unwrap();
        let bad = SparsifyParams {
            eps: 0.1,
            ..SparsifyParams::default()
        };
        assert!(matches!(run_sparsifier(&inst, &proj, &bad, &ExactBackend), Err(Error::Input(_))));
        let bad = SparsifyParams {
            q: 5.0,
            ..SparsifyParams::default()
        };
        assert!(matches!(run_sparsifier(&inst, &proj, &bad, &ExactBackend), Err(Error::Input(_))));
    }
}
