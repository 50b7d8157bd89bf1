//! A quick pass over the library's invariants, for the `selftest` command.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{eig_sym, min_eig_on_complement};
use crate::graph::{families, CandidateSet};
use crate::oracles::brute_force_opt_binary;
use crate::rng;
use crate::sdp::{solve_psdp, verify_dual_feasible, verify_primal_feasible, SdpInstance, SolveOptions, SolveStatus};
use crate::sparsify::{
    certify, compute_projection, default_regularization, run_sparsifier, spectral_instance, ExactBackend,
    ProjectionMode, SparsifyParams,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn all_ok(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }
}

fn check(name: &str, result: crate::Result<(bool, String)>) -> Check {
    match result {
        Ok((ok, detail)) => Check {
            name: name.into(),
            ok,
            detail,
        },
        Err(e) => Check {
            name: name.into(),
            ok: false,
            detail: e.to_string(),
        },
    }
}

fn laplacians(seed: u64) -> crate::Result<(bool, String)> {
    let mut r = rng::stream(seed, 1);
    let graphs = [
        families::path(7),
        families::complete(6),
        families::barbell(4, 4),
        families::connected_gnp(9, 0.4, &mut r),
    ];
    let mut worst: f64 = 0.0;
    for g in &graphs {
        let l = g.laplacian();
        worst = worst.max(eig_sym(&l)?.min().abs());
        worst = worst.max((&l * DVector::from_element(g.n(), 1.0)).amax());
        for _ in 0..20 {
            let x: DVector<f64> = DVector::from_fn(g.n(), |_, _| r.gen_range(-1.0..1.0));
            let direct: f64 = g.edges().iter().map(|e| e.w * (x[e.u] - x[e.v]).powi(2)).sum();
            let form = x.dot(&(&l * &x));
            worst = worst.max((direct - form).abs() / direct.abs().max(1.0));
        }
    }
    Ok((worst < 1e-10, format!("largest deviation {worst:.2e}")))
}

fn sdp_dichotomy(seed: u64) -> crate::Result<(bool, String)> {
    let mut r = rng::stream(seed, 2);
    let mut verified = 0;
    for case in 0..4u64 {
        let g = families::connected_gnp(6, 0.4, &mut r);
        let all = CandidateSet::complement(&g, None)?;
        let cands: Vec<_> = all.edges().iter().take(5).copied().collect();
        let w = CandidateSet::new(&g, &cands, None)?;
        for gamma in [0.5, 1.0] {
            let inst = SdpInstance::new(g.clone(), w.clone(), 2, gamma)?;
            let opts = SolveOptions {
                delta_prime: 0.5,
                seed: rng::split(seed, case),
                ..SolveOptions::default()
            };
            let res = solve_psdp(&inst, &opts)?;
            let ok = match &res.status {
                SolveStatus::Infeasible { certificate } => {
                    verify_dual_feasible(&inst, &certificate.z, certificate.v, &certificate.beta, 1e-6).ok
                }
                SolveStatus::Feasible { lambda, weights } => {
                    verify_primal_feasible(&inst.with_gamma(res.level)?, *lambda, weights, 1e-6).ok
                }
            };
            if !ok {
                return Ok((false, format!("case {case} at γ {gamma} failed verification")));
            }
            verified += 1;
        }
    }
    Ok((true, format!("{verified} solves verified")))
}

fn spectral_sparsifier(seed: u64) -> crate::Result<(bool, String)> {
    let g = families::complete(10);
    let inst = spectral_instance(&g, default_regularization(&g, &[]))?;
    let proj = compute_projection(&inst, ProjectionMode::Exact, seed)?;
    let params = SparsifyParams {
        seed,
        ..SparsifyParams::default()
    };
    let res = run_sparsifier(&inst, &proj, &params, &ExactBackend)?;
    let cert = certify(&inst, &proj, &res, &params)?;
    Ok((
        cert.spectral_ok == Some(true),
        format!("{} iterations, condition number {:.4}", res.iterations, cert.condition),
    ))
}

fn interlacing(seed: u64) -> crate::Result<(bool, String)> {
    let mut r = rng::stream(seed, 3);
    for case in 0..5 {
        let g = families::gnp(6, 0.5, &mut r);
        let w = CandidateSet::complement(&g, None)?;
        let k = 2.min(w.m());
        let opt = brute_force_opt_binary(&g, &w, k)?;
        let values = eig_sym(&g.laplacian())?.values;
        if values[k + 1] < opt.lambda - 1e-9 {
            return Ok((false, format!("case {case}: λ_(k+2) {} below {}", values[k + 1], opt.lambda)));
        }
    }
    let lambda2 = min_eig_on_complement(&families::complete(5).laplacian())?;
    Ok(((lambda2 - 5.0).abs() < 1e-9, "5 instances respect λ_(k+2)".into()))
}

pub fn run_selftest(seed: u64) -> SelftestReport {
    SelftestReport {
        checks: vec![
            check("laplacian quadratic form", laplacians(seed)),
            check("sdp dichotomy", sdp_dichotomy(seed)),
            check("spectral sparsifier", spectral_sparsifier(seed)),
            check("λ_(k+2) bound", interlacing(seed)),
        ],
    }
}
