//! Approximate resistance and extreme-eigenvalue estimators for the
//! sparsifier, built from trace powers, a Chebyshev inverse square root and
//! Johnson–Lindenstrauss compression.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{lower_block, ProjectionData, SparsifyInstance, SparsifyState};
use crate::dense::{eig_sym, jl_dimension, jl_sketch, symmetrize};
use crate::error::{Error, Result};

/// `η = ε^{2 + 2/q} n^{-2/q}`.
pub fn assumption_eta(eps: f64, q: f64, n: usize) -> f64 {
    eps.powf(2.0 + 2.0 / q) * (n as f64).powf(-2.0 / q)
}

/// Whether `A ≺ (1 - η) u I` and `P_V (A - X - ℓ M̄) P_V ⪰ |ℓ| η P_V M̄ P_V` hold.
pub fn check_assumption(state: &SparsifyState, proj: &ProjectionData, eta: f64) -> Result<bool> {
    let ea = eig_sym(&state.a)?;
    if !(ea.max() < (1.0 - eta) * state.u) {
        return Ok(false);
    }
    let ec = eig_sym(&lower_block(&state.added, proj))?;
    Ok(ec.min() - state.ell >= state.ell.abs() * eta)
}

/// `λ_max` of a matrix with a nonnegative real spectrum via
/// `tr(M^{2t+1})^{1/(2t+1)}`, with `t` large enough that the estimate lies in
/// `[λ_max, (1 + eps_a) λ_max]`.
pub fn trace_power_max(m: &DMatrix<f64>, eps_a: f64) -> Result<f64> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::Input("trace power needs a non-empty square matrix".into()));
    }
    if !(eps_a > 0.0) {
        return Err(Error::Input(format!("ε_a must be positive, got {eps_a}")));
    }
    let dim = m.nrows().max(2) as f64;
    let t = (dim.ln() / (2.0 * (1.0 + eps_a).ln())).ceil().max(1.0) as u32;
    let p = 2 * t + 1;
    let scale = m.norm();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let powered = (m / scale).pow(p);
    let tr = powered.trace();
    if !(tr > 0.0 && tr.is_finite()) {
        return Err(Error::Numerical(format!("trace power evaluated to {tr}")));
    }
    Ok(scale * tr.powf(1.0 / p as f64))
}

/// Estimates of the three extreme eigenvalues used by the sample count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremeEigs {
    /// `≈ λ_max((uI - A)^{-1} M̄)`.
    pub alpha1: f64,
    /// `≈ λ_min((uI - A)^{-1} M̄)`.
    pub alpha2: f64,
    /// `≈ λ_max((P_V (B - ℓI) P_V)^†)`.
    pub alpha3: f64,
}

fn lower_frame(proj: &ProjectionData, state: &SparsifyState, inst: &SparsifyInstance) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let vt = proj.v.transpose();
    let g = symmetrize(&(&vt * (&state.added - inst.mbar() * state.ell) * &proj.v));
    let eg = eig_sym(&g)?;
    if eg.min() <= 0.0 {
        return Err(Error::AssumptionViolated(format!(
            "V^T (A - X - ℓ M̄) V has eigenvalue {:e}",
            eg.min()
        )));
    }
    Ok((eg.vectors, eg.values))
}

/// Trace-power estimates of the extreme eigenvalues.
pub fn approx_extreme_eigs(inst: &SparsifyInstance, proj: &ProjectionData, state: &SparsifyState, eps_a: f64) -> Result<ExtremeEigs> {
    let d = inst.dim();
    let y = DMatrix::<f64>::identity(d, d) * state.u - &state.a;
    let y_inv = y
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::AssumptionViolated("uI - A is singular".into()))?;
    let alpha1 = trace_power_max(&(&y_inv * inst.mbar()), eps_a)?;
    let m_inv = inst
        .mbar()
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("M̄ is singular".into()))?;
    let alpha2 = 1.0 / trace_power_max(&(&y * m_inv), eps_a)?;
    let (f, lam) = lower_frame(proj, state, inst)?;
    let mut frame = &proj.v * f;
    for j in 0..lam.len() {
        frame.column_mut(j).scale_mut(lam[j].powf(-0.5));
    }
    let j_mat = &frame * frame.transpose();
    let alpha3 = trace_power_max(&(j_mat * inst.mbar()), eps_a)?;
    Ok(ExtremeEigs { alpha1, alpha2, alpha3 })
}

/// Lower resistances `Σ_j λ_j^{-1} ⟨V f_j, v_i⟩²`, compressed by a JL sketch
/// when `k` exceeds the sketch width for `eps_a`.
pub fn approx_lower_resistances(
    inst: &SparsifyInstance,
    proj: &ProjectionData,
    state: &SparsifyState,
    eps_a: f64,
    seed: u64,
) -> Result<DVector<f64>> {
    let width = jl_dimension(inst.vector_count(), eps_a);
    let sketch = if proj.k() > width { Some(width) } else { None };
    approx_lower_resistances_with(inst, proj, state, sketch, seed)
}

/// As [`approx_lower_resistances`] with an explicit sketch width.
pub fn approx_lower_resistances_with(
    inst: &SparsifyInstance,
    proj: &ProjectionData,
    state: &SparsifyState,
    sketch: Option<usize>,
    seed: u64,
) -> Result<DVector<f64>> {
    let (f, lam) = lower_frame(proj, state, inst)?;
    let mut frame = &proj.v * f;
    for j in 0..lam.len() {
        frame.column_mut(j).scale_mut(lam[j].powf(-0.5));
    }
    // One row per vector: ⟨λ_j^{-1/2} V f_j, v_i⟩ over j.
    let rows = inst.vectors().transpose() * frame;
    let rows = match sketch {
        Some(w) => jl_sketch(&rows, w, seed)?,
        None => rows,
    };
    Ok(DVector::from_iterator(rows.nrows(), rows.row_iter().map(|r| r.norm_squared())))
}

/// Degree of the Chebyshev approximation to `(u - x)^{-1/2}` on
/// `[0, (1 - η) u]`, from the Bernstein ellipse through the singularity.
pub fn chebyshev_degree(eta: f64, eps_a: f64) -> usize {
    let t0 = (1.0 + eta) / (1.0 - eta);
    let rho = t0 + (t0 * t0 - 1.0).sqrt();
    (2.0 * (40.0 / (eps_a * eta)).ln() / rho.ln()).ceil() as usize
}

/// Chebyshev coefficients of `f` on `[lo, hi]` with the zeroth halved.
fn chebyshev_coefficients<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, degree: usize) -> Vec<f64> {
    let n = degree + 1;
    let vals: Vec<f64> = (0..n)
        .map(|j| {
            let x = (std::f64::consts::PI * (j as f64 + 0.5) / n as f64).cos();
            f(lo + (hi - lo) * (x + 1.0) / 2.0)
        })
        .collect();
    let mut c: Vec<f64> = (0..n)
        .map(|m| {
            let s: f64 = vals
                .iter()
                .enumerate()
                .map(|(j, v)| v * (std::f64::consts::PI * m as f64 * (j as f64 + 0.5) / n as f64).cos())
                .sum();
            2.0 * s / n as f64
        })
        .collect();
    c[0] /= 2.0;
    c
}

/// `p(A) ≈ (uI - A)^{-1/2}` by Clenshaw's recurrence.
fn chebyshev_inv_sqrt(a: &DMatrix<f64>, u: f64, eta: f64, eps_a: f64) -> DMatrix<f64> {
    let d = a.nrows();
    let hi = (1.0 - eta) * u;
    let degree = chebyshev_degree(eta, eps_a);
    let c = chebyshev_coefficients(|x| (u - x).powf(-0.5), 0.0, hi, degree);
    let id = DMatrix::<f64>::identity(d, d);
    let t = a * (2.0 / hi) - &id;
    let mut b1 = DMatrix::<f64>::zeros(d, d);
    let mut b2 = DMatrix::<f64>::zeros(d, d);
    for ck in c.iter().skip(1).rev() {
        let b0 = &id * *ck + &t * &b1 * 2.0 - &b2;
        b2 = b1;
        b1 = b0;
    }
    &id * c[0] + &t * &b1 - b2
}

/// Upper resistances `‖S_u v_i‖²` with `S_u` a polynomial in `A`.
pub fn approx_upper_resistances(inst: &SparsifyInstance, state: &SparsifyState, eps_a: f64, eta: f64) -> Result<DVector<f64>> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Input(format!("η must lie in (0, 1), got {eta}")));
    }
    let ea = eig_sym(&state.a)?;
    if !(ea.max() < (1.0 - eta) * state.u) {
        return Err(Error::AssumptionViolated(format!(
            "λ_max(A) = {} exceeds (1 - η) u = {}",
            ea.max(),
            (1.0 - eta) * state.u
        )));
    }
    let s = chebyshev_inv_sqrt(&state.a, state.u, eta, eps_a);
    let w = s * inst.vectors();
    Ok(DVector::from_iterator(w.ncols(), w.column_iter().map(|c| c.norm_squared())))
}
