use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ProjectionData, SparsifyInstance};
use crate::dense::{eig_sym, symmetrize};
use crate::error::{Error, Result};

/// The matrix under construction and the barriers around it.
#[derive(Debug, Clone)]
pub struct SparsifyState {
    /// `A = X + Σ c_i v_i v_i^T`.
    pub a: DMatrix<f64>,
    /// `A - X`.
    pub added: DMatrix<f64>,
    pub u: f64,
    pub ell: f64,
    /// One coefficient per sampleable vector.
    pub c: DVector<f64>,
    pub iteration: usize,
}

impl SparsifyState {
    pub fn initial(inst: &SparsifyInstance, u0: f64, ell0: f64) -> Self {
        let d = inst.dim();
        SparsifyState {
            a: inst.x().clone(),
            added: DMatrix::zeros(d, d),
            u: u0,
            ell: ell0,
            c: DVector::zeros(inst.vector_count()),
            iteration: 0,
        }
    }

    /// Adds `s · v_i v_i^T` and records the coefficient.
    pub fn add_scaled(&mut self, inst: &SparsifyInstance, i: usize, s: f64) {
        let v = inst.vectors().column(i);
        self.added.ger(s, &v, &v, 1.0);
        self.a.ger(s, &v, &v, 1.0);
        self.c[i] += s;
    }
}

/// `V^T B V = S^{-1/2} V^T (A - X) V S^{-1/2}`, the lower block on `S'`.
pub fn lower_block(added: &DMatrix<f64>, proj: &ProjectionData) -> DMatrix<f64> {
    let inner = proj.v.transpose() * added * &proj.v;
    symmetrize(&(&proj.s_inv_half * inner * &proj.s_inv_half))
}

/// `Σ_{top T} (u - λ_i(A))^{-q}`.
pub fn upper_potential(a: &DMatrix<f64>, u: f64, t: usize, q: f64) -> Result<f64> {
    let e = eig_sym(a)?;
    if !(u > e.max()) {
        return Err(Error::BarrierViolation(format!(
            "upper barrier {u} is not above λ_max(A) = {}",
            e.max()
        )));
    }
    let d = e.dim();
    let t = t.min(d);
    Ok(e.values.iter().skip(d - t).map(|&l| (u - l).powf(-q)).sum())
}

/// `Σ_{i≤k} (λ_i(V^T B V) - ℓ)^{-q}` for the `k × k` restricted block.
pub fn lower_potential(b_restricted: &DMatrix<f64>, ell: f64, q: f64) -> Result<f64> {
    let e = eig_sym(b_restricted)?;
    if !(e.min() > ell) {
        return Err(Error::BarrierViolation(format!(
            "lower barrier {ell} is not below λ_min(B|S') = {}",
            e.min()
        )));
    }
    Ok(e.values.iter().map(|&l| (l - ell).powf(-q)).sum())
}

/// Relative effective resistances and the spectral summaries used for `N_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resistances {
    /// `v_i^T (uI - A)^{-1} v_i`.
    pub upper: DVector<f64>,
    /// `(Z v_i)^T (P_V (B - ℓI) P_V)^† (Z v_i)`.
    pub lower: DVector<f64>,
    /// `tr[(uI - A)^{-1} M̄]`.
    pub rho_upper: f64,
    /// `tr[(P_V (B - ℓI) P_V)^†]`.
    pub rho_lower: f64,
    /// `λ_max((uI - A)^{-1} M̄)`.
    pub upper_max: f64,
    /// `λ_min((uI - A)^{-1} M̄)`.
    pub upper_min: f64,
    /// `λ_max((P_V (B - ℓI) P_V)^†)`.
    pub lower_max: f64,
    pub approximate: bool,
}

impl Resistances {
    pub fn rho(&self) -> f64 {
        self.rho_upper + self.rho_lower
    }

    pub fn total(&self) -> DVector<f64> {
        &self.upper + &self.lower
    }
}

/// Exact resistances at `state`; fails when either barrier is crossed.
pub fn relative_resistances(inst: &SparsifyInstance, proj: &ProjectionData, state: &SparsifyState) -> Result<Resistances> {
    let ea = eig_sym(&state.a)?;
    if !(state.u > ea.max()) {
        return Err(Error::BarrierViolation(format!(
            "λ_max(A) = {} reached the upper barrier {}",
            ea.max(),
            state.u
        )));
    }
    let gaps: Vec<f64> = ea.values.iter().map(|&l| state.u - l).collect();
    let mut white = ea.vectors.transpose() * inst.vectors();
    for (r, g) in gaps.iter().enumerate() {
        white.row_mut(r).scale_mut(g.powf(-0.5));
    }
    let upper = DVector::from_iterator(white.ncols(), white.column_iter().map(|c| c.norm_squared()));
    let y_inv_half = ea.map(|l| (state.u - l).powf(-0.5));
    let k_mat = symmetrize(&(&y_inv_half * inst.mbar() * &y_inv_half));
    let ek = eig_sym(&k_mat)?;
    let rho_upper = ek.values.sum();
    let sum_upper = upper.sum();
    if (sum_upper - rho_upper).abs() > 1e-8 * rho_upper.abs().max(1e-300) {
        return Err(Error::Numerical(format!(
            "upper resistances sum to {sum_upper} but tr[(uI - A)^-1 M̄] = {rho_upper}"
        )));
    }

    let c = lower_block(&state.added, proj);
    let ec = eig_sym(&c)?;
    if !(ec.min() > state.ell) {
        return Err(Error::BarrierViolation(format!(
            "λ_min(B|S') = {} reached the lower barrier {}",
            ec.min(),
            state.ell
        )));
    }
    let mut lw = ec.vectors.transpose() * &proj.embedded;
    for r in 0..ec.dim() {
        lw.row_mut(r).scale_mut((ec.values[r] - state.ell).powf(-0.5));
    }
    let lower = DVector::from_iterator(lw.ncols(), lw.column_iter().map(|c| c.norm_squared()));
    let rho_lower: f64 = ec.values.iter().map(|&l| 1.0 / (l - state.ell)).sum();
    let sum_lower = lower.sum();
    if (sum_lower - rho_lower).abs() > 1e-8 * rho_lower.abs().max(1e-300) {
        return Err(Error::Numerical(format!(
            "lower resistances sum to {sum_lower} but the restricted trace is {rho_lower}"
        )));
    }
    Ok(Resistances {
        upper,
        lower,
        rho_upper,
        rho_lower,
        upper_max: ek.max(),
        upper_min: ek.min(),
        lower_max: 1.0 / (ec.min() - state.ell),
        approximate: false,
    })
}

/// The per-iteration sample count before and after flooring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleCount {
    pub value: f64,
    pub count: usize,
}

/// `N_j` from the resistance summaries; `base_const` is the `4` in the
/// denominator of the bracketed base.
pub fn sample_count(res: &Resistances, eps: f64, q: f64, base_const: f64) -> SampleCount {
    let rho = res.rho();
    let base = eps / (base_const * rho) * res.upper_min * res.upper_max / res.rho_upper;
    let value = base.powf(2.0 * eps / q) * rho * (1.0 / res.upper_max).min(1.0 / res.lower_max);
    let count = if value.is_finite() && value >= 1.0 {
        value.floor().min(usize::MAX as f64) as usize
    } else {
        1
    };
    SampleCount { value, count }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::pinv_psd;
    use crate::graph::families;
    use crate::rng;
    use crate::sparsify::{compute_projection, setup_instance, spectral_instance, ProjectionMode};
    use nalgebra::dmatrix;
    use rand::Rng;

    fn instance(seed: u64) -> SparsifyInstance {
        let mut r = rng::stream(seed, 21);
        let g = families::connected_gnp(8, 0.3, &mut r);
        let cands: Vec<_> = (0..8)
            .flat_map(|u| (u + 1..8).map(move |v| (u, v)))
            .filter(|&(u, v)| !g.has_edge(u, v))
            .map(|(u, v)| (u, v, 0.2 + r_weight(u, v)))
            .collect();
        setup_instance(&g, &cands, 1e-8, 2).unwrap()
    }

    fn r_weight(u: usize, v: usize) -> f64 {
        ((u * 7 + v * 3) % 5) as f64 / 5.0
    }

    fn random_state(inst: &SparsifyInstance, seed: u64) -> SparsifyState {
        let mut r = rng::stream(seed, 22);
        let mut s = SparsifyState::initial(inst, 0.0, -0.5);
        for _ in 0..6 {
            let i = r.gen_range(0..inst.candidate_count());
            s.add_scaled(inst, i, r.gen_range(0.05..0.4));
        }
        let lmax = eig_sym(&s.a).unwrap().max();
        s.u = lmax + r.gen_range(0.2..1.5);
        s
    }

    #[test]
    fn potential_examples() {
        let a = DMatrix::<f64>::zeros(5, 5);
        assert!((upper_potential(&a, 2.0, 5, 10.0).unwrap() - 5.0 * 2f64.powi(-10)).abs() < 1e-18);
        let a = dmatrix![1.0, 0.0, 0.0; 0.0, 0.0, 0.0; 0.0, 0.0, 0.0];
        assert!((upper_potential(&a, 2.0, 1, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(upper_potential(&a, 1.0, 1, 2.0), Err(Error::BarrierViolation(_))));
        let k = 3usize;
        let lam = 7.0;
        let ell = -2.0 * k as f64 / lam;
        let b = DMatrix::<f64>::zeros(k, k);
        let want = k as f64 * (lam / (2.0 * k as f64)).powf(10.0);
        assert!((lower_potential(&b, ell, 10.0).unwrap() - want).abs() < 1e-9 * want);
        let b1 = dmatrix![0.7];
        assert!((lower_potential(&b1, 0.2, 3.0).unwrap() - 0.5f64.powi(-3)).abs() < 1e-12);
    }

    #[test]
    fn upper_potential_matches_projector_form() {
        let mut r = rng::stream(4, 0);
        for _ in 0..10 {
            let b = DMatrix::from_fn(6, 6, |_, _| r.gen_range(-1.0..1.0));
            let a = &b * b.transpose();
            let e = eig_sym(&a).unwrap();
            let u = e.max() + 0.5;
            let t = 3;
            let top = e.vectors.columns(3, 3).into_owned();
            let p = &top * top.transpose();
            let y = DMatrix::<f64>::identity(6, 6) * u - &a;
            let form = pinv_psd(&(&p * y * &p), 10.0).unwrap().trace();
            let got = upper_potential(&a, u, t, 10.0).unwrap();
            assert!((got - form).abs() <= 1e-9 * form);
        }
    }

    #[test]
    fn resistances_match_dense_forms() {
        for seed in 0..5 {
            let inst = instance(seed);
            let proj = compute_projection(&inst, ProjectionMode::Exact, 0).unwrap();
            let s = random_state(&inst, seed);
            let res = relative_resistances(&inst, &proj, &s).unwrap();
            let d = inst.dim();
            let y = DMatrix::<f64>::identity(d, d) * s.u - &s.a;
            let y_inv = y.clone().try_inverse().unwrap();
            let pv = proj.projector();
            // (P_V (A - X - ℓ M̄) P_V)^†
            let g = &pv * (&s.added - inst.mbar() * s.ell) * &pv;
            let g_pinv = pinv_psd(&g, 1.0).unwrap();
            for i in 0..inst.vector_count() {
                let v = inst.vectors().column(i).into_owned();
                let up = (v.transpose() * &y_inv * &v)[(0, 0)];
                assert!((res.upper[i] - up).abs() <= 1e-9 * up.abs().max(1e-12));
                let lo = (v.transpose() * &pv * &g_pinv * &pv * &v)[(0, 0)];
                assert!((res.lower[i] - lo).abs() <= 1e-7 * lo.abs().max(1e-10));
            }
            let tr = (y_inv * inst.mbar()).trace();
            assert!((res.rho_upper - tr).abs() <= 1e-9 * tr);
        }
    }

    #[test]
    fn vectors_orthogonal_to_subspace_have_no_lower_term() {
        let inst = spectral_instance(&families::complete(4), 1e-8).unwrap();
        let proj = compute_projection(&inst, ProjectionMode::Exact, 0).unwrap();
        let s = SparsifyState::initial(&inst, 2.0, -2.0);
        let res = relative_resistances(&inst, &proj, &s).unwrap();
        // With V = I every direction lies in S', so each lower term is ‖v‖² / 2.
        for i in 0..inst.vector_count() {
            let n2 = inst.vectors().column(i).norm_squared();
            assert!((res.lower[i] - n2 / 2.0).abs() < 1e-12);
        }
        let inst = instance(3);
        let proj = compute_projection(&inst, ProjectionMode::Exact, 0).unwrap();
        let s = SparsifyState::initial(&inst, 2.0, -0.5);
        let res = relative_resistances(&inst, &proj, &s).unwrap();
        let pv = proj.projector();
        for i in 0..inst.vector_count() {
            let v = inst.vectors().column(i).into_owned();
            if (&pv * &v).norm() < 1e-14 {
                assert!(res.lower[i].abs() < 1e-20);
            }
        }
    }

    #[test]
    fn sample_count_base_is_at_most_one() {
        for seed in 0..5 {
            let inst = instance(seed);
            let proj = compute_projection(&inst, ProjectionMode::Exact, 0).unwrap();
            let s = random_state(&inst, seed);
            let res = relative_resistances(&inst, &proj, &s).unwrap();
            let n = sample_count(&res, 0.05, 10.0, 4.0);
            let cap = res.rho() * (1.0 / res.upper_max).min(1.0 / res.lower_max);
            assert!(n.value <= cap * (1.0 + 1e-12));
            assert!(n.count >= 1);
        }
    }

    #[test]
    fn spectral_first_iteration_count_two_ways() {
        let inst = spectral_instance(&families::complete(8), 1e-8).unwrap();
        let proj = compute_projection(&inst, ProjectionMode::Exact, 0).unwrap();
        let s = SparsifyState::initial(&inst, 2.0, -2.0);
        let res = relative_resistances(&inst, &proj, &s).unwrap();
        let n = sample_count(&res, 0.05, 10.0, 4.0);
        // With A = 0 and M̄ = I: every eigenvalue of (uI - A)^-1 M̄ is 1/2,
        // the lower block is 1/2 per direction, and ρ = d.
        let d: f64 = 7.0;
        let rho = d / 2.0 + d / 2.0;
        let base = 0.05 / (4.0 * rho) * 0.5 * 0.5 / (d / 2.0);
        let want = base.powf(0.01) * rho * 2.0;
        assert!((n.value - want).abs() <= 1e-7 * want);
        assert!((res.rho() - rho).abs() <= 1e-7 * rho);
    }
}
