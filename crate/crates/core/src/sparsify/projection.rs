use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::SparsifyInstance;
use crate::dense::{eig_sym, symmetrize};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionMode {
    Exact,
    Approx,
}

/// The subspace `S'` and the whitening data derived from it.
#[derive(Debug, Clone)]
pub struct ProjectionData {
    /// `d × k` with orthonormal columns.
    pub v: DMatrix<f64>,
    /// `V^T M̄ V`.
    pub s: DMatrix<f64>,
    /// `(V^T M̄ V)^{-1/2}`.
    pub s_inv_half: DMatrix<f64>,
    /// `(V^T M̄ V)^{-1/2} V^T v_i` for every sampleable vector, as columns.
    pub embedded: DMatrix<f64>,
    /// `λ_{k+1}(X)`, absent when `V` spans the whole working space.
    pub lambda_star: Option<f64>,
    /// Minimum Rayleigh quotient of `X` on the orthogonal complement of `V`.
    pub residual_min: Option<f64>,
    /// The mode that produced `V` after any fallback.
    pub mode: ProjectionMode,
    pub fell_back: bool,
}

impl ProjectionData {
    pub fn k(&self) -> usize {
        self.v.ncols()
    }

    /// `P_V = V V^T`.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.v * self.v.transpose()
    }
}

/// Chooses `V` for an instance.
pub trait ProjectionStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn project(&self, inst: &SparsifyInstance, seed: u64) -> Result<ProjectionData>;
}

/// Bottom-`k` eigenvectors of `X`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactProjection;

/// Subspace iteration on `M̄`, checked against the exact residual bound.
#[derive(Debug, Clone, Copy)]
pub struct ApproxProjection {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for ApproxProjection {
    fn default() -> Self {
        ApproxProjection {
            max_iters: 500,
            tol: 1e-10,
        }
    }
}

impl ProjectionStrategy for ExactProjection {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn project(&self, inst: &SparsifyInstance, _seed: u64) -> Result<ProjectionData> {
        exact(inst)
    }
}

impl ProjectionStrategy for ApproxProjection {
    fn name(&self) -> &'static str {
        "approx"
    }

    fn project(&self, inst: &SparsifyInstance, seed: u64) -> Result<ProjectionData> {
        check_k(inst)?;
        let d = inst.dim();
        let k = inst.k();
        if k == d {
            return exact(inst);
        }
        let mut r = rng::stream(seed, 0x5052);
        let mut basis = DMatrix::from_fn(d, k, |_, _| StandardNormal.sample(&mut r));
        basis = orthonormalize(&basis)?;
        for _ in 0..self.max_iters {
            let next = orthonormalize(&(inst.mbar() * &basis))?;
            let overlap = next.transpose() * &basis;
            let gap = k as f64 - overlap.norm_squared();
            basis = next;
            if gap.abs() < self.tol {
                break;
            }
        }
        let ex = eig_sym(inst.x())?;
        let lambda_star = ex.values[k];
        let data = finish(inst, basis, Some(lambda_star), ProjectionMode::Approx, false)?;
        match data.residual_min {
            Some(r) if r >= lambda_star / 2.0 - 1e-12 => Ok(data),
            _ => {
                let mut e = exact(inst)?;
                e.fell_back = true;
                Ok(e)
            }
        }
    }
}

/// `V` by the requested mode; approximate mode falls back to exact when the
/// residual check fails.
pub fn compute_projection(inst: &SparsifyInstance, mode: ProjectionMode, seed: u64) -> Result<ProjectionData> {
    match mode {
        ProjectionMode::Exact => ExactProjection.project(inst, seed),
        ProjectionMode::Approx => ApproxProjection::default().project(inst, seed),
    }
}

fn check_k(inst: &SparsifyInstance) -> Result<()> {
    if inst.k() == 0 || inst.k() > inst.dim() {
        return Err(Error::Input(format!(
            "k = {} must lie in 1..={} for an instance on {} vertices",
            inst.k(),
            inst.dim(),
            inst.n()
        )));
    }
    Ok(())
}

fn exact(inst: &SparsifyInstance) -> Result<ProjectionData> {
    check_k(inst)?;
    let d = inst.dim();
    let k = inst.k();
    let ex = eig_sym(inst.x())?;
    let v = ex.vectors.columns(0, k).into_owned();
    let lambda_star = if k < d { Some(ex.values[k]) } else { None };
    finish(inst, v, lambda_star, ProjectionMode::Exact, false)
}

fn orthonormalize(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let qr = a.clone().qr();
    let q = qr.q();
    if q.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("orthonormalization produced non-finite entries".into()));
    }
    Ok(q)
}

fn finish(
    inst: &SparsifyInstance,
    v: DMatrix<f64>,
    lambda_star: Option<f64>,
    mode: ProjectionMode,
    fell_back: bool,
) -> Result<ProjectionData> {
    let d = inst.dim();
    let k = v.ncols();
    let s = symmetrize(&(v.transpose() * inst.mbar() * &v));
    let es = eig_sym(&s)?;
    if es.min() <= 0.0 {
        return Err(Error::Numerical(format!(
            "V^T M̄ V is singular (min eigenvalue {:e})",
            es.min()
        )));
    }
    let s_inv_half = es.map(|x| x.powf(-0.5));
    let embedded = &s_inv_half * v.transpose() * inst.vectors();
    let residual_min = if k < d {
        let p = DMatrix::<f64>::identity(d, d) - &v * v.transpose();
        let ep = eig_sym(&p)?;
        let comp = ep.vectors.columns(k, d - k).into_owned();
        let restricted = symmetrize(&(comp.transpose() * inst.x() * &comp));
        Some(eig_sym(&restricted)?.min())
    } else {
        None
    };
    Ok(ProjectionData {
        v,
        s,
        s_inv_half,
        embedded,
        lambda_star,
        residual_min,
        mode,
        fell_back,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;
    use crate::sparsify::{setup_instance, spectral_instance};

    fn instance(seed: u64, k: usize) -> SparsifyInstance {
        let mut r = rng::stream(seed, 9);
        let g = families::connected_gnp(10, 0.25, &mut r);
        let cands: Vec<_> = (0..10)
            .flat_map(|u| (u + 1..10).map(move |v| (u, v)))
            .filter(|&(u, v)| !g.has_edge(u, v))
            .map(|(u, v)| (u, v, 0.3))
            .collect();
        setup_instance(&g, &cands, 1e-8, k).unwrap()
    }

    #[test]
    fn exact_projection_is_orthonormal_and_whitens() {
        let inst = instance(1, 3);
        let p = compute_projection(&inst, ProjectionMode::Exact, 0).unwrap();
        let vtv = p.v.transpose() * &p.v;
        assert!((vtv - DMatrix::<f64>::identity(3, 3)).abs().max() < 1e-8);
        let ez = &p.embedded * p.embedded.transpose();
        assert!((ez - DMatrix::<f64>::identity(3, 3)).abs().max() < 1e-7);
        assert!((p.residual_min.unwrap() - p.lambda_star.unwrap()).abs() < 1e-9);
    }

    #[test]
    fn approx_projection_meets_the_residual_bound() {
        for seed in 0..5 {
            let inst = instance(seed, 2);
            let p = compute_projection(&inst, ProjectionMode::Approx, seed).unwrap();
            let vtv = p.v.transpose() * &p.v;
            assert!((vtv - DMatrix::<f64>::identity(2, 2)).abs().max() < 1e-8);
            assert!(p.residual_min.unwrap() >= p.lambda_star.unwrap() / 2.0 - 1e-12);
        }
    }

    #[test]
    fn spectral_mode_projects_onto_everything() {
        let inst = spectral_instance(&families::complete(5), 1e-8).unwrap();
        let p = compute_projection(&inst, ProjectionMode::Exact, 0).unwrap();
        assert_eq!(p.k(), 4);
        assert!(p.lambda_star.is_none());
        assert!((p.projector() - DMatrix::<f64>::identity(4, 4)).abs().max() < 1e-12);
    }
}
