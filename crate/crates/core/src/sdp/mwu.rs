use nalgebra::{DMatrix, DVector};

use super::LossMatrix;
use crate::dense::{complement_basis, eig_sym};
use crate::error::{Error, Result};

/// A normalized candidate dual point `Diag(Z, v, β)` and the loss sum it came from.
#[derive(Debug, Clone)]
pub struct SdpIterate {
    pub z: DMatrix<f64>,
    /// `P_⊥ Z P_⊥`, stored separately from `Z`.
    pub z_perp: DMatrix<f64>,
    pub v: f64,
    pub beta: DVector<f64>,
    pub loss_sum: LossMatrix,
}

impl SdpIterate {
    pub fn from_parts(z: DMatrix<f64>, v: f64, beta: DVector<f64>) -> Self {
        let (n, m) = (z.nrows(), beta.len());
        let p = crate::graph::center_projector(n);
        SdpIterate {
            z_perp: crate::dense::symmetrize(&(&p * &z * &p)),
            z,
            v,
            beta,
            loss_sum: LossMatrix::zeros(n, m),
        }
    }

    /// `Diag(Z, v, β) • N`.
    pub fn normalization(&self, delta: f64) -> f64 {
        delta * self.z_perp.trace() + self.beta.len() as f64 * self.v + self.beta.sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        LossMatrix {
            a: self.z.clone(),
            b: self.v,
            c: self.beta.clone(),
            value: 0.0,
        }
        .to_dense()
    }
}

/// `U_ε(loss_sum / 2ρ)` split into its `(Z, v, β)` blocks.
///
/// Exponents are shifted by their maximum before exponentiation; the shift
/// cancels in the normalizing ratio. With no candidate edges the `v` block has
/// zero weight in `N` and is fixed at zero.
pub fn mwu_update(loss_sum: &LossMatrix, eps: f64, rho: f64, delta: f64) -> Result<SdpIterate> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Input(format!("ε must lie in (0, 1), got {eps}")));
    }
    if !(rho > 0.0 && delta > 0.0) {
        return Err(Error::Input("ρ and Δ must be positive".into()));
    }
    let n = loss_sum.a.nrows();
    let m = loss_sum.c.len();
    let ln = (1.0 - eps).ln();
    let scale = 1.0 / (2.0 * rho);

    let q = complement_basis(n);
    let s_perp = q.transpose() * &loss_sum.a * &q * (scale / delta);
    let eig = eig_sym(&s_perp)?;
    let z_exp: Vec<f64> = eig.values.iter().map(|&x| ln * x).collect();
    let one_exp = ln * scale / delta * loss_sum.a.sum() / n as f64;
    let v_exp = if m > 0 {
        Some(ln * scale * loss_sum.b / m as f64)
    } else {
        None
    };
    let beta_exp: Vec<f64> = loss_sum.c.iter().map(|&c| ln * scale * c).collect();

    let shift = z_exp
        .iter()
        .chain(beta_exp.iter())
        .chain(v_exp.iter())
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);

    let mut w = eig.vectors.clone();
    let mut denom = 0.0;
    for (j, &e) in z_exp.iter().enumerate() {
        let s = (e - shift).exp();
        denom += s;
        w.column_mut(j).scale_mut(s.sqrt());
    }
    let qw = &q * w;
    let mut z_perp = &qw * qw.transpose();
    let one = (one_exp - shift).exp() / n as f64;
    let mut z = z_perp.add_scalar(one);

    let v_weight = v_exp.map(|e| (e - shift).exp()).unwrap_or(0.0);
    denom += v_weight;
    let beta_weight: Vec<f64> = beta_exp.iter().map(|&e| (e - shift).exp()).collect();
    denom += beta_weight.iter().sum::<f64>();
    if !(denom > 0.0 && denom.is_finite()) {
        return Err(Error::Numerical(format!("normalizer is {denom}")));
    }

    z /= delta * denom;
    z_perp /= delta * denom;
    let v = if m > 0 { v_weight / (m as f64 * denom) } else { 0.0 };
    let beta = DVector::from_iterator(m, beta_weight.into_iter().map(|b| b / denom));
    Ok(SdpIterate {
        z,
        z_perp,
        v,
        beta,
        loss_sum: loss_sum.clone(),
    })
}
