use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{centered_trace, edge_dot, loss_matrix, SdpInstance};
use crate::dense::{eig_sym, min_eig_on_complement};

/// A feasibility verdict; `reason` names the first failed constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub ok: bool,
    pub reason: Option<String>,
}

impl Verdict {
    fn pass() -> Self {
        Verdict {
            ok: true,
            reason: None,
        }
    }

    fn fail(reason: &str) -> Self {
        Verdict {
            ok: false,
            reason: Some(reason.to_string()),
        }
    }
}

/// Checks `(λ, w)` against the primal program at the instance's `γ`.
pub fn verify_primal_feasible(inst: &SdpInstance, lambda: f64, w: &DVector<f64>, tol: f64) -> Verdict {
    if w.len() != inst.m() {
        return Verdict::fail("shape");
    }
    if w.iter().any(|&x| !(x >= -tol && x <= 1.0 + tol)) {
        return Verdict::fail("box");
    }
    if w.sum() > inst.k() as f64 + tol {
        return Verdict::fail("budget");
    }
    if lambda < inst.gamma() - tol {
        return Verdict::fail("lambda");
    }
    let clipped = w.map(|x| x.max(0.0));
    let a = match loss_matrix(inst, lambda, &clipped) {
        Ok(l) => l.a,
        Err(_) => return Verdict::fail("shape"),
    };
    match min_eig_on_complement(&a) {
        Ok(x) if x >= -tol => Verdict::pass(),
        _ => Verdict::fail("psd"),
    }
}

/// Checks `(Z, v, β)` against the dual program at the instance's `γ`.
pub fn verify_dual_feasible(inst: &SdpInstance, z: &DMatrix<f64>, v: f64, beta: &DVector<f64>, tol: f64) -> Verdict {
    if z.nrows() != inst.n() || z.ncols() != inst.n() || beta.len() != inst.m() {
        return Verdict::fail("shape");
    }
    match eig_sym(z) {
        Ok(e) if e.min() >= -tol => {}
        _ => return Verdict::fail("psd"),
    }
    if (inst.delta() * centered_trace(z) - 1.0).abs() > tol {
        return Verdict::fail("normalization");
    }
    if v < -tol || beta.iter().any(|&b| b < -tol) {
        return Verdict::fail("sign");
    }
    for (i, &(a, b)) in inst.candidates().edges().iter().enumerate() {
        if edge_dot(z, a, b) > v + beta[i] + tol {
            return Verdict::fail("edge");
        }
    }
    let lg: f64 = inst
        .base()
        .edges()
        .iter()
        .map(|e| e.w * edge_dot(z, e.u, e.v))
        .sum();
    let objective = lg + inst.k() as f64 * v + beta.sum();
    if objective >= inst.gamma() + tol {
        return Verdict::fail("objective");
    }
    Verdict::pass()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{center_projector, families, CandidateSet};

    fn k4_minus_edge() -> SdpInstance {
        let g = families::complete(4);
        let g = crate::graph::WeightedGraph::unit(
            4,
            g.edges().iter().filter(|e| !(e.u == 0 && e.v == 1)).map(|e| (e.u, e.v)),
        )
        .unwrap();
        let c = CandidateSet::new(&g, &[(0, 1)], None).unwrap();
        SdpInstance::new(g, c, 1, 0.2).unwrap()
    }

    #[test]
    fn primal_box_and_lambda() {
        let inst = k4_minus_edge();
        let v = verify_primal_feasible(&inst, 0.2, &DVector::from_element(1, 1.5), 1e-9);
        assert_eq!(v.reason.as_deref(), Some("box"));
        let v = verify_primal_feasible(&inst, 0.1, &DVector::zeros(1), 1e-9);
        assert_eq!(v.reason.as_deref(), Some("lambda"));
    }

    #[test]
    fn primal_eigen_comparison() {
        let inst = k4_minus_edge();
        // λ₂(K4 - e) = 2 and Δ = 3 once the candidate is counted.
        let l2 = 2.0;
        let good = verify_primal_feasible(&inst, l2 / inst.delta(), &DVector::zeros(1), 1e-9);
        assert!(good.ok);
        let bad = verify_primal_feasible(&inst, 2.0 * l2 / inst.delta(), &DVector::zeros(1), 1e-9);
        assert_eq!(bad.reason.as_deref(), Some("psd"));
    }

    #[test]
    fn dual_normalization() {
        let inst = k4_minus_edge();
        assert_eq!(
            verify_dual_feasible(&inst, &DMatrix::zeros(4, 4), 0.0, &DVector::zeros(1), 1e-9)
                .reason
                .as_deref(),
            Some("normalization")
        );
        let z = center_projector(4) / (3.0 * inst.delta());
        let ok = verify_dual_feasible(&inst, &z, 1.0, &DVector::zeros(1), 1e-9);
        assert_eq!(ok.reason.as_deref(), Some("objective"));
        let twice = verify_dual_feasible(&inst, &(&z * 2.0), 0.0, &DVector::zeros(1), 1e-9);
        assert_eq!(twice.reason.as_deref(), Some("normalization"));
    }
}
