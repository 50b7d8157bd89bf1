use nalgebra::{DMatrix, DVector};

use super::SdpInstance;
use crate::error::{Error, Result};
use crate::graph::{add_edge_laplacian, center_projector};

/// The fixed block-diagonal matrices `E`, `Π` and `N = E^{1/2} Π E^{1/2}`.
#[derive(Debug, Clone)]
pub struct BlockMatrices {
    pub e: DMatrix<f64>,
    pub pi: DMatrix<f64>,
    pub n: DMatrix<f64>,
}

fn block_diag(a: &DMatrix<f64>, b: f64, c: &DVector<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let m = c.len();
    let mut out = DMatrix::zeros(n + 1 + m, n + 1 + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out[(n, n)] = b;
    for i in 0..m {
        out[(n + 1 + i, n + 1 + i)] = c[i];
    }
    out
}

pub fn assemble_blocks(inst: &SdpInstance) -> BlockMatrices {
    let n = inst.n();
    let m = inst.m();
    let delta = inst.delta();
    let p = center_projector(n);
    let ones = DVector::from_element(m, 1.0);
    BlockMatrices {
        e: block_diag(&(DMatrix::identity(n, n) * delta), m as f64, &ones),
        pi: block_diag(&p, 1.0, &ones),
        n: block_diag(&(p * delta), m as f64, &ones),
    }
}

/// `M(λ, w) = Diag(A, B, C)` together with the value `V(λ, w) = λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossMatrix {
    pub a: DMatrix<f64>,
    pub b: f64,
    pub c: DVector<f64>,
    pub value: f64,
}

impl LossMatrix {
    pub fn zeros(n: usize, m: usize) -> Self {
        LossMatrix {
            a: DMatrix::zeros(n, n),
            b: 0.0,
            c: DVector::zeros(m),
            value: 0.0,
        }
    }

    pub fn add_assign(&mut self, other: &LossMatrix) {
        self.a += &other.a;
        self.b += other.b;
        self.c += &other.c;
        self.value += other.value;
    }

    pub fn scaled(&self, s: f64) -> LossMatrix {
        LossMatrix {
            a: &self.a * s,
            b: self.b * s,
            c: &self.c * s,
            value: self.value * s,
        }
    }

    /// The full `(n+1+m)`-square block-diagonal matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        block_diag(&self.a, self.b, &self.c)
    }
}

pub fn loss_matrix(inst: &SdpInstance, lambda: f64, w: &DVector<f64>) -> Result<LossMatrix> {
    let m = inst.m();
    if w.len() != m {
        return Err(Error::Input(format!(
            "weight vector has length {}, expected {m}",
            w.len()
        )));
    }
    if w.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::Input("candidate weights must be nonnegative".into()));
    }
    let n = inst.n();
    let mut a = inst.base_laplacian().clone();
    for (i, &(u, v)) in inst.candidates().edges().iter().enumerate() {
        if w[i] != 0.0 {
            add_edge_laplacian(&mut a, u, v, w[i]);
        }
    }
    a -= center_projector(n) * (lambda * inst.delta());
    Ok(LossMatrix {
        a,
        b: inst.k() as f64 - w.sum(),
        c: w.map(|x| 1.0 - x),
        value: lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::power_psd;
    use crate::graph::{families, CandidateSet, WeightedGraph};

    fn small() -> SdpInstance {
        let g = WeightedGraph::new(2, []).unwrap();
        let c = CandidateSet::new(&g, &[(0, 1)], Some(1.0)).unwrap();
        SdpInstance::new(g, c, 1, 0.5).unwrap()
    }

    #[test]
    fn n2_blocks() {
        let b = assemble_blocks(&small());
        let want = block_diag(&center_projector(2), 1.0, &DVector::from_element(1, 1.0));
        assert_eq!(b.n, want);
        assert!((&b.pi * &b.pi - &b.pi).abs().max() < 1e-15);
    }

    #[test]
    fn n_equals_sqrt_e_pi_sqrt_e() {
        let g = families::path(5);
        let c = CandidateSet::complement(&g, None).unwrap();
        let inst = SdpInstance::new(g, c, 2, 0.3).unwrap();
        let b = assemble_blocks(&inst);
        let s = power_psd(&b.e, 0.5).unwrap();
        let prod = &s * &b.pi * &s;
        assert!((prod - &b.n).norm() <= 1e-10 * b.n.norm());
    }

    #[test]
    fn loss_examples() {
        let g = families::path(4);
        let c = CandidateSet::complement(&g, None).unwrap();
        let inst = SdpInstance::new(g.clone(), c, 2, 0.3).unwrap();
        let m = inst.m();
        let l0 = loss_matrix(&inst, 0.0, &DVector::zeros(m)).unwrap();
        assert_eq!(l0.a, g.laplacian());
        assert_eq!(l0.b, 2.0);
        assert_eq!(l0.c, DVector::from_element(m, 1.0));
        let l1 = loss_matrix(&inst, 0.0, &DVector::from_element(m, 1.0)).unwrap();
        assert!((l1.a - families::complete(4).laplacian()).abs().max() < 1e-15);
        assert_eq!(l1.b, 2.0 - m as f64);
        let l2 = loss_matrix(&inst, 0.7, &DVector::zeros(m)).unwrap();
        assert_eq!(l2.value, 0.7);
        let d = l2.to_dense();
        assert!((d.transpose() - &d).abs().max() == 0.0);
        assert!(loss_matrix(&inst, 0.0, &DVector::from_element(m, -1.0)).is_err());
    }
}
