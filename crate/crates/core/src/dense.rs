//! Dense symmetric linear algebra: eigendecompositions, spectral matrix
//! functions, pseudoinverse powers and Johnson–Lindenstrauss sketches.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigDecomposition {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `V diag(f(λ)) V^T`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> DMatrix<f64> {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = f(self.values[j]);
            scaled.column_mut(j).scale_mut(s);
        }
        scaled * self.vectors.transpose()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.map(|x| x)
    }
}

/// `(A + A^T) / 2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Full spectrum of the symmetric part of `a`, ascending.
pub fn eig_sym(a: &DMatrix<f64>) -> Result<EigDecomposition> {
    if !a.is_square() {
        return Err(Error::Input(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("matrix has non-finite entries".into()));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(EigDecomposition {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let sym = symmetrize(a);
    let se = SymmetricEigen::new(sym.clone());
    let (mut values, mut vectors) = (se.eigenvalues, se.eigenvectors);
    let scale = sym.amax();
    let mut residual = &sym * &vectors;
    for j in 0..n {
        let lj = values[j];
        residual.column_mut(j).axpy(-lj, &vectors.column(j), 1.0);
    }
    if residual.amax() > 64.0 * n as f64 * f64::EPSILON * scale {
        (values, vectors) = jacobi_polish(&sym, vectors);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let sorted = DVector::from_iterator(n, order.iter().map(|&i| values[i]));
    let mut cols = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        cols.set_column(dst, &vectors.column(src));
    }
    Ok(EigDecomposition {
        values: sorted,
        vectors: cols,
    })
}

/// Diagonalizes `V^T A V` by cyclic Jacobi rotations, rotating a pair only
/// while its off-diagonal entry is large relative to its diagonal entries.
fn jacobi_polish(a: &DMatrix<f64>, mut v: DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut b = symmetrize(&(v.transpose() * a * &v));
    let floor = f64::MIN_POSITIVE / f64::EPSILON;
    for _ in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let bpq = b[(p, q)];
                let bound = f64::EPSILON * (b[(p, p)] * b[(q, q)]).abs().sqrt();
                if bpq.abs() <= bound.max(floor) {
                    continue;
                }
                rotated = true;
                let theta = (b[(q, q)] - b[(p, p)]) / (2.0 * bpq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (bkp, bkq) = (b[(k, p)], b[(k, q)]);
                    b[(k, p)] = c * bkp - s * bkq;
                    b[(k, q)] = s * bkp + c * bkq;
                }
                for k in 0..n {
                    let (bpk, bqk) = (b[(p, k)], b[(q, k)]);
                    b[(p, k)] = c * bpk - s * bqk;
                    b[(q, k)] = s * bpk + c * bqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (b.diagonal(), v)
}

/// Eigenvalues below this are treated as zero by pseudoinverse consumers.
pub fn rank_tolerance(n: usize, lambda_max: f64) -> f64 {
    n as f64 * f64::EPSILON * lambda_max.abs()
}

/// `A^{†p}`: the pseudoinverse raised to `p`, computed on the spectrum.
pub fn pinv_psd(a: &DMatrix<f64>, power: f64) -> Result<DMatrix<f64>> {
    let e = eig_sym(a)?;
    pinv_from_eig(&e, power)
}

pub fn pinv_from_eig(e: &EigDecomposition, power: f64) -> Result<DMatrix<f64>> {
    let n = e.dim();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let lmax = e.max().max(0.0);
    if e.min() < -1e-8 * lmax {
        return Err(Error::NotPsd { min_eig: e.min() });
    }
    let tol = rank_tolerance(n, lmax);
    Ok(e.map(|x| if x > tol { x.powf(-power) } else { 0.0 }))
}

/// `A^p` for PSD `A` (negative round-off eigenvalues clamped to zero).
pub fn power_psd(a: &DMatrix<f64>, power: f64) -> Result<DMatrix<f64>> {
    let e = eig_sym(a)?;
    let lmax = e.max().max(0.0);
    if e.min() < -1e-8 * lmax {
        return Err(Error::NotPsd { min_eig: e.min() });
    }
    Ok(e.map(|x| x.max(0.0).powf(power)))
}

/// `base^A = exp(ln(base) A)`.
pub fn base_power_psd(a: &DMatrix<f64>, base: f64) -> Result<DMatrix<f64>> {
    if !(base > 0.0 && base < 1.0) {
        return Err(Error::Input(format!("base must lie in (0, 1), got {base}")));
    }
    let ln = base.ln();
    Ok(eig_sym(a)?.map(|x| (ln * x).exp()))
}

/// Orthonormal basis (columns) of the complement of the all-ones vector.
pub fn complement_basis(n: usize) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(n, n.saturating_sub(1));
    for j in 1..n {
        let s = 1.0 / ((j * (j + 1)) as f64).sqrt();
        for i in 0..j {
            q[(i, j - 1)] = s;
        }
        q[(j, j - 1)] = -(j as f64) * s;
    }
    q
}

/// Minimum Rayleigh quotient of `A` over vectors orthogonal to the all-ones vector.
pub fn min_eig_on_complement(a: &DMatrix<f64>) -> Result<f64> {
    let n = a.nrows();
    if n <= 1 {
        return Ok(0.0);
    }
    let q = complement_basis(n);
    let r = q.transpose() * a * &q;
    Ok(eig_sym(&r)?.min())
}

/// `A • B = tr(A^T B)`.
pub fn frob(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// How the sketching matrix is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SketchMode {
    Rademacher,
    /// Skips randomness; requires `target_dim` to equal the row width.
    Identity,
}

/// `rows * S` with `S` a `p × d` matrix of `±1/√d` entries.
pub fn jl_sketch(rows: &DMatrix<f64>, target_dim: usize, seed: u64) -> Result<DMatrix<f64>> {
    jl_sketch_with(rows, target_dim, seed, SketchMode::Rademacher)
}

pub fn jl_sketch_with(
    rows: &DMatrix<f64>,
    target_dim: usize,
    seed: u64,
    mode: SketchMode,
) -> Result<DMatrix<f64>> {
    if target_dim == 0 {
        return Err(Error::Input("sketch dimension must be at least 1".into()));
    }
    match mode {
        SketchMode::Identity => {
            if target_dim != rows.ncols() {
                return Err(Error::Input(format!(
                    "identity sketch needs target_dim = {}, got {target_dim}",
                    rows.ncols()
                )));
            }
            Ok(rows.clone())
        }
        SketchMode::Rademacher => Ok(rows * rademacher(rows.ncols(), target_dim, seed)),
    }
}

/// A `p × d` matrix of independent `±1/√d` entries.
pub fn rademacher(p: usize, d: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng::stream(seed, 0x4a4c);
    let s = 1.0 / (d as f64).sqrt();
    DMatrix::from_fn(p, d, |_, _| if r.gen::<bool>() { s } else { -s })
}

/// Sketch width giving `(1 ± eps)` distortion for `count` points with high probability.
pub fn jl_dimension(count: usize, eps: f64) -> usize {
    let c = 8.0;
    ((c * (count.max(2) as f64).ln()) / (eps * eps)).ceil() as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_eigenvalue_cluster_keeps_its_eigenvectors() {
        let s = DMatrix::from_row_slice(
            3,
            3,
            &[
                4.528023499056376e-1,
                -2.5103327739475438e-17,
                9.867843306152175e-16,
                -2.5103327739475438e-17,
                4.661217288262483e-9,
                6.832686007314839e-16,
                9.867843306152175e-16,
                6.832686007314839e-16,
                3.8672953812038466e-9,
            ],
        );
        let e = eig_sym(&s).unwrap();
        assert!((e.reconstruct() - &s).amax() < 1e-20);
        assert!(e.vectors[(2, 0)].abs() > 1.0 - 1e-9);
        assert!(e.vectors[(1, 1)].abs() > 1.0 - 1e-9);
        let inv_half = e.map(|x| x.powf(-0.5));
        let id = &inv_half * &s * &inv_half;
        assert!((id - DMatrix::<f64>::identity(3, 3)).amax() < 1e-9);
    }
    use crate::graph::{center_projector, families};
    use nalgebra::dmatrix;
    use rand::Rng;

    fn random_sym(n: usize, seed: u64) -> DMatrix<f64> {
        let mut r = rng::stream(seed, 1);
        let a = DMatrix::from_fn(n, n, |_, _| r.gen_range(-1.0..1.0));
        symmetrize(&a)
    }

    #[test]
    fn eig_examples() {
        let e = eig_sym(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(e.values.as_slice(), &[1.0, 1.0, 1.0]);
        let e = eig_sym(&dmatrix![2.0, 0.0; 0.0, -1.0]).unwrap();
        assert_eq!(e.values.as_slice(), &[-1.0, 2.0]);
        let e = eig_sym(&families::path(3).laplacian()).unwrap();
        for (a, b) in e.values.iter().zip([0.0, 1.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn eig_rejects_nan() {
        let mut a = DMatrix::identity(2, 2);
        a[(0, 1)] = f64::NAN;
        assert!(matches!(eig_sym(&a), Err(Error::Input(_))));
    }

    #[test]
    fn eig_invariants() {
        for seed in 0..20 {
            let a = random_sym(7, seed);
            let e = eig_sym(&a).unwrap();
            let vtv = e.vectors.transpose() * &e.vectors;
            assert!((vtv - DMatrix::identity(7, 7)).abs().max() < 1e-10);
            let rec = e.reconstruct();
            assert!((rec - &a).norm() <= 1e-9 * a.norm());
            assert!(e.values.as_slice().windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn pinv_examples() {
        let a = dmatrix![4.0, 0.0; 0.0, 0.0];
        let p = pinv_psd(&a, 0.5).unwrap();
        assert!((p - dmatrix![0.5, 0.0; 0.0, 0.0]).abs().max() < 1e-15);
        let pp = center_projector(2);
        assert!((pinv_psd(&pp, 1.0).unwrap() - &pp).abs().max() < 1e-14);
        assert!(matches!(
            pinv_psd(&dmatrix![1.0, 0.0; 0.0, -1.0], 1.0),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn base_power_examples() {
        let z = base_power_psd(&DMatrix::zeros(3, 3), 0.3).unwrap();
        assert!((z - DMatrix::identity(3, 3)).abs().max() < 1e-15);
        let h = base_power_psd(&DMatrix::identity(3, 3), 0.5).unwrap();
        assert!((h - DMatrix::identity(3, 3) * 0.5).abs().max() < 1e-15);
        assert!(base_power_psd(&DMatrix::identity(2, 2), 1.5).is_err());
    }

    #[test]
    fn base_power_semigroup() {
        for seed in 0..10 {
            let a = random_sym(6, seed) * 3.0;
            let x = base_power_psd(&a, 0.7).unwrap();
            let y = base_power_psd(&(&a * 2.0), 0.7).unwrap();
            assert!((&x * &x - &y).norm() <= 1e-8 * y.norm());
        }
    }

    #[test]
    fn complement_basis_is_orthonormal() {
        for n in 1..8 {
            let q = complement_basis(n);
            let qtq = q.transpose() * &q;
            assert!((qtq - DMatrix::identity(n - 1, n - 1)).abs().max() < 1e-14);
            let ones = DVector::from_element(n, 1.0);
            assert!((q.transpose() * ones).abs().max() < 1e-14);
            assert!((&q * q.transpose() - center_projector(n)).abs().max() < 1e-14);
        }
    }

    #[test]
    fn complement_min_eig_examples() {
        for n in 2..8 {
            let v = min_eig_on_complement(&families::complete(n).laplacian()).unwrap();
            assert!((v - n as f64).abs() < 1e-12);
        }
        let v = min_eig_on_complement(&families::triangles(2).laplacian()).unwrap();
        assert!(v.abs() < 1e-12);
        let v = min_eig_on_complement(&families::path(3).laplacian()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sketch_examples() {
        let rows = dmatrix![1.0, 2.0, 3.0; 1.0, 2.0, 3.0; 0.0, 1.0, -1.0];
        let id = jl_sketch_with(&rows, 3, 0, SketchMode::Identity).unwrap();
        assert_eq!(id, rows);
        let s = jl_sketch(&rows, 64, 5).unwrap();
        assert!((s.row(0) - s.row(1)).norm() == 0.0);
        assert!(jl_sketch(&rows, 0, 5).is_err());
    }
}
