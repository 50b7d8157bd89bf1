//! Brute-force and convex-ascent reference solvers, and an exact recomputation
//! of the sparsifier's potentials that uses its own eigensolver.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CandidateSet, WeightedGraph};
use crate::rng;

/// Largest number of subsets the brute-force oracle will enumerate.
pub const MAX_SUBSETS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryOpt {
    pub lambda: f64,
    pub subset: Vec<(usize, usize)>,
    pub evaluated: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedOpt {
    pub lambda: f64,
    pub weights: Vec<f64>,
    pub steps: usize,
}

fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

fn sorted_eigen(l: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let e = SymmetricEigen::new(l);
    let mut order: Vec<usize> = (0..e.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let values = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vectors = DMatrix::from_columns(&order.iter().map(|&i| e.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
    (values, vectors)
}

fn second_smallest(l: DMatrix<f64>) -> f64 {
    if l.nrows() < 2 {
        return 0.0;
    }
    sorted_eigen(l).0[1]
}

fn add_edge(l: &mut DMatrix<f64>, u: usize, v: usize, w: f64) {
    l[(u, u)] += w;
    l[(v, v)] += w;
    l[(u, v)] -= w;
    l[(v, u)] -= w;
}

/// Best `λ₂` over all unit-weight choices of `min(k, m)` candidates.
pub fn brute_force_opt_binary(g: &WeightedGraph, w: &CandidateSet, k: usize) -> Result<BinaryOpt> {
    let edges = w.edges();
    let m = edges.len();
    let r = k.min(m);
    let count = binomial(m, r);
    if count > MAX_SUBSETS {
        return Err(Error::Input(format!(
            "{m} choose {r} = {count} subsets exceeds the limit of {MAX_SUBSETS}"
        )));
    }
    let base = g.laplacian();
    let mut idx: Vec<usize> = (0..r).collect();
    let mut best = BinaryOpt {
        lambda: f64::NEG_INFINITY,
        subset: Vec::new(),
        evaluated: 0,
    };
    loop {
        let mut l = base.clone();
        for &i in &idx {
            add_edge(&mut l, edges[i].0, edges[i].1, 1.0);
        }
        let value = second_smallest(l);
        best.evaluated += 1;
        if value > best.lambda {
            best.lambda = value;
            best.subset = idx.iter().map(|&i| edges[i]).collect();
        }
        // Advance to the next combination in lexicographic order.
        let mut pos = r;
        while pos > 0 && idx[pos - 1] == m - r + pos - 1 {
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
        idx[pos - 1] += 1;
        for j in pos..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
    best.subset.sort_unstable();
    Ok(best)
}

/// Euclidean projection onto `{0 ≤ w ≤ 1, Σ w ≤ k}`.
pub fn project_capped_simplex(x: &DVector<f64>, k: f64) -> DVector<f64> {
    let clipped = x.map(|v| v.clamp(0.0, 1.0));
    if clipped.sum() <= k {
        return clipped;
    }
    let (mut lo, mut hi) = (0.0, x.max());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let s: f64 = x.iter().map(|&v| (v - mid).clamp(0.0, 1.0)).sum();
        if s > k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    x.map(|v| (v - hi).clamp(0.0, 1.0))
}

fn weighted_laplacian(base: &DMatrix<f64>, edges: &[(usize, usize)], w: &DVector<f64>) -> DMatrix<f64> {
    let mut l = base.clone();
    for (&(u, v), &we) in edges.iter().zip(w.iter()) {
        add_edge(&mut l, u, v, we);
    }
    l
}

/// Projected supergradient ascent on `w ↦ λ₂(L_G + Σ w_e L_e)`. The returned
/// value is attained by the returned feasible weights, so it lower-bounds the
/// weighted optimum.
pub fn weighted_opt_ascent(g: &WeightedGraph, w: &CandidateSet, k: usize, steps: usize, seed: u64) -> Result<WeightedOpt> {
    let edges = w.edges();
    let m = edges.len();
    let base = g.laplacian();
    let n = g.n();
    if m == 0 || n < 2 {
        return Ok(WeightedOpt {
            lambda: second_smallest(base),
            weights: vec![0.0; m],
            steps: 0,
        });
    }
    let kf = k as f64;
    let mut r = rng::stream(seed, 0xa5c3);
    let starts = [DVector::zeros(m), project_capped_simplex(&DVector::from_element(m, kf / m as f64), kf)];
    let mut best_w = starts[0].clone();
    let mut best = f64::NEG_INFINITY;
    for start in starts {
        let mut wv = start;
        for t in 1..=steps.max(1) {
            let (values, vectors) = sorted_eigen(weighted_laplacian(&base, edges, &wv));
            let lam = values[1];
            if lam > best {
                best = lam;
                best_w = wv.clone();
            }
            if t > steps {
                break;
            }
            // A random unit combination of the λ₂ eigenspace is a supergradient.
            let tol = 1e-9 * values[n - 1].abs().max(1.0);
            let mut dir = DVector::zeros(n);
            for (j, &val) in values.iter().enumerate().skip(1) {
                if val - lam <= tol {
                    dir += vectors.column(j) * r.gen_range(-1.0..1.0);
                }
            }
            let norm = dir.norm();
            if norm == 0.0 {
                dir = vectors.column(1).into_owned();
            } else {
                dir /= norm;
            }
            let grad = DVector::from_iterator(m, edges.iter().map(|&(u, v)| (dir[u] - dir[v]).powi(2)));
            wv = project_capped_simplex(&(wv + grad / (t as f64).sqrt()), kf);
        }
        let lam = second_smallest(weighted_laplacian(&base, edges, &wv));
        if lam > best {
            best = lam;
            best_w = wv;
        }
    }
    Ok(WeightedOpt {
        lambda: best,
        weights: best_w.iter().copied().collect(),
        steps,
    })
}

/// Cyclic Jacobi eigensolver: ascending eigenvalues and matching columns.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = m.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let mrp = m[(r, p)];
                    let mrq = m[(r, q)];
                    m[(r, p)] = c * mrp - s * mrq;
                    m[(r, q)] = s * mrp + c * mrq;
                }
                for r in 0..n {
                    let mpr = m[(p, r)];
                    let mqr = m[(q, r)];
                    m[(p, r)] = c * mpr - s * mqr;
                    m[(q, r)] = s * mpr + c * mqr;
                }
                for r in 0..n {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = c * vrp - s * vrq;
                    v[(r, q)] = s * vrp + c * vrq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| m[(i, i)]));
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// `f(A)` for symmetric `A`, through [`jacobi_eigen`].
pub fn matrix_function(a: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let (values, vectors) = jacobi_eigen(&((a + a.transpose()) * 0.5));
    let scaled = DMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, c| vectors[(r, c)] * f(values[c]));
    scaled * vectors.transpose()
}

/// Inputs to [`exact_potentials`].
pub struct PotentialInputs<'a> {
    /// Current matrix `A`.
    pub a: &'a DMatrix<f64>,
    /// `A - X`.
    pub added: &'a DMatrix<f64>,
    /// Sampleable vectors, one per column.
    pub vectors: &'a DMatrix<f64>,
    /// `Σ v_i v_i^T`.
    pub mbar: &'a DMatrix<f64>,
    /// Orthonormal basis of the subspace the lower barrier watches.
    pub proj: &'a DMatrix<f64>,
    pub u: f64,
    pub ell: f64,
    pub q: f64,
    /// Number of top eigenvalues in the upper potential.
    pub t: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Potentials {
    pub phi_upper: f64,
    pub phi_lower: f64,
    pub rho_upper: f64,
    pub rho_lower: f64,
    pub upper: DVector<f64>,
    pub lower: DVector<f64>,
    pub a_max: f64,
    pub lower_min: f64,
    /// `λ_max((uI - A)^{-1/2} M̄ (uI - A)^{-1/2})`.
    pub upper_max: f64,
    /// `λ_min` of the same matrix.
    pub upper_min: f64,
    /// `λ_max((C - ℓI)^{-1})` for the restricted lower block `C`.
    pub lower_max: f64,
    /// The restricted lower block itself.
    pub lower_block: DMatrix<f64>,
}

/// Recomputes the barrier potentials and resistances from scratch.
pub fn exact_potentials(inp: &PotentialInputs) -> Result<Potentials> {
    let (av, _) = jacobi_eigen(inp.a);
    let d = av.len();
    let a_max = av[d - 1];
    if !(inp.u > a_max) {
        return Err(Error::BarrierViolation(format!("λ_max(A) = {a_max} is not below u = {}", inp.u)));
    }
    let t = inp.t.min(d);
    let phi_upper = av.iter().skip(d - t).map(|&l| (inp.u - l).powf(-inp.q)).sum();
    let shift = DMatrix::<f64>::identity(d, d) * inp.u - inp.a;
    let y_inv = matrix_function(&shift, |x| 1.0 / x);
    let y_inv_half = matrix_function(&shift, |x| x.powf(-0.5));
    let upper = DVector::from_iterator(
        inp.vectors.ncols(),
        inp.vectors.column_iter().map(|v| (v.transpose() * &y_inv * v)[(0, 0)]),
    );
    let (kv, _) = jacobi_eigen(&(&y_inv_half * inp.mbar * &y_inv_half));
    let rho_upper = kv.sum();

    let s = inp.proj.transpose() * inp.mbar * inp.proj;
    let s_inv_half = matrix_function(&s, |x| x.powf(-0.5));
    let block = &s_inv_half * (inp.proj.transpose() * inp.added * inp.proj) * &s_inv_half;
    let block = (&block + block.transpose()) * 0.5;
    let (cv, _) = jacobi_eigen(&block);
    let lower_min = cv[0];
    if !(lower_min > inp.ell) {
        return Err(Error::BarrierViolation(format!(
            "λ_min of the lower block = {lower_min} is not above ℓ = {}",
            inp.ell
        )));
    }
    let phi_lower = cv.iter().map(|&l| (l - inp.ell).powf(-inp.q)).sum();
    let rho_lower = cv.iter().map(|&l| 1.0 / (l - inp.ell)).sum();
    let kdim = block.nrows();
    let g_inv = matrix_function(&(&block - DMatrix::<f64>::identity(kdim, kdim) * inp.ell), |x| 1.0 / x);
    let embed = &s_inv_half * inp.proj.transpose();
    let lower = DVector::from_iterator(
        inp.vectors.ncols(),
        inp.vectors.column_iter().map(|v| {
            let z = &embed * v;
            (z.transpose() * &g_inv * z)[(0, 0)]
        }),
    );
    Ok(Potentials {
        phi_upper,
        phi_lower,
        rho_upper,
        rho_lower,
        upper,
        lower,
        a_max,
        lower_min,
        upper_max: kv[kv.len() - 1],
        upper_min: kv[0],
        lower_max: 1.0 / (lower_min - inp.ell),
        lower_block: block,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;
    use rand::seq::SliceRandom;

    #[test]
    fn brute_force_examples() {
        let p3 = families::path(3);
        let w = CandidateSet::new(&p3, &[(0, 2)], None).unwrap();
        let r = brute_force_opt_binary(&p3, &w, 1).unwrap();
        assert!((r.lambda - 3.0).abs() < 1e-10);
        assert_eq!(r.subset, vec![(0, 2)]);

        let empty = CandidateSet::new(&p3, &[], None).unwrap();
        let r = brute_force_opt_binary(&p3, &empty, 0).unwrap();
        assert!((r.lambda - 1.0).abs() < 1e-10);
    }

    #[test]
    fn brute_force_ignores_candidate_order() {
        let mut r = rng::stream(7, 1);
        let g = families::connected_gnp(7, 0.35, &mut r);
        let mut edges = CandidateSet::complement(&g, None).unwrap().edges().to_vec();
        let first = brute_force_opt_binary(&g, &CandidateSet::new(&g, &edges, None).unwrap(), 2).unwrap();
        edges.shuffle(&mut r);
        let second = brute_force_opt_binary(&g, &CandidateSet::new(&g, &edges, None).unwrap(), 2).unwrap();
        assert!((first.lambda - second.lambda).abs() < 1e-12);
        assert_eq!(first.evaluated, second.evaluated);
    }

    #[test]
    fn brute_force_refuses_huge_enumerations() {
        let g = WeightedGraph::unit(40, std::iter::empty()).unwrap();
        let w = CandidateSet::complement(&g, None).unwrap();
        assert!(matches!(brute_force_opt_binary(&g, &w, 5), Err(Error::Input(_))));
    }

    #[test]
    fn capped_simplex_projection() {
        let x = DVector::from_vec(vec![2.0, 0.5, -1.0, 0.7]);
        let p = project_capped_simplex(&x, 1.5);
        assert!((p.sum() - 1.5).abs() < 1e-9);
        assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        let inside = DVector::from_vec(vec![0.2, 0.3]);
        assert_eq!(project_capped_simplex(&inside, 1.0), inside);
    }

    #[test]
    fn ascent_matches_a_one_dimensional_scan() {
        let g = families::path(4);
        let w = CandidateSet::new(&g, &[(0, 3)], None).unwrap();
        let asc = weighted_opt_ascent(&g, &w, 1, 500, 0).unwrap();
        let base = g.laplacian();
        let mut best = f64::NEG_INFINITY;
        for i in 0..=10_000 {
            let t = i as f64 * 1e-4;
            best = best.max(second_smallest(weighted_laplacian(&base, &[(0, 3)], &DVector::from_element(1, t))));
        }
        assert!((asc.lambda - best).abs() < 1e-4, "{} vs {}", asc.lambda, best);
    }

    #[test]
    fn ascent_without_candidates_is_the_base_value() {
        let g = families::path(5);
        let w = CandidateSet::new(&g, &[], None).unwrap();
        let asc = weighted_opt_ascent(&g, &w, 2, 100, 0).unwrap();
        assert!((asc.lambda - second_smallest(g.laplacian())).abs() < 1e-12);
    }

    #[test]
    fn ascent_never_falls_below_the_base_graph() {
        for seed in 0..5 {
            let mut r = rng::stream(seed, 2);
            let g = families::connected_gnp(7, 0.3, &mut r);
            let w = CandidateSet::complement(&g, None).unwrap();
            let asc = weighted_opt_ascent(&g, &w, 2, 200, seed).unwrap();
            assert!(asc.lambda >= second_smallest(g.laplacian()) - 1e-12);
            assert!(asc.weights.iter().sum::<f64>() <= 2.0 + 1e-9);
        }
    }

    #[test]
    fn jacobi_agrees_with_a_library_solver() {
        let mut r = rng::stream(3, 3);
        let b = DMatrix::from_fn(9, 9, |_, _| r.gen_range(-1.0..1.0));
        let a = &b * b.transpose();
        let (values, vectors) = jacobi_eigen(&a);
        let (reference, _) = sorted_eigen(a.clone());
        for (x, y) in values.iter().zip(reference.iter()) {
            assert!((x - y).abs() < 1e-10);
        }
        let rebuilt = &vectors * DMatrix::from_diagonal(&values) * vectors.transpose();
        assert!((rebuilt - a).norm() < 1e-10);
    }
}
