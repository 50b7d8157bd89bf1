use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use algconn::dense::{jl_sketch, pinv_psd};
use algconn::graph::{center_projector, families, CandidateSet};
use algconn::oracles::{exact_potentials, matrix_function, PotentialInputs};
use algconn::rng;
use algconn::sparsify::{
    compute_projection, default_regularization, lower_block, lower_potential, relative_resistances, setup_instance,
    upper_potential, ProjectionMode, SparsifyState,
};

const Q: f64 = 10.0;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn library_potentials_match_the_reference_on_random_states() {
    let mut r = rng::stream(41, 0);
    let mut worst: f64 = 0.0;
    for case in 0..50u64 {
        let n = r.gen_range(5..=10);
        let g = families::connected_gnp(n, r.gen_range(0.25..0.5), &mut r);
        let mut all = CandidateSet::complement(&g, None).unwrap().edges().to_vec();
        all.shuffle(&mut r);
        all.truncate(r.gen_range(1..=all.len().clamp(1, 2 * n)));
        let cands: Vec<_> = all.into_iter().map(|(u, v)| (u, v, r.gen_range(0.1..1.0))).collect();
        let inst = setup_instance(&g, &cands, default_regularization(&g, &cands), r.gen_range(1..=3)).unwrap();
        let proj = compute_projection(&inst, ProjectionMode::Exact, case).unwrap();
        let mut state = SparsifyState::initial(&inst, 1.0, -1.0);
        for i in 0..inst.vector_count() {
            if r.gen_bool(0.5) {
                state.add_scaled(&inst, i, r.gen_range(0.0..0.3));
            }
        }
        let block = lower_block(&state.added, &proj);
        let amax = algconn::dense::eig_sym(&state.a).unwrap().max();
        let bmin = algconn::dense::eig_sym(&block).unwrap().min();
        state.u = amax + r.gen_range(0.3..1.5);
        state.ell = bmin - r.gen_range(0.3..1.5);

        let reference = exact_potentials(&PotentialInputs {
            a: &state.a,
            added: &state.added,
            vectors: inst.vectors(),
            mbar: inst.mbar(),
            proj: &proj.v,
            u: state.u,
            ell: state.ell,
            q: Q,
            t: inst.t(),
        })
        .unwrap();
        let res = relative_resistances(&inst, &proj, &state).unwrap();
        let up = upper_potential(&state.a, state.u, inst.t(), Q).unwrap();
        let lo = lower_potential(&block, state.ell, Q).unwrap();
        for (ours, theirs) in [
            (up, reference.phi_upper),
            (lo, reference.phi_lower),
            (res.rho_upper, reference.rho_upper),
            (res.rho_lower, reference.rho_lower),
        ] {
            worst = worst.max(rel(ours, theirs));
        }
        for i in 0..inst.vector_count() {
            worst = worst.max((res.upper[i] - reference.upper[i]).abs() / reference.upper[i].abs().max(1e-12));
            worst = worst.max((res.lower[i] - reference.lower[i]).abs() / reference.lower[i].abs().max(1e-12));
        }
    }
    assert!(worst <= 1e-7, "largest relative disagreement {worst:e}");
}

#[test]
fn pseudoinverse_rank_one_update() {
    let p = center_projector(2);
    let l = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
    let a_pinv = pinv_psd(&l, 1.0).unwrap();
    for y in [0.5f64, 2.0, 7.25] {
        let v = DVector::from_vec(vec![y.sqrt() / 2f64.sqrt(), -y.sqrt() / 2f64.sqrt()]);
        let yv = &v * v.transpose();
        let direct = pinv_psd(&(&l + &p * &yv * &p), 1.0).unwrap();
        let denom = 1.0 + (v.transpose() * &a_pinv * &v)[(0, 0)];
        let formula = &a_pinv - &a_pinv * &yv * &a_pinv / denom;
        assert!((direct - formula).amax() < 1e-12);
    }
    let mut r = rng::stream(7, 0);
    for _ in 0..20 {
        let g = families::connected_gnp(6, 0.5, &mut r);
        let lg = g.laplacian();
        let b = DVector::from_fn(6, |_, _| r.gen_range(-1.0..1.0));
        let v = &center_projector(6) * b;
        let a_pinv = pinv_psd(&lg, 1.0).unwrap();
        let yv = &v * v.transpose();
        let direct = pinv_psd(&(&lg + &yv), 1.0).unwrap();
        let denom = 1.0 + (v.transpose() * &a_pinv * &v)[(0, 0)];
        let formula = &a_pinv - &a_pinv * &yv * &a_pinv / denom;
        assert!((direct - formula).amax() < 1e-10);
    }
}

#[test]
fn jl_sketch_preserves_pairwise_distances() {
    let mut r = rng::stream(9, 0);
    let rows = DMatrix::from_fn(50, 20, |_, _| r.gen_range(-1.0..1.0));
    let mut good_seeds = 0;
    for seed in 0..20 {
        let s = jl_sketch(&rows, 1200, seed).unwrap();
        let (mut within, mut total) = (0, 0);
        for i in 0..50 {
            for j in i + 1..50 {
                let exact = (rows.row(i) - rows.row(j)).norm();
                let sketched = (s.row(i) - s.row(j)).norm();
                total += 1;
                if (sketched / exact - 1.0).abs() <= 0.25 {
                    within += 1;
                }
            }
        }
        if within as f64 >= 0.95 * total as f64 {
            good_seeds += 1;
        }
    }
    assert_eq!(good_seeds, 20);
}

#[test]
fn reference_matrix_function_matches_pseudoinverse() {
    let l = families::path(5).laplacian();
    let shifted = &l + DMatrix::<f64>::identity(5, 5) * 0.5;
    let inv = matrix_function(&shifted, |x| 1.0 / x);
    assert!((&inv * &shifted - DMatrix::<f64>::identity(5, 5)).amax() < 1e-12);
    let reference = pinv_psd(&shifted, 1.0).unwrap();
    assert!((inv - reference).amax() < 1e-12);
}
