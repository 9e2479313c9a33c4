mod common;

use nnfir::{apply_t, curvature, fit, gradient, objective, FitConfig, ImpulseResponse};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny() -> impl Strategy<Value = common::Instance> {
    (any::<u64>(), 0u32..1000).prop_map(|(seed, index)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        common::random_instance(&mut rng, seed, index, 1, 2, 2, 0.5)
    })
}

fn small_with_point() -> impl Strategy<Value = (common::Instance, Vec<f64>)> {
    (any::<u64>(), 0u32..1000).prop_map(|(seed, index)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = common::random_instance(&mut rng, seed, index, 5, 15, 4, 0.2);
        let h = (0..=inst.q).map(|_| rng.random_range(0.1..2.0)).collect();
        (inst, h)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn convolution_matches_definition((inst, h) in small_with_point()) {
        let model = apply_t(&ImpulseResponse::new(h.clone()).unwrap(), &inst.u).unwrap();
        let oracle = common::model(&h, &inst.u);
        for i in 0..inst.u.rows() {
            for j in 0..inst.u.cols() {
                prop_assert!((model.get(i, j) - oracle[i][j]).abs() <= 1e-13 * oracle[i][j].max(1.0));
            }
        }
    }

    #[test]
    fn objective_matches_definition((inst, h) in small_with_point()) {
        let f = objective(&ImpulseResponse::new(h.clone()).unwrap(), &inst.u, &inst.y).unwrap().to_f64();
        let oracle = common::objective(&h, &inst.u, &inst.y);
        prop_assert!((f - oracle).abs() <= 1e-10 * oracle.max(1.0), "{f} vs {oracle}");
    }

    #[test]
    fn gradient_matches_finite_differences((inst, h) in small_with_point()) {
        let g = gradient(&ImpulseResponse::new(h.clone()).unwrap(), &inst.u, &inst.y).unwrap();
        let fd = common::fd_gradient(&h, &inst.u, &inst.y, 1e-5);
        let err = common::max_abs(g.iter().zip(&fd).map(|(a, b)| a - b));
        prop_assert!(err <= 1e-6 * common::max_abs(g.iter().copied()), "{g:?} vs {fd:?}");
    }

    #[test]
    fn curvature_matches_finite_differences((inst, h) in small_with_point()) {
        let c = curvature(&ImpulseResponse::new(h.clone()).unwrap(), &inst.u, &inst.y).unwrap();
        let fd = common::fd_hessian(&h, &inst.u, &inst.y, 1e-4);
        let n = h.len();
        let scale = common::max_abs(c.iter().copied());
        for k in 0..n {
            for l in 0..n {
                prop_assert!((c[(k, l)] - fd[k][l]).abs() <= 1e-4 * scale, "({k},{l})");
                prop_assert_eq!(c[(k, l)], c[(l, k)]);
            }
        }
    }

    #[test]
    fn fit_matches_brute_force(inst in tiny()) {
        let r = fit(&inst.u, &inst.y, inst.q, &FitConfig::default()).unwrap();
        let f_fit = common::objective(r.h_hat.as_slice(), &inst.u, &inst.y);
        let (h_oracle, f_oracle) = common::brute_force_minimum(&inst.u, &inst.y, inst.q);
        prop_assert!((f_fit - f_oracle).abs() <= 1e-4, "fit {:?} F={f_fit}, oracle {h_oracle:?} F={f_oracle}", r.h_hat);
    }
}

#[test]
fn golden_section_finds_a_known_minimum() {
    let (x, fx) = common::grid_golden(|x| (x - 0.3).powi(2) + 1.0, 0.0, 2.0, 21);
    assert!((x - 0.3).abs() < 1e-7);
    assert!((fx - 1.0).abs() < 1e-12);
    // Minimum on the boundary of the search interval.
    let (x, _) = common::grid_golden(|x| x, 0.0, 1.0, 11);
    assert!(x < 1e-9);
}

#[test]
fn brute_force_handles_a_boundary_minimum() {
    // y = u exactly with q = 1: the minimizer is h = (1, 0).
    let u = nnfir::SignalMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 1.0], vec![2.0, 2.0]]).unwrap();
    let (h, f) = common::brute_force_minimum(&u, &u, 1);
    assert!((h[0] - 1.0).abs() < 1e-6 && h[1] < 1e-6, "{h:?}");
    assert!(f < 1e-10);
}
