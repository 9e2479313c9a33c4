mod common;

use nnfir::{
    column_weights, em_step, fit, gradient, kkt_report, objective, FitConfig, FitStatus, ImpulseResponse, SignalMatrix,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A random instance plus a strictly positive point of the same order.
fn instance_and_point() -> impl Strategy<Value = (common::Instance, Vec<f64>)> {
    (any::<u64>(), 0u32..1000, prop::bool::ANY, prop::collection::vec(0.05f64..3.0, 6)).prop_map(
        |(seed, index, noisy, point)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let inst = common::random_instance(&mut rng, seed, index, 5, 20, 6, if noisy { 0.2 } else { 0.0 });
            let h = point[..=inst.q].to_vec();
            (inst, h)
        },
    )
}

fn total(y: &SignalMatrix) -> f64 {
    y.as_slice().iter().sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn one_step_decreases_divergence((inst, h) in instance_and_point()) {
        let h = ImpulseResponse::new(h).unwrap();
        let next = em_step(&h, &inst.u, &inst.y).unwrap();
        let before = objective(&h, &inst.u, &inst.y).unwrap().to_f64();
        let after = objective(&next, &inst.u, &inst.y).unwrap().to_f64();
        let rounding = (inst.u.rows() * inst.u.cols()) as f64 * f64::EPSILON;
        prop_assert!(after <= before * (1.0 + rounding), "{before} -> {after}");
    }

    #[test]
    fn one_step_lands_on_the_simplex((inst, h) in instance_and_point()) {
        let next = em_step(&ImpulseResponse::new(h).unwrap(), &inst.u, &inst.y).unwrap();
        let s = column_weights(&inst.u, inst.q).unwrap();
        let mass: f64 = next.as_slice().iter().zip(&s).map(|(a, b)| a * b).sum();
        prop_assert!((mass - total(&inst.y)).abs() <= 1e-12 * total(&inst.y));
    }

    /// `h'_k = h_k (1 − g_k / s_k)`: a component grows exactly where the gradient is negative.
    #[test]
    fn step_follows_the_gradient_sign((inst, h) in instance_and_point()) {
        let hr = ImpulseResponse::new(h.clone()).unwrap();
        let next = em_step(&hr, &inst.u, &inst.y).unwrap();
        let g = gradient(&hr, &inst.u, &inst.y).unwrap();
        let s = column_weights(&inst.u, inst.q).unwrap();
        for k in 0..h.len() {
            let predicted = h[k] * (1.0 - g[k] / s[k]);
            prop_assert!((next[k] - predicted).abs() <= 1e-10 * h[k].max(next[k]), "k={k}");
            if g[k] < -1e-9 * s[k] {
                prop_assert!(next[k] > h[k]);
            } else if g[k] > 1e-9 * s[k] {
                prop_assert!(next[k] < h[k]);
            }
        }
    }

    /// At a converged fit the update barely moves, and it moves each
    /// component by exactly `h_k |g_k| / s_k`.
    #[test]
    fn fixed_points_satisfy_kkt((inst, _h) in instance_and_point()) {
        let r = fit(&inst.u, &inst.y, inst.q, &FitConfig::default()).unwrap();
        prop_assume!(r.status.is_converged());
        let report = kkt_report(&r.h_hat, &inst.u, &inst.y).unwrap();
        prop_assert!(report.residual <= 1e-6 || r.status == FitStatus::ConvergedParam);
        let next = em_step(&r.h_hat, &inst.u, &inst.y).unwrap();
        let s = column_weights(&inst.u, inst.q).unwrap();
        for k in 0..=inst.q {
            let moved = (next[k] - r.h_hat[k]).abs();
            let predicted = r.h_hat[k] * report.gradient[k].abs() / s[k];
            prop_assert!((moved - predicted).abs() <= 1e-12 * r.h_hat[k].max(1e-300) + 1e-300);
            // Where the point is interior the gradient vanishes, so the step is tiny.
            if !report.on_boundary[k] {
                prop_assert!(moved <= 1e-6 * r.h_hat[k] + 1e-12);
            }
        }
    }

    #[test]
    fn fit_never_worse_than_its_start((inst, h) in instance_and_point()) {
        let h0 = ImpulseResponse::new(h).unwrap();
        let cfg = FitConfig { initial_h: Some(h0.clone()), max_iterations: 500, ..FitConfig::default() };
        let r = fit(&inst.u, &inst.y, inst.q, &cfg).unwrap();
        let start = objective(&h0, &inst.u, &inst.y).unwrap().to_f64();
        prop_assert!(r.final_divergence().to_f64() <= start);
        prop_assert!(r.h_hat.as_slice().iter().all(|&v| v > 0.0));
    }
}

#[test]
fn kkt_point_is_a_fixed_point_for_q0() {
    let u = SignalMatrix::from_rows(&[vec![1.0, 3.0], vec![2.0, 0.5]]).unwrap();
    let y = SignalMatrix::from_rows(&[vec![2.0, 7.0], vec![3.5, 1.0]]).unwrap();
    let h = ImpulseResponse::new(vec![total(&y) / total(&u)]).unwrap();
    let next = em_step(&h, &u, &y).unwrap();
    assert!((next[0] - h[0]).abs() <= 4.0 * f64::EPSILON * h[0]);
    assert!(kkt_report(&h, &u, &y).unwrap().residual <= 1e-14 * total(&u));
}

#[test]
fn non_kkt_point_moves() {
    let u = SignalMatrix::from_rows(&[vec![1.0, 3.0], vec![2.0, 0.5], vec![1.0, 1.0]]).unwrap();
    let y = SignalMatrix::from_rows(&[vec![2.0, 7.0], vec![3.5, 1.0], vec![1.0, 4.0]]).unwrap();
    let h = ImpulseResponse::new(vec![1.0, 1.0]).unwrap();
    let report = kkt_report(&h, &u, &y).unwrap();
    assert!(report.residual > 0.1);
    assert!(em_step(&h, &u, &y).unwrap().max_abs_diff(&h) > 1e-3);
}
