//! Oracles shared by the integration tests. Nothing here calls the library's
//! objective or derivatives; the convolution and divergence are recomputed
//! from their definitions.

#![allow(dead_code)]

use nnfir::stats::{gen_inputs, gen_noisy_outputs, InputLaw, NoiseModel, Purpose, StreamId};
use nnfir::{ImpulseResponse, SignalMatrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// `(T(h)U)_{ij} = Σ_{k ≤ min(i, q)} h_k U_{i−k, j}`.
pub fn model(h: &[f64], u: &SignalMatrix) -> Vec<Vec<f64>> {
    (0..u.rows())
        .map(|i| {
            (0..u.cols())
                .map(|j| (0..h.len()).filter(|&k| k <= i).map(|k| h[k] * u.get(i - k, j)).sum())
                .collect()
        })
        .collect()
}

/// `Σ y ln(y/M) − y + M`, `+∞` off the effective domain.
pub fn objective(h: &[f64], u: &SignalMatrix, y: &SignalMatrix) -> f64 {
    let m = model(h, u);
    let mut total = 0.0;
    for i in 0..u.rows() {
        for j in 0..u.cols() {
            let (yy, mm) = (y.get(i, j), m[i][j]);
            total += if yy == 0.0 {
                mm
            } else if mm <= 0.0 {
                return f64::INFINITY;
            } else {
                yy * (yy / mm).ln() - yy + mm
            };
        }
    }
    total
}

/// Central differences of the objective, step `δ_k = rel · max(1, |h_k|)`.
pub fn fd_gradient(h: &[f64], u: &SignalMatrix, y: &SignalMatrix, rel: f64) -> Vec<f64> {
    (0..h.len())
        .map(|k| {
            let d = rel * h[k].abs().max(1.0);
            let mut hp = h.to_vec();
            let mut hm = h.to_vec();
            hp[k] += d;
            hm[k] -= d;
            (objective(&hp, u, y) - objective(&hm, u, y)) / (2.0 * d)
        })
        .collect()
}

/// Second central differences of the objective.
pub fn fd_hessian(h: &[f64], u: &SignalMatrix, y: &SignalMatrix, rel: f64) -> Vec<Vec<f64>> {
    let n = h.len();
    let step: Vec<f64> = h.iter().map(|v| rel * v.abs().max(1.0)).collect();
    let at = |dk: (usize, f64), dl: (usize, f64)| {
        let mut p = h.to_vec();
        p[dk.0] += dk.1;
        p[dl.0] += dl.1;
        objective(&p, u, y)
    };
    let mut out = vec![vec![0.0; n]; n];
    for k in 0..n {
        for l in 0..n {
            let (a, b) = (step[k], step[l]);
            out[k][l] =
                (at((k, a), (l, b)) - at((k, a), (l, -b)) - at((k, -a), (l, b)) + at((k, -a), (l, -b))) / (4.0 * a * b);
        }
    }
    out
}

/// Golden-section search for a convex `f` on `[a, b]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iterations: usize) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iterations {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let candidates = [(a, f(a)), (b, f(b)), (c, fc), (d, fd)];
    candidates.into_iter().fold((a, f64::INFINITY), |best, x| if x.1 < best.1 { x } else { best })
}

/// Uniform grid on `[lo, hi]`, then golden section between the neighbours of
/// the best grid point. Exact for convex `f` up to the golden tolerance.
pub fn grid_golden(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    let xs: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let best = (0..points).fold(0, |b, i| if vals[i] < vals[b] { i } else { b });
    let a = xs[best.saturating_sub(1)];
    let b = xs[(best + 1).min(points - 1)];
    let (x, fx) = golden_section(&f, a, b, 80);
    if fx <= vals[best] {
        (x, fx)
    } else {
        (xs[best], vals[best])
    }
}

/// Minimum of the objective over `h ≥ 0` for `q ≤ 1` by nested grid + golden
/// section. The box uses `h_k ≤ ΣY / s_k`, which every minimizer satisfies.
pub fn brute_force_minimum(u: &SignalMatrix, y: &SignalMatrix, q: usize) -> (Vec<f64>, f64) {
    assert!(q <= 1);
    let total_y: f64 = y.as_slice().iter().sum();
    let s: Vec<f64> = (0..=q).map(|k| (0..u.rows() - k).map(|l| u.row(l).iter().sum::<f64>()).sum()).collect();
    let bound: Vec<f64> = s.iter().map(|sk| total_y / sk * (1.0 + 1e-9)).collect();
    if q == 0 {
        let (h0, f) = grid_golden(|a| objective(&[a], u, y), 0.0, bound[0], 41);
        return (vec![h0], f);
    }
    let inner = |a: f64| grid_golden(|b| objective(&[a, b], u, y), 0.0, bound[1], 41);
    let (h0, f) = grid_golden(|a| inner(a).1, 0.0, bound[0], 41);
    (vec![h0, inner(h0).0], f)
}

pub fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// A random instance: `q ≤ q_max`, `q ≤ N ≤ n_max`, `1 ≤ m ≤ m_max`, inputs
/// `U(0.1, 10)`, truth with components in `[0, 2)` (some exactly zero), and
/// lognormal noise of level `sigma`.
#[derive(Debug, Clone)]
pub struct Instance {
    pub q: usize,
    pub u: SignalMatrix,
    pub y: SignalMatrix,
    pub h_star: ImpulseResponse,
}

pub fn random_instance(
    rng: &mut ChaCha8Rng,
    seed: u64,
    index: u32,
    q_max: usize,
    n_max: usize,
    m_max: usize,
    sigma: f64,
) -> Instance {
    let q = rng.random_range(0..=q_max);
    let n = rng.random_range(q.max(1)..=n_max.max(q.max(1)));
    let m = rng.random_range(1..=m_max);
    let mut h: Vec<f64> = (0..=q).map(|_| if rng.random_bool(0.15) { 0.0 } else { rng.random_range(0.05..2.0) }).collect();
    h[0] = h[0].max(0.1);
    let h_star = ImpulseResponse::new(h).unwrap();
    let u = gen_inputs(n, m, &InputLaw::default(), &mut StreamId::new(seed, 0, index, Purpose::Inputs).rng()).unwrap();
    let y = gen_noisy_outputs(
        &h_star,
        &u,
        &NoiseModel::new(sigma).unwrap(),
        &mut StreamId::new(seed, 0, index, Purpose::Noise).rng(),
    )
    .unwrap();
    Instance { q, u, y, h_star }
}
