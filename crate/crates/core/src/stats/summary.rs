//! Sample moments over replication estimates.

use nalgebra::DMatrix;

/// Componentwise sample mean of equal-length vectors.
pub fn mean(samples: &[Vec<f64>]) -> Vec<f64> {
    let dim = samples.first().map_or(0, Vec::len);
    let n = samples.len() as f64;
    (0..dim)
        .map(|k| crate::divergence::compensated_sum(samples.iter().map(|s| s[k])) / n)
        .collect()
}

/// Unbiased sample covariance (divisor `n − 1`), symmetric by construction.
pub fn covariance(samples: &[Vec<f64>]) -> DMatrix<f64> {
    let dim = samples.first().map_or(0, Vec::len);
    let mu = mean(samples);
    let denom = (samples.len().max(2) - 1) as f64;
    let mut out = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        for l in k..dim {
            let c = crate::divergence::compensated_sum(samples.iter().map(|s| (s[k] - mu[k]) * (s[l] - mu[l])))
                / denom;
            out[(k, l)] = c;
            out[(l, k)] = c;
        }
    }
    out
}

/// Skewness and excess kurtosis of a sample, from central moments
/// `m3 / m2^{3/2}` and `m4 / m2² − 3`.
pub fn shape_moments(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mu = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - mu;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 == 0.0 {
        return (0.0, 0.0);
    }
    (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

pub(crate) fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// `max_{a,b} ‖x_a − x_b‖_∞`.
pub fn max_pairwise_distance(samples: &[Vec<f64>]) -> f64 {
    let mut best: f64 = 0.0;
    for (a, xa) in samples.iter().enumerate() {
        for xb in &samples[a + 1..] {
            let d = xa.iter().zip(xb).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            best = best.max(d);
        }
    }
    best
}
