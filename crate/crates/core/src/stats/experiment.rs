//! Monte Carlo harnesses for the large-sample behaviour of the fitted
//! impulse response.
//!
//! A run is a ladder of `(N, m)` scales. At each scale every replication
//! draws fresh inputs and noise from its own substream, fits, and records the
//! estimate. Replications may run on a thread pool; aggregation always walks
//! them in `(scale, replication)` order, so reports do not depend on the
//! schedule.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::{gen_inputs, gen_noise, hadamard, InputLaw, NoiseModel};
use super::rng::{Purpose, StreamId};
use super::summary::{covariance, max_pairwise_distance, mean, min_eigenvalue, shape_moments, to_rows};
use crate::error::{Error, Result};
use crate::linop::{check_order, convolve, curvature, lagged_gram, ImpulseResponse, SignalMatrix};
use crate::solver::{boundary_eps, fit, FitConfig, FitStatus};

/// Which index grows, and hence the `√scale` normalization of the errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `m → ∞` with `N` fixed; errors scaled by `√m`.
    ColumnsIid,
    /// `N → ∞` with `m` fixed; errors scaled by `√N`.
    RowsIid,
    /// `N, m → ∞` jointly; errors scaled by `√(N m)`.
    ArrayIid,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::ColumnsIid, Regime::RowsIid, Regime::ArrayIid];

    pub fn name(self) -> &'static str {
        match self {
            Regime::ColumnsIid => "columns_iid",
            Regime::RowsIid => "rows_iid",
            Regime::ArrayIid => "array_iid",
        }
    }

    pub fn scale_factor(self, scale: Scale) -> f64 {
        match self {
            Regime::ColumnsIid => scale.m as f64,
            Regime::RowsIid => scale.n as f64,
            Regime::ArrayIid => (scale.n * scale.m) as f64,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Regime::ALL.into_iter().find(|r| r.name() == s).ok_or_else(|| {
            Error::Usage(format!(
                "unknown regime '{s}'; valid regimes are columns_iid, rows_iid, array_iid"
            ))
        })
    }
}

/// One rung of the ladder: horizon `N` (so `N + 1` time points) and `m` experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scale {
    pub n: usize,
    pub m: usize,
}

impl Scale {
    pub fn new(n: usize, m: usize) -> Self {
        Self { n, m }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Serial,
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeSpec {
    pub regime: Regime,
    pub scales: Vec<Scale>,
    pub replications: usize,
    pub h_star: ImpulseResponse,
    pub noise: NoiseModel,
    pub inputs: InputLaw,
    pub seed: u64,
}

fn validate_ladder(scales: &[Scale], replications: usize, q: usize) -> Result<()> {
    if replications < 2 {
        return Err(Error::Usage(format!("replications must be at least 2 (got {replications})")));
    }
    if scales.is_empty() {
        return Err(Error::Usage("at least one (N, m) scale is required".into()));
    }
    if scales.len() as u32 >= super::rng::MAX_SCALES || replications > u32::MAX as usize {
        return Err(Error::Usage("too many scales or replications".into()));
    }
    for s in scales {
        if s.m == 0 {
            return Err(Error::Usage("every scale needs m >= 1".into()));
        }
        if s.n < q {
            return Err(Error::Usage(format!("scale (N={}, m={}) has N < q = {q}", s.n, s.m)));
        }
    }
    Ok(())
}

impl RegimeSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.h_star.is_strictly_positive() {
            return Err(Error::Usage("h_star must be an interior point (all components > 0)".into()));
        }
        self.inputs.validate()?;
        NoiseModel::new(self.noise.sigma)?;
        validate_ladder(&self.scales, self.replications, self.h_star.order())
    }
}

/// A system mapping nonnegative inputs to outputs, one column per experiment.
pub trait OutputSystem: Sync {
    /// Row-major `(N+1) × m` outputs for `u`.
    fn respond(&self, u: &SignalMatrix) -> Vec<f64>;

    fn describe(&self) -> serde_json::Value {
        serde_json::Value::String("custom".into())
    }
}

/// Built-in positive systems for misspecified-model experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    /// An exact moving average; the model is then correctly specified.
    Convolution { h: ImpulseResponse },
    /// `y_t = a y_{t−1} + Σ_k b_k u_{t−k}`, `y_{−1} = 0`.
    Iir { a: f64, b: Vec<f64> },
    /// `y = (T(h)u)^p` entrywise.
    Power { h: ImpulseResponse, exponent: f64 },
}

impl Generator {
    pub fn validate(&self) -> Result<()> {
        match self {
            Generator::Convolution { .. } => Ok(()),
            Generator::Iir { a, b } => {
                if !(*a > 0.0 && *a < 1.0) {
                    return Err(Error::Usage(format!("IIR pole a must lie in (0, 1) (got {a})")));
                }
                if b.is_empty() || b.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::Usage("IIR numerator b must be nonempty and nonnegative".into()));
                }
                Ok(())
            }
            Generator::Power { exponent, .. } => {
                if !(*exponent > 0.0 && exponent.is_finite()) {
                    return Err(Error::Usage(format!("power exponent must be positive (got {exponent})")));
                }
                Ok(())
            }
        }
    }
}

impl OutputSystem for Generator {
    fn respond(&self, u: &SignalMatrix) -> Vec<f64> {
        match self {
            Generator::Convolution { h } => {
                let h = &h.as_slice()[..h.len().min(u.rows())];
                convolve(h, u).as_slice().to_vec()
            }
            Generator::Iir { a, b } => {
                let b = &b[..b.len().min(u.rows())];
                let mut y = convolve(b, u).as_slice().to_vec();
                let cols = u.cols();
                for idx in cols..y.len() {
                    y[idx] += a * y[idx - cols];
                }
                y
            }
            Generator::Power { h, exponent } => {
                let h = &h.as_slice()[..h.len().min(u.rows())];
                convolve(h, u).as_slice().iter().map(|v| v.powf(*exponent)).collect()
            }
        }
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MisspecifiedSpec {
    pub q: usize,
    pub scales: Vec<Scale>,
    pub replications: usize,
    pub noise: NoiseModel,
    pub inputs: InputLaw,
    pub seed: u64,
}

impl MisspecifiedSpec {
    pub fn validate(&self) -> Result<()> {
        self.inputs.validate()?;
        NoiseModel::new(self.noise.sigma)?;
        validate_ladder(&self.scales, self.replications, self.q)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicationEstimate {
    pub scale_index: usize,
    pub n: usize,
    pub m: usize,
    pub replication: usize,
    pub status: FitStatus,
    pub iterations: usize,
    /// `None` for ill-posed replications.
    pub h_hat: Option<Vec<f64>>,
}

/// Error metrics against a known true impulse response.
#[derive(Debug, Clone, Serialize)]
pub struct TruthMetrics {
    pub bias: Vec<f64>,
    /// Componentwise `sqrt(mean (ĥ_k − h*_k)²)`.
    pub rmse: Vec<f64>,
    /// `sqrt(mean ‖ĥ − h*‖²)`.
    pub rmse_norm: f64,
    /// `√scale · rmse`.
    pub scaled_rmse: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScaleSummary {
    pub n: usize,
    pub m: usize,
    /// `N / m`.
    pub rho: f64,
    pub scale_factor: f64,
    pub replications_used: usize,
    pub excluded_ill_posed: usize,
    pub not_converged: usize,
    pub mean_iterations: f64,
    pub mean_estimate: Vec<f64>,
    pub truth: Option<TruthMetrics>,
    /// Sample covariance of `√scale · ĥ`.
    pub scaled_covariance: Vec<Vec<f64>>,
    pub scaled_covariance_min_eigenvalue: f64,
    /// Average over replications of `scale · A⁻¹ B A⁻¹`, with `A` the curvature
    /// at `ĥ` and `B` the residual outer product of the score. Diagnostic only.
    pub sandwich_covariance: Option<Vec<Vec<f64>>>,
    pub skewness: Vec<f64>,
    pub excess_kurtosis: Vec<f64>,
    /// Largest `‖ĥ_a − ĥ_b‖_∞` over replication pairs.
    pub spread: f64,
    /// `‖mean(first half) − mean(second half)‖_∞` over replication indices.
    pub half_gap: f64,
    /// Per component, how many replications ended on the boundary `h_k = 0`.
    pub boundary_counts: Vec<usize>,
    pub max_kkt_residual: f64,
    pub noise_mean: f64,
    pub noise_std_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    /// Regime name, or `"misspecified"`.
    pub kind: String,
    pub q: usize,
    pub h_star: Option<ImpulseResponse>,
    pub generator: Option<serde_json::Value>,
    pub sigma: f64,
    pub inputs: InputLaw,
    pub seed: u64,
    pub replications: usize,
    pub scales: Vec<ScaleSummary>,
    /// Every componentwise RMSE strictly decreases along the ladder (known truth only).
    pub rmse_decreasing: Option<bool>,
    /// Largest max/min ratio of `√scale · rmse` across the ladder, over components.
    pub scaled_rmse_band: Option<f64>,
    pub spread_shrinks: bool,
    pub half_gap_shrinks: bool,
    pub total_excluded: usize,
    pub estimates: Vec<ReplicationEstimate>,
}

struct Replication {
    estimate: ReplicationEstimate,
    on_boundary: Vec<bool>,
    kkt_residual: f64,
    noise_sum: f64,
    noise_sumsq: f64,
    noise_count: usize,
    sandwich: Option<DMatrix<f64>>,
}

struct Harness<'a, S: OutputSystem + ?Sized> {
    system: &'a S,
    q: usize,
    scales: &'a [Scale],
    replications: usize,
    noise: NoiseModel,
    inputs: InputLaw,
    seed: u64,
    scaling: Regime,
    fit_config: FitConfig,
}

impl<S: OutputSystem + ?Sized> Harness<'_, S> {
    fn run_one(&self, scale_index: usize, replication: usize) -> Result<Replication> {
        let scale = self.scales[scale_index];
        let stream = |purpose| StreamId::new(self.seed, scale_index as u32, replication as u32, purpose);
        let u = gen_inputs(scale.n, scale.m, &self.inputs, &mut stream(Purpose::Inputs).rng())?;
        check_order(&u, self.q)?;
        let clean = SignalMatrix::new(u.rows(), u.cols(), self.system.respond(&u))
            .map_err(|e| match e {
                Error::Domain(msg) => Error::Domain(format!("generator produced invalid output: {msg}")),
                other => other,
            })?;
        let (y, noise_sum, noise_sumsq, noise_count) = if self.noise.sigma == 0.0 {
            (clean, 0.0, 0.0, 0)
        } else {
            let delta = gen_noise(u.rows(), u.cols(), &self.noise, &mut stream(Purpose::Noise).rng())?;
            let s: f64 = delta.as_slice().iter().sum();
            let s2: f64 = delta.as_slice().iter().map(|d| d * d).sum();
            (hadamard(&clean, &delta)?, s, s2, delta.as_slice().len())
        };

        let res = fit(&u, &y, self.q, &self.fit_config)?;
        let ill = res.status == FitStatus::IllPosed;
        let (on_boundary, sandwich) = if ill {
            (vec![false; self.q + 1], None)
        } else {
            let eps = boundary_eps(&u, &y, self.q)?;
            let flags = res.h_hat.as_slice().iter().map(|&v| v <= eps).collect();
            let sf = self.scaling.scale_factor(scale);
            (flags, sandwich(&res.h_hat, &u, &y, sf))
        };
        Ok(Replication {
            estimate: ReplicationEstimate {
                scale_index,
                n: scale.n,
                m: scale.m,
                replication,
                status: res.status,
                iterations: res.iterations_used,
                h_hat: (!ill).then(|| res.h_hat.into_vec()),
            },
            on_boundary,
            kkt_residual: res.kkt_residual,
            noise_sum,
            noise_sumsq,
            noise_count,
            sandwich,
        })
    }

    fn run(&self, truth: Option<&ImpulseResponse>, kind: String, generator: Option<serde_json::Value>, exec: Execution) -> Result<ExperimentReport> {
        let jobs: Vec<(usize, usize)> = (0..self.scales.len())
            .flat_map(|s| (0..self.replications).map(move |r| (s, r)))
            .collect();
        let outcomes: Vec<Replication> = match exec {
            Execution::Serial => jobs.iter().map(|&(s, r)| self.run_one(s, r)).collect::<Result<_>>()?,
            Execution::Parallel => jobs.par_iter().map(|&(s, r)| self.run_one(s, r)).collect::<Result<_>>()?,
        };

        let scales: Vec<ScaleSummary> = outcomes
            .chunks(self.replications)
            .zip(self.scales)
            .map(|(reps, &scale)| self.summarize(scale, reps, truth))
            .collect();

        let rmse_decreasing = truth.map(|_| {
            (0..=self.q).all(|k| {
                scales
                    .windows(2)
                    .all(|w| w[1].truth.as_ref().unwrap().rmse[k] < w[0].truth.as_ref().unwrap().rmse[k])
            })
        });
        let scaled_rmse_band = truth.map(|_| {
            (0..=self.q)
                .map(|k| {
                    let vals: Vec<f64> = scales.iter().map(|s| s.truth.as_ref().unwrap().scaled_rmse[k]).collect();
                    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
                    hi / lo
                })
                .fold(1.0, f64::max)
        });
        let first = &scales[0];
        let last = &scales[scales.len() - 1];
        let spread_shrinks = last.spread < first.spread;
        let half_gap_shrinks = last.half_gap < first.half_gap;
        let total_excluded = scales.iter().map(|s| s.excluded_ill_posed).sum();

        Ok(ExperimentReport {
            kind,
            q: self.q,
            h_star: truth.cloned(),
            generator,
            sigma: self.noise.sigma,
            inputs: self.inputs,
            seed: self.seed,
            replications: self.replications,
            rmse_decreasing,
            scaled_rmse_band,
            spread_shrinks,
            half_gap_shrinks,
            total_excluded,
            scales,
            estimates: outcomes.into_iter().map(|o| o.estimate).collect(),
        })
    }

    fn summarize(&self, scale: Scale, reps: &[Replication], truth: Option<&ImpulseResponse>) -> ScaleSummary {
        let dim = self.q + 1;
        let sf = self.scaling.scale_factor(scale);
        let valid: Vec<&Replication> = reps.iter().filter(|r| r.estimate.h_hat.is_some()).collect();
        let estimates: Vec<Vec<f64>> = valid.iter().map(|r| r.estimate.h_hat.clone().unwrap()).collect();
        let excluded = reps.len() - valid.len();

        let mean_estimate = if estimates.is_empty() { vec![f64::NAN; dim] } else { mean(&estimates) };
        let scaled: Vec<Vec<f64>> = estimates.iter().map(|e| e.iter().map(|v| sf.sqrt() * v).collect()).collect();
        let cov = covariance(&scaled);
        let mut skewness = Vec::with_capacity(dim);
        let mut excess_kurtosis = Vec::with_capacity(dim);
        for k in 0..dim {
            let xs: Vec<f64> = estimates.iter().map(|e| e[k]).collect();
            let (s, kurt) = shape_moments(&xs);
            skewness.push(s);
            excess_kurtosis.push(kurt);
        }

        let truth_metrics = truth.map(|h| {
            let h = h.as_slice();
            let n = estimates.len() as f64;
            let bias: Vec<f64> = (0..dim).map(|k| mean_estimate[k] - h[k]).collect();
            let rmse: Vec<f64> = (0..dim)
                .map(|k| (estimates.iter().map(|e| (e[k] - h[k]).powi(2)).sum::<f64>() / n).sqrt())
                .collect();
            let rmse_norm = (rmse.iter().map(|r| r * r).sum::<f64>()).sqrt();
            let scaled_rmse = rmse.iter().map(|r| sf.sqrt() * r).collect();
            TruthMetrics { bias, rmse, rmse_norm, scaled_rmse }
        });

        let sandwiches: Vec<&DMatrix<f64>> = valid.iter().filter_map(|r| r.sandwich.as_ref()).collect();
        let sandwich_covariance = (!sandwiches.is_empty()).then(|| {
            let mut acc = DMatrix::zeros(dim, dim);
            for s in &sandwiches {
                acc += *s;
            }
            to_rows(&(acc / sandwiches.len() as f64))
        });

        let half = self.replications / 2;
        let (first, second): (Vec<_>, Vec<_>) = valid.iter().partition(|r| r.estimate.replication < half);
        let half_mean = |rs: &[&&Replication]| {
            let es: Vec<Vec<f64>> = rs.iter().map(|r| r.estimate.h_hat.clone().unwrap()).collect();
            mean(&es)
        };
        let half_gap = if first.is_empty() || second.is_empty() {
            f64::NAN
        } else {
            half_mean(&first)
                .iter()
                .zip(half_mean(&second))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };

        let boundary_counts = (0..dim).map(|k| valid.iter().filter(|r| r.on_boundary[k]).count()).collect();
        let noise_count: usize = reps.iter().map(|r| r.noise_count).sum();
        let (noise_mean, noise_std_error) = if noise_count == 0 {
            (1.0, 0.0)
        } else {
            let n = noise_count as f64;
            let mu = reps.iter().map(|r| r.noise_sum).sum::<f64>() / n;
            let m2 = reps.iter().map(|r| r.noise_sumsq).sum::<f64>() / n;
            (mu, ((m2 - mu * mu).max(0.0) * n / (n - 1.0)).sqrt() / n.sqrt())
        };

        ScaleSummary {
            n: scale.n,
            m: scale.m,
            rho: scale.n as f64 / scale.m as f64,
            scale_factor: sf,
            replications_used: valid.len(),
            excluded_ill_posed: excluded,
            not_converged: valid.iter().filter(|r| r.estimate.status == FitStatus::MaxIterations).count(),
            mean_iterations: valid.iter().map(|r| r.estimate.iterations as f64).sum::<f64>() / valid.len().max(1) as f64,
            mean_estimate,
            truth: truth_metrics,
            scaled_covariance_min_eigenvalue: min_eigenvalue(&cov),
            scaled_covariance: to_rows(&cov),
            sandwich_covariance,
            skewness,
            excess_kurtosis,
            spread: max_pairwise_distance(&estimates),
            half_gap,
            boundary_counts,
            max_kkt_residual: valid.iter().map(|r| r.kkt_residual).fold(0.0, f64::max),
            noise_mean,
            noise_std_error,
        }
    }
}

/// `scale · A⁻¹ B A⁻¹` at `ĥ`, or `None` when the curvature is singular.
fn sandwich(h: &ImpulseResponse, u: &SignalMatrix, y: &SignalMatrix, scale_factor: f64) -> Option<DMatrix<f64>> {
    let a = curvature(h, u, y).ok()?;
    let model = convolve(h.as_slice(), u);
    let w: Vec<f64> = y
        .as_slice()
        .iter()
        .zip(model.as_slice())
        .map(|(&yv, &mv)| {
            let r = if mv > 0.0 { 1.0 - yv / mv } else { 0.0 };
            r * r
        })
        .collect();
    let b = lagged_gram(u, &w, h.order());
    let a_inv = a.cholesky()?.inverse();
    Some(&a_inv * b * &a_inv * scale_factor)
}

struct Noiseless<'a>(&'a ImpulseResponse);

impl OutputSystem for Noiseless<'_> {
    fn respond(&self, u: &SignalMatrix) -> Vec<f64> {
        convolve(self.0.as_slice(), u).as_slice().to_vec()
    }
}

/// Well-specified experiment: outputs are `T(h*)U` times lognormal noise.
pub fn run_regime(spec: &RegimeSpec, fit_config: &FitConfig, exec: Execution) -> Result<ExperimentReport> {
    spec.validate()?;
    fit_config.validate()?;
    let system = Noiseless(&spec.h_star);
    let harness = Harness {
        system: &system,
        q: spec.h_star.order(),
        scales: &spec.scales,
        replications: spec.replications,
        noise: spec.noise,
        inputs: spec.inputs,
        seed: spec.seed,
        scaling: spec.regime,
        fit_config: FitConfig { trace: false, ..fit_config.clone() },
    };
    harness.run(Some(&spec.h_star), spec.regime.name().to_string(), None, exec)
}

/// Experiment on data from an arbitrary positive system. The best
/// approximating impulse response is not known in closed form, so the report
/// carries spread and half-gap diagnostics instead of errors. Scaled
/// covariances use the `√(N m)` normalization.
pub fn run_misspecified<S: OutputSystem + ?Sized>(
    generator: &S,
    spec: &MisspecifiedSpec,
    fit_config: &FitConfig,
    exec: Execution,
) -> Result<ExperimentReport> {
    spec.validate()?;
    fit_config.validate()?;
    let harness = Harness {
        system: generator,
        q: spec.q,
        scales: &spec.scales,
        replications: spec.replications,
        noise: spec.noise,
        inputs: spec.inputs,
        seed: spec.seed,
        scaling: Regime::ArrayIid,
        fit_config: FitConfig { trace: false, ..fit_config.clone() },
    };
    harness.run(None, "misspecified".into(), Some(generator.describe()), exec)
}
