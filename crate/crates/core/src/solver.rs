//! Alternating-minimization fit of a nonnegative impulse response.
//!
//! One step of the iteration is the multiplicative update
//!
//! ```text
//! h'_k = (h_k / s_k) · Σ_j Σ_{i=k}^N  Y_{ij} U_{i−k,j} / (T(h)U)_{ij}
//! ```
//!
//! with `s_k` the column weights of `U`. Writing `c_k` for the double sum,
//! the gradient of `F(h) = I(Y || T(h)U)` is `g_k = s_k − c_k`, so the step
//! ratio is `h'_k / h_k = 1 − g_k / s_k`: a component grows exactly when the
//! objective decreases in that coordinate. After one step every iterate
//! satisfies `Σ_k h_k s_k = Σ_{ij} Y_{ij}`.

use serde::Serialize;

use crate::divergence::{compensated_sum, i_divergence_unchecked, ExtendedNonnegReal};
use crate::error::{Error, Result};
use crate::linop::{
    check_order, check_pair, column_weights, convolve, gradient, lagged_correlation, ratios,
    ImpulseResponse, SignalMatrix,
};

pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;
pub const DEFAULT_DIVERGENCE_TOL: f64 = 1e-12;
pub const DEFAULT_PARAM_TOL: f64 = 1e-10;
pub const DEFAULT_KKT_TOL: f64 = 1e-6;
/// Relative size, against the default initializer level, below which a
/// component counts as sitting on the boundary `h_k = 0`.
pub const BOUNDARY_REL_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitConfig {
    pub max_iterations: usize,
    /// Stop once `F(h^t) − F(h^{t+1})` is at most this and the KKT residual
    /// is at most `kkt_tol`.
    pub divergence_tol: f64,
    /// Stop once `max_k |h^{t+1}_k − h^t_k| / max(h^t_k, h^{t+1}_k)` is at most this.
    pub param_tol: f64,
    pub kkt_tol: f64,
    /// Starting point; `None` selects [`default_initial_h`].
    pub initial_h: Option<ImpulseResponse>,
    /// Keep every iterate in [`FitResult::iterate_trace`].
    pub trace: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            divergence_tol: DEFAULT_DIVERGENCE_TOL,
            param_tol: DEFAULT_PARAM_TOL,
            kkt_tol: DEFAULT_KKT_TOL,
            initial_h: None,
            trace: false,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Usage("max_iterations must be at least 1".into()));
        }
        for (name, v) in [
            ("divergence_tol", self.divergence_tol),
            ("param_tol", self.param_tol),
            ("kkt_tol", self.kkt_tol),
        ] {
            if v.is_nan() || v < 0.0 {
                return Err(Error::Usage(format!("{name} must be nonnegative (got {v})")));
            }
        }
        if let Some(h0) = &self.initial_h {
            if !h0.is_strictly_positive() {
                return Err(Error::Usage(
                    "initial impulse response must be strictly positive componentwise".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    ConvergedParam,
    ConvergedDivergence,
    MaxIterations,
    IllPosed,
}

impl FitStatus {
    pub fn is_converged(self) -> bool {
        matches!(self, FitStatus::ConvergedParam | FitStatus::ConvergedDivergence)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FitStatus::ConvergedParam => "converged_param",
            FitStatus::ConvergedDivergence => "converged_divergence",
            FitStatus::MaxIterations => "max_iterations",
            FitStatus::IllPosed => "ill_posed",
        }
    }
}

/// Outcome of the well-posedness check: every time index `i` needs an
/// experiment `j` with `U_{0j} > 0` and `Y_{ij} > 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditionReport {
    pub holds: bool,
    pub failing_rows: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub h_hat: ImpulseResponse,
    /// `F(h^0), F(h^1), …`; entry `t` belongs to iterate `t`.
    pub divergence_trace: Vec<ExtendedNonnegReal>,
    /// `h^0, h^1, …` when tracing was requested.
    pub iterate_trace: Option<Vec<ImpulseResponse>>,
    pub kkt_residual: f64,
    pub iterations_used: usize,
    pub status: FitStatus,
    pub condition: ConditionReport,
}

impl FitResult {
    pub fn final_divergence(&self) -> ExtendedNonnegReal {
        *self.divergence_trace.last().unwrap_or(&ExtendedNonnegReal::Infinite)
    }
}

pub fn check_condition_sc(u: &SignalMatrix, y: &SignalMatrix) -> Result<ConditionReport> {
    check_pair(u, y)?;
    let first = u.row(0);
    let failing_rows: Vec<usize> = (0..y.rows())
        .filter(|&i| !y.row(i).iter().zip(first).any(|(&yv, &u0)| yv > 0.0 && u0 > 0.0))
        .collect();
    Ok(ConditionReport { holds: failing_rows.is_empty(), failing_rows })
}

fn require_positive_weights(s: &[f64]) -> Result<()> {
    match s.iter().position(|&v| v <= 0.0) {
        Some(k) => Err(Error::Degenerate(format!(
            "column weight s_{k} is zero; the update for h_{k} is undefined"
        ))),
        None => Ok(()),
    }
}

fn update(h: &[f64], s: &[f64], c: &[f64]) -> Vec<f64> {
    h.iter()
        .zip(s)
        .zip(c)
        .map(|((&hk, &sk), &ck)| if hk == 0.0 { 0.0 } else { hk / sk * ck })
        .collect()
}

/// One multiplicative update `h ↦ I(h)`.
pub fn em_step(h: &ImpulseResponse, u: &SignalMatrix, y: &SignalMatrix) -> Result<ImpulseResponse> {
    check_pair(u, y)?;
    let q = h.order();
    let s = column_weights(u, q)?;
    require_positive_weights(&s)?;
    let model = convolve(h.as_slice(), u);
    let r = ratios(y, &model)?;
    let c = lagged_correlation(u, &r, q);
    Ok(ImpulseResponse::from_raw(update(h.as_slice(), &s, &c)))
}

/// Uniform start at level `Σ Y / Σ_k s_k`, which already satisfies the
/// simplex identity. For `q = 0` this is the exact minimizer.
pub fn default_initial_h(u: &SignalMatrix, y: &SignalMatrix, q: usize) -> Result<ImpulseResponse> {
    check_pair(u, y)?;
    let s = column_weights(u, q)?;
    let s_total = compensated_sum(s.iter().copied());
    if s_total <= 0.0 {
        return Err(Error::Degenerate("all inputs are zero".into()));
    }
    ImpulseResponse::uniform(q, y.total() / s_total)
}

/// Components at or below this are treated as zero in KKT classification.
pub fn boundary_eps(u: &SignalMatrix, y: &SignalMatrix, q: usize) -> Result<f64> {
    let s = column_weights(u, q)?;
    let s_total = compensated_sum(s.iter().copied());
    Ok(if s_total > 0.0 { BOUNDARY_REL_EPS * y.total() / s_total } else { 0.0 })
}

/// Per-component view of the first-order optimality conditions.
#[derive(Debug, Clone, Serialize)]
pub struct KktReport {
    pub gradient: Vec<f64>,
    pub on_boundary: Vec<bool>,
    /// `|g_k|` on interior components, `max(0, −g_k)` on boundary ones.
    pub residuals: Vec<f64>,
    pub residual: f64,
    pub boundary_eps: f64,
}

pub fn kkt_report(h: &ImpulseResponse, u: &SignalMatrix, y: &SignalMatrix) -> Result<KktReport> {
    let g = gradient(h, u, y)?;
    let eps = boundary_eps(u, y, h.order())?;
    let on_boundary: Vec<bool> = h.as_slice().iter().map(|&hk| hk <= eps).collect();
    let residuals: Vec<f64> = g
        .iter()
        .zip(&on_boundary)
        .map(|(&gk, &b)| if b { (-gk).max(0.0) } else { gk.abs() })
        .collect();
    let residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(KktReport { gradient: g, on_boundary, residuals, residual, boundary_eps: eps })
}

/// `max_k r_k`; zero certifies a global minimizer since `F` is convex.
pub fn kkt_residual(h: &ImpulseResponse, u: &SignalMatrix, y: &SignalMatrix) -> Result<f64> {
    Ok(kkt_report(h, u, y)?.residual)
}

fn max_relative_change(old: &[f64], new: &[f64]) -> f64 {
    old.iter()
        .zip(new)
        .map(|(&a, &b)| {
            let scale = a.max(b);
            if scale == 0.0 {
                0.0
            } else {
                (a - b).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

fn ill_posed(h: ImpulseResponse, f0: ExtendedNonnegReal, trace: bool, condition: ConditionReport) -> FitResult {
    FitResult {
        iterate_trace: trace.then(|| vec![h.clone()]),
        h_hat: h,
        divergence_trace: vec![f0],
        kkt_residual: f64::INFINITY,
        iterations_used: 0,
        status: FitStatus::IllPosed,
        condition,
    }
}

/// Run the multiplicative iteration to one of the stopping rules.
///
/// Shape errors and `N < q` are returned as `Err`. Data on which the
/// iteration cannot start (infinite `F(h^0)`, zero column weights) yields a
/// result with status [`FitStatus::IllPosed`]. A failed well-posedness
/// condition is reported in [`FitResult::condition`] but does not stop the fit.
pub fn fit(u: &SignalMatrix, y: &SignalMatrix, q: usize, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    check_pair(u, y)?;
    check_order(u, q)?;
    if let Some(h0) = &config.initial_h {
        if h0.order() != q {
            return Err(Error::Usage(format!(
                "initial impulse response has order {} but q = {q}",
                h0.order()
            )));
        }
    }
    let condition = check_condition_sc(u, y)?;

    let s = column_weights(u, q)?;
    let h0 = match &config.initial_h {
        Some(h0) => h0.clone(),
        None => match default_initial_h(u, y, q) {
            Ok(h0) => h0,
            Err(Error::Degenerate(_)) => {
                return Ok(ill_posed(
                    ImpulseResponse::from_raw(vec![0.0; q + 1]),
                    ExtendedNonnegReal::Infinite,
                    config.trace,
                    condition,
                ))
            }
            Err(e) => return Err(e),
        },
    };

    let mut model = convolve(h0.as_slice(), u);
    let f0 = i_divergence_unchecked(y.as_slice(), model.as_slice());
    if !f0.is_finite() || require_positive_weights(&s).is_err() {
        return Ok(ill_posed(h0, f0, config.trace, condition));
    }

    let mut h = h0;
    let mut f = f0;
    let mut divergence_trace = vec![f];
    let mut iterate_trace = config.trace.then(|| vec![h.clone()]);
    let mut status = FitStatus::MaxIterations;
    let mut iterations_used = 0;

    for t in 1..=config.max_iterations {
        let r = ratios(y, &model)?;
        let c = lagged_correlation(u, &r, q);
        let next = ImpulseResponse::from_raw(update(h.as_slice(), &s, &c));
        model = convolve(next.as_slice(), u);
        let f_next = i_divergence_unchecked(y.as_slice(), model.as_slice());

        let change = max_relative_change(h.as_slice(), next.as_slice());
        let decrease = f.to_f64() - f_next.to_f64();
        iterations_used = t;
        divergence_trace.push(f_next);
        if let Some(tr) = iterate_trace.as_mut() {
            tr.push(next.clone());
        }
        h = next;
        f = f_next;

        // For q = 0 the update does not depend on h, so h^1 is already a fixed point.
        if q == 0 || change <= config.param_tol {
            status = FitStatus::ConvergedParam;
            break;
        }
        // A small decrease alone does not bound the distance to the minimizer
        // when the linear rate is slow, so the first-order conditions must hold too.
        if decrease <= config.divergence_tol && kkt_residual(&h, u, y)? <= config.kkt_tol {
            status = FitStatus::ConvergedDivergence;
            break;
        }
    }

    let kkt_residual = kkt_residual(&h, u, y)?;
    Ok(FitResult {
        h_hat: h,
        divergence_trace,
        iterate_trace,
        kkt_residual,
        iterations_used,
        status,
        condition,
    })
}
