//! The banded lower-triangular Toeplitz convolution `T(h)` acting on
//! signal matrices, and the derivatives of `F(h) = I(Y || T(h)U)`.
//!
//! `T(h)` is never materialized; every routine runs the convolution
//! `(T(h)U)_{ij} = Σ_{k=0}^{min(i,q)} h_k U_{i−k,j}` directly. Entries with
//! negative time index are excluded by loop bounds.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::divergence::{check_nonneg, i_divergence_unchecked, ExtendedNonnegReal, NeumaierSum};
use crate::error::{Error, Result};

/// An `(N+1) × m` grid of nonnegative finite reals. Rows are time `0..=N`,
/// columns are experiments. Stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SignalMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Usage(format!(
                "signal matrix must have at least one row and one column (got {rows}x{cols})"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Usage(format!(
                "signal matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        check_nonneg(&data, "signal matrix")?;
        Ok(Self { rows, cols, data })
    }

    /// Build from time-indexed rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::Usage(format!(
                "row {r} has {} columns, expected {cols}",
                rows[r].len()
            )));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// A single experiment `(x_0, …, x_N)`.
    pub fn from_column(column: &[f64]) -> Result<Self> {
        Self::new(column.len(), 1, column.to_vec())
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of experiments `m`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Time horizon `N = rows − 1`.
    pub fn horizon(&self) -> usize {
        self.rows - 1
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn total(&self) -> f64 {
        crate::divergence::compensated_sum(self.data.iter().copied())
    }

    /// Entrywise scaling by a nonnegative factor.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.rows, self.cols, self.data.iter().map(|v| v * c).collect())
    }
}

/// A nonnegative impulse response `h = (h_0, …, h_q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ImpulseResponse(Vec<f64>);

impl ImpulseResponse {
    pub fn new(h: Vec<f64>) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::Usage("impulse response must have at least one component".into()));
        }
        check_nonneg(&h, "impulse response")?;
        Ok(Self(h))
    }

    /// A constant vector of length `q + 1`.
    pub fn uniform(q: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; q + 1])
    }

    pub(crate) fn from_raw(h: Vec<f64>) -> Self {
        Self(h)
    }

    /// Order `q` (number of components minus one).
    pub fn order(&self) -> usize {
        self.0.len() - 1
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.0.iter().all(|&v| v > 0.0)
    }

    /// `‖self − other‖_∞`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<f64>> for ImpulseResponse {
    type Error = Error;

    fn try_from(h: Vec<f64>) -> Result<Self> {
        Self::new(h)
    }
}

impl From<ImpulseResponse> for Vec<f64> {
    fn from(h: ImpulseResponse) -> Self {
        h.0
    }
}

impl std::ops::Index<usize> for ImpulseResponse {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// Symmetric `(q+1) × (q+1)` second-derivative matrix of the objective.
pub type CurvatureMatrix = DMatrix<f64>;

pub(crate) fn check_order(u: &SignalMatrix, q: usize) -> Result<()> {
    if u.horizon() < q {
        return Err(Error::Usage(format!(
            "time horizon N = {} is smaller than the order q = {q}",
            u.horizon()
        )));
    }
    Ok(())
}

pub(crate) fn check_pair(u: &SignalMatrix, y: &SignalMatrix) -> Result<()> {
    if u.shape() != y.shape() {
        return Err(Error::Usage(format!(
            "input is {}x{} but output is {}x{}",
            u.rows, u.cols, y.rows, y.cols
        )));
    }
    Ok(())
}

/// `T(h) U`, the output of the moving-average system on every experiment.
pub fn apply_t(h: &ImpulseResponse, u: &SignalMatrix) -> Result<SignalMatrix> {
    check_order(u, h.order())?;
    Ok(convolve(h.as_slice(), u))
}

pub(crate) fn convolve(h: &[f64], u: &SignalMatrix) -> SignalMatrix {
    let (rows, cols) = u.shape();
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        let dst = &mut out[i * cols..(i + 1) * cols];
        for (k, &hk) in h.iter().enumerate().take(i + 1) {
            let src = u.row(i - k);
            for (o, &x) in dst.iter_mut().zip(src) {
                *o += hk * x;
            }
        }
    }
    SignalMatrix::from_raw(rows, cols, out)
}

/// `s_k = Σ_{l=0}^{N−k} Σ_j U_{lj}`, the denominators of the multiplicative update.
pub fn column_weights(u: &SignalMatrix, q: usize) -> Result<Vec<f64>> {
    check_order(u, q)?;
    let row_sums: Vec<f64> = (0..u.rows())
        .map(|i| crate::divergence::compensated_sum(u.row(i).iter().copied()))
        .collect();
    let n = u.horizon();
    Ok((0..=q)
        .map(|k| crate::divergence::compensated_sum(row_sums[..=n - k].iter().copied()))
        .collect())
}

/// `F(h) = I(Y || T(h)U)`.
pub fn objective(h: &ImpulseResponse, u: &SignalMatrix, y: &SignalMatrix) -> Result<ExtendedNonnegReal> {
    check_pair(u, y)?;
    let model = apply_t(h, u)?;
    Ok(i_divergence_unchecked(y.as_slice(), model.as_slice()))
}

/// `Y_{ij} / (T(h)U)_{ij}`, with `0/0 = 0`.
pub(crate) fn ratios(y: &SignalMatrix, model: &SignalMatrix) -> Result<Vec<f64>> {
    let cols = y.cols();
    y.as_slice()
        .iter()
        .zip(model.as_slice())
        .enumerate()
        .map(|(idx, (&yv, &mv))| {
            if yv == 0.0 {
                Ok(0.0)
            } else if mv == 0.0 {
                Err(Error::Infeasible { row: idx / cols, col: idx % cols })
            } else {
                Ok(yv / mv)
            }
        })
        .collect()
}

/// `c_k = Σ_j Σ_{i=k}^N U_{i−k,j} r_{ij}`, accumulated row-major per `k`.
pub(crate) fn lagged_correlation(u: &SignalMatrix, r: &[f64], q: usize) -> Vec<f64> {
    let (rows, cols) = u.shape();
    (0..=q)
        .map(|k| {
            let mut acc = NeumaierSum::new();
            for i in k..rows {
                let ui = u.row(i - k);
                let ri = &r[i * cols..(i + 1) * cols];
                for (a, b) in ui.iter().zip(ri) {
                    acc.add(a * b);
                }
            }
            acc.value()
        })
        .collect()
}

/// `∂F/∂h_k = s_k − Σ_j Σ_{i=k}^N U_{i−k,j} Y_{ij} / (T(h)U)_{ij}`.
pub fn gradient(h: &ImpulseResponse, u: &SignalMatrix, y: &SignalMatrix) -> Result<Vec<f64>> {
    check_pair(u, y)?;
    let q = h.order();
    let s = column_weights(u, q)?;
    let model = convolve(h.as_slice(), u);
    let r = ratios(y, &model)?;
    let c = lagged_correlation(u, &r, q);
    Ok(s.iter().zip(&c).map(|(sk, ck)| sk - ck).collect())
}

/// `H_{kl} = Σ_{ij} Y_{ij} U_{i−k,j} U_{i−l,j} / (T(h)U)_{ij}²`.
pub fn curvature(h: &ImpulseResponse, u: &SignalMatrix, y: &SignalMatrix) -> Result<CurvatureMatrix> {
    check_pair(u, y)?;
    let q = h.order();
    check_order(u, q)?;
    let model = convolve(h.as_slice(), u);
    let r = ratios(y, &model)?;
    // weight Y / M² = r / M, zero where Y = 0
    let w: Vec<f64> = r
        .iter()
        .zip(model.as_slice())
        .map(|(&ri, &mi)| if ri == 0.0 { 0.0 } else { ri / mi })
        .collect();
    Ok(lagged_gram(u, &w, q))
}

/// `G_{kl} = Σ_j Σ_i w_{ij} U_{i−k,j} U_{i−l,j}`, symmetric by construction.
pub(crate) fn lagged_gram(u: &SignalMatrix, w: &[f64], q: usize) -> DMatrix<f64> {
    let (rows, cols) = u.shape();
    let mut out = DMatrix::zeros(q + 1, q + 1);
    for k in 0..=q {
        for l in k..=q {
            let mut acc = NeumaierSum::new();
            for i in l..rows {
                let uk = u.row(i - k);
                let ul = u.row(i - l);
                let wi = &w[i * cols..(i + 1) * cols];
                for j in 0..cols {
                    acc.add(wi[j] * uk[j] * ul[j]);
                }
            }
            out[(k, l)] = acc.value();
            out[(l, k)] = out[(k, l)];
        }
    }
    out
}
