//! Csiszár's I-divergence between unnormalized nonnegative arrays.
//!
//! `I(M || N) = Σ_α (M_α ln(M_α / N_α) − M_α + N_α)` with the conventions
//! `0/0 = 0`, `0 ln 0 = 0` and `p/0 = ∞` for `p > 0`. Zero means exact
//! `0.0`; nothing is snapped to zero inside the kernel.

use std::cmp::Ordering;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// A value in `[0, +∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedNonnegReal {
    Finite(f64),
    Infinite,
}

impl ExtendedNonnegReal {
    pub const ZERO: Self = ExtendedNonnegReal::Finite(0.0);

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedNonnegReal::Finite(_))
    }

    /// The finite value, if any.
    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtendedNonnegReal::Finite(v) => Some(v),
            ExtendedNonnegReal::Infinite => None,
        }
    }

    /// Lossy conversion where `+∞` maps to `f64::INFINITY`.
    pub fn to_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl PartialOrd for ExtendedNonnegReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        use ExtendedNonnegReal::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.partial_cmp(b),
            (Finite(_), Infinite) => Some(Ordering::Less),
            (Infinite, Finite(_)) => Some(Ordering::Greater),
            (Infinite, Infinite) => Some(Ordering::Equal),
        }
    }
}

impl fmt::Display for ExtendedNonnegReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedNonnegReal::Finite(v) => write!(f, "{v:.16e}"),
            ExtendedNonnegReal::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for ExtendedNonnegReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedNonnegReal::Finite(v) => s.serialize_f64(*v),
            ExtendedNonnegReal::Infinite => s.serialize_str("inf"),
        }
    }
}

/// Neumaier's variant of Kahan summation. Deterministic for a fixed input order.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of a sequence, in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<NeumaierSum>().value()
}

/// `d − ln(1 + d)`, accurate for small `|d|` where the direct form cancels.
#[inline]
fn excess_over_log1p(d: f64) -> f64 {
    if d.abs() < 0.03 {
        // alternating series d²/2 − d³/3 + …; 12 terms reach 0.03^12 ≈ 5e-19
        let mut sum = 0.0;
        let mut power = d * d;
        for k in 2..14 {
            let t = power / k as f64;
            sum += if k % 2 == 0 { t } else { -t };
            power *= d;
        }
        sum
    } else {
        d - d.ln_1p()
    }
}

/// Contribution of one entry pair, `None` for `p/0` with `p > 0`.
///
/// Evaluated as `m (d − ln(1 + d))` with `d = (n − m) / m`, which equals
/// `m ln(m/n) − m + n` but keeps full relative accuracy as `n → m`.
#[inline]
pub(crate) fn term(m: f64, n: f64) -> Option<f64> {
    if m == 0.0 {
        Some(n)
    } else if n == 0.0 {
        None
    } else {
        Some(m * excess_over_log1p((n - m) / m))
    }
}

pub(crate) fn check_nonneg(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        Some(idx) => Err(Error::Domain(format!(
            "{what}: entry {idx} is {} (must be finite and nonnegative)",
            values[idx]
        ))),
        None => Ok(()),
    }
}

/// I-divergence of two same-length arrays, summed in the order given
/// (row-major for matrices).
pub fn i_divergence(m: &[f64], n: &[f64]) -> Result<ExtendedNonnegReal> {
    if m.len() != n.len() {
        return Err(Error::Usage(format!(
            "i_divergence: length mismatch ({} vs {})",
            m.len(),
            n.len()
        )));
    }
    check_nonneg(m, "first argument")?;
    check_nonneg(n, "second argument")?;
    Ok(i_divergence_unchecked(m, n))
}

pub(crate) fn i_divergence_unchecked(m: &[f64], n: &[f64]) -> ExtendedNonnegReal {
    let mut acc = NeumaierSum::new();
    for (&a, &b) in m.iter().zip(n) {
        match term(a, b) {
            Some(t) => acc.add(t),
            None => return ExtendedNonnegReal::Infinite,
        }
    }
    // Rounding can push a true zero a hair below it.
    ExtendedNonnegReal::Finite(acc.value().max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn identical_arrays_have_zero_divergence() {
        let m = [1.0, 2.0, 0.0, 3.0];
        assert_eq!(i_divergence(&m, &m).unwrap(), ExtendedNonnegReal::Finite(0.0));
    }

    #[test]
    fn scalar_value_by_hand() {
        let d = i_divergence(&[2.0], &[1.0]).unwrap().finite().unwrap();
        assert_relative_eq!(d, 2.0 * 2f64.ln() - 1.0, max_relative = 1e-15);
        assert_relative_eq!(d, 0.386294, epsilon = 1e-6);
    }

    #[test]
    fn positive_over_zero_is_infinite() {
        assert_eq!(i_divergence(&[1.0], &[0.0]).unwrap(), ExtendedNonnegReal::Infinite);
    }

    #[test]
    fn zero_data_contributes_model_value() {
        assert_eq!(i_divergence(&[0.0], &[5.0]).unwrap(), ExtendedNonnegReal::Finite(5.0));
        assert_eq!(i_divergence(&[0.0], &[0.0]).unwrap(), ExtendedNonnegReal::Finite(0.0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(i_divergence(&[1.0, 2.0], &[1.0]), Err(Error::Usage(_))));
        assert!(matches!(i_divergence(&[-1.0], &[1.0]), Err(Error::Domain(_))));
        assert!(matches!(i_divergence(&[1.0], &[f64::NAN]), Err(Error::Domain(_))));
        assert!(matches!(i_divergence(&[f64::INFINITY], &[1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn ordering_puts_infinity_last() {
        assert!(ExtendedNonnegReal::Finite(1e300) < ExtendedNonnegReal::Infinite);
        assert!(ExtendedNonnegReal::Finite(1.0) < ExtendedNonnegReal::Finite(2.0));
    }

    #[test]
    fn near_equal_entries_keep_relative_accuracy() {
        // m ln(m/n) − m + n with n = m(1 + d): exactly m (d − ln(1 + d)) ≈ m d²/2
        for d in [1e-9, -1e-7, 1e-4, 0.029, 0.031, -0.2] {
            let m = 3.0;
            let n = m * (1.0 + d);
            let got = i_divergence(&[m], &[n]).unwrap().finite().unwrap();
            let dd = (n - m) / m;
            let want = m * (dd - dd.ln_1p());
            let series = m * dd * dd * (0.5 - dd / 3.0 + dd * dd / 4.0 - dd.powi(3) / 5.0);
            if dd.abs() < 1e-3 {
                assert!((got - series).abs() <= 1e-14 * series, "d={d}: {got} vs {series}");
            } else {
                assert!((got - want).abs() <= 1e-12 * want, "d={d}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
    }

    fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..20).prop_flat_map(|n| {
            (
                prop::collection::vec(prop_oneof![Just(0.0), 0.01f64..50.0], n),
                prop::collection::vec(0.01f64..50.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn nonnegative_and_zero_only_on_equality((m, n) in pair()) {
            let d = i_divergence(&m, &n).unwrap().finite().unwrap();
            prop_assert!(d >= 0.0);
            if m != n {
                prop_assert!(d > 0.0);
            }
        }

        #[test]
        fn additive_over_blocks((m1, n1) in pair(), (m2, n2) in pair()) {
            let d1 = i_divergence(&m1, &n1).unwrap().finite().unwrap();
            let d2 = i_divergence(&m2, &n2).unwrap().finite().unwrap();
            let m: Vec<f64> = m1.iter().chain(&m2).copied().collect();
            let n: Vec<f64> = n1.iter().chain(&n2).copied().collect();
            let d = i_divergence(&m, &n).unwrap().finite().unwrap();
            prop_assert!((d - (d1 + d2)).abs() <= 1e-12 * (1.0 + d));
        }

        #[test]
        fn perturbation_is_strictly_positive(m in prop::collection::vec(0.1f64..10.0, 1..10), k in 0usize..10, eps in 1e-3f64..1.0) {
            let mut n = m.clone();
            let k = k % n.len();
            n[k] += eps;
            prop_assert!(i_divergence(&m, &n).unwrap().finite().unwrap() > 0.0);
        }
    }
}
