//! Synthetic inputs and noisy outputs.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linop::{apply_t, ImpulseResponse, SignalMatrix};

/// i.i.d. uniform inputs on `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputLaw {
    pub lower: f64,
    pub upper: f64,
}

impl Default for InputLaw {
    fn default() -> Self {
        Self { lower: 0.1, upper: 10.0 }
    }
}

impl InputLaw {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        let law = Self { lower, upper };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lower > 0.0 && self.lower.is_finite()) {
            return Err(Error::Usage(format!("input lower bound must be positive (got {})", self.lower)));
        }
        if !(self.upper > self.lower && self.upper.is_finite()) {
            return Err(Error::Usage(format!(
                "input upper bound must exceed the lower bound (got [{}, {}])",
                self.lower, self.upper
            )));
        }
        Ok(())
    }
}

/// Multiplicative lognormal noise `δ = exp(σZ − σ²/2)`, so `E δ = 1` for every `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { sigma: 0.1 }
    }
}

impl NoiseModel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::Usage(format!("sigma must be finite and nonnegative (got {sigma})")));
        }
        Ok(Self { sigma })
    }

    pub fn noiseless() -> Self {
        Self { sigma: 0.0 }
    }

    /// One factor from a standard normal draw `z`.
    #[inline]
    pub fn factor(&self, z: f64) -> f64 {
        (self.sigma * z - 0.5 * self.sigma * self.sigma).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.sigma == 0.0 {
            return 1.0;
        }
        let z: f64 = StandardNormal.sample(rng);
        self.factor(z)
    }
}

/// `(N+1) × m` i.i.d. uniform inputs, drawn row-major.
pub fn gen_inputs<R: Rng + ?Sized>(n: usize, m: usize, law: &InputLaw, rng: &mut R) -> Result<SignalMatrix> {
    law.validate()?;
    let dist = Uniform::new_inclusive(law.lower, law.upper)
        .map_err(|e| Error::Usage(format!("input law: {e}")))?;
    let data = (0..(n + 1) * m).map(|_| dist.sample(rng)).collect();
    SignalMatrix::new(n + 1, m, data)
}

/// `(N+1) × m` i.i.d. noise factors, drawn row-major.
pub fn gen_noise<R: Rng + ?Sized>(rows: usize, cols: usize, noise: &NoiseModel, rng: &mut R) -> Result<SignalMatrix> {
    let data = (0..rows * cols).map(|_| noise.sample(rng)).collect();
    SignalMatrix::new(rows, cols, data)
}

/// Entrywise product.
pub(crate) fn hadamard(a: &SignalMatrix, b: &SignalMatrix) -> Result<SignalMatrix> {
    debug_assert_eq!(a.shape(), b.shape());
    let data = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).collect();
    SignalMatrix::new(a.rows(), a.cols(), data)
}

/// `Y_{ij} = (T(h*)U)_{ij} δ_{ij}` with fresh noise from `rng`.
pub fn gen_noisy_outputs<R: Rng + ?Sized>(
    h_star: &ImpulseResponse,
    u: &SignalMatrix,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<SignalMatrix> {
    let clean = apply_t(h_star, u)?;
    if noise.sigma == 0.0 {
        return Ok(clean);
    }
    let delta = gen_noise(u.rows(), u.cols(), noise, rng)?;
    hadamard(&clean, &delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::rng::{Purpose, StreamId};

    #[test]
    fn inputs_respect_the_law_and_stream() {
        let id = StreamId::new(11, 0, 0, Purpose::Inputs);
        let u = gen_inputs(30, 7, &InputLaw::default(), &mut id.rng()).unwrap();
        assert_eq!(u.shape(), (31, 7));
        assert!(u.as_slice().iter().all(|&v| (0.1..=10.0).contains(&v)));
        assert_eq!(u, gen_inputs(30, 7, &InputLaw::default(), &mut id.rng()).unwrap());
    }

    #[test]
    fn narrow_law_is_nearly_constant() {
        let law = InputLaw::new(1.0, 1.0 + 1e-9).unwrap();
        let u = gen_inputs(5, 3, &law, &mut StreamId::new(1, 0, 0, Purpose::Inputs).rng()).unwrap();
        assert!(u.as_slice().iter().all(|&v| (v - 1.0).abs() <= 1e-9));
    }

    #[test]
    fn invalid_laws() {
        assert!(InputLaw::new(1.0, 1.0).is_err());
        assert!(InputLaw::new(0.0, 1.0).is_err());
        assert!(InputLaw::new(2.0, 1.0).is_err());
        assert!(NoiseModel::new(-0.1).is_err());
    }

    #[test]
    fn noiseless_outputs_are_exact() {
        let mut rng = StreamId::new(3, 0, 0, Purpose::Inputs).rng();
        let u = gen_inputs(10, 4, &InputLaw::default(), &mut rng).unwrap();
        let h = ImpulseResponse::new(vec![1.0, 0.5, 0.25]).unwrap();
        let y = gen_noisy_outputs(&h, &u, &NoiseModel::noiseless(), &mut rng).unwrap();
        assert_eq!(y, apply_t(&h, &u).unwrap());
    }

    #[test]
    fn default_noise_matches_shifted_lognormal() {
        let noise = NoiseModel::default();
        for z in [-2.0, -0.3, 0.0, 1.7] {
            assert_eq!(noise.factor(z), (z / 10.0 - 1.0 / 200.0).exp());
        }
    }

    #[test]
    fn noise_has_unit_mean() {
        // Monte Carlo oracle: sd of δ at σ = 0.1 is sqrt(e^{0.01} − 1) ≈ 0.1003, so
        // the mean of 10^6 draws has standard error ≈ 1e-4.
        let noise = NoiseModel::default();
        let mut rng = StreamId::new(2024, 0, 0, Purpose::Noise).rng();
        let n = 1_000_000;
        let mean = (0..n).map(|_| noise.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 1e-3, "mean {mean}");
    }
}
