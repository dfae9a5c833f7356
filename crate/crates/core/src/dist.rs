//! The general half-normal distribution HN(ξ, η), the law of ξ + η|Z| for a
//! standard normal Z, together with the samplers used by the experiments.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngSeed;
use crate::specfun::{erf, SQRT_2_OVER_PI};

/// Location ξ and scale η > 0 of HN(ξ, η).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfNormalParams {
    xi: f64,
    eta: f64,
}

impl HalfNormalParams {
    pub fn new(xi: f64, eta: f64) -> Result<Self> {
        if !xi.is_finite() || !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::domain(
                "HalfNormalParams::new",
                format!("need finite xi and finite eta > 0, got ({xi}, {eta})"),
            ));
        }
        Ok(Self { xi, eta })
    }

    pub fn standard() -> Self {
        Self { xi: 0.0, eta: 1.0 }
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// Density of HN(ξ, η) at `y`.
pub fn pdf(params: &HalfNormalParams, y: f64) -> f64 {
    if y < params.xi {
        return 0.0;
    }
    let z = (y - params.xi) / params.eta;
    SQRT_2_OVER_PI / params.eta * (-0.5 * z * z).exp()
}

/// Distribution function of HN(ξ, η): 2Φ((y−ξ)/η) − 1 on the support.
pub fn cdf(params: &HalfNormalParams, y: f64) -> f64 {
    if y <= params.xi {
        return 0.0;
    }
    erf((y - params.xi) / params.eta * std::f64::consts::FRAC_1_SQRT_2)
}

/// Mean and variance: (ξ + η√(2/π), η²(π − 2)/π).
pub fn mean_var(params: &HalfNormalParams) -> (f64, f64) {
    let pi = std::f64::consts::PI;
    (
        params.xi + params.eta * SQRT_2_OVER_PI,
        params.eta * params.eta * (pi - 2.0) / pi,
    )
}

/// An observed sample of size n ≥ 2 with cached summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    mean: f64,
    min: f64,
    variance: f64,
    mean_abs_dev: f64,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::domain(
                "Sample::new",
                format!("a sample needs at least 2 observations, got {}", values.len()),
            ));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain("Sample::new", format!("non-finite observation {bad}")));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let (ss, sad) = values.iter().fold((0.0, 0.0), |(ss, sad), &v| {
            let d = v - mean;
            (ss + d * d, sad + d.abs())
        });
        Ok(Self {
            mean,
            min,
            variance: ss / (n - 1.0),
            mean_abs_dev: sad / n,
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Ȳ
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Y_{1:n}
    pub fn min(&self) -> f64 {
        self.min
    }

    /// S², divisor n − 1.
    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// T₁* = (1/n) Σ |Y_i − Ȳ|.
    pub fn mean_abs_dev(&self) -> f64 {
        self.mean_abs_dev
    }

    /// The sample a + b·y.
    pub fn affine(&self, a: f64, b: f64) -> Result<Sample> {
        Sample::new(self.values.iter().map(|&v| a + b * v).collect())
    }
}

/// n independent draws of ξ + η|Z|.
///
/// Normal variates come from `rand_distr::StandardNormal` (ziggurat) on the
/// stream of `seed`, so samples with the same seed share the underlying
/// normals regardless of (ξ, η).
pub fn sample(params: &HalfNormalParams, n: usize, seed: RngSeed) -> Result<Sample> {
    if n < 2 {
        return Err(Error::domain("sample", format!("n must be at least 2, got {n}")));
    }
    let mut rng = seed.rng();
    let values = (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            params.xi + params.eta * z.abs()
        })
        .collect();
    Sample::new(values)
}

/// n draws from the bivariate normal with zero means, unit variances and
/// correlation `cov`: (Z₁, cov·Z₁ + √(1 − cov²)·Z₂).
pub fn sample_bivariate_normal(cov: f64, n: usize, seed: RngSeed) -> Result<Vec<(f64, f64)>> {
    let gen = BivariateNormal::new(cov)?;
    let mut rng = seed.rng();
    Ok((0..n).map(|_| gen.draw(&mut rng)).collect())
}

/// Cholesky sampler for the standard bivariate normal with correlation ρ.
#[derive(Debug, Clone, Copy)]
pub struct BivariateNormal {
    rho: f64,
    conj: f64,
}

impl BivariateNormal {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho.abs() < 1.0) {
            return Err(Error::domain(
                "BivariateNormal::new",
                format!("correlation must lie in (-1, 1), got {rho}"),
            ));
        }
        Ok(Self {
            rho,
            conj: (1.0 - rho * rho).sqrt(),
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        (z1, self.rho * z1 + self.conj * z2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pdf_examples() {
        let std = HalfNormalParams::standard();
        assert_relative_eq!(pdf(&std, 0.0), SQRT_2_OVER_PI);
        let p = HalfNormalParams::new(10.0, 4.0).unwrap();
        assert_eq!(pdf(&p, 9.99), 0.0);
        assert_relative_eq!(
            pdf(&p, 14.0),
            0.25 * SQRT_2_OVER_PI * (-0.5f64).exp(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn moments_examples() {
        let (m, v) = mean_var(&HalfNormalParams::standard());
        assert!((m - 0.79788).abs() < 1e-5);
        assert!((v - 0.36338).abs() < 1e-5);
        let (m, v) = mean_var(&HalfNormalParams::new(10.0, 4.0).unwrap());
        assert!((m - 13.19154).abs() < 1e-5);
        assert!((v - 5.81408).abs() < 1e-5);
    }

    #[test]
    fn invalid_params() {
        assert!(HalfNormalParams::new(0.0, 0.0).is_err());
        assert!(HalfNormalParams::new(0.0, -1.0).is_err());
        assert!(HalfNormalParams::new(f64::NAN, 1.0).is_err());
        assert!(BivariateNormal::new(1.0).is_err());
        assert!(BivariateNormal::new(-1.0).is_err());
    }

    #[test]
    fn sample_summaries() {
        let s = Sample::new(vec![3.0, 1.0, 2.0]).unwrap();
        assert_eq!(s.mean(), 2.0);
        assert_eq!(s.min(), 1.0);
        assert_eq!(s.variance(), 1.0);
        assert_relative_eq!(s.mean_abs_dev(), 2.0 / 3.0);
        assert!(Sample::new(vec![1.0]).is_err());
        assert!(Sample::new(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn sample_respects_support_and_seed() {
        let p = HalfNormalParams::new(10.0, 4.0).unwrap();
        let s = sample(&p, 100, RngSeed(3)).unwrap();
        assert!(s.min() >= 10.0);
        assert_eq!(s, sample(&p, 100, RngSeed(3)).unwrap());
        assert_ne!(s, sample(&p, 100, RngSeed(4)).unwrap());
        assert!(sample(&p, 1, RngSeed(3)).is_err());
    }

    #[test]
    fn location_scale_law_is_exact() {
        let p = HalfNormalParams::new(-3.5, 2.25).unwrap();
        let a = sample(&p, 500, RngSeed(11)).unwrap();
        let b = sample(&HalfNormalParams::standard(), 500, RngSeed(11)).unwrap();
        for (x, z) in a.values().iter().zip(b.values()) {
            assert_eq!(*x, -3.5 + 2.25 * z);
        }
    }
}
