//! Closed-form estimators of the location ξ and scale η.
//!
//! | method | location | scale |
//! |---|---|---|
//! | unbiased | ξ̃ = (√(2/π)Y₁:ₙ − cₙȲ)/(√(2/π) − cₙ) | η̃ = (Ȳ − Y₁:ₙ)/(√(2/π) − cₙ) |
//! | maximum likelihood | ξ̂ = Y₁:ₙ | η̂ = ((1/n)Σ(Yᵢ − Y₁:ₙ)²)^½ |
//! | minimum risk equivariant | see [`crate::mre_location`] | η̊ via Student-t tails |
//! | Pitman, η = η₀ known | T₁ | |
//! | known ξ = ξ₀ | | T₂ (MRE), UMVU |
//!
//! Every estimator reads only the cached summaries of [`Sample`].

use serde::{Deserialize, Serialize};

use crate::dist::Sample;
use crate::error::{Error, Result};
use crate::specfun::{
    integrate, ln_gamma_half_step, ln_norm_cdf, ln_student_t_tail, QuadratureSpec, LN_SQRT_2PI, SQRT_2_OVER_PI,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Unbiased,
    #[serde(rename = "MLE")]
    Mle,
    #[serde(rename = "MRE")]
    Mre,
    PitmanKnownScale,
    #[serde(rename = "MREKnownLocation")]
    MreKnownLocation,
    #[serde(rename = "UMVUKnownLocation")]
    UmvuKnownLocation,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Unbiased => "Unbiased",
            Method::Mle => "MLE",
            Method::Mre => "MRE",
            Method::PitmanKnownScale => "PitmanKnownScale",
            Method::MreKnownLocation => "MREKnownLocation",
            Method::UmvuKnownLocation => "UMVUKnownLocation",
        }
    }
}

/// Point estimates produced by one method. A method that only estimates one
/// of the parameters leaves the other as `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocationScaleEstimate {
    pub xi_hat: Option<f64>,
    pub eta_hat: Option<f64>,
    pub method: Method,
}

impl LocationScaleEstimate {
    fn both(method: Method, xi: f64, eta: f64) -> Self {
        debug_assert!(eta >= 0.0);
        Self {
            xi_hat: Some(xi),
            eta_hat: Some(eta),
            method,
        }
    }

    fn scale_only(method: Method, eta: f64) -> Self {
        debug_assert!(eta >= 0.0);
        Self {
            xi_hat: None,
            eta_hat: Some(eta),
            method,
        }
    }
}

/// Unbiased estimators (ξ̃, η̃). `c_n` is E[X₁:ₙ] for the sample size, see
/// [`crate::specfun::half_min_constant`].
pub fn unbiased(sample: &Sample, c_n: f64) -> Result<LocationScaleEstimate> {
    let denom = SQRT_2_OVER_PI - c_n;
    if !(denom > f64::EPSILON) || !(c_n >= 0.0) {
        return Err(Error::DegenerateSample(format!(
            "sqrt(2/pi) - c_n = {denom:e} leaves the unbiased estimators undefined"
        )));
    }
    let (ybar, ymin) = (sample.mean(), sample.min());
    let xi = (SQRT_2_OVER_PI * ymin - c_n * ybar) / denom;
    let eta = (ybar - ymin) / denom;
    Ok(LocationScaleEstimate::both(Method::Unbiased, xi, eta.max(0.0)))
}

/// Maximum likelihood estimators (ξ̂, η̂).
pub fn mle(sample: &Sample) -> LocationScaleEstimate {
    let n = sample.len() as f64;
    let gap = sample.mean() - sample.min();
    // (1/n)Σ(Yᵢ − Y₁:ₙ)² = ((n−1)/n)S² + (Ȳ − Y₁:ₙ)²
    let msd = (n - 1.0) / n * sample.variance() + gap * gap;
    LocationScaleEstimate::both(Method::Mle, sample.min(), msd.max(0.0).sqrt())
}

/// πS²/(π − 2), unbiased for η².
pub fn unbiased_eta_squared(sample: &Sample) -> f64 {
    let pi = std::f64::consts::PI;
    pi * sample.variance() / (pi - 2.0)
}

/// Minimum risk equivariant scale estimator η̊ under the loss η⁻²(x − η)².
///
/// Computed in log space: the Γ-ratio through [`ln_gamma_half_step`] and the
/// two t-tails through [`ln_student_t_tail`], so large n neither overflows
/// nor underflows.
pub fn mre_scale(sample: &Sample) -> Result<LocationScaleEstimate> {
    let n = sample.len();
    if n < 3 {
        return Err(Error::domain(
            "mre_scale",
            format!("needs at least 3 observations, got {n}"),
        ));
    }
    let s = sample.std_dev();
    if !(s > 0.0) {
        return Err(Error::DegenerateSample("sample standard deviation is zero".into()));
    }
    let nf = n as f64;
    let ratio = (sample.mean() - sample.min()) / s;
    let z1 = (nf * (nf + 1.0) / (nf - 1.0)).sqrt() * ratio;
    let z2 = (nf * (nf + 2.0) / (nf - 1.0)).sqrt() * ratio;
    let dof = u32::try_from(n).map_err(|_| Error::domain("mre_scale", "sample too large"))?;
    let ln_eta = 0.5 * (0.5 * (nf - 1.0)).ln() - ln_gamma_half_step(0.5 * (nf + 1.0))?
        + ln_student_t_tail(z1, dof + 1)?
        - ln_student_t_tail(z2, dof + 2)?
        + s.ln();
    Ok(LocationScaleEstimate::scale_only(Method::Mre, ln_eta.exp()))
}

/// ∫₀^∞ v^{k+1} exp(−c v²/2) dv = 2^{k/2} Γ((k+2)/2) / c^{(k+2)/2}, in logs.
pub fn ln_gaussian_moment_integral(k: u32, c: f64) -> f64 {
    let kf = f64::from(k);
    0.5 * kf * std::f64::consts::LN_2 + crate::specfun::ln_gamma_unchecked(0.5 * (kf + 2.0)) - 0.5 * (kf + 2.0) * c.ln()
}

/// η̊ as the ratio I_n/I_{n+1} of the defining integrals
/// I_k = ∫₀^∞ v^k f'(v y') dv, evaluated by nested numerical quadrature
/// without any t-distribution or Φ routine.
///
/// Slow; exists to cross-check [`mre_scale`].
pub fn mre_scale_by_integration(sample: &Sample, spec: &QuadratureSpec) -> Result<f64> {
    let n = sample.len();
    if n < 3 {
        return Err(Error::domain(
            "mre_scale_by_integration",
            format!("needs at least 3 observations, got {n}"),
        ));
    }
    let s = sample.std_dev();
    if !(s > 0.0) {
        return Err(Error::DegenerateSample("sample standard deviation is zero".into()));
    }
    let nf = n as f64;
    // v = w/(S√(n−1)); the inner lower limit √n·v·(Ȳ − Y₁:ₙ) becomes w·slope
    let slope = (sample.mean() - sample.min()) / s * (nf / (nf - 1.0)).sqrt();
    let ln_a_n = ln_scaled_moment(n as u32, slope, spec)?;
    let ln_a_n1 = ln_scaled_moment(n as u32 + 1, slope, spec)?;
    Ok(s * (nf - 1.0).sqrt() * (ln_a_n - ln_a_n1).exp())
}

/// ln ∫₀^∞ w^k e^{−w²/2} G(slope·w) dw with G(L) = ∫_L^∞ e^{−u²/2} du.
fn ln_scaled_moment(k: u32, slope: f64, spec: &QuadratureSpec) -> Result<f64> {
    let kf = f64::from(k);
    // exponent of the integrand at its unconstrained peak w = √k
    let ln_peak = 0.5 * kf * kf.ln() - 0.5 * kf;
    let inner_spec = QuadratureSpec::new(1e-300, spec.rel_tol * 0.1, spec.max_subdivisions)?;

    let integrand = |w: f64| -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        let lower = slope * w;
        // G(L) = e^{−L²/2} ∫₀^∞ e^{−sL − s²/2} ds
        let tail = integrate(|s| (-s * lower - 0.5 * s * s).exp(), 0.0, 40.0, &inner_spec).unwrap_or(f64::NAN);
        (kf * w.ln() - 0.5 * w * w - 0.5 * lower * lower - ln_peak).exp() * tail
    };
    let upper = kf.sqrt() + 40.0;
    let v = integrate(integrand, 0.0, upper, spec)?;
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::QuadratureNonConvergence {
            estimated_error: f64::NAN,
            subdivisions: spec.max_subdivisions,
        });
    }
    Ok(v.ln() + ln_peak)
}

/// Pitman estimator T₁ of ξ when the scale is known to be η₀.
///
/// The factor exp{−z²/2}/Φ(z), z = √n(Y₁:ₙ − Ȳ)/η₀ ≤ 0, is formed as
/// exp(ln φ(z) − ln Φ(z)) so it stays finite for any sample size.
pub fn pitman_location_known_scale(sample: &Sample, eta0: f64) -> Result<f64> {
    if !(eta0 > 0.0) || !eta0.is_finite() {
        return Err(Error::domain(
            "pitman_location_known_scale",
            format!("eta0 must be positive, got {eta0}"),
        ));
    }
    let sqrt_n = (sample.len() as f64).sqrt();
    let z = sqrt_n * (sample.min() - sample.mean()) / eta0;
    let ln_pdf = -0.5 * z * z - LN_SQRT_2PI;
    let mills = (ln_pdf - ln_norm_cdf(z)).exp();
    Ok(sample.mean() - eta0 / sqrt_n * mills)
}

fn check_known_location(sample: &Sample, xi0: f64, function: &'static str) -> Result<f64> {
    if !xi0.is_finite() {
        return Err(Error::domain(function, format!("xi0 must be finite, got {xi0}")));
    }
    if sample.min() < xi0 {
        return Err(Error::domain(
            function,
            format!("observation {} lies below the known location {xi0}", sample.min()),
        ));
    }
    let n = sample.len() as f64;
    let gap = sample.mean() - xi0;
    let ss = (n - 1.0) * sample.variance() + n * gap * gap;
    if !(ss > 0.0) {
        return Err(Error::DegenerateSample(format!(
            "every observation equals the known location {xi0}"
        )));
    }
    Ok(ss)
}

/// Γ((n+1)/2) / (√2 Γ((n+2)/2)).
pub fn mre_known_location_constant(n: usize) -> f64 {
    let x = 0.5 * (n as f64 + 1.0);
    (-ln_gamma_half_step(x).expect("positive argument")).exp() * std::f64::consts::FRAC_1_SQRT_2
}

/// Γ(n/2) / (√2 Γ((n+1)/2)).
pub fn umvu_known_location_constant(n: usize) -> f64 {
    let x = 0.5 * n as f64;
    (-ln_gamma_half_step(x).expect("positive argument")).exp() * std::f64::consts::FRAC_1_SQRT_2
}

/// MRE estimator T₂ of η under (x − η)²/η² when the location is known to be ξ₀.
pub fn mre_scale_known_location(sample: &Sample, xi0: f64) -> Result<f64> {
    let ss = check_known_location(sample, xi0, "mre_scale_known_location")?;
    Ok(mre_known_location_constant(sample.len()) * ss.sqrt())
}

/// Minimum variance unbiased estimator of η when the location is known to be ξ₀.
pub fn umvu_scale_known_location(sample: &Sample, xi0: f64) -> Result<f64> {
    let ss = check_known_location(sample, xi0, "umvu_scale_known_location")?;
    Ok(umvu_known_location_constant(sample.len()) * ss.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{half_min_constant, ln_beta};
    use approx::assert_relative_eq;

    fn s(values: &[f64]) -> Sample {
        Sample::new(values.to_vec()).unwrap()
    }

    #[test]
    fn mle_degenerate_sample() {
        let e = mle(&s(&[10.0, 10.0, 10.0]));
        assert_eq!(e.xi_hat, Some(10.0));
        assert_eq!(e.eta_hat, Some(0.0));
        assert_eq!(e.method, Method::Mle);
    }

    #[test]
    fn mle_matches_direct_formula() {
        let y = [3.2, 1.1, 7.5, 2.0, 4.4];
        let e = mle(&s(&y));
        let min = 1.1;
        let direct = (y.iter().map(|v| (v - min) * (v - min)).sum::<f64>() / 5.0).sqrt();
        assert_relative_eq!(e.eta_hat.unwrap(), direct, max_relative = 1e-14);
    }

    #[test]
    fn unbiased_eta_squared_constant_sample() {
        assert_eq!(unbiased_eta_squared(&s(&[2.0, 2.0, 2.0, 2.0])), 0.0);
        let y = s(&[1.0, 2.0, 4.0]);
        let scaled = y.affine(0.0, 3.0).unwrap();
        assert_relative_eq!(
            unbiased_eta_squared(&scaled),
            9.0 * unbiased_eta_squared(&y),
            max_relative = 1e-14
        );
    }

    #[test]
    fn unbiased_rejects_bad_constant() {
        let y = s(&[1.0, 2.0]);
        assert!(unbiased(&y, SQRT_2_OVER_PI).is_err());
        assert!(unbiased(&y, 1.0).is_err());
    }

    #[test]
    fn unbiased_affine_equivariance() {
        let spec = QuadratureSpec::default();
        let y = s(&[10.3, 12.9, 11.1, 15.0, 10.05, 13.3]);
        let c = half_min_constant(6, &spec).unwrap();
        let base = unbiased(&y, c).unwrap();
        let moved = unbiased(&y.affine(-4.0, 2.5).unwrap(), c).unwrap();
        assert_relative_eq!(
            moved.xi_hat.unwrap(),
            -4.0 + 2.5 * base.xi_hat.unwrap(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            moved.eta_hat.unwrap(),
            2.5 * base.eta_hat.unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn mre_scale_errors() {
        assert!(mre_scale(&s(&[1.0, 2.0])).is_err());
        assert!(matches!(
            mre_scale(&s(&[1.0, 1.0, 1.0])),
            Err(Error::DegenerateSample(_))
        ));
    }

    #[test]
    fn mre_scale_matches_integration_on_fixed_sample() {
        let y = s(&[10.4, 13.1, 11.9, 17.2, 10.9, 12.5, 14.8]);
        let closed = mre_scale(&y).unwrap().eta_hat.unwrap();
        let numeric = mre_scale_by_integration(&y, &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(closed, numeric, max_relative = 1e-8);
    }

    #[test]
    fn gaussian_moment_closed_form() {
        let spec = QuadratureSpec::default();
        for c in [1.0, 7.3] {
            for k in [3u32, 10] {
                let kf = f64::from(k);
                let numeric =
                    integrate(|v: f64| v.powf(kf + 1.0) * (-0.5 * c * v * v).exp(), 0.0, 60.0, &spec).unwrap();
                let closed = ln_gaussian_moment_integral(k, c).exp();
                assert!((numeric - closed).abs() < 1e-9 * closed.max(1.0), "k={k} c={c}");
            }
        }
    }

    #[test]
    fn pitman_examples() {
        let y = s(&[10.2, 11.7, 10.9, 13.0, 12.2]);
        let t = pitman_location_known_scale(&y, 4.0).unwrap();
        assert!(t < y.mean());
        let shifted = pitman_location_known_scale(&y.affine(7.25, 1.0).unwrap(), 4.0).unwrap();
        assert!((shifted - (t + 7.25)).abs() < 1e-12);
        assert!(pitman_location_known_scale(&y, 0.0).is_err());
        // huge n: the Mills ratio is finite where the naive ratio is 0/0
        let big: Vec<f64> = (0..1_000_000)
            .map(|i| 10.0 + 4.0 * (f64::from(i % 1000) / 1000.0))
            .collect();
        let t = pitman_location_known_scale(&s(&big), 4.0).unwrap();
        assert!(t.is_finite() && t < 10.0);
    }

    #[test]
    fn known_location_constants_match_beta_form() {
        let sqrt_2pi = (2.0 * std::f64::consts::PI).sqrt();
        for n in 1..=6usize {
            let nf = n as f64;
            let beta = ln_beta(0.5 * (nf + 1.0), 0.5).unwrap().exp();
            assert_relative_eq!(mre_known_location_constant(n), beta / sqrt_2pi, max_relative = 1e-13);
            let beta = ln_beta(0.5 * nf, 0.5).unwrap().exp();
            assert_relative_eq!(umvu_known_location_constant(n), beta / sqrt_2pi, max_relative = 1e-13);
        }
    }

    #[test]
    fn known_location_errors_and_dilation() {
        let y = s(&[1.0, 2.5, 4.0]);
        assert!(mre_scale_known_location(&y, 1.5).is_err());
        assert!(umvu_scale_known_location(&s(&[2.0, 2.0]), 2.0).is_err());
        let t = mre_scale_known_location(&y, 0.5).unwrap();
        // ξ₀ + b(y − ξ₀)
        let dilated = y.affine(0.5 - 3.0 * 0.5, 3.0).unwrap();
        assert_relative_eq!(
            mre_scale_known_location(&dilated, 0.5).unwrap(),
            3.0 * t,
            max_relative = 1e-13
        );
        let u = umvu_scale_known_location(&y, 0.5).unwrap();
        assert_relative_eq!(
            umvu_scale_known_location(&dilated, 0.5).unwrap(),
            3.0 * u,
            max_relative = 1e-13
        );
        assert!(u > t);
    }
}
