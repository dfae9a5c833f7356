//! Monte Carlo estimation of conditional expectations E(Y | X = x).
//!
//! Pairs (Xᵢ, Yᵢ) are drawn until `target_in_ball` of them have Xᵢ inside the
//! sup-norm ball B_ε(x); the estimate is the mean of the accepted Yᵢ. With a
//! box kernel this is exactly the Nadaraya–Watson regression estimate at x,
//! and with a prior/likelihood pair it is rejection ABC.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dist::BivariateNormal;
use crate::error::{Error, Result};
use crate::rng::{RngSeed, StreamRng};
use crate::specfun::{integrate, QuadratureSpec};

/// Target point, ball radius and required number of accepted draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondExpQuery {
    pub x: Vec<f64>,
    pub epsilon: f64,
    pub target_in_ball: u64,
}

impl CondExpQuery {
    pub fn new(x: Vec<f64>, epsilon: f64, target_in_ball: u64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::domain(
                "CondExpQuery::new",
                format!("epsilon must be positive, got {epsilon}"),
            ));
        }
        if target_in_ball < 1 {
            return Err(Error::domain("CondExpQuery::new", "target_in_ball must be at least 1"));
        }
        if x.is_empty() {
            return Err(Error::domain("CondExpQuery::new", "conditioning point is empty"));
        }
        Ok(Self {
            x,
            epsilon,
            target_in_ball,
        })
    }

    /// ‖point − x‖_∞ ≤ ε
    #[inline]
    pub fn contains(&self, point: &[f64]) -> bool {
        in_ball(point, &self.x, self.epsilon)
    }
}

#[inline]
fn in_ball(point: &[f64], center: &[f64], radius: f64) -> bool {
    point.iter().zip(center).all(|(p, c)| (p - c).abs() <= radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CondExpStatus {
    /// The requested number of draws landed in the ball.
    Complete,
    /// `max_draws` ran out with fewer accepted draws than requested.
    Partial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondExpResult {
    pub estimate: f64,
    pub accepted: u64,
    pub drawn: u64,
    /// Σ I_{B_ε(x)}(Xᵢ); equal to `accepted` for the indicator weights used here.
    pub sum_weights: u64,
    pub status: CondExpStatus,
}

/// A stream of (x, y) pairs.
pub trait PairSampler {
    /// Dimension of the conditioning variable.
    fn dim(&self) -> usize;

    /// Writes the next x into `x` and returns the matching y.
    fn draw(&mut self, rng: &mut StreamRng, x: &mut [f64]) -> f64;
}

/// The engine: draw until `query.target_in_ball` acceptances or `max_draws`.
pub fn estimate_cond_exp<S: PairSampler + ?Sized>(
    sampler: &mut S,
    query: &CondExpQuery,
    max_draws: u64,
    seed: RngSeed,
) -> Result<CondExpResult> {
    if max_draws < query.target_in_ball {
        return Err(Error::Config(format!(
            "max_draws ({max_draws}) is below target_in_ball ({})",
            query.target_in_ball
        )));
    }
    if sampler.dim() != query.x.len() {
        return Err(Error::Config(format!(
            "sampler dimension {} does not match conditioning point dimension {}",
            sampler.dim(),
            query.x.len()
        )));
    }
    let mut rng = seed.rng();
    let mut x = vec![0.0; sampler.dim()];
    let mut sum = 0.0;
    let mut accepted = 0u64;
    let mut drawn = 0u64;
    while accepted < query.target_in_ball && drawn < max_draws {
        let y = sampler.draw(&mut rng, &mut x);
        drawn += 1;
        if query.contains(&x) {
            sum += y;
            accepted += 1;
        }
    }
    if accepted == 0 {
        return Err(Error::InsufficientAcceptance { drawn });
    }
    Ok(CondExpResult {
        estimate: sum / accepted as f64,
        accepted,
        drawn,
        sum_weights: accepted,
        status: if accepted == query.target_in_ball {
            CondExpStatus::Complete
        } else {
            CondExpStatus::Partial
        },
    })
}

/// Replays recorded one-dimensional pairs in order, ignoring the generator.
/// Cycles once the record is exhausted.
#[derive(Debug, Clone)]
pub struct RecordedPairs<'a> {
    pairs: &'a [(f64, f64)],
    next: usize,
}

impl<'a> RecordedPairs<'a> {
    pub fn new(pairs: &'a [(f64, f64)]) -> Self {
        Self { pairs, next: 0 }
    }
}

impl PairSampler for RecordedPairs<'_> {
    fn dim(&self) -> usize {
        1
    }

    fn draw(&mut self, _rng: &mut StreamRng, x: &mut [f64]) -> f64 {
        let (px, py) = self.pairs[self.next % self.pairs.len()];
        self.next += 1;
        x[0] = px;
        py
    }
}

/// (X, Y) standard bivariate normal with correlation ρ; E(Y | X = x) = ρx.
#[derive(Debug, Clone, Copy)]
pub struct BivariateNormalPairs(pub BivariateNormal);

impl PairSampler for BivariateNormalPairs {
    fn dim(&self) -> usize {
        1
    }

    #[inline]
    fn draw(&mut self, rng: &mut StreamRng, x: &mut [f64]) -> f64 {
        let (a, b) = self.0.draw(rng);
        x[0] = a;
        b
    }
}

/// U = cos(X² + Y²) as the conditioning variable and V = sin(X·Y) as the
/// response, for (X, Y) standard bivariate normal with correlation ρ.
#[derive(Debug, Clone, Copy)]
pub struct TrigPairs(pub BivariateNormal);

impl PairSampler for TrigPairs {
    fn dim(&self) -> usize {
        1
    }

    #[inline]
    fn draw(&mut self, rng: &mut StreamRng, x: &mut [f64]) -> f64 {
        let (a, b) = self.0.draw(rng);
        x[0] = (a * a + b * b).cos();
        (a * b).sin()
    }
}

/// E(sin(XY) | cos(X² + Y²) = u) for the correlated standard normal pair,
/// by quadrature over the circles X² + Y² = R with cos R = u.
///
/// Conditionally on R the angle has density ∝ φ₂(√R cos θ, √R sin θ), and
/// the circles are weighted by the density of R, all with the common
/// Jacobian |sin R| = √(1 − u²).
pub fn trig_example_reference(rho: f64, u: f64) -> Result<f64> {
    if !(rho.abs() < 1.0) || !(u.abs() < 1.0) {
        return Err(Error::domain(
            "trig_example_reference",
            format!("need |rho| < 1 and |u| < 1, got ({rho}, {u})"),
        ));
    }
    let spec = QuadratureSpec::new(1e-300, 1e-13, 4000)?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let base = u.acos();
    let scale = 2.0 * (1.0 - rho * rho);
    let (mut num, mut den) = (0.0, 0.0);
    // the joint density on a circle of radius² R is at most e^{−R/(2(1+ρ))}
    let mut j = 0.0;
    loop {
        let mut largest = 0.0f64;
        for r in [base + two_pi * j, two_pi * (j + 1.0) - base] {
            let weight = |t: f64| (-r * (1.0 - rho * (2.0 * t).sin()) / scale).exp();
            num += integrate(|t| (0.5 * r * (2.0 * t).sin()).sin() * weight(t), 0.0, two_pi, &spec)?;
            let d = integrate(weight, 0.0, two_pi, &spec)?;
            den += d;
            largest = largest.max(d);
        }
        if largest < 1e-18 * den {
            break;
        }
        j += 1.0;
    }
    Ok(num / den)
}

/// A kernel weight K((xᵢ − x)/h), written in terms of the difference and
/// the bandwidth.
pub trait Kernel {
    fn weight(&self, diff: f64, bandwidth: f64) -> f64;
}

/// K(u) = I_{[−1, 1]}(u).
#[derive(Debug, Clone, Copy, Default)]
pub struct BoxKernel;

impl Kernel for BoxKernel {
    #[inline]
    fn weight(&self, diff: f64, bandwidth: f64) -> f64 {
        if diff.abs() <= bandwidth {
            1.0
        } else {
            0.0
        }
    }
}

/// Nadaraya–Watson regression estimate at `x` with an arbitrary kernel.
pub fn nadaraya_watson<K: Kernel>(kernel: &K, pairs: &[(f64, f64)], x: f64, bandwidth: f64) -> Result<f64> {
    if !(bandwidth > 0.0) {
        return Err(Error::domain(
            "nadaraya_watson",
            format!("bandwidth must be positive, got {bandwidth}"),
        ));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for &(xi, yi) in pairs {
        let w = kernel.weight(xi - x, bandwidth);
        if w != 0.0 {
            num += w * yi;
            den += w;
        }
    }
    if den == 0.0 {
        return Err(Error::EmptyWindow { x, bandwidth });
    }
    Ok(num / den)
}

/// Box-kernel Nadaraya–Watson estimate at `x`.
pub fn nadaraya_watson_at(pairs: &[(f64, f64)], x: f64, bandwidth: f64) -> Result<f64> {
    nadaraya_watson(&BoxKernel, pairs, x, bandwidth)
}

/// Output of [`abc_posterior`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbcResult {
    pub posterior_mean_f: f64,
    pub posterior_prob_t: f64,
    pub accepted: u64,
    pub drawn: u64,
}

/// Rejection ABC: draw θ from the prior and x from the model given θ, keep θ
/// when x lands in B_ε(observed), and report the accepted mean of f(θ) and
/// the accepted fraction in T. Stops after `target_accepted` acceptances or
/// `max_draws` draws.
#[allow(clippy::too_many_arguments)]
pub fn abc_posterior<P, D, F, T>(
    mut prior: P,
    mut data: D,
    observed: &[f64],
    epsilon: f64,
    f: F,
    in_t: T,
    target_accepted: u64,
    max_draws: u64,
    seed: RngSeed,
) -> Result<AbcResult>
where
    P: FnMut(&mut StreamRng) -> f64,
    D: FnMut(f64, &mut StreamRng, &mut [f64]),
    F: Fn(f64) -> f64,
    T: Fn(f64) -> bool,
{
    if !(epsilon > 0.0) {
        return Err(Error::domain(
            "abc_posterior",
            format!("epsilon must be positive, got {epsilon}"),
        ));
    }
    if max_draws < target_accepted || target_accepted == 0 {
        return Err(Error::Config(format!(
            "need 1 <= target_accepted <= max_draws, got {target_accepted} and {max_draws}"
        )));
    }
    let mut rng = seed.rng();
    let mut x = vec![0.0; observed.len()];
    let (mut sum_f, mut hits_t, mut accepted, mut drawn) = (0.0, 0u64, 0u64, 0u64);
    while accepted < target_accepted && drawn < max_draws {
        let theta = prior(&mut rng);
        data(theta, &mut rng, &mut x);
        drawn += 1;
        if in_ball(&x, observed, epsilon) {
            accepted += 1;
            sum_f += f(theta);
            if in_t(theta) {
                hits_t += 1;
            }
        }
    }
    if accepted == 0 {
        return Err(Error::InsufficientAcceptance { drawn });
    }
    Ok(AbcResult {
        posterior_mean_f: sum_f / accepted as f64,
        posterior_prob_t: hits_t as f64 / accepted as f64,
        accepted,
        drawn,
    })
}

/// Prior draw from N(0, 1), for the conjugate example.
pub fn standard_normal_draw(rng: &mut StreamRng) -> f64 {
    rng.sample(StandardNormal)
}
