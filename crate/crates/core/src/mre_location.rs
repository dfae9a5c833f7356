//! Approximate minimum risk equivariant estimation of the location ξ when
//! the scale is unknown.
//!
//! The estimator is ξ̊ = T₀* − ρ(U)·T₁* with T₀* the sample mean, T₁* the mean
//! absolute deviation, U the maximal invariant of the location-scale group and
//! ρ(U) = E(T₀*T₁* | U)/E(T₁*² | U) under HN(0, 1). The conditional
//! expectations have no closed form. They are approximated by averaging
//!
//! ```text
//! f(y') = T₀*(y') T₁*(y') exp(−‖y'‖²/2),   g(y') = T₁*(y')² exp(−‖y'‖²/2)
//! ```
//!
//! over points y' whose invariant lies within ε of U(y). Naive rejection
//! sampling of such points is hopeless once n is more than a handful, so the
//! points are constructed directly ("Step A"):
//!
//! 1. pick the last two coordinates at random in [0, box] with the sign of
//!    y_{n−1} − y_n;
//! 2. place every other coordinate uniformly in the slab that keeps its ratio
//!    within ε of aᵢ = (yᵢ − y_n)/(y_{n−1} − y_n);
//! 3. shift each vector so its smallest coordinate lands uniformly in [0, 1],
//!    then rescale each to its own random maximum in (0, box].
//!
//! Both moves are location-scale maps, so the invariant of every vector is
//! still within ε of U(y). The weights are accumulated with log-sum-exp since
//! exp(−‖y'‖²/2) underflows for n in the hundreds.

use rand::distr::{Distribution, Uniform};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::Sample;
use crate::error::{Error, Result};
use crate::rng::{label, RngSeed};
use crate::specfun::{ln_gamma_half_step, ln_student_t_tail};

/// The maximal invariant U(y): the n − 2 ratios (yᵢ − y_n)/(y_{n−1} − y_n)
/// followed by sign(y_{n−1} − y_n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalInvariant {
    u: Vec<f64>,
}

impl MaximalInvariant {
    pub fn of(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::domain("maximal_invariant", "needs at least 2 values"));
        }
        let last = values[n - 1];
        let d = values[n - 2] - last;
        if d == 0.0 {
            return Err(Error::Tie(last));
        }
        let mut u: Vec<f64> = values[..n - 2].iter().map(|&v| (v - last) / d).collect();
        u.push(d.signum());
        Ok(Self { u })
    }

    /// Sample size the invariant was computed from.
    pub fn sample_len(&self) -> usize {
        self.u.len() + 1
    }

    /// All n − 1 components.
    pub fn components(&self) -> &[f64] {
        &self.u
    }

    /// The ratio block a₁, …, a_{n−2}.
    pub fn ratios(&self) -> &[f64] {
        &self.u[..self.u.len() - 1]
    }

    /// sign(y_{n−1} − y_n), either −1 or +1.
    pub fn sign(&self) -> f64 {
        self.u[self.u.len() - 1]
    }

    /// min(0.1, minᵢ |aᵢ|), the admissible upper bound for ε.
    pub fn epsilon_bound(&self) -> f64 {
        self.ratios().iter().fold(0.1f64, |m, a| m.min(a.abs()))
    }
}

pub fn maximal_invariant(sample: &Sample) -> Result<MaximalInvariant> {
    MaximalInvariant::of(sample.values())
}

/// True when sign(w_{n−1} − w_n) matches and every ratio of `w` is within `eps`
/// of the corresponding ratio of `target`, allowing for the rounding of the
/// ratio computation itself.
pub fn within_proximity(w: &[f64], target: &MaximalInvariant, eps: f64) -> bool {
    let n = w.len();
    if n != target.sample_len() {
        return false;
    }
    let (wl, wp) = (w[n - 1], w[n - 2]);
    let d = wp - wl;
    if d == 0.0 || d.signum() != target.sign() {
        return false;
    }
    target.ratios().iter().zip(w).all(|(&a, &wi)| {
        let ratio = (wi - wl) / d;
        let slack = 64.0 * f64::EPSILON * ((wi.abs() + wl.abs()) + ratio.abs() * (wp.abs() + wl.abs())) / d.abs();
        (ratio - a).abs() <= eps + slack
    })
}

/// How the requested ε relates to the admissible bound min(0.1, minᵢ |aᵢ|).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsilonPolicy {
    /// Use ε when it is below the bound, otherwise min(ε, bound/2).
    #[default]
    ClampToBound,
    /// Use ε unchanged.
    AsGiven,
}

/// How the location move of Step A is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftPolicy {
    /// Every vector is shifted by its own uniform draw on [−min, 1 − min]
    /// of that vector.
    #[default]
    PerVector,
    /// As `PerVector`, but only vectors with a negative coordinate move.
    PerVectorIfNegative,
    /// One draw on [−m, 1 − m], m the minimum over all vectors, shared by
    /// every vector. Concentrates weight away from the support edge and
    /// inflates C.
    Global,
}

/// Parameters of the Step A sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepAConfig {
    pub epsilon: f64,
    /// Number of constructed vectors; `None` means 100·n.
    pub per_sample_count: Option<usize>,
    pub box_upper: f64,
    pub seed: RngSeed,
    pub epsilon_policy: EpsilonPolicy,
    #[serde(default)]
    pub shift_policy: ShiftPolicy,
}

impl StepAConfig {
    pub fn new(epsilon: f64, seed: RngSeed) -> Result<Self> {
        let c = Self {
            epsilon,
            per_sample_count: None,
            box_upper: 10.0,
            seed,
            epsilon_policy: EpsilonPolicy::default(),
            shift_policy: ShiftPolicy::default(),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_per_sample_count(mut self, count: usize) -> Result<Self> {
        self.per_sample_count = Some(count);
        self.validate()?;
        Ok(self)
    }

    pub fn with_box_upper(mut self, box_upper: f64) -> Result<Self> {
        self.box_upper = box_upper;
        self.validate()?;
        Ok(self)
    }

    pub fn with_policy(mut self, policy: EpsilonPolicy) -> Self {
        self.epsilon_policy = policy;
        self
    }

    pub fn with_shift_policy(mut self, policy: ShiftPolicy) -> Self {
        self.shift_policy = policy;
        self
    }

    pub fn with_seed(mut self, seed: RngSeed) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.box_upper > 0.0) || !self.box_upper.is_finite() {
            return Err(Error::Config(format!(
                "box_upper must be positive, got {}",
                self.box_upper
            )));
        }
        if self.per_sample_count == Some(0) {
            return Err(Error::Config("per_sample_count must be at least 1".into()));
        }
        Ok(())
    }

    pub fn count_for(&self, n: usize) -> usize {
        self.per_sample_count.unwrap_or(100 * n)
    }

    /// The ε actually used for a given invariant.
    pub fn effective_epsilon(&self, inv: &MaximalInvariant) -> Result<f64> {
        match self.epsilon_policy {
            EpsilonPolicy::AsGiven => Ok(self.epsilon),
            EpsilonPolicy::ClampToBound => {
                let bound = inv.epsilon_bound();
                if bound == 0.0 {
                    // some yᵢ equals y_n
                    return Err(Error::Tie(f64::NAN));
                }
                if self.epsilon < bound {
                    Ok(self.epsilon)
                } else {
                    Ok(self.epsilon.min(0.5 * bound))
                }
            }
        }
    }
}

/// ln f(y') and ln g(y'), −∞ where the function vanishes.
pub fn ln_rho_integrands(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let mad = y.iter().map(|v| (v - mean).abs()).sum::<f64>() / n;
    let sq = y.iter().map(|v| v * v).sum::<f64>();
    ln_weights(mean, mad, sq)
}

fn ln_weights(mean: f64, mad: f64, sum_sq: f64) -> (f64, f64) {
    let ln_mad = if mad > 0.0 { mad.ln() } else { f64::NEG_INFINITY };
    let ln_mean = if mean > 0.0 { mean.ln() } else { f64::NEG_INFINITY };
    let gauss = -0.5 * sum_sq;
    (ln_mean + ln_mad + gauss, 2.0 * ln_mad + gauss)
}

/// f(y') = T₀*(y') T₁*(y') exp(−‖y'‖²/2) for y' with non-negative mean.
pub fn rho_integrand_f(y: &[f64]) -> f64 {
    ln_rho_integrands(y).0.exp()
}

/// g(y') = T₁*(y')² exp(−‖y'‖²/2).
pub fn rho_integrand_g(y: &[f64]) -> f64 {
    ln_rho_integrands(y).1.exp()
}

/// Streaming log-sum-exp.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }
}

impl LogSumExp {
    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.sum += (x - self.max).exp();
        }
    }

    /// ln Σ exp(xᵢ); −∞ when nothing finite was added.
    pub fn value(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// ln of Σf / Σg from per-vector log weights.
pub fn ln_weight_ratio(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<f64> {
    let (mut lf, mut lg) = (LogSumExp::default(), LogSumExp::default());
    for (f, g) in pairs {
        lf.add(f);
        lg.add(g);
    }
    let den = lg.value();
    if den == f64::NEG_INFINITY {
        return Err(Error::ZeroDenominator);
    }
    Ok(lf.value() - den)
}

/// The constructed vectors, before the common shift and individual rescaling
/// are applied, described by the summaries that survive those maps.
#[derive(Debug, Clone, Copy)]
struct RawSummary {
    mean: f64,
    mad: f64,
    centered_sq: f64,
    min: f64,
    max: f64,
    multiplier: f64,
    shift: f64,
}

struct Moves {
    multiplier: f64,
    shift: f64,
    sum: f64,
    min: f64,
    max: f64,
}

struct Generator<'a> {
    inv: &'a MaximalInvariant,
    eps: f64,
    box_upper: f64,
    seed: RngSeed,
    shift_policy: ShiftPolicy,
    jitter: Uniform<f64>,
    corner: Uniform<f64>,
}

impl<'a> Generator<'a> {
    fn new(inv: &'a MaximalInvariant, config: &StepAConfig) -> Result<Self> {
        let eps = config.effective_epsilon(inv)?;
        Ok(Self {
            inv,
            eps,
            box_upper: config.box_upper,
            seed: config.seed.derive(&[label("step-a")]),
            shift_policy: config.shift_policy,
            jitter: Uniform::new_inclusive(-eps, eps).map_err(|e| Error::Config(e.to_string()))?,
            corner: Uniform::new_inclusive(0.0, config.box_upper).map_err(|e| Error::Config(e.to_string()))?,
        })
    }

    /// Writes vector j (before shift and rescaling) into `v`.
    fn fill(&self, j: usize, v: &mut Vec<f64>) -> Moves {
        let mut rng = self.seed.derive(&[j as u64]).rng();
        let (hi, lo) = loop {
            let p = self.corner.sample(&mut rng);
            let q = self.corner.sample(&mut rng);
            if p != q {
                break if p > q { (p, q) } else { (q, p) };
            }
        };
        let (v_prev, v_last) = if self.inv.sign() > 0.0 { (hi, lo) } else { (lo, hi) };
        let d = v_prev - v_last;
        v.clear();
        let (mut sum, mut min, mut max) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
        let mut put = |x: f64| {
            v.push(x);
            sum += x;
            if x < min {
                min = x;
            }
            if x > max {
                max = x;
            }
        };
        for &a in self.inv.ratios() {
            let delta = self.jitter.sample(&mut rng);
            put(v_last + d * (a + delta));
        }
        put(v_prev);
        put(v_last);
        // (0, box]
        let multiplier = self.box_upper * (1.0 - rng.random::<f64>());
        let shift = match self.shift_policy {
            ShiftPolicy::PerVector => -min + rng.random::<f64>(),
            ShiftPolicy::PerVectorIfNegative if min < 0.0 => -min + rng.random::<f64>(),
            _ => 0.0,
        };
        Moves {
            multiplier,
            shift,
            sum,
            min,
            max,
        }
    }

    fn summary(&self, j: usize, v: &mut Vec<f64>) -> RawSummary {
        let moves = self.fill(j, v);
        let n = v.len() as f64;
        let mean = moves.sum / n;
        let (mut mad, mut centered_sq) = (0.0, 0.0);
        for &x in v.iter() {
            let d = x - mean;
            mad += d.abs();
            centered_sq += d * d;
        }
        RawSummary {
            mean,
            mad: mad / n,
            centered_sq,
            min: moves.min,
            max: moves.max,
            multiplier: moves.multiplier,
            shift: moves.shift,
        }
    }

    fn common_shift(&self, global_min: f64) -> f64 {
        if self.shift_policy != ShiftPolicy::Global || global_min >= 0.0 {
            return 0.0;
        }
        let mut rng = self.seed.derive(&[label("shift")]).rng();
        // uniform on [−min, 1 − min]
        -global_min + rng.random::<f64>()
    }
}

/// The point set S produced by Step A.
#[derive(Debug, Clone, PartialEq)]
pub struct StepASample {
    pub vectors: Vec<Vec<f64>>,
    /// ε used for construction after the policy was applied.
    pub epsilon: f64,
    /// Shift shared by all vectors under [`ShiftPolicy::Global`], else 0.
    pub shift: f64,
}

/// Runs Step A and materializes every vector. Memory is count·n floats; use
/// [`mre_location_approx`] for large n, which needs only per-vector summaries.
pub fn step_a_sample(sample: &Sample, config: &StepAConfig) -> Result<StepASample> {
    let inv = maximal_invariant(sample)?;
    step_a_from_invariant(&inv, config)
}

pub fn step_a_from_invariant(inv: &MaximalInvariant, config: &StepAConfig) -> Result<StepASample> {
    let gen = Generator::new(inv, config)?;
    let count = config.count_for(inv.sample_len());
    let raw: Vec<(Vec<f64>, Moves)> = (0..count)
        .into_par_iter()
        .map(|j| {
            let mut v = Vec::with_capacity(inv.sample_len());
            let moves = gen.fill(j, &mut v);
            (v, moves)
        })
        .collect();
    let global_min = raw.iter().fold(f64::INFINITY, |m, (_, mv)| m.min(mv.min));
    let shift = gen.common_shift(global_min);
    let vectors = raw
        .into_iter()
        .map(|(v, mv)| {
            let c = shift + mv.shift;
            let top = mv.max + c;
            v.into_iter().map(|x| (x + c) / top * mv.multiplier).collect()
        })
        .collect();
    Ok(StepASample {
        vectors,
        epsilon: gen.eps,
        shift,
    })
}

/// C(y) = Σ_S f / Σ_S g, the approximation of ρ(U(y)).
///
/// Depends on the sample only through its invariant, so it is shared by
/// every a + b·y.
pub fn rho_approx(inv: &MaximalInvariant, config: &StepAConfig) -> Result<f64> {
    let gen = Generator::new(inv, config)?;
    let n = inv.sample_len();
    let count = config.count_for(n);
    let summaries: Vec<RawSummary> = (0..count)
        .into_par_iter()
        .map_init(|| Vec::with_capacity(n), |buf, j| gen.summary(j, buf))
        .collect();
    let global_min = summaries.iter().fold(f64::INFINITY, |m, s| m.min(s.min));
    let shift = gen.common_shift(global_min);
    let nf = n as f64;
    let weights = summaries.iter().map(|s| {
        let shift = shift + s.shift;
        let top = s.max + shift;
        if !(top > 0.0) {
            return (f64::NEG_INFINITY, f64::NEG_INFINITY);
        }
        // w = (v + shift)·multiplier/top
        let scale = s.multiplier / top;
        let mean = (s.mean + shift) * scale;
        let mad = s.mad * scale;
        let sum_sq = scale * scale * (s.centered_sq + nf * (s.mean + shift) * (s.mean + shift));
        ln_weights(mean, mad, sum_sq)
    });
    Ok(ln_weight_ratio(weights)?.exp())
}

/// D(y) = T₀*(y) − C(y)·T₁*(y), the Monte Carlo approximation of ξ̊.
pub fn mre_location_approx(sample: &Sample, config: &StepAConfig) -> Result<f64> {
    let inv = maximal_invariant(sample)?;
    let c = rho_approx(&inv, config)?;
    Ok(sample.mean() - c * sample.mean_abs_dev())
}

/// ρ(U(y))·T₁*(y) in the ε → 0 limit, where conditioning on U is
/// integration over the orbit {α + βy} with measure β^{n−2} dα dβ.
///
/// With SS = Σ(yᵢ − ȳ)² and r = √n (ȳ − y₁:ₙ)/√SS the orbit integrals reduce
/// to a Student t tail:
///
/// ```text
/// ρ T₁* = √SS/(2√(πn)) · Γ(n/2)/Γ((n+1)/2) · (1 + r²)^{−n/2} / P(T_{n+1} > √(n+1) r)
/// ```
fn exact_correction(sample: &Sample) -> Result<f64> {
    let n = sample.len();
    let nf = n as f64;
    let ss = sample.variance() * (nf - 1.0);
    if !(ss > 0.0) {
        return Err(Error::DegenerateSample("all observations are equal".into()));
    }
    let r = nf.sqrt() * (sample.mean() - sample.min()) / ss.sqrt();
    let dof = u32::try_from(n + 1).map_err(|_| Error::domain("mre_location_exact", "sample too large"))?;
    let ln = 0.5 * ss.ln()
        - (2.0 * (std::f64::consts::PI * nf).sqrt()).ln()
        - ln_gamma_half_step(0.5 * nf)?
        - 0.5 * nf * r.mul_add(r, 1.0).ln()
        - ln_student_t_tail((nf + 1.0).sqrt() * r, dof)?;
    Ok(ln.exp())
}

/// ρ(U(y)) without Monte Carlo.
pub fn rho_exact(sample: &Sample) -> Result<f64> {
    Ok(exact_correction(sample)? / sample.mean_abs_dev())
}

/// The MRE location estimator ξ̊ evaluated in closed form. Reference for
/// judging the Step A approximation.
pub fn mre_location_exact(sample: &Sample) -> Result<f64> {
    Ok(sample.mean() - exact_correction(sample)?)
}
