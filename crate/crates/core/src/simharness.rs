//! Seeded replication engine for the five experiments and custom studies.
//!
//! Every replication draws from its own stream, keyed by
//! (master seed, experiment, cell, replication), so cells can be run in any
//! order, in parallel or partially, with identical values.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::condexp::{
    estimate_cond_exp, trig_example_reference, BivariateNormalPairs, CondExpQuery, CondExpStatus, PairSampler,
    TrigPairs,
};
use crate::dist::{sample, BivariateNormal, HalfNormalParams, Sample};
use crate::error::{Error, Result};
use crate::estimators::{mle, mre_scale, unbiased};
use crate::mre_location::{mre_location_approx, mre_location_exact, EpsilonPolicy, ShiftPolicy, StepAConfig};
use crate::rng::{label, RngSeed};
use crate::specfun::{half_min_constant, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Experiment {
    Table1,
    Table2,
    Table3,
    Table4,
    Table5,
    Custom,
}

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::Table1 => "table1",
            Experiment::Table2 => "table2",
            Experiment::Table3 => "table3",
            Experiment::Table4 => "table4",
            Experiment::Table5 => "table5",
            Experiment::Custom => "custom",
        }
    }
}

/// Correlation of the normal pair in the conditional expectation examples.
pub const CONDEXP_RHO: f64 = 0.5;
/// Conditioning point of Table 1, E(Y | X = 1).
pub const TABLE1_X: f64 = 1.0;
/// Conditioning point of Table 2, E(sin XY | cos(X² + Y²) = 0.5).
pub const TABLE2_U: f64 = 0.5;

/// Step A settings forwarded to [`StepAConfig`] for every replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepAOptions {
    pub per_sample_count: Option<usize>,
    pub box_upper: f64,
    pub epsilon_policy: EpsilonPolicy,
    pub shift_policy: ShiftPolicy,
}

impl Default for StepAOptions {
    fn default() -> Self {
        Self {
            per_sample_count: None,
            box_upper: 10.0,
            epsilon_policy: EpsilonPolicy::default(),
            shift_policy: ShiftPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub experiment: Experiment,
    pub seed: RngSeed,
    pub replications: usize,
    pub n_values: Vec<usize>,
    pub m_values: Vec<u64>,
    pub epsilon_values: Vec<f64>,
    pub true_params: HalfNormalParams,
    /// Cap on pairs drawn per conditional expectation estimate.
    pub max_draws: u64,
    pub step_a: StepAOptions,
}

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_MAX_DRAWS: u64 = 1_000_000_000;

impl SimulationConfig {
    /// The configuration of the published experiment.
    pub fn paper(experiment: Experiment) -> Self {
        let base = Self {
            experiment,
            seed: RngSeed(DEFAULT_SEED),
            replications: 100,
            n_values: Vec::new(),
            m_values: Vec::new(),
            epsilon_values: Vec::new(),
            true_params: HalfNormalParams::new(10.0, 4.0).expect("valid constants"),
            max_draws: DEFAULT_MAX_DRAWS,
            step_a: StepAOptions::default(),
        };
        match experiment {
            Experiment::Table1 | Experiment::Table2 => Self {
                m_values: vec![100, 1000, 5000],
                epsilon_values: vec![0.1, 0.01],
                ..base
            },
            Experiment::Table3 | Experiment::Table4 => Self {
                n_values: vec![100, 1000, 5000],
                epsilon_values: vec![0.1, 0.01],
                ..base
            },
            Experiment::Table5 => Self {
                replications: 1000,
                n_values: vec![10, 20, 30],
                ..base
            },
            Experiment::Custom => Self {
                n_values: vec![20],
                epsilon_values: vec![0.01],
                ..base
            },
        }
    }

    /// Same as [`Self::paper`] with the location study shrunk to n ∈ {50, 200, 500}.
    pub fn desk(experiment: Experiment) -> Self {
        let mut c = Self::paper(experiment);
        if matches!(experiment, Experiment::Table3 | Experiment::Table4) {
            c.n_values = vec![50, 200, 500];
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(Error::Config(format!(
                "replications must be at least 2, got {}",
                self.replications
            )));
        }
        let needs_n = !matches!(self.experiment, Experiment::Table1 | Experiment::Table2);
        let needs_eps = !matches!(self.experiment, Experiment::Table5);
        if needs_n && self.n_values.is_empty() {
            return Err(Error::Config("no sample sizes given".into()));
        }
        if !needs_n && self.m_values.is_empty() {
            return Err(Error::Config("no in-ball counts m given".into()));
        }
        if needs_eps && self.epsilon_values.is_empty() {
            return Err(Error::Config("no epsilon values given".into()));
        }
        if let Some(n) = self.n_values.iter().find(|&&n| n < 3) {
            return Err(Error::Config(format!("sample sizes must be at least 3, got {n}")));
        }
        if let Some(&m) = self.m_values.iter().find(|&&m| m < 1 || m > self.max_draws) {
            return Err(Error::Config(format!("m = {m} must lie in [1, max_draws]")));
        }
        if let Some(e) = self.epsilon_values.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, got {e}")));
        }
        Ok(())
    }

    fn step_a_config(&self, epsilon: f64, seed: RngSeed) -> Result<StepAConfig> {
        let mut c = StepAConfig::new(epsilon, seed)?
            .with_box_upper(self.step_a.box_upper)?
            .with_policy(self.step_a.epsilon_policy)
            .with_shift_policy(self.step_a.shift_policy);
        if let Some(k) = self.step_a.per_sample_count {
            c = c.with_per_sample_count(k)?;
        }
        Ok(c)
    }
}

/// Which quantity a cell estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    ConditionalMean,
    Location,
    Scale,
}

/// Coordinates of a cell in its table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellId {
    pub estimator: String,
    pub target: Target,
    pub epsilon: Option<f64>,
    pub n: Option<usize>,
    pub m: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumberSummary {
    #[serde(with = "nan_as_null")]
    pub min: f64,
    #[serde(with = "nan_as_null")]
    pub q1: f64,
    #[serde(with = "nan_as_null")]
    pub median: f64,
    #[serde(with = "nan_as_null")]
    pub q3: f64,
    #[serde(with = "nan_as_null")]
    pub max: f64,
}

/// Statistics of a cell without successful replications are NaN; JSON has
/// no NaN, so they travel as null.
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// A replication that produced no value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub replication: usize,
    pub reason: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub cell: CellId,
    pub truth: f64,
    pub replicate_values: Vec<f64>,
    pub failures: Vec<Failure>,
    #[serde(with = "nan_as_null")]
    pub mean: f64,
    #[serde(with = "nan_as_null")]
    pub mse: f64,
    /// Sample variance of the replicates, divisor k − 1.
    #[serde(with = "nan_as_null")]
    pub variance: f64,
    pub boxplot: FiveNumberSummary,
}

/// (1/k) Σ (vᵢ − truth)².
pub fn mse(values: &[f64], truth: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("mse"));
    }
    Ok(values.iter().map(|v| (v - truth) * (v - truth)).sum::<f64>() / values.len() as f64)
}

/// Linear interpolation between closest ranks on sorted data, inclusive
/// (R type 7): position (k − 1)p.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptyInput("quantile"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain("quantile", format!("p must lie in [0, 1], got {p}")));
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

pub fn five_number_summary(values: &[f64]) -> Result<FiveNumberSummary> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(FiveNumberSummary {
        min: quantile_sorted(&v, 0.0)?,
        q1: quantile_sorted(&v, 0.25)?,
        median: quantile_sorted(&v, 0.5)?,
        q3: quantile_sorted(&v, 0.75)?,
        max: quantile_sorted(&v, 1.0)?,
    })
}

/// Summarizes per-replication outcomes into a cell. Failed replications are
/// kept with their reason and left out of every statistic.
pub fn aggregate(cell: CellId, truth: f64, outcomes: Vec<Result<f64>>) -> EstimateReport {
    let mut values = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (replication, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(v) => values.push(v),
            Err(e) => failures.push(Failure {
                replication,
                reason: e.reason_code().to_string(),
                message: e.to_string(),
            }),
        }
    }
    let k = values.len();
    let (mean, mse_v, variance, boxplot) = if k == 0 {
        let nan = f64::NAN;
        (
            nan,
            nan,
            nan,
            FiveNumberSummary {
                min: nan,
                q1: nan,
                median: nan,
                q3: nan,
                max: nan,
            },
        )
    } else {
        let mean = values.iter().sum::<f64>() / k as f64;
        let variance = if k > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1) as f64
        } else {
            0.0
        };
        (
            mean,
            mse(&values, truth).expect("non-empty"),
            variance,
            five_number_summary(&values).expect("non-empty"),
        )
    };
    EstimateReport {
        cell,
        truth,
        replicate_values: values,
        failures,
        mean,
        mse: mse_v,
        variance,
        boxplot,
    }
}

/// Runs `estimate(r)` for r = 0..replications in parallel, in replication order.
pub fn run_replications<F>(replications: usize, estimate: F) -> Vec<Result<f64>>
where
    F: Fn(usize) -> Result<f64> + Sync + Send,
{
    (0..replications).into_par_iter().map(estimate).collect()
}

/// Like [`run_replications`] for several estimators evaluated on the same
/// draw; returns one outcome vector per estimator.
pub fn run_paired_replications<F>(replications: usize, estimators: usize, estimate: F) -> Vec<Vec<Result<f64>>>
where
    F: Fn(usize) -> Vec<Result<f64>> + Sync + Send,
{
    let rows: Vec<Vec<Result<f64>>> = (0..replications).into_par_iter().map(estimate).collect();
    let mut columns: Vec<Vec<Result<f64>>> = (0..estimators).map(|_| Vec::with_capacity(replications)).collect();
    for row in rows {
        debug_assert_eq!(row.len(), estimators);
        for (col, v) in columns.iter_mut().zip(row) {
            col.push(v);
        }
    }
    columns
}

pub fn run_experiment(config: &SimulationConfig) -> Result<Vec<EstimateReport>> {
    config.validate()?;
    match config.experiment {
        Experiment::Table1 => {
            let pairs = BivariateNormalPairs(BivariateNormal::new(CONDEXP_RHO)?);
            condexp_study(config, pairs, TABLE1_X, CONDEXP_RHO * TABLE1_X)
        }
        Experiment::Table2 => {
            let pairs = TrigPairs(BivariateNormal::new(CONDEXP_RHO)?);
            condexp_study(config, pairs, TABLE2_U, trig_example_reference(CONDEXP_RHO, TABLE2_U)?)
        }
        Experiment::Table3 => location_study(config, &[LocationEstimator::StepA]),
        Experiment::Table4 => location_study(
            config,
            &[
                LocationEstimator::Unbiased,
                LocationEstimator::Mle,
                LocationEstimator::StepA,
            ],
        ),
        Experiment::Table5 => scale_study(config),
        Experiment::Custom => {
            let mut cells = location_study(config, &LocationEstimator::ALL)?;
            cells.extend(scale_study(config)?);
            Ok(cells)
        }
    }
}

fn condexp_study<S>(config: &SimulationConfig, sampler: S, x: f64, truth: f64) -> Result<Vec<EstimateReport>>
where
    S: PairSampler + Clone + Sync,
{
    let root = config.seed.derive(&[label(config.experiment.as_str())]);
    let mut cells = Vec::new();
    for &eps in &config.epsilon_values {
        for &m in &config.m_values {
            let query = CondExpQuery::new(vec![x], eps, m)?;
            let outcomes = run_replications(config.replications, |r| {
                let seed = root.derive(&[eps.to_bits(), m, r as u64]);
                let res = estimate_cond_exp(&mut sampler.clone(), &query, config.max_draws, seed)?;
                match res.status {
                    CondExpStatus::Complete => Ok(res.estimate),
                    CondExpStatus::Partial => Err(Error::InsufficientAcceptance { drawn: res.drawn }),
                }
            });
            let cell = CellId {
                estimator: "MonteCarlo".into(),
                target: Target::ConditionalMean,
                epsilon: Some(eps),
                n: None,
                m: Some(m),
            };
            cells.push(aggregate(cell, truth, outcomes));
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LocationEstimator {
    Unbiased,
    Mle,
    StepA,
    Exact,
}

impl LocationEstimator {
    const ALL: [LocationEstimator; 4] = [Self::Unbiased, Self::Mle, Self::StepA, Self::Exact];

    fn name(self) -> &'static str {
        match self {
            Self::Unbiased => "Unbiased",
            Self::Mle => "MLE",
            Self::StepA => "MRE",
            Self::Exact => "MREExact",
        }
    }
}

/// Sample seed shared by Tables 3 and 4 so their MRE rows coincide.
fn location_sample_seed(config: &SimulationConfig, eps: f64, n: usize, r: usize) -> RngSeed {
    config
        .seed
        .derive(&[label("location"), eps.to_bits(), n as u64, r as u64])
}

fn location_study(config: &SimulationConfig, estimators: &[LocationEstimator]) -> Result<Vec<EstimateReport>> {
    let spec = QuadratureSpec::default();
    let params = config.true_params;
    let mut cells = Vec::new();
    for &eps in &config.epsilon_values {
        for &n in &config.n_values {
            let c_n = if estimators.contains(&LocationEstimator::Unbiased) {
                Some(half_min_constant(n as u32, &spec)?)
            } else {
                None
            };
            let columns = run_paired_replications(config.replications, estimators.len(), |r| {
                let seed = location_sample_seed(config, eps, n, r);
                let y = match sample(&params, n, seed) {
                    Ok(y) => y,
                    Err(e) => return estimators.iter().map(|_| Err(clone_error(&e))).collect(),
                };
                estimators
                    .iter()
                    .map(|&est| location_estimate(est, &y, c_n, config, eps, seed))
                    .collect()
            });
            for (&est, outcomes) in estimators.iter().zip(columns) {
                let cell = CellId {
                    estimator: est.name().into(),
                    target: Target::Location,
                    epsilon: Some(eps),
                    n: Some(n),
                    m: None,
                };
                cells.push(aggregate(cell, params.xi(), outcomes));
            }
        }
    }
    Ok(cells)
}

fn location_estimate(
    est: LocationEstimator,
    y: &Sample,
    c_n: Option<f64>,
    config: &SimulationConfig,
    eps: f64,
    seed: RngSeed,
) -> Result<f64> {
    match est {
        LocationEstimator::Unbiased => {
            let c_n = c_n.expect("computed when the unbiased estimator is requested");
            Ok(unbiased(y, c_n)?.xi_hat.expect("location estimate"))
        }
        LocationEstimator::Mle => Ok(mle(y).xi_hat.expect("location estimate")),
        LocationEstimator::StepA => {
            let step = config.step_a_config(eps, seed.derive(&[label("step-a")]))?;
            mre_location_approx(y, &step)
        }
        LocationEstimator::Exact => mre_location_exact(y),
    }
}

fn scale_study(config: &SimulationConfig) -> Result<Vec<EstimateReport>> {
    let spec = QuadratureSpec::default();
    let params = config.true_params;
    let root = config.seed.derive(&[label("scale")]);
    let names = ["Unbiased", "MLE", "MRE"];
    let mut cells = Vec::new();
    for &n in &config.n_values {
        let c_n = half_min_constant(n as u32, &spec)?;
        let columns = run_paired_replications(config.replications, names.len(), |r| {
            let y = match sample(&params, n, root.derive(&[n as u64, r as u64])) {
                Ok(y) => y,
                Err(e) => return names.iter().map(|_| Err(clone_error(&e))).collect(),
            };
            vec![
                unbiased(&y, c_n).map(|e| e.eta_hat.expect("scale estimate")),
                Ok(mle(&y).eta_hat.expect("scale estimate")),
                mre_scale(&y).map(|e| e.eta_hat.expect("scale estimate")),
            ]
        });
        for (name, outcomes) in names.iter().zip(columns) {
            let cell = CellId {
                estimator: (*name).into(),
                target: Target::Scale,
                epsilon: None,
                n: Some(n),
                m: None,
            };
            cells.push(aggregate(cell, params.eta(), outcomes));
        }
    }
    Ok(cells)
}

// Error is not Clone (it can hold an io::Error); sampling errors are never I/O.
fn clone_error(e: &Error) -> Error {
    match e {
        Error::Domain { function, message } => Error::Domain {
            function,
            message: message.clone(),
        },
        other => Error::Config(other.to_string()),
    }
}
