use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use halfnormal::condexp::{estimate_cond_exp, trig_example_reference, BivariateNormalPairs, CondExpQuery, TrigPairs};
use halfnormal::dist::{BivariateNormal, HalfNormalParams, Sample};
use halfnormal::estimators::{
    mle, mre_scale, mre_scale_known_location, pitman_location_known_scale, umvu_scale_known_location, unbiased,
};
use halfnormal::mre_location::{mre_location_approx, mre_location_exact, EpsilonPolicy, ShiftPolicy, StepAConfig};
use halfnormal::report::{write_csv, write_json, ReportBundle};
use halfnormal::rng::RngSeed;
use halfnormal::simharness::{run_experiment, Experiment, SimulationConfig, DEFAULT_MAX_DRAWS, DEFAULT_SEED};
use halfnormal::specfun::{half_min_constant, QuadratureSpec};
use halfnormal::Error;

/// Estimation for the general half-normal distribution HN(ξ, η) and the
/// simulation studies of its unbiased, maximum likelihood and minimum risk
/// equivariant estimators.
#[derive(Debug, Parser)]
#[command(name = "hnmre", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// E(Y | X = 1) for a correlated normal pair, by ε-ball Monte Carlo.
    Table1(TableArgs),
    /// E(sin XY | cos(X² + Y²) = 0.5), by ε-ball Monte Carlo.
    Table2(TableArgs),
    /// Step A approximation of the MRE location estimator.
    Table3(TableArgs),
    /// Unbiased, maximum likelihood and MRE location estimators side by side.
    Table4(TableArgs),
    /// Unbiased, maximum likelihood and MRE scale estimators.
    Table5(TableArgs),
    /// Every estimator on one sample read from a file.
    Estimate(EstimateArgs),
    /// One conditional expectation estimate.
    Condexp(CondexpArgs),
    /// c_n, the expected minimum of n standard half-normal variables.
    Cn(CnArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ShiftArg {
    PerVector,
    PerVectorIfNegative,
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EpsilonArg {
    Clamp,
    AsGiven,
}

#[derive(Debug, Args)]
struct TableArgs {
    /// Master seed.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Replications per cell (default: 100, or 1000 for table5).
    #[arg(long)]
    reps: Option<usize>,
    /// Ball radius or Step A ε; repeat for several values.
    #[arg(long = "eps")]
    eps: Vec<f64>,
    /// Sample size; repeat for several values.
    #[arg(long = "n")]
    n: Vec<usize>,
    /// Accepted draws per estimate (table1, table2); repeat for several values.
    #[arg(long = "m")]
    m: Vec<u64>,
    /// True location of the simulated HN(ξ, η).
    #[arg(long, allow_negative_numbers = true)]
    xi: Option<f64>,
    /// True scale of the simulated HN(ξ, η).
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
    /// Worker threads (default: all cores). Never changes the numbers.
    #[arg(long)]
    jobs: Option<usize>,
    /// Use n ∈ {50, 200, 500} instead of {100, 1000, 5000} (table3, table4).
    #[arg(long)]
    desk: bool,
    /// Cap on pairs drawn per conditional expectation estimate.
    #[arg(long, default_value_t = DEFAULT_MAX_DRAWS)]
    max_draws: u64,
    /// Step A vectors per sample (default 100·n).
    #[arg(long)]
    per_sample_count: Option<usize>,
    /// Upper end of the Step A box.
    #[arg(long)]
    box_upper: Option<f64>,
    #[arg(long, value_enum, default_value_t = ShiftArg::PerVector)]
    shift_policy: ShiftArg,
    #[arg(long, value_enum, default_value_t = EpsilonArg::Clamp)]
    epsilon_policy: EpsilonArg,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Observations separated by whitespace, commas or newlines; `#` starts a comment.
    file: PathBuf,
    /// Known scale η₀, enables the Pitman location estimator.
    #[arg(long)]
    eta_known: Option<f64>,
    /// Known location ξ₀, enables the known-location scale estimators.
    #[arg(long, allow_negative_numbers = true)]
    xi_known: Option<f64>,
    /// ε for the Step A approximation.
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CondexpExample {
    /// E(Y | X = x) for a standard normal pair with correlation ρ.
    Normal,
    /// E(sin XY | cos(X² + Y²) = x).
    Trig,
}

#[derive(Debug, Args)]
struct CondexpArgs {
    #[arg(long, value_enum, default_value_t = CondexpExample::Normal)]
    example: CondexpExample,
    /// Conditioning value (default 1 for normal, 0.5 for trig).
    #[arg(long, allow_negative_numbers = true)]
    x: Option<f64>,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    rho: f64,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, default_value_t = 1000)]
    m: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_DRAWS)]
    max_draws: u64,
}

#[derive(Debug, Args)]
struct CnArgs {
    /// Sample size; repeat for several values.
    #[arg(long = "n", required = true)]
    n: Vec<u32>,
}

fn usage_error(message: String) -> ! {
    Cli::command().error(ErrorKind::ArgumentConflict, message).exit()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Table1(a) => run_table(Experiment::Table1, a),
        Command::Table2(a) => run_table(Experiment::Table2, a),
        Command::Table3(a) => run_table(Experiment::Table3, a),
        Command::Table4(a) => run_table(Experiment::Table4, a),
        Command::Table5(a) => run_table(Experiment::Table5, a),
        Command::Estimate(a) => run_estimate(a),
        Command::Condexp(a) => run_condexp(a),
        Command::Cn(a) => run_cn(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hnmre: {e}");
            ExitCode::FAILURE
        }
    }
}

fn build_config(experiment: Experiment, a: &TableArgs) -> SimulationConfig {
    let condexp = matches!(experiment, Experiment::Table1 | Experiment::Table2);
    let location = matches!(experiment, Experiment::Table3 | Experiment::Table4);
    let name = experiment.as_str();
    if condexp && !a.n.is_empty() {
        usage_error(format!(
            "--n is not used by {name}; use --m for the number of accepted draws"
        ));
    }
    if !condexp && !a.m.is_empty() {
        usage_error(format!("--m is only used by table1 and table2, not {name}"));
    }
    if condexp && (a.xi.is_some() || a.eta.is_some()) {
        usage_error(format!("--xi/--eta are not used by {name}"));
    }
    if experiment == Experiment::Table5 && !a.eps.is_empty() {
        usage_error("--eps is not used by table5".into());
    }
    if a.desk && !location {
        usage_error(format!("--desk only applies to table3 and table4, not {name}"));
    }
    if !location && (a.per_sample_count.is_some() || a.box_upper.is_some()) {
        usage_error(format!("Step A options are not used by {name}"));
    }
    if a.jobs == Some(0) {
        usage_error("--jobs must be at least 1".into());
    }

    let mut c = if a.desk {
        SimulationConfig::desk(experiment)
    } else {
        SimulationConfig::paper(experiment)
    };
    c.seed = RngSeed(a.seed);
    if let Some(r) = a.reps {
        c.replications = r;
    }
    if !a.eps.is_empty() {
        c.epsilon_values = a.eps.clone();
    }
    if !a.n.is_empty() {
        c.n_values = a.n.clone();
    }
    if !a.m.is_empty() {
        c.m_values = a.m.clone();
    }
    if a.xi.is_some() || a.eta.is_some() {
        let xi = a.xi.unwrap_or(c.true_params.xi());
        let eta = a.eta.unwrap_or(c.true_params.eta());
        c.true_params = HalfNormalParams::new(xi, eta).unwrap_or_else(|e| usage_error(e.to_string()));
    }
    c.max_draws = a.max_draws;
    c.step_a.per_sample_count = a.per_sample_count;
    if let Some(b) = a.box_upper {
        c.step_a.box_upper = b;
    }
    c.step_a.shift_policy = match a.shift_policy {
        ShiftArg::PerVector => ShiftPolicy::PerVector,
        ShiftArg::PerVectorIfNegative => ShiftPolicy::PerVectorIfNegative,
        ShiftArg::Global => ShiftPolicy::Global,
    };
    c.step_a.epsilon_policy = match a.epsilon_policy {
        EpsilonArg::Clamp => EpsilonPolicy::ClampToBound,
        EpsilonArg::AsGiven => EpsilonPolicy::AsGiven,
    };
    if let Err(e) = c.validate() {
        usage_error(e.to_string());
    }
    c
}

fn run_table(experiment: Experiment, a: TableArgs) -> Result<(), Error> {
    let config = build_config(experiment, &a);
    let cells = match a.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {j} worker threads: {e}")))?
            .install(|| run_experiment(&config))?,
        None => run_experiment(&config)?,
    };
    let bundle = ReportBundle::new(&config, cells);

    std::fs::create_dir_all(&a.out_dir).map_err(|source| Error::Io {
        path: a.out_dir.clone(),
        source,
    })?;
    let stem = experiment.as_str();
    if matches!(a.format, Format::Csv | Format::Both) {
        let path = a.out_dir.join(format!("{stem}.csv"));
        write_csv(&bundle, &path)?;
        eprintln!("wrote {}", path.display());
    }
    if matches!(a.format, Format::Json | Format::Both) {
        let path = a.out_dir.join(format!("{stem}.json"));
        write_json(&bundle, &path)?;
        eprintln!("wrote {}", path.display());
    }
    print_table(&bundle);
    Ok(())
}

fn print_table(bundle: &ReportBundle) {
    let table = bundle.table();
    println!("{}", table.header.join("\t"));
    for row in &table.rows {
        println!("{}", row.join("\t"));
    }
    let failed: usize = bundle.cells.iter().map(|c| c.failures.len()).sum();
    if failed > 0 {
        eprintln!("{failed} replication(s) failed and were excluded; see the JSON report for reasons");
    }
}

fn read_observations(path: &Path) -> Result<Vec<f64>, Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for token in line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
        {
            let v = token.parse::<f64>().map_err(|_| Error::Format {
                path: path.to_path_buf(),
                message: format!("line {}: {token:?} is not a number", i + 1),
            })?;
            values.push(v);
        }
    }
    Ok(values)
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "-".into())
}

fn run_estimate(a: EstimateArgs) -> Result<(), Error> {
    let values = read_observations(&a.file)?;
    let y = Sample::new(values).map_err(|e| Error::Format {
        path: a.file.clone(),
        message: e.to_string(),
    })?;
    let n = u32::try_from(y.len()).map_err(|_| Error::Config("sample too large".into()))?;
    let mut notes = Vec::new();
    let mut keep = |r: Result<f64, Error>, what: &str| match r {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("{what}: {e}"));
            None
        }
    };

    let c_n = half_min_constant(n, &QuadratureSpec::default())?;
    let unb = unbiased(&y, c_n).ok();
    let ml = mle(&y);
    let mre_eta = keep(mre_scale(&y).map(|e| e.eta_hat.unwrap_or(f64::NAN)), "MRE scale");
    let mre_xi = keep(mre_location_exact(&y), "MRE location");
    let step_a = keep(
        StepAConfig::new(a.eps, RngSeed(a.seed)).and_then(|c| mre_location_approx(&y, &c)),
        "MRE location (Step A)",
    );
    let pitman = a
        .eta_known
        .and_then(|eta0| keep(pitman_location_known_scale(&y, eta0), "Pitman location"));
    let (t2, umvu) = match a.xi_known {
        Some(xi0) => (
            keep(mre_scale_known_location(&y, xi0), "MRE scale, known location"),
            keep(umvu_scale_known_location(&y, xi0), "UMVU scale, known location"),
        ),
        None => (None, None),
    };

    println!("n\t{}", y.len());
    println!("method\txi\teta");
    let rows: [(&str, Option<f64>, Option<f64>); 7] = [
        ("Unbiased", unb.and_then(|e| e.xi_hat), unb.and_then(|e| e.eta_hat)),
        ("MLE", ml.xi_hat, ml.eta_hat),
        ("MRE", mre_xi, mre_eta),
        ("MREStepA", step_a, None),
        ("PitmanKnownScale", pitman, a.eta_known),
        ("MREKnownLocation", a.xi_known, t2),
        ("UMVUKnownLocation", a.xi_known, umvu),
    ];
    for (name, xi, eta) in rows {
        println!("{name}\t{}\t{}", cell(xi), cell(eta));
    }
    if a.eta_known.is_none() {
        eprintln!("PitmanKnownScale needs --eta-known");
    }
    if a.xi_known.is_none() {
        eprintln!("MREKnownLocation and UMVUKnownLocation need --xi-known");
    }
    for note in notes {
        eprintln!("{note}");
    }
    Ok(())
}

fn run_condexp(a: CondexpArgs) -> Result<(), Error> {
    let pair = BivariateNormal::new(a.rho)?;
    let (x, result, reference) = match a.example {
        CondexpExample::Normal => {
            let x = a.x.unwrap_or(1.0);
            let q = CondExpQuery::new(vec![x], a.eps, a.m)?;
            let r = estimate_cond_exp(&mut BivariateNormalPairs(pair), &q, a.max_draws, RngSeed(a.seed))?;
            (x, r, a.rho * x)
        }
        CondexpExample::Trig => {
            let x = a.x.unwrap_or(0.5);
            let q = CondExpQuery::new(vec![x], a.eps, a.m)?;
            let r = estimate_cond_exp(&mut TrigPairs(pair), &q, a.max_draws, RngSeed(a.seed))?;
            (x, r, trig_example_reference(a.rho, x)?)
        }
    };
    println!("x\t{x}");
    println!("estimate\t{}", result.estimate);
    println!("reference\t{reference}");
    println!("accepted\t{}", result.accepted);
    println!("drawn\t{}", result.drawn);
    println!("status\t{:?}", result.status);
    Ok(())
}

fn run_cn(a: CnArgs) -> Result<(), Error> {
    let spec = QuadratureSpec::default();
    if let [n] = a.n[..] {
        println!("{}", half_min_constant(n, &spec)?);
        return Ok(());
    }
    for n in a.n {
        println!("{n}\t{}", half_min_constant(n, &spec)?);
    }
    Ok(())
}
