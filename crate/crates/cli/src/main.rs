use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use shufreg::nalgebra::DMatrix;
use shufreg::baselines::{naive_ao, ols_unshuffled, NaiveConfig, NaiveInit};
use shufreg::harness::{
    emit_report, load_csv, load_seeds, run, Algorithm, DatasetSpec, ExperimentConfig, Mode,
    PreprocessPolicy, Report, ReportFormat, TrialRecord,
};
use shufreg::objective::{default_lambda, penalized_residual};
use shufreg::synth::generate;
use shufreg::{gncr_solve, hungarian, sort_assignment, GncrConfig, Permutation, SeedSet, SolveResult};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NONCONVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(name = "shufreg", version, about = "Shuffled linear regression solvers and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one dataset and write the recovered pairing and coefficients.
    Solve(SolveArgs),
    /// Synthetic grid over sample sizes and noise levels.
    SynthGrid(GridArgs),
    /// GnCR with a growing fraction of revealed true pairs.
    SeedSweep(SweepArgs),
    /// Repeated train/test splits of a real dataset with shuffled labels.
    Real(RealArgs),
    /// Time the solvers on synthetic instances.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Gncr,
    Naive,
    Ols,
}

impl From<Algo> for Algorithm {
    fn from(a: Algo) -> Self {
        match a {
            Algo::Gncr => Algorithm::Gncr,
            Algo::Naive => Algorithm::Naive,
            Algo::Ols => Algorithm::Ols,
        }
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Ridge parameter [default: 1e-6 * ||X||_F^2 / d_x]
    #[arg(long)]
    lambda: Option<f64>,
    /// Continuation factor
    #[arg(long, default_value_t = 1.3)]
    gamma: f64,
    /// First continuation value [default: largest eigenvalue / 1000]
    #[arg(long)]
    mu0: Option<f64>,
}

impl SolverArgs {
    fn gncr(&self) -> GncrConfig {
        GncrConfig {
            lambda: self.lambda,
            gamma: self.gamma,
            mu0: self.mu0,
            ..GncrConfig::default()
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output file [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Exit with status 3 when a solver stops on its iteration cap
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct SolveArgs {
    /// Headed numeric CSV
    #[arg(long)]
    data: PathBuf,
    /// Label column names
    #[arg(long, value_delimiter = ',', required = true)]
    labels: Vec<String>,
    /// CSV of known pairs with columns x_row,y_row
    #[arg(long)]
    seeds_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Algo::Gncr)]
    algo: Algo,
    /// Seed for the random restarts of the naive solver
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// Random restarts for the naive solver
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment configuration; replaces the other experiment flags
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Algo::Gncr])]
    algos: Vec<Algo>,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// Worker threads [default: all cores]
    #[arg(long)]
    threads: Option<usize>,
    /// Record wall-clock seconds per solver call
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SyntheticArgs {
    #[arg(long = "n", value_delimiter = ',', default_values_t = [20, 60, 100])]
    ns: Vec<usize>,
    #[arg(long = "sigma", value_delimiter = ',', default_values_t = [0.0, 0.01, 0.02])]
    sigmas: Vec<f64>,
    #[arg(long, default_value_t = 2)]
    dx: usize,
    #[arg(long, default_value_t = 1)]
    dy: usize,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    synthetic: SyntheticArgs,
    #[command(flatten)]
    experiment: ExperimentArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.2, 0.4, 0.6, 0.8])]
    ratios: Vec<f64>,
    /// Real dataset instead of synthetic data
    #[arg(long, requires = "labels")]
    data: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    labels: Vec<String>,
    #[arg(long, default_value_t = 0.8)]
    split: f64,
    #[command(flatten)]
    synthetic: SyntheticArgs,
    #[command(flatten)]
    experiment: ExperimentArgs,
}

#[derive(Args)]
struct RealArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    labels: Vec<String>,
    #[arg(long, default_value_t = 0.8)]
    split: f64,
    /// Outlier threshold in standard deviations; 0 disables removal
    #[arg(long, default_value_t = 4.0)]
    outlier_z: f64,
    #[command(flatten)]
    experiment: ExperimentArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long = "n", value_delimiter = ',', default_values_t = [50, 100, 200])]
    ns: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
}

enum Failure {
    Usage(String),
    Data(String),
    NotConverged(String),
}

impl From<shufreg::Error> for Failure {
    fn from(e: shufreg::Error) -> Self {
        match e {
            shufreg::Error::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

fn write_output(out: Option<&Path>, contents: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, contents)?,
        None => std::io::stdout().write_all(contents.as_bytes())?,
    }
    Ok(())
}

fn solve(args: SolveArgs) -> Result<(), Failure> {
    let cfg = args.solver.gncr();
    cfg.validate()?;
    let named = load_csv(&args.data, &args.labels)?;
    let data = &named.data;
    let seeds = match &args.seeds_file {
        Some(p) => load_seeds(p, data.n())?,
        None => SeedSet::empty(),
    };
    let lambda = cfg.lambda.unwrap_or_else(|| default_lambda(data.x()));
    let result = match args.algo {
        Algo::Gncr => gncr_solve(data, &seeds, &cfg)?,
        Algo::Naive => {
            if !seeds.is_empty() {
                log::warn!("the naive solver ignores seeds");
            }
            let init = if args.restarts > 0 {
                NaiveInit::RandomRestarts {
                    restarts: args.restarts,
                    seed: args.rng_seed,
                }
            } else {
                NaiveInit::Auto
            };
            let naive = NaiveConfig {
                lambda: Some(lambda),
                ..NaiveConfig::default()
            };
            naive_ao(data, &init, &naive)?
        }
        Algo::Ols => {
            let beta = ols_unshuffled(data, lambda)?;
            SolveResult {
                perm: Permutation::identity(data.n()),
                y_est: data.y().clone(),
                beta,
                trace: Vec::new(),
                lambda,
            }
        }
    };
    let objective = penalized_residual(data, &result.perm, &result.beta, result.lambda)?;
    let fitted = result.beta.predict(data.x());

    let contents = match args.output.format {
        Format::Json => {
            let beta: Vec<Vec<f64>> = result
                .beta
                .beta()
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect();
            let doc = json!({
                "algorithm": Algorithm::from(args.algo).as_str(),
                "lambda": result.lambda,
                "converged": result.converged(),
                "objective": objective,
                "features": named.feature_names,
                "labels": named.label_names,
                "beta": beta,
                "permutation": result.perm.mapping(),
                "num_seeds": seeds.len(),
            });
            serde_json::to_string_pretty(&doc).map_err(|e| Failure::Data(e.to_string()))? + "\n"
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["x_row".to_string(), "y_row".to_string()];
            header.extend(named.label_names.iter().map(|l| format!("{l}_est")));
            header.extend(named.label_names.iter().map(|l| format!("{l}_fit")));
            w.write_record(&header).map_err(|e| Failure::Data(e.to_string()))?;
            for i in 0..data.n() {
                let mut row = vec![i.to_string(), result.perm.get(i).to_string()];
                row.extend(result.y_est.row(i).iter().map(|v| v.to_string()));
                row.extend(fitted.row(i).iter().map(|v| v.to_string()));
                w.write_record(&row).map_err(|e| Failure::Data(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| Failure::Data(e.to_string()))?;
            String::from_utf8(bytes).expect("csv output is utf-8")
        }
    };
    write_output(args.output.out.as_deref(), &contents)?;
    log::info!("objective {objective:.6e}, lambda {:.3e}", result.lambda);
    if args.output.strict && !result.converged() {
        return Err(Failure::NotConverged("solver stopped on its iteration cap".into()));
    }
    Ok(())
}

fn base_config(mode: Mode, args: &ExperimentArgs) -> Result<ExperimentConfig, Failure> {
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        cfg.mode = mode;
        return Ok(cfg);
    }
    Ok(ExperimentConfig {
        mode,
        repeats: args.repeats,
        algorithms: args.algos.iter().map(|&a| a.into()).collect(),
        gncr: args.solver.gncr(),
        rng_seed: args.rng_seed,
        threads: args.threads,
        timing: args.timing,
        ..ExperimentConfig::default()
    })
}

fn apply_synthetic(cfg: &mut ExperimentConfig, s: &SyntheticArgs) {
    cfg.ns = s.ns.clone();
    cfg.sigmas = s.sigmas.clone();
    cfg.dx = s.dx;
    cfg.dy = s.dy;
}

fn experiment(cfg: ExperimentConfig, output: &OutputArgs) -> Result<(), Failure> {
    cfg.validate()?;
    let records = run(&cfg)?;
    let failed: Vec<&TrialRecord> = records.iter().filter(|r| r.error.is_some()).collect();
    for r in &failed {
        log::warn!("trial {} ({}) failed: {}", r.trial, r.algorithm, r.error.as_deref().unwrap_or(""));
    }
    let capped = records.iter().filter(|r| r.converged == Some(false)).count();
    let report = Report::new(cfg, records)?;
    match &output.out {
        Some(path) => emit_report(&report, path, output.format.into())?,
        None => write_output(None, &report.render(output.format.into())?)?,
    }
    if output.strict && capped > 0 {
        return Err(Failure::NotConverged(format!("{capped} solver runs stopped on the iteration cap")));
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    println!("n,repeat,objective_matrix_s,gncr_s,hungarian_s,sort_s");
    for &n in &args.ns {
        for repeat in 0..args.repeats {
            let inst = generate(n, 2, 1, 0.01, args.rng_seed.wrapping_add(repeat as u64))?;
            let data = &inst.data;
            let t = Instant::now();
            shufreg::objective_matrix(data.x(), default_lambda(data.x()))?;
            let t_obj = t.elapsed().as_secs_f64();
            let t = Instant::now();
            gncr_solve(data, &SeedSet::empty(), &GncrConfig::default())?;
            let t_gncr = t.elapsed().as_secs_f64();
            let a: Vec<f64> = data.x().column(0).iter().copied().collect();
            let b: Vec<f64> = data.y().iter().copied().collect();
            let cost = DMatrix::from_fn(n, n, |i, j| a[i] * b[j]);
            let t = Instant::now();
            hungarian(&cost)?;
            let t_hung = t.elapsed().as_secs_f64();
            let t = Instant::now();
            sort_assignment(&a, &b)?;
            let t_sort = t.elapsed().as_secs_f64();
            println!("{n},{repeat},{t_obj:.6},{t_gncr:.6},{t_hung:.6},{t_sort:.6}");
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve(args) => solve(args),
        Command::SynthGrid(args) => {
            let mut cfg = base_config(Mode::SyntheticGrid, &args.experiment)?;
            if args.experiment.config.is_none() {
                apply_synthetic(&mut cfg, &args.synthetic);
            }
            experiment(cfg, &args.experiment.output)
        }
        Command::SeedSweep(args) => {
            let mut cfg = base_config(Mode::SeedSweep, &args.experiment)?;
            if args.experiment.config.is_none() {
                apply_synthetic(&mut cfg, &args.synthetic);
                cfg.seed_ratios = args.ratios.clone();
                cfg.split_ratio = args.split;
                cfg.dataset = args.data.clone().map(|path| DatasetSpec {
                    path,
                    labels: args.labels.clone(),
                });
            }
            experiment(cfg, &args.experiment.output)
        }
        Command::Real(args) => {
            let mut cfg = base_config(Mode::Real, &args.experiment)?;
            if args.experiment.config.is_none() {
                cfg.dataset = Some(DatasetSpec {
                    path: args.data.clone(),
                    labels: args.labels.clone(),
                });
                cfg.split_ratio = args.split;
                cfg.preprocess = PreprocessPolicy {
                    outlier_z: (args.outlier_z > 0.0).then_some(args.outlier_z),
                };
            }
            experiment(cfg, &args.experiment.output)
        }
        Command::Bench(args) => bench(args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_DATA)
        }
        Err(Failure::NotConverged(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_NONCONVERGENCE)
        }
    }
}
