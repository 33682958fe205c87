//! `mlphillips`: fit Phillips-curve models, reproduce the published tables,
//! evaluate Mittag-Leffler functions and emit plot data.

mod render;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mlphillips::dataio::{bin_average, embedded_dataset, read_dataset, DataSet};
use mlphillips::fitting::{
    fit_model, fitting_policy, reproduce_tables_with, sample_grid, synthetic_demo, DemoTarget,
};
use mlphillips::models::ModelKind;
use mlphillips::optimizer::SimplexConfig;
use mlphillips::special::{
    ml_one, ml_prabhakar, ml_shukla, ml_two, MLTwoParams, PrabhakarParams, SeriesPolicy, ShuklaParams,
};
use mlphillips::Error;

use render::Format;

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NOT_CONVERGED: u8 = 4;
const EXIT_REPRODUCTION: u8 = 5;
const EXIT_NUMERIC: u8 = 6;

#[derive(Parser)]
#[command(name = "mlphillips", version, about = "Mittag-Leffler regression of Phillips-curve data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one or all models to a data set
    Fit(FitArgs),
    /// Refit and re-evaluate every published table cell
    Reproduce(ReproduceArgs),
    /// Evaluate a Mittag-Leffler function
    MlEval(MlEvalArgs),
    /// Average the observations by unemployment level
    Bin(BinArgs),
    /// Fit the ML model to a synthetic target function
    Demo(DemoArgs),
}

#[derive(Copy, Clone, ValueEnum)]
enum Country {
    France,
    Germany,
}

impl Country {
    fn label(self) -> &'static str {
        match self {
            Country::France => "france",
            Country::Germany => "germany",
        }
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct DataArgs {
    /// CSV file with columns year,unemployment_rate,inflation_rate
    #[arg(long)]
    data: Option<PathBuf>,
    /// Built-in 1980-2011 series
    #[arg(long, value_enum)]
    country: Option<Country>,
}

#[derive(Args)]
struct SolverArgs {
    /// Simplex tolerance on both parameters and objective
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap per simplex run
    #[arg(long)]
    max_iter: Option<usize>,
    /// Restarts after a converged run
    #[arg(long)]
    restarts: Option<usize>,
}

impl SolverArgs {
    fn config(&self) -> Result<SimplexConfig, Failure> {
        let mut cfg = SimplexConfig::default();
        if let Some(t) = self.tol {
            cfg.x_tol = t;
            cfg.f_tol = t;
        }
        if let Some(m) = self.max_iter {
            cfg.max_iter = m;
        }
        if let Some(r) = self.restarts {
            cfg.restarts = r;
        }
        cfg.validate().map_err(Failure::from)?;
        Ok(cfg)
    }
}

#[derive(Copy, Clone, PartialEq, ValueEnum)]
enum ModelChoice {
    Ml,
    Exp,
    Power,
    All,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Model to fit
    #[arg(long, value_enum, default_value = "all")]
    model: ModelChoice,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Write x,y samples of the fitted curve (one file per model with --model all)
    #[arg(long)]
    emit_curve: Option<PathBuf>,
    /// Rows in each curve file
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Fit to the bin means rounded to three decimals
    #[arg(long)]
    rounded_averages: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct ReproduceArgs {
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    #[command(flatten)]
    solver: SolverArgs,
    /// Replace the built-in France series
    #[arg(long, hide = true)]
    france_data: Option<PathBuf>,
    /// Replace the built-in Germany series
    #[arg(long, hide = true)]
    germany_data: Option<PathBuf>,
}

#[derive(Args)]
struct MlEvalArgs {
    /// Order α > 0
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    /// Second parameter β > 0 (default 1)
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// γ > 0, selects the three-parameter function
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    /// q in (0,1) or a positive integer, selects the four-parameter function
    #[arg(long, allow_hyphen_values = true, requires = "gamma")]
    q: Option<f64>,
    /// Single argument
    #[arg(long, allow_hyphen_values = true, required_unless_present = "z_range", conflicts_with = "z_range")]
    z: Option<f64>,
    /// lo:hi:n, n evenly spaced points including both ends
    #[arg(long, allow_hyphen_values = true)]
    z_range: Option<String>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct BinArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Bin width in percentage points
    #[arg(long, default_value_t = 1.0)]
    width: f64,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Copy, Clone, ValueEnum)]
enum TargetChoice {
    Sine,
    DampedCos,
    ExpErfc,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, value_enum)]
    target: TargetChoice,
    /// Damping rate of damped-cos
    #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
    alpha: f64,
    /// Angular frequency of damped-cos
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    beta: f64,
    /// Sampling interval lo:hi (target default otherwise)
    #[arg(long)]
    range: Option<String>,
    /// Number of samples the model is fitted to
    #[arg(long, default_value_t = 30)]
    points: usize,
    /// Number of rows in each emitted sample file
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Directory for <target>_target.csv and <target>_fit.csv
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    #[command(flatten)]
    solver: SolverArgs,
}

/// A message for stderr and the process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse { .. } | Error::Validation(_) | Error::DegenerateData { .. } => EXIT_DATA,
            e if e.is_numeric_guard() => EXIT_NUMERIC,
            _ => EXIT_USAGE,
        };
        let message = match &e {
            Error::Parse { line, message } => format!("line {line}: {message}"),
            _ => e.to_string(),
        };
        Self { code, message }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_DATA,
        message: format!("{}: {e}", path.display()),
    }
}

fn load(args: &DataArgs) -> Result<DataSet, Failure> {
    match (&args.data, args.country) {
        (Some(path), _) => Ok(read_dataset(path)?),
        (None, Some(c)) => Ok(embedded_dataset(c.label()).expect("built-in series")),
        (None, None) => Err(Failure::usage("one of --data or --country is required")),
    }
}

fn write_samples(path: &Path, rows: &[(f64, f64)]) -> Result<(), Failure> {
    std::fs::write(path, render::xy_csv(rows)).map_err(|e| io_failure(path, e))
}

/// `curve.csv` -> `curve_ml.csv`
fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{suffix}"),
    };
    path.with_file_name(name)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

fn cmd_fit(args: FitArgs) -> Result<(String, u8), Failure> {
    let cfg = args.solver.config()?;
    let data = load(&args.data)?;
    let kinds: Vec<ModelKind> = match args.model {
        ModelChoice::All => ModelKind::ALL.to_vec(),
        ModelChoice::Ml => vec![ModelKind::MittagLeffler],
        ModelChoice::Exp => vec![ModelKind::Exponential],
        ModelChoice::Power => vec![ModelKind::Power],
    };
    let reports = kinds
        .iter()
        .map(|&k| fit_model(k, &data, &cfg, &fitting_policy(), args.rounded_averages))
        .collect::<Result<Vec<_>, _>>()?;

    if let Some(path) = &args.emit_curve {
        let xs: Vec<f64> = data.records().iter().map(|r| r.unemployment).collect();
        let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // the models are defined for positive unemployment only
        let lo = (min - 0.5).max(0.5 * min);
        let grid = linspace(lo, max + 0.5, args.samples);
        for r in &reports {
            let target = if reports.len() > 1 {
                suffixed(path, r.model.short_name())
            } else {
                path.clone()
            };
            write_samples(&target, &r.curve(&grid, &SeriesPolicy::default())?)?;
        }
    }

    let out = render::fit_reports(&reports, args.format);
    let code = if reports.iter().all(|r| r.converged) { 0 } else { EXIT_NOT_CONVERGED };
    Ok((out, code))
}

fn cmd_reproduce(args: ReproduceArgs) -> Result<(String, u8), Failure> {
    let cfg = args.solver.config()?;
    let pick = |path: &Option<PathBuf>, label: &str| -> Result<DataSet, Failure> {
        match path {
            Some(p) => Ok(read_dataset(p)?),
            None => Ok(embedded_dataset(label).expect("built-in series")),
        }
    };
    let fr = pick(&args.france_data, "france")?;
    let de = pick(&args.germany_data, "germany")?;
    let report = reproduce_tables_with(&fr, &de, &cfg, &fitting_policy())?;
    let code = if report.all_passed() { 0 } else { EXIT_REPRODUCTION };
    Ok((render::reproduction(&report, args.format), code))
}

fn parse_range(spec: &str, parts: usize, flag: &str) -> Result<Vec<f64>, Failure> {
    let fields: Vec<&str> = spec.split(':').collect();
    let bad = || Failure::usage(format!("{flag} expects {} colon-separated numbers, got `{spec}`", parts));
    if fields.len() != parts {
        return Err(bad());
    }
    fields.iter().map(|f| f.trim().parse::<f64>().map_err(|_| bad())).collect()
}

fn cmd_ml_eval(args: MlEvalArgs) -> Result<(String, u8), Failure> {
    let zs = match (&args.z_range, args.z) {
        (Some(spec), _) => {
            let v = parse_range(spec, 3, "--z-range")?;
            if v[2] < 1.0 || v[2].fract() != 0.0 {
                return Err(Failure::usage("--z-range needs a positive integer count"));
            }
            linspace(v[0], v[1], v[2] as usize)
        }
        (None, Some(z)) => vec![z],
        (None, None) => return Err(Failure::usage("one of --z or --z-range is required")),
    };
    let policy = SeriesPolicy::default();
    let beta = args.beta.unwrap_or(1.0);
    // validate once so bad parameters are a usage error even for an empty grid
    let eval: Box<dyn Fn(f64) -> mlphillips::Result<f64>> = match (args.gamma, args.q) {
        (Some(gamma), Some(q)) => {
            let p = ShuklaParams::new(args.alpha, beta, gamma, q).map_err(Failure::from)?;
            Box::new(move |z| ml_shukla(p, z, &policy))
        }
        (Some(gamma), None) => {
            let p = PrabhakarParams::new(args.alpha, beta, gamma).map_err(Failure::from)?;
            Box::new(move |z| ml_prabhakar(p, z, &policy))
        }
        (None, _) if args.beta.is_some() => {
            let p = MLTwoParams::new(args.alpha, beta).map_err(Failure::from)?;
            Box::new(move |z| ml_two(p, z, &policy))
        }
        (None, _) => {
            MLTwoParams::new(args.alpha, 1.0).map_err(Failure::from)?;
            let alpha = args.alpha;
            Box::new(move |z| ml_one(alpha, z, &policy))
        }
    };
    let rows = zs
        .into_iter()
        .map(|z| eval(z).map(|v| (z, v)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((render::ml_values(&rows, args.format), 0))
}

fn cmd_bin(args: BinArgs) -> Result<(String, u8), Failure> {
    let data = load(&args.data)?;
    let bins = bin_average(&data, args.width)?;
    Ok((render::bins(&bins, args.format), 0))
}

fn cmd_demo(args: DemoArgs) -> Result<(String, u8), Failure> {
    let cfg = args.solver.config()?;
    let target = match args.target {
        TargetChoice::Sine => DemoTarget::Sine,
        TargetChoice::ExpErfc => DemoTarget::ExpErfc,
        TargetChoice::DampedCos => DemoTarget::DampedCos {
            alpha: args.alpha,
            beta: args.beta,
        },
    };
    let range = match &args.range {
        Some(spec) => {
            let v = parse_range(spec, 2, "--range")?;
            (v[0], v[1])
        }
        None => target.default_range(),
    };
    let report = synthetic_demo(target, range, args.points, &cfg, &fitting_policy())?;

    let grid = sample_grid(range.0, range.1, args.samples);
    let target_rows: Vec<(f64, f64)> = grid.iter().map(|&x| (x, target.eval(x))).collect();
    let fit_rows = report.curve(&grid, &SeriesPolicy::default())?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| io_failure(&args.out_dir, e))?;
    let target_file = args.out_dir.join(format!("{}_target.csv", target.name()));
    let fit_file = args.out_dir.join(format!("{}_fit.csv", target.name()));
    write_samples(&target_file, &target_rows)?;
    write_samples(&fit_file, &fit_rows)?;

    let code = if report.converged { 0 } else { EXIT_NOT_CONVERGED };
    Ok((render::demo(&target, range, &report, args.format), code))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Reproduce(a) => cmd_reproduce(a),
        Command::MlEval(a) => cmd_ml_eval(a),
        Command::Bin(a) => cmd_bin(a),
        Command::Demo(a) => cmd_demo(a),
    };
    match result {
        Ok((out, code)) => {
            print!("{out}");
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
