//! Command-line front end: `fit`, `select`, `simulate` and `km-check`.
//!
//! Settings come from flags, optionally layered over a JSON file given with
//! `--config` whose keys are the flag names in snake case. Flags win.

mod input;
mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::data::{destandardize_covariance, destandardize_theta, standardize, SurvivalDataset};
use crate::diagnostics::{kaplan_meier, weibull_check_points};
use crate::error::Error;
use crate::penalty::{
    alasso_weights, expand_lambda, PenaltyFamily, PenaltySpec, TuningMode, DEFAULT_EPSILON, DEFAULT_SCAD_A,
    DEFAULT_WEIGHT_CAP,
};
use crate::selection::{bic_of_fit, select_and_fit, DEConfig};
use crate::simulation::{run_scenario, SimScenario, REFERENCE_ALPHA, REFERENCE_BETA};
use crate::solver::{fit_penalized, fit_unpenalized, FitResult, SolverConfig};

pub use input::{read_survival_csv, LoadedData};
pub use report::{CoefficientRow, KmReport, ModelReport, SelectionInfo, SimulationReport, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("row {row}, column {column:?}: {message}")]
    Parse { row: usize, column: String, message: String },
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Library(Error),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Config(_) => "InvalidConfig",
            CliError::FileNotFound(_) => "FileNotFound",
            CliError::Parse { .. } => "ParseError",
            CliError::Io(_) => "IoError",
            CliError::Library(e) => e.code(),
        }
    }

    /// 2 for configuration problems, 3 for unusable data, 4 for numerical
    /// failures and 1 for I/O errors on output.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::FileNotFound(_) | CliError::Parse { .. } => 3,
            CliError::Io(_) => 1,
            CliError::Library(e) if e.is_config() => 2,
            CliError::Library(e) if e.is_numerical() => 4,
            CliError::Library(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Library(e)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mprsel",
    version,
    about = "Penalized variable selection for the Weibull multi-parameter regression model"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit at fixed tuning values (unpenalized by default).
    Fit(FitArgs),
    /// Choose tuning values by minimizing BIC, then fit.
    Select(SelectArgs),
    /// Run a simulation scenario and report selection and estimation metrics.
    Simulate(SimulateArgs),
    /// Kaplan-Meier log cumulative hazard check for a Weibull baseline.
    KmCheck(KmArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
    /// JSON file of defaults keyed by flag name.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub time_col: Option<String>,
    #[arg(long)]
    pub status_col: Option<String>,
    /// Comma-separated scale covariates.
    #[arg(long, value_delimiter = ',')]
    pub scale_covs: Option<Vec<String>>,
    /// Comma-separated shape covariates.
    #[arg(long, value_delimiter = ',')]
    pub shape_covs: Option<Vec<String>>,
}

#[derive(Debug, Clone, Args)]
pub struct PenaltyArgs {
    /// none, lasso, scad or alasso.
    #[arg(long, value_parser = parse_family)]
    pub penalty: Option<PenaltyFamily>,
    /// single, single-adaptive, separate or separate-adaptive.
    #[arg(long, value_parser = parse_tuning)]
    pub tuning: Option<TuningMode>,
    #[arg(long)]
    pub scad_a: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Coefficients with absolute value below this are reported as zero.
    #[arg(long)]
    pub zero_tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    /// Search interval `lo,hi` for every tuning scalar.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub lambda_bounds: Option<Vec<f64>>,
    #[arg(long)]
    pub de_pop: Option<usize>,
    #[arg(long)]
    pub de_gens: Option<usize>,
    #[arg(long)]
    pub de_f: Option<f64>,
    #[arg(long)]
    pub de_cr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Start inner fits from the best fit found in earlier generations.
    #[arg(long)]
    pub warm_start: bool,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    /// Tuning scalar(s), comma-separated; required unless the penalty is none.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long)]
    pub n: Option<usize>,
    /// AR(1) correlation between neighbouring covariates.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Target censoring proportion.
    #[arg(long)]
    pub censoring: Option<f64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Comma-separated scale coefficients, intercept first.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub true_beta: Option<Vec<f64>>,
    /// Comma-separated shape coefficients, intercept first.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub true_alpha: Option<Vec<f64>>,
    /// Include mean wall time per replicate (makes output run-dependent).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct KmArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub time_col: Option<String>,
    #[arg(long)]
    pub status_col: Option<String>,
}

/// Defaults read from `--config`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub format: Option<Format>,
    pub threads: Option<usize>,
    pub time_col: Option<String>,
    pub status_col: Option<String>,
    pub scale_covs: Option<Vec<String>>,
    pub shape_covs: Option<Vec<String>>,
    pub penalty: Option<String>,
    pub tuning: Option<String>,
    pub scad_a: Option<f64>,
    pub epsilon: Option<f64>,
    pub zero_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub lambda: Option<Vec<f64>>,
    pub lambda_bounds: Option<Vec<f64>>,
    pub de_pop: Option<usize>,
    pub de_gens: Option<usize>,
    pub de_f: Option<f64>,
    pub de_cr: Option<f64>,
    pub seed: Option<u64>,
    pub warm_start: Option<bool>,
    pub n: Option<usize>,
    pub rho: Option<f64>,
    pub censoring: Option<f64>,
    pub replicates: Option<usize>,
    pub true_beta: Option<Vec<f64>>,
    pub true_alpha: Option<Vec<f64>>,
}

fn parse_family(s: &str) -> Result<PenaltyFamily, String> {
    match s {
        "none" => Ok(PenaltyFamily::None),
        "lasso" => Ok(PenaltyFamily::Lasso),
        "scad" => Ok(PenaltyFamily::Scad),
        "alasso" => Ok(PenaltyFamily::Alasso),
        _ => Err(format!("unknown penalty {s:?}; expected none, lasso, scad or alasso")),
    }
}

fn parse_tuning(s: &str) -> Result<TuningMode, String> {
    match s {
        "single" => Ok(TuningMode::Single),
        "single-adaptive" => Ok(TuningMode::SingleAdaptive),
        "separate" | "separate-non-adaptive" => Ok(TuningMode::SeparateNonAdaptive),
        "separate-adaptive" => Ok(TuningMode::SeparateAdaptive),
        _ => Err(format!("unknown tuning mode {s:?}; expected single, single-adaptive, separate or separate-adaptive")),
    }
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else { return Ok(FileConfig::default()) };
    let text = fs::read_to_string(path).map_err(|_| CliError::FileNotFound(path.display().to_string()))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Fully resolved penalty and solver settings.
struct ModelSettings {
    spec: PenaltySpec,
    solver: SolverConfig,
}

fn resolve_model(
    args: &PenaltyArgs,
    file: &FileConfig,
    default_family: PenaltyFamily,
) -> Result<ModelSettings, CliError> {
    let family = match (&args.penalty, &file.penalty) {
        (Some(f), _) => *f,
        (None, Some(s)) => parse_family(s).map_err(CliError::Config)?,
        (None, None) => default_family,
    };
    let tuning = match (&args.tuning, &file.tuning) {
        (Some(t), _) => Some(*t),
        (None, Some(s)) => Some(parse_tuning(s).map_err(CliError::Config)?),
        (None, None) => None,
    };
    let tuning = match tuning {
        None => TuningMode::for_family(family, false),
        Some(t) if family != PenaltyFamily::None && t.is_adaptive() != (family == PenaltyFamily::Alasso) => {
            return Err(CliError::Config(format!(
                "tuning mode {t:?} does not match penalty {family:?}; adaptive modes go with alasso only"
            )));
        }
        Some(t) => t,
    };
    let mut spec = PenaltySpec::new(family, tuning);
    spec.scad_a = args.scad_a.or(file.scad_a).unwrap_or(DEFAULT_SCAD_A);
    spec.epsilon = args.epsilon.or(file.epsilon).unwrap_or(DEFAULT_EPSILON);
    spec.validate()?;
    let mut solver = SolverConfig::default();
    if let Some(z) = args.zero_tol.or(file.zero_tol) {
        solver.zero_tol = z;
    }
    if let Some(m) = args.max_iter.or(file.max_iter) {
        solver.max_iter = m;
    }
    solver.validate()?;
    Ok(ModelSettings { spec, solver })
}

fn resolve_de(args: &SearchArgs, file: &FileConfig) -> Result<DEConfig, CliError> {
    let mut de = DEConfig::default();
    if let Some(b) = args.lambda_bounds.clone().or_else(|| file.lambda_bounds.clone()) {
        if b.len() != 2 {
            return Err(CliError::Config(format!("lambda bounds need two values lo,hi; got {}", b.len())));
        }
        de.bounds = (b[0], b[1]);
    }
    de.population_size = args.de_pop.or(file.de_pop).or(de.population_size);
    de.generations_max = args.de_gens.or(file.de_gens).unwrap_or(de.generations_max);
    de.f = args.de_f.or(file.de_f).unwrap_or(de.f);
    de.cr = args.de_cr.or(file.de_cr).unwrap_or(de.cr);
    de.seed = args.seed.or(file.seed).unwrap_or(de.seed);
    de.warm_start = args.warm_start || file.warm_start.unwrap_or(false);
    Ok(de)
}

fn load_data(args: &DataArgs, file: &FileConfig) -> Result<LoadedData, CliError> {
    let time_col = args.time_col.clone().or_else(|| file.time_col.clone()).unwrap_or_else(|| "time".into());
    let status_col = args.status_col.clone().or_else(|| file.status_col.clone()).unwrap_or_else(|| "status".into());
    let clean = |v: Option<Vec<String>>| -> Vec<String> {
        v.unwrap_or_default().into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
    };
    let scale = clean(args.scale_covs.clone().or_else(|| file.scale_covs.clone()));
    let shape = clean(args.shape_covs.clone().or_else(|| file.shape_covs.clone()));
    read_survival_csv(&args.input, &time_col, &status_col, &scale, &shape)
}

/// Parses arguments from the process, runs the command and returns the exit
/// code, printing a one-line `error[Code]: message` on failure.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {}", e.code(), msg);
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let common = match &cli.command {
        Command::Fit(a) => &a.common,
        Command::Select(a) => &a.common,
        Command::Simulate(a) => &a.common,
        Command::KmCheck(a) => &a.common,
    };
    let file = load_file_config(common.config.as_deref())?;
    match common.threads.or(file.threads) {
        Some(0) => Err(CliError::Config("thread count must be positive".into())),
        Some(t) => {
            let pool =
                rayon::ThreadPoolBuilder::new().num_threads(t).build().map_err(|e| CliError::Config(e.to_string()))?;
            pool.install(|| dispatch(&cli.command, &file))
        }
        None => dispatch(&cli.command, &file),
    }
}

fn dispatch(command: &Command, file: &FileConfig) -> Result<(), CliError> {
    match command {
        Command::Fit(a) => {
            let report = run_fit(a, file)?;
            emit_model(&report, &a.common, file)
        }
        Command::Select(a) => {
            let report = run_select(a, file)?;
            emit_model(&report, &a.common, file)
        }
        Command::Simulate(a) => run_simulate(a, file),
        Command::KmCheck(a) => run_km(a, file),
    }
}

pub fn run_fit(args: &FitArgs, file: &FileConfig) -> Result<ModelReport, CliError> {
    let settings = resolve_model(&args.penalty, file, PenaltyFamily::None)?;
    let loaded = load_data(&args.data, file)?;
    let data = &loaded.data;
    let (std_data, record) = standardize(data)?;
    let unpen = fit_unpenalized(&std_data, None, &settings.solver)?;
    let mut spec = settings.spec;
    let lambda_scalars = args.lambda.clone().or_else(|| file.lambda.clone());
    let (fit, scalars) = if spec.family == PenaltyFamily::None {
        if lambda_scalars.as_ref().is_some_and(|l| l.iter().any(|v| *v != 0.0)) {
            return Err(CliError::Config("tuning values given without a penalty".into()));
        }
        (unpen, Vec::new())
    } else {
        let scalars = lambda_scalars.ok_or_else(|| CliError::Config("--lambda is required with a penalty".into()))?;
        if spec.family == PenaltyFamily::Alasso {
            spec.adaptive_weights = Some(alasso_weights(&unpen.theta_hat, DEFAULT_WEIGHT_CAP));
        }
        let lambda = expand_lambda(&scalars, &spec, std_data.p(), std_data.q())?;
        let fit = fit_penalized(&std_data, &spec, &lambda, &unpen.theta_hat, &settings.solver)?;
        (fit, scalars)
    };
    let theta = destandardize_theta(&fit.theta_hat, &record)?;
    let cov = fit.covariance.as_ref().map(|c| destandardize_covariance(c, &record)).transpose()?;
    let tuning = (spec.family != PenaltyFamily::None).then_some(spec.tuning_mode);
    Ok(build_report("fit", &loaded, data, &spec, tuning, scalars, &fit, &theta_flat(&theta), cov.as_ref(), None))
}

pub fn run_select(args: &SelectArgs, file: &FileConfig) -> Result<ModelReport, CliError> {
    let settings = resolve_model(&args.penalty, file, PenaltyFamily::Alasso)?;
    let de = resolve_de(&args.search, file)?;
    let loaded = load_data(&args.data, file)?;
    let data = &loaded.data;
    let res = select_and_fit(data, &settings.spec, &settings.solver, &de)?;
    let mask = &res.fit.selected_mask;
    let shape_offset = data.p() + 1;
    let pick = |names: &[String], offset: usize| -> Vec<String> {
        names.iter().enumerate().filter(|(j, _)| mask[offset + j + 1]).map(|(_, n)| n.clone()).collect()
    };
    let selection = SelectionInfo {
        lambda_star: res.lambda_star.clone(),
        bic: res.bic_star,
        selected_scale: pick(&loaded.scale_names, 0),
        selected_shape: pick(&loaded.shape_names, shape_offset),
        n_inner_fits: res.n_inner_fits,
        bic_trace: res.bic_trace.clone(),
    };
    let tuning = (res.penalty.family != PenaltyFamily::None).then_some(res.penalty.tuning_mode);
    Ok(build_report(
        "select",
        &loaded,
        data,
        &res.penalty,
        tuning,
        res.lambda_star.clone(),
        &res.fit,
        &theta_flat(&res.theta_original),
        res.covariance_original.as_ref(),
        Some(selection),
    ))
}

fn theta_flat(theta: &crate::data::ThetaVector) -> Vec<f64> {
    theta.to_flat().iter().copied().collect()
}

#[allow(clippy::too_many_arguments)]
fn build_report(
    command: &'static str,
    loaded: &LoadedData,
    data: &SurvivalDataset,
    spec: &PenaltySpec,
    tuning: Option<TuningMode>,
    lambda: Vec<f64>,
    fit: &FitResult,
    theta_original: &[f64],
    cov_original: Option<&nalgebra::DMatrix<f64>>,
    selection: Option<SelectionInfo>,
) -> ModelReport {
    let n_beta = data.p() + 1;
    let std_flat = theta_flat(&fit.theta_hat);
    let se_std = fit.standard_errors();
    let se_orig: Option<Vec<f64>> = cov_original.map(|c| (0..c.nrows()).map(|i| c[(i, i)].max(0.0).sqrt()).collect());
    let mut coefficients = Vec::with_capacity(std_flat.len());
    for k in 0..std_flat.len() {
        let (component, j, names) =
            if k < n_beta { ("scale", k, &loaded.scale_names) } else { ("shape", k - n_beta, &loaded.shape_names) };
        let name = if j == 0 { "(intercept)".to_string() } else { names[j - 1].clone() };
        coefficients.push(CoefficientRow::new(
            component,
            name,
            theta_original[k],
            se_orig.as_ref().map(|s| s[k]),
            fit.selected_mask[k],
            std_flat[k],
            se_std.as_ref().map(|s| s[k]),
        ));
    }
    ModelReport {
        schema_version: SCHEMA_VERSION,
        command,
        n: data.n(),
        n_events: data.n_events(),
        penalty: spec.family,
        tuning_mode: tuning,
        lambda,
        converged: fit.converged,
        n_iter: fit.n_iter,
        loglik: fit.loglik,
        penalized_loglik: fit.penalized_loglik,
        bic: bic_of_fit(fit, data.n()),
        effective_df: fit.effective_df,
        effective_df_scale: fit.df_split.map(|d| d.0),
        effective_df_shape: fit.df_split.map(|d| d.1),
        coefficients,
        selection,
    }
}

fn format_of(common: &CommonArgs, file: &FileConfig, default: Format) -> Format {
    common.format.or(file.format).unwrap_or(default)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn emit_model(report: &ModelReport, common: &CommonArgs, file: &FileConfig) -> Result<(), CliError> {
    let text = match format_of(common, file, Format::Json) {
        Format::Json => to_json(report)?,
        Format::Csv => report.to_csv(),
    };
    write_out(common.output.as_deref(), &text)
}

pub fn simulate_report(args: &SimulateArgs, file: &FileConfig) -> Result<SimulationReport, CliError> {
    let settings = resolve_model(&args.penalty, file, PenaltyFamily::Alasso)?;
    let de = resolve_de(&args.search, file)?;
    let scenario = SimScenario {
        n: args.n.or(file.n).unwrap_or(500),
        rho: args.rho.or(file.rho).unwrap_or(0.5),
        true_beta: args.true_beta.clone().or_else(|| file.true_beta.clone()).unwrap_or_else(|| REFERENCE_BETA.to_vec()),
        true_alpha: args
            .true_alpha
            .clone()
            .or_else(|| file.true_alpha.clone())
            .unwrap_or_else(|| REFERENCE_ALPHA.to_vec()),
        target_censoring: args.censoring.or(file.censoring).unwrap_or(0.25),
        family: settings.spec.family,
        tuning_mode: settings.spec.tuning_mode,
        n_replicates: args.replicates.or(file.replicates).unwrap_or(200),
        seed: de.seed,
    };
    if settings.spec.scad_a != DEFAULT_SCAD_A || settings.spec.epsilon != DEFAULT_EPSILON {
        return Err(CliError::Config("simulate uses the default scad_a and epsilon".into()));
    }
    let report = run_scenario(&scenario, &settings.solver, &de)?;
    let report = if args.timing { report } else { report.without_timing() };
    Ok(SimulationReport { schema_version: SCHEMA_VERSION, command: "simulate", report })
}

fn run_simulate(args: &SimulateArgs, file: &FileConfig) -> Result<(), CliError> {
    let report = simulate_report(args, file)?;
    match &args.common.output {
        Some(path) => {
            write_out(Some(&path.with_extension("json")), &to_json(&report)?)?;
            write_out(Some(&path.with_extension("csv")), &report.to_csv())
        }
        None => match format_of(&args.common, file, Format::Json) {
            Format::Json => write_out(None, &to_json(&report)?),
            Format::Csv => write_out(None, &report.to_csv()),
        },
    }
}

pub fn km_report(args: &KmArgs, file: &FileConfig) -> Result<KmReport, CliError> {
    let time_col = args.time_col.clone().or_else(|| file.time_col.clone()).unwrap_or_else(|| "time".into());
    let status_col = args.status_col.clone().or_else(|| file.status_col.clone()).unwrap_or_else(|| "status".into());
    let loaded = read_survival_csv(&args.input, &time_col, &status_col, &[], &[])?;
    let data = &loaded.data;
    let curve = kaplan_meier(data.time(), data.status())?;
    let check = weibull_check_points(&curve)?;
    Ok(KmReport {
        schema_version: SCHEMA_VERSION,
        command: "km-check",
        n: data.n(),
        n_events: data.n_events(),
        n_points: check.points.len(),
        check,
    })
}

fn run_km(args: &KmArgs, file: &FileConfig) -> Result<(), CliError> {
    let report = km_report(args, file)?;
    match format_of(&args.common, file, Format::Csv) {
        Format::Json => write_out(args.common.output.as_deref(), &to_json(&report)?),
        Format::Csv => {
            write_out(args.common.output.as_deref(), &report.to_csv())?;
            eprintln!("{}", report.summary_line());
            Ok(())
        }
    }
}
