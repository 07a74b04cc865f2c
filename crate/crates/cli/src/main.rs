use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cesurv::experiment::{
    coefficients_table, experiment_tables, metrics_table, prepare, ranking_table,
    reproduction_tables, to_json, Conventions, DataSummary, LabeledModel, PlotTable, Provenance,
};
use cesurv::{
    fit, rank_variables, reproduce_paper, run_experiment, select_variables, simulate, AftModel,
    Bundled, DataSource, DatasetSpec, Error, EstimatorConfig, EvalReport, EventValue, Norm,
    PipelineOptions, Result, SelectionPolicy, SimConfig, SurvivalDataset, TieMethod,
    VariableRanking,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(
    name = "cesurv",
    version,
    about = "Copula-entropy variable selection for survival data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a censored Weibull dataset and write it as a data file.
    Simulate(SimulateArgs),
    /// Rank covariates by copula entropy with the survival outcome.
    Select(SelectArgs),
    /// Fit a Weibull AFT model.
    Fit(FitArgs),
    /// Score a fitted model's median predictions with MAE and C-index.
    Evaluate(EvaluateArgs),
    /// Rank, select, fit full and selected models, and evaluate both.
    RunExperiment(RunArgs),
    /// Run the simulation study and both bundled real-data experiments.
    ReproducePaper(ReproduceArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// JSON config with optional `dataset`, `simulation` and `estimator` sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for TSV plot-data tables.
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

#[derive(Args)]
struct DataArgs {
    /// Data file path, `bundled:cancer`, `bundled:veteran` or `simulated`.
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    time_col: Option<String>,
    #[arg(long)]
    status_col: Option<String>,
    /// Status value that marks an event (number or text).
    #[arg(long)]
    event_value: Option<String>,
    /// Covariates to use, comma-separated.
    #[arg(long, value_delimiter = ',')]
    covariates: Option<Vec<String>>,
    /// Simulation seed (simulated data only).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EstimatorArgs {
    /// Neighbor count of the entropy estimator.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum)]
    norm: Option<NormArg>,
    #[arg(long, value_enum)]
    ties: Option<TiesArg>,
    #[arg(long)]
    jitter_seed: Option<u64>,
}

#[derive(Args)]
struct PolicyArgs {
    /// Keep the M covariates with the most negative CE.
    #[arg(long, conflicts_with = "threshold")]
    top: Option<usize>,
    /// Keep covariates whose CE is below this value.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    Max,
    Euclidean,
}

#[derive(Clone, Copy, ValueEnum)]
enum TiesArg {
    Average,
    Jitter,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of subjects.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Estimate CE of each covariate with `[time, status]` instead of `time`.
    #[arg(long)]
    with_status: bool,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Fit on CE-selected covariates instead of all of them.
    #[command(flatten)]
    policy: PolicyArgs,
    #[arg(long)]
    with_status: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    data: DataArgs,
    /// Report written by `fit`, or a bare model.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value = "model")]
    label: String,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[command(flatten)]
    policy: PolicyArgs,
    #[arg(long)]
    with_status: bool,
    /// Experiment name, also the plot-data file prefix.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
struct ReproduceArgs {
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Simulation seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    dataset: Option<DatasetSpec>,
    simulation: Option<SimConfig>,
    estimator: Option<EstimatorConfig>,
}

#[derive(Serialize)]
struct SimulationSummary {
    simulation: SimConfig,
    n_rows: usize,
    n_events: usize,
    censoring_rate: f64,
}

#[derive(Serialize)]
struct SelectReport {
    estimator: EstimatorConfig,
    conventions: Conventions,
    data: DataSummary,
    ranking: VariableRanking,
    #[serde(skip_serializing_if = "Option::is_none")]
    selection_policy: Option<SelectionPolicy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    selected: Option<Vec<String>>,
    provenance: Provenance,
}

#[derive(Serialize)]
struct FitReport {
    data: DataSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    ranking: Option<VariableRanking>,
    model: AftModel,
    provenance: Provenance,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ModelFile {
    Report { model: AftModel },
    Bare(AftModel),
}

#[derive(Serialize)]
struct EvaluateReport {
    data: DataSummary,
    model: AftModel,
    evaluation: EvalReport,
    provenance: Provenance,
}

fn read_config(path: Option<&Path>) -> Result<ConfigFile> {
    match path {
        Some(p) => {
            let bytes = fs::read(p)
                .map_err(|e| invalid(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_slice(&bytes)
                .map_err(|e| invalid(format!("bad config {}: {e}", p.display())))
        }
        None => Ok(ConfigFile::default()),
    }
}

fn estimator(cfg: &ConfigFile, args: &EstimatorArgs) -> EstimatorConfig {
    let mut est = cfg.estimator.clone().unwrap_or_default();
    if let Some(k) = args.k {
        est.k = k;
    }
    if let Some(n) = args.norm {
        est.norm = match n {
            NormArg::Max => Norm::Max,
            NormArg::Euclidean => Norm::Euclidean,
        };
    }
    if let Some(t) = args.ties {
        est.ties = match t {
            TiesArg::Average => TieMethod::Average,
            TiesArg::Jitter => TieMethod::Jitter,
        };
    }
    if let Some(s) = args.jitter_seed {
        est.jitter_seed = s;
    }
    est
}

fn policy(args: &PolicyArgs) -> Option<SelectionPolicy> {
    match (args.top, args.threshold) {
        (Some(m), _) => Some(SelectionPolicy::TopM(m)),
        (None, Some(t)) => Some(SelectionPolicy::Threshold(t)),
        (None, None) => None,
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn source(cfg: &ConfigFile, args: &DataArgs) -> Result<DataSource> {
    let file_flags =
        args.time_col.is_some() || args.status_col.is_some() || args.event_value.is_some();
    let with_file_flags = |mut spec: DatasetSpec| {
        if let Some(t) = &args.time_col {
            spec.time_col = t.clone();
        }
        if let Some(s) = &args.status_col {
            spec.status_col = s.clone();
        }
        if let Some(v) = &args.event_value {
            spec.status_event_value = EventValue::parse(v);
        }
        if let Some(c) = &args.covariates {
            spec.covariate_cols = Some(c.clone());
        }
        spec
    };
    let simulated = |cfg: Option<&SimConfig>| {
        if file_flags {
            return Err(invalid(
                "--time-col, --status-col and --event-value apply to data files",
            ));
        }
        let mut sim = cfg.cloned().unwrap_or_default();
        if let Some(s) = args.seed {
            sim.seed = s;
        }
        Ok(DataSource::Simulated(sim))
    };
    let not_simulated = || match args.seed {
        Some(_) => Err(invalid("--seed applies only to simulated data")),
        None => Ok(()),
    };

    match args.data.as_deref() {
        Some("simulated") => simulated(cfg.simulation.as_ref()),
        Some(name) if name.starts_with("bundled:") => {
            not_simulated()?;
            if file_flags {
                return Err(invalid(
                    "bundled datasets have fixed time and status columns",
                ));
            }
            Ok(DataSource::Bundled(Bundled::from_name(
                &name["bundled:".len()..],
            )?))
        }
        Some(path) => {
            not_simulated()?;
            let base = match &cfg.dataset {
                Some(spec) => DatasetSpec {
                    path: path.into(),
                    ..spec.clone()
                },
                None => DatasetSpec::new(path, "time", "status"),
            };
            Ok(DataSource::File(with_file_flags(base)))
        }
        None => match (&cfg.dataset, &cfg.simulation) {
            (Some(_), Some(_)) => Err(invalid(
                "config has both `dataset` and `simulation`; pick one with --data",
            )),
            (Some(spec), None) => {
                not_simulated()?;
                Ok(DataSource::File(with_file_flags(spec.clone())))
            }
            (None, Some(sim)) => simulated(Some(sim)),
            (None, None) => Err(invalid("no data source: pass --data or a config file")),
        },
    }
}

/// Loads the data and applies `--covariates` to sources whose columns are fixed.
fn load(
    source: &DataSource,
    args: &DataArgs,
) -> Result<(SurvivalDataset, DataSummary, Provenance)> {
    let (mut ds, mut summary, prov) = prepare(source)?;
    if let (Some(cols), false) = (&args.covariates, matches!(source, DataSource::File(_))) {
        ds = ds.select_covariates(cols)?;
        summary.covariates = ds.names.clone();
        summary.categories = ds.categories.clone();
    }
    Ok((ds, summary, prov))
}

fn default_name(source: &DataSource) -> String {
    match source {
        DataSource::File(spec) => spec
            .path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "experiment".into()),
        DataSource::Bundled(b) => b.name().into(),
        DataSource::Simulated(_) => "simulation".into(),
    }
}

fn emit(output: &OutputArgs, body: &str, tables: &[PlotTable]) -> Result<()> {
    match &output.out {
        Some(path) => fs::write(path, body)?,
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    if let Some(dir) = &output.plot_data {
        fs::create_dir_all(dir)?;
        for t in tables {
            fs::write(dir.join(&t.file_name), &t.content)?;
        }
    }
    Ok(())
}

fn require_converged<'a>(models: impl IntoIterator<Item = &'a AftModel>) -> Result<()> {
    for m in models {
        if !m.converged {
            return Err(Error::NonConvergence {
                iterations: m.iterations,
                loglik: m.log_likelihood,
                gradient_norm: m.final_gradient_norm,
                reason: "report written with the last iterate".into(),
            });
        }
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let cfg = read_config(args.output.config.as_deref())?;
    let mut sim = cfg.simulation.unwrap_or_default();
    if let Some(s) = args.seed {
        sim.seed = s;
    }
    if let Some(n) = args.n {
        sim.n_subjects = n;
    }
    let ds = simulate(&sim)?;
    match &args.output.out {
        Some(path) => {
            ds.save(path)?;
            let summary = SimulationSummary {
                n_rows: ds.n_rows(),
                n_events: ds.n_events(),
                censoring_rate: 1.0 - ds.n_events() as f64 / ds.n_rows() as f64,
                simulation: sim,
            };
            print!("{}", to_json(&summary)?);
        }
        None => ds.write_csv(std::io::stdout().lock(), b',')?,
    }
    Ok(())
}

fn cmd_select(args: &SelectArgs) -> Result<()> {
    let cfg = read_config(args.output.config.as_deref())?;
    let est = estimator(&cfg, &args.estimator);
    let src = source(&cfg, &args.data)?;
    let (ds, data, mut provenance) = load(&src, &args.data)?;
    provenance.jitter_seed = est.jitter_seed;
    let ranking = rank_variables(&ds, args.with_status, &est)?;
    let selection_policy = policy(&args.policy);
    let selected = selection_policy
        .map(|p| select_variables(&ranking, p))
        .transpose()?;
    let tables = vec![ranking_table(&default_name(&src), &ranking)];
    let report = SelectReport {
        conventions: Conventions::new(&est),
        estimator: est,
        data,
        ranking,
        selection_policy,
        selected,
        provenance,
    };
    emit(&args.output, &to_json(&report)?, &tables)
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let cfg = read_config(args.output.config.as_deref())?;
    let src = source(&cfg, &args.data)?;
    let (ds, data, mut provenance) = load(&src, &args.data)?;
    let (included, ranking) = match policy(&args.policy) {
        Some(p) => {
            let est = estimator(&cfg, &args.estimator);
            provenance.jitter_seed = est.jitter_seed;
            let r = rank_variables(&ds, args.with_status, &est)?;
            (select_variables(&r, p)?, Some(r))
        }
        None => (ds.names.clone(), None),
    };
    let model = fit(&ds, &included)?;
    let name = default_name(&src);
    let tables = vec![coefficients_table(
        &name,
        &[LabeledModel {
            label: name.clone(),
            model: model.clone(),
        }],
    )];
    let report = FitReport {
        data,
        ranking,
        model,
        provenance,
    };
    emit(&args.output, &to_json(&report)?, &tables)?;
    require_converged([&report.model])
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let cfg = read_config(args.output.config.as_deref())?;
    let src = source(&cfg, &args.data)?;
    let (ds, data, provenance) = load(&src, &args.data)?;
    let path = args.model.display();
    let bytes = fs::read(&args.model).map_err(|e| invalid(format!("cannot read {path}: {e}")))?;
    let model = match serde_json::from_slice(&bytes)
        .map_err(|_| invalid(format!("{path} holds neither a fit report nor a model")))?
    {
        ModelFile::Report { model } | ModelFile::Bare(model) => model,
    };
    let at_rows = model.predict_dataset(&ds)?;
    let evaluation = cesurv::metrics::evaluate(&args.label, &at_rows, &ds.time, &ds.status)?;
    let tables = vec![metrics_table(
        &default_name(&src),
        std::slice::from_ref(&evaluation),
    )];
    let report = EvaluateReport {
        data,
        model,
        evaluation,
        provenance,
    };
    emit(&args.output, &to_json(&report)?, &tables)
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let cfg = read_config(args.output.config.as_deref())?;
    let src = source(&cfg, &args.data)?;
    if args.data.covariates.is_some() && !matches!(src, DataSource::File(_)) {
        return Err(invalid(
            "--covariates with run-experiment needs a data file",
        ));
    }
    let policy =
        policy(&args.policy).ok_or_else(|| invalid("run-experiment needs --top or --threshold"))?;
    let opts = PipelineOptions {
        estimator: estimator(&cfg, &args.estimator),
        with_status: args.with_status,
        policy,
    };
    let name = args.name.clone().unwrap_or_else(|| default_name(&src));
    let report = run_experiment(&name, &src, &opts)?;
    emit(
        &args.output,
        &to_json(&report)?,
        &experiment_tables(&report),
    )?;
    require_converged(report.models.iter().map(|m| &m.model))
}

fn cmd_reproduce(args: &ReproduceArgs) -> Result<()> {
    let cfg = read_config(args.output.config.as_deref())?;
    if cfg.dataset.is_some() || cfg.simulation.is_some() {
        return Err(invalid(
            "reproduce-paper uses its own data; the config may only set `estimator`",
        ));
    }
    let report = reproduce_paper(args.seed, &estimator(&cfg, &args.estimator))?;
    emit(
        &args.output,
        &to_json(&report)?,
        &reproduction_tables(&report),
    )?;
    let sim = report.simulation.models.iter();
    let real = report.real_data.iter().flat_map(|r| &r.models);
    require_converged(sim.chain(real).map(|m| &m.model))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Select(a) => cmd_select(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::RunExperiment(a) => cmd_run(a),
        Command::ReproducePaper(a) => cmd_reproduce(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
