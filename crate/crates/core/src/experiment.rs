//! End-to-end pipelines: load or simulate, rank, select, fit, evaluate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aft::{self, AftModel};
use crate::bundled::Bundled;
use crate::copula::{EstimatorConfig, TieMethod};
use crate::dataset::{load_dataset, DatasetSpec, LoadedDataset, SurvivalDataset};
use crate::error::{Error, Result};
use crate::metrics::{self, EvalReport};
use crate::survsim::{simulate, SimConfig};
use crate::varselect::{rank_variables, select_variables, SelectionPolicy, VariableRanking};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

pub const FULL_LABEL: &str = "full";
pub const SELECTED_LABEL: &str = "ce_selected";

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    File(DatasetSpec),
    Bundled(Bundled),
    Simulated(SimConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub estimator: EstimatorConfig,
    pub with_status: bool,
    pub policy: SelectionPolicy,
}

/// Fixed conventions that determine every reported number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub rank_normalization: String,
    pub tie_method: TieMethod,
    pub point_prediction: String,
    pub mae_rows: String,
    pub c_index_ties: String,
    pub evaluation_rows: String,
}

impl Conventions {
    pub fn new(cfg: &EstimatorConfig) -> Self {
        Self {
            rank_normalization: "rank/N, ranks starting at 1".into(),
            tie_method: cfg.ties,
            point_prediction: "conditional median of the fitted Weibull AFT model".into(),
            mae_rows: "uncensored rows only".into(),
            c_index_ties: "prediction ties score 1/2; tied times are not comparable".into(),
            evaluation_rows: "whole dataset (no train/test split)".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub source: String,
    pub n_rows: usize,
    pub n_rows_dropped: usize,
    pub n_events: usize,
    pub covariates: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub categories: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_spec: Option<DatasetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub input_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation_seed: Option<u64>,
    pub jitter_seed: u64,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledModel {
    pub label: String,
    pub model: AftModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub estimator: EstimatorConfig,
    pub conventions: Conventions,
    pub data: DataSummary,
    pub ranking: VariableRanking,
    pub selection_policy: SelectionPolicy,
    pub selected: Vec<String>,
    pub models: Vec<LabeledModel>,
    pub evaluations: Vec<EvalReport>,
    pub provenance: Provenance,
}

impl ExperimentReport {
    pub fn model(&self, label: &str) -> Option<&AftModel> {
        self.models
            .iter()
            .find(|m| m.label == label)
            .map(|m| &m.model)
    }

    pub fn evaluation(&self, label: &str) -> Option<&EvalReport> {
        self.evaluations.iter().find(|e| e.model_label == label)
    }
}

/// Materializes a data source, returning the dataset with its summary and
/// input hash.
pub fn prepare(source: &DataSource) -> Result<(SurvivalDataset, DataSummary, Provenance)> {
    let from_loaded = |loaded: LoadedDataset, label: String, spec: Option<DatasetSpec>| {
        let ds = loaded.dataset;
        let summary = DataSummary {
            source: label,
            n_rows: ds.n_rows(),
            n_rows_dropped: loaded.rows_dropped,
            n_events: ds.n_events(),
            covariates: ds.names.clone(),
            categories: ds.categories.clone(),
            dataset_spec: spec,
            simulation: None,
        };
        let prov = Provenance {
            input_sha256: loaded.sha256,
            simulation_seed: None,
            jitter_seed: 0,
            tool_version: TOOL_VERSION.into(),
        };
        (ds, summary, prov)
    };
    match source {
        DataSource::File(spec) => {
            let loaded = load_dataset(spec)?;
            Ok(from_loaded(
                loaded,
                format!("file:{}", spec.path.display()),
                Some(spec.clone()),
            ))
        }
        DataSource::Bundled(b) => {
            let loaded = b.load()?;
            Ok(from_loaded(
                loaded,
                format!("bundled:{}", b.name()),
                Some(b.spec()),
            ))
        }
        DataSource::Simulated(cfg) => {
            let ds = simulate(cfg)?;
            let hash = hex::encode(Sha256::digest(serde_json::to_vec(cfg)?));
            let summary = DataSummary {
                source: "simulation".into(),
                n_rows: ds.n_rows(),
                n_rows_dropped: 0,
                n_events: ds.n_events(),
                covariates: ds.names.clone(),
                categories: BTreeMap::new(),
                dataset_spec: None,
                simulation: Some(cfg.clone()),
            };
            let prov = Provenance {
                input_sha256: hash,
                simulation_seed: Some(cfg.seed),
                jitter_seed: 0,
                tool_version: TOOL_VERSION.into(),
            };
            Ok((ds, summary, prov))
        }
    }
}

/// Fits an AFT model and scores its median predictions on the same rows.
pub fn fit_and_evaluate(
    ds: &SurvivalDataset,
    label: &str,
    included: &[String],
) -> Result<(LabeledModel, EvalReport)> {
    let model = aft::fit(ds, included).map_err(|e| e.at_stage("fit"))?;
    let pred = model
        .predict_dataset(ds)
        .map_err(|e| e.at_stage("predict"))?;
    let eval = metrics::evaluate(label, &pred, &ds.time, &ds.status)
        .map_err(|e| e.at_stage("evaluate"))?;
    Ok((
        LabeledModel {
            label: label.into(),
            model,
        },
        eval,
    ))
}

pub fn run_experiment(
    name: &str,
    source: &DataSource,
    opts: &PipelineOptions,
) -> Result<ExperimentReport> {
    let (ds, data, mut provenance) = prepare(source).map_err(|e| e.at_stage("load"))?;
    provenance.jitter_seed = opts.estimator.jitter_seed;
    let ranking =
        rank_variables(&ds, opts.with_status, &opts.estimator).map_err(|e| e.at_stage("rank"))?;
    let selected = select_variables(&ranking, opts.policy).map_err(|e| e.at_stage("select"))?;

    let (full_model, full_eval) = fit_and_evaluate(&ds, FULL_LABEL, &ds.names)?;
    let (sel_model, sel_eval) = fit_and_evaluate(&ds, SELECTED_LABEL, &selected)?;

    Ok(ExperimentReport {
        name: name.into(),
        estimator: opts.estimator.clone(),
        conventions: Conventions::new(&opts.estimator),
        data,
        ranking,
        selection_policy: opts.policy,
        selected,
        models: vec![full_model, sel_model],
        evaluations: vec![full_eval, sel_eval],
        provenance,
    })
}

/// Simulation study plus the two bundled real-data experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproductionReport {
    pub tool_version: String,
    pub simulation: ExperimentReport,
    /// Ranking of the simulated covariates using `[time, status, x]`.
    pub simulation_with_status: VariableRanking,
    pub real_data: Vec<ExperimentReport>,
}

pub const REPRODUCTION_TOP_M: usize = 4;

pub fn reproduce_paper(seed: u64, estimator: &EstimatorConfig) -> Result<ReproductionReport> {
    let opts = PipelineOptions {
        estimator: estimator.clone(),
        with_status: false,
        policy: SelectionPolicy::TopM(REPRODUCTION_TOP_M),
    };
    let sim_cfg = SimConfig {
        seed,
        ..SimConfig::default()
    };
    let source = DataSource::Simulated(sim_cfg);
    let simulation = run_experiment("simulation", &source, &opts)?;
    let (sim_ds, _, _) = prepare(&source)?;
    let simulation_with_status =
        rank_variables(&sim_ds, true, estimator).map_err(|e| e.at_stage("rank"))?;
    let real_data = Bundled::ALL
        .iter()
        .map(|&b| run_experiment(b.name(), &DataSource::Bundled(b), &opts))
        .collect::<Result<_>>()?;
    Ok(ReproductionReport {
        tool_version: TOOL_VERSION.into(),
        simulation,
        simulation_with_status,
        real_data,
    })
}

/// A delimiter-separated table destined for a plotting tool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlotTable {
    pub file_name: String,
    pub content: String,
}

/// Numbers in plot tables use the JSON formatting of the report, so every
/// plotted value appears verbatim in the report.
fn num(v: f64) -> String {
    serde_json::to_string(&v).unwrap_or_else(|_| "null".into())
}

fn table(file_name: String, header: &[&str], rows: Vec<Vec<String>>) -> PlotTable {
    let mut content = header.join("\t");
    content.push('\n');
    for r in rows {
        content.push_str(&r.join("\t"));
        content.push('\n');
    }
    PlotTable { file_name, content }
}

pub fn ranking_table(prefix: &str, r: &VariableRanking) -> PlotTable {
    let rows = r
        .entries
        .iter()
        .map(|e| vec![e.name.clone(), num(e.ce), e.rank.to_string()])
        .collect();
    table(
        format!("{prefix}_ranking.tsv"),
        &["name", "ce", "rank"],
        rows,
    )
}

pub fn metrics_table(prefix: &str, evals: &[EvalReport]) -> PlotTable {
    let rows = evals
        .iter()
        .map(|e| vec![e.model_label.clone(), num(e.mae), num(e.c_index)])
        .collect();
    table(
        format!("{prefix}_metrics.tsv"),
        &["model_label", "mae", "c_index"],
        rows,
    )
}

pub fn coefficients_table(prefix: &str, models: &[LabeledModel]) -> PlotTable {
    let rows = models
        .iter()
        .flat_map(|m| {
            m.model
                .included
                .iter()
                .zip(&m.model.coefficients)
                .map(|(n, c)| vec![m.label.clone(), n.clone(), num(*c)])
        })
        .collect();
    table(
        format!("{prefix}_coefficients.tsv"),
        &["model_label", "name", "coefficient"],
        rows,
    )
}

pub fn experiment_tables(r: &ExperimentReport) -> Vec<PlotTable> {
    vec![
        ranking_table(&r.name, &r.ranking),
        metrics_table(&r.name, &r.evaluations),
        coefficients_table(&r.name, &r.models),
    ]
}

pub fn reproduction_tables(r: &ReproductionReport) -> Vec<PlotTable> {
    let mut out = experiment_tables(&r.simulation);
    out.push(ranking_table(
        "simulation_with_status",
        &r.simulation_with_status,
    ));
    for exp in &r.real_data {
        out.extend(experiment_tables(exp));
    }
    out
}

pub fn to_json(value: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn check_policy_fits(policy: SelectionPolicy, n_covariates: usize) -> Result<()> {
    match policy {
        SelectionPolicy::TopM(m) if m > n_covariates => Err(Error::invalid(format!(
            "--top {m} exceeds the {n_covariates} available covariates"
        ))),
        _ => Ok(()),
    }
}
