//! Covariate ranking by copula entropy with the survival time.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{copula_entropy, EstimatorConfig};
use crate::dataset::SurvivalDataset;
use crate::error::{Error, Result};
use crate::matrix::SampleMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub name: String,
    /// Copula entropy in nats; more negative means stronger dependence.
    pub ce: f64,
    pub rank: usize,
    /// The covariate takes a single value; its CE is reported as exactly 0.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableRanking {
    /// Sorted by ascending CE; equal values keep input column order.
    pub entries: Vec<RankEntry>,
    pub with_status: bool,
    pub estimator: EstimatorConfig,
}

impl VariableRanking {
    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&RankEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// Scores every covariate by the CE of `[time, x]`, or of `[time, status, x]`
/// when `with_status` is set.
pub fn rank_variables(
    ds: &SurvivalDataset,
    with_status: bool,
    cfg: &EstimatorConfig,
) -> Result<VariableRanking> {
    let d = ds.covariates.n_cols();
    if d == 0 || ds.names.is_empty() {
        return Err(Error::invalid("no covariates to rank"));
    }
    cfg.validate_for(ds.n_rows())?;
    let status = ds.status_f64();
    let scores: Vec<(f64, bool)> = (0..d)
        .into_par_iter()
        .map(|j| {
            let x = ds.covariates.column(j);
            let constant = x.iter().all(|&v| v == x[0]);
            // a constant is independent of everything
            if constant {
                return Ok((0.0, true));
            }
            let m = if with_status {
                SampleMatrix::from_columns(&[&ds.time, &status, &x])?
            } else {
                SampleMatrix::from_columns(&[&ds.time, &x])?
            };
            Ok((copula_entropy(&m, cfg)?, constant))
        })
        .collect::<Result<_>>()?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| scores[a].0.total_cmp(&scores[b].0).then(a.cmp(&b)));
    let entries = order
        .iter()
        .enumerate()
        .map(|(pos, &j)| RankEntry {
            name: ds.names[j].clone(),
            ce: scores[j].0,
            rank: pos + 1,
            constant: scores[j].1,
        })
        .collect();
    Ok(VariableRanking {
        entries,
        with_status,
        estimator: cfg.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionPolicy {
    /// The `m` covariates with the smallest CE.
    TopM(usize),
    /// Every covariate with CE strictly below the threshold.
    Threshold(f64),
}

pub fn select_variables(r: &VariableRanking, policy: SelectionPolicy) -> Result<Vec<String>> {
    let picked: Vec<String> = match policy {
        SelectionPolicy::TopM(m) => {
            if m > r.entries.len() {
                return Err(Error::invalid(format!(
                    "cannot select top {m} of {} covariates",
                    r.entries.len()
                )));
            }
            r.entries.iter().take(m).map(|e| e.name.clone()).collect()
        }
        SelectionPolicy::Threshold(t) => {
            if !t.is_finite() {
                return Err(Error::invalid("selection threshold must be finite"));
            }
            r.entries
                .iter()
                .filter(|e| e.ce < t)
                .map(|e| e.name.clone())
                .collect()
        }
    };
    Ok(picked)
}
