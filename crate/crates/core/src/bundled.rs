//! Two public lung-cancer benchmark datasets shipped with the crate.
//!
//! `cancer`: 228 advanced lung cancer patients from the North Central Cancer
//! Treatment Group, status coded 1 = censored, 2 = dead. `veteran`: 137
//! patients of the Veterans Administration lung cancer trial, status coded
//! 1 = dead, `celltype` stored as text.

use serde::{Deserialize, Serialize};

use crate::dataset::{parse_dataset, DatasetSpec, EventValue, LoadedDataset, NaPolicy};
use crate::error::{Error, Result};

pub const CANCER_CSV: &str = include_str!("../data/cancer.csv");
pub const VETERAN_CSV: &str = include_str!("../data/veteran.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bundled {
    Cancer,
    Veteran,
}

impl Bundled {
    pub const ALL: [Bundled; 2] = [Bundled::Cancer, Bundled::Veteran];

    pub fn name(self) -> &'static str {
        match self {
            Bundled::Cancer => "cancer",
            Bundled::Veteran => "veteran",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "cancer" | "lung" => Ok(Bundled::Cancer),
            "veteran" => Ok(Bundled::Veteran),
            other => Err(Error::invalid(format!("unknown bundled dataset '{other}'"))),
        }
    }

    pub fn csv(self) -> &'static str {
        match self {
            Bundled::Cancer => CANCER_CSV,
            Bundled::Veteran => VETERAN_CSV,
        }
    }

    pub fn spec(self) -> DatasetSpec {
        let names = |cols: &[&str]| Some(cols.iter().map(|c| c.to_string()).collect());
        match self {
            Bundled::Cancer => DatasetSpec {
                covariate_cols: names(&[
                    "age",
                    "sex",
                    "ph.ecog",
                    "ph.karno",
                    "pat.karno",
                    "meal.cal",
                    "wt.loss",
                ]),
                // incomplete rows are dropped across all ten columns, `inst` included
                na_policy: NaPolicy::DropRowsAnyColumn,
                status_event_value: EventValue::Number(2.0),
                ..DatasetSpec::new("cancer.csv", "time", "status")
            },
            Bundled::Veteran => DatasetSpec {
                covariate_cols: names(&["trt", "celltype", "karno", "diagtime", "age", "prior"]),
                ..DatasetSpec::new("veteran.csv", "time", "status")
            },
        }
    }

    pub fn load(self) -> Result<LoadedDataset> {
        parse_dataset(self.csv().as_bytes(), &self.spec())
    }
}
