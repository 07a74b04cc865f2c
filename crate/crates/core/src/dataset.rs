//! Survival datasets and the delimiter-separated file format.
//!
//! Files carry a header row, UTF-8 text and `.` decimals. Empty fields and
//! `NA` are missing values. Text-valued covariates are encoded as integer
//! codes in order of first appearance among the retained rows.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::SampleMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalDataset {
    pub covariates: SampleMatrix,
    pub time: Vec<f64>,
    /// 1 = event observed, 0 = censored.
    pub status: Vec<u8>,
    pub names: Vec<String>,
    /// Level labels of text-encoded covariates; code `i` is `levels[i]`.
    pub categories: BTreeMap<String, Vec<String>>,
}

impl SurvivalDataset {
    pub fn new(
        covariates: SampleMatrix,
        time: Vec<f64>,
        status: Vec<u8>,
        names: Vec<String>,
    ) -> Result<Self> {
        let n = covariates.n_rows();
        if time.len() != n || status.len() != n {
            return Err(Error::invalid(format!(
                "{n} covariate rows but {} times and {} status flags",
                time.len(),
                status.len()
            )));
        }
        if names.len() != covariates.n_cols() {
            return Err(Error::invalid(format!(
                "{} names for {} covariates",
                names.len(),
                covariates.n_cols()
            )));
        }
        if let Some(i) = time.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::invalid(format!("time at row {i} is not positive")));
        }
        if let Some(i) = status.iter().position(|&s| s > 1) {
            return Err(Error::invalid(format!("status at row {i} is not 0 or 1")));
        }
        Ok(Self {
            covariates,
            time,
            status,
            names,
            categories: BTreeMap::new(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.time.len()
    }

    pub fn n_events(&self) -> usize {
        self.status.iter().filter(|&&s| s == 1).count()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::invalid(format!("unknown covariate '{name}'")))
    }

    pub fn status_f64(&self) -> Vec<f64> {
        self.status.iter().map(|&s| f64::from(s)).collect()
    }

    /// Keeps only the named covariates, in the given order.
    pub fn select_covariates(&self, names: &[String]) -> Result<Self> {
        if let Some(dup) = names
            .iter()
            .enumerate()
            .find(|(i, n)| names[..*i].contains(n))
        {
            return Err(Error::invalid(format!(
                "covariate '{}' listed twice",
                dup.1
            )));
        }
        let cols = names
            .iter()
            .map(|n| self.column_index(n))
            .collect::<Result<Vec<_>>>()?;
        let mut out = Self::new(
            self.covariates.select_columns(&cols)?,
            self.time.clone(),
            self.status.clone(),
            names.to_vec(),
        )?;
        out.categories = self
            .categories
            .iter()
            .filter(|(k, _)| names.contains(k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        Ok(out)
    }

    /// Writes the dataset with covariates first, then `time` and `status`.
    /// Encoded covariates are written back as their text labels.
    pub fn write_csv<W: Write>(&self, writer: W, delimiter: u8) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .delimiter(delimiter)
            .from_writer(writer);
        let mut header: Vec<&str> = self.names.iter().map(String::as_str).collect();
        header.extend(["time", "status"]);
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut record: Vec<String> = self
                .covariates
                .row(i)
                .iter()
                .zip(&self.names)
                .map(|(&v, name)| match self.categories.get(name) {
                    Some(levels) => levels[v as usize].clone(),
                    None => v.to_string(),
                })
                .collect();
            record.push(self.time[i].to_string());
            record.push(self.status[i].to_string());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file), delimiter_for(path))
    }
}

/// Value of the status column that marks an observed event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EventValue {
    Number(f64),
    Text(String),
}

impl Default for EventValue {
    fn default() -> Self {
        EventValue::Number(1.0)
    }
}

impl EventValue {
    /// Parses a command-line value: numeric when it parses as a number.
    pub fn parse(s: &str) -> Self {
        s.trim()
            .parse::<f64>()
            .map(EventValue::Number)
            .unwrap_or_else(|_| EventValue::Text(s.trim().to_string()))
    }

    fn matches(&self, field: &str) -> bool {
        match self {
            EventValue::Number(v) => field.parse::<f64>().is_ok_and(|x| x == *v),
            EventValue::Text(t) => field == t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NaPolicy {
    /// Drop rows with a missing value in any used column.
    #[default]
    DropRows,
    /// Drop rows with a missing value in any column of the file.
    DropRowsAnyColumn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub time_col: String,
    pub status_col: String,
    /// `None` selects every remaining column whose values are all numeric.
    #[serde(default)]
    pub covariate_cols: Option<Vec<String>>,
    #[serde(default)]
    pub na_policy: NaPolicy,
    #[serde(default)]
    pub status_event_value: EventValue,
    /// Field delimiter; inferred from the file extension when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delimiter: Option<char>,
}

impl DatasetSpec {
    pub fn new(path: impl Into<PathBuf>, time_col: &str, status_col: &str) -> Self {
        Self {
            path: path.into(),
            time_col: time_col.to_string(),
            status_col: status_col.to_string(),
            covariate_cols: None,
            na_policy: NaPolicy::DropRows,
            status_event_value: EventValue::default(),
            delimiter: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.time_col == self.status_col {
            return Err(Error::invalid("time and status columns must differ"));
        }
        if let Some(cols) = &self.covariate_cols {
            if cols
                .iter()
                .any(|c| *c == self.time_col || *c == self.status_col)
            {
                return Err(Error::invalid(
                    "time and status columns cannot also be covariates",
                ));
            }
        }
        Ok(())
    }

    fn delimiter_byte(&self) -> Result<u8> {
        match self.delimiter {
            Some(c) if c.is_ascii() => Ok(c as u8),
            Some(c) => Err(Error::invalid(format!("delimiter '{c}' is not ASCII"))),
            None => Ok(delimiter_for(&self.path)),
        }
    }
}

/// Tab for `.tsv`/`.tab` files, comma otherwise.
pub fn delimiter_for(path: &Path) -> u8 {
    match path.extension().and_then(|e| e.to_str()) {
        Some("tsv" | "tab") => b'\t',
        _ => b',',
    }
}

fn is_missing(field: &str) -> bool {
    field.is_empty() || field == "NA"
}

/// A loaded dataset plus the SHA-256 of the bytes it was parsed from.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: SurvivalDataset,
    pub sha256: String,
    pub rows_read: usize,
    pub rows_dropped: usize,
}

pub fn load_dataset(spec: &DatasetSpec) -> Result<LoadedDataset> {
    let bytes = std::fs::read(&spec.path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", spec.path.display())))?;
    parse_dataset(&bytes, spec)
}

pub fn parse_dataset(bytes: &[u8], spec: &DatasetSpec) -> Result<LoadedDataset> {
    spec.validate()?;
    let sha256 = hex::encode(Sha256::digest(bytes));
    let table = read_table(bytes, spec.delimiter_byte()?)?;
    let col = |name: &str| {
        table
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Load {
                row: 0,
                column: name.to_string(),
                message: "column not found in header".into(),
            })
    };
    let time_idx = col(&spec.time_col)?;
    let status_idx = col(&spec.status_col)?;
    let covariate_names: Vec<String> = match &spec.covariate_cols {
        Some(cols) => cols.clone(),
        None => table
            .header
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != time_idx && i != status_idx)
            .filter(|&(i, _)| {
                table
                    .rows
                    .iter()
                    .all(|r| is_missing(&r[i]) || r[i].parse::<f64>().is_ok())
            })
            .map(|(_, h)| h.clone())
            .collect(),
    };
    let cov_idx: Vec<usize> = covariate_names
        .iter()
        .map(|c| col(c))
        .collect::<Result<_>>()?;

    let mut used: Vec<usize> = vec![time_idx, status_idx];
    used.extend(&cov_idx);
    let rows_read = table.rows.len();
    let kept: Vec<(usize, &Vec<String>)> = table
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| match spec.na_policy {
            NaPolicy::DropRows => used.iter().all(|&i| !is_missing(&r[i])),
            NaPolicy::DropRowsAnyColumn => r.iter().all(|f| !is_missing(f)),
        })
        .collect();

    let mut time = Vec::with_capacity(kept.len());
    let mut status = Vec::with_capacity(kept.len());
    for &(row, r) in &kept {
        let t: f64 = r[time_idx].parse().map_err(|_| Error::Load {
            row: row + 1,
            column: spec.time_col.clone(),
            message: format!("cannot parse '{}' as a number", r[time_idx]),
        })?;
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::Load {
                row: row + 1,
                column: spec.time_col.clone(),
                message: format!("time must be positive, got {t}"),
            });
        }
        time.push(t);
        status.push(u8::from(spec.status_event_value.matches(&r[status_idx])));
    }

    let mut categories = BTreeMap::new();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(cov_idx.len());
    for (name, &ci) in covariate_names.iter().zip(&cov_idx) {
        let numeric: Option<Vec<f64>> = kept.iter().map(|(_, r)| r[ci].parse().ok()).collect();
        let values = match numeric {
            Some(v) => {
                if let Some(pos) = v.iter().position(|x: &f64| !x.is_finite()) {
                    return Err(Error::Load {
                        row: kept[pos].0 + 1,
                        column: name.clone(),
                        message: "non-finite value".into(),
                    });
                }
                v
            }
            None => {
                let mut levels: Vec<String> = Vec::new();
                let codes = kept
                    .iter()
                    .map(|(_, r)| {
                        let field = &r[ci];
                        let code = levels.iter().position(|l| l == field).unwrap_or_else(|| {
                            levels.push(field.clone());
                            levels.len() - 1
                        });
                        code as f64
                    })
                    .collect();
                categories.insert(name.clone(), levels);
                codes
            }
        };
        columns.push(values);
    }
    let n = kept.len();
    let d = covariate_names.len();
    let mut values = Vec::with_capacity(n * d);
    for i in 0..n {
        values.extend(columns.iter().map(|c| c[i]));
    }
    if d == 0 {
        return Err(Error::invalid("dataset has no covariate columns"));
    }
    let covariates = SampleMatrix::from_row_major(n, d, values)?;
    let mut dataset = SurvivalDataset::new(covariates, time, status, covariate_names)?;
    dataset.categories = categories;
    Ok(LoadedDataset {
        dataset,
        sha256,
        rows_read,
        rows_dropped: rows_read - n,
    })
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table<R: Read>(reader: R, delimiter: u8) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Load {
            row: 0,
            column: String::new(),
            message: "missing header row".into(),
        });
    }
    let rows = rdr
        .records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
    Ok(Table { header, rows })
}
