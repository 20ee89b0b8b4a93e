//! Dataset ingestion, target scaling, and splitting.
//!
//! Input CSVs have a header whose first column is `smiles`; every remaining
//! column is one task. Empty cells are missing targets, which stay masked
//! out of losses and metrics downstream. Rows whose SMILES fail to parse are
//! rejected individually and reported, not fatal.

mod split;

pub use split::{
    class_balance, index_split, random_split, scaffold_overlap, scaffold_split, Split, SplitKind,
    SplitSpec,
};

use crate::chem::{murcko_scaffold, parse_smiles, MolGraph, ScaffoldKey};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing header or first column is not `smiles`")]
    MissingHeader,
    #[error("no task columns after `smiles`")]
    NoTasks,
    #[error("every row was rejected; see the row report")]
    AllRowsInvalid,
    #[error("split leaves an empty part (sizes {0}/{1}/{2})")]
    TooSmall(usize, usize, usize),
    #[error("invalid split fractions: {0}")]
    BadFractions(String),
    #[error("invalid index split: {0}")]
    BadIndexSplit(String),
    #[error("empty set: {0}")]
    EmptySet(&'static str),
    #[error("dataset is not a classification dataset")]
    NotClassification,
    #[error("task `{0}` has a constant target on the training split")]
    ConstantTarget(String),
    #[error("task `{0}` needs at least 2 non-missing training targets")]
    TooFewTargets(String),
    #[error("feature file has {got} rows for {expected} records")]
    FeatureRowMismatch { expected: usize, got: usize },
    #[error("feature file row {row} is not numeric: {value}")]
    BadFeatureValue { row: usize, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskType {
    Regression,
    Classification,
}

impl std::str::FromStr for TaskType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "regression" => Ok(TaskType::Regression),
            "classification" => Ok(TaskType::Classification),
            other => Err(format!("unknown task type `{other}`")),
        }
    }
}

/// One molecule with its targets. The parsed graph and scaffold key are
/// kept alongside so splitting and featurization never re-parse.
#[derive(Debug, Clone)]
pub struct Record {
    pub smiles: String,
    pub targets: Vec<Option<f64>>,
    pub features: Option<Vec<f64>>,
    pub graph: MolGraph,
    pub scaffold: ScaffoldKey,
}

/// A rejected input row and why.
#[derive(Debug, Clone, Serialize)]
pub struct RowIssue {
    pub row: usize,
    pub smiles: String,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub records: Vec<Record>,
    pub task_names: Vec<String>,
    pub task_type: TaskType,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_tasks(&self) -> usize {
        self.task_names.len()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            task_names: self.task_names.clone(),
            task_type: self.task_type,
        }
    }

    /// Attach molecule-level feature vectors, one per record in order.
    pub fn attach_features(&mut self, rows: Vec<Vec<f64>>) -> Result<(), DataError> {
        if rows.len() != self.records.len() {
            return Err(DataError::FeatureRowMismatch {
                expected: self.records.len(),
                got: rows.len(),
            });
        }
        let width = rows.first().map(|r| r.len()).unwrap_or(0);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(DataError::FeatureRowMismatch {
                    expected: width,
                    got: row.len(),
                });
            }
            let _ = i;
        }
        for (rec, row) in self.records.iter_mut().zip(rows) {
            rec.features = Some(row);
        }
        Ok(())
    }

    pub fn feature_dim(&self) -> usize {
        self.records
            .first()
            .and_then(|r| r.features.as_ref())
            .map(|f| f.len())
            .unwrap_or(0)
    }
}

/// Load a dataset CSV. Returns the dataset plus a report of rejected rows.
pub fn load_csv(
    path: impl AsRef<Path>,
    task_type: TaskType,
) -> Result<(Dataset, Vec<RowIssue>), DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(false)
        .from_path(path.as_ref())?;
    let headers = rdr.headers()?.clone();
    let mut iter = headers.iter();
    match iter.next() {
        Some(first) if first.trim().eq_ignore_ascii_case("smiles") => {}
        _ => return Err(DataError::MissingHeader),
    }
    let task_names: Vec<String> = iter.map(|h| h.trim().to_string()).collect();
    if task_names.is_empty() {
        return Err(DataError::NoTasks);
    }

    let mut records = Vec::new();
    let mut issues = Vec::new();
    for (row_idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let smiles = rec.get(0).unwrap_or("").trim().to_string();
        let mut reject = |err: String, smiles: &str| {
            issues.push(RowIssue {
                row: row_idx + 2, // 1-based, counting the header line
                smiles: smiles.to_string(),
                error: err,
            });
        };
        let graph = match parse_smiles(&smiles) {
            Ok(g) => g,
            Err(e) => {
                reject(e.to_string(), &smiles);
                continue;
            }
        };
        let mut targets = Vec::with_capacity(task_names.len());
        let mut bad = None;
        for t in 0..task_names.len() {
            let cell = rec.get(t + 1).unwrap_or("").trim();
            if cell.is_empty() {
                targets.push(None);
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) => {
                    if task_type == TaskType::Classification && v != 0.0 && v != 1.0 {
                        bad = Some(format!("label `{cell}` is not 0 or 1"));
                        break;
                    }
                    targets.push(Some(v));
                }
                Err(_) => {
                    bad = Some(format!("target `{cell}` is not numeric"));
                    break;
                }
            }
        }
        if let Some(err) = bad {
            reject(err, &smiles);
            continue;
        }
        let scaffold = murcko_scaffold(&graph);
        records.push(Record {
            smiles,
            targets,
            features: None,
            graph,
            scaffold,
        });
    }
    if records.is_empty() {
        return Err(DataError::AllRowsInvalid);
    }
    Ok((
        Dataset {
            records,
            task_names,
            task_type,
        },
        issues,
    ))
}

/// Write a dataset back to CSV (missing targets as empty cells).
pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let mut wtr = csv::Writer::from_path(path.as_ref())?;
    let mut header = vec!["smiles".to_string()];
    header.extend(dataset.task_names.clone());
    wtr.write_record(&header)?;
    for rec in &dataset.records {
        let mut row = vec![rec.smiles.clone()];
        for t in &rec.targets {
            row.push(match t {
                Some(v) => format_float(*v),
                None => String::new(),
            });
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Shortest representation that round-trips f64 exactly.
fn format_float(v: f64) -> String {
    let mut s = format!("{v}");
    if s.parse::<f64>() != Ok(v) {
        s = format!("{v:e}");
    }
    s
}

/// Load an external molecule-feature CSV: one row per record, all numeric,
/// header optional (detected by a non-numeric first row).
pub fn load_feature_csv(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path.as_ref())?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(|c| c.trim().parse::<f64>()).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => continue, // header line
            Err(_) => {
                let value = rec.iter().collect::<Vec<_>>().join(",");
                return Err(DataError::BadFeatureValue { row: i + 1, value });
            }
        }
    }
    Ok(rows)
}

/// Per-task z-score scaler fitted on training targets only (regression).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetScaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl TargetScaler {
    /// Identity scaler (used for classification).
    pub fn identity(n_tasks: usize) -> Self {
        TargetScaler {
            means: vec![0.0; n_tasks],
            stds: vec![1.0; n_tasks],
        }
    }

    pub fn transform(&self, task: usize, y: f64) -> f64 {
        (y - self.means[task]) / self.stds[task]
    }

    pub fn inverse(&self, task: usize, z: f64) -> f64 {
        z * self.stds[task] + self.means[task]
    }
}

/// Fit per-task mean and population standard deviation on the given training
/// rows. Never sees validation or test targets by construction.
pub fn fit_scaler(dataset: &Dataset, train: &[usize]) -> Result<TargetScaler, DataError> {
    let n_tasks = dataset.n_tasks();
    let mut means = Vec::with_capacity(n_tasks);
    let mut stds = Vec::with_capacity(n_tasks);
    for t in 0..n_tasks {
        let values: Vec<f64> = train
            .iter()
            .filter_map(|&i| dataset.records[i].targets[t])
            .collect();
        if values.len() < 2 {
            return Err(DataError::TooFewTargets(dataset.task_names[t].clone()));
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
        let std = var.sqrt();
        if std <= 0.0 {
            return Err(DataError::ConstantTarget(dataset.task_names[t].clone()));
        }
        means.push(mean);
        stds.push(std);
    }
    Ok(TargetScaler { means, stds })
}
