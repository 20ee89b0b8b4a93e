//! Random, scaffold, and predetermined-index splits.

use super::{DataError, Dataset, TaskType};
use crate::rng::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    Random,
    Scaffold,
    Index,
}

impl std::str::FromStr for SplitKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(SplitKind::Random),
            "scaffold" => Ok(SplitKind::Scaffold),
            "index" => Ok(SplitKind::Index),
            other => Err(format!("unknown split kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub kind: SplitKind,
    /// (train, val, test), each in (0,1), summing to 1.
    pub fractions: (f64, f64, f64),
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(kind: SplitKind, fractions: (f64, f64, f64), seed: u64) -> Result<Self, DataError> {
        let (a, b, c) = fractions;
        let sum = a + b + c;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(DataError::BadFractions(format!("sum {sum} != 1")));
        }
        for f in [a, b, c] {
            if !(0.0..1.0).contains(&f) || f == 0.0 {
                return Err(DataError::BadFractions(format!("fraction {f} not in (0,1)")));
            }
        }
        Ok(SplitSpec {
            kind,
            fractions,
            seed,
        })
    }
}

/// Disjoint, exhaustive index partition of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.val.len(), self.test.len())
    }

    fn check_nonempty(self) -> Result<Self, DataError> {
        if self.train.is_empty() || self.val.is_empty() || self.test.is_empty() {
            let (a, b, c) = self.sizes();
            return Err(DataError::TooSmall(a, b, c));
        }
        Ok(self)
    }
}

fn target_sizes(n: usize, fractions: (f64, f64, f64)) -> (usize, usize, usize) {
    let n_train = (fractions.0 * n as f64).round() as usize;
    let n_val = (fractions.1 * n as f64).round() as usize;
    let n_train = n_train.min(n);
    let n_val = n_val.min(n - n_train);
    (n_train, n_val, n - n_train - n_val)
}

/// Uniform shuffle split with sizes rounded from the fractions.
pub fn random_split(dataset: &Dataset, spec: &SplitSpec) -> Result<Split, DataError> {
    let n = dataset.len();
    let (n_train, n_val, _) = target_sizes(n, spec.fractions);
    let mut indices: Vec<usize> = (0..n).collect();
    Rng::stream(spec.seed, &[0x5117]).shuffle(&mut indices);
    let split = Split {
        train: indices[..n_train].to_vec(),
        val: indices[n_train..n_train + n_val].to_vec(),
        test: indices[n_train + n_val..].to_vec(),
    };
    split.check_nonempty()
}

/// Scaffold split: molecules sharing a Murcko scaffold stay in one set.
///
/// Bins larger than half the desired test-set size go to train outright,
/// keeping validation and test scaffold-diverse (acyclic molecules all share
/// the empty scaffold, so they form one such bin on typical data). The
/// remaining bins are shuffled and each goes to the set with the largest
/// remaining deficit, ties favoring train, then val. Forced-train bins may
/// overflow the train target; val and test then shrink proportionally, and
/// actual sizes are reported by the caller.
pub fn scaffold_split(dataset: &Dataset, spec: &SplitSpec) -> Result<Split, DataError> {
    let n = dataset.len();
    let (n_train, n_val, n_test) = target_sizes(n, spec.fractions);

    // Deterministic bin order independent of record order.
    let mut bins: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, rec) in dataset.records.iter().enumerate() {
        bins.entry(rec.scaffold.as_str()).or_default().push(i);
    }
    let mut bins: Vec<Vec<usize>> = bins.into_values().collect();

    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut test = Vec::new();

    // Oversized bins are forced into train.
    let threshold = n_test as f64 / 2.0;
    let mut rest = Vec::new();
    for bin in bins.drain(..) {
        if bin.len() as f64 > threshold {
            train.extend(bin);
        } else {
            rest.push(bin);
        }
    }

    Rng::stream(spec.seed, &[0x5c_aff]).shuffle(&mut rest);
    for bin in rest {
        let deficits = [
            n_train as isize - train.len() as isize,
            n_val as isize - val.len() as isize,
            n_test as isize - test.len() as isize,
        ];
        let pick = (0..3).max_by_key(|&i| (deficits[i], std::cmp::Reverse(i))).unwrap();
        match pick {
            0 => train.extend(bin),
            1 => val.extend(bin),
            _ => test.extend(bin),
        }
    }

    Split { train, val, test }.check_nonempty()
}

/// Predetermined index split; validates bounds, disjointness, and coverage.
pub fn index_split(dataset: &Dataset, split: Split) -> Result<Split, DataError> {
    let n = dataset.len();
    let mut seen = HashSet::with_capacity(n);
    for part in [&split.train, &split.val, &split.test] {
        for &i in part {
            if i >= n {
                return Err(DataError::BadIndexSplit(format!("index {i} out of range")));
            }
            if !seen.insert(i) {
                return Err(DataError::BadIndexSplit(format!("index {i} appears twice")));
            }
        }
    }
    if seen.len() != n {
        return Err(DataError::BadIndexSplit(format!(
            "{} of {} records assigned",
            seen.len(),
            n
        )));
    }
    split.check_nonempty()
}

/// Percent of test molecules whose scaffold also occurs in train.
pub fn scaffold_overlap(
    dataset: &Dataset,
    train: &[usize],
    test: &[usize],
) -> Result<f64, DataError> {
    if train.is_empty() {
        return Err(DataError::EmptySet("train"));
    }
    if test.is_empty() {
        return Err(DataError::EmptySet("test"));
    }
    let train_scaffolds: HashSet<&str> = train
        .iter()
        .map(|&i| dataset.records[i].scaffold.as_str())
        .collect();
    let shared = test
        .iter()
        .filter(|&&i| train_scaffolds.contains(dataset.records[i].scaffold.as_str()))
        .count();
    Ok(100.0 * shared as f64 / test.len() as f64)
}

/// Percent of positive labels pooled over tasks, weighting each task by its
/// number of known labels.
pub fn class_balance(dataset: &Dataset) -> Result<f64, DataError> {
    if dataset.task_type != TaskType::Classification {
        return Err(DataError::NotClassification);
    }
    let mut positives = 0usize;
    let mut known = 0usize;
    for rec in &dataset.records {
        for t in rec.targets.iter().flatten() {
            known += 1;
            if *t == 1.0 {
                positives += 1;
            }
        }
    }
    if known == 0 {
        return Err(DataError::EmptySet("labels"));
    }
    Ok(100.0 * positives as f64 / known as f64)
}
