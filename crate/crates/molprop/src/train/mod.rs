//! Training: masked losses, the epoch loop with best-epoch selection,
//! metrics, checkpoints, ensembling, and hyperparameter search.

pub mod checkpoint;
pub mod ensemble;
pub mod hyperopt;
pub mod metrics;
pub mod optim;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use ensemble::{ensemble_predict, ensemble_train};
pub use hyperopt::{hyperopt, HyperChoice, HyperSpace, SearchStrategy, Trial};
pub use metrics::{evaluate, Metric, MetricReport};
pub use optim::{Adam, LrSchedule};

use crate::data::{fit_scaler, DataError, Dataset, Split, TargetScaler, TaskType};
use crate::featurize::{compute_descriptors, fit_cdf, normalize, FeatureCdfTable, FeaturizeError};
use crate::model::{build_batch, dmpnn, BatchError, DmpnnParams, MolFeatures};
use crate::rng::Rng;
use crate::tensor::{sigmoid, Tape, TensorError, Var};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("every target in the batch is missing")]
    AllMissing,
    #[error("nothing to evaluate")]
    EmptyEvaluation,
    #[error("no task had both classes present")]
    SingleClass,
    #[error("feature plan `provided` needs feature vectors on every record")]
    MissingFeatures,
    #[error("feature width {got} does not match the checkpoint's {expected}")]
    FeatureDimMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Batch(#[from] BatchError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Featurize(#[from] FeaturizeError),
}

/// Where molecule-level features come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeaturePlan {
    /// Message passing representation only.
    None,
    /// Native descriptors, CDF-normalized against the training split.
    Native,
    /// Feature vectors supplied with the dataset, used as-is.
    Provided,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub init_lr: f64,
    pub max_lr: f64,
    pub final_lr: f64,
    pub warmup_epochs: f64,
    pub seed: u64,
    pub model: crate::model::ModelConfig,
    pub features: FeaturePlan,
    pub metric: Metric,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 50,
            init_lr: 1e-4,
            max_lr: 1e-3,
            final_lr: 1e-4,
            warmup_epochs: 2.0,
            seed: 0,
            model: crate::model::ModelConfig::default(),
            features: FeaturePlan::None,
            metric: Metric::Rmse,
        }
    }
}

/// Masked loss on the tape: mean squared error for regression, binary
/// cross-entropy on logits for classification, averaged over non-missing
/// entries only.
pub fn masked_loss(
    tape: &mut Tape,
    preds: Var,
    targets: &[f64],
    mask: &[f64],
    task_type: TaskType,
) -> Result<Var, TrainError> {
    let count: f64 = mask.iter().sum();
    if count == 0.0 {
        return Err(TrainError::AllMissing);
    }
    let t = tape.leaf(preds.rows, preds.cols, targets.to_vec());
    let m = tape.leaf(preds.rows, preds.cols, mask.to_vec());
    let per_entry = match task_type {
        TaskType::Regression => {
            let diff = tape.sub(preds, t)?;
            tape.mul(diff, diff)?
        }
        TaskType::Classification => {
            // softplus(z) - z*y = -[y ln σ(z) + (1-y) ln(1-σ(z))]
            let sp = tape.softplus(preds)?;
            let zy = tape.mul(preds, t)?;
            tape.sub(sp, zy)?
        }
    };
    let masked = tape.mul(per_entry, m)?;
    let total = tape.sum_all(masked)?;
    Ok(tape.scale(total, 1.0 / count)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_score: f64,
}

/// A trained model plus its training trace.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub checkpoint: Checkpoint,
    pub history: Vec<EpochStats>,
    /// Index into `history` of the epoch whose weights were kept.
    pub best_epoch: usize,
    pub best_val: f64,
}

/// Molecule featurization plus resolved molecule-level features for one
/// dataset, shared across epochs (and across ensemble members).
pub struct PreparedData {
    pub mols: Vec<MolFeatures>,
    pub features: Option<Vec<Vec<f64>>>,
}

/// Featurize every record once and resolve the feature plan. The CDF table
/// is fitted on `train` rows only (unless one is supplied, e.g. when
/// predicting from a checkpoint).
pub fn prepare_data(
    dataset: &Dataset,
    train: &[usize],
    plan: FeaturePlan,
    cdf: Option<&FeatureCdfTable>,
) -> Result<(PreparedData, Option<FeatureCdfTable>), TrainError> {
    let mols: Vec<MolFeatures> = dataset
        .records
        .iter()
        .map(|r| MolFeatures::from_graph(&r.graph))
        .collect();
    match plan {
        FeaturePlan::None => Ok((PreparedData { mols, features: None }, None)),
        FeaturePlan::Native => {
            let raw: Vec<Vec<f64>> = dataset
                .records
                .iter()
                .map(|r| compute_descriptors(&r.graph))
                .collect();
            let table = match cdf {
                Some(t) => t.clone(),
                None => {
                    let train_rows: Vec<Vec<f64>> =
                        train.iter().map(|&i| raw[i].clone()).collect();
                    fit_cdf(&train_rows)?
                }
            };
            let normalized: Result<Vec<Vec<f64>>, _> =
                raw.iter().map(|row| normalize(row, &table)).collect();
            Ok((
                PreparedData {
                    mols,
                    features: Some(normalized?),
                },
                Some(table),
            ))
        }
        FeaturePlan::Provided => {
            let features: Option<Vec<Vec<f64>>> = dataset
                .records
                .iter()
                .map(|r| r.features.clone())
                .collect();
            let features = features.ok_or(TrainError::MissingFeatures)?;
            Ok((PreparedData { mols, features: Some(features) }, None))
        }
    }
}

fn batch_targets(
    dataset: &Dataset,
    indices: &[usize],
    scaler: &TargetScaler,
) -> (Vec<f64>, Vec<f64>) {
    let n_tasks = dataset.n_tasks();
    let mut targets = Vec::with_capacity(indices.len() * n_tasks);
    let mut mask = Vec::with_capacity(indices.len() * n_tasks);
    for &i in indices {
        for t in 0..n_tasks {
            match dataset.records[i].targets[t] {
                Some(y) => {
                    targets.push(scaler.transform(t, y));
                    mask.push(1.0);
                }
                None => {
                    targets.push(0.0);
                    mask.push(0.0);
                }
            }
        }
    }
    (targets, mask)
}

/// Raw model outputs over `indices`, batched; eval mode (no dropout).
pub fn forward_raw(
    params: &DmpnnParams,
    prepared: &PreparedData,
    indices: &[usize],
    batch_size: usize,
) -> Result<Vec<Vec<f64>>, TrainError> {
    let n_tasks = params.config.n_tasks;
    let mut out = Vec::with_capacity(indices.len());
    let mut rng = Rng::new(0);
    for chunk in indices.chunks(batch_size.max(1)) {
        let mols: Vec<&MolFeatures> = chunk.iter().map(|&i| &prepared.mols[i]).collect();
        let feats: Vec<&[f64]> = match &prepared.features {
            Some(f) => chunk.iter().map(|&i| f[i].as_slice()).collect(),
            None => Vec::new(),
        };
        let bg = build_batch(&mols, &feats)?;
        let mut tape = Tape::new();
        let fo = dmpnn::forward(params, &mut tape, &bg, false, &mut rng)?;
        let values = tape.value(fo.predictions);
        for r in 0..chunk.len() {
            out.push(values[r * n_tasks..(r + 1) * n_tasks].to_vec());
        }
    }
    Ok(out)
}

/// Model predictions in task units: unscaled values for regression, sigmoid
/// probabilities for classification.
pub fn predictions_in_task_units(
    raw: Vec<Vec<f64>>,
    scaler: &TargetScaler,
    task_type: TaskType,
) -> Vec<Vec<f64>> {
    raw.into_iter()
        .map(|row| {
            row.into_iter()
                .enumerate()
                .map(|(t, z)| match task_type {
                    TaskType::Regression => scaler.inverse(t, z),
                    TaskType::Classification => sigmoid(z),
                })
                .collect()
        })
        .collect()
}

fn targets_of(dataset: &Dataset, indices: &[usize]) -> Vec<Vec<Option<f64>>> {
    indices
        .iter()
        .map(|&i| dataset.records[i].targets.clone())
        .collect()
}

/// Train one model: Adam with warmup/decay, one validation pass per epoch,
/// keeping the weights of the best validation epoch. Deterministic given
/// the seed.
pub fn train_model(
    dataset: &Dataset,
    split: &Split,
    config: &TrainConfig,
) -> Result<TrainedModel, TrainError> {
    let mut config = config.clone();
    config.model.n_tasks = dataset.n_tasks();

    let (prepared, cdf) = prepare_data(dataset, &split.train, config.features, None)?;
    config.model.feature_dim = prepared
        .features
        .as_ref()
        .map(|f| f.first().map(|r| r.len()).unwrap_or(0))
        .unwrap_or(0);

    let scaler = match dataset.task_type {
        TaskType::Regression => fit_scaler(dataset, &split.train)?,
        TaskType::Classification => TargetScaler::identity(dataset.n_tasks()),
    };

    let mut params = DmpnnParams::init(config.model.clone(), config.seed);
    let sizes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
    let mut adam = Adam::new(&sizes);
    let steps_per_epoch = split.train.len().div_ceil(config.batch_size);
    let schedule = LrSchedule::new(
        config.init_lr,
        config.max_lr,
        config.final_lr,
        config.warmup_epochs,
        config.epochs,
        steps_per_epoch,
    );

    let mut history = Vec::with_capacity(config.epochs);
    let mut best_epoch = 0usize;
    let mut best_val = f64::NAN;
    let mut best_params = params.clone();
    let lower_better = config.metric.lower_is_better();
    let mut step = 0usize;

    for epoch in 0..config.epochs {
        let mut order = split.train.to_vec();
        Rng::stream(config.seed, &[0xe0c, epoch as u64]).shuffle(&mut order);

        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for (batch_idx, chunk) in order.chunks(config.batch_size).enumerate() {
            let mols: Vec<&MolFeatures> = chunk.iter().map(|&i| &prepared.mols[i]).collect();
            let feats: Vec<&[f64]> = match &prepared.features {
                Some(f) => chunk.iter().map(|&i| f[i].as_slice()).collect(),
                None => Vec::new(),
            };
            let bg = build_batch(&mols, &feats)?;
            let (targets, mask) = batch_targets(dataset, chunk, &scaler);

            let mut tape = Tape::new();
            let mut rng = Rng::stream(config.seed, &[0xd0, epoch as u64, batch_idx as u64]);
            let fo = dmpnn::forward(&params, &mut tape, &bg, true, &mut rng)?;
            let loss = masked_loss(&mut tape, fo.predictions, &targets, &mask, dataset.task_type)?;
            let loss_value = tape.value(loss)[0];
            if !loss_value.is_finite() {
                return Err(TrainError::Diverged {
                    epoch: epoch + 1,
                    loss: loss_value,
                });
            }
            loss_sum += loss_value;
            batches += 1;
            tape.backward(loss)?;

            let grads: Vec<&[f64]> = fo.param_vars.iter().map(|&v| tape.grad(v)).collect();
            let mut tensors = params.tensors_mut();
            adam.step(schedule.lr(step), &mut tensors, &grads);
            step += 1;
        }

        let raw = forward_raw(&params, &prepared, &split.val, config.batch_size)?;
        let preds = predictions_in_task_units(raw, &scaler, dataset.task_type);
        let val_targets = targets_of(dataset, &split.val);
        let val_score = evaluate(config.metric, &preds, &val_targets)?.mean;

        history.push(EpochStats {
            epoch: epoch + 1,
            train_loss: loss_sum / batches.max(1) as f64,
            val_score,
        });

        let improved = best_val.is_nan()
            || (lower_better && val_score < best_val)
            || (!lower_better && val_score > best_val);
        if improved {
            best_val = val_score;
            best_epoch = epoch;
            best_params = params.clone();
        }
    }

    let cdf_digest = cdf.as_ref().map(checkpoint::cdf_digest);
    Ok(TrainedModel {
        checkpoint: Checkpoint {
            format_version: CHECKPOINT_VERSION,
            task_type: dataset.task_type,
            task_names: dataset.task_names.clone(),
            train_config: config,
            params: best_params,
            scaler,
            cdf,
            cdf_digest,
        },
        history,
        best_epoch,
        best_val,
    })
}

impl Checkpoint {
    /// Predictions in task units for the given records.
    pub fn predict(
        &self,
        dataset: &Dataset,
        indices: &[usize],
    ) -> Result<Vec<Vec<f64>>, TrainError> {
        let plan = self.train_config.features;
        let (prepared, _) = prepare_data(dataset, &[], plan, self.cdf.as_ref())?;
        if let Some(f) = &prepared.features {
            let got = f.first().map(|r| r.len()).unwrap_or(0);
            if got != self.params.config.feature_dim {
                return Err(TrainError::FeatureDimMismatch {
                    expected: self.params.config.feature_dim,
                    got,
                });
            }
        } else if self.params.config.feature_dim != 0 {
            return Err(TrainError::FeatureDimMismatch {
                expected: self.params.config.feature_dim,
                got: 0,
            });
        }
        let raw = forward_raw(
            &self.params,
            &prepared,
            indices,
            self.train_config.batch_size,
        )?;
        Ok(predictions_in_task_units(
            raw,
            &self.scaler,
            self.task_type,
        ))
    }

    /// Score the checkpoint on the given rows.
    pub fn evaluate(
        &self,
        dataset: &Dataset,
        indices: &[usize],
        metric: Metric,
    ) -> Result<MetricReport, TrainError> {
        let preds = self.predict(dataset, indices)?;
        let targets = targets_of(dataset, indices);
        evaluate(metric, &preds, &targets)
    }
}
