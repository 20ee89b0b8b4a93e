//! Evaluation metrics with missing-label masking.
//!
//! Regression: RMSE, MAE, and R² (the square of Pearson's correlation).
//! Classification: ROC-AUC as the probability a random positive outranks a
//! random negative with ties counted half, computed from tie-averaged ranks;
//! PRC-AUC as average precision over score thresholds (tied scores form one
//! threshold, so the value is independent of tie order). Multi-task scores
//! are averaged over tasks; AUC tasks missing a class are skipped and
//! reported.

use super::TrainError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Rmse,
    Mae,
    R2,
    RocAuc,
    PrcAuc,
}

impl Metric {
    pub fn lower_is_better(self) -> bool {
        matches!(self, Metric::Rmse | Metric::Mae)
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Rmse => "rmse",
            Metric::Mae => "mae",
            Metric::R2 => "r2",
            Metric::RocAuc => "roc-auc",
            Metric::PrcAuc => "prc-auc",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rmse" => Ok(Metric::Rmse),
            "mae" => Ok(Metric::Mae),
            "r2" => Ok(Metric::R2),
            "roc-auc" | "auc" => Ok(Metric::RocAuc),
            "prc-auc" | "ap" => Ok(Metric::PrcAuc),
            other => Err(format!("unknown metric `{other}`")),
        }
    }
}

/// Per-task scores plus their mean; tasks without both classes present are
/// skipped for AUC metrics and listed.
#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub metric: Metric,
    pub per_task: Vec<Option<f64>>,
    pub mean: f64,
    pub skipped_tasks: Vec<usize>,
}

/// Score predictions against targets. `preds` is `[n x tasks]`
/// (probabilities for classification metrics), `targets` is `[n x tasks]`
/// with missing entries masked out.
pub fn evaluate(
    metric: Metric,
    preds: &[Vec<f64>],
    targets: &[Vec<Option<f64>>],
) -> Result<MetricReport, TrainError> {
    if preds.is_empty() || preds.len() != targets.len() {
        return Err(TrainError::EmptyEvaluation);
    }
    let n_tasks = targets[0].len();
    let mut per_task = Vec::with_capacity(n_tasks);
    let mut skipped = Vec::new();
    for t in 0..n_tasks {
        let mut ys = Vec::new();
        let mut ps = Vec::new();
        for (p, y) in preds.iter().zip(targets) {
            if let Some(y) = y[t] {
                ys.push(y);
                ps.push(p[t]);
            }
        }
        if ys.is_empty() {
            per_task.push(None);
            skipped.push(t);
            continue;
        }
        let score = match metric {
            Metric::Rmse => Some(rmse(&ps, &ys)),
            Metric::Mae => Some(mae(&ps, &ys)),
            Metric::R2 => Some(r2(&ps, &ys)),
            Metric::RocAuc => roc_auc(&ps, &ys),
            Metric::PrcAuc => prc_auc(&ps, &ys),
        };
        if score.is_none() {
            skipped.push(t);
        }
        per_task.push(score);
    }
    let valid: Vec<f64> = per_task.iter().flatten().copied().collect();
    if valid.is_empty() {
        return Err(TrainError::SingleClass);
    }
    Ok(MetricReport {
        metric,
        per_task,
        mean: valid.iter().sum::<f64>() / valid.len() as f64,
        skipped_tasks: skipped,
    })
}

pub fn rmse(preds: &[f64], targets: &[f64]) -> f64 {
    let mse = preds
        .iter()
        .zip(targets)
        .map(|(p, y)| (p - y).powi(2))
        .sum::<f64>()
        / preds.len() as f64;
    mse.sqrt()
}

pub fn mae(preds: &[f64], targets: &[f64]) -> f64 {
    preds
        .iter()
        .zip(targets)
        .map(|(p, y)| (p - y).abs())
        .sum::<f64>()
        / preds.len() as f64
}

/// Square of Pearson's correlation; 0 when either side has no variance.
pub fn r2(preds: &[f64], targets: &[f64]) -> f64 {
    let n = preds.len() as f64;
    let mp = preds.iter().sum::<f64>() / n;
    let my = targets.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vp = 0.0;
    let mut vy = 0.0;
    for (p, y) in preds.iter().zip(targets) {
        cov += (p - mp) * (y - my);
        vp += (p - mp).powi(2);
        vy += (y - my).powi(2);
    }
    if vp == 0.0 || vy == 0.0 {
        return 0.0;
    }
    (cov * cov) / (vp * vy)
}

/// Rank-based ROC-AUC (Mann-Whitney with tie-averaged ranks). Returns None
/// when only one class is present.
pub fn roc_auc(scores: &[f64], labels: &[f64]) -> Option<f64> {
    let n = scores.len();
    let n_pos = labels.iter().filter(|&&y| y == 1.0).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    // Average ranks over tied score runs (1-based ranks).
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            if labels[k] == 1.0 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// Average precision over the score thresholds induced by the data:
/// AP = Σ_t (R_t − R_{t-1}) · P_t with one step per distinct score.
pub fn prc_auc(scores: &[f64], labels: &[f64]) -> Option<f64> {
    let n = scores.len();
    let n_pos = labels.iter().filter(|&&y| y == 1.0).count();
    if n_pos == 0 || n_pos == n {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut ap = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        let mut group_tp = 0usize;
        let mut group_fp = 0usize;
        while j < n && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] == 1.0 {
                group_tp += 1;
            } else {
                group_fp += 1;
            }
            j += 1;
        }
        tp += group_tp;
        fp += group_fp;
        if group_tp > 0 {
            let precision = tp as f64 / (tp + fp) as f64;
            let delta_recall = group_tp as f64 / n_pos as f64;
            ap += delta_recall * precision;
        }
        i = j;
    }
    Some(ap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn pinned_roc_example() {
        // Pairs: (0.35,0.1) correct, (0.35,0.4) wrong, (0.8,0.1) and
        // (0.8,0.4) correct → 3/4.
        let auc = roc_auc(&[0.1, 0.4, 0.35, 0.8], &[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(auc, 0.75);
    }

    #[test]
    fn perfect_ranking() {
        let scores = [0.1, 0.2, 0.8, 0.9];
        let labels = [0.0, 0.0, 1.0, 1.0];
        assert_eq!(roc_auc(&scores, &labels).unwrap(), 1.0);
        assert_eq!(prc_auc(&scores, &labels).unwrap(), 1.0);
    }

    #[test]
    fn exact_predictions_regression() {
        let y = [1.0, -2.0, 0.5];
        assert_eq!(rmse(&y, &y), 0.0);
        assert_eq!(mae(&y, &y), 0.0);
        assert!((r2(&y, &y) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pinned_regression_fixtures() {
        // Fixture 1: preds [1,2,3], targets [2,2,2]:
        // rmse = sqrt(2/3), mae = 2/3, r2 = 0 (target variance 0).
        let p = [1.0, 2.0, 3.0];
        let y = [2.0, 2.0, 2.0];
        assert!((rmse(&p, &y) - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((mae(&p, &y) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r2(&p, &y), 0.0);

        // Fixture 2: preds [0,1,2,3], targets [1,3,5,7]: perfectly linear →
        // r2 = 1, rmse = sqrt(mean([1,4,9,16])) = sqrt(7.5), mae = 2.5.
        let p = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        assert!((r2(&p, &y) - 1.0).abs() < 1e-12);
        assert!((rmse(&p, &y) - 7.5f64.sqrt()).abs() < 1e-12);
        assert!((mae(&p, &y) - 2.5).abs() < 1e-12);

        // Fixture 3: anti-correlated preds still give r2 = 1 (correlation
        // squared), keeping the definition honest.
        let p = [3.0, 2.0, 1.0];
        let y = [1.0, 2.0, 3.0];
        assert!((r2(&p, &y) - 1.0).abs() < 1e-12);
    }

    fn brute_roc(scores: &[f64], labels: &[f64]) -> Option<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &si) in scores.iter().enumerate() {
            if labels[i] != 1.0 {
                continue;
            }
            for (j, &sj) in scores.iter().enumerate() {
                if labels[j] != 0.0 {
                    continue;
                }
                den += 1.0;
                if si > sj {
                    num += 1.0;
                } else if si == sj {
                    num += 0.5;
                }
            }
        }
        if den == 0.0 {
            None
        } else {
            Some(num / den)
        }
    }

    fn brute_ap(scores: &[f64], labels: &[f64]) -> Option<f64> {
        let n_pos = labels.iter().filter(|&&y| y == 1.0).count();
        if n_pos == 0 || n_pos == labels.len() {
            return None;
        }
        let mut thresholds: Vec<f64> = scores.to_vec();
        thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
        thresholds.dedup();
        let mut ap = 0.0;
        let mut prev_recall = 0.0;
        for &t in &thresholds {
            let mut tp = 0usize;
            let mut fp = 0usize;
            for (i, &s) in scores.iter().enumerate() {
                if s >= t {
                    if labels[i] == 1.0 {
                        tp += 1;
                    } else {
                        fp += 1;
                    }
                }
            }
            let recall = tp as f64 / n_pos as f64;
            let precision = tp as f64 / (tp + fp) as f64;
            ap += (recall - prev_recall) * precision;
            prev_recall = recall;
        }
        Some(ap)
    }

    #[test]
    fn aucs_match_brute_force_on_random_instances() {
        let mut rng = Rng::new(99);
        for trial in 0..1000 {
            let n = 2 + rng.below(49);
            // Quantized scores so ties actually occur.
            let scores: Vec<f64> = (0..n).map(|_| (rng.below(8) as f64) / 8.0).collect();
            let labels: Vec<f64> = (0..n).map(|_| (rng.below(2)) as f64).collect();
            let fast = roc_auc(&scores, &labels);
            let brute = brute_roc(&scores, &labels);
            match (fast, brute) {
                (None, None) => {}
                (Some(a), Some(b)) => {
                    assert!((a - b).abs() < 1e-12, "trial {trial}: roc {a} vs {b}")
                }
                other => panic!("trial {trial}: disagreement {other:?}"),
            }
            let fast = prc_auc(&scores, &labels);
            let brute = brute_ap(&scores, &labels);
            match (fast, brute) {
                (None, None) => {}
                (Some(a), Some(b)) => {
                    assert!((a - b).abs() < 1e-12, "trial {trial}: ap {a} vs {b}")
                }
                other => panic!("trial {trial}: disagreement {other:?}"),
            }
        }
    }

    #[test]
    fn adding_correctly_ranked_positive_never_lowers_roc_auc() {
        let mut rng = Rng::new(123);
        for _ in 0..200 {
            let n = 3 + rng.below(20);
            let mut scores: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
            let mut labels: Vec<f64> = (0..n).map(|_| rng.below(2) as f64).collect();
            labels[0] = 1.0;
            labels[1] = 0.0;
            let before = roc_auc(&scores, &labels).unwrap();
            // New positive scored above everything: ranked correctly.
            scores.push(2.0);
            labels.push(1.0);
            let after = roc_auc(&scores, &labels).unwrap();
            assert!(after >= before - 1e-12);
        }
    }

    #[test]
    fn multitask_report_skips_single_class_tasks() {
        let preds = vec![vec![0.9, 0.2], vec![0.1, 0.3], vec![0.8, 0.4]];
        let targets = vec![
            vec![Some(1.0), Some(1.0)],
            vec![Some(0.0), Some(1.0)],
            vec![Some(1.0), None],
        ];
        let rep = evaluate(Metric::RocAuc, &preds, &targets).unwrap();
        assert_eq!(rep.skipped_tasks, vec![1]);
        assert!(rep.per_task[0].is_some());
        assert!(rep.per_task[1].is_none());

        // All tasks single-class → SingleClass error.
        let targets: Vec<Vec<Option<f64>>> = vec![
            vec![Some(1.0)],
            vec![Some(1.0)],
            vec![Some(1.0)],
        ];
        assert!(matches!(
            evaluate(Metric::RocAuc, &preds[..3].to_vec(), &targets),
            Err(TrainError::SingleClass)
        ));
    }

    #[test]
    fn masked_entries_do_not_move_metrics() {
        let mut preds = vec![vec![0.5], vec![0.7], vec![0.1]];
        let targets = vec![vec![Some(0.4)], vec![None], vec![Some(0.2)]];
        let before = evaluate(Metric::Rmse, &preds, &targets).unwrap().mean;
        preds[1][0] = 1e9;
        let after = evaluate(Metric::Rmse, &preds, &targets).unwrap().mean;
        assert_eq!(before, after);
    }
}
