//! Ensembles: independently seeded trainings of one architecture whose
//! predictions are averaged with equal weight (probabilities for
//! classification, task units for regression).

use super::{train_model, Checkpoint, TrainConfig, TrainError, TrainedModel};
use crate::data::{Dataset, Split};
use rayon::prelude::*;

/// Train `n` members differing only in seed (`seed + member index`).
/// Members run in parallel on separate tapes; failures propagate.
pub fn ensemble_train(
    n: usize,
    config: &TrainConfig,
    dataset: &Dataset,
    split: &Split,
) -> Result<Vec<TrainedModel>, TrainError> {
    assert!(n >= 1, "an ensemble needs at least one member");
    (0..n)
        .into_par_iter()
        .map(|member| {
            let mut cfg = config.clone();
            cfg.seed = config.seed + member as u64;
            train_model(dataset, split, &cfg)
        })
        .collect()
}

/// Unweighted mean of member predictions over the given rows.
pub fn ensemble_predict(
    members: &[Checkpoint],
    dataset: &Dataset,
    indices: &[usize],
) -> Result<Vec<Vec<f64>>, TrainError> {
    assert!(!members.is_empty(), "an ensemble needs at least one member");
    let mut mean: Option<Vec<Vec<f64>>> = None;
    for cp in members {
        let preds = cp.predict(dataset, indices)?;
        match &mut mean {
            None => mean = Some(preds),
            Some(acc) => {
                for (a, p) in acc.iter_mut().zip(preds) {
                    for (x, y) in a.iter_mut().zip(p) {
                        *x += y;
                    }
                }
            }
        }
    }
    let mut acc = mean.unwrap();
    let k = members.len() as f64;
    for row in &mut acc {
        for x in row.iter_mut() {
            *x /= k;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{load_csv, random_split, SplitKind, SplitSpec, TaskType};
    use std::io::Write;

    fn toy() -> (Dataset, Split) {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "smiles,y").unwrap();
        for (s, y) in [
            ("C", 1.0),
            ("CC", 2.0),
            ("CCC", 3.0),
            ("CCCC", 4.0),
            ("CCO", 2.5),
            ("CCCO", 3.5),
            ("CCN", 2.2),
            ("CCCN", 3.2),
            ("CCCCC", 5.0),
            ("CCCCO", 4.5),
        ] {
            writeln!(f, "{s},{y}").unwrap();
        }
        f.flush().unwrap();
        let (d, _) = load_csv(f.path(), TaskType::Regression).unwrap();
        let spec = SplitSpec::new(SplitKind::Random, (0.6, 0.2, 0.2), 2).unwrap();
        let split = random_split(&d, &spec).unwrap();
        (d, split)
    }

    fn quick() -> TrainConfig {
        TrainConfig {
            epochs: 2,
            batch_size: 4,
            model: crate::model::ModelConfig {
                hidden: 16,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn single_member_equals_single_model() {
        let (d, split) = toy();
        let config = quick();
        let members = ensemble_train(1, &config, &d, &split).unwrap();
        let single = train_model(&d, &split, &config).unwrap();
        let e = ensemble_predict(
            &[members[0].checkpoint.clone()],
            &d,
            &split.test,
        )
        .unwrap();
        let s = single.checkpoint.predict(&d, &split.test).unwrap();
        assert_eq!(e, s);
    }

    #[test]
    fn mean_is_member_order_invariant_and_exact() {
        let (d, split) = toy();
        let members = ensemble_train(3, &quick(), &d, &split).unwrap();
        let cps: Vec<_> = members.iter().map(|m| m.checkpoint.clone()).collect();
        let fwd = ensemble_predict(&cps, &d, &split.test).unwrap();
        let rev: Vec<_> = cps.iter().rev().cloned().collect();
        let bwd = ensemble_predict(&rev, &d, &split.test).unwrap();
        for (a, b) in fwd.iter().flatten().zip(bwd.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
        // Two members predicting x and y average to (x+y)/2.
        let p0 = cps[0].predict(&d, &split.test).unwrap();
        let p1 = cps[1].predict(&d, &split.test).unwrap();
        let pair = ensemble_predict(&cps[..2], &d, &split.test).unwrap();
        for ((a, b), m) in p0
            .iter()
            .flatten()
            .zip(p1.iter().flatten())
            .zip(pair.iter().flatten())
        {
            assert!(((a + b) / 2.0 - m).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_members_average_to_themselves() {
        let (d, split) = toy();
        let m = train_model(&d, &split, &quick()).unwrap();
        let cps = vec![m.checkpoint.clone(), m.checkpoint.clone(), m.checkpoint];
        let e = ensemble_predict(&cps, &d, &split.test).unwrap();
        let s = cps[0].predict(&d, &split.test).unwrap();
        for (a, b) in e.iter().flatten().zip(s.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
