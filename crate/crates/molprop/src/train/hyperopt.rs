//! Sequential model-based hyperparameter search over a discrete space.
//!
//! The search tunes four quantities: message passing depth, hidden size,
//! number of FFN layers, and dropout. After a random warmup phase
//! (`max(10, iters/5)` trials) a tree-structured Parzen estimator splits the
//! history at the best quartile, models each dimension with smoothed
//! categorical densities over the good and bad halves, samples candidates
//! from the good density, and evaluates the one maximizing the density
//! ratio. A plain random-search strategy is available for
//! determinism-sensitive pipelines that want no adaptive behavior.

use crate::rng::Rng;
use serde::{Deserialize, Serialize};

/// Discrete search space (defaults span the ranges that matter in practice:
/// depth 2-6, hidden 300-2400 by 100, 1-3 FFN layers, dropout 0-0.4 by 0.05).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperSpace {
    pub depths: Vec<usize>,
    pub hiddens: Vec<usize>,
    pub ffn_layers: Vec<usize>,
    pub dropouts: Vec<f64>,
}

impl Default for HyperSpace {
    fn default() -> Self {
        HyperSpace {
            depths: (2..=6).collect(),
            hiddens: (3..=24).map(|k| k * 100).collect(),
            ffn_layers: (1..=3).collect(),
            dropouts: (0..=8).map(|k| k as f64 * 0.05).collect(),
        }
    }
}

impl HyperSpace {
    pub fn size(&self) -> usize {
        self.depths.len() * self.hiddens.len() * self.ffn_layers.len() * self.dropouts.len()
    }

    fn dims(&self) -> [usize; 4] {
        [
            self.depths.len(),
            self.hiddens.len(),
            self.ffn_layers.len(),
            self.dropouts.len(),
        ]
    }

    fn choice(&self, idx: [usize; 4]) -> HyperChoice {
        HyperChoice {
            depth: self.depths[idx[0]],
            hidden: self.hiddens[idx[1]],
            ffn_layers: self.ffn_layers[idx[2]],
            dropout: self.dropouts[idx[3]],
        }
    }
}

/// One point of the search space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperChoice {
    pub depth: usize,
    pub hidden: usize,
    pub ffn_layers: usize,
    pub dropout: f64,
}

/// One evaluated trial. `score` is the objective value (lower is better
/// from the optimizer's point of view; callers maximizing a metric negate).
#[derive(Debug, Clone, Serialize)]
pub struct Trial {
    pub iteration: usize,
    pub choice: HyperChoice,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchStrategy {
    Tpe,
    Random,
}

const TPE_GAMMA: f64 = 0.25;
const TPE_CANDIDATES: usize = 24;

/// Minimize `objective` over the space with `iters` evaluations. Returns the
/// best choice and the full trial log (length = `iters`). Deterministic
/// given the seed and a deterministic objective.
pub fn hyperopt<E>(
    space: &HyperSpace,
    iters: usize,
    seed: u64,
    strategy: SearchStrategy,
    mut objective: impl FnMut(&HyperChoice) -> Result<f64, E>,
) -> Result<(HyperChoice, Vec<Trial>), E> {
    assert!(iters >= 1, "need at least one iteration");
    let dims = space.dims();
    let mut rng = Rng::stream(seed, &[0x7e9]);
    let n_random = (iters / 5).max(10).min(iters);

    let mut trials: Vec<([usize; 4], f64)> = Vec::with_capacity(iters);
    let mut log = Vec::with_capacity(iters);

    for it in 0..iters {
        let idx = if it < n_random || strategy == SearchStrategy::Random {
            [
                rng.below(dims[0]),
                rng.below(dims[1]),
                rng.below(dims[2]),
                rng.below(dims[3]),
            ]
        } else {
            propose_tpe(&trials, dims, &mut rng)
        };
        let choice = space.choice(idx);
        let score = objective(&choice)?;
        trials.push((idx, score));
        log.push(Trial {
            iteration: it + 1,
            choice,
            score,
        });
    }

    let best = trials
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    Ok((log[best].choice, log))
}

/// Split trials at the γ quantile, build smoothed categorical densities per
/// dimension, sample candidates from the good density, keep the candidate
/// with the highest good/bad likelihood ratio.
fn propose_tpe(trials: &[([usize; 4], f64)], dims: [usize; 4], rng: &mut Rng) -> [usize; 4] {
    let mut order: Vec<usize> = (0..trials.len()).collect();
    order.sort_by(|&a, &b| trials[a].1.partial_cmp(&trials[b].1).unwrap());
    let n_good = ((trials.len() as f64 * TPE_GAMMA).ceil() as usize).clamp(1, trials.len() - 1);

    // counts[d][v] with +1 smoothing.
    let mut good = [(); 4].map(|_| Vec::new());
    let mut bad = [(); 4].map(|_| Vec::new());
    for d in 0..4 {
        good[d] = vec![1.0f64; dims[d]];
        bad[d] = vec![1.0f64; dims[d]];
    }
    for (rank, &t) in order.iter().enumerate() {
        let (idx, _) = trials[t];
        let bucket = if rank < n_good { &mut good } else { &mut bad };
        for d in 0..4 {
            bucket[d][idx[d]] += 1.0;
        }
    }
    let normalize = |counts: &mut [Vec<f64>]| {
        for col in counts.iter_mut() {
            let s: f64 = col.iter().sum();
            col.iter_mut().for_each(|x| *x /= s);
        }
    };
    normalize(&mut good);
    normalize(&mut bad);

    let sample_from = |density: &Vec<f64>, rng: &mut Rng| -> usize {
        let r = rng.next_f64();
        let mut acc = 0.0;
        for (i, &p) in density.iter().enumerate() {
            acc += p;
            if r < acc {
                return i;
            }
        }
        density.len() - 1
    };

    let mut best_idx = [0usize; 4];
    let mut best_ratio = f64::NEG_INFINITY;
    for _ in 0..TPE_CANDIDATES {
        let mut idx = [0usize; 4];
        let mut ratio = 0.0;
        for d in 0..4 {
            idx[d] = sample_from(&good[d], rng);
            ratio += (good[d][idx[d]] / bad[d][idx[d]]).ln();
        }
        if ratio > best_ratio {
            best_ratio = ratio;
            best_idx = idx;
        }
    }
    best_idx
}
