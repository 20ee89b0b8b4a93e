//! Message passing networks over molecular graphs.
//!
//! [`DmpnnParams`] holds the learned matrices; [`dmpnn::forward`] runs the
//! directed-edge message passing (or its undirected / atom-message variants)
//! plus the feed-forward readout on a [`BatchGraph`]. A plain FFN over
//! fingerprint or descriptor vectors shares the same readout stack and
//! serves as the baseline model.

mod batch;
pub mod dmpnn;
pub mod ffn;

pub use batch::{build_batch, BatchError, BatchGraph, MolFeatures};

use crate::featurize::{ATOM_FDIM, EDGE_FDIM};
use crate::rng::Rng;
use serde::{Deserialize, Serialize};

/// Where hidden states live during message passing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageType {
    /// Directed bond messages with reverse-edge exclusion (the default).
    Directed,
    /// Bond messages symmetrized by averaging each edge with its reverse
    /// before every step.
    Undirected,
    /// Messages on atoms over plain neighbor sums.
    Atom,
}

impl std::str::FromStr for MessageType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "directed" => Ok(MessageType::Directed),
            "undirected" => Ok(MessageType::Undirected),
            "atom" => Ok(MessageType::Atom),
            other => Err(format!("unknown message type `{other}`")),
        }
    }
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Number of message passing steps (T ≥ 1).
    pub depth: usize,
    /// Hidden size of messages and readout layers.
    pub hidden: usize,
    /// Number of linear layers in the readout FFN (≥ 1).
    pub ffn_layers: usize,
    /// Dropout probability applied after every activation while training.
    pub dropout: f64,
    pub message_type: MessageType,
    /// Output dimension (= number of tasks).
    pub n_tasks: usize,
    /// Width of the molecule-level feature vector concatenated before the
    /// FFN; 0 disables feature augmentation.
    pub feature_dim: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            depth: 3,
            hidden: 300,
            ffn_layers: 2,
            dropout: 0.0,
            message_type: MessageType::Directed,
            n_tasks: 1,
            feature_dim: 0,
        }
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Glorot/Xavier uniform initialization.
    pub fn xavier(rows: usize, cols: usize, rng: &mut Rng) -> Self {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        Mat {
            rows,
            cols,
            data: (0..rows * cols).map(|_| rng.uniform(-limit, limit)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FfnLayer {
    /// `[in x out]`, applied as `x · W + b`.
    pub weight: Mat,
    pub bias: Vec<f64>,
}

/// Learned parameters of the message passing network: the input, message,
/// and readout matrices plus the FFN stack. Stored input-major so the
/// forward pass is plain `x · W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmpnnParams {
    pub config: ModelConfig,
    pub w_i: Mat,
    pub w_m: Mat,
    pub w_a: Mat,
    pub ffn: Vec<FfnLayer>,
}

impl DmpnnParams {
    pub fn init(config: ModelConfig, seed: u64) -> Self {
        assert!(config.depth >= 1, "depth must be at least 1");
        assert!(config.ffn_layers >= 1, "ffn needs at least one layer");
        let h = config.hidden;
        let input_dim = match config.message_type {
            MessageType::Atom => ATOM_FDIM,
            _ => EDGE_FDIM,
        };
        let mut rng = Rng::stream(seed, &[0x57_69]);
        let w_i = Mat::xavier(input_dim, h, &mut rng);
        let mut rng = Rng::stream(seed, &[0x57_6d]);
        let w_m = Mat::xavier(h, h, &mut rng);
        let mut rng = Rng::stream(seed, &[0x57_61]);
        let w_a = Mat::xavier(ATOM_FDIM + h, h, &mut rng);
        let ffn = init_ffn(h + config.feature_dim, h, config.n_tasks, config.ffn_layers, seed);
        DmpnnParams {
            config,
            w_i,
            w_m,
            w_a,
            ffn,
        }
    }

    /// Parameter tensors in a fixed order (matching `dmpnn::forward`'s
    /// `param_vars`), for optimizers and serialization.
    pub fn tensors(&self) -> Vec<&Vec<f64>> {
        let mut out = vec![&self.w_i.data, &self.w_m.data, &self.w_a.data];
        for layer in &self.ffn {
            out.push(&layer.weight.data);
            out.push(&layer.bias);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = vec![&mut self.w_i.data, &mut self.w_m.data, &mut self.w_a.data];
        for layer in &mut self.ffn {
            out.push(&mut layer.weight.data);
            out.push(&mut layer.bias);
        }
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

/// FFN stack: `input_dim → hidden → ... → out`, `layers` linear maps total.
pub(crate) fn init_ffn(
    input_dim: usize,
    hidden: usize,
    out: usize,
    layers: usize,
    seed: u64,
) -> Vec<FfnLayer> {
    let mut dims = Vec::with_capacity(layers + 1);
    dims.push(input_dim);
    for _ in 0..layers.saturating_sub(1) {
        dims.push(hidden);
    }
    dims.push(out);
    dims.windows(2)
        .enumerate()
        .map(|(i, w)| {
            let mut rng = Rng::stream(seed, &[0xff_00, i as u64]);
            FfnLayer {
                weight: Mat::xavier(w[0], w[1], &mut rng),
                bias: vec![0.0; w[1]],
            }
        })
        .collect()
}
