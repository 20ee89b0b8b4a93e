//! Feed-forward baseline over fixed-width molecule vectors (fingerprints or
//! descriptors), sharing the readout stack of the message passing model.

use super::dmpnn::ffn_forward;
use super::{init_ffn, FfnLayer};
use crate::rng::Rng;
use crate::tensor::{Tape, TensorError, Var};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FfnParams {
    pub input_dim: usize,
    pub dropout: f64,
    pub layers: Vec<FfnLayer>,
}

pub struct FfnOutput {
    pub predictions: Var,
    pub input: Var,
    pub param_vars: Vec<Var>,
}

impl FfnParams {
    pub fn init(
        input_dim: usize,
        hidden: usize,
        n_tasks: usize,
        n_layers: usize,
        dropout: f64,
        seed: u64,
    ) -> Self {
        FfnParams {
            input_dim,
            dropout,
            layers: init_ffn(input_dim, hidden, n_tasks, n_layers, seed),
        }
    }

    /// Forward on a row-major `[n_rows x input_dim]` batch.
    pub fn forward(
        &self,
        tape: &mut Tape,
        batch: Vec<f64>,
        n_rows: usize,
        training: bool,
        rng: &mut Rng,
    ) -> Result<FfnOutput, TensorError> {
        let input = tape.leaf(n_rows, self.input_dim, batch);
        let mut param_vars = Vec::new();
        let predictions = ffn_forward(
            tape,
            input,
            &self.layers,
            self.dropout,
            training,
            rng,
            &mut param_vars,
        )?;
        Ok(FfnOutput {
            predictions,
            input,
            param_vars,
        })
    }

    pub fn tensors(&self) -> Vec<&Vec<f64>> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.push(&layer.weight.data);
            out.push(&layer.bias);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            out.push(&mut layer.weight.data);
            out.push(&mut layer.bias);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_zero_input_gives_zero() {
        let mut params = FfnParams::init(4, 3, 2, 2, 0.0, 0);
        for t in params.tensors_mut() {
            t.iter_mut().for_each(|x| *x = 0.0);
        }
        let mut tape = Tape::new();
        let mut rng = Rng::new(0);
        let out = params
            .forward(&mut tape, vec![0.0; 8], 2, false, &mut rng)
            .unwrap();
        assert_eq!(tape.value(out.predictions), &[0.0, 0.0, 0.0, 0.0]);
    }
}
