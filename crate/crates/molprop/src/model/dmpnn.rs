//! Forward passes for the three message passing variants.
//!
//! Directed messages: edge hidden states are initialized from
//! `cat(x_source, bond_features)`; each step sums the hidden states of edges
//! flowing into an edge's source atom, excluding the reverse edge — computed
//! as a full segment-sum followed by subtraction of the reverse state, which
//! is mathematically identical to enumerating `N(v) \ w` per edge and turns
//! the step into two segment ops. Updates add the initial state back as a
//! skip connection. The readout sums incoming edge states per atom, mixes in
//! the raw atom features, sums atoms per molecule, optionally concatenates
//! molecule-level features, and applies the FFN.

use super::{BatchGraph, DmpnnParams, FfnLayer, MessageType};
use crate::rng::Rng;
use crate::tensor::{Tape, TensorError, Var};

/// Handles into the tape for everything a caller might inspect: outputs,
/// intermediate representations, and the parameter leaves (in
/// [`DmpnnParams::tensors`] order) whose gradients drive the optimizer.
pub struct ForwardOutput {
    /// `[n_mols x n_tasks]`; identity outputs for regression, raw logits for
    /// classification.
    pub predictions: Var,
    /// `[n_mols x hidden]` summed atom states per molecule.
    pub mol_embeddings: Var,
    /// `[n_atoms x hidden]` readout atom states.
    pub atom_hiddens: Var,
    /// Leaf holding the stacked edge inputs (empty for atom messages).
    pub edge_inputs: Var,
    /// Leaf holding the stacked atom features.
    pub atom_inputs: Var,
    /// Parameter leaves in `tensors()` order.
    pub param_vars: Vec<Var>,
}

/// Run the message passing network on a batch.
pub fn forward(
    params: &DmpnnParams,
    tape: &mut Tape,
    bg: &BatchGraph,
    training: bool,
    rng: &mut Rng,
) -> Result<ForwardOutput, TensorError> {
    let cfg = &params.config;
    let p = cfg.dropout;

    let atom_x = tape.leaf(bg.n_atoms, crate::featurize::ATOM_FDIM, bg.atom_features.clone());
    let edge_x = tape.leaf(bg.n_edges, crate::featurize::EDGE_FDIM, bg.edge_inputs.clone());

    let w_i = tape.leaf(params.w_i.rows, params.w_i.cols, params.w_i.data.clone());
    let w_m = tape.leaf(params.w_m.rows, params.w_m.cols, params.w_m.data.clone());
    let w_a = tape.leaf(params.w_a.rows, params.w_a.cols, params.w_a.data.clone());
    let mut param_vars = vec![w_i, w_m, w_a];

    // Message passing to per-atom aggregated messages m_v.
    let message_sum = match cfg.message_type {
        MessageType::Atom => {
            // h_v^0 = relu(x_v W_i); m_v^{t+1} = sum over neighbors of h^t.
            let pre = tape.matmul(atom_x, w_i)?;
            let act = tape.relu(pre)?;
            let h0 = tape.dropout(act, p, training, rng)?;
            let mut h = h0;
            for _ in 0..cfg.depth {
                let src = tape.gather_rows(h, &bg.b2a)?;
                let m = tape.segment_sum(src, &bg.edge_target, bg.n_atoms)?;
                let mixed = tape.matmul(m, w_m)?;
                let skip = tape.add(h0, mixed)?;
                let act = tape.relu(skip)?;
                h = tape.dropout(act, p, training, rng)?;
            }
            let src = tape.gather_rows(h, &bg.b2a)?;
            tape.segment_sum(src, &bg.edge_target, bg.n_atoms)?
        }
        _ => {
            // h_vw^0 = relu(cat(x_v, e_vw) W_i).
            let pre = tape.matmul(edge_x, w_i)?;
            let act = tape.relu(pre)?;
            let h0 = tape.dropout(act, p, training, rng)?;
            let mut h = h0;
            for _ in 0..cfg.depth {
                if cfg.message_type == MessageType::Undirected {
                    let rev = tape.gather_rows(h, &bg.b2rev)?;
                    let sum = tape.add(h, rev)?;
                    h = tape.scale(sum, 0.5)?;
                }
                // m_vw = (sum of h over edges into v) - h_wv.
                let into_atom = tape.segment_sum(h, &bg.edge_target, bg.n_atoms)?;
                let at_source = tape.gather_rows(into_atom, &bg.b2a)?;
                let rev = tape.gather_rows(h, &bg.b2rev)?;
                let m = tape.sub(at_source, rev)?;
                let mixed = tape.matmul(m, w_m)?;
                let skip = tape.add(h0, mixed)?;
                let act = tape.relu(skip)?;
                h = tape.dropout(act, p, training, rng)?;
            }
            tape.segment_sum(h, &bg.edge_target, bg.n_atoms)?
        }
    };

    // Atom readout: h_v = relu(cat(x_v, m_v) W_a).
    let a_in = tape.concat(1, &[atom_x, message_sum])?;
    let pre = tape.matmul(a_in, w_a)?;
    let act = tape.relu(pre)?;
    let atom_hiddens = tape.dropout(act, p, training, rng)?;

    // Molecule vector h = sum over atoms.
    let mol_embeddings = tape.segment_sum(atom_hiddens, &bg.atom_to_mol, bg.n_mols)?;

    let ffn_in = if cfg.feature_dim > 0 {
        let f = tape.leaf(bg.n_mols, cfg.feature_dim, bg.features.clone());
        tape.concat(1, &[mol_embeddings, f])?
    } else {
        mol_embeddings
    };

    let predictions = ffn_forward(
        tape,
        ffn_in,
        &params.ffn,
        p,
        training,
        rng,
        &mut param_vars,
    )?;

    Ok(ForwardOutput {
        predictions,
        mol_embeddings,
        atom_hiddens,
        edge_inputs: edge_x,
        atom_inputs: atom_x,
        param_vars,
    })
}

/// Shared FFN stack: linear, then (relu → dropout → linear) per remaining
/// layer. The final layer's output is left raw.
pub(crate) fn ffn_forward(
    tape: &mut Tape,
    input: Var,
    layers: &[FfnLayer],
    dropout: f64,
    training: bool,
    rng: &mut Rng,
    param_vars: &mut Vec<Var>,
) -> Result<Var, TensorError> {
    let mut x = input;
    for (i, layer) in layers.iter().enumerate() {
        if i > 0 {
            let act = tape.relu(x)?;
            x = tape.dropout(act, dropout, training, rng)?;
        }
        let w = tape.leaf(layer.weight.rows, layer.weight.cols, layer.weight.data.clone());
        let b = tape.leaf(1, layer.bias.len(), layer.bias.clone());
        param_vars.push(w);
        param_vars.push(b);
        let wx = tape.matmul(x, w)?;
        x = tape.add(wx, b)?;
    }
    Ok(x)
}
