//! Index-array encoding of a batch of molecules for vectorized message
//! passing on directed edges.
//!
//! Every bond contributes two directed edges stored adjacently, so the
//! reverse of edge `e` is `e ^ 1`. Atoms and edges of one molecule occupy
//! contiguous spans, which keeps per-molecule readout a single segment-sum.

use crate::chem::MolGraph;
use crate::featurize::{atom_features, edge_input, ATOM_FDIM, EDGE_FDIM};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BatchError {
    #[error("cannot build a batch from zero molecules")]
    EmptyBatch,
    #[error("molecule {index} has a feature vector of length {got}, expected {expected}")]
    FeatureDimMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
}

/// Per-molecule featurization, cached once per dataset so batch assembly is
/// pure index work.
#[derive(Debug, Clone)]
pub struct MolFeatures {
    pub n_atoms: usize,
    /// Row-major `[n_atoms x ATOM_FDIM]`.
    pub atom_features: Vec<f64>,
    /// Bond endpoints, one entry per undirected bond.
    pub bonds: Vec<(usize, usize)>,
    /// Row-major `[2*bonds x EDGE_FDIM]`; rows 2i and 2i+1 are the two
    /// directions of bond i.
    pub edge_inputs: Vec<f64>,
}

impl MolFeatures {
    pub fn from_graph(graph: &MolGraph) -> Self {
        let n_atoms = graph.num_atoms();
        let mut atom_feats = Vec::with_capacity(n_atoms * ATOM_FDIM);
        for i in 0..n_atoms {
            atom_feats.extend(atom_features(graph, i));
        }
        let mut bonds = Vec::with_capacity(graph.num_bonds());
        let mut edge_inputs = Vec::with_capacity(2 * graph.num_bonds() * EDGE_FDIM);
        for bond in &graph.bonds {
            bonds.push((bond.begin, bond.end));
            edge_inputs.extend(edge_input(graph, bond.begin, bond));
            edge_inputs.extend(edge_input(graph, bond.end, bond));
        }
        MolFeatures {
            n_atoms,
            atom_features: atom_feats,
            bonds,
            edge_inputs,
        }
    }
}

/// A batch of molecules flattened into index arrays.
#[derive(Debug, Clone)]
pub struct BatchGraph {
    pub n_atoms: usize,
    pub n_edges: usize,
    pub n_mols: usize,
    /// `[n_atoms x ATOM_FDIM]` stacked atom features.
    pub atom_features: Vec<f64>,
    /// `[n_edges x EDGE_FDIM]` stacked directed-edge inputs.
    pub edge_inputs: Vec<f64>,
    /// Source atom of each directed edge.
    pub b2a: Vec<usize>,
    /// Target atom of each directed edge.
    pub edge_target: Vec<usize>,
    /// Reverse edge of each directed edge (an involution).
    pub b2rev: Vec<usize>,
    /// Incoming directed edges per atom.
    pub a2b: Vec<Vec<usize>>,
    /// Molecule id per atom.
    pub atom_to_mol: Vec<usize>,
    /// Per-molecule atom span `[start, end)`.
    pub atom_spans: Vec<(usize, usize)>,
    /// Optional stacked molecule-level features `[n_mols x feature_dim]`.
    pub features: Vec<f64>,
    pub feature_dim: usize,
}

/// Stack molecules (with optional molecule-level feature vectors) into one
/// batch. Feature vectors must all share one length; pass `&[]` slices for
/// a featureless batch.
pub fn build_batch(
    mols: &[&MolFeatures],
    features: &[&[f64]],
) -> Result<BatchGraph, BatchError> {
    if mols.is_empty() {
        return Err(BatchError::EmptyBatch);
    }
    debug_assert!(features.is_empty() || features.len() == mols.len());
    let feature_dim = features.first().map(|f| f.len()).unwrap_or(0);

    let total_atoms: usize = mols.iter().map(|m| m.n_atoms).sum();
    let total_edges: usize = mols.iter().map(|m| 2 * m.bonds.len()).sum();

    let mut bg = BatchGraph {
        n_atoms: total_atoms,
        n_edges: total_edges,
        n_mols: mols.len(),
        atom_features: Vec::with_capacity(total_atoms * ATOM_FDIM),
        edge_inputs: Vec::with_capacity(total_edges * EDGE_FDIM),
        b2a: Vec::with_capacity(total_edges),
        edge_target: Vec::with_capacity(total_edges),
        b2rev: Vec::with_capacity(total_edges),
        a2b: vec![Vec::new(); total_atoms],
        atom_to_mol: Vec::with_capacity(total_atoms),
        atom_spans: Vec::with_capacity(mols.len()),
        features: Vec::with_capacity(mols.len() * feature_dim),
        feature_dim,
    };

    let mut atom_base = 0usize;
    let mut edge_base = 0usize;
    for (k, mol) in mols.iter().enumerate() {
        bg.atom_features.extend_from_slice(&mol.atom_features);
        bg.edge_inputs.extend_from_slice(&mol.edge_inputs);
        bg.atom_spans.push((atom_base, atom_base + mol.n_atoms));
        for _ in 0..mol.n_atoms {
            bg.atom_to_mol.push(k);
        }
        for (i, &(u, v)) in mol.bonds.iter().enumerate() {
            let e_uv = edge_base + 2 * i;
            let e_vu = e_uv + 1;
            bg.b2a.push(atom_base + u);
            bg.edge_target.push(atom_base + v);
            bg.b2rev.push(e_vu);
            bg.b2a.push(atom_base + v);
            bg.edge_target.push(atom_base + u);
            bg.b2rev.push(e_uv);
            bg.a2b[atom_base + v].push(e_uv);
            bg.a2b[atom_base + u].push(e_vu);
        }
        if !features.is_empty() {
            let f = features[k];
            if f.len() != feature_dim {
                return Err(BatchError::FeatureDimMismatch {
                    index: k,
                    expected: feature_dim,
                    got: f.len(),
                });
            }
            bg.features.extend_from_slice(f);
        }
        atom_base += mol.n_atoms;
        edge_base += 2 * mol.bonds.len();
    }
    Ok(bg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn feats(smi: &str) -> MolFeatures {
        MolFeatures::from_graph(&parse_smiles(smi).unwrap())
    }

    #[test]
    fn single_bond_molecule() {
        let m = feats("CC");
        let bg = build_batch(&[&m], &[]).unwrap();
        assert_eq!(bg.n_atoms, 2);
        assert_eq!(bg.n_edges, 2);
        assert_eq!(bg.b2rev, vec![1, 0]);
        assert_eq!(bg.b2a, vec![0, 1]);
        assert_eq!(bg.edge_target, vec![1, 0]);
    }

    #[test]
    fn edgeless_molecule_is_legal() {
        let m = feats("C");
        let bg = build_batch(&[&m], &[]).unwrap();
        assert_eq!(bg.n_atoms, 1);
        assert_eq!(bg.n_edges, 0);
        assert_eq!(bg.a2b, vec![Vec::<usize>::new()]);
    }

    #[test]
    fn spans_are_contiguous() {
        let a = feats("CC");
        let b = feats("C");
        let bg = build_batch(&[&a, &b], &[]).unwrap();
        assert_eq!(bg.atom_spans, vec![(0, 2), (2, 3)]);
        assert_eq!(bg.atom_to_mol, vec![0, 0, 1]);
    }

    #[test]
    fn invariants_on_a_real_molecule() {
        let m = feats("CC(=O)Oc1ccccc1C(=O)O");
        let bg = build_batch(&[&m], &[]).unwrap();
        for e in 0..bg.n_edges {
            // Involution and source/target duality.
            assert_eq!(bg.b2rev[bg.b2rev[e]], e);
            assert_eq!(bg.b2a[e], bg.edge_target[bg.b2rev[e]]);
        }
        // Every bond appears as exactly two directed edges.
        assert_eq!(bg.n_edges, 2 * m.bonds.len());
        // a2b lists exactly the edges that point at each atom.
        for (atom, incoming) in bg.a2b.iter().enumerate() {
            for &e in incoming {
                assert_eq!(bg.edge_target[e], atom);
            }
        }
        let total_incoming: usize = bg.a2b.iter().map(|v| v.len()).sum();
        assert_eq!(total_incoming, bg.n_edges);
    }

    #[test]
    fn empty_batch_rejected() {
        assert_eq!(build_batch(&[], &[]).unwrap_err(), BatchError::EmptyBatch);
    }

    #[test]
    fn feature_length_must_agree() {
        let a = feats("CC");
        let b = feats("C");
        let fa = vec![1.0, 2.0];
        let fb = vec![3.0];
        let err = build_batch(&[&a, &b], &[&fa, &fb]).unwrap_err();
        assert!(matches!(err, BatchError::FeatureDimMismatch { .. }));
        let fb2 = vec![3.0, 4.0];
        let bg = build_batch(&[&a, &b], &[&fa, &fb2]).unwrap();
        assert_eq!(bg.feature_dim, 2);
        assert_eq!(bg.features, vec![1.0, 2.0, 3.0, 4.0]);
    }
}
