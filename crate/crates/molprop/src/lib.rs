//! Molecular property prediction from SMILES strings.
//!
//! The crate is built around a message passing network whose hidden states
//! live on directed bonds rather than atoms, which keeps a message from being
//! bounced straight back to the bond it came from. Everything needed to run
//! it is implemented here: a SMILES parser producing molecular graphs, the
//! atom/bond featurization, a small reverse-mode autodiff tape, dataset
//! splitting (random and Murcko-scaffold based), training with Adam and a
//! warmup/decay schedule, metrics, ensembling, and a TPE hyperparameter
//! search.
//!
//! See the `examples/` directory for runnable walkthroughs of each piece and
//! the `molprop` binary for the batch command-line interface.

pub mod chem;
pub mod data;
pub mod featurize;
pub mod model;
pub mod rng;
pub mod tensor;
pub mod train;
