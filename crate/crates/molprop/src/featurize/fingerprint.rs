//! Morgan (ECFP-style) circular fingerprints.
//!
//! Each atom starts from a hash of its invariant tuple; every round combines
//! an atom's identifier with its neighbors' identifiers from the previous
//! round, sorted so the result is independent of atom order. Identifiers
//! from all rounds are folded modulo the vector length. The mixing function
//! and its seed are pinned, so fingerprints are stable across runs and
//! platforms (bit-compatibility with other packages is a non-goal).

use crate::chem::{BondOrder, MolGraph};
use crate::rng::hash_words;

fn bond_code(order: BondOrder) -> u64 {
    match order {
        BondOrder::Single => 1,
        BondOrder::Double => 2,
        BondOrder::Triple => 3,
        BondOrder::Aromatic => 4,
    }
}

/// Hashed circular fingerprint of length `nbits`. With `counted` the vector
/// accumulates how many identifiers fold onto each slot; otherwise it is 0/1.
pub fn morgan_fingerprint(
    graph: &MolGraph,
    radius: u32,
    nbits: usize,
    counted: bool,
) -> Vec<f64> {
    assert!(nbits >= 1, "nbits must be at least 1");
    let n = graph.atoms.len();
    let mut fp = vec![0.0; nbits];

    let mut ids: Vec<u64> = (0..n)
        .map(|v| {
            let a = &graph.atoms[v];
            hash_words(&[
                a.atomic_number as u64,
                a.degree as u64,
                (a.formal_charge as i64) as u64,
                a.total_h() as u64,
                a.in_ring as u64,
                a.aromatic as u64,
            ])
        })
        .collect();

    let mut emit = |id: u64| {
        let slot = (id % nbits as u64) as usize;
        if counted {
            fp[slot] += 1.0;
        } else {
            fp[slot] = 1.0;
        }
    };

    for &id in &ids {
        emit(id);
    }
    for round in 1..=radius {
        let mut next = vec![0u64; n];
        for v in 0..n {
            let mut neigh: Vec<u64> = graph.adjacency[v]
                .iter()
                .map(|&(w, b)| hash_words(&[bond_code(graph.bonds[b].order), ids[w]]))
                .collect();
            neigh.sort_unstable();
            let mut words = vec![round as u64, ids[v]];
            words.extend(neigh);
            next[v] = hash_words(&words);
        }
        ids = next;
        for &id in &ids {
            emit(id);
        }
    }
    fp
}

/// Tanimoto similarity of two fingerprints, treating entries as sets when
/// binary and as count vectors otherwise (min/max generalization).
pub fn tanimoto(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut inter = 0.0;
    let mut union = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        inter += x.min(y);
        union += x.max(y);
    }
    if union == 0.0 {
        0.0
    } else {
        inter / union
    }
}
