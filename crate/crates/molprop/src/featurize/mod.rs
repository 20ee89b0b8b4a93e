//! Feature vectors for atoms, bonds, and whole molecules.
//!
//! Atom vectors are 127 wide: a 100-slot atom-type block, 6 for heavy-atom
//! degree, 5 for formal charge, 4 for chirality, 5 for hydrogen count, 5 for
//! hybridization, one aromaticity bit, and atomic mass divided by 100. Bond
//! vectors are 12 wide: 4 for bond order, conjugation and ring bits, and a
//! 6-way stereo block. Everything except the mass entry is one-hot.

mod cdf;
mod descriptors;
mod fingerprint;

pub use cdf::{fit_cdf, normalize, FeatureCdfTable};
pub use descriptors::{compute_descriptors, descriptor_names, NUM_DESCRIPTORS};
pub use fingerprint::{morgan_fingerprint, tanimoto};

use crate::chem::{Bond, BondOrder, BondStereo, Chirality, MolGraph};
use thiserror::Error;

pub const ATOM_FDIM: usize = 127;
pub const BOND_FDIM: usize = 12;
pub const EDGE_FDIM: usize = ATOM_FDIM + BOND_FDIM;

const ATOM_TYPES: usize = 100;
const MAX_DEGREE: usize = 5;
const MAX_HS: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum FeaturizeError {
    #[error("feature vector of length {got} does not match table of width {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("CDF reference needs at least 2 rows, got {0}")]
    InsufficientReference(usize),
}

/// Hybridization classes in feature-block order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hybridization {
    Sp,
    Sp2,
    Sp3,
    Sp3d,
    Sp3d2,
}

/// Infer hybridization from the bond pattern: no orbital model, just the
/// counting rules that reproduce the usual classes for organic molecules.
pub fn hybridization(graph: &MolGraph, atom_idx: usize) -> Hybridization {
    let atom = &graph.atoms[atom_idx];
    if atom.degree > 5 {
        return Hybridization::Sp3d2;
    }
    if atom.degree > 4 {
        return Hybridization::Sp3d;
    }
    let mut doubles = 0;
    let mut triples = 0;
    let mut unsaturated = false;
    for &(_, b) in &graph.adjacency[atom_idx] {
        match graph.bonds[b].order {
            BondOrder::Double => {
                doubles += 1;
                unsaturated = true;
            }
            BondOrder::Triple => {
                triples += 1;
                unsaturated = true;
            }
            BondOrder::Aromatic => unsaturated = true,
            BondOrder::Single => {}
        }
    }
    if triples > 0 || doubles >= 2 {
        Hybridization::Sp
    } else if unsaturated || atom.aromatic {
        Hybridization::Sp2
    } else {
        Hybridization::Sp3
    }
}

/// Atom feature vector (length [`ATOM_FDIM`]).
pub fn atom_features(graph: &MolGraph, atom_idx: usize) -> Vec<f64> {
    let atom = &graph.atoms[atom_idx];
    let mut v = vec![0.0; ATOM_FDIM];
    let mut base = 0;

    // Atom type: atomic numbers 1..=100; anything heavier gets no slot.
    let z = atom.atomic_number as usize;
    if (1..=ATOM_TYPES).contains(&z) {
        v[base + z - 1] = 1.0;
    }
    base += ATOM_TYPES;

    let degree = (atom.degree as usize).min(MAX_DEGREE);
    v[base + degree] = 1.0;
    base += MAX_DEGREE + 1;

    let charge = (atom.formal_charge.clamp(-2, 2) + 2) as usize;
    v[base + charge] = 1.0;
    base += 5;

    let chi = match atom.chirality {
        Chirality::Unspecified => 0,
        Chirality::Cw => 1,
        Chirality::Ccw => 2,
        Chirality::Other => 3,
    };
    v[base + chi] = 1.0;
    base += 4;

    let hs = (atom.total_h() as usize).min(MAX_HS);
    v[base + hs] = 1.0;
    base += MAX_HS + 1;

    let hyb = match hybridization(graph, atom_idx) {
        Hybridization::Sp => 0,
        Hybridization::Sp2 => 1,
        Hybridization::Sp3 => 2,
        Hybridization::Sp3d => 3,
        Hybridization::Sp3d2 => 4,
    };
    v[base + hyb] = 1.0;
    base += 5;

    v[base] = if atom.aromatic { 1.0 } else { 0.0 };
    v[base + 1] = atom.mass() / 100.0;
    v
}

/// Bond feature vector (length [`BOND_FDIM`]).
pub fn bond_features(bond: &Bond) -> Vec<f64> {
    let mut v = vec![0.0; BOND_FDIM];
    let order = match bond.order {
        BondOrder::Single => 0,
        BondOrder::Double => 1,
        BondOrder::Triple => 2,
        BondOrder::Aromatic => 3,
    };
    v[order] = 1.0;
    v[4] = if bond.conjugated { 1.0 } else { 0.0 };
    v[5] = if bond.in_ring { 1.0 } else { 0.0 };
    let stereo = match bond.stereo {
        BondStereo::None => 0,
        BondStereo::Any => 1,
        BondStereo::E => 2,
        BondStereo::Z => 3,
        BondStereo::Cis => 4,
        BondStereo::Trans => 5,
    };
    v[6 + stereo] = 1.0;
    v
}

/// Directed-edge input: `cat(x_v, e_vw)` for source atom `v` of the edge
/// (length [`EDGE_FDIM`]).
pub fn edge_input(graph: &MolGraph, source_atom: usize, bond: &Bond) -> Vec<f64> {
    debug_assert!(source_atom == bond.begin || source_atom == bond.end);
    let mut v = atom_features(graph, source_atom);
    v.extend(bond_features(bond));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    #[test]
    fn methane_carbon_slots() {
        let g = parse_smiles("C").unwrap();
        let f = atom_features(&g, 0);
        assert_eq!(f.len(), ATOM_FDIM);
        assert_eq!(f[5], 1.0); // Z=6 → slot 5
        assert_eq!(f[100], 1.0); // degree 0
        assert_eq!(f[106 + 2], 1.0); // charge 0
        assert_eq!(f[111], 1.0); // chirality unspecified
        assert_eq!(f[115 + 4], 1.0); // 4 hydrogens
        assert_eq!(f[120 + 2], 1.0); // sp3
        assert_eq!(f[125], 0.0); // not aromatic
        assert!((f[126] - 0.12011).abs() < 1e-9);
        // Exactly one bit per one-hot block.
        assert_eq!(f[..100].iter().sum::<f64>(), 1.0);
        assert_eq!(f[100..106].iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn benzene_carbon_is_aromatic_sp2() {
        let g = parse_smiles("c1ccccc1").unwrap();
        let f = atom_features(&g, 0);
        assert_eq!(f[125], 1.0);
        assert_eq!(f[120 + 1], 1.0); // sp2
        assert_eq!(f[115 + 1], 1.0); // one hydrogen
    }

    #[test]
    fn ammonium_charge_and_h_clamp() {
        let g = parse_smiles("[NH4+]").unwrap();
        let f = atom_features(&g, 0);
        assert_eq!(f[106 + 3], 1.0); // charge +1
        assert_eq!(f[115 + 4], 1.0); // 4 hydrogens (at clamp)
    }

    #[test]
    fn ethane_bond() {
        let g = parse_smiles("CC").unwrap();
        let f = bond_features(&g.bonds[0]);
        assert_eq!(f.len(), BOND_FDIM);
        assert_eq!(f[0], 1.0); // single
        assert_eq!(f[4], 0.0);
        assert_eq!(f[5], 0.0);
        assert_eq!(f[6], 1.0); // stereo none
        assert_eq!(f.iter().sum::<f64>(), 2.0);
    }

    #[test]
    fn benzene_bond() {
        let g = parse_smiles("c1ccccc1").unwrap();
        let f = bond_features(&g.bonds[0]);
        assert_eq!(f[3], 1.0); // aromatic
        assert_eq!(f[4], 1.0); // conjugated
        assert_eq!(f[5], 1.0); // ring
    }

    #[test]
    fn trans_difluoroethene_stereo_slot() {
        let g = parse_smiles("F/C=C/F").unwrap();
        let dbl = g
            .bonds
            .iter()
            .find(|b| b.order == crate::chem::BondOrder::Double)
            .unwrap();
        let f = bond_features(dbl);
        assert_eq!(f[6 + 2], 1.0); // E slot
    }

    #[test]
    fn edge_input_layout() {
        let g = parse_smiles("c1ccccc1").unwrap();
        for bond in &g.bonds {
            for &src in &[bond.begin, bond.end] {
                let e = edge_input(&g, src, bond);
                assert_eq!(e.len(), EDGE_FDIM);
                assert_eq!(&e[..ATOM_FDIM], atom_features(&g, src).as_slice());
            }
        }
        // 6 bonds → 12 directed edges.
        assert_eq!(2 * g.num_bonds(), 12);
    }

    #[test]
    fn one_hot_blocks_sum_to_at_most_one() {
        for smi in ["CC(=O)Oc1ccccc1C(=O)O", "[NH4+]", "C#N", "OS(=O)(=O)O"] {
            let g = parse_smiles(smi).unwrap();
            for i in 0..g.num_atoms() {
                let f = atom_features(&g, i);
                for (lo, hi) in [(0, 100), (100, 106), (106, 111), (111, 115), (115, 120), (120, 125)] {
                    let s: f64 = f[lo..hi].iter().sum();
                    assert!(s <= 1.0 + 1e-12, "block {lo}..{hi} sums to {s}");
                    assert!(f[lo..hi].iter().all(|&x| (0.0..=1.0).contains(&x)));
                }
            }
            for b in &g.bonds {
                let f = bond_features(b);
                assert_eq!(f[..4].iter().sum::<f64>(), 1.0);
            }
        }
    }
}
