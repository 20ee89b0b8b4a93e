//! Native molecule-level descriptors.
//!
//! A deliberately small, documented set computable from the graph alone.
//! Larger descriptor vectors can be supplied from a file instead (see the
//! dataset loader); these ten exist so feature-augmented models run with no
//! external tooling.

use crate::chem::{is_halogen, BondOrder, MolGraph};
use crate::featurize::{hybridization, Hybridization};

pub const NUM_DESCRIPTORS: usize = 10;

pub fn descriptor_names() -> [&'static str; NUM_DESCRIPTORS] {
    [
        "mol_wt",
        "heavy_atom_count",
        "ring_count",
        "aromatic_ring_count",
        "h_acceptors",
        "h_donors",
        "fraction_csp3",
        "rotatable_bonds",
        "formal_charge_sum",
        "halogen_count",
    ]
}

/// Fixed-order descriptor vector of length [`NUM_DESCRIPTORS`].
pub fn compute_descriptors(graph: &MolGraph) -> Vec<f64> {
    let h_mass = 1.008;
    let mol_wt: f64 = graph
        .atoms
        .iter()
        .map(|a| a.mass() + h_mass * a.total_h() as f64)
        .sum();

    let heavy = graph.num_atoms() as f64;
    let rings = graph.ring_count() as f64;
    let aromatic_rings = aromatic_ring_count(graph) as f64;

    // Hydrogen-bond acceptor/donor heuristics: acceptors are N/O atoms,
    // donors are N/O atoms carrying at least one hydrogen.
    let mut acceptors = 0.0;
    let mut donors = 0.0;
    let mut charge_sum = 0.0;
    let mut halogens = 0.0;
    let mut carbons = 0.0;
    let mut sp3_carbons = 0.0;
    for (i, a) in graph.atoms.iter().enumerate() {
        if matches!(a.atomic_number, 7 | 8) {
            acceptors += 1.0;
            if a.total_h() > 0 {
                donors += 1.0;
            }
        }
        if is_halogen(a.atomic_number) {
            halogens += 1.0;
        }
        charge_sum += a.formal_charge as f64;
        if a.atomic_number == 6 {
            carbons += 1.0;
            if hybridization(graph, i) == Hybridization::Sp3 {
                sp3_carbons += 1.0;
            }
        }
    }
    let fraction_csp3 = if carbons > 0.0 {
        sp3_carbons / carbons
    } else {
        0.0
    };

    let rotatable = graph
        .bonds
        .iter()
        .filter(|b| {
            b.order == BondOrder::Single
                && !b.in_ring
                && graph.atoms[b.begin].degree >= 2
                && graph.atoms[b.end].degree >= 2
        })
        .count() as f64;

    vec![
        mol_wt,
        heavy,
        rings,
        aromatic_rings,
        acceptors,
        donors,
        fraction_csp3,
        rotatable,
        charge_sum,
        halogens,
    ]
}

/// Ring count of the aromatic-only subgraph (cyclomatic number per
/// component), which matches the intuitive count for fused systems:
/// benzene 1, naphthalene 2, biphenyl 2.
fn aromatic_ring_count(graph: &MolGraph) -> usize {
    let n = graph.atoms.len();
    let aromatic_bonds: Vec<usize> = (0..graph.bonds.len())
        .filter(|&b| graph.bonds[b].order == BondOrder::Aromatic)
        .collect();
    if aromatic_bonds.is_empty() {
        return 0;
    }
    let mut in_sub = vec![false; n];
    for &b in &aromatic_bonds {
        in_sub[graph.bonds[b].begin] = true;
        in_sub[graph.bonds[b].end] = true;
    }
    let sub_atoms = in_sub.iter().filter(|&&x| x).count();

    // Component count of the aromatic subgraph.
    let mut seen = vec![false; n];
    let mut components = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if !in_sub[start] || seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(v) = stack.pop() {
            for &(w, b) in &graph.adjacency[v] {
                if graph.bonds[b].order == BondOrder::Aromatic && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    aromatic_bonds.len() + components - sub_atoms
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    #[test]
    fn methane() {
        let g = parse_smiles("C").unwrap();
        let d = compute_descriptors(&g);
        assert_eq!(d.len(), NUM_DESCRIPTORS);
        assert!((d[0] - 16.043).abs() < 1e-3); // MolWt
        assert_eq!(d[1], 1.0); // heavy atoms
        assert_eq!(d[2], 0.0); // rings
        assert_eq!(d[6], 1.0); // fraction Csp3
    }

    #[test]
    fn benzene() {
        let g = parse_smiles("c1ccccc1").unwrap();
        let d = compute_descriptors(&g);
        assert_eq!(d[2], 1.0);
        assert_eq!(d[3], 1.0);
        assert_eq!(d[6], 0.0);
    }

    #[test]
    fn ethanol_donor_acceptor() {
        let g = parse_smiles("CCO").unwrap();
        let d = compute_descriptors(&g);
        assert_eq!(d[4], 1.0); // acceptors
        assert_eq!(d[5], 1.0); // donors
        assert_eq!(d[7], 0.0); // both bonds touch a terminal atom
    }

    #[test]
    fn aromatic_ring_counts() {
        let naphthalene = parse_smiles("c1ccc2ccccc2c1").unwrap();
        assert_eq!(compute_descriptors(&naphthalene)[3], 2.0);
        let biphenyl = parse_smiles("c1ccccc1-c1ccccc1").unwrap();
        assert_eq!(compute_descriptors(&biphenyl)[3], 2.0);
    }

    #[test]
    fn halogens_and_charge() {
        let g = parse_smiles("FC(Cl)(Br)I").unwrap();
        let d = compute_descriptors(&g);
        assert_eq!(d[9], 4.0);
        let g = parse_smiles("[NH4+].[Cl-]").unwrap();
        let d = compute_descriptors(&g);
        assert_eq!(d[8], 0.0); // +1 and -1 cancel
    }

    #[test]
    fn rotatable_bond_rule() {
        // Butane: only the central C-C bond has both ends of degree >= 2.
        let g = parse_smiles("CCCC").unwrap();
        assert_eq!(compute_descriptors(&g)[7], 1.0);
        // Cyclohexane: ring bonds are not rotatable.
        let g = parse_smiles("C1CCCCC1").unwrap();
        assert_eq!(compute_descriptors(&g)[7], 0.0);
    }
}
