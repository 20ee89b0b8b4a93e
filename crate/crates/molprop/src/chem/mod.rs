//! Molecular graphs parsed from SMILES.
//!
//! The parser covers the organic subset plus bracket atoms, charges, ring
//! closures (including `%nn`), branches, disconnected fragments, directional
//! bonds, and tetrahedral chirality marks. Aromaticity is taken from the
//! notation (lowercase atoms, `:` bonds) with a ring-membership check rather
//! than re-perceived from scratch. Isotope labels are parsed and ignored.

mod elements;
mod scaffold;
mod smiles;

pub use elements::{atomic_number, in_organic_subset, is_halogen, mass, symbol};
pub use scaffold::{murcko_scaffold, murcko_scaffold_graph, ScaffoldKey};
pub use smiles::parse_smiles;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("empty SMILES string")]
    EmptyInput,
    #[error("unmatched ring-closure label {0}")]
    UnbalancedRing(u16),
    #[error("unbalanced parentheses")]
    UnbalancedParen,
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("valence of {valence} exceeds maximum {max} for {symbol} (atom {atom})")]
    ValenceError {
        atom: usize,
        symbol: &'static str,
        valence: u8,
        max: u8,
    },
    #[error("unsupported SMILES feature `{0}`")]
    UnsupportedFeature(String),
    #[error("malformed SMILES: {0}")]
    Syntax(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chirality {
    Unspecified,
    /// `@@` (clockwise looking from the first neighbor).
    Cw,
    /// `@` (counter-clockwise).
    Ccw,
    /// Extended classes (`@TH1`, `@AL2`, ...) we carry but do not interpret.
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to the valence sum for implicit-H counting. Aromatic
    /// bonds count 1 here; the aromatic ring bonus is added separately.
    pub fn valence(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondStereo {
    None,
    Any,
    E,
    Z,
    Cis,
    Trans,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub atomic_number: u8,
    pub formal_charge: i8,
    pub aromatic: bool,
    /// Hydrogen count given explicitly in brackets; `None` for organic-subset
    /// atoms, whose hydrogens are implied by the valence model.
    pub explicit_h: Option<u8>,
    pub implicit_h: u8,
    pub chirality: Chirality,
    /// Number of heavy-atom bonds.
    pub degree: u8,
    pub in_ring: bool,
    /// Parsed isotope label, unused downstream.
    pub isotope: Option<u16>,
}

impl Atom {
    pub fn total_h(&self) -> u8 {
        self.explicit_h.unwrap_or(0) + self.implicit_h
    }

    pub fn mass(&self) -> f64 {
        elements::mass(self.atomic_number)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bond {
    pub begin: usize,
    pub end: usize,
    pub order: BondOrder,
    pub conjugated: bool,
    pub in_ring: bool,
    pub stereo: BondStereo,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if atom == self.begin {
            self.end
        } else {
            self.begin
        }
    }
}

/// A parsed molecule: heavy atoms, bonds, and a symmetric adjacency list.
/// Multi-fragment inputs (`.` in SMILES) stay in one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct MolGraph {
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
    /// Per atom: `(neighbor atom index, bond index)` pairs.
    pub adjacency: Vec<Vec<(usize, usize)>>,
}

impl MolGraph {
    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn num_bonds(&self) -> usize {
        self.bonds.len()
    }

    pub fn total_h(&self) -> u32 {
        self.atoms.iter().map(|a| a.total_h() as u32).sum()
    }

    /// Number of connected components over heavy atoms.
    pub fn num_components(&self) -> usize {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &(w, _) in &self.adjacency[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }

    /// Smallest-set-of-smallest-rings count via the cyclomatic number.
    pub fn ring_count(&self) -> usize {
        self.bonds.len() + self.num_components() - self.atoms.len()
    }
}

/// Mark atoms and bonds that lie on at least one cycle. A bond is in a ring
/// iff it is not a bridge; an atom is in a ring iff some incident bond is.
pub fn find_rings(graph: &mut MolGraph) {
    let n = graph.atoms.len();
    for atom in &mut graph.atoms {
        atom.in_ring = false;
    }
    for bond in &mut graph.bonds {
        bond.in_ring = false;
    }
    if n == 0 {
        return;
    }

    // Iterative bridge detection (Tarjan low-link over an explicit stack).
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut timer = 0usize;
    let mut is_bridge = vec![false; graph.bonds.len()];

    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // Stack frames: (vertex, parent bond, next adjacency index).
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(frame) = stack.last_mut() {
            let (v, pbond) = (frame.0, frame.1);
            if frame.2 < graph.adjacency[v].len() {
                let (w, b) = graph.adjacency[v][frame.2];
                frame.2 += 1;
                if b == pbond {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    stack.push((w, b, 0));
                } else {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(parent) = stack.last_mut() {
                    let u = parent.0;
                    low[u] = low[u].min(low[v]);
                    if low[v] > disc[u] {
                        is_bridge[pbond] = true;
                    }
                }
            }
        }
    }

    for (i, bond) in graph.bonds.iter_mut().enumerate() {
        if !is_bridge[i] {
            bond.in_ring = true;
            graph.atoms[bond.begin].in_ring = true;
            graph.atoms[bond.end].in_ring = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_chain_has_no_rings() {
        let g = parse_smiles("CCC").unwrap();
        assert!(g.atoms.iter().all(|a| !a.in_ring));
        assert!(g.bonds.iter().all(|b| !b.in_ring));
        assert_eq!(g.ring_count(), 0);
    }

    #[test]
    fn triangle_is_all_ring() {
        let g = parse_smiles("C1CC1").unwrap();
        assert_eq!(g.num_atoms(), 3);
        assert_eq!(g.num_bonds(), 3);
        assert!(g.atoms.iter().all(|a| a.in_ring));
        assert!(g.bonds.iter().all(|b| b.in_ring));
        assert_eq!(g.ring_count(), 1);
    }

    #[test]
    fn pendant_chain_stays_out_of_ring() {
        let g = parse_smiles("C1CC1CC").unwrap();
        assert!(g.atoms[..3].iter().all(|a| a.in_ring));
        assert!(g.atoms[3..].iter().all(|a| !a.in_ring));
        let ring_bonds = g.bonds.iter().filter(|b| b.in_ring).count();
        assert_eq!(ring_bonds, 3);
    }

    #[test]
    fn fused_rings_count() {
        // Naphthalene: 10 atoms, 11 bonds, 2 rings.
        let g = parse_smiles("c1ccc2ccccc2c1").unwrap();
        assert_eq!(g.num_atoms(), 10);
        assert_eq!(g.num_bonds(), 11);
        assert_eq!(g.ring_count(), 2);
        assert!(g.atoms.iter().all(|a| a.in_ring));
    }
}
