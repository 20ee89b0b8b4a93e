//! Murcko scaffolds and their canonical keys.
//!
//! The scaffold of a molecule is what remains after iteratively deleting
//! terminal (degree-1, non-ring) atoms: ring systems plus the linkers that
//! connect them. Acyclic molecules reduce to the empty scaffold.
//!
//! Keys are a private canonical form used only for grouping molecules during
//! scaffold splits; they are not interchange SMILES. Canonical order comes
//! from iterative neighborhood refinement with deterministic tie-breaking,
//! so any SMILES spelling of the same scaffold maps to the same key.

use super::{Atom, Bond, BondOrder, MolGraph};
use crate::rng::hash_words;

/// Canonical scaffold identifier. Empty for acyclic molecules.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScaffoldKey(pub String);

impl ScaffoldKey {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// The scaffold as a graph: the input with all side chains pruned away.
/// Atom fields other than connectivity are carried over unchanged.
pub fn murcko_scaffold_graph(graph: &MolGraph) -> MolGraph {
    let n = graph.atoms.len();
    let mut alive = vec![true; n];
    let mut degree: Vec<usize> = graph.adjacency.iter().map(|a| a.len()).collect();

    let mut queue: Vec<usize> = (0..n)
        .filter(|&v| degree[v] <= 1 && !graph.atoms[v].in_ring)
        .collect();
    while let Some(v) = queue.pop() {
        if !alive[v] || degree[v] > 1 || graph.atoms[v].in_ring {
            continue;
        }
        alive[v] = false;
        for &(w, _) in &graph.adjacency[v] {
            if alive[w] {
                degree[w] -= 1;
                if degree[w] <= 1 && !graph.atoms[w].in_ring {
                    queue.push(w);
                }
            }
        }
    }

    let mut remap = vec![usize::MAX; n];
    let mut atoms: Vec<Atom> = Vec::new();
    for v in 0..n {
        if alive[v] {
            remap[v] = atoms.len();
            atoms.push(graph.atoms[v].clone());
        }
    }
    let mut bonds: Vec<Bond> = Vec::new();
    for bond in &graph.bonds {
        if alive[bond.begin] && alive[bond.end] {
            let mut b = bond.clone();
            b.begin = remap[bond.begin];
            b.end = remap[bond.end];
            bonds.push(b);
        }
    }
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); atoms.len()];
    for (i, b) in bonds.iter().enumerate() {
        adjacency[b.begin].push((b.end, i));
        adjacency[b.end].push((b.begin, i));
    }
    for (i, atom) in atoms.iter_mut().enumerate() {
        atom.degree = adjacency[i].len() as u8;
    }
    MolGraph {
        atoms,
        bonds,
        adjacency,
    }
}

/// Canonical key of the Murcko scaffold.
pub fn murcko_scaffold(graph: &MolGraph) -> ScaffoldKey {
    let scaffold = murcko_scaffold_graph(graph);
    ScaffoldKey(canonical_key(&scaffold))
}

fn bond_code(order: BondOrder) -> u64 {
    match order {
        BondOrder::Single => 1,
        BondOrder::Double => 2,
        BondOrder::Triple => 3,
        BondOrder::Aromatic => 4,
    }
}

/// Seed invariant per atom. Hydrogen counts are deliberately excluded so a
/// substituted ring atom matches its unsubstituted counterpart once the
/// substituent is pruned.
fn seed_invariant(graph: &MolGraph, v: usize) -> u64 {
    let a = &graph.atoms[v];
    let mut orders: Vec<u64> = graph.adjacency[v]
        .iter()
        .map(|&(_, b)| bond_code(graph.bonds[b].order))
        .collect();
    orders.sort_unstable();
    let mut words = vec![
        a.atomic_number as u64,
        a.aromatic as u64,
        (a.formal_charge as i64) as u64,
        a.degree as u64,
    ];
    words.extend(orders);
    hash_words(&words)
}

/// Ranks atoms by iterative neighborhood refinement; remaining ties are
/// broken by promoting one member of the first tied class and re-refining.
fn canonical_ranks(graph: &MolGraph) -> Vec<usize> {
    let n = graph.atoms.len();
    let mut inv: Vec<u64> = (0..n).map(|v| seed_invariant(graph, v)).collect();

    let refine = |inv: &mut Vec<u64>| {
        loop {
            let classes = count_classes(inv);
            let mut next = vec![0u64; n];
            for v in 0..n {
                let mut neigh: Vec<u64> = graph.adjacency[v]
                    .iter()
                    .map(|&(w, b)| hash_words(&[bond_code(graph.bonds[b].order), inv[w]]))
                    .collect();
                neigh.sort_unstable();
                let mut words = vec![inv[v]];
                words.extend(neigh);
                next[v] = hash_words(&words);
            }
            *inv = next;
            if count_classes(inv) == classes {
                break;
            }
        }
    };

    refine(&mut inv);
    // Tie break: bump the lexicographically-first member of the smallest
    // tied invariant value, chosen by invariant rather than input index so
    // the result is independent of atom order.
    loop {
        let mut sorted: Vec<u64> = inv.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() == n {
            break;
        }
        let tied = *sorted
            .iter()
            .find(|&&val| inv.iter().filter(|&&x| x == val).count() > 1)
            .unwrap();
        // All members of the tied class are structurally equivalent as far
        // as refinement can tell; promote one deterministically.
        let v = (0..n).find(|&v| inv[v] == tied).unwrap();
        inv[v] = hash_words(&[inv[v], u64::MAX]);
        refine(&mut inv);
    }

    // Dense ranks in invariant order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| inv[v]);
    let mut rank = vec![0usize; n];
    for (r, &v) in order.iter().enumerate() {
        rank[v] = r;
    }
    rank
}

fn count_classes(inv: &[u64]) -> usize {
    let mut s: Vec<u64> = inv.to_vec();
    s.sort_unstable();
    s.dedup();
    s.len()
}

/// Serialize a graph under canonical ranks: atom descriptors in rank order,
/// then the sorted edge list.
fn canonical_key(graph: &MolGraph) -> String {
    if graph.atoms.is_empty() {
        return String::new();
    }
    let rank = canonical_ranks(graph);
    let mut by_rank: Vec<usize> = (0..graph.atoms.len()).collect();
    by_rank.sort_by_key(|&v| rank[v]);

    let mut out = String::new();
    for &v in &by_rank {
        let a = &graph.atoms[v];
        out.push_str(&format!(
            "{}{}{};",
            super::elements::symbol(a.atomic_number),
            if a.aromatic { "a" } else { "" },
            if a.formal_charge != 0 {
                format!("{:+}", a.formal_charge)
            } else {
                String::new()
            }
        ));
    }
    out.push('|');
    let mut edges: Vec<(usize, usize, u64)> = graph
        .bonds
        .iter()
        .map(|b| {
            let (x, y) = (rank[b.begin], rank[b.end]);
            (x.min(y), x.max(y), bond_code(b.order))
        })
        .collect();
    edges.sort_unstable();
    for (x, y, c) in edges {
        out.push_str(&format!("{}-{}:{};", x, y, c));
    }
    out
}
