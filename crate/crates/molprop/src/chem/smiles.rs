//! SMILES string → [`MolGraph`].

use super::elements;
use super::{find_rings, Atom, Bond, BondOrder, BondStereo, Chirality, MolGraph, ParseError};

/// Direction mark on a single bond, read from the bond's begin atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Up,   // `/`
    Down, // `\`
}

impl Direction {
    fn flip(self) -> Direction {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }
}

/// Bond order as written, before aromatic resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum WrittenOrder {
    Unspecified,
    Single,
    Double,
    Triple,
    AromaticColon,
}

#[derive(Debug, Clone, Copy)]
struct PendingBond {
    order: WrittenOrder,
    direction: Option<Direction>,
}

impl PendingBond {
    fn none() -> Self {
        PendingBond {
            order: WrittenOrder::Unspecified,
            direction: None,
        }
    }
    fn is_set(&self) -> bool {
        self.order != WrittenOrder::Unspecified || self.direction.is_some()
    }
}

struct RawBond {
    begin: usize,
    end: usize,
    order: WrittenOrder,
    /// Direction read from `begin` toward `end`.
    direction: Option<Direction>,
}

struct Parser<'a> {
    input: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    bonds: Vec<RawBond>,
    /// Open branch stack of atom indices.
    branch_stack: Vec<usize>,
    last_atom: Option<usize>,
    pending: PendingBond,
    /// Ring-closure label → (atom, pending bond at the opening site).
    open_rings: Vec<(u16, usize, PendingBond)>,
}

/// Parse a SMILES string into a molecular graph with rings perceived,
/// implicit hydrogens counted, and double-bond stereo resolved where a
/// single directional bond flanks each side.
pub fn parse_smiles(input: &str) -> Result<MolGraph, ParseError> {
    let trimmed = input.trim();
    if trimmed.is_empty() {
        return Err(ParseError::EmptyInput);
    }
    let mut parser = Parser {
        input: trimmed.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        branch_stack: Vec::new(),
        last_atom: None,
        pending: PendingBond::none(),
        open_rings: Vec::new(),
    };
    parser.run()?;
    parser.finish()
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.input.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn run(&mut self) -> Result<(), ParseError> {
        while let Some(c) = self.peek() {
            match c {
                b'(' => {
                    self.pos += 1;
                    let anchor = self.last_atom.ok_or_else(|| {
                        ParseError::Syntax("branch before any atom".into())
                    })?;
                    if self.pending.is_set() {
                        return Err(ParseError::Syntax("bond symbol before `(`".into()));
                    }
                    self.branch_stack.push(anchor);
                }
                b')' => {
                    self.pos += 1;
                    if self.pending.is_set() {
                        return Err(ParseError::Syntax("dangling bond before `)`".into()));
                    }
                    let anchor = self.branch_stack.pop().ok_or(ParseError::UnbalancedParen)?;
                    self.last_atom = Some(anchor);
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    self.pos += 1;
                    if self.pending.is_set() {
                        return Err(ParseError::Syntax("two bond symbols in a row".into()));
                    }
                    self.pending = match c {
                        b'-' => PendingBond {
                            order: WrittenOrder::Single,
                            direction: None,
                        },
                        b'=' => PendingBond {
                            order: WrittenOrder::Double,
                            direction: None,
                        },
                        b'#' => PendingBond {
                            order: WrittenOrder::Triple,
                            direction: None,
                        },
                        b':' => PendingBond {
                            order: WrittenOrder::AromaticColon,
                            direction: None,
                        },
                        b'/' => PendingBond {
                            order: WrittenOrder::Single,
                            direction: Some(Direction::Up),
                        },
                        _ => PendingBond {
                            order: WrittenOrder::Single,
                            direction: Some(Direction::Down),
                        },
                    };
                }
                b'.' => {
                    self.pos += 1;
                    if self.pending.is_set() {
                        return Err(ParseError::Syntax("bond symbol before `.`".into()));
                    }
                    self.last_atom = None;
                }
                b'0'..=b'9' => {
                    self.pos += 1;
                    self.ring_closure((c - b'0') as u16)?;
                }
                b'%' => {
                    self.pos += 1;
                    let d1 = self.bump();
                    let d2 = self.bump();
                    match (d1, d2) {
                        (Some(a), Some(b)) if a.is_ascii_digit() && b.is_ascii_digit() => {
                            self.ring_closure(((a - b'0') as u16) * 10 + (b - b'0') as u16)?
                        }
                        _ => {
                            return Err(ParseError::Syntax(
                                "`%` must be followed by two digits".into(),
                            ))
                        }
                    }
                }
                b'[' => {
                    self.pos += 1;
                    let atom = self.parse_bracket_atom()?;
                    self.add_atom(atom)?;
                }
                b'*' => return Err(ParseError::UnsupportedFeature("*".into())),
                b'>' => return Err(ParseError::UnsupportedFeature(">".into())),
                b'$' | b'~' => {
                    return Err(ParseError::UnsupportedFeature(
                        String::from_utf8_lossy(&[c]).into_owned(),
                    ))
                }
                _ if c.is_ascii_whitespace() => {
                    return Err(ParseError::Syntax("embedded whitespace".into()))
                }
                _ => {
                    let atom = self.parse_plain_atom()?;
                    self.add_atom(atom)?;
                }
            }
        }
        Ok(())
    }

    /// Organic-subset atom written without brackets.
    fn parse_plain_atom(&mut self) -> Result<Atom, ParseError> {
        let c = self.bump().expect("caller checked");
        // Two-letter symbols first: only Cl and Br are legal bare.
        if c == b'C' && self.peek() == Some(b'l') {
            self.pos += 1;
            return Ok(plain_atom(17, false));
        }
        if c == b'B' && self.peek() == Some(b'r') {
            self.pos += 1;
            return Ok(plain_atom(35, false));
        }
        let (z, aromatic) = match c {
            b'B' => (5, false),
            b'C' => (6, false),
            b'N' => (7, false),
            b'O' => (8, false),
            b'P' => (15, false),
            b'S' => (16, false),
            b'F' => (9, false),
            b'I' => (53, false),
            b'b' => (5, true),
            b'c' => (6, true),
            b'n' => (7, true),
            b'o' => (8, true),
            b'p' => (15, true),
            b's' => (16, true),
            _ => {
                return Err(ParseError::UnknownElement(
                    String::from_utf8_lossy(&[c]).into_owned(),
                ))
            }
        };
        Ok(plain_atom(z, aromatic))
    }

    /// `[isotope? symbol chirality? Hcount? charge? class?]`
    fn parse_bracket_atom(&mut self) -> Result<Atom, ParseError> {
        let mut isotope: Option<u16> = None;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                let v = isotope.unwrap_or(0) * 10 + (c - b'0') as u16;
                isotope = Some(v);
                self.pos += 1;
            } else {
                break;
            }
        }

        let (z, aromatic) = self.parse_bracket_symbol()?;

        let mut chirality = Chirality::Unspecified;
        if self.peek() == Some(b'@') {
            self.pos += 1;
            let two = [
                self.peek().unwrap_or(0),
                self.input.get(self.pos + 1).copied().unwrap_or(0),
            ];
            if self.peek() == Some(b'@') {
                self.pos += 1;
                chirality = Chirality::Cw;
            } else if matches!(&two, b"TH" | b"AL" | b"SP" | b"TB" | b"OH") {
                // Extended class like @TH1, @AL2, @OH12: two letters + digits.
                self.pos += 2;
                while self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
                    self.pos += 1;
                }
                chirality = Chirality::Other;
            } else {
                chirality = Chirality::Ccw;
            }
        }

        let mut explicit_h: u8 = 0;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            explicit_h = 1;
            if let Some(c) = self.peek() {
                if c.is_ascii_digit() {
                    self.pos += 1;
                    explicit_h = c - b'0';
                }
            }
        }

        let mut charge: i8 = 0;
        match self.peek() {
            Some(b'+') | Some(b'-') => {
                let sign: i8 = if self.peek() == Some(b'+') { 1 } else { -1 };
                let mark = self.bump().unwrap();
                let mut magnitude: i8 = 1;
                if let Some(c) = self.peek() {
                    if c.is_ascii_digit() {
                        self.pos += 1;
                        magnitude = (c - b'0') as i8;
                    } else {
                        while self.peek() == Some(mark) {
                            self.pos += 1;
                            magnitude += 1;
                        }
                    }
                }
                charge = sign * magnitude;
            }
            _ => {}
        }

        // Atom class, parsed and discarded.
        if self.peek() == Some(b':') {
            self.pos += 1;
            let mut saw_digit = false;
            while self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
                self.pos += 1;
                saw_digit = true;
            }
            if !saw_digit {
                return Err(ParseError::Syntax("atom class without digits".into()));
            }
        }

        if self.bump() != Some(b']') {
            return Err(ParseError::Syntax("unterminated bracket atom".into()));
        }

        Ok(Atom {
            atomic_number: z,
            formal_charge: charge,
            aromatic,
            explicit_h: Some(explicit_h),
            implicit_h: 0,
            chirality,
            degree: 0,
            in_ring: false,
            isotope,
        })
    }

    fn parse_bracket_symbol(&mut self) -> Result<(u8, bool), ParseError> {
        let c = self
            .bump()
            .ok_or_else(|| ParseError::Syntax("empty bracket atom".into()))?;
        if c == b'*' {
            return Err(ParseError::UnsupportedFeature("*".into()));
        }
        if c.is_ascii_lowercase() {
            // Aromatic symbols: c, n, o, p, s, b, se, as.
            let two = if matches!(c, b's' | b'a') {
                self.peek().filter(|&d| d == b'e' || d == b's')
            } else {
                None
            };
            let (z, consumed) = match (c, two) {
                (b's', Some(b'e')) => (34, true),
                (b'a', Some(b's')) => (33, true),
                (b'b', _) => (5, false),
                (b'c', _) => (6, false),
                (b'n', _) => (7, false),
                (b'o', _) => (8, false),
                (b'p', _) => (15, false),
                (b's', _) => (16, false),
                _ => {
                    return Err(ParseError::UnknownElement(
                        String::from_utf8_lossy(&[c]).into_owned(),
                    ))
                }
            };
            if consumed {
                self.pos += 1;
            }
            return Ok((z, true));
        }
        if !c.is_ascii_uppercase() {
            return Err(ParseError::Syntax("expected element symbol".into()));
        }
        // Greedy two-letter match, falling back to one letter.
        if let Some(d) = self.peek().filter(|d| d.is_ascii_lowercase()) {
            let sym = String::from_utf8_lossy(&[c, d]).into_owned();
            if let Some(z) = elements::atomic_number(&sym) {
                self.pos += 1;
                return Ok((z, false));
            }
        }
        let sym = String::from_utf8_lossy(&[c]).into_owned();
        match elements::atomic_number(&sym) {
            Some(z) => Ok((z, false)),
            None => Err(ParseError::UnknownElement(sym)),
        }
    }

    fn add_atom(&mut self, atom: Atom) -> Result<(), ParseError> {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        if let Some(prev) = self.last_atom {
            let pending = std::mem::replace(&mut self.pending, PendingBond::none());
            self.bonds.push(RawBond {
                begin: prev,
                end: idx,
                order: pending.order,
                direction: pending.direction,
            });
        } else if self.pending.is_set() {
            return Err(ParseError::Syntax("bond with no preceding atom".into()));
        }
        self.last_atom = Some(idx);
        Ok(())
    }

    fn ring_closure(&mut self, label: u16) -> Result<(), ParseError> {
        let atom = self
            .last_atom
            .ok_or_else(|| ParseError::Syntax("ring closure before any atom".into()))?;
        let pending = std::mem::replace(&mut self.pending, PendingBond::none());

        if let Some(pos) = self.open_rings.iter().position(|&(l, _, _)| l == label) {
            let (_, open_atom, open_pending) = self.open_rings.swap_remove(pos);
            if open_atom == atom {
                return Err(ParseError::Syntax("ring closure to the same atom".into()));
            }
            if self
                .bonds
                .iter()
                .any(|b| (b.begin == open_atom && b.end == atom) || (b.begin == atom && b.end == open_atom))
            {
                return Err(ParseError::Syntax("duplicate bond via ring closure".into()));
            }
            let order = match (open_pending.order, pending.order) {
                (WrittenOrder::Unspecified, o) | (o, WrittenOrder::Unspecified) => o,
                (a, b) if a == b => a,
                _ => {
                    return Err(ParseError::Syntax(
                        "conflicting bond orders on ring closure".into(),
                    ))
                }
            };
            // A direction written at the closing site reads from the closing
            // atom; flip it so the stored direction reads from `open_atom`.
            let direction = match (open_pending.direction, pending.direction) {
                (None, None) => None,
                (Some(d), None) => Some(d),
                (None, Some(d)) => Some(d.flip()),
                (Some(a), Some(b)) => {
                    if a == b.flip() {
                        Some(a)
                    } else {
                        return Err(ParseError::Syntax(
                            "conflicting bond directions on ring closure".into(),
                        ));
                    }
                }
            };
            self.bonds.push(RawBond {
                begin: open_atom,
                end: atom,
                order,
                direction,
            });
        } else {
            self.open_rings.push((label, atom, pending));
        }
        Ok(())
    }

    fn finish(self) -> Result<MolGraph, ParseError> {
        if let Some(&(label, _, _)) = self.open_rings.first() {
            return Err(ParseError::UnbalancedRing(label));
        }
        if !self.branch_stack.is_empty() {
            return Err(ParseError::UnbalancedParen);
        }
        if self.pending.is_set() {
            return Err(ParseError::Syntax("trailing bond symbol".into()));
        }

        let Parser {
            mut atoms,
            bonds: raw_bonds,
            ..
        } = self;

        // Materialize bonds with placeholder orders, then perceive rings so
        // aromatic resolution can consult ring membership.
        let bonds: Vec<Bond> = raw_bonds
            .iter()
            .map(|rb| Bond {
                begin: rb.begin,
                end: rb.end,
                order: match rb.order {
                    WrittenOrder::Double => BondOrder::Double,
                    WrittenOrder::Triple => BondOrder::Triple,
                    _ => BondOrder::Single,
                },
                conjugated: false,
                in_ring: false,
                stereo: BondStereo::None,
            })
            .collect();

        let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); atoms.len()];
        for (i, b) in bonds.iter().enumerate() {
            adjacency[b.begin].push((b.end, i));
            adjacency[b.end].push((b.begin, i));
        }
        for (i, atom) in atoms.iter_mut().enumerate() {
            atom.degree = adjacency[i].len() as u8;
        }

        let mut graph = MolGraph {
            atoms,
            bonds,
            adjacency,
        };
        find_rings(&mut graph);

        // Aromatic resolution from notation + ring membership.
        for (i, rb) in raw_bonds.iter().enumerate() {
            let in_ring = graph.bonds[i].in_ring;
            match rb.order {
                WrittenOrder::Unspecified => {
                    if in_ring
                        && graph.atoms[rb.begin].aromatic
                        && graph.atoms[rb.end].aromatic
                    {
                        graph.bonds[i].order = BondOrder::Aromatic;
                    }
                }
                WrittenOrder::AromaticColon => {
                    if in_ring {
                        graph.bonds[i].order = BondOrder::Aromatic;
                        graph.atoms[rb.begin].aromatic = true;
                        graph.atoms[rb.end].aromatic = true;
                    }
                }
                _ => {}
            }
        }
        // An atom written lowercase that ended up with no aromatic bond is
        // not part of an aromatic system; clear the flag.
        for i in 0..graph.atoms.len() {
            if graph.atoms[i].aromatic {
                let has_aromatic_bond = graph.adjacency[i]
                    .iter()
                    .any(|&(_, b)| graph.bonds[b].order == BondOrder::Aromatic);
                if !has_aromatic_bond {
                    graph.atoms[i].aromatic = false;
                }
            }
        }

        normalize_hypervalent_nitrogen(&mut graph);
        compute_implicit_hydrogens(&mut graph)?;
        perceive_conjugation(&mut graph);
        resolve_double_bond_stereo(&mut graph, &raw_bonds);

        Ok(graph)
    }
}

fn plain_atom(z: u8, aromatic: bool) -> Atom {
    Atom {
        atomic_number: z,
        formal_charge: 0,
        aromatic,
        explicit_h: None,
        implicit_h: 0,
        chirality: Chirality::Unspecified,
        degree: 0,
        in_ring: false,
        isotope: None,
    }
}

/// Datasets commonly spell nitro groups and azides in the neutral
/// hypervalent form (`N(=O)=O`, `N=N=N`). Rewrite those to the equivalent
/// charge-separated form so the valence model accepts them, mirroring what
/// mainstream toolkits do during sanitization.
fn normalize_hypervalent_nitrogen(graph: &mut MolGraph) {
    for i in 0..graph.atoms.len() {
        let a = &graph.atoms[i];
        if a.atomic_number != 7 || a.formal_charge != 0 || a.aromatic || a.explicit_h.is_some() {
            continue;
        }
        let bond_sum: u8 = graph.adjacency[i]
            .iter()
            .map(|&(_, b)| graph.bonds[b].order.valence())
            .sum();
        if bond_sum == 5 {
            // Nitro: demote one N=O to N(+)-O(-).
            let target = graph.adjacency[i].iter().copied().find(|&(w, b)| {
                graph.bonds[b].order == BondOrder::Double
                    && graph.atoms[w].atomic_number == 8
                    && graph.atoms[w].formal_charge == 0
                    && graph.atoms[w].degree == 1
            });
            if let Some((w, b)) = target {
                graph.bonds[b].order = BondOrder::Single;
                graph.atoms[w].formal_charge = -1;
                graph.atoms[i].formal_charge = 1;
            }
        } else if bond_sum == 4 {
            // Azide-style cumulated nitrogen: N=N=N → N=[N+]=[N-].
            let doubles: Vec<(usize, usize)> = graph.adjacency[i]
                .iter()
                .copied()
                .filter(|&(_, b)| graph.bonds[b].order == BondOrder::Double)
                .collect();
            if doubles.len() == 2 {
                let terminal = doubles.iter().copied().find(|&(w, _)| {
                    graph.atoms[w].atomic_number == 7
                        && graph.atoms[w].formal_charge == 0
                        && graph.atoms[w].degree == 1
                });
                if let Some((w, _)) = terminal {
                    graph.atoms[i].formal_charge = 1;
                    graph.atoms[w].formal_charge = -1;
                }
            }
        }
    }
}

/// Allowed valences adjusted for formal charge. Only N and O need the
/// adjustment in practice: the charges introduced by hypervalent-nitrogen
/// normalization.
fn charged_valences(z: u8, charge: i8) -> Option<[u8; 1]> {
    match (z, charge) {
        (7, 1) => Some([4]),
        (7, -1) => Some([2]),
        (8, 1) => Some([3]),
        (8, -1) => Some([1]),
        _ => None,
    }
}

/// Organic-subset valence model. Bracket atoms take their written H count
/// and get nothing implicit. Aromatic atoms count each aromatic bond as one
/// plus a single aromatic-system bonus, and are floored at zero instead of
/// erroring (five-membered heteroaromatics legitimately exceed the sum).
fn compute_implicit_hydrogens(graph: &mut MolGraph) -> Result<(), ParseError> {
    for i in 0..graph.atoms.len() {
        if graph.atoms[i].explicit_h.is_some() {
            continue;
        }
        let bond_sum: u8 = graph.adjacency[i]
            .iter()
            .map(|&(_, b)| graph.bonds[b].order.valence())
            .sum();
        let atom = &graph.atoms[i];
        let charged = charged_valences(atom.atomic_number, atom.formal_charge);
        let valences: &[u8] = match &charged {
            Some(v) => v,
            None => elements::default_valences(atom.atomic_number),
        };
        if valences.is_empty() {
            continue;
        }
        if atom.aromatic {
            let used = bond_sum + 1;
            let base = valences[0];
            graph.atoms[i].implicit_h = base.saturating_sub(used);
        } else {
            let max = *valences.last().unwrap();
            if bond_sum > max {
                return Err(ParseError::ValenceError {
                    atom: i,
                    symbol: elements::symbol(atom.atomic_number),
                    valence: bond_sum,
                    max,
                });
            }
            let allowed = *valences.iter().find(|&&v| v >= bond_sum).unwrap();
            graph.atoms[i].implicit_h = allowed - bond_sum;
        }
    }
    Ok(())
}

/// Conjugation heuristic: aromatic bonds are conjugated; a single bond is
/// conjugated when one end carries a multiple bond and the other carries a
/// multiple bond or a lone-pair heteroatom; a multiple bond is conjugated
/// when it touches a conjugated single or aromatic bond.
fn perceive_conjugation(graph: &mut MolGraph) {
    let n = graph.atoms.len();
    let mut has_multiple = vec![false; n];
    for bond in &graph.bonds {
        if bond.order != BondOrder::Single {
            has_multiple[bond.begin] = true;
            has_multiple[bond.end] = true;
        }
    }
    let lone_pair: Vec<bool> = graph
        .atoms
        .iter()
        .map(|a| matches!(a.atomic_number, 7 | 8 | 15 | 16) && a.formal_charge <= 0)
        .collect();

    let mut conjugated = vec![false; graph.bonds.len()];
    for (i, bond) in graph.bonds.iter().enumerate() {
        match bond.order {
            BondOrder::Aromatic => conjugated[i] = true,
            BondOrder::Single => {
                let (u, v) = (bond.begin, bond.end);
                let uv = has_multiple[u] && (has_multiple[v] || lone_pair[v]);
                let vu = has_multiple[v] && (has_multiple[u] || lone_pair[u]);
                conjugated[i] = uv || vu;
            }
            _ => {}
        }
    }
    // Second pass: double/triple bonds adjacent to a conjugated bond.
    for (i, bond) in graph.bonds.iter().enumerate() {
        if matches!(bond.order, BondOrder::Double | BondOrder::Triple) {
            let touches = graph.adjacency[bond.begin]
                .iter()
                .chain(graph.adjacency[bond.end].iter())
                .any(|&(_, b)| b != i && conjugated[b]);
            conjugated[i] = touches;
        }
    }
    for (i, bond) in graph.bonds.iter_mut().enumerate() {
        bond.conjugated = conjugated[i];
    }
}

/// Assign E/Z to double bonds flanked by exactly one directional single bond
/// on each side. The geometry follows the usual up/down reading: substituents
/// whose marks place them on the same side give Z, opposite sides give E.
fn resolve_double_bond_stereo(graph: &mut MolGraph, raw_bonds: &[RawBond]) {
    // side_of(atom, bond) = +1 / -1 for the neighbor sitting up / down
    // relative to `atom`, if the bond is directional.
    let side_of = |atom: usize, raw: &RawBond| -> Option<i8> {
        let dir = raw.direction?;
        let up = match dir {
            Direction::Up => raw.end,
            Direction::Down => raw.begin,
        };
        // Direction reads begin→end: `/` puts end up relative to begin, and
        // begin down relative to end.
        if atom == raw.begin {
            Some(if up == raw.end { 1 } else { -1 })
        } else {
            Some(if up == raw.end { -1 } else { 1 })
        }
    };

    for i in 0..graph.bonds.len() {
        if graph.bonds[i].order != BondOrder::Double {
            continue;
        }
        let (u, v) = (graph.bonds[i].begin, graph.bonds[i].end);
        let mut side_u = Vec::new();
        for &(_, b) in &graph.adjacency[u] {
            if b != i {
                if let Some(s) = side_of(u, &raw_bonds[b]) {
                    side_u.push(s);
                }
            }
        }
        let mut side_v = Vec::new();
        for &(_, b) in &graph.adjacency[v] {
            if b != i {
                if let Some(s) = side_of(v, &raw_bonds[b]) {
                    side_v.push(s);
                }
            }
        }
        if side_u.len() == 1 && side_v.len() == 1 {
            graph.bonds[i].stereo = if side_u[0] == side_v[0] {
                BondStereo::Z
            } else {
                BondStereo::E
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn methane() {
        let g = parse_smiles("C").unwrap();
        assert_eq!(g.num_atoms(), 1);
        assert_eq!(g.num_bonds(), 0);
        assert_eq!(g.atoms[0].implicit_h, 4);
    }

    #[test]
    fn benzene() {
        let g = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(g.num_atoms(), 6);
        assert_eq!(g.num_bonds(), 6);
        for a in &g.atoms {
            assert!(a.aromatic);
            assert!(a.in_ring);
            assert_eq!(a.implicit_h, 1);
        }
        for b in &g.bonds {
            assert_eq!(b.order, BondOrder::Aromatic);
            assert!(b.in_ring);
            assert!(b.conjugated);
        }
    }

    #[test]
    fn formic_acid() {
        let g = parse_smiles("C(=O)O").unwrap();
        assert_eq!(g.num_atoms(), 3);
        let orders: Vec<_> = g.bonds.iter().map(|b| b.order).collect();
        assert_eq!(orders, vec![BondOrder::Double, BondOrder::Single]);
        let hs: Vec<_> = g.atoms.iter().map(|a| a.implicit_h).collect();
        assert_eq!(hs, vec![1, 0, 1]);
    }

    #[test]
    fn ammonium() {
        let g = parse_smiles("[NH4+]").unwrap();
        assert_eq!(g.num_atoms(), 1);
        assert_eq!(g.atoms[0].formal_charge, 1);
        assert_eq!(g.atoms[0].explicit_h, Some(4));
        assert_eq!(g.atoms[0].implicit_h, 0);
        assert_eq!(g.atoms[0].total_h(), 4);
    }

    #[test]
    fn charges_and_isotopes() {
        let g = parse_smiles("[13CH3-]").unwrap();
        assert_eq!(g.atoms[0].isotope, Some(13));
        assert_eq!(g.atoms[0].formal_charge, -1);
        assert_eq!(g.atoms[0].explicit_h, Some(3));
        let g = parse_smiles("[Fe+2]").unwrap();
        assert_eq!(g.atoms[0].atomic_number, 26);
        assert_eq!(g.atoms[0].formal_charge, 2);
        let g = parse_smiles("[O--]").unwrap();
        assert_eq!(g.atoms[0].formal_charge, -2);
    }

    #[test]
    fn branches_and_ring_labels() {
        let g = parse_smiles("CC(C)(C)C").unwrap();
        assert_eq!(g.num_atoms(), 5);
        assert_eq!(g.atoms[1].degree, 4);
        assert_eq!(g.atoms[1].implicit_h, 0);

        let g = parse_smiles("C%12CC%12").unwrap();
        assert_eq!(g.num_bonds(), 3);
        assert!(g.atoms.iter().all(|a| a.in_ring));
    }

    #[test]
    fn fragments() {
        let g = parse_smiles("[Na+].[Cl-]").unwrap();
        assert_eq!(g.num_atoms(), 2);
        assert_eq!(g.num_bonds(), 0);
        assert_eq!(g.num_components(), 2);
    }

    #[test]
    fn pyridine_and_pyrrole_hydrogens() {
        let g = parse_smiles("c1ccncc1").unwrap();
        let n = g.atoms.iter().find(|a| a.atomic_number == 7).unwrap();
        assert_eq!(n.implicit_h, 0);

        let g = parse_smiles("c1cc[nH]c1").unwrap();
        let n = g.atoms.iter().find(|a| a.atomic_number == 7).unwrap();
        assert_eq!(n.total_h(), 1);

        let g = parse_smiles("c1ccoc1").unwrap();
        let o = g.atoms.iter().find(|a| a.atomic_number == 8).unwrap();
        assert_eq!(o.implicit_h, 0);
    }

    #[test]
    fn stereo_marks() {
        let g = parse_smiles("F/C=C/F").unwrap();
        let dbl = g.bonds.iter().find(|b| b.order == BondOrder::Double).unwrap();
        assert_eq!(dbl.stereo, BondStereo::E);

        let g = parse_smiles("F/C=C\\F").unwrap();
        let dbl = g.bonds.iter().find(|b| b.order == BondOrder::Double).unwrap();
        assert_eq!(dbl.stereo, BondStereo::Z);

        // No marks on one side: left unresolved.
        let g = parse_smiles("F/C=CF").unwrap();
        let dbl = g.bonds.iter().find(|b| b.order == BondOrder::Double).unwrap();
        assert_eq!(dbl.stereo, BondStereo::None);
    }

    #[test]
    fn chirality_marks() {
        let g = parse_smiles("N[C@@H](C)C(=O)O").unwrap();
        assert_eq!(g.atoms[1].chirality, Chirality::Cw);
        let g = parse_smiles("N[C@H](C)C(=O)O").unwrap();
        assert_eq!(g.atoms[1].chirality, Chirality::Ccw);
    }

    #[test]
    fn error_cases() {
        assert_eq!(parse_smiles(""), Err(ParseError::EmptyInput));
        assert_eq!(parse_smiles("C1CC"), Err(ParseError::UnbalancedRing(1)));
        assert_eq!(parse_smiles("C(C"), Err(ParseError::UnbalancedParen));
        assert!(matches!(
            parse_smiles("C)C"),
            Err(ParseError::UnbalancedParen)
        ));
        assert!(matches!(
            parse_smiles("Xq"),
            Err(ParseError::UnknownElement(_))
        ));
        assert!(matches!(
            parse_smiles("C(F)(F)(F)(F)F"),
            Err(ParseError::ValenceError { .. })
        ));
        assert!(matches!(
            parse_smiles("*CC"),
            Err(ParseError::UnsupportedFeature(_))
        ));
        assert!(matches!(
            parse_smiles("CC>CC"),
            Err(ParseError::UnsupportedFeature(_))
        ));
    }

    #[test]
    fn valence_with_multivalent_sulfur() {
        // Sulfone sulfur: 6 bonds worth of order, no H.
        let g = parse_smiles("CS(=O)(=O)C").unwrap();
        let s = g.atoms.iter().find(|a| a.atomic_number == 16).unwrap();
        assert_eq!(s.implicit_h, 0);
        // Thiol: next valence up from 1 is 2.
        let g = parse_smiles("CS").unwrap();
        let s = g.atoms.iter().find(|a| a.atomic_number == 16).unwrap();
        assert_eq!(s.implicit_h, 1);
    }

    #[test]
    fn determinism() {
        let a = parse_smiles("CC(=O)Oc1ccccc1C(=O)O").unwrap();
        let b = parse_smiles("CC(=O)Oc1ccccc1C(=O)O").unwrap();
        assert_eq!(a, b);
    }
}
