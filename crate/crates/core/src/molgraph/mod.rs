//! Heavy-atom molecular graphs.
//!
//! A [`MolecularGraph`] stores typed atoms in placement order and integer
//! bond orders. Hydrogens are implicit: every atom carries `cap - bond sum`
//! of them. Construction is unchecked so that invalid graphs can be built
//! and reported by [`MolecularGraph::validate`].

mod canon;
mod fingerprint;
mod rings;
mod smiles;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use canon::canonical;
pub use fingerprint::{fingerprint, tanimoto, Fingerprint, DEFAULT_NBITS, DEFAULT_RADIUS};
pub use rings::{ring_atoms, ring_bonds, rings, small_cycles, small_ring_members, Cycle};
pub use smiles::{parse_smiles, SmilesError};

/// Elements supported by the grammar and the SMILES subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Element {
    C,
    N,
    O,
    S,
    P,
    F,
}

impl Element {
    pub const ALL: [Element; 6] = [
        Element::C,
        Element::N,
        Element::O,
        Element::S,
        Element::P,
        Element::F,
    ];

    /// Maximum number of bonds (counting orders) the element may form.
    pub const fn valence_cap(self) -> u8 {
        match self {
            Element::C => 4,
            Element::N => 3,
            Element::O => 2,
            Element::S => 2,
            Element::P => 3,
            Element::F => 1,
        }
    }

    pub const fn symbol(self) -> &'static str {
        match self {
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::S => "S",
            Element::P => "P",
            Element::F => "F",
        }
    }

    /// Stable small integer used in hashing and ordering.
    pub const fn code(self) -> u8 {
        match self {
            Element::C => 6,
            Element::N => 7,
            Element::O => 8,
            Element::F => 9,
            Element::P => 15,
            Element::S => 16,
        }
    }

    pub fn index(self) -> usize {
        Element::ALL.iter().position(|&e| e == self).unwrap_or(0)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: u8,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

/// Heavy-atom graph with integer bond orders.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MolecularGraph {
    atoms: Vec<Element>,
    bonds: Vec<Bond>,
    #[serde(skip)]
    adjacency: Vec<Vec<(usize, u8)>>,
}

/// A problem reported by [`MolecularGraph::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Overvalent { atom: usize, bond_sum: u32, cap: u8 },
    Disconnected { components: usize },
    ParallelBond { a: usize, b: usize },
    SelfLoop { atom: usize },
    BadOrder { a: usize, b: usize, order: u8 },
    BadIndex { a: usize, b: usize },
    Empty,
}

impl MolecularGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Single carbon, the derivation fallback and the GA's starting point.
    pub fn methane() -> Self {
        let mut g = Self::new();
        g.add_atom(Element::C);
        g
    }

    pub fn add_atom(&mut self, element: Element) -> usize {
        self.atoms.push(element);
        self.adjacency.push(Vec::new());
        self.atoms.len() - 1
    }

    /// Adds a bond without any checking; see [`Self::validate`].
    pub fn add_bond(&mut self, a: usize, b: usize, order: u8) {
        self.bonds.push(Bond { a, b, order });
        if a < self.adjacency.len() && b < self.adjacency.len() {
            self.adjacency[a].push((b, order));
            if a != b {
                self.adjacency[b].push((a, order));
            }
        }
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn atoms(&self) -> &[Element] {
        &self.atoms
    }

    pub fn element(&self, atom: usize) -> Element {
        self.atoms[atom]
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    /// Neighbors of `atom` as `(neighbor, bond order)` pairs.
    pub fn neighbors(&self, atom: usize) -> &[(usize, u8)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn bond_order_sum(&self, atom: usize) -> u32 {
        self.adjacency[atom].iter().map(|&(_, o)| o as u32).sum()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<u8> {
        self.adjacency[a]
            .iter()
            .find(|&&(n, _)| n == b)
            .map(|&(_, o)| o)
    }

    pub fn implicit_hydrogens(&self, atom: usize) -> u8 {
        let cap = self.atoms[atom].valence_cap() as u32;
        cap.saturating_sub(self.bond_order_sum(atom)) as u8
    }

    /// Rebuilds the adjacency after deserialization.
    pub fn rebuild_adjacency(&mut self) {
        let bonds = std::mem::take(&mut self.bonds);
        self.adjacency = vec![Vec::new(); self.atoms.len()];
        for b in bonds {
            self.add_bond(b.a, b.b, b.order);
        }
    }

    /// Returns the graph with atom `i` moved to position `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> MolecularGraph {
        assert_eq!(perm.len(), self.atoms.len());
        let mut atoms = vec![Element::C; self.atoms.len()];
        for (i, &p) in perm.iter().enumerate() {
            atoms[p] = self.atoms[i];
        }
        let mut g = MolecularGraph::new();
        for e in atoms {
            g.add_atom(e);
        }
        for b in &self.bonds {
            g.add_bond(perm[b.a], perm[b.b], b.order);
        }
        g
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() <= 1
    }

    fn component_count(&self) -> usize {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut components = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
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
        components
    }

    /// Lists every structural problem. An empty list means the graph is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let n = self.atoms.len();
        let mut out = Vec::new();
        if n == 0 {
            out.push(Violation::Empty);
            return out;
        }
        let mut sums = vec![0u32; n];
        let mut pairs = std::collections::HashSet::new();
        for b in &self.bonds {
            if b.a >= n || b.b >= n {
                out.push(Violation::BadIndex { a: b.a, b: b.b });
                continue;
            }
            if !(1..=3).contains(&b.order) {
                out.push(Violation::BadOrder {
                    a: b.a,
                    b: b.b,
                    order: b.order,
                });
            }
            if b.a == b.b {
                out.push(Violation::SelfLoop { atom: b.a });
            } else if !pairs.insert((b.a.min(b.b), b.a.max(b.b))) {
                out.push(Violation::ParallelBond { a: b.a, b: b.b });
            }
            sums[b.a] += b.order as u32;
            if b.a != b.b {
                sums[b.b] += b.order as u32;
            }
        }
        for (atom, (&sum, e)) in sums.iter().zip(&self.atoms).enumerate() {
            if sum > e.valence_cap() as u32 {
                out.push(Violation::Overvalent {
                    atom,
                    bond_sum: sum,
                    cap: e.valence_cap(),
                });
            }
        }
        let components = self.component_count();
        if components > 1 {
            out.push(Violation::Disconnected { components });
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Number of atoms with three or more heavy-atom neighbors.
    pub fn branch_points(&self) -> usize {
        (0..self.atom_count()).filter(|&a| self.degree(a) >= 3).count()
    }
}
