use super::{Genotype, Symbol};
use crate::molgraph::MolecularGraph;

/// Result of decoding plus how far the top-level derivation read.
#[derive(Debug, Clone)]
pub struct Derivation {
    pub graph: MolecularGraph,
    /// Number of leading symbols read before the derivation ended. Symbols
    /// past this point cannot influence the graph.
    pub consumed: usize,
}

struct State {
    graph: MolecularGraph,
    remaining: Vec<u8>,
}

impl State {
    fn place(&mut self, sym: Symbol, current: Option<usize>) -> Option<usize> {
        let (element, requested) = sym.atom()?;
        let cap = element.valence_cap();
        match current {
            None => {
                let a = self.graph.add_atom(element);
                self.remaining.push(cap);
                Some(a)
            }
            Some(cur) => {
                let order = requested.min(self.remaining[cur]).min(cap);
                let a = self.graph.add_atom(element);
                self.remaining.push(cap - order);
                self.remaining[cur] -= order;
                self.graph.add_bond(cur, a, order);
                Some(a)
            }
        }
    }

    fn ring(&mut self, current: Option<usize>, offset: usize) {
        let Some(cur) = current else { return };
        let target = cur.saturating_sub(offset);
        if target == cur
            || self.remaining[cur] == 0
            || self.remaining[target] == 0
            || self.graph.bond_between(cur, target).is_some()
        {
            return;
        }
        self.remaining[cur] -= 1;
        self.remaining[target] -= 1;
        self.graph.add_bond(target, cur, 1);
    }
}

fn index_value(symbols: &[Symbol], at: usize, width: usize) -> Option<usize> {
    let slice = symbols.get(at..at + width)?;
    Some(slice.iter().fold(0, |acc, s| acc * Symbol::COUNT + s.index()))
}

/// Derives `symbols` starting from `current`; returns the number of symbols read.
fn derive(symbols: &[Symbol], mut current: Option<usize>, st: &mut State) -> usize {
    let mut i = 0;
    while i < symbols.len() {
        let sym = symbols[i];
        match sym {
            Symbol::Branch1 | Symbol::Branch2 => {
                let width = if sym == Symbol::Branch1 { 1 } else { 2 };
                let Some(q) = index_value(symbols, i + 1, width) else {
                    return symbols.len();
                };
                let start = i + 1 + width;
                let end = (start + q + 1).min(symbols.len());
                if let Some(cur) = current {
                    if st.remaining[cur] >= 2 {
                        derive(&symbols[start..end], Some(cur), st);
                    }
                }
                i = end;
            }
            Symbol::Ring1 | Symbol::Ring2 => {
                let width = if sym == Symbol::Ring1 { 1 } else { 2 };
                let Some(q) = index_value(symbols, i + 1, width) else {
                    return symbols.len();
                };
                st.ring(current, q + 2);
                i += 1 + width;
            }
            _ => {
                if let Some(cur) = current {
                    if st.remaining[cur] == 0 {
                        return i + 1;
                    }
                }
                current = st.place(sym, current);
                i += 1;
            }
        }
    }
    symbols.len()
}

/// Decodes a genotype into a valence-valid molecular graph. Never fails.
pub fn decode(g: &Genotype) -> MolecularGraph {
    decode_with_extent(g).graph
}

pub fn decode_with_extent(g: &Genotype) -> Derivation {
    let mut st = State {
        graph: MolecularGraph::new(),
        remaining: Vec::new(),
    };
    let consumed = derive(g.symbols(), None, &mut st);
    let graph = if st.graph.atom_count() == 0 {
        MolecularGraph::methane()
    } else {
        st.graph
    };
    Derivation { graph, consumed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::{rings, Element};

    fn dec(text: &str) -> MolecularGraph {
        decode(&text.parse().unwrap())
    }

    #[test]
    fn linear_chain() {
        let g = dec("[C][C][C]");
        assert_eq!(g.atom_count(), 3);
        assert_eq!(g.bond_count(), 2);
        assert!(g.bonds().iter().all(|b| b.order == 1));
    }

    #[test]
    fn double_request_clamped_by_fluorine() {
        let g = dec("[F][=C]");
        assert_eq!(g.atoms(), &[Element::F, Element::C]);
        assert_eq!(g.bond_between(0, 1), Some(1));
        assert!(g.validate().is_empty());
    }

    #[test]
    fn ring_closure_makes_cyclopentane() {
        let g = dec("[C][C][C][C][C][Ring1][#C]");
        assert_eq!(g.atom_count(), 5);
        assert_eq!(g.bond_between(4, 0), Some(1));
        let r = rings(&g);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].size(), 5);
    }

    #[test]
    fn branch_of_length_one() {
        let g = dec("[C][Branch1][C][F][C]");
        assert_eq!(g.atoms(), &[Element::C, Element::F, Element::C]);
        assert_eq!(g.bond_between(0, 1), Some(1));
        assert_eq!(g.bond_between(0, 2), Some(1));
        assert_eq!(g.degree(0), 2);
    }

    #[test]
    fn control_only_string_is_methane() {
        let g = dec("[Ring1][Ring1]");
        assert_eq!(g, MolecularGraph::methane());
        assert_eq!(dec("[Branch2]"), MolecularGraph::methane());
    }

    #[test]
    fn phenyl_fragment_is_kekule_ring() {
        let g = dec("[C][=C][C][=C][C][=C][Ring1][N]");
        assert_eq!(g.atom_count(), 6);
        assert_eq!(g.bond_count(), 6);
        assert_eq!(g.bonds().iter().filter(|b| b.order == 2).count(), 3);
        assert!((0..6).all(|a| g.bond_order_sum(a) == 3));
    }

    #[test]
    fn saturated_atom_terminates() {
        // F saturates after its first bond; the next atom symbol ends derivation
        let d = decode_with_extent(&"[C][F][C][C]".parse().unwrap());
        assert_eq!(d.graph.atom_count(), 2);
        assert_eq!(d.consumed, 3);
    }

    #[test]
    fn branch_skipped_when_root_lacks_valence() {
        // O has one free valence after [C][O]; the branch body is skipped
        let g = dec("[C][O][Branch1][C][F][C]");
        assert_eq!(g.atoms(), &[Element::C, Element::O, Element::C]);
    }

    #[test]
    fn dangling_controls_are_ignored() {
        assert_eq!(dec("[C][C][Ring1]").atom_count(), 2);
        assert_eq!(dec("[C][C][Branch2][C]").atom_count(), 2);
    }

    #[test]
    fn ring_offsets_clamp_to_first_atom() {
        // offset 17 on a 4-atom chain clamps to atom 0
        let g = dec("[C][C][C][C][Ring1][Ring2]");
        assert_eq!(g.bond_between(3, 0), Some(1));
        // duplicate bond to the neighbor is skipped
        let g = dec("[C][C][Ring1][C]");
        assert_eq!(g.bond_count(), 1);
    }
}
