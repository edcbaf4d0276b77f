//! Reader for a restricted SMILES subset.
//!
//! Supported: organic-subset atoms `C N O S P F`, aromatic `c n o s`, bonds
//! `- = # :`, branches, ring closures `1`-`9` and `%nn`. Aromatic rings are
//! kekulized by searching for a perfect matching of double bonds.

use std::collections::HashMap;

use thiserror::Error;

use super::rings::ring_bonds;
use super::{Element, MolecularGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesError {
    #[error("unsupported feature `{feature}` at byte {offset}")]
    UnsupportedFeature { feature: String, offset: usize },
    #[error("syntax error at byte {offset}: {message}")]
    SyntaxError { message: String, offset: usize },
    #[error("no Kekulé structure for the aromatic system starting at byte {offset}")]
    KekulizationFailure { offset: usize },
    #[error("atom at byte {offset} exceeds its valence")]
    Valence { offset: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BondKind {
    Order(u8),
    Aromatic,
}

fn syntax(message: &str, offset: usize) -> SmilesError {
    SmilesError::SyntaxError {
        message: message.to_string(),
        offset,
    }
}

fn unsupported(feature: &str, offset: usize) -> SmilesError {
    SmilesError::UnsupportedFeature {
        feature: feature.to_string(),
        offset,
    }
}

/// Parses `text` into a kekulized heavy-atom graph.
pub fn parse_smiles(text: &str) -> Result<MolecularGraph, SmilesError> {
    let bytes = text.as_bytes();
    let mut atoms: Vec<(Element, bool, usize)> = Vec::new();
    let mut bonds: Vec<(usize, usize, Option<BondKind>)> = Vec::new();
    let mut prev: Option<usize> = None;
    let mut pending: Option<(BondKind, usize)> = None;
    let mut branches: Vec<usize> = Vec::new();
    let mut open_rings: HashMap<u32, (usize, Option<BondKind>, usize)> = HashMap::new();

    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let atom = match c {
            b'C' if bytes.get(i + 1) == Some(&b'l') => return Err(unsupported("Cl", i)),
            b'B' if bytes.get(i + 1) == Some(&b'r') => return Err(unsupported("Br", i)),
            b'C' => Some((Element::C, false)),
            b'N' => Some((Element::N, false)),
            b'O' => Some((Element::O, false)),
            b'S' => Some((Element::S, false)),
            b'P' => Some((Element::P, false)),
            b'F' => Some((Element::F, false)),
            b'c' => Some((Element::C, true)),
            b'n' => Some((Element::N, true)),
            b'o' => Some((Element::O, true)),
            b's' => Some((Element::S, true)),
            _ => None,
        };
        if let Some((element, aromatic)) = atom {
            let idx = atoms.len();
            atoms.push((element, aromatic, start));
            if let Some(p) = prev {
                bonds.push((p, idx, pending.take().map(|(k, _)| k)));
            } else if let Some((_, off)) = pending {
                return Err(syntax("bond without a preceding atom", off));
            }
            prev = Some(idx);
            i += 1;
            continue;
        }
        match c {
            b'-' | b'=' | b'#' | b':' => {
                if pending.is_some() {
                    return Err(syntax("two consecutive bond symbols", i));
                }
                let kind = match c {
                    b'-' => BondKind::Order(1),
                    b'=' => BondKind::Order(2),
                    b'#' => BondKind::Order(3),
                    _ => BondKind::Aromatic,
                };
                pending = Some((kind, i));
                i += 1;
            }
            b'(' => {
                let p = prev.ok_or_else(|| syntax("branch without a preceding atom", i))?;
                if pending.is_some() {
                    return Err(syntax("bond symbol before branch", i));
                }
                branches.push(p);
                i += 1;
            }
            b')' => {
                let p = branches.pop().ok_or_else(|| syntax("unbalanced `)`", i))?;
                if let Some((_, off)) = pending {
                    return Err(syntax("dangling bond symbol", off));
                }
                prev = Some(p);
                i += 1;
            }
            b'0'..=b'9' | b'%' => {
                let (number, len) = if c == b'%' {
                    let digits = bytes.get(i + 1..i + 3).filter(|d| d.iter().all(u8::is_ascii_digit));
                    let d = digits.ok_or_else(|| syntax("`%` must be followed by two digits", i))?;
                    (u32::from(d[0] - b'0') * 10 + u32::from(d[1] - b'0'), 3)
                } else {
                    (u32::from(c - b'0'), 1)
                };
                let p = prev.ok_or_else(|| syntax("ring closure without an atom", i))?;
                let here = pending.take().map(|(k, _)| k);
                if let Some((q, there, _)) = open_rings.remove(&number) {
                    let kind = match (here, there) {
                        (Some(a), Some(b)) if a != b => {
                            return Err(syntax("conflicting ring-closure bonds", i))
                        }
                        (a, b) => a.or(b),
                    };
                    if q == p
                        || bonds
                            .iter()
                            .any(|&(x, y, _)| (x == p && y == q) || (x == q && y == p))
                    {
                        return Err(syntax("ring closure duplicates a bond", i));
                    }
                    bonds.push((q, p, kind));
                } else {
                    open_rings.insert(number, (p, here, i));
                }
                i += len;
            }
            b'[' => {
                let end = bytes[i..].iter().position(|&b| b == b']').map_or(bytes.len(), |e| i + e + 1);
                return Err(unsupported(&text[i..end], i));
            }
            b'/' | b'\\' => return Err(unsupported("bond stereo", i)),
            b'@' => return Err(unsupported("chirality", i)),
            b'.' => return Err(unsupported("disconnected components", i)),
            b'I' | b'B' => return Err(unsupported(&text[i..i + 1], i)),
            _ => return Err(syntax(&format!("unexpected character {:?}", c as char), i)),
        }
    }
    if atoms.is_empty() {
        return Err(syntax("empty SMILES", 0));
    }
    if let Some((_, off)) = pending {
        return Err(syntax("dangling bond symbol", off));
    }
    if let Some(&(_, _, off)) = open_rings.values().min_by_key(|v| v.2) {
        return Err(syntax("unclosed ring", off));
    }
    if !branches.is_empty() {
        return Err(syntax("unclosed branch", bytes.len()));
    }

    let mut g = MolecularGraph::new();
    for &(e, _, _) in &atoms {
        g.add_atom(e);
    }
    let mut aromatic_bond = Vec::with_capacity(bonds.len());
    for &(a, b, kind) in &bonds {
        let (order, arom) = match kind {
            Some(BondKind::Order(o)) => (o, false),
            Some(BondKind::Aromatic) => (1, true),
            None => (1, atoms[a].1 && atoms[b].1),
        };
        g.add_bond(a, b, order);
        aromatic_bond.push(arom);
    }
    if atoms.iter().any(|a| a.1) {
        g = kekulize(g, &atoms, &aromatic_bond)?;
    }
    if let Some(v) = g.validate().into_iter().find_map(|v| match v {
        super::Violation::Overvalent { atom, .. } => Some(atom),
        _ => None,
    }) {
        return Err(SmilesError::Valence {
            offset: atoms[v].2,
        });
    }
    Ok(g)
}

fn kekulize(
    g: MolecularGraph,
    atoms: &[(Element, bool, usize)],
    aromatic_bond: &[bool],
) -> Result<MolecularGraph, SmilesError> {
    let n = g.atom_count();
    let in_ring = ring_bonds(&g);
    let needs: Vec<bool> = (0..n)
        .map(|a| {
            atoms[a].1 && g.bond_order_sum(a) < u32::from(atoms[a].0.valence_cap())
        })
        .collect();
    // candidate double bonds: aromatic ring bonds between two atoms lacking a pi bond
    let mut options: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (bi, b) in g.bonds().iter().enumerate() {
        if aromatic_bond[bi] && in_ring[bi] && needs[b.a] && needs[b.b] {
            options[b.a].push((b.b, bi));
            options[b.b].push((b.a, bi));
        }
    }
    let mut mate: Vec<Option<usize>> = vec![None; n];
    if !match_all(&needs, &options, &mut mate) {
        let offset = (0..n)
            .filter(|&a| needs[a] && mate[a].is_none())
            .map(|a| atoms[a].2)
            .min()
            .or_else(|| atoms.iter().find(|a| a.1).map(|a| a.2))
            .unwrap_or(0);
        return Err(SmilesError::KekulizationFailure { offset });
    }
    let mut out = MolecularGraph::new();
    for &(e, _, _) in atoms {
        out.add_atom(e);
    }
    for (bi, b) in g.bonds().iter().enumerate() {
        let doubled = mate[b.a] == Some(bi) && mate[b.b] == Some(bi);
        out.add_bond(b.a, b.b, if doubled { 2 } else { b.order });
    }
    Ok(out)
}

/// Backtracking perfect matching over atoms flagged in `needs`; `mate` holds
/// the matched bond index per atom.
fn match_all(needs: &[bool], options: &[Vec<(usize, usize)>], mate: &mut [Option<usize>]) -> bool {
    // most constrained unmatched atom first
    let pick = (0..needs.len())
        .filter(|&a| needs[a] && mate[a].is_none())
        .min_by_key(|&a| options[a].iter().filter(|&&(w, _)| mate[w].is_none()).count());
    let Some(a) = pick else {
        return true;
    };
    for &(w, bi) in &options[a] {
        if mate[w].is_none() {
            mate[a] = Some(bi);
            mate[w] = Some(bi);
            if match_all(needs, options, mate) {
                return true;
            }
            mate[a] = None;
            mate[w] = None;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::rings;

    #[test]
    fn propane() {
        let g = parse_smiles("CCC").unwrap();
        assert_eq!(g.atom_count(), 3);
        assert!(g.bonds().iter().all(|b| b.order == 1));
    }

    #[test]
    fn benzene_is_kekulized() {
        let g = parse_smiles("c1ccccc1").unwrap();
        assert!(g.validate().is_empty());
        let doubles = g.bonds().iter().filter(|b| b.order == 2).count();
        assert_eq!(doubles, 3);
        for a in 0..6 {
            assert_eq!(g.bond_order_sum(a), 3);
            assert_eq!(g.implicit_hydrogens(a), 1);
            let orders: Vec<u8> = g.neighbors(a).iter().map(|&(_, o)| o).collect();
            assert!(orders.contains(&1) && orders.contains(&2));
        }
        let r = rings(&g);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].size(), 6);
    }

    #[test]
    fn charged_nitrogen_is_rejected_at_bracket() {
        match parse_smiles("C[NH3+]") {
            Err(SmilesError::UnsupportedFeature { offset, .. }) => assert_eq!(offset, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stereo_and_halogens_are_unsupported() {
        assert!(matches!(
            parse_smiles("F/C=C/F"),
            Err(SmilesError::UnsupportedFeature { offset: 1, .. })
        ));
        assert!(matches!(
            parse_smiles("CCCl"),
            Err(SmilesError::UnsupportedFeature { offset: 2, .. })
        ));
    }

    #[test]
    fn heteroaromatics_kekulize() {
        for s in ["c1ccncc1", "c1ccoc1", "c1ccsc1", "c1ccc2ccccc2c1", "Cn1cccc1", "O=c1cccccc1"] {
            let g = parse_smiles(s).unwrap_or_else(|e| panic!("{s}: {e}"));
            assert!(g.validate().is_empty(), "{s}");
        }
    }

    #[test]
    fn impossible_aromatic_system_fails() {
        assert!(matches!(
            parse_smiles("c1cccc1"),
            Err(SmilesError::KekulizationFailure { .. })
        ));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        assert!(matches!(parse_smiles("C1CC"), Err(SmilesError::SyntaxError { offset: 1, .. })));
        assert!(matches!(parse_smiles("C)C"), Err(SmilesError::SyntaxError { offset: 1, .. })));
        assert!(matches!(parse_smiles("=C"), Err(SmilesError::SyntaxError { offset: 0, .. })));
        assert!(matches!(parse_smiles(""), Err(SmilesError::SyntaxError { .. })));
        assert!(matches!(parse_smiles("C?"), Err(SmilesError::SyntaxError { offset: 1, .. })));
    }

    #[test]
    fn two_digit_ring_closures() {
        let g = parse_smiles("C%12CCCC%12").unwrap();
        assert_eq!(rings(&g)[0].size(), 5);
    }

    #[test]
    fn ring_bond_symbol_on_either_end() {
        let a = parse_smiles("C=1CCCC1").unwrap();
        let b = parse_smiles("C1CCCC=1").unwrap();
        assert_eq!(a.bond_between(0, 4), Some(2));
        assert_eq!(b.bond_between(0, 4), Some(2));
    }

    #[test]
    fn pentavalent_carbon_rejected() {
        assert!(matches!(parse_smiles("C(C)(C)(C)(C)C"), Err(SmilesError::Valence { offset: 0 })));
    }
}
