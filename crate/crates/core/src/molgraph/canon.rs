//! Canonical SMILES-like serialization.
//!
//! Atoms are ranked by iterative neighborhood refinement. Remaining ties are
//! broken by individualizing each member of the first tied cell in turn and
//! keeping the lexicographically smallest string, so any two isomorphic
//! graphs serialize identically. Interchangeable twin atoms (same neighbors)
//! are explored once.

use super::rings::ring_atoms;
use super::MolecularGraph;

const LEAF_CAP: usize = 4096;

/// Canonical text for `g`. Kekulé form, no hydrogens, ring closures as digits.
pub fn canonical(g: &MolecularGraph) -> String {
    let n = g.atom_count();
    if n == 0 {
        return String::new();
    }
    let in_ring = ring_atoms(g);
    let keys: Vec<(usize, u8, u32, bool)> = (0..n)
        .map(|a| (g.degree(a), g.element(a).code(), g.bond_order_sum(a), in_ring[a]))
        .collect();
    let ranks = dense_rank(&keys);
    let mut best: Option<String> = None;
    let mut leaves = 0;
    search(g, ranks, &mut best, &mut leaves);
    best.unwrap_or_default()
}

fn dense_rank<K: Ord>(keys: &[K]) -> Vec<u32> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut ranks = vec![0u32; keys.len()];
    let mut r = 0u32;
    for (i, &a) in order.iter().enumerate() {
        if i > 0 && keys[a] != keys[order[i - 1]] {
            r += 1;
        }
        ranks[a] = r;
    }
    ranks
}

fn distinct(ranks: &[u32]) -> usize {
    ranks.iter().copied().max().map_or(0, |m| m as usize + 1)
}

fn refine(g: &MolecularGraph, ranks: &mut Vec<u32>) {
    let mut classes = distinct(ranks);
    loop {
        let keys: Vec<(u32, Vec<(u32, u8)>)> = (0..g.atom_count())
            .map(|a| {
                let mut nb: Vec<(u32, u8)> =
                    g.neighbors(a).iter().map(|&(w, o)| (ranks[w], o)).collect();
                nb.sort_unstable();
                (ranks[a], nb)
            })
            .collect();
        let next = dense_rank(&keys);
        let c = distinct(&next);
        *ranks = next;
        if c == classes {
            break;
        }
        classes = c;
    }
}

fn twins(g: &MolecularGraph, u: usize, v: usize) -> bool {
    let strip = |a: usize, other: usize| {
        let mut nb: Vec<(usize, u8)> = g
            .neighbors(a)
            .iter()
            .copied()
            .filter(|&(w, _)| w != other)
            .collect();
        nb.sort_unstable();
        nb
    };
    strip(u, v) == strip(v, u)
}

fn search(g: &MolecularGraph, mut ranks: Vec<u32>, best: &mut Option<String>, leaves: &mut usize) {
    refine(g, &mut ranks);
    let n = ranks.len();
    let mut counts = vec![0usize; n];
    for &r in &ranks {
        counts[r as usize] += 1;
    }
    let Some(cell) = (0..n).find(|&r| counts[r] > 1) else {
        let s = write(g, &ranks);
        if best.as_ref().is_none_or(|b| s < *b) {
            *best = Some(s);
        }
        *leaves += 1;
        return;
    };
    let cell = cell as u32;
    let members: Vec<usize> = (0..n).filter(|&a| ranks[a] == cell).collect();
    let mut tried: Vec<usize> = Vec::new();
    for &c in &members {
        if *leaves >= LEAF_CAP {
            break;
        }
        if tried.iter().any(|&t| twins(g, t, c)) {
            continue;
        }
        tried.push(c);
        let next: Vec<u32> = ranks
            .iter()
            .enumerate()
            .map(|(a, &r)| 2 * r + u32::from(r == cell && a != c))
            .collect();
        search(g, next, best, leaves);
    }
}

fn bond_char(order: u8) -> &'static str {
    match order {
        2 => "=",
        3 => "#",
        _ => "",
    }
}

struct Layout {
    children: Vec<Vec<(usize, u8)>>,
    /// back edges opened at an atom: (descendant, order)
    opens: Vec<Vec<(usize, u8)>>,
    /// back edges closed at an atom: ancestor
    closes: Vec<Vec<usize>>,
}

fn layout(g: &MolecularGraph, ranks: &[u32], root: usize) -> Layout {
    let n = g.atom_count();
    let mut layout = Layout {
        children: vec![Vec::new(); n],
        opens: vec![Vec::new(); n],
        closes: vec![Vec::new(); n],
    };
    let sorted: Vec<Vec<(usize, u8)>> = (0..n)
        .map(|a| {
            let mut nb = g.neighbors(a).to_vec();
            nb.sort_by_key(|&(w, _)| ranks[w]);
            nb
        })
        .collect();
    let mut visited = vec![false; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<(usize, Option<usize>, usize)> = vec![(root, None, 0)];
    visited[root] = true;
    on_stack[root] = true;
    while let Some(top) = stack.len().checked_sub(1) {
        let (v, parent, next) = stack[top];
        if next < sorted[v].len() {
            stack[top].2 += 1;
            let (w, order) = sorted[v][next];
            if Some(w) == parent {
                continue;
            }
            if !visited[w] {
                visited[w] = true;
                on_stack[w] = true;
                layout.children[v].push((w, order));
                stack.push((w, Some(v), 0));
            } else if on_stack[w] {
                layout.opens[w].push((v, order));
                layout.closes[v].push(w);
            }
        } else {
            on_stack[v] = false;
            stack.pop();
        }
    }
    layout
}

fn write(g: &MolecularGraph, ranks: &[u32]) -> String {
    let root = (0..g.atom_count()).min_by_key(|&a| ranks[a]).unwrap_or(0);
    let layout = layout(g, ranks, root);
    let mut out = String::new();
    let mut free_digits: Vec<bool> = vec![true; 100];
    let mut assigned: std::collections::HashMap<(usize, usize), usize> =
        std::collections::HashMap::new();

    enum Item {
        Atom(usize, u8),
        Open,
        Close,
    }
    let mut work = vec![Item::Atom(root, 1)];
    while let Some(item) = work.pop() {
        match item {
            Item::Open => out.push('('),
            Item::Close => out.push(')'),
            Item::Atom(v, order) => {
                out.push_str(bond_char(order));
                out.push_str(g.element(v).symbol());
                let mut closes = layout.closes[v].clone();
                closes.sort_by_key(|&u| ranks[u]);
                for u in closes {
                    let d = assigned.remove(&(u, v)).expect("ring opened before close");
                    free_digits[d] = true;
                    push_digit(&mut out, d);
                }
                for &(w, o) in &layout.opens[v] {
                    let d = (1..100).find(|&d| free_digits[d]).expect("ring digits exhausted");
                    free_digits[d] = false;
                    assigned.insert((v, w), d);
                    out.push_str(bond_char(o));
                    push_digit(&mut out, d);
                }
                let kids = &layout.children[v];
                // pushed in reverse so the lowest-ranked child is written first
                for (i, &(w, o)) in kids.iter().enumerate().rev() {
                    if i + 1 == kids.len() {
                        work.push(Item::Atom(w, o));
                    } else {
                        work.push(Item::Close);
                        work.push(Item::Atom(w, o));
                        work.push(Item::Open);
                    }
                }
            }
        }
    }
    out
}

fn push_digit(out: &mut String, d: usize) {
    if d < 10 {
        out.push(char::from(b'0' + d as u8));
    } else {
        out.push('%');
        out.push_str(&d.to_string());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::{parse_smiles, Element};

    fn chain(n: usize, e: Element) -> MolecularGraph {
        let mut g = MolecularGraph::new();
        for i in 0..n {
            g.add_atom(e);
            if i > 0 {
                g.add_bond(i - 1, i, 1);
            }
        }
        g
    }

    #[test]
    fn propane_is_ccc() {
        assert_eq!(canonical(&chain(3, Element::C)), "CCC");
    }

    #[test]
    fn sulfur_chain_length_equals_atoms() {
        assert_eq!(canonical(&chain(81, Element::S)).len(), 81);
    }

    #[test]
    fn branched_example_roundtrips() {
        let mut g = MolecularGraph::new();
        g.add_atom(Element::C);
        g.add_atom(Element::F);
        g.add_atom(Element::C);
        g.add_bond(0, 1, 1);
        g.add_bond(0, 2, 1);
        let s = canonical(&g);
        assert_eq!(s, canonical(&g.permuted(&[1, 2, 0])));
        let back = parse_smiles(&s).unwrap();
        assert_eq!(canonical(&back), s);
    }

    #[test]
    fn benzene_permutations_agree() {
        let g = parse_smiles("C1=CC=CC=C1").unwrap();
        let s = canonical(&g);
        assert_eq!(s.matches('=').count(), 3);
        for shift in 1..6 {
            let perm: Vec<usize> = (0..6).map(|i| (i + shift) % 6).collect();
            assert_eq!(canonical(&g.permuted(&perm)), s);
        }
    }

    #[test]
    fn twin_pruning_keeps_tert_butyl_cheap() {
        let g = parse_smiles("CC(C)(C)CCCC(C)(C)C").unwrap();
        let s = canonical(&g);
        let rev: Vec<usize> = (0..g.atom_count()).rev().collect();
        assert_eq!(canonical(&g.permuted(&rev)), s);
    }
}
