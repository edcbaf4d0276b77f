//! Oracles shared by the integration tests. Nothing here calls into the
//! ring perception, canonicalization or validation code it is used to check.

#![allow(dead_code)]

use gadmol::molgraph::{Element, MolecularGraph};

/// Sum of bond orders per atom must not exceed the element's cap; every
/// bond order in 1..=3; no self loops, no duplicate pairs; connected.
pub fn valence_ok(g: &MolecularGraph) -> bool {
    let n = g.atom_count();
    if n == 0 {
        return false;
    }
    let cap = |e: Element| match e {
        Element::C => 4,
        Element::N | Element::P => 3,
        Element::O | Element::S => 2,
        Element::F => 1,
    };
    let mut sum = vec![0u32; n];
    let mut pairs = std::collections::BTreeSet::new();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    for b in g.bonds() {
        if b.a == b.b || !(1..=3).contains(&b.order) {
            return false;
        }
        if !pairs.insert((b.a.min(b.b), b.a.max(b.b))) {
            return false;
        }
        sum[b.a] += u32::from(b.order);
        sum[b.b] += u32::from(b.order);
        let (ra, rb) = (find(&mut parent, b.a), find(&mut parent, b.b));
        parent[ra] = rb;
    }
    let root = find(&mut parent, 0);
    (0..n).all(|a| sum[a] <= cap(g.element(a)) && find(&mut parent, a) == root)
}

fn bond_matrix(g: &MolecularGraph) -> Vec<Vec<u8>> {
    let n = g.atom_count();
    let mut m = vec![vec![0u8; n]; n];
    for b in g.bonds() {
        m[b.a][b.b] = b.order;
        m[b.b][b.a] = b.order;
    }
    m
}

/// Joint color refinement over both graphs; colors are comparable across them.
fn refined_colors(a: &MolecularGraph, ma: &[Vec<u8>], b: &MolecularGraph, mb: &[Vec<u8>]) -> (Vec<usize>, Vec<usize>) {
    use std::collections::BTreeMap;
    let mut ca: Vec<usize> = a.atoms().iter().map(|&e| e as usize).collect();
    let mut cb: Vec<usize> = b.atoms().iter().map(|&e| e as usize).collect();
    let mut classes = usize::MAX;
    loop {
        let sig = |c: &[usize], m: &[Vec<u8>], i: usize| {
            let mut nb: Vec<(u8, usize)> = (0..c.len()).filter(|&k| m[i][k] > 0).map(|k| (m[i][k], c[k])).collect();
            nb.sort_unstable();
            (c[i], nb)
        };
        let sa: Vec<_> = (0..ca.len()).map(|i| sig(&ca, ma, i)).collect();
        let sb: Vec<_> = (0..cb.len()).map(|i| sig(&cb, mb, i)).collect();
        let mut ids = BTreeMap::new();
        for s in sa.iter().chain(&sb) {
            let next = ids.len();
            ids.entry(s.clone()).or_insert(next);
        }
        ca = sa.iter().map(|s| ids[s]).collect();
        cb = sb.iter().map(|s| ids[s]).collect();
        if ids.len() == classes {
            return (ca, cb);
        }
        classes = ids.len();
    }
}

/// Backtracking isomorphism test over refined atom classes, exhaustive
/// within each class.
pub fn isomorphic(a: &MolecularGraph, b: &MolecularGraph) -> bool {
    let n = a.atom_count();
    if n != b.atom_count() || a.bond_count() != b.bond_count() {
        return false;
    }
    let ma = bond_matrix(a);
    let mb = bond_matrix(b);
    let (ca, cb) = refined_colors(a, &ma, b, &mb);
    let mut sa = ca.clone();
    let mut sb = cb.clone();
    sa.sort_unstable();
    sb.sort_unstable();
    if sa != sb {
        return false;
    }
    // breadth-first order so each new atom is constrained by mapped neighbors
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        order.push(root);
        let mut head = order.len() - 1;
        while head < order.len() {
            let x = order[head];
            head += 1;
            for y in 0..n {
                if ma[x][y] > 0 && !seen[y] {
                    seen[y] = true;
                    order.push(y);
                }
            }
        }
    }
    struct Ctx<'a> {
        order: Vec<usize>,
        ca: Vec<usize>,
        cb: Vec<usize>,
        ma: &'a [Vec<u8>],
        mb: &'a [Vec<u8>],
    }
    fn go(step: usize, c: &Ctx, map: &mut [usize], used: &mut [bool]) -> bool {
        if step == c.order.len() {
            return true;
        }
        let i = c.order[step];
        for j in 0..map.len() {
            if used[j] || c.ca[i] != c.cb[j] {
                continue;
            }
            if c.order[..step].iter().any(|&k| c.ma[i][k] != c.mb[j][map[k]]) {
                continue;
            }
            map[i] = j;
            used[j] = true;
            if go(step + 1, c, map, used) {
                return true;
            }
            used[j] = false;
        }
        false
    }
    let ctx = Ctx {
        order,
        ca,
        cb,
        ma: &ma,
        mb: &mb,
    };
    go(0, &ctx, &mut vec![usize::MAX; n], &mut vec![false; n])
}

/// Deterministic Fisher-Yates permutation from a small LCG, independent of `rand`.
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let j = ((state >> 33) % (i as u64 + 1)) as usize;
        p.swap(i, j);
    }
    p
}
