//! Ring perception: minimum cycle basis, ring membership and small-ring search.

use super::MolecularGraph;

/// One cycle of a cycle basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cycle {
    /// Atoms in traversal order around the ring.
    pub atoms: Vec<usize>,
    /// Bond indices (into [`MolecularGraph::bonds`]) forming the ring.
    pub bonds: Vec<usize>,
}

impl Cycle {
    pub fn size(&self) -> usize {
        self.atoms.len()
    }
}

fn bond_index_table(g: &MolecularGraph) -> Vec<Vec<(usize, usize)>> {
    // atom -> (neighbor, bond index)
    let mut t = vec![Vec::new(); g.atom_count()];
    for (i, b) in g.bonds().iter().enumerate() {
        t[b.a].push((b.b, i));
        t[b.b].push((b.a, i));
    }
    for row in &mut t {
        row.sort_unstable();
    }
    t
}

/// Minimum cycle basis, Horton style: candidate cycles are built from
/// shortest-path trees rooted at every atom, sorted by size and greedily
/// kept when linearly independent over GF(2).
pub fn rings(g: &MolecularGraph) -> Vec<Cycle> {
    let n = g.atom_count();
    let m = g.bond_count();
    if n == 0 {
        return Vec::new();
    }
    let rank = (m + 1).saturating_sub(n);
    if rank == 0 {
        return Vec::new();
    }
    let table = bond_index_table(g);
    let words = m.div_ceil(64);

    let mut candidates: Vec<(Vec<u64>, Cycle)> = Vec::new();
    let mut seen_sets = std::collections::HashSet::new();
    let mut dist = vec![usize::MAX; n];
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut mark = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::new();

    for root in 0..n {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        parent.iter_mut().for_each(|p| *p = None);
        dist[root] = 0;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            for &(w, bi) in &table[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    parent[w] = Some((v, bi));
                    queue.push_back(w);
                }
            }
        }
        for (bi, b) in g.bonds().iter().enumerate() {
            let (x, y) = (b.a, b.b);
            if dist[x] == usize::MAX || dist[y] == usize::MAX {
                continue;
            }
            if parent[x].map(|p| p.1) == Some(bi) || parent[y].map(|p| p.1) == Some(bi) {
                continue;
            }
            // path x -> root and y -> root must share only the root
            let path = |mut v: usize| {
                let mut atoms = vec![v];
                let mut bonds = Vec::new();
                while let Some((p, pb)) = parent[v] {
                    atoms.push(p);
                    bonds.push(pb);
                    v = p;
                }
                (atoms, bonds)
            };
            let (px, bx) = path(x);
            let (py, by) = path(y);
            let stamp = root * m + bi;
            for &a in &px[..px.len() - 1] {
                mark[a] = stamp;
            }
            if py[..py.len() - 1].iter().any(|&a| mark[a] == stamp) {
                continue;
            }
            let mut atoms = px.clone();
            atoms.pop();
            atoms.push(root);
            atoms.extend(py.iter().rev().skip(1));
            let mut bonds = bx;
            bonds.extend(by);
            bonds.push(bi);
            if atoms.len() < 3 {
                continue;
            }
            let mut bits = vec![0u64; words];
            for &e in &bonds {
                bits[e / 64] |= 1 << (e % 64);
            }
            if seen_sets.insert(bits.clone()) {
                candidates.push((bits, Cycle { atoms, bonds }));
            }
        }
    }
    candidates.sort_by_key(|(_, c)| c.size());

    // Gaussian elimination keyed by pivot bit.
    let mut basis_rows: Vec<(usize, Vec<u64>)> = Vec::new();
    let mut out = Vec::with_capacity(rank);
    for (bits, cycle) in candidates {
        let mut v = bits;
        for (pivot, row) in &basis_rows {
            if v[pivot / 64] >> (pivot % 64) & 1 == 1 {
                for (a, b) in v.iter_mut().zip(row) {
                    *a ^= b;
                }
            }
        }
        if let Some(pivot) = first_bit(&v) {
            basis_rows.push((pivot, v));
            out.push(cycle);
            if out.len() == rank {
                break;
            }
        }
    }
    out
}

fn first_bit(v: &[u64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

/// Marks bonds that lie on at least one cycle (i.e. are not bridges).
pub fn ring_bonds(g: &MolecularGraph) -> Vec<bool> {
    let n = g.atom_count();
    let table = bond_index_table(g);
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut is_bridge = vec![false; g.bond_count()];
    let mut timer = 0;
    // iterative Tarjan bridge finding
    for start in 0..n {
        if disc[start] != usize::MAX {
            continue;
        }
        let mut stack: Vec<(usize, Option<usize>, usize)> = vec![(start, None, 0)];
        disc[start] = timer;
        low[start] = timer;
        timer += 1;
        while let Some(top) = stack.len().checked_sub(1) {
            let (v, via, next) = stack[top];
            if next < table[v].len() {
                let (w, bi) = table[v][next];
                stack[top].2 += 1;
                if Some(bi) == via {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    stack.push((w, Some(bi), 0));
                } else {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let (Some(bi), Some(&(p, _, _))) = (via, stack.last()) {
                    low[p] = low[p].min(low[v]);
                    if low[v] > disc[p] {
                        is_bridge[bi] = true;
                    }
                }
            }
        }
    }
    is_bridge.into_iter().map(|b| !b).collect()
}

/// Marks atoms that lie on at least one cycle.
pub fn ring_atoms(g: &MolecularGraph) -> Vec<bool> {
    let mut out = vec![false; g.atom_count()];
    for (b, on_ring) in g.bonds().iter().zip(ring_bonds(g)) {
        if on_ring {
            out[b.a] = true;
            out[b.b] = true;
        }
    }
    out
}

/// Every simple cycle with at most `max_len` atoms, as atom lists.
pub fn small_cycles(g: &MolecularGraph, max_len: usize) -> Vec<Vec<usize>> {
    let n = g.atom_count();
    let mut out = Vec::new();
    let mut path = Vec::with_capacity(max_len);
    let mut on_path = vec![false; n];
    fn extend(
        g: &MolecularGraph,
        start: usize,
        max_len: usize,
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        out: &mut Vec<Vec<usize>>,
    ) {
        let v = *path.last().unwrap();
        for &(w, _) in g.neighbors(v) {
            if w == start && path.len() >= 3 && path[1] < v {
                out.push(path.clone());
            } else if w > start && !on_path[w] && path.len() < max_len {
                on_path[w] = true;
                path.push(w);
                extend(g, start, max_len, path, on_path, out);
                path.pop();
                on_path[w] = false;
            }
        }
    }
    for start in 0..n {
        path.push(start);
        on_path[start] = true;
        extend(g, start, max_len, &mut path, &mut on_path, &mut out);
        on_path[start] = false;
        path.pop();
    }
    out
}

/// Atoms lying on a ring of at most `max_len` atoms that contains a double bond.
pub fn small_ring_members(g: &MolecularGraph, max_len: usize) -> Vec<bool> {
    let mut out = vec![false; g.atom_count()];
    for cycle in small_cycles(g, max_len) {
        let has_double = (0..cycle.len())
            .any(|i| g.bond_between(cycle[i], cycle[(i + 1) % cycle.len()]) == Some(2));
        if has_double {
            for a in cycle {
                out[a] = true;
            }
        }
    }
    out
}
