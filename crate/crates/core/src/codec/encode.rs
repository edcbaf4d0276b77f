use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CodecError, Genotype, Symbol};
use crate::molgraph::MolecularGraph;

const MAX_RING_OFFSET: usize = 257;
const MAX_BRANCH_LEN: usize = 256;
const RANDOM_ATTEMPTS: usize = 400;

/// Rooted spanning tree with ring-closure (non-tree) bonds.
struct Plan {
    root: usize,
    children: Vec<Vec<(usize, u8)>>,
    /// ring closures emitted when the later atom is placed: (earlier atom)
    closures: Vec<Vec<usize>>,
    order: Vec<usize>,
}

/// Completes a plan from a rooted tree. Fails when a non-tree bond is not single.
fn plan_from_tree(g: &MolecularGraph, root: usize, children: Vec<Vec<(usize, u8)>>) -> Option<Plan> {
    let n = g.atom_count();
    let mut order = Vec::with_capacity(n);
    let mut walk = vec![root];
    while let Some(v) = walk.pop() {
        order.push(v);
        for &(c, _) in children[v].iter().rev() {
            walk.push(c);
        }
    }
    if order.len() != n {
        return None;
    }
    let mut placed = vec![0usize; n];
    for (i, &a) in order.iter().enumerate() {
        placed[a] = i;
    }
    let mut closures = vec![Vec::new(); n];
    for b in g.bonds() {
        let tree = children[b.a].iter().any(|&(c, _)| c == b.b)
            || children[b.b].iter().any(|&(c, _)| c == b.a);
        if tree {
            continue;
        }
        // ring bonds are always single in the grammar
        if b.order != 1 {
            return None;
        }
        let (early, late) = if placed[b.a] < placed[b.b] { (b.a, b.b) } else { (b.b, b.a) };
        closures[late].push(early);
    }
    Some(Plan {
        root,
        children,
        closures,
        order,
    })
}

/// Depth-first tree, visiting neighbors joined by multiple bonds first.
fn dfs_tree(g: &MolecularGraph, root: usize) -> Vec<Vec<(usize, u8)>> {
    let n = g.atom_count();
    let sorted: Vec<Vec<(usize, u8)>> = (0..n)
        .map(|a| {
            let mut nb = g.neighbors(a).to_vec();
            nb.sort_by_key(|&(w, o)| (std::cmp::Reverse(o), w));
            nb
        })
        .collect();
    let mut children = vec![Vec::new(); n];
    let mut visited = vec![false; n];
    let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
    visited[root] = true;
    while let Some(top) = stack.len().checked_sub(1) {
        let (v, next) = stack[top];
        if next < sorted[v].len() {
            stack[top].1 += 1;
            let (w, order) = sorted[v][next];
            if !visited[w] {
                visited[w] = true;
                children[v].push((w, order));
                stack.push((w, 0));
            }
        } else {
            stack.pop();
        }
    }
    children
}

/// Random spanning tree that contains every multiple bond, rooted at a random atom.
fn random_tree(g: &MolecularGraph, rng: &mut ChaCha8Rng) -> (usize, Vec<Vec<(usize, u8)>>) {
    let n = g.atom_count();
    let mut edges: Vec<(usize, usize, u8)> = g.bonds().iter().map(|b| (b.a, b.b, b.order)).collect();
    edges.shuffle(rng);
    edges.sort_by_key(|&(_, _, o)| std::cmp::Reverse(o));
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    let mut adj: Vec<Vec<(usize, u8)>> = vec![Vec::new(); n];
    for (a, b, o) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            adj[a].push((b, o));
            adj[b].push((a, o));
        }
    }
    let root = rng.random_range(0..n);
    let mut children = vec![Vec::new(); n];
    let mut seen = vec![false; n];
    let mut stack = vec![root];
    seen[root] = true;
    while let Some(v) = stack.pop() {
        let mut nb = adj[v].clone();
        nb.shuffle(rng);
        for (w, o) in nb {
            if !seen[w] {
                seen[w] = true;
                children[v].push((w, o));
                stack.push(w);
            }
        }
    }
    (root, children)
}

fn push_index(out: &mut Vec<Symbol>, value: usize, width: usize) {
    if width == 2 {
        out.push(Symbol::from_index(value / Symbol::COUNT));
    }
    out.push(Symbol::from_index(value % Symbol::COUNT));
}

fn emit(
    g: &MolecularGraph,
    plan: &Plan,
    placed: &[usize],
    v: usize,
    bond: Option<u8>,
    out: &mut Vec<Symbol>,
) -> Option<()> {
    let element = g.element(v);
    out.push(Symbol::for_atom(element, bond.unwrap_or(1))?);
    let mut closures = plan.closures[v].clone();
    closures.sort_by_key(|&u| placed[u]);
    for u in closures {
        let offset = placed[v].checked_sub(placed[u])?;
        if offset < 2 {
            return None;
        } else if offset <= Symbol::COUNT + 1 {
            out.push(Symbol::Ring1);
            push_index(out, offset - 2, 1);
        } else if offset <= MAX_RING_OFFSET {
            out.push(Symbol::Ring2);
            push_index(out, offset - 2, 2);
        } else {
            return None;
        }
    }
    let kids = &plan.children[v];
    for (i, &(c, order)) in kids.iter().enumerate() {
        if i + 1 == kids.len() {
            emit(g, plan, placed, c, Some(order), out)?;
        } else {
            let mut body = Vec::new();
            emit(g, plan, placed, c, Some(order), &mut body)?;
            let len = body.len();
            if len <= Symbol::COUNT {
                out.push(Symbol::Branch1);
                push_index(out, len - 1, 1);
            } else if len <= MAX_BRANCH_LEN {
                out.push(Symbol::Branch2);
                push_index(out, len - 1, 2);
            } else {
                return None;
            }
            out.extend(body);
        }
    }
    Some(())
}

fn try_plan(g: &MolecularGraph, plan: &Plan) -> Option<Vec<Symbol>> {
    let mut placed = vec![0usize; g.atom_count()];
    for (i, &a) in plan.order.iter().enumerate() {
        placed[a] = i;
    }
    let mut out = Vec::new();
    emit(g, plan, &placed, plan.root, None, &mut out)?;
    Some(out)
}

/// Encodes a valence-valid graph as a genotype whose decoding is isomorphic to it.
///
/// Atoms are emitted along a spanning tree, tree branches become
/// `[Branch1]`/`[Branch2]` blocks and the remaining bonds become ring
/// closures from the later-placed atom. Ring closures must be single bonds,
/// span at least two placements, and some bond prefixes (such as a double
/// bond into phosphorus) have no symbol, so depth-first trees from every
/// root are tried first and seeded random spanning trees after that.
pub fn encode(g: &MolecularGraph) -> Result<Genotype, CodecError> {
    let violations = g.validate();
    if !violations.is_empty() {
        return Err(CodecError::UnencodableGraph(format!("invalid graph: {violations:?}")));
    }
    for root in 0..g.atom_count() {
        let attempt = plan_from_tree(g, root, dfs_tree(g, root)).and_then(|p| try_plan(g, &p));
        if let Some(symbols) = attempt {
            return Genotype::new(symbols);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f_1e5);
    for _ in 0..RANDOM_ATTEMPTS {
        let (root, children) = random_tree(g, &mut rng);
        if let Some(symbols) = plan_from_tree(g, root, children).and_then(|p| try_plan(g, &p)) {
            return Genotype::new(symbols);
        }
    }
    Err(CodecError::UnencodableGraph(
        "no traversal keeps multiple bonds on the spanning tree within offset limits".into(),
    ))
}
