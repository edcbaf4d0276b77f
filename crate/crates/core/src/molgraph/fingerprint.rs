//! Circular (ECFP-style) fingerprints and Tanimoto similarity.

use serde::{Deserialize, Serialize};

use super::rings::ring_atoms;
use super::MolecularGraph;

pub const DEFAULT_RADIUS: usize = 2;
pub const DEFAULT_NBITS: usize = 1024;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(words: &[u64]) -> u64 {
    let mut h = FNV_OFFSET;
    for w in words {
        for byte in w.to_le_bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h
}

/// Fixed-width bit vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fingerprint {
    words: Vec<u64>,
    nbits: usize,
}

impl Fingerprint {
    pub fn new(nbits: usize) -> Self {
        Self {
            words: vec![0; nbits.div_ceil(64)],
            nbits,
        }
    }

    pub fn from_bits(nbits: usize, bits: impl IntoIterator<Item = usize>) -> Self {
        let mut fp = Self::new(nbits);
        for b in bits {
            fp.set(b);
        }
        fp
    }

    pub fn set(&mut self, bit: usize) {
        let bit = bit % self.nbits;
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        let bit = bit % self.nbits;
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn nbits(&self) -> usize {
        self.nbits
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Bits as 0/1 reals, for clustering and projection.
    pub fn to_dense(&self) -> Vec<f64> {
        (0..self.nbits).map(|b| f64::from(u8::from(self.get(b)))).collect()
    }
}

/// Folded circular fingerprint.
///
/// Seed invariants are `(element, degree, implicit H, ring membership)`; each
/// round rehashes an atom's invariant with the sorted `(bond order, neighbor
/// invariant)` list. Invariants from every round set `invariant % nbits`.
pub fn fingerprint(g: &MolecularGraph, radius: usize, nbits: usize) -> Fingerprint {
    let n = g.atom_count();
    let mut fp = Fingerprint::new(nbits);
    let in_ring = ring_atoms(g);
    let mut inv: Vec<u64> = (0..n)
        .map(|a| {
            fnv1a(&[
                u64::from(g.element(a).code()),
                g.degree(a) as u64,
                u64::from(g.implicit_hydrogens(a)),
                u64::from(in_ring[a]),
            ])
        })
        .collect();
    for &h in &inv {
        fp.set((h % nbits as u64) as usize);
    }
    for _ in 0..radius {
        let next: Vec<u64> = (0..n)
            .map(|a| {
                let mut nb: Vec<(u64, u64)> = g
                    .neighbors(a)
                    .iter()
                    .map(|&(w, o)| (u64::from(o), inv[w]))
                    .collect();
                nb.sort_unstable();
                let mut words = Vec::with_capacity(1 + 2 * nb.len());
                words.push(inv[a]);
                for (o, h) in nb {
                    words.push(o);
                    words.push(h);
                }
                fnv1a(&words)
            })
            .collect();
        inv = next;
        for &h in &inv {
            fp.set((h % nbits as u64) as usize);
        }
    }
    fp
}

/// `|a ∧ b| / |a ∨ b|`, with two empty vectors counting as identical.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> f64 {
    let (mut both, mut either) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        both += (x & y).count_ones();
        either += (x | y).count_ones();
    }
    if either == 0 {
        1.0
    } else {
        f64::from(both) / f64::from(either)
    }
}
