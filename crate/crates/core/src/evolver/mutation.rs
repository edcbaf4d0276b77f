use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{decode, Genotype, Symbol, DEFAULT_MAX_LEN};
use crate::molgraph::{canonical, MolecularGraph};

/// Spliced in by phenyl mutations; decodes on its own to a Kekule benzene ring.
pub const PHENYL: [Symbol; 8] = [
    Symbol::C,
    Symbol::DoubleC,
    Symbol::C,
    Symbol::DoubleC,
    Symbol::C,
    Symbol::DoubleC,
    Symbol::Ring1,
    Symbol::N,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationKind {
    Insertion,
    Replacement,
    Phenyl,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MutationConfig {
    /// Probability of a phenyl splice; the rest is split evenly between
    /// single-symbol insertion and replacement.
    pub phenyl_rate: f64,
    pub max_attempts: usize,
    pub max_canonical_len: usize,
    pub max_genotype_len: usize,
}

impl Default for MutationConfig {
    fn default() -> Self {
        Self {
            phenyl_rate: 0.04,
            max_attempts: 10,
            max_canonical_len: 81,
            max_genotype_len: DEFAULT_MAX_LEN,
        }
    }
}

/// One candidate edit of a parent genotype.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edit {
    pub kind: MutationKind,
    pub position: usize,
    pub symbol: Symbol,
}

impl Edit {
    /// Kind, then position, then symbol (the symbol is drawn for phenyl
    /// splices too so every edit consumes the same number of draws).
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, parent_len: usize, cfg: &MutationConfig) -> Self {
        let u: f64 = rng.random();
        let kind = if u < cfg.phenyl_rate {
            MutationKind::Phenyl
        } else if u < cfg.phenyl_rate + (1.0 - cfg.phenyl_rate) / 2.0 {
            MutationKind::Insertion
        } else {
            MutationKind::Replacement
        };
        let position = match kind {
            MutationKind::Replacement => rng.random_range(0..parent_len),
            _ => rng.random_range(0..=parent_len),
        };
        let symbol = Symbol::from_index(rng.random_range(0..Symbol::COUNT));
        Self { kind, position, symbol }
    }

    pub fn apply(&self, parent: &Genotype) -> Genotype {
        let mut s = parent.symbols().to_vec();
        match self.kind {
            MutationKind::Insertion => s.insert(self.position, self.symbol),
            MutationKind::Replacement => s[self.position] = self.symbol,
            MutationKind::Phenyl => {
                s.splice(self.position..self.position, PHENYL);
            }
        }
        Genotype::new(s).expect("edits never empty a genotype")
    }
}

/// A decoded mutation result. `kind` is `None` when every attempt was
/// rejected and the parent was kept.
#[derive(Debug, Clone)]
pub struct Mutant {
    pub genotype: Genotype,
    pub graph: MolecularGraph,
    pub canonical: String,
    pub kind: Option<MutationKind>,
}

pub fn draw_edits<R: Rng + ?Sized>(rng: &mut R, parent: &Genotype, cfg: &MutationConfig) -> Vec<Edit> {
    (0..cfg.max_attempts)
        .map(|_| Edit::draw(rng, parent.len(), cfg))
        .collect()
}

/// Applies edits in order and keeps the first whose result fits the length
/// limits; falls back to the parent.
pub fn first_valid(parent: &Genotype, edits: &[Edit], cfg: &MutationConfig) -> Mutant {
    for e in edits {
        let child = e.apply(parent);
        if child.len() > cfg.max_genotype_len {
            continue;
        }
        let graph = decode(&child);
        let text = canonical(&graph);
        if text.len() <= cfg.max_canonical_len {
            return Mutant {
                genotype: child,
                graph,
                canonical: text,
                kind: Some(e.kind),
            };
        }
    }
    let graph = decode(parent);
    Mutant {
        genotype: parent.clone(),
        canonical: canonical(&graph),
        graph,
        kind: None,
    }
}

pub fn mutate<R: Rng + ?Sized>(parent: &Genotype, rng: &mut R, cfg: &MutationConfig) -> Mutant {
    let edits = draw_edits(rng, parent, cfg);
    first_valid(parent, &edits, cfg)
}
