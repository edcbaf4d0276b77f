use serde::{Deserialize, Serialize};

use crate::codec::Genotype;
use crate::properties::PropertyRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub genotype: Genotype,
    pub canonical: String,
    pub score: f64,
    pub record: PropertyRecord,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub similarity: Option<f64>,
    /// Generation in which the molecule was first seen.
    pub generation: usize,
}

/// Best distinct molecules ever seen, ordered by objective score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Archive {
    capacity: usize,
    entries: Vec<ArchiveEntry>,
}

impl Archive {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            entries: Vec::new(),
        }
    }

    /// Inserts unless the molecule is already present or does not beat the
    /// current worst entry of a full archive.
    pub fn offer(&mut self, entry: ArchiveEntry) -> bool {
        if !entry.score.is_finite() || self.entries.iter().any(|e| e.canonical == entry.canonical) {
            return false;
        }
        if self.entries.len() == self.capacity {
            match self.entries.last() {
                Some(worst) if entry.score > worst.score => {
                    self.entries.pop();
                }
                _ => return false,
            }
        }
        let at = self
            .entries
            .partition_point(|e| e.score > entry.score || (e.score == entry.score && e.canonical < entry.canonical));
        self.entries.insert(at, entry);
        true
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn best(&self) -> Option<&ArchiveEntry> {
        self.entries.first()
    }

    pub fn best_score(&self) -> f64 {
        self.best().map_or(f64::NEG_INFINITY, |e| e.score)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
