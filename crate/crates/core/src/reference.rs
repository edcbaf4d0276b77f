//! Reference molecule sets: loading, per-line diagnostics and the frozen
//! normalization statistics derived from them.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{decode, random_genotype, DEFAULT_MAX_LEN};
use crate::discriminator::{featurize_with, FeatureScaler, FeatureVector};
use crate::molgraph::{canonical, parse_smiles, MolecularGraph, SmilesError};
use crate::properties::{fit_norm_from, Descriptors, NormStats};

/// Minimum number of usable molecules in a reference set.
pub const MIN_REFERENCE: usize = 100;

/// The bundled neutral-organic sample.
pub const BUNDLED_SMILES: &str = include_str!("../data/reference.smi");

#[derive(Debug, Error)]
pub enum ReferenceError {
    #[error("cannot read reference file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("reference set has {usable} usable molecules, at least {MIN_REFERENCE} required")]
    EmptyReference { usable: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineIssue {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    /// Non-blank, non-comment lines.
    pub entries: usize,
    pub usable: usize,
    pub unsupported: usize,
    pub failed: usize,
    pub issues: Vec<LineIssue>,
}

impl LoadReport {
    pub fn usable_fraction(&self) -> f64 {
        if self.entries == 0 {
            0.0
        } else {
            self.usable as f64 / self.entries as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReferenceSet {
    pub source: String,
    pub smiles: Vec<String>,
    pub graphs: Vec<MolecularGraph>,
    pub descriptors: Vec<Descriptors>,
    pub features: Vec<FeatureVector>,
    pub stats: NormStats,
    pub scaler: FeatureScaler,
    pub report: LoadReport,
}

impl ReferenceSet {
    /// Fits statistics over already parsed molecules.
    pub fn from_graphs(
        source: impl Into<String>,
        smiles: Vec<String>,
        graphs: Vec<MolecularGraph>,
        report: LoadReport,
    ) -> Result<Self, ReferenceError> {
        if graphs.len() < MIN_REFERENCE {
            return Err(ReferenceError::EmptyReference { usable: graphs.len() });
        }
        let descriptors: Vec<Descriptors> = graphs.iter().map(Descriptors::of).collect();
        let features: Vec<FeatureVector> = graphs
            .iter()
            .zip(&descriptors)
            .map(|(g, d)| featurize_with(g, d))
            .collect();
        let stats = fit_norm_from(&descriptors).map_err(|_| ReferenceError::EmptyReference { usable: 0 })?;
        let scaler = FeatureScaler::fit(&features).map_err(|_| ReferenceError::EmptyReference { usable: 0 })?;
        Ok(Self {
            source: source.into(),
            smiles,
            graphs,
            descriptors,
            features,
            stats,
            scaler,
            report,
        })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    /// Raw property values over the set, in input order.
    pub fn column(&self, f: impl Fn(&Descriptors) -> f64) -> Vec<f64> {
        self.descriptors.iter().map(f).collect()
    }
}

/// Parses newline-delimited SMILES (`#` starts a comment line), keeping
/// going past bad lines and recording why each was skipped.
pub fn parse_reference_text(text: &str) -> (Vec<String>, Vec<MolecularGraph>, LoadReport) {
    let mut report = LoadReport::default();
    let mut smiles = Vec::new();
    let mut graphs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        // tolerate "SMILES name" style lines
        let token = line.split_whitespace().next().unwrap_or(line);
        report.entries += 1;
        match parse_smiles(token) {
            Ok(g) => {
                report.usable += 1;
                smiles.push(token.to_string());
                graphs.push(g);
            }
            Err(e) => {
                if matches!(e, SmilesError::UnsupportedFeature { .. }) {
                    report.unsupported += 1;
                } else {
                    report.failed += 1;
                }
                report.issues.push(LineIssue {
                    line: i + 1,
                    reason: e.to_string(),
                });
            }
        }
    }
    (smiles, graphs, report)
}

pub fn load_reference(path: &Path) -> Result<ReferenceSet, ReferenceError> {
    let text = fs::read_to_string(path).map_err(|source| ReferenceError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let (smiles, graphs, report) = parse_reference_text(&text);
    ReferenceSet::from_graphs(path.display().to_string(), smiles, graphs, report)
}

pub fn bundled_reference() -> ReferenceSet {
    let (smiles, graphs, report) = parse_reference_text(BUNDLED_SMILES);
    ReferenceSet::from_graphs("bundled", smiles, graphs, report).expect("bundled reference is valid")
}

/// `n` decoded random genotypes whose canonical text has 10 to 81 characters.
pub fn synthetic_reference(n: usize, seed: u64) -> Result<ReferenceSet, ReferenceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut smiles = Vec::with_capacity(n);
    let mut graphs = Vec::with_capacity(n);
    while graphs.len() < n {
        let g = decode(&random_genotype(&mut rng, DEFAULT_MAX_LEN));
        let text = canonical(&g);
        if (10..=81).contains(&text.len()) {
            smiles.push(text);
            graphs.push(g);
        }
    }
    let report = LoadReport {
        entries: n,
        usable: n,
        ..Default::default()
    };
    ReferenceSet::from_graphs(format!("synthetic:{n}:{seed}"), smiles, graphs, report)
}
