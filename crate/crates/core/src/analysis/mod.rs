//! Population analysis over fingerprint bit-vectors: k-means clustering,
//! two-component PCA, diversity metrics and snapshot reports.

mod kmeans;
mod pca;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::decode;
use crate::molgraph::{fingerprint, tanimoto, Fingerprint, DEFAULT_NBITS, DEFAULT_RADIUS};
use crate::tasks::Snapshot;

pub use kmeans::{kmeans, ClusterAssignment, MAX_LLOYD_ITERATIONS};
pub use pca::{pca2, Pca, POWER_MAX_ITERATIONS, POWER_TOLERANCE};

pub const DEFAULT_CLUSTERS: usize = 20;
/// Molecules per snapshot in [`snapshot_report`].
pub const SNAPSHOT_TOP: usize = 50;
/// Populations larger than this use sampled pairs in [`mean_pairwise_tanimoto`].
pub const EXACT_PAIR_LIMIT: usize = 1000;
pub const SAMPLED_PAIRS: usize = 100_000;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{points} points given, at least {needed} required")]
    TooFewPoints { points: usize, needed: usize },
    #[error("points have inconsistent or too small dimension")]
    DimensionMismatch,
    #[error("data has zero total variance")]
    DegenerateData,
    #[error("no snapshot for generation {0}")]
    MissingGeneration(usize),
    #[error("cannot read {path}: {reason}")]
    Read { path: PathBuf, reason: String },
}

/// Mean Tanimoto similarity over all pairs, or over [`SAMPLED_PAIRS`] seeded
/// random pairs when there are more than [`EXACT_PAIR_LIMIT`] fingerprints.
/// Fewer than two fingerprints give 1.
pub fn mean_pairwise_tanimoto(fps: &[Fingerprint], seed: u64) -> f64 {
    let n = fps.len();
    if n < 2 {
        return 1.0;
    }
    if n <= EXACT_PAIR_LIMIT {
        let sum: f64 = (0..n)
            .into_par_iter()
            .map(|i| (i + 1..n).map(|j| tanimoto(&fps[i], &fps[j])).sum::<f64>())
            .sum();
        return sum / (n * (n - 1) / 2) as f64;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(usize, usize)> = (0..SAMPLED_PAIRS)
        .map(|_| {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            (i, j)
        })
        .collect();
    pairs.par_iter().map(|&(i, j)| tanimoto(&fps[i], &fps[j])).sum::<f64>() / SAMPLED_PAIRS as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diversity {
    pub mean_tanimoto: f64,
    /// Populated clusters when k-means runs with `min(k, n)` clusters.
    pub clusters: usize,
}

pub fn diversity(fps: &[Fingerprint], k: usize, seed: u64) -> Result<Diversity, AnalysisError> {
    if fps.len() < 2 {
        return Err(AnalysisError::TooFewPoints { points: fps.len(), needed: 2 });
    }
    let dense: Vec<Vec<f64>> = fps.iter().map(Fingerprint::to_dense).collect();
    let clusters = kmeans(&dense, k.min(fps.len()), seed)?.populated();
    Ok(Diversity {
        mean_tanimoto: mean_pairwise_tanimoto(fps, seed),
        clusters,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotPoint {
    pub generation: usize,
    pub rank: usize,
    pub canonical: String,
    pub j: f64,
    pub cluster: usize,
    pub pc: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotSummary {
    pub generation: usize,
    pub diversity: Diversity,
    /// Most common cluster label among this snapshot's molecules.
    pub majority_cluster: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotReport {
    pub points: Vec<SnapshotPoint>,
    pub summaries: Vec<SnapshotSummary>,
    /// Explained variance ratios; zero when the selection has no variance.
    pub explained: [f64; 2],
}

pub const POINTS_HEADER: &str = "generation,rank,canonical,j,cluster,pc1,pc2";

impl SnapshotReport {
    pub fn points_csv(&self) -> String {
        let mut out = format!("{POINTS_HEADER}\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                p.generation, p.rank, p.canonical, p.j, p.cluster, p.pc[0], p.pc[1]
            ));
        }
        out
    }

    pub fn diversity_csv(&self) -> String {
        let mut out = String::from("generation,mean_tanimoto,clusters,majority_cluster\n");
        for s in &self.summaries {
            out.push_str(&format!(
                "{},{},{},{}\n",
                s.generation, s.diversity.mean_tanimoto, s.diversity.clusters, s.majority_cluster
            ));
        }
        out
    }

    /// Long format: one row per (molecule, variable).
    pub fn plot_data(&self) -> String {
        let mut out = String::from("generation,rank,canonical,cluster,variable,value\n");
        for p in &self.points {
            for (name, v) in [("j", p.j), ("pc1", p.pc[0]), ("pc2", p.pc[1])] {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    p.generation, p.rank, p.canonical, p.cluster, name, v
                ));
            }
        }
        out
    }
}

/// Clusters and projects the best [`SNAPSHOT_TOP`] distinct molecules of each
/// requested snapshot. Clusters and PCA axes are fitted on the union of all
/// selected molecules so labels and coordinates are comparable across
/// generations.
pub fn snapshot_report(
    snapshots: &[Snapshot],
    generations: &[usize],
    k: usize,
    seed: u64,
) -> Result<SnapshotReport, AnalysisError> {
    let mut selected: Vec<(usize, usize, String, f64, Fingerprint)> = Vec::new();
    let mut spans = Vec::new();
    for &g in generations {
        let snap = snapshots
            .iter()
            .find(|s| s.generation == g)
            .ok_or(AnalysisError::MissingGeneration(g))?;
        let mut rows: Vec<_> = snap.rows.iter().collect();
        rows.sort_by(|a, b| b.j.total_cmp(&a.j).then_with(|| a.canonical.cmp(&b.canonical)));
        let mut seen = BTreeSet::new();
        let start = selected.len();
        for r in rows {
            if selected.len() - start == SNAPSHOT_TOP {
                break;
            }
            if seen.insert(r.canonical.clone()) {
                let fp = fingerprint(&decode(&r.genotype), DEFAULT_RADIUS, DEFAULT_NBITS);
                selected.push((g, selected.len() - start, r.canonical.clone(), r.j, fp));
            }
        }
        spans.push((g, start..selected.len()));
    }
    if selected.is_empty() {
        return Err(AnalysisError::TooFewPoints { points: 0, needed: 1 });
    }
    let dense: Vec<Vec<f64>> = selected.iter().map(|s| s.4.to_dense()).collect();
    let clusters = kmeans(&dense, k.min(dense.len()), seed)?;
    let (coords, explained) = match pca2(&dense) {
        Ok(p) => (p.projections.clone(), p.ratios),
        Err(AnalysisError::DegenerateData | AnalysisError::TooFewPoints { .. }) => {
            (vec![[0.0, 0.0]; dense.len()], [0.0, 0.0])
        }
        Err(e) => return Err(e),
    };
    let points: Vec<SnapshotPoint> = selected
        .iter()
        .enumerate()
        .map(|(i, s)| SnapshotPoint {
            generation: s.0,
            rank: s.1,
            canonical: s.2.clone(),
            j: s.3,
            cluster: clusters.labels[i],
            pc: coords[i],
        })
        .collect();
    let mut summaries = Vec::new();
    for (g, range) in spans {
        let fps: Vec<Fingerprint> = selected[range.clone()].iter().map(|s| s.4.clone()).collect();
        let mut counts = vec![0usize; clusters.k()];
        for &l in &clusters.labels[range] {
            counts[l] += 1;
        }
        let majority_cluster = (0..counts.len())
            .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
            .unwrap_or(0);
        let diversity = if fps.len() >= 2 {
            diversity(&fps, k, seed)?
        } else {
            Diversity {
                mean_tanimoto: 1.0,
                clusters: fps.len(),
            }
        };
        summaries.push(SnapshotSummary {
            generation: g,
            diversity,
            majority_cluster,
        });
    }
    Ok(SnapshotReport {
        points,
        summaries,
        explained,
    })
}

/// Reads every `snapshots/gen_NNNNN.tsv` under a run directory, in
/// generation order.
pub fn load_snapshots(run_dir: &Path) -> Result<Vec<Snapshot>, AnalysisError> {
    let dir = run_dir.join("snapshots");
    let read_err = |path: &Path, reason: String| AnalysisError::Read {
        path: path.to_path_buf(),
        reason,
    };
    let entries = fs::read_dir(&dir).map_err(|e| read_err(&dir, e.to_string()))?;
    let mut found = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| read_err(&dir, e.to_string()))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        let gen = name
            .strip_prefix("gen_")
            .and_then(|r| r.strip_suffix(".tsv"))
            .and_then(|g| g.parse::<usize>().ok());
        if let Some(g) = gen {
            found.push((g, path));
        }
    }
    found.sort();
    found
        .into_iter()
        .map(|(g, path)| {
            let text = fs::read_to_string(&path).map_err(|e| read_err(&path, e.to_string()))?;
            Snapshot::from_tsv(g, &text).map_err(|e| read_err(&path, e))
        })
        .collect()
}
