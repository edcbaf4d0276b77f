//! `run_report.json`: configuration echo, reference summary, task result and
//! a timing block that is excluded from the determinism hash.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::properties::NormStats;
use crate::reference::{LoadReport, ReferenceSet};
use crate::tasks::{Artifact, TaskResult};

pub const REPORT_FILE: &str = "run_report.json";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSummary {
    pub source: String,
    pub molecules: usize,
    pub load: LoadReport,
    pub stats: NormStats,
}

impl ReferenceSummary {
    pub fn of(r: &ReferenceSet) -> Self {
        let mut load = r.report.clone();
        // keep the report bounded for large files
        load.issues.truncate(100);
        Self {
            source: r.source.clone(),
            molecules: r.len(),
            load,
            stats: r.stats,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    pub task: String,
    pub seed: u64,
    pub config: RunConfig,
    pub reference: ReferenceSummary,
    pub result: TaskResult,
    pub determinism_hash: String,
    pub timing: Timing,
}

impl RunReport {
    pub fn new(config: &RunConfig, reference: &ReferenceSet, result: TaskResult, timing: Timing) -> Self {
        let mut report = Self {
            version: REPORT_VERSION,
            task: config.task.name().to_string(),
            seed: config.seed,
            config: config.clone(),
            reference: ReferenceSummary::of(reference),
            result,
            determinism_hash: String::new(),
            timing,
        };
        report.determinism_hash = report.compute_hash();
        report
    }

    /// SHA-256 (hex) of the compact JSON without `timing`, the hash itself,
    /// and the execution-only config fields `threads` and `output_dir`.
    pub fn compute_hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("timing");
            obj.remove("determinism_hash");
            if let Some(cfg) = obj.get_mut("config").and_then(|c| c.as_object_mut()) {
                cfg.remove("threads");
                cfg.remove("output_dir");
            }
        }
        let digest = Sha256::digest(value.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// Writes the report and every artifact under `dir`.
pub fn write_outputs(dir: &Path, report: &RunReport, artifacts: &[Artifact]) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(REPORT_FILE), report.to_json())?;
    for a in artifacts {
        let path = dir.join(&a.path);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, &a.contents)?;
    }
    Ok(())
}
