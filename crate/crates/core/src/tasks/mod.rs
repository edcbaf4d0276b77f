//! Experiment drivers: unconstrained and adaptive-penalty optimization,
//! similarity-constrained improvement, property targeting, the combined
//! logP/QED objective, a random-genotype baseline and a `β` sweep.
//!
//! Batch runners execute independent runs in parallel; run `i` of a batch
//! uses [`derive_seed`]`(seed, i)`, so run 0 reproduces a single run with the
//! master seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::mean_pairwise_tanimoto;
use crate::codec::{decode, encode, random_genotype, CodecError, Genotype};
use crate::config::{RunConfig, TaskSpec};
use crate::discriminator::Discriminator;
use crate::evolver::{
    logs_to_csv, ArchiveEntry, Evaluator, Evolver, EvolverError, GenerationLog, Individual, Objective, RunTrace,
};
use crate::molgraph::{canonical, fingerprint, parse_smiles, SmilesError, DEFAULT_NBITS, DEFAULT_RADIUS};
use crate::properties::{Descriptors, PropertyRecord};
use crate::reference::ReferenceSet;
use crate::schedules::{BetaMode, BetaSchedule};

/// Subtracted from `j` when the similarity constraint is violated.
pub const SIMILARITY_PENALTY: f64 = 1e6;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error(transparent)]
    Evolver(#[from] EvolverError),
    #[error("cannot parse starting molecule `{smiles}`: {source}")]
    Smiles { smiles: String, source: SmilesError },
    #[error("cannot encode starting molecule `{smiles}`: {source}")]
    Codec { smiles: String, source: CodecError },
    #[error("{0}")]
    Invalid(String),
}

/// Raw (unnormalized) property targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertyTargets {
    pub logp: f64,
    pub sa: f64,
    pub ring: f64,
}

/// `j` if `sim > delta`, otherwise `j - 10^6`.
pub fn constrained_fitness(j: f64, sim: f64, delta: f64) -> f64 {
    if sim > delta {
        j
    } else {
        j - SIMILARITY_PENALTY
    }
}

/// Negative summed squared difference between raw properties and targets.
pub fn property_target_fitness(r: &PropertyRecord, t: &PropertyTargets) -> f64 {
    -((r.logp_raw - t.logp).powi(2) + (r.sa_raw - t.sa).powi(2) + (r.ring_raw - t.ring).powi(2))
}

/// Seed of run `index` in a batch; index 0 keeps the master seed.
pub fn derive_seed(master: u64, index: usize) -> u64 {
    if index == 0 {
        return master;
    }
    // splitmix64 finalizer
    let mut z = master.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A file produced by a runner, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub path: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRow {
    pub genotype: Genotype,
    pub canonical: String,
    pub j: f64,
    pub score: f64,
}

/// Whole population at one generation, sorted by `j` (best first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub generation: usize,
    pub rows: Vec<SnapshotRow>,
}

pub const SNAPSHOT_HEADER: &str = "genotype\tcanonical\tj\tscore";

impl Snapshot {
    pub fn of(generation: usize, population: &[Individual]) -> Self {
        let mut rows: Vec<SnapshotRow> = population
            .iter()
            .map(|i| SnapshotRow {
                genotype: i.genotype.clone(),
                canonical: i.canonical.clone(),
                j: i.record.j,
                score: i.score,
            })
            .collect();
        rows.sort_by(|a, b| b.j.total_cmp(&a.j).then_with(|| a.canonical.cmp(&b.canonical)));
        Self { generation, rows }
    }

    pub fn file_name(generation: usize) -> String {
        format!("snapshots/gen_{generation:05}.tsv")
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("{SNAPSHOT_HEADER}\n");
        for r in &self.rows {
            out.push_str(&format!("{}\t{}\t{}\t{}\n", r.genotype, r.canonical, r.j, r.score));
        }
        out
    }

    pub fn from_tsv(generation: usize, text: &str) -> Result<Self, String> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(format!("line {}: expected 4 columns", i + 1));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| format!("line {}: {e}", i + 1));
            rows.push(SnapshotRow {
                genotype: cols[0].parse().map_err(|e| format!("line {}: {e}", i + 1))?,
                canonical: cols[1].to_string(),
                j: num(cols[2])?,
                score: num(cols[3])?,
            });
        }
        Ok(Self { generation, rows })
    }
}

/// Result of one evolutionary run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResult {
    pub seed: u64,
    pub generations_run: usize,
    pub final_max_j: f64,
    pub best_ever_score: f64,
    pub best_history: Vec<f64>,
    /// Generations after which the adaptive schedule raised `β`.
    pub triggers: Vec<usize>,
    /// Mean pairwise Tanimoto similarity of the final population.
    pub final_diversity: f64,
    pub archive: Vec<ArchiveEntry>,
    pub logs: Vec<GenerationLog>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub qed_scatter: Option<QedScatter>,
}

/// Archive molecules against reference distributions in the (logP, QED) plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QedScatter {
    pub reference_qed_p99: f64,
    pub reference_logp_median: f64,
    /// Archive molecules with QED above the reference 99th percentile and
    /// logP above the reference median.
    pub edge_count: usize,
    pub max_qed_canonical: String,
    pub max_logp_canonical: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedOutcome {
    pub smiles: String,
    pub seed: u64,
    pub start_j: f64,
    /// Best molecule with similarity above `delta`, if any was found.
    pub best: Option<ArchiveEntry>,
    pub improvement: f64,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedResult {
    pub delta: f64,
    pub success_rate: f64,
    pub mean_improvement: f64,
    pub std_improvement: f64,
    pub skipped: Vec<String>,
    pub molecules: Vec<ConstrainedOutcome>,
}

/// Affine map from literature property ranges onto surrogate ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeMap {
    pub from: (f64, f64),
    pub to: (f64, f64),
}

impl RangeMap {
    pub fn apply(&self, x: f64) -> f64 {
        let t = (x - self.from.0) / (self.from.1 - self.from.0);
        self.to.0 + t * (self.to.1 - self.to.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetMapping {
    pub logp: RangeMap,
    pub sa: RangeMap,
    pub ring: RangeMap,
}

impl TargetMapping {
    /// logP in [-5, 10], SA in [1, 5] and ring penalty in [0, 3] mapped onto
    /// the reference set's min/max of the corresponding surrogate.
    pub fn from_reference(reference: &ReferenceSet) -> Self {
        let span = |v: Vec<f64>| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        };
        Self {
            logp: RangeMap {
                from: (-5.0, 10.0),
                to: span(reference.column(|d| d.logp_raw)),
            },
            sa: RangeMap {
                from: (1.0, 5.0),
                to: span(reference.column(|d| d.sa_raw)),
            },
            ring: RangeMap {
                from: (0.0, 3.0),
                to: span(reference.column(|d| d.ring_raw)),
            },
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> PropertyTargets {
        let logp = self.logp.apply(rng.random_range(-5.0..=10.0));
        let sa = self.sa.apply(rng.random_range(1.0..=5.0));
        let ring = self.ring.apply(rng.random_range(0.0..=3.0));
        PropertyTargets { logp, sa, ring }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetOutcome {
    pub targets: PropertyTargets,
    pub seed: u64,
    pub success: bool,
    /// Generation at which the threshold was first met.
    pub generation_reached: Option<usize>,
    pub best_error: f64,
    pub best: Option<ArchiveEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyTargetResult {
    pub threshold: f64,
    pub mapping: TargetMapping,
    pub success_rate: f64,
    pub outcomes: Vec<TargetOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn of(values: &[f64], bins: usize) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let edges = (0..=bins).map(|i| lo + i as f64 * width).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        Self { edges, counts }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lower,upper,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", self.edges[i], self.edges[i + 1], c));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub n: usize,
    pub max_j: f64,
    pub mean_j: f64,
    pub std_j: f64,
    pub best_genotype: Genotype,
    pub best_canonical: String,
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: f64,
    pub seeds: Vec<u64>,
    /// Per-generation averages over seeds.
    pub mean_j: Vec<f64>,
    pub mean_d: Vec<f64>,
    pub max_j: Vec<f64>,
    /// Mean `j` of each seed's final population.
    pub final_mean_j: Vec<f64>,
    /// Average of `mean_d` over the last quarter of the run.
    pub late_mean_d: f64,
    /// `j` of every molecule in the final populations.
    pub final_j: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum TaskResult {
    Evolution(EvolutionResult),
    Constrained(ConstrainedResult),
    PropertyTarget(PropertyTargetResult),
    RandomBaseline(BaselineResult),
    BetaSweep(SweepResult),
}

#[derive(Debug, Clone)]
pub struct TaskOutput {
    pub result: TaskResult,
    pub artifacts: Vec<Artifact>,
}

/// Everything a single evolutionary run needs besides the configuration.
pub struct RunPlan<'a> {
    pub objective: Objective,
    pub mode: BetaMode,
    pub attach_discriminator: bool,
    pub seed: u64,
    pub initial: &'a [Genotype],
}

/// Runs one evolution, collecting snapshots every `config.snapshot_every`
/// generations plus the last one. `stop` ends the run early.
pub fn evolve(
    config: &RunConfig,
    reference: &ReferenceSet,
    plan: RunPlan<'_>,
    stop: impl Fn(&GenerationLog, &[Individual]) -> bool,
) -> Result<(RunTrace, Evolver, Vec<Snapshot>), TaskError> {
    let evaluator = Evaluator::new(reference.stats, plan.objective);
    let mut evolver = Evolver::new(config.evolver.clone(), evaluator, plan.seed, plan.initial)?;
    if plan.attach_discriminator {
        let model = Discriminator::new(derive_seed(plan.seed, 1), reference.scaler.clone());
        evolver.attach_discriminator(model, reference.features.clone(), config.discriminator)?;
    }
    let mut schedule = BetaSchedule::new(plan.mode);
    let every = config.snapshot_every;
    let mut snapshots = Vec::new();
    let trace = evolver.run(config.generations, &mut schedule, |log, pop| {
        if every > 0 && log.generation % every == 0 {
            snapshots.push(Snapshot::of(log.generation, pop));
        }
        !stop(log, pop)
    })?;
    let last = evolver.generation();
    if snapshots.last().map(|s| s.generation) != Some(last) {
        snapshots.push(Snapshot::of(last, evolver.population()));
    }
    Ok((trace, evolver, snapshots))
}

fn evolution_result(seed: u64, trace: RunTrace, evolver: &Evolver) -> EvolutionResult {
    let fps: Vec<_> = evolver
        .population()
        .iter()
        .map(|i| fingerprint(&i.graph, DEFAULT_RADIUS, DEFAULT_NBITS))
        .collect();
    EvolutionResult {
        seed,
        generations_run: evolver.generation(),
        final_max_j: trace.logs.last().map_or(f64::NAN, |l| l.max_j),
        best_ever_score: trace.archive.best_score(),
        best_history: trace.best_history,
        triggers: trace.triggers,
        final_diversity: mean_pairwise_tanimoto(&fps, seed),
        archive: trace.archive.entries().to_vec(),
        logs: trace.logs,
        qed_scatter: None,
    }
}

fn evolution_artifacts(result: &EvolutionResult, snapshots: &[Snapshot]) -> Vec<Artifact> {
    let mut out = vec![Artifact {
        path: "generations.csv".into(),
        contents: logs_to_csv(&result.logs),
    }];
    for s in snapshots {
        out.push(Artifact {
            path: Snapshot::file_name(s.generation),
            contents: s.to_tsv(),
        });
    }
    out
}

fn run_evolution(
    config: &RunConfig,
    reference: &ReferenceSet,
    objective: Objective,
    mode: BetaMode,
    attach: bool,
) -> Result<(EvolutionResult, Vec<Artifact>), TaskError> {
    let plan = RunPlan {
        objective,
        mode,
        attach_discriminator: attach,
        seed: config.seed,
        initial: &[],
    };
    let (trace, evolver, snapshots) = evolve(config, reference, plan, |_, _| false)?;
    let result = evolution_result(config.seed, trace, &evolver);
    let artifacts = evolution_artifacts(&result, &snapshots);
    Ok((result, artifacts))
}

/// Penalized-logP optimization with constant `beta`; a discriminator is
/// attached only when `beta > 0`.
pub fn run_unconstrained(config: &RunConfig, reference: &ReferenceSet, beta: f64) -> Result<TaskOutput, TaskError> {
    let (result, artifacts) = run_evolution(
        config,
        reference,
        Objective::PenalizedLogP,
        BetaMode::Constant { beta },
        beta > 0.0,
    )?;
    Ok(TaskOutput {
        result: TaskResult::Evolution(result),
        artifacts,
    })
}

/// Penalized-logP optimization with the stagnation-triggered `β` schedule.
pub fn run_adaptive(config: &RunConfig, reference: &ReferenceSet, mode: BetaMode) -> Result<TaskOutput, TaskError> {
    let (result, artifacts) = run_evolution(config, reference, Objective::PenalizedLogP, mode, true)?;
    Ok(TaskOutput {
        result: TaskResult::Evolution(result),
        artifacts,
    })
}

fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Maximizes `w_j·j + w_qed·qed` and reports where the archive sits
/// relative to the reference (logP, QED) distribution.
pub fn run_logp_qed(config: &RunConfig, reference: &ReferenceSet, w_j: f64, w_qed: f64) -> Result<TaskOutput, TaskError> {
    let (mut result, mut artifacts) = run_evolution(
        config,
        reference,
        Objective::LogpQed { w_j, w_qed },
        BetaMode::Constant { beta: 0.0 },
        false,
    )?;
    let qed_p99 = percentile(&reference.column(|d| d.qed), 0.99);
    let logp_median = percentile(&reference.column(|d| d.logp_raw), 0.5);
    let by = |f: fn(&ArchiveEntry) -> f64| {
        result
            .archive
            .iter()
            .max_by(|a, b| f(a).total_cmp(&f(b)).then_with(|| b.canonical.cmp(&a.canonical)))
            .map(|e| e.canonical.clone())
            .unwrap_or_default()
    };
    let scatter = QedScatter {
        reference_qed_p99: qed_p99,
        reference_logp_median: logp_median,
        edge_count: result
            .archive
            .iter()
            .filter(|e| e.record.qed > qed_p99 && e.record.logp_raw > logp_median)
            .count(),
        max_qed_canonical: by(|e| e.record.qed),
        max_logp_canonical: by(|e| e.record.logp_raw),
    };
    let mut csv = String::from("source,canonical,logp_raw,qed\n");
    for e in &result.archive {
        csv.push_str(&format!("archive,{},{},{}\n", e.canonical, e.record.logp_raw, e.record.qed));
    }
    for (s, d) in reference.smiles.iter().zip(&reference.descriptors) {
        csv.push_str(&format!("reference,{},{},{}\n", s, d.logp_raw, d.qed));
    }
    artifacts.push(Artifact {
        path: "logp_qed_scatter.csv".into(),
        contents: csv,
    });
    result.qed_scatter = Some(scatter);
    Ok(TaskOutput {
        result: TaskResult::Evolution(result),
        artifacts,
    })
}

/// Improves one starting molecule under the similarity constraint, without
/// a discriminator.
pub fn run_single_constrained(
    config: &RunConfig,
    reference: &ReferenceSet,
    smiles: &str,
    delta: f64,
    seed: u64,
) -> Result<ConstrainedOutcome, TaskError> {
    let graph = parse_smiles(smiles).map_err(|source| TaskError::Smiles {
        smiles: smiles.into(),
        source,
    })?;
    let genotype = encode(&graph).map_err(|source| TaskError::Codec {
        smiles: smiles.into(),
        source,
    })?;
    let start = PropertyRecord::from_descriptors(&Descriptors::of(&graph), &reference.stats);
    let plan = RunPlan {
        objective: Objective::Constrained {
            reference: fingerprint(&graph, DEFAULT_RADIUS, DEFAULT_NBITS),
            delta,
        },
        mode: BetaMode::Constant { beta: 0.0 },
        attach_discriminator: false,
        seed,
        initial: std::slice::from_ref(&genotype),
    };
    let cfg = RunConfig {
        snapshot_every: 0,
        ..config.clone()
    };
    let (trace, _, _) = evolve(&cfg, reference, plan, |_, _| false)?;
    let best = trace
        .archive
        .entries()
        .iter()
        .find(|e| e.similarity.is_some_and(|s| s > delta))
        .cloned();
    let improvement = best.as_ref().map_or(0.0, |b| b.record.j - start.j);
    Ok(ConstrainedOutcome {
        smiles: smiles.into(),
        seed,
        start_j: start.j,
        success: best.is_some() && improvement > 0.0,
        best,
        improvement,
    })
}

/// The `count` lowest-`j` reference molecules that can be encoded.
pub fn lowest_scoring(reference: &ReferenceSet, count: usize) -> Vec<String> {
    let mut order: Vec<usize> = (0..reference.len()).collect();
    let j: Vec<f64> = reference
        .descriptors
        .iter()
        .map(|d| PropertyRecord::from_descriptors(d, &reference.stats).j)
        .collect();
    order.sort_by(|&a, &b| j[a].total_cmp(&j[b]).then(a.cmp(&b)));
    order
        .into_iter()
        .filter(|&i| encode(&reference.graphs[i]).is_ok())
        .take(count)
        .map(|i| reference.smiles[i].clone())
        .collect()
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn run_constrained(
    config: &RunConfig,
    reference: &ReferenceSet,
    molecules: &[String],
    count: usize,
    delta: f64,
) -> Result<TaskOutput, TaskError> {
    let molecules = if molecules.is_empty() {
        lowest_scoring(reference, count)
    } else {
        molecules.to_vec()
    };
    let runs: Vec<Result<ConstrainedOutcome, TaskError>> = molecules
        .par_iter()
        .enumerate()
        .map(|(i, s)| run_single_constrained(config, reference, s, delta, derive_seed(config.seed, i)))
        .collect();
    let mut outcomes = Vec::new();
    let mut skipped = Vec::new();
    for (s, r) in molecules.iter().zip(runs) {
        match r {
            Ok(o) => outcomes.push(o),
            Err(TaskError::Smiles { .. } | TaskError::Codec { .. }) => skipped.push(s.clone()),
            Err(e) => return Err(e),
        }
    }
    let improvements: Vec<f64> = outcomes.iter().map(|o| o.improvement).collect();
    let (mean_improvement, std_improvement) = mean_std(&improvements);
    let success_rate = if outcomes.is_empty() {
        0.0
    } else {
        outcomes.iter().filter(|o| o.success).count() as f64 / outcomes.len() as f64
    };
    let mut csv = String::from("smiles,start_j,best_canonical,best_j,similarity,improvement,success\n");
    for o in &outcomes {
        let (canon, j, sim) = match &o.best {
            Some(b) => (b.canonical.clone(), b.record.j, b.similarity.unwrap_or(f64::NAN)),
            None => (String::new(), f64::NAN, f64::NAN),
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            o.smiles, o.start_j, canon, j, sim, o.improvement, o.success
        ));
    }
    Ok(TaskOutput {
        result: TaskResult::Constrained(ConstrainedResult {
            delta,
            success_rate,
            mean_improvement,
            std_improvement,
            skipped,
            molecules: outcomes,
        }),
        artifacts: vec![Artifact {
            path: "constrained.csv".into(),
            contents: csv,
        }],
    })
}

/// Searches for a molecule within `threshold` summed squared error of the
/// targets, stopping at the first generation that contains one.
pub fn run_single_target(
    config: &RunConfig,
    reference: &ReferenceSet,
    targets: PropertyTargets,
    threshold: f64,
    seed: u64,
) -> Result<TargetOutcome, TaskError> {
    let plan = RunPlan {
        objective: Objective::PropertyTarget(targets),
        mode: BetaMode::Constant { beta: 0.0 },
        attach_discriminator: false,
        seed,
        initial: &[],
    };
    let cfg = RunConfig {
        snapshot_every: 0,
        ..config.clone()
    };
    let (trace, _, _) = evolve(&cfg, reference, plan, |log, _| -log.best_ever_score < threshold)?;
    let best = trace.archive.best().cloned();
    let best_error = -trace.archive.best_score();
    let generation_reached = trace
        .best_history
        .iter()
        .position(|&s| -s < threshold);
    Ok(TargetOutcome {
        targets,
        seed,
        success: best_error < threshold,
        generation_reached,
        best_error,
        best,
    })
}

pub fn run_property_target(
    config: &RunConfig,
    reference: &ReferenceSet,
    targets: &[PropertyTargets],
    count: usize,
    threshold: f64,
) -> Result<TaskOutput, TaskError> {
    let mapping = TargetMapping::from_reference(reference);
    let targets: Vec<PropertyTargets> = if targets.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        (0..count).map(|_| mapping.draw(&mut rng)).collect()
    } else {
        targets.to_vec()
    };
    let outcomes: Vec<TargetOutcome> = targets
        .par_iter()
        .enumerate()
        .map(|(i, t)| run_single_target(config, reference, *t, threshold, derive_seed(config.seed, i)))
        .collect::<Result<_, _>>()?;
    let success_rate = outcomes.iter().filter(|o| o.success).count() as f64 / outcomes.len().max(1) as f64;
    let mut csv = String::from("logp_target,sa_target,ring_target,success,generation_reached,best_error,best_canonical\n");
    for o in &outcomes {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            o.targets.logp,
            o.targets.sa,
            o.targets.ring,
            o.success,
            o.generation_reached.map_or(String::new(), |g| g.to_string()),
            o.best_error,
            o.best.as_ref().map_or("", |b| b.canonical.as_str())
        ));
    }
    Ok(TaskOutput {
        result: TaskResult::PropertyTarget(PropertyTargetResult {
            threshold,
            mapping,
            success_rate,
            outcomes,
        }),
        artifacts: vec![Artifact {
            path: "property_targets.csv".into(),
            contents: csv,
        }],
    })
}

/// Scores `n` random genotypes (redrawn until the canonical text fits the
/// length cap). Sample `i` uses its own stream from [`derive_seed`].
pub fn run_random_baseline(
    reference: &ReferenceSet,
    n: usize,
    bins: usize,
    seed: u64,
    max_genotype_len: usize,
    max_canonical_len: usize,
) -> Result<TaskOutput, TaskError> {
    if n == 0 || bins == 0 {
        return Err(TaskError::Invalid("random baseline needs n >= 1 and bins >= 1".into()));
    }
    let samples: Vec<(Genotype, String, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i));
            loop {
                let g = random_genotype(&mut rng, max_genotype_len);
                let graph = decode(&g);
                let text = canonical(&graph);
                if text.len() <= max_canonical_len {
                    let j = PropertyRecord::from_descriptors(&Descriptors::of(&graph), &reference.stats).j;
                    return (g, text, j);
                }
            }
        })
        .collect();
    let js: Vec<f64> = samples.iter().map(|s| s.2).collect();
    let (mean_j, std_j) = mean_std(&js);
    let best = samples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .2.total_cmp(&b.1 .2).then(b.0.cmp(&a.0)))
        .map(|(_, s)| s)
        .expect("n >= 1");
    let histogram = Histogram::of(&js, bins);
    let artifacts = vec![Artifact {
        path: "baseline_histogram.csv".into(),
        contents: histogram.to_csv(),
    }];
    Ok(TaskOutput {
        result: TaskResult::RandomBaseline(BaselineResult {
            n,
            max_j: best.2,
            mean_j,
            std_j,
            best_genotype: best.0.clone(),
            best_canonical: best.1.clone(),
            histogram,
        }),
        artifacts,
    })
}

/// Constant-`β` runs with a discriminator attached for every `β` and seed
/// (seeds are shared across `β` values).
pub fn run_beta_sweep(
    config: &RunConfig,
    reference: &ReferenceSet,
    betas: &[f64],
    seeds: usize,
) -> Result<TaskOutput, TaskError> {
    let jobs: Vec<(usize, usize)> = (0..betas.len()).flat_map(|b| (0..seeds).map(move |s| (b, s))).collect();
    let cfg = RunConfig {
        snapshot_every: 0,
        ..config.clone()
    };
    let runs: Vec<(Vec<GenerationLog>, Vec<f64>)> = jobs
        .par_iter()
        .map(|&(b, s)| {
            let plan = RunPlan {
                objective: Objective::PenalizedLogP,
                mode: BetaMode::Constant { beta: betas[b] },
                attach_discriminator: true,
                seed: derive_seed(config.seed, s),
                initial: &[],
            };
            let (trace, evolver, _) = evolve(&cfg, reference, plan, |_, _| false)?;
            let final_j = evolver.population().iter().map(|i| i.record.j).collect();
            Ok((trace.logs, final_j))
        })
        .collect::<Result<_, TaskError>>()?;
    let mut rows = Vec::new();
    let mut csv = String::from("beta,generation,mean_j,mean_d,max_j\n");
    for (b, &beta) in betas.iter().enumerate() {
        let group: Vec<&(Vec<GenerationLog>, Vec<f64>)> =
            jobs.iter().zip(&runs).filter(|((jb, _), _)| *jb == b).map(|(_, r)| r).collect();
        let gens = group.iter().map(|r| r.0.len()).min().unwrap_or(0);
        let avg = |f: fn(&GenerationLog) -> f64| -> Vec<f64> {
            (0..gens)
                .map(|g| group.iter().map(|r| f(&r.0[g])).sum::<f64>() / group.len() as f64)
                .collect()
        };
        let mean_j = avg(|l| l.mean_j);
        let mean_d = avg(|l| l.mean_d);
        let max_j = avg(|l| l.max_j);
        let late_start = gens - (gens / 4).max(1);
        let late = &mean_d[late_start..];
        let late_mean_d = late.iter().sum::<f64>() / late.len() as f64;
        for g in 0..gens {
            csv.push_str(&format!("{beta},{g},{},{},{}\n", mean_j[g], mean_d[g], max_j[g]));
        }
        rows.push(SweepRow {
            beta,
            seeds: (0..seeds).map(|s| derive_seed(config.seed, s)).collect(),
            final_mean_j: group
                .iter()
                .map(|r| r.1.iter().sum::<f64>() / r.1.len() as f64)
                .collect(),
            final_j: group.iter().flat_map(|r| r.1.iter().copied()).collect(),
            mean_j,
            mean_d,
            max_j,
            late_mean_d,
        });
    }
    Ok(TaskOutput {
        result: TaskResult::BetaSweep(SweepResult { rows }),
        artifacts: vec![Artifact {
            path: "beta_sweep.csv".into(),
            contents: csv,
        }],
    })
}

/// Dispatches on the configured task.
pub fn run_task(config: &RunConfig, reference: &ReferenceSet) -> Result<TaskOutput, TaskError> {
    match &config.task {
        TaskSpec::Unconstrained { beta } => run_unconstrained(config, reference, *beta),
        TaskSpec::AdaptiveDt { low, high, window, epsilon } => run_adaptive(
            config,
            reference,
            BetaMode::Adaptive {
                low: *low,
                high: *high,
                window: *window,
                epsilon: *epsilon,
            },
        ),
        TaskSpec::ConstrainedSimilarity { molecules, count, delta } => {
            run_constrained(config, reference, molecules, *count, *delta)
        }
        TaskSpec::PropertyTarget { targets, count, threshold } => {
            run_property_target(config, reference, targets, *count, *threshold)
        }
        TaskSpec::LogpQed { w_j, w_qed } => run_logp_qed(config, reference, *w_j, *w_qed),
        TaskSpec::RandomBaseline { n, bins } => run_random_baseline(
            reference,
            *n,
            *bins,
            config.seed,
            config.evolver.mutation.max_genotype_len,
            config.evolver.mutation.max_canonical_len,
        ),
        TaskSpec::BetaSweep { betas, seeds } => run_beta_sweep(config, reference, betas, *seeds),
    }
}
