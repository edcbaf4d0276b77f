//! The generation loop: rank-logistic replacement, mutation of surviving
//! parents, evaluation, discriminator training and the best-ever archive.
//!
//! One seeded stream drives selection and mutation in a fixed order: a kill
//! draw for every individual in index order, then for every replaced slot in
//! index order a parent draw followed by that slot's candidate edits. The
//! discriminator's reference sampling and batch shuffling use a second
//! stream derived from the same seed, so attaching a discriminator with
//! `β = 0` leaves the trajectory unchanged. Evaluation runs in parallel but
//! never touches either stream.

mod archive;
mod mutation;
mod objective;
mod selection;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{decode, Genotype};
use crate::discriminator::{featurize_with, Discriminator, DiscriminatorError, FeatureVector, TrainConfig};
use crate::molgraph::{canonical, MolecularGraph};
use crate::properties::{Descriptors, NormStats, PropertyRecord};
use crate::schedules::BetaSchedule;

pub use archive::{Archive, ArchiveEntry};
pub use mutation::{draw_edits, first_valid, mutate, Edit, Mutant, MutationConfig, MutationKind, PHENYL};
pub use objective::Objective;
pub use selection::{fitness, kill_probabilities, kill_probabilities_with, ranking, KillCurve};

#[derive(Debug, Error)]
pub enum EvolverError {
    #[error("invalid evolver configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Discriminator(#[from] DiscriminatorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParentSelection {
    UniformSurvivors,
    /// Uniform over the best `fraction` of survivors by rank.
    TopFraction { fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolverConfig {
    pub population_size: usize,
    pub elite_count: usize,
    pub kill: KillCurve,
    pub parent_selection: ParentSelection,
    pub mutation: MutationConfig,
    pub archive_size: usize,
}

impl Default for EvolverConfig {
    fn default() -> Self {
        Self {
            population_size: 500,
            elite_count: 1,
            kill: KillCurve::default(),
            parent_selection: ParentSelection::UniformSurvivors,
            mutation: MutationConfig::default(),
            archive_size: 50,
        }
    }
}

impl EvolverConfig {
    pub fn validate(&self) -> Result<(), EvolverError> {
        let bad = |m: &str| Err(EvolverError::Config(m.into()));
        if self.population_size == 0 {
            return bad("population_size must be at least 1");
        }
        if self.archive_size == 0 {
            return bad("archive_size must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.mutation.phenyl_rate) {
            return bad("mutation.phenyl_rate must lie in [0, 1]");
        }
        if self.mutation.max_attempts == 0 {
            return bad("mutation.max_attempts must be at least 1");
        }
        if !(self.kill.steepness.is_finite() && self.kill.midpoint.is_finite()) {
            return bad("kill curve parameters must be finite");
        }
        if let ParentSelection::TopFraction { fraction } = self.parent_selection {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return bad("parent_selection.fraction must lie in (0, 1]");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Individual {
    pub genotype: Genotype,
    #[serde(skip)]
    pub graph: MolecularGraph,
    pub canonical: String,
    pub record: PropertyRecord,
    #[serde(skip, default = "zero_features")]
    pub features: FeatureVector,
    /// Objective score before the discriminator term.
    pub score: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub similarity: Option<f64>,
    pub d: f64,
    pub fitness: f64,
    pub age: u32,
}

fn zero_features() -> FeatureVector {
    FeatureVector([0.0; crate::discriminator::FEATURE_DIM])
}

/// Scores decoded molecules; shared read-only across worker threads.
#[derive(Debug, Clone)]
pub struct Evaluator {
    pub stats: NormStats,
    pub objective: Objective,
}

impl Evaluator {
    pub fn new(stats: NormStats, objective: Objective) -> Self {
        Self { stats, objective }
    }

    pub fn evaluate_decoded(&self, genotype: Genotype, graph: MolecularGraph, canonical: String) -> Individual {
        let descriptors = Descriptors::of(&graph);
        let record = PropertyRecord::from_descriptors(&descriptors, &self.stats);
        let features = featurize_with(&graph, &descriptors);
        let (score, similarity) = self.objective.evaluate(&graph, &record);
        Individual {
            genotype,
            graph,
            canonical,
            record,
            features,
            score,
            similarity,
            d: 0.0,
            fitness: score,
            age: 0,
        }
    }

    pub fn evaluate(&self, genotype: Genotype) -> Individual {
        let graph = decode(&genotype);
        let text = canonical(&graph);
        self.evaluate_decoded(genotype, graph, text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationLog {
    pub generation: usize,
    pub max_j: f64,
    pub mean_j: f64,
    pub max_f: f64,
    pub mean_d: f64,
    pub beta: f64,
    pub n_replaced: usize,
    pub best_canonical: String,
    pub max_score: f64,
    pub mean_score: f64,
    pub best_ever_score: f64,
    /// Mean loss of the last training epoch, if a discriminator was trained.
    pub d_loss: Option<f64>,
}

impl GenerationLog {
    pub const CSV_HEADER: &'static str = "generation,max_j,mean_j,max_f,mean_d,beta,n_replaced,best_canonical";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.generation,
            self.max_j,
            self.mean_j,
            self.max_f,
            self.mean_d,
            self.beta,
            self.n_replaced,
            self.best_canonical
        )
    }
}

pub fn logs_to_csv(logs: &[GenerationLog]) -> String {
    let mut out = String::from(GenerationLog::CSV_HEADER);
    out.push('\n');
    for l in logs {
        out.push_str(&l.csv_row());
        out.push('\n');
    }
    out
}

struct DiscriminatorState {
    model: Discriminator,
    reference: Vec<FeatureVector>,
    train: TrainConfig,
    rng: ChaCha8Rng,
    samples_drawn: usize,
}

/// Outcome of [`Evolver::run`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunTrace {
    /// One entry per generation, starting with the initial population.
    pub logs: Vec<GenerationLog>,
    /// Best-ever score after each generation.
    pub best_history: Vec<f64>,
    /// Generations at which the schedule raised `β`.
    pub triggers: Vec<usize>,
    pub archive: Archive,
}

pub struct Evolver {
    config: EvolverConfig,
    evaluator: Evaluator,
    population: Vec<Individual>,
    generation: usize,
    archive: Archive,
    rng: ChaCha8Rng,
    seed: u64,
    discriminator: Option<DiscriminatorState>,
}

impl Evolver {
    /// Builds and evaluates the initial population by cycling through
    /// `initial` (all-methane when empty).
    pub fn new(config: EvolverConfig, evaluator: Evaluator, seed: u64, initial: &[Genotype]) -> Result<Self, EvolverError> {
        config.validate()?;
        let methane = [Genotype::methane()];
        let initial = if initial.is_empty() { &methane[..] } else { initial };
        let unique: Vec<Individual> = initial.par_iter().map(|g| evaluator.evaluate(g.clone())).collect();
        let population: Vec<Individual> = (0..config.population_size)
            .map(|i| unique[i % unique.len()].clone())
            .collect();
        let mut archive = Archive::new(config.archive_size);
        for ind in &unique {
            archive.offer(entry(ind, 0));
        }
        Ok(Self {
            config,
            evaluator,
            population,
            generation: 0,
            archive,
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
            discriminator: None,
        })
    }

    /// Attaches a discriminator trained each generation against `reference`
    /// and scores the current population with it.
    pub fn attach_discriminator(
        &mut self,
        model: Discriminator,
        reference: Vec<FeatureVector>,
        train: TrainConfig,
    ) -> Result<(), EvolverError> {
        if reference.is_empty() {
            return Err(EvolverError::Discriminator(DiscriminatorError::EmptySamples));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(1);
        self.discriminator = Some(DiscriminatorState {
            model,
            reference,
            train,
            rng,
            samples_drawn: 0,
        });
        self.rescore_d();
        Ok(())
    }

    pub fn population(&self) -> &[Individual] {
        &self.population
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn archive(&self) -> &Archive {
        &self.archive
    }

    pub fn config(&self) -> &EvolverConfig {
        &self.config
    }

    pub fn discriminator(&self) -> Option<&Discriminator> {
        self.discriminator.as_ref().map(|d| &d.model)
    }

    /// Total reference molecules sampled for discriminator training so far.
    pub fn reference_samples_drawn(&self) -> usize {
        self.discriminator.as_ref().map_or(0, |d| d.samples_drawn)
    }

    fn rescore_d(&mut self) {
        match &self.discriminator {
            Some(state) => {
                let model = &state.model;
                self.population.par_iter_mut().for_each(|ind| ind.d = model.predict(&ind.features));
            }
            None => self.population.iter_mut().for_each(|ind| ind.d = 0.0),
        }
    }

    /// Summary of the current population under `beta`.
    pub fn log(&self, beta: f64, n_replaced: usize, d_loss: Option<f64>) -> GenerationLog {
        let n = self.population.len() as f64;
        let mut max_j = f64::NEG_INFINITY;
        let mut max_f = f64::NEG_INFINITY;
        let mut max_score = f64::NEG_INFINITY;
        let mut best = 0;
        let (mut sum_j, mut sum_d, mut sum_score) = (0.0, 0.0, 0.0);
        for (i, ind) in self.population.iter().enumerate() {
            max_j = max_j.max(ind.record.j);
            max_f = max_f.max(fitness(ind.score, ind.d, beta));
            if ind.score > max_score {
                max_score = ind.score;
                best = i;
            }
            sum_j += ind.record.j;
            sum_d += ind.d;
            sum_score += ind.score;
        }
        GenerationLog {
            generation: self.generation,
            max_j,
            mean_j: sum_j / n,
            max_f,
            mean_d: sum_d / n,
            beta,
            n_replaced,
            best_canonical: self.population[best].canonical.clone(),
            max_score,
            mean_score: sum_score / n,
            best_ever_score: self.archive.best_score(),
            d_loss,
        }
    }

    /// Advances one generation with discriminator weight `beta`.
    pub fn step(&mut self, beta: f64) -> Result<GenerationLog, EvolverError> {
        let n = self.population.len();
        for ind in &mut self.population {
            ind.fitness = fitness(ind.score, ind.d, beta);
        }
        let fits: Vec<f64> = self.population.iter().map(|i| i.fitness).collect();
        let ages: Vec<u32> = self.population.iter().map(|i| i.age).collect();
        let order = ranking(&fits, &ages);
        let probs = kill_probabilities_with(&fits, &ages, &self.config.kill);
        let mut elite = vec![false; n];
        for &i in order.iter().take(self.config.elite_count) {
            elite[i] = true;
        }
        let mut killed: Vec<bool> = (0..n)
            .map(|i| {
                let u: f64 = self.rng.random();
                u < probs[i] && !elite[i]
            })
            .collect();
        if killed.iter().all(|&k| k) {
            killed[order[0]] = false;
        }

        let mut pool: Vec<usize> = order.iter().copied().filter(|&i| !killed[i]).collect();
        match self.config.parent_selection {
            ParentSelection::UniformSurvivors => pool.sort_unstable(),
            ParentSelection::TopFraction { fraction } => {
                let keep = ((pool.len() as f64 * fraction).ceil() as usize).clamp(1, pool.len());
                pool.truncate(keep);
            }
        }
        let mut jobs: Vec<(usize, usize, Vec<Edit>)> = Vec::new();
        for slot in (0..n).filter(|&i| killed[i]) {
            let parent = pool[self.rng.random_range(0..pool.len())];
            let edits = draw_edits(&mut self.rng, &self.population[parent].genotype, &self.config.mutation);
            jobs.push((slot, parent, edits));
        }

        let evaluator = &self.evaluator;
        let population = &self.population;
        let mutation = &self.config.mutation;
        let children: Vec<Individual> = jobs
            .par_iter()
            .map(|(_, parent, edits)| {
                let m = first_valid(&population[*parent].genotype, edits, mutation);
                evaluator.evaluate_decoded(m.genotype, m.graph, m.canonical)
            })
            .collect();

        for (i, ind) in self.population.iter_mut().enumerate() {
            if !killed[i] {
                ind.age += 1;
            }
        }
        self.generation += 1;
        for ((slot, _, _), child) in jobs.iter().zip(children) {
            self.archive.offer(entry(&child, self.generation));
            self.population[*slot] = child;
        }

        let mut d_loss = None;
        if let Some(state) = &mut self.discriminator {
            let r = state.reference.len();
            let picks: Vec<usize> = if r >= n {
                rand::seq::index::sample(&mut state.rng, r, n).into_vec()
            } else {
                (0..n).map(|_| state.rng.random_range(0..r)).collect()
            };
            state.samples_drawn += picks.len();
            let refs: Vec<FeatureVector> = picks.iter().map(|&k| state.reference[k]).collect();
            let ga: Vec<FeatureVector> = self.population.iter().map(|i| i.features).collect();
            match state.model.train(&ga, &refs, &state.train, &mut state.rng) {
                Ok(trace) => d_loss = trace.last().copied(),
                Err(DiscriminatorError::NonFiniteLoss { .. }) => d_loss = Some(f64::NAN),
                Err(e) => return Err(e.into()),
            }
        }
        self.rescore_d();
        for ind in &mut self.population {
            ind.fitness = fitness(ind.score, ind.d, beta);
        }
        Ok(self.log(beta, jobs.len(), d_loss))
    }

    /// Runs `generations` steps under `schedule`. `observe` sees every log
    /// (including the initial population's) and may stop the run early by
    /// returning `false`.
    pub fn run(
        &mut self,
        generations: usize,
        schedule: &mut BetaSchedule,
        mut observe: impl FnMut(&GenerationLog, &[Individual]) -> bool,
    ) -> Result<RunTrace, EvolverError> {
        let mut history = vec![self.archive.best_score()];
        let mut beta = schedule.next_beta(1, &history);
        let first = self.log(beta, 0, None);
        let mut keep_going = observe(&first, &self.population);
        let mut logs = vec![first];
        let mut triggers = Vec::new();
        for _ in 0..generations {
            if !keep_going {
                break;
            }
            let log = self.step(beta)?;
            keep_going = observe(&log, &self.population);
            logs.push(log);
            history.push(self.archive.best_score());
            let next = schedule.next_beta(history.len(), &history);
            if next > beta {
                triggers.push(self.generation);
            }
            beta = next;
        }
        Ok(RunTrace {
            logs,
            best_history: history,
            triggers,
            archive: self.archive.clone(),
        })
    }
}

fn entry(ind: &Individual, generation: usize) -> ArchiveEntry {
    ArchiveEntry {
        genotype: ind.genotype.clone(),
        canonical: ind.canonical.clone(),
        score: ind.score,
        record: ind.record,
        similarity: ind.similarity,
        generation,
    }
}
