use gadmol::codec::{decode, Genotype};
use gadmol::discriminator::{Discriminator, TrainConfig};
use gadmol::evolver::{
    fitness, kill_probabilities, mutate, Edit, Evaluator, Evolver, EvolverConfig, MutationConfig, MutationKind,
    Objective,
};
use gadmol::properties::{penalized_logp, NormStats};
use gadmol::reference::synthetic_reference;
use gadmol::schedules::{BetaMode, BetaSchedule};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod common;

fn config(p: usize) -> EvolverConfig {
    EvolverConfig {
        population_size: p,
        ..Default::default()
    }
}

fn evolver(p: usize, seed: u64) -> Evolver {
    Evolver::new(config(p), Evaluator::new(NormStats::identity(), Objective::PenalizedLogP), seed, &[]).unwrap()
}

#[test]
fn weighted_fitness_is_exact() {
    assert_eq!(fitness(2.0, 0.5, 10.0), 7.0);
}

#[test]
fn kill_probabilities_follow_rank() {
    let f = [3.0, -1.0, 7.0, 0.5, 2.0];
    let p = kill_probabilities(&f);
    let mut order: Vec<usize> = (0..f.len()).collect();
    order.sort_by(|&a, &b| f[b].total_cmp(&f[a]));
    for w in order.windows(2) {
        assert!(p[w[0]] < p[w[1]]);
    }
    assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
}

#[test]
fn mutation_kind_frequencies() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cfg = MutationConfig::default();
    let mut counts = [0usize; 3];
    let n = 10_000;
    for _ in 0..n {
        let e = Edit::draw(&mut rng, 12, &cfg);
        counts[match e.kind {
            MutationKind::Insertion => 0,
            MutationKind::Replacement => 1,
            MutationKind::Phenyl => 2,
        }] += 1;
    }
    let freq: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    assert!((freq[0] - 0.48).abs() <= 0.02, "{freq:?}");
    assert!((freq[1] - 0.48).abs() <= 0.02, "{freq:?}");
    assert!((freq[2] - 0.04).abs() <= 0.02, "{freq:?}");
}

#[test]
fn mutants_always_decode_to_valid_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = MutationConfig::default();
    let mut g = Genotype::methane();
    for _ in 0..2000 {
        let m = mutate(&g, &mut rng, &cfg);
        assert!(common::valence_ok(&m.graph));
        assert!(m.canonical.len() <= cfg.max_canonical_len);
        assert!(common::isomorphic(&m.graph, &decode(&m.genotype)));
        g = m.genotype;
    }
}

#[test]
fn first_step_leaves_methane_behind() {
    for seed in 0..20 {
        let mut e = evolver(100, seed);
        e.step(0.0).unwrap();
        assert!(e.population().iter().any(|i| i.canonical != "C"), "seed {seed}");
    }
}

#[test]
fn elitism_and_size_invariants() {
    let mut e = evolver(60, 3);
    let mut prev_max = f64::NEG_INFINITY;
    let mut prev_best = f64::NEG_INFINITY;
    for _ in 0..40 {
        let log = e.step(0.0).unwrap();
        assert_eq!(e.population().len(), 60);
        assert!(log.max_f >= prev_max);
        assert!(log.best_ever_score >= prev_best);
        prev_max = log.max_f;
        prev_best = log.best_ever_score;
    }
}

#[test]
fn zero_generations_keep_methane() {
    let mut e = evolver(20, 0);
    let trace = e.run(0, &mut BetaSchedule::constant(0.0), |_, _| true).unwrap();
    assert_eq!(trace.archive.len(), 1);
    assert_eq!(trace.archive.best().unwrap().canonical, "C");
    let methane = penalized_logp(&decode(&Genotype::methane()), &NormStats::identity());
    assert_eq!(trace.logs[0].max_j, methane.j);
    assert_eq!(trace.logs.len(), 1);
}

#[test]
fn discriminator_consumes_one_reference_draw_per_individual() {
    let reference = synthetic_reference(150, 1).unwrap();
    let mut e = Evolver::new(
        config(40),
        Evaluator::new(reference.stats, Objective::PenalizedLogP),
        5,
        &[],
    )
    .unwrap();
    let model = Discriminator::new(5, reference.scaler.clone());
    e.attach_discriminator(model, reference.features.clone(), TrainConfig::default())
        .unwrap();
    for g in 1..=3 {
        e.step(10.0).unwrap();
        assert_eq!(e.reference_samples_drawn(), 40 * g);
    }
}

#[test]
fn zero_beta_discriminator_leaves_trajectory_unchanged() {
    let reference = synthetic_reference(120, 2).unwrap();
    let make = || Evolver::new(config(30), Evaluator::new(reference.stats, Objective::PenalizedLogP), 11, &[]).unwrap();
    let mut plain = make();
    let mut with_d = make();
    with_d
        .attach_discriminator(
            Discriminator::new(0, reference.scaler.clone()),
            reference.features.clone(),
            TrainConfig::default(),
        )
        .unwrap();
    for _ in 0..10 {
        let a = plain.step(0.0).unwrap();
        let b = with_d.step(0.0).unwrap();
        assert_eq!(a.max_j, b.max_j);
        assert_eq!(a.best_canonical, b.best_canonical);
    }
    let ga: Vec<_> = plain.population().iter().map(|i| i.genotype.clone()).collect();
    let gb: Vec<_> = with_d.population().iter().map(|i| i.genotype.clone()).collect();
    assert_eq!(ga, gb);
}

#[test]
fn runs_are_identical_across_thread_counts() {
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut e = evolver(80, 21);
            let trace = e.run(25, &mut BetaSchedule::constant(0.0), |_, _| true).unwrap();
            serde_json::to_string(&trace).unwrap()
        })
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn adaptive_triggers_match_logged_beta() {
    let reference = synthetic_reference(120, 3).unwrap();
    let mut e = Evolver::new(
        config(20),
        Evaluator::new(reference.stats, Objective::PenalizedLogP),
        1,
        &[],
    )
    .unwrap();
    e.attach_discriminator(
        Discriminator::new(1, reference.scaler.clone()),
        reference.features.clone(),
        TrainConfig::default(),
    )
    .unwrap();
    let mode = BetaMode::Adaptive {
        low: 0.0,
        high: 1000.0,
        window: 3,
        epsilon: 1e-3,
    };
    let trace = e.run(60, &mut BetaSchedule::new(mode), |_, _| true).unwrap();
    for &t in &trace.triggers {
        assert_eq!(trace.logs[t].beta, 0.0);
        assert_eq!(trace.logs[t + 1].beta, 1000.0);
    }
    for w in trace.best_history.windows(2) {
        assert!(w[1] >= w[0]);
    }
}

#[test]
fn mutation_at_the_length_cap_returns_the_parent() {
    let cfg = MutationConfig {
        max_genotype_len: 5,
        ..Default::default()
    };
    let parent: Genotype = "[C][C][C][C][C]".parse().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut kept = 0;
    for _ in 0..200 {
        let m = mutate(&parent, &mut rng, &cfg);
        assert!(m.genotype.len() <= 5);
        if m.kind.is_none() {
            assert_eq!(m.genotype, parent);
            kept += 1;
        }
    }
    assert!(kept < 200);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn best_ever_never_decreases(seed in any::<u64>(), beta in prop_oneof![Just(0.0), Just(10.0)]) {
        let reference = synthetic_reference(110, seed % 7).unwrap();
        let mut e = Evolver::new(
            config(24),
            Evaluator::new(reference.stats, Objective::PenalizedLogP),
            seed,
            &[],
        ).unwrap();
        e.attach_discriminator(
            Discriminator::new(seed, reference.scaler.clone()),
            reference.features.clone(),
            TrainConfig { epochs: 2, ..Default::default() },
        ).unwrap();
        let trace = e.run(12, &mut BetaSchedule::constant(beta), |_, _| true).unwrap();
        for w in trace.best_history.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
        prop_assert!(trace.logs.iter().all(|l| l.n_replaced < 24));
    }
}
