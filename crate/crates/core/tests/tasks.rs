use gadmol::codec::{decode, random_genotype};
use gadmol::config::{RunConfig, TaskSpec};
use gadmol::molgraph::{canonical, fingerprint, parse_smiles, tanimoto, DEFAULT_NBITS, DEFAULT_RADIUS};
use gadmol::properties::{Descriptors, PropertyRecord};
use gadmol::reference::{bundled_reference, ReferenceSet};
use gadmol::report::{RunReport, Timing};
use gadmol::tasks::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn reference() -> &'static ReferenceSet {
    static R: OnceLock<ReferenceSet> = OnceLock::new();
    R.get_or_init(bundled_reference)
}

fn small(task: TaskSpec, p: usize, g: usize) -> RunConfig {
    let mut cfg = RunConfig {
        task,
        generations: g,
        snapshot_every: 5,
        ..Default::default()
    };
    cfg.evolver.population_size = p;
    cfg
}

fn evolution(out: TaskOutput) -> EvolutionResult {
    match out.result {
        TaskResult::Evolution(e) => e,
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn constrained_with_vacuous_threshold_succeeds_on_improvement() {
    let cfg = small(TaskSpec::default(), 40, 10);
    let o = run_single_constrained(&cfg, reference(), "CCOC(=O)c1ccccc1", 0.0, 1).unwrap();
    assert!(o.improvement > 0.0);
    assert!(o.success);
}

#[test]
fn constrained_with_unit_threshold_has_no_qualifier() {
    let cfg = small(TaskSpec::default(), 40, 10);
    let o = run_single_constrained(&cfg, reference(), "CCOC(=O)c1ccccc1", 1.0, 1).unwrap();
    assert!(o.best.is_none());
    assert_eq!(o.improvement, 0.0);
    assert!(!o.success);
}

#[test]
fn constrained_successes_survive_recomputation() {
    let cfg = small(TaskSpec::default(), 40, 8);
    let mols = lowest_scoring(reference(), 6);
    let out = run_constrained(&cfg, reference(), &mols, 6, 0.4).unwrap();
    let TaskResult::Constrained(c) = out.result else { panic!() };
    assert_eq!(c.molecules.len(), 6);
    for m in c.molecules.iter().filter(|m| m.success) {
        let best = m.best.as_ref().unwrap();
        let a = fingerprint(&parse_smiles(&m.smiles).unwrap(), DEFAULT_RADIUS, DEFAULT_NBITS);
        let b = fingerprint(&decode(&best.genotype), DEFAULT_RADIUS, DEFAULT_NBITS);
        assert!(tanimoto(&a, &b) > 0.4);
    }
    assert!(out.artifacts[0].contents.starts_with("smiles,start_j"));
}

#[test]
fn unsupported_starting_molecules_are_skipped() {
    let cfg = small(TaskSpec::default(), 20, 2);
    let out = run_constrained(&cfg, reference(), &["C[N+](C)(C)C".into(), "CCO".into()], 2, 0.4).unwrap();
    let TaskResult::Constrained(c) = out.result else { panic!() };
    assert_eq!(c.skipped, vec!["C[N+](C)(C)C".to_string()]);
    assert_eq!(c.molecules.len(), 1);
}

#[test]
fn methane_target_is_hit_immediately() {
    let methane = PropertyRecord::from_descriptors(&Descriptors::of(&parse_smiles("C").unwrap()), &reference().stats);
    let t = PropertyTargets {
        logp: methane.logp_raw,
        sa: methane.sa_raw,
        ring: methane.ring_raw,
    };
    let o = run_single_target(&small(TaskSpec::default(), 30, 20), reference(), t, 1.0, 0).unwrap();
    assert!(o.success);
    assert_eq!(o.generation_reached, Some(0));
    assert_eq!(o.best_error, 0.0);
}

#[test]
fn infeasible_target_fails_cleanly() {
    let t = PropertyTargets {
        logp: 1.0,
        sa: 2.0,
        ring: -5.0,
    };
    let o = run_single_target(&small(TaskSpec::default(), 30, 15), reference(), t, 1.0, 0).unwrap();
    assert!(!o.success);
    assert!(o.best_error >= 25.0);
}

#[test]
fn target_mapping_spans_reference_ranges() {
    let m = TargetMapping::from_reference(reference());
    let lo = reference().column(|d| d.logp_raw).into_iter().fold(f64::INFINITY, f64::min);
    assert_eq!(m.logp.apply(-5.0), lo);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..100 {
        let t = m.draw(&mut rng);
        assert!(t.ring >= 0.0 && t.sa >= m.sa.to.0 && t.sa <= m.sa.to.1);
    }
}

#[test]
fn zero_qed_weight_matches_unconstrained() {
    let a = evolution(run_logp_qed(&small(TaskSpec::default(), 40, 12), reference(), 1.0, 0.0).unwrap());
    let b = evolution(run_unconstrained(&small(TaskSpec::default(), 40, 12), reference(), 0.0).unwrap());
    let aj: Vec<f64> = a.logs.iter().map(|l| l.max_j).collect();
    let bj: Vec<f64> = b.logs.iter().map(|l| l.max_j).collect();
    assert_eq!(aj, bj);
}

#[test]
fn logp_and_qed_pull_apart() {
    let cfg = small(TaskSpec::default(), 100, 60);
    let out = run_logp_qed(&cfg, reference(), 1.0, 10.0).unwrap();
    assert!(out.artifacts.iter().any(|a| a.path == "logp_qed_scatter.csv"));
    let e = evolution(out);
    let s = e.qed_scatter.unwrap();
    assert_ne!(s.max_qed_canonical, s.max_logp_canonical);
    assert!(s.reference_qed_p99 > 0.0 && s.reference_qed_p99 <= 1.0);
}

#[test]
fn single_sample_baseline() {
    let out = run_random_baseline(reference(), 1, 5, 17, 100, 81).unwrap();
    let TaskResult::RandomBaseline(b) = out.result else { panic!() };
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let g = loop {
        let g = random_genotype(&mut rng, 100);
        if canonical(&decode(&g)).len() <= 81 {
            break g;
        }
    };
    let j = PropertyRecord::from_descriptors(&Descriptors::of(&decode(&g)), &reference().stats).j;
    assert_eq!(b.best_genotype, g);
    assert_eq!(b.max_j, j);
    assert_eq!(b.histogram.counts.iter().sum::<usize>(), 1);
}

#[test]
fn sweep_zero_row_reproduces_unconstrained() {
    let cfg = small(TaskSpec::default(), 30, 10);
    let out = run_beta_sweep(&cfg, reference(), &[0.0, 10.0], 2).unwrap();
    let TaskResult::BetaSweep(s) = out.result else { panic!() };
    let single = evolution(run_unconstrained(&cfg, reference(), 0.0).unwrap());
    let other = evolution(
        run_unconstrained(
            &RunConfig {
                seed: derive_seed(cfg.seed, 1),
                ..cfg.clone()
            },
            reference(),
            0.0,
        )
        .unwrap(),
    );
    for (g, m) in s.rows[0].mean_j.iter().enumerate() {
        let expected = (single.logs[g].mean_j + other.logs[g].mean_j) / 2.0;
        assert!((m - expected).abs() < 1e-12);
    }
    assert_eq!(s.rows[0].final_j.len(), 60);
}

#[test]
fn reports_hash_identically_and_ignore_timing() {
    let cfg = small(TaskSpec::Unconstrained { beta: 10.0 }, 30, 6);
    let a = run_task(&cfg, reference()).unwrap();
    let b = run_task(&cfg, reference()).unwrap();
    let ra = RunReport::new(&cfg, reference(), a.result, Timing { wall_seconds: 1.0, threads: 1 });
    let rb = RunReport::new(&cfg, reference(), b.result, Timing { wall_seconds: 9.0, threads: 8 });
    assert_eq!(ra.determinism_hash, rb.determinism_hash);
    assert_eq!(ra.determinism_hash.len(), 64);
    let back = RunReport::from_json(&ra.to_json()).unwrap();
    assert_eq!(back.compute_hash(), ra.determinism_hash);
    assert_eq!(a.artifacts.iter().map(|x| &x.contents).collect::<Vec<_>>(), b.artifacts.iter().map(|x| &x.contents).collect::<Vec<_>>());
}

#[test]
fn evolution_artifacts() {
    let out = run_unconstrained(&small(TaskSpec::default(), 20, 12), reference(), 0.0).unwrap();
    let paths: Vec<&str> = out.artifacts.iter().map(|a| a.path.as_str()).collect();
    assert_eq!(
        paths,
        vec![
            "generations.csv",
            "snapshots/gen_00000.tsv",
            "snapshots/gen_00005.tsv",
            "snapshots/gen_00010.tsv",
            "snapshots/gen_00012.tsv"
        ]
    );
    let csv = &out.artifacts[0].contents;
    assert!(csv.starts_with("generation,max_j,mean_j,max_f,mean_d,beta,n_replaced,best_canonical\n"));
    assert_eq!(csv.lines().count(), 14);
    let snap = Snapshot::from_tsv(12, &out.artifacts[4].contents).unwrap();
    assert_eq!(snap.rows.len(), 20);
}
