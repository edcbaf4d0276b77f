mod common;

use gadmol::codec::{decode, random_genotype};
use gadmol::discriminator::{
    featurize, Discriminator, FeatureScaler, FeatureVector, TrainConfig, FEATURE_DIM,
};
use gadmol::molgraph::{parse_smiles, Element, MolecularGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn gaussian_features(rng: &mut ChaCha8Rng, center: f64, n: usize) -> Vec<FeatureVector> {
    let normal = Normal::new(center, 1.0).unwrap();
    (0..n)
        .map(|_| {
            let mut f = [0.0; FEATURE_DIM];
            for v in &mut f {
                *v = normal.sample(rng);
            }
            FeatureVector(f)
        })
        .collect()
}

fn chain(e: Element, n: usize) -> MolecularGraph {
    let mut g = MolecularGraph::new();
    for i in 0..n {
        g.add_atom(e);
        if i > 0 {
            g.add_bond(i - 1, i, 1);
        }
    }
    g
}

fn drug_like() -> Vec<MolecularGraph> {
    [
        "CC(=O)Nc1ccc(O)cc1",
        "CN1CCN(CC1)c1ccc(F)cc1",
        "O=C(O)c1ccccc1OC(C)=O",
        "CC(C)Cc1ccc(cc1)C(C)C(=O)O",
        "OC1CCN(CC1)C(=O)c1ccsc1",
        "Nc1ccc(cc1)S",
        "CCOC(=O)C1=C(C)NC(C)=C(C1)C(=O)OC",
    ]
    .iter()
    .map(|s| parse_smiles(s).unwrap())
    .collect()
}

fn random_reference(seed: u64, n: usize) -> Vec<FeatureVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<FeatureVector> = drug_like().iter().map(featurize).collect();
    while out.len() < n {
        out.push(featurize(&decode(&random_genotype(&mut rng, 60))));
    }
    out
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut model = Discriminator::new(3, FeatureScaler::identity());
    let spread = Normal::new(0.0, 0.4).unwrap();
    let random: Vec<f64> = model.parameters().iter().map(|_| spread.sample(&mut rng)).collect();
    model.set_parameters(random).unwrap();
    let samples = gaussian_features(&mut rng, 0.3, 24);
    let labels: Vec<f64> = (0..24).map(|i| (i % 2) as f64).collect();
    let (_, grad) = model.loss_and_gradient(&samples, &labels);
    let base = model.parameters().to_vec();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let k = rng.random_range(0..base.len());
        let mut p = base.clone();
        p[k] += h;
        model.set_parameters(p.clone()).unwrap();
        let (up, _) = model.loss_and_gradient(&samples, &labels);
        p[k] -= 2.0 * h;
        model.set_parameters(p).unwrap();
        let (down, _) = model.loss_and_gradient(&samples, &labels);
        let numeric = (up - down) / (2.0 * h);
        let rel = (numeric - grad[k]).abs() / (numeric.abs() + grad[k].abs()).max(1e-6);
        worst = worst.max(rel);
    }
    assert!(worst < 1e-4, "worst relative error {worst}");
}

#[test]
fn untrained_loss_is_near_ln2() {
    let reference = random_reference(1, 500);
    let scaler = FeatureScaler::fit(&reference).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ga: Vec<FeatureVector> = (0..500)
        .map(|_| featurize(&decode(&random_genotype(&mut rng, 60))))
        .collect();
    for seed in 0..5 {
        let d = Discriminator::new(seed, scaler.clone());
        let loss = d.loss(&ga, &reference);
        assert!((loss - std::f64::consts::LN_2).abs() <= 0.05, "seed {seed}: {loss}");
    }
}

#[test]
fn separates_gaussian_blobs() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let a = gaussian_features(&mut rng, -1.0, 200);
    let b = gaussian_features(&mut rng, 1.0, 200);
    let mut d = Discriminator::new(4, FeatureScaler::identity());
    let trace = d.train(&a, &b, &TrainConfig::default(), &mut rng).unwrap();
    assert_eq!(trace.len(), 10);
    let correct = a.iter().filter(|f| d.predict(f) < 0.5).count()
        + b.iter().filter(|f| d.predict(f) >= 0.5).count();
    let accuracy = correct as f64 / 400.0;
    assert!(accuracy >= 0.95, "accuracy {accuracy}");
}

#[test]
fn training_is_deterministic() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = gaussian_features(&mut rng, -0.5, 100);
        let b = gaussian_features(&mut rng, 0.5, 100);
        let mut d = Discriminator::new(9, FeatureScaler::identity());
        let trace = d.train(&a, &b, &TrainConfig::default(), &mut rng).unwrap();
        (trace, d)
    };
    let (t1, d1) = run();
    let (t2, d2) = run();
    assert_eq!(t1, t2);
    assert_eq!(d1, d2);
}

#[test]
fn empty_samples_are_rejected() {
    let mut d = Discriminator::new(0, FeatureScaler::identity());
    let f = vec![FeatureVector([0.0; FEATURE_DIM])];
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(d.train(&[], &f, &TrainConfig::default(), &mut rng).is_err());
    assert!(d.train(&f, &[], &TrainConfig::default(), &mut rng).is_err());
}

#[test]
fn features_are_isomorphism_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..300u64 {
        let g = decode(&random_genotype(&mut rng, 80));
        let h = g.permuted(&common::permutation(g.atom_count(), seed));
        assert_eq!(featurize(&g), featurize(&h));
        assert!(featurize(&g).0.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn long_surviving_family_loses_score() {
    let reference = random_reference(31, 300);
    let scaler = FeatureScaler::fit(&reference).unwrap();
    let family: Vec<FeatureVector> = (0..300)
        .map(|i| featurize(&chain(if i % 2 == 0 { Element::S } else { Element::C }, 20 + i % 40)))
        .collect();
    let mut d = Discriminator::new(12, scaler);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mean = |d: &Discriminator| family.iter().map(|f| d.predict(f)).sum::<f64>() / family.len() as f64;
    let mut scores = vec![mean(&d)];
    for _ in 0..30 {
        d.train(&family, &reference, &TrainConfig::default(), &mut rng).unwrap();
        scores.push(mean(&d));
    }
    for w in scores.windows(2) {
        assert!(w[1] <= w[0] + 1e-3, "{scores:?}");
    }
    assert!(*scores.last().unwrap() < 0.1, "{scores:?}");
}

#[test]
fn checkpoint_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.json");
    let d = Discriminator::new(77, FeatureScaler::fit(&random_reference(2, 50)).unwrap());
    d.save(&path).unwrap();
    assert_eq!(Discriminator::load(&path).unwrap(), d);
}
