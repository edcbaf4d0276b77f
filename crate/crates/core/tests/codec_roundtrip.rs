mod common;

use gadmol::codec::{decode, decode_with_extent, encode, random_genotype, Genotype, Symbol};
use gadmol::molgraph::{canonical, parse_smiles};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn decoded_random_strings_pass_the_valence_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20_000 {
        let g = random_genotype(&mut rng, 50);
        let graph = decode(&g);
        assert!(common::valence_ok(&graph), "{g}");
    }
}

#[test]
fn encode_decode_is_isomorphic_on_decoded_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..3_000 {
        let g = random_genotype(&mut rng, 60);
        let graph = decode(&g);
        let enc = encode(&graph).unwrap_or_else(|e| panic!("{g}: {e}"));
        let back = decode(&enc);
        if graph.atom_count() <= 12 {
            assert!(common::isomorphic(&graph, &back), "{g} -> {enc}");
        }
        assert_eq!(canonical(&graph), canonical(&back), "{g} -> {enc}");
    }
}

/// Carbon-heavy strings that decode to larger ring-rich graphs.
fn biased_genotype(rng: &mut ChaCha8Rng, len: usize) -> Genotype {
    use rand::Rng;
    const POOL: [Symbol; 14] = [
        Symbol::C,
        Symbol::C,
        Symbol::C,
        Symbol::C,
        Symbol::DoubleC,
        Symbol::TripleC,
        Symbol::N,
        Symbol::DoubleN,
        Symbol::S,
        Symbol::P,
        Symbol::Branch1,
        Symbol::Branch2,
        Symbol::Ring1,
        Symbol::Ring2,
    ];
    let mut symbols = Vec::with_capacity(len);
    for _ in 0..len {
        if rng.random_bool(0.25) {
            symbols.push(Symbol::from_index(rng.random_range(0..16)));
        } else {
            symbols.push(POOL[rng.random_range(0..POOL.len())]);
        }
    }
    Genotype::new(symbols).unwrap()
}

#[test]
fn round_trip_on_large_biased_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut large = 0;
    for _ in 0..3_000 {
        let g = biased_genotype(&mut rng, 100);
        let graph = decode(&g);
        assert!(common::valence_ok(&graph));
        large += usize::from(graph.atom_count() > 20);
        let enc = encode(&graph).unwrap_or_else(|e| panic!("{g}: {e}"));
        let back = decode(&enc);
        let text = canonical(&graph);
        assert_eq!(canonical(&back), text, "{g} -> {enc}");
        let reparsed = parse_smiles(&text).unwrap_or_else(|e| panic!("{text}: {e}"));
        assert_eq!(canonical(&reparsed), text);
        if graph.atom_count() <= 12 {
            assert!(common::isomorphic(&graph, &back));
            assert!(common::isomorphic(&graph, &reparsed));
        }
        for k in 0..5 {
            let perm = common::permutation(graph.atom_count(), k);
            assert_eq!(canonical(&graph.permuted(&perm)), text);
        }
    }
    assert!(large > 300, "only {large} large graphs");
}

#[test]
fn canonical_text_reparses_isomorphically() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..3_000 {
        let g = random_genotype(&mut rng, 60);
        let graph = decode(&g);
        let text = canonical(&graph);
        let back = parse_smiles(&text).unwrap_or_else(|e| panic!("{g} -> {text}: {e}"));
        if graph.atom_count() <= 12 {
            assert!(common::isomorphic(&graph, &back), "{g} -> {text}");
        }
        assert_eq!(canonical(&back), text);
    }
}

#[test]
fn canonical_is_permutation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for i in 0..100 {
        let graph = decode(&random_genotype(&mut rng, 80));
        let reference = canonical(&graph);
        for k in 0..100 {
            let perm = common::permutation(graph.atom_count(), (i * 1000 + k) as u64);
            assert_eq!(canonical(&graph.permuted(&perm)), reference);
        }
    }
}

#[test]
fn cyclopentane_round_trip_has_seven_symbols() {
    let g: Genotype = "[C][C][C][C][C][Ring1][#C]".parse().unwrap();
    let graph = decode(&g);
    let enc = encode(&graph).unwrap();
    assert_eq!(enc.len(), 7);
    assert!(common::isomorphic(&graph, &decode(&enc)));
}

fn genotype_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0usize..16, 1..40)
}

proptest! {
    #[test]
    fn decode_is_deterministic(idx in genotype_strategy()) {
        let g = Genotype::new(idx.iter().map(|&i| Symbol::from_index(i)).collect()).unwrap();
        prop_assert_eq!(canonical(&decode(&g)), canonical(&decode(&g.clone())));
    }

    #[test]
    fn symbols_past_the_extent_are_never_read(idx in genotype_strategy(), tail in genotype_strategy()) {
        let g = Genotype::new(idx.iter().map(|&i| Symbol::from_index(i)).collect()).unwrap();
        let d = decode_with_extent(&g);
        let mut symbols = g.symbols()[..d.consumed].to_vec();
        symbols.extend(tail.iter().map(|&i| Symbol::from_index(i)));
        let altered = decode(&Genotype::new(symbols).unwrap());
        if d.consumed < g.len() {
            prop_assert_eq!(altered, d.graph);
        }
    }
}
