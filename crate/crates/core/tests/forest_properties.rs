mod common;

use common::{names, noisy_labels, rng, uniform_matrix};
use proptest::prelude::*;
use rand::Rng;
use riskforest_core::forest::{fit_forest, fit_tree};
use riskforest_core::{FeaturesPerSplit, ForestConfig, MaxDepth};

#[test]
fn single_full_tree_memorizes_distinct_rows() {
    let mut r = rng(7);
    let x = uniform_matrix(&mut r, 200, 5);
    let y: Vec<u8> = (0..200).map(|_| r.random_range(0..2)).collect();
    let cfg = ForestConfig {
        max_depth: MaxDepth::UNLIMITED,
        features_per_split: FeaturesPerSplit::All,
        ..ForestConfig::default()
    };
    let tree = fit_tree(x.view(), &y, &cfg, &mut rng(1)).unwrap();
    let hits = (0..200)
        .filter(|&i| tree.vote(x.row(i).as_slice().unwrap()) == y[i])
        .count();
    assert_eq!(hits, 200);
}

#[test]
fn training_is_independent_of_thread_count() {
    let mut r = rng(11);
    let x = uniform_matrix(&mut r, 300, 6);
    let y = noisy_labels(&mut r, &x);
    let cfg = ForestConfig { n_trees: 24, seed: 5, ..ForestConfig::default() };
    let fit_with = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| fit_forest(x.view(), &y, &cfg, names(6)).unwrap())
    };
    let one = fit_with(1);
    assert_eq!(one, fit_with(2));
    assert_eq!(one, fit_with(8));
}

#[test]
fn hard_vote_is_the_mode_of_tree_votes() {
    let mut r = rng(3);
    let x = uniform_matrix(&mut r, 150, 4);
    let y = noisy_labels(&mut r, &x);
    for n_trees in [1, 2, 4, 7] {
        let cfg = ForestConfig { n_trees, seed: n_trees as u64, ..ForestConfig::default() };
        let m = fit_forest(x.view(), &y, &cfg, names(4)).unwrap();
        for _ in 0..250 {
            let row: Vec<f64> = (0..4).map(|_| r.random::<f64>() * 1.4 - 0.2).collect();
            // each tree votes its leaf majority, ties to 0
            let ones = m
                .trees
                .iter()
                .filter(|t| {
                    let c = t.leaf_counts(&row);
                    c[1] > c[0]
                })
                .count();
            let zeros = n_trees - ones;
            let mode = u8::from(ones > zeros);
            assert_eq!(m.predict(&row).unwrap(), mode);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn probabilities_stay_in_unit_interval(seed in any::<u64>(), row in prop::collection::vec(-2.0f64..3.0, 3)) {
        let mut r = rng(seed);
        let x = uniform_matrix(&mut r, 60, 3);
        let y = noisy_labels(&mut r, &x);
        let m = common::small_forest(&x, &y, 5, seed);
        let p = m.predict_proba(&row).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }
}
