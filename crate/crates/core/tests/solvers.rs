mod common;

use apsel_core::dataset::{discretize, split, FingerprintDataset, RssRange};
use apsel_core::locate::{accuracy_for_selection, ClassifierSpec};
use apsel_core::qubo::QuboInstance;
use apsel_core::solver::{
    constrained_min, global_minimizers, solve_exhaustive, solve_sa, AnnealConfig,
};
use apsel_core::stats::{importance_vector, redundancy_matrix};
use common::*;
use rand::Rng;

#[test]
fn exhaustive_agrees_with_enumeration() {
    let mut r = rng(7);
    for _ in 0..40 {
        let n = r.random_range(1..=10);
        let alpha = r.random_range(0.0..=1.0);
        let inst = random_instance(&mut r, n, alpha);
        let sol = solve_exhaustive(&inst).unwrap();
        let (best, ties) = naive_minimizers(&inst, n, 1e-12);
        assert!((sol.energy - best).abs() < 1e-12);
        // smallest k, then lexicographically smallest vector
        let expected = ties.iter().min_by_key(|x| (card(x), x.to_vec())).unwrap();
        assert_eq!(&sol.x, expected);
        let mut all = global_minimizers(&inst, 24).unwrap();
        let mut naive = ties.clone();
        all.sort();
        naive.sort();
        assert_eq!(all, naive);
    }
}

#[test]
fn budgeted_minimum_agrees_with_enumeration() {
    let mut r = rng(8);
    for _ in 0..20 {
        let n = r.random_range(2..=10);
        let alpha = r.random_range(0.0..=1.0);
        let inst = random_instance(&mut r, n, alpha);
        for k in 0..=n {
            let sol = constrained_min(&inst, k).unwrap();
            let (best, _) = naive_minimizers(&inst, k, 1e-12);
            assert!(card(&sol.x) <= k);
            assert!((sol.energy - best).abs() < 1e-12, "k={k}");
        }
    }
}

#[test]
fn annealing_is_seed_deterministic() {
    let inst = random_instance(&mut rng(9), 30, 0.6);
    let cfg = AnnealConfig {
        seed: 3,
        ..AnnealConfig::default()
    };
    let (a, b) = (
        solve_sa(&inst, &cfg).unwrap(),
        solve_sa(&inst, &cfg).unwrap(),
    );
    assert_eq!((a.x, a.energy), (b.x, b.energy));
}

#[test]
fn annealing_reaches_optimum_on_small_instances() {
    let mut r = rng(10);
    for i in 0..20 {
        let alpha = r.random_range(0.0..=1.0);
        let inst = random_instance(&mut r, 12, alpha);
        let sa = solve_sa(
            &inst,
            &AnnealConfig {
                seed: i,
                ..AnnealConfig::default()
            },
        )
        .unwrap();
        assert!(sa.energy - solve_exhaustive(&inst).unwrap().energy <= 1e-9);
        assert!((sa.energy - naive_energy(&inst, &sa.x)).abs() < 1e-9);
    }
}

#[test]
fn endpoints_of_alpha() {
    let mut r = rng(11);
    for _ in 0..20 {
        let n = r.random_range(2..=10);
        let inst = random_instance(&mut r, n, 0.0);
        assert!(card(&solve_exhaustive(&inst).unwrap().x) <= 1);
        let inst = inst.with_alpha(1.0).unwrap();
        assert!(global_minimizers(&inst, 24)
            .unwrap()
            .iter()
            .any(|x| card(x) == n));
    }
}

/// Five APs that copy the floor label through distinct signal levels and
/// fifteen that carry only noise.
fn label_copies_and_noise() -> FingerprintDataset {
    let mut r = rng(12);
    let (m, n) = (400, 20);
    let floors: Vec<usize> = (0..m).map(|i| i % 4).collect();
    let mut rss = Vec::with_capacity(m * n);
    for &f in &floors {
        for ap in 0..n {
            let v = if ap < 5 {
                -95.0 + 20.0 * ((f + ap) % 4) as f64 + r.random_range(-2.0..2.0)
            } else {
                r.random_range(-104.0..=0.0f64)
            };
            rss.push(v.round());
        }
    }
    FingerprintDataset::new(
        rss,
        (1..=n).map(|i| format!("WAP{i:03}")).collect(),
        floors.iter().map(|f| f.to_string()).collect(),
        RssRange::default(),
    )
    .unwrap()
}

#[test]
fn label_carrying_aps_rank_first() {
    let d = label_copies_and_noise();
    let imp = importance_vector(&discretize(&d, 10).unwrap());
    let mut order: Vec<usize> = (0..d.n_aps()).collect();
    order.sort_by(|&a, &b| imp.get(b).total_cmp(&imp.get(a)));
    let mut top: Vec<usize> = order[..5].to_vec();
    top.sort_unstable();
    assert_eq!(top, vec![0, 1, 2, 3, 4]);
    assert!(imp.values()[5..].iter().all(|&v| v < 0.3));
    assert!(imp.values()[..5].iter().all(|&v| v > 0.95));
}

#[test]
fn redundancy_matches_naive_pearson_on_substituted_values() {
    let d = label_copies_and_noise();
    let red = redundancy_matrix(&d);
    for i in 0..d.n_aps() {
        assert_eq!(red.get(i, i), 0.0);
        for j in 0..i {
            let want = naive_pearson(&d.substituted_column(i), &d.substituted_column(j)).abs();
            assert!((red.get(i, j) - want).abs() < 1e-10);
            assert_eq!(red.get(i, j), red.get(j, i));
        }
    }
}

#[test]
fn knn_accuracy_is_scale_invariant() {
    let d = label_copies_and_noise();
    let (train, test) = split(&d, 0.3, 1).unwrap();
    let spec = ClassifierSpec::knn(3);
    let x = vec![1u8; d.n_aps()];
    let base = accuracy_for_selection(&x, &train, &test, &spec).unwrap();
    // power-of-two scaling keeps every distance comparison exact
    let scale = |ds: &FingerprintDataset| {
        let range = RssRange {
            min: -416.0,
            max: 0.0,
            sentinel: 400.0,
        };
        FingerprintDataset::new(
            ds.rss().iter().map(|v| v * 4.0).collect(),
            ds.ap_ids().to_vec(),
            ds.labels()
                .iter()
                .map(|&l| ds.floor_names()[l].clone())
                .collect(),
            range,
        )
        .unwrap()
    };
    let scaled = accuracy_for_selection(&x, &scale(&train), &scale(&test), &spec).unwrap();
    assert_eq!(base, scaled);
    assert!(base > 0.9);
}

#[test]
fn instance_from_data_is_well_formed() {
    let d = label_copies_and_noise();
    let inst = QuboInstance::new(
        importance_vector(&discretize(&d, 10).unwrap()),
        redundancy_matrix(&d),
        0.5,
    )
    .unwrap();
    let p = inst.build_matrix();
    for i in 0..inst.n() {
        for j in 0..inst.n() {
            assert_eq!(p.get(i, j), p.get(j, i));
        }
    }
}
