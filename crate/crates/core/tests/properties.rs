use proptest::prelude::*;

use prgbm::dataset::{read_csv, write_csv};
use prgbm::eval::masked_mse;
use prgbm::forest::bootstrap_indices;
use prgbm::model_io::{from_json, to_json};
use prgbm::tree::{variance_reduction, SplitStats};
use prgbm::tree::build_tree_with_stats;
use prgbm::*;

fn dataset_strategy(max_n: usize, max_m: usize) -> impl Strategy<Value = Dataset> {
    (1..=max_n, 1..=max_m).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(-1e6..1e6f64, n * m),
            prop::collection::vec(-1e3..1e3f64, n),
        )
            .prop_map(move |(x, y)| Dataset::from_flat(x, m, y).unwrap())
    })
}

/// Small integer-valued features, so ties and constant columns are common.
fn tied_dataset_strategy() -> impl Strategy<Value = Dataset> {
    (2..40usize, 1..5usize).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(0..6i32, n * m),
            prop::collection::vec(-10.0..10.0f64, n),
        )
            .prop_map(move |(x, y)| {
                Dataset::from_flat(x.into_iter().map(f64::from).collect(), m, y).unwrap()
            })
    })
}

fn splitter_strategy() -> impl Strategy<Value = SplitterKind> {
    prop_oneof![
        Just(SplitterKind::Deterministic),
        Just(SplitterKind::PartiallyRandomized),
        (1..6usize).prop_map(|k| SplitterKind::ExtremelyRandomized { k }),
    ]
}

fn tree_params(splitter: SplitterKind, depth: usize) -> TreeParams {
    TreeParams {
        max_depth: depth,
        splitter,
        ..TreeParams::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip_is_bit_exact(d in dataset_strategy(30, 6)) {
        let mut buf = Vec::new();
        write_csv(&d, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), d.n_features()).unwrap();
        prop_assert_eq!(back.n_samples(), d.n_samples());
        for (a, b) in back.features_flat().iter().zip(d.features_flat()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in back.targets().iter().zip(d.targets()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn csv_round_trip_through_files(d in dataset_strategy(10, 3)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        save_csv(&d, &path).unwrap();
        prop_assert_eq!(load_csv(&path, "y").unwrap(), d);
    }

    #[test]
    fn seeded_streams_match(seed in any::<u64>()) {
        use rand::RngCore;
        let mut a = SeededRng::new(seed);
        let mut b = SeededRng::new(seed);
        for _ in 0..200 {
            prop_assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn generators_are_deterministic(seed in any::<u64>(), n in 1..50usize) {
        let gens: [fn(usize, &mut SeededRng) -> Result<Dataset>; 5] = [
            |n, r| make_friedman(Friedman::One, n, r, 1.0),
            |n, r| make_friedman(Friedman::Two, n, r, 1.0),
            |n, r| make_friedman(Friedman::Three, n, r, 1.0),
            |n, r| make_sparse_uncorrelated(n, r, 1.0),
            |n, r| make_linear_regression(n, 12, r, 1.0),
        ];
        for g in gens {
            prop_assert_eq!(g(n, &mut SeededRng::new(seed)).unwrap(), g(n, &mut SeededRng::new(seed)).unwrap());
        }
    }

    #[test]
    fn two_dim_function_is_bounded(x in -1e3..1e3f64, y in -5.0..5.0f64) {
        let v = two_dim_function(x, y);
        prop_assert!((-1.0..=1.0).contains(&v));
    }

    #[test]
    fn cross_mask_is_rotation_invariant(p in 2..60usize, w in 0.01..0.99f64) {
        let grid = GridSpec::new(0.0, 1.0, p).unwrap();
        let mask = CrossSpec { arm_width: w }.mask(&grid);
        for iy in 0..p {
            for ix in 0..p {
                // (ix, iy) -> (p-1-iy, ix)
                prop_assert_eq!(mask[iy * p + ix], mask[ix * p + (p - 1 - iy)]);
            }
        }
    }

    #[test]
    fn every_point_lies_in_exactly_one_leaf(
        d in dataset_strategy(40, 4),
        splitter in splitter_strategy(),
        depth in 1..7usize,
        seed in any::<u64>(),
        probes in prop::collection::vec(-2e6..2e6f64, 40),
    ) {
        let tree = build_tree(&d, &tree_params(splitter, depth), &mut SeededRng::new(seed)).unwrap();
        let leaves = tree.leaves();
        prop_assert_eq!(leaves.len(), tree.n_leaves);
        prop_assert!(tree.depth() <= depth);
        let m = d.n_features();
        let mut points: Vec<Vec<f64>> = d.rows().map(|r| r.to_vec()).collect();
        points.extend(probes.chunks(m).filter(|c| c.len() == m).map(|c| c.to_vec()));
        for x in points {
            let hits: Vec<&_> = leaves.iter().filter(|l| l.indicator(&x) == 1.0).collect();
            prop_assert_eq!(hits.len(), 1);
            prop_assert_eq!(hits[0].value.to_bits(), tree.predict_row(&x).to_bits());
        }
    }

    #[test]
    fn gbm_is_the_sum_of_its_leaf_indicators(
        d in dataset_strategy(30, 3),
        splitter in splitter_strategy(),
        seed in any::<u64>(),
    ) {
        let config = GbmConfig { n_stages: 15, max_depth: 3, splitter, seed, ..GbmConfig::default() };
        let model = fit_gbm(&d, &config).unwrap();
        let regions: Vec<_> = model.stages.iter().map(|s| (s.coefficient, s.tree.leaves())).collect();
        for x in d.rows() {
            let mut acc = model.init;
            for (c, leaves) in &regions {
                acc += c * leaves.iter().map(|l| l.value * l.indicator(x)).sum::<f64>();
            }
            let direct = model.predict_row(x);
            prop_assert!((acc - direct).abs() <= 1e-9 * (1.0 + direct.abs()), "{} vs {}", acc, direct);
        }
    }

    #[test]
    fn variance_reduction_properties(
        y in prop::collection::vec(-100.0..100.0f64, 2..40),
        cut in any::<prop::sample::Index>(),
        perm_seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let n = y.len();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut SeededRng::new(perm_seed));
        let k = 1 + cut.index(n - 1);
        let (l, r) = idx.split_at(k);
        let a = variance_reduction(&y, l, r).unwrap();
        let b = variance_reduction(&y, r, l).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        let constant = vec![y[0]; n];
        prop_assert_eq!(variance_reduction(&constant, l, r).unwrap(), 0.0);
    }

    #[test]
    fn deeper_deterministic_trees_fit_no_worse(d in tied_dataset_strategy()) {
        let mut last = f64::INFINITY;
        for depth in 1..8 {
            let t = build_tree(&d, &tree_params(SplitterKind::Deterministic, depth), &mut SeededRng::new(0)).unwrap();
            let err = mse(&t.predict_dataset(&d).unwrap(), d.targets()).unwrap();
            prop_assert!(err <= last + 1e-12 * (1.0 + last.abs()), "depth {}: {} > {}", depth, err, last);
            last = err;
        }
    }

    #[test]
    fn evaluation_counts_match_the_strategy(d in tied_dataset_strategy(), seed in any::<u64>()) {
        // depth 1: only the root is searched, so the counts are easy to state
        let cols = d.columns();
        let n = d.n_samples();
        let distinct: Vec<u64> = cols.iter().map(|c| {
            let mut v = c.clone();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v.len() as u64
        }).collect();
        let non_constant = distinct.iter().filter(|&&k| k > 1).count() as u64;
        let y = d.targets();
        let y_constant = y.iter().all(|&v| v == y[0]);

        let (_, det) = build_tree_with_stats(&d, &tree_params(SplitterKind::Deterministic, 1), &mut SeededRng::new(seed)).unwrap();
        let (_, pr) = build_tree_with_stats(&d, &tree_params(SplitterKind::PartiallyRandomized, 1), &mut SeededRng::new(seed)).unwrap();
        if n < 2 || y_constant {
            prop_assert_eq!(det, SplitStats::default());
            prop_assert_eq!(pr, SplitStats::default());
        } else {
            prop_assert_eq!(det.nodes, 1);
            prop_assert_eq!(det.sorts, d.n_features() as u64);
            prop_assert_eq!(det.evaluations, distinct.iter().map(|k| k - 1).sum::<u64>());
            prop_assert_eq!(pr.nodes, 1);
            prop_assert_eq!(pr.sorts, 0);
            // one draw per non-constant feature; a redraw only when a side is empty
            prop_assert!(pr.evaluations >= non_constant && pr.evaluations <= 2 * non_constant);
        }
    }

    #[test]
    fn staged_prediction_ends_at_the_model_prediction(
        d in dataset_strategy(30, 3),
        splitter in splitter_strategy(),
        seed in any::<u64>(),
    ) {
        let model = fit_gbm(&d, &GbmConfig { n_stages: 20, splitter, seed, ..GbmConfig::default() }).unwrap();
        for x in d.rows() {
            let staged = model.predict_staged(x).unwrap();
            prop_assert_eq!(staged.len(), 21);
            prop_assert_eq!(staged[20].to_bits(), model.predict(x).unwrap().to_bits());
            prop_assert_eq!(staged[0].to_bits(), model.init.to_bits());
        }
    }

    #[test]
    fn gbm_fits_are_reproducible(
        d in dataset_strategy(30, 3),
        splitter in splitter_strategy(),
        seed in any::<u64>(),
    ) {
        let config = GbmConfig { n_stages: 10, splitter, seed, ..GbmConfig::default() };
        let a = to_json(&Model::Gbm(fit_gbm(&d, &config).unwrap())).unwrap();
        let b = to_json(&Model::Gbm(fit_gbm(&d, &config).unwrap())).unwrap();
        prop_assert_eq!(&a, &b);
        let back = to_json(&from_json(&a).unwrap()).unwrap();
        prop_assert_eq!(a, back);
    }

    #[test]
    fn forest_prediction_ignores_tree_order_and_stays_in_range(
        d in dataset_strategy(30, 3),
        seed in any::<u64>(),
        perm_seed in any::<u64>(),
        probes in prop::collection::vec(-2e6..2e6f64, 30),
    ) {
        use rand::seq::SliceRandom;
        let config = ForestConfig { n_trees: 12, max_depth: 6, seed, ..ForestConfig::random_forest(d.n_features()) };
        let forest = fit_forest(&d, &config).unwrap();
        let mut shuffled = forest.clone();
        shuffled.trees.shuffle(&mut SeededRng::new(perm_seed));
        let m = d.n_features();
        for x in probes.chunks(m).filter(|c| c.len() == m) {
            let p = forest.predict_row(x);
            prop_assert_eq!(p.to_bits(), shuffled.predict_row(x).to_bits());
            let members: Vec<f64> = forest.trees.iter().map(|t| t.predict_row(x)).collect();
            let lo = members.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = members.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= p && p <= hi);
        }
    }

    #[test]
    fn bootstrap_draws_n_indices_reproducibly(n in 1..500usize, seed in any::<u64>()) {
        let a = bootstrap_indices(n, &mut SeededRng::new(seed));
        prop_assert_eq!(a.len(), n);
        prop_assert!(a.iter().all(|&i| i < n));
        prop_assert_eq!(a, bootstrap_indices(n, &mut SeededRng::new(seed)));
    }

    #[test]
    fn mse_is_zero_exactly_for_equal_vectors(
        a in prop::collection::vec(-1e3..1e3f64, 1..30),
        bump in any::<prop::sample::Index>(),
        delta in 1e-3..1.0f64,
    ) {
        prop_assert_eq!(mse(&a, &a).unwrap(), 0.0);
        let mut b = a.clone();
        b[bump.index(a.len())] += delta;
        prop_assert!(mse(&a, &b).unwrap() > 0.0);
    }
}

#[test]
fn bootstrap_draws_with_replacement() {
    let idx = bootstrap_indices(1000, &mut SeededRng::new(1));
    let mut distinct = idx.clone();
    distinct.sort_unstable();
    distinct.dedup();
    // expected distinct share is 1 - 1/e ~ 0.632
    assert!(distinct.len() > 550 && distinct.len() < 700, "{}", distinct.len());
}

#[test]
fn pr_trees_do_not_depend_on_thread_count() {
    let d = make_friedman(Friedman::One, 300, &mut SeededRng::new(4), 1.0).unwrap();
    let grow = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let tree = build_tree(&d, &tree_params(SplitterKind::PartiallyRandomized, 8), &mut SeededRng::new(9)).unwrap();
            let forest = fit_forest(
                &d,
                &ForestConfig { n_trees: 16, seed: 3, ..ForestConfig::extra_trees() },
            )
            .unwrap();
            (tree, forest)
        })
    };
    let (t1, f1) = grow(1);
    let (t4, f4) = grow(4);
    assert_eq!(t1, t4);
    assert_eq!(f1, f4);
}

#[test]
fn protocol_is_reproducible_and_mean_baseline_is_cheap() {
    let d = make_friedman(Friedman::One, 80, &mut SeededRng::new(2), 1.0).unwrap();
    let grid = HyperGrid::quick();
    for spec in ["gbm", "prgbm", "rf", "mean"] {
        let spec: ModelSpec = spec.parse().unwrap();
        let a = run_protocol(&d, spec, &grid, 4, 17).unwrap();
        let b = run_protocol(&d, spec, &grid, 4, 17).unwrap();
        assert_eq!(a.per_repeat_mse, b.per_repeat_mse);
        assert_eq!(a.chosen_hyperparams, b.chosen_hyperparams);
        assert!(a.per_repeat_train_seconds.iter().all(|&s| s >= 0.0));
        assert!(a
            .per_repeat_grid_seconds
            .iter()
            .zip(&a.per_repeat_train_seconds)
            .all(|(g, t)| g >= t));
    }
    let mean = run_protocol(&d, ModelSpec::Mean, &grid, 100, 1).unwrap();
    let per_repeat = mean.per_repeat_train_seconds.iter().sum::<f64>() / 100.0;
    assert!(per_repeat < 1e-3, "{per_repeat}");
}

#[test]
fn masked_mse_only_looks_inside_the_mask() {
    let rows: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
    let d = Dataset::from_rows(&rows, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
    let t = Tree::new(TreeNode::leaf(1.0), 1, 1).unwrap();
    let v = masked_mse(&t, &d, &[false, true, false, true]).unwrap();
    assert_eq!(v, (0.0 + 4.0) / 2.0);
}
