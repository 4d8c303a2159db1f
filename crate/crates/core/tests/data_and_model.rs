use eg_active::data_pool::{load_dataset, make_synthetic, split_pool, SplitConfig, SyntheticSpec};
use eg_active::model::{evaluate, predict_scores, train, Hypothesis, TrainConfig};
use eg_active::reward::reward_for_step;
use eg_active::data_pool::Dataset;

#[test]
fn synthetic_two_gaussian_round_trips_through_csv() {
    let ds = make_synthetic(&SyntheticSpec::two_gaussian(100, 12)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("two.csv");
    ds.save_csv(&path).unwrap();
    let back = load_dataset(&path).unwrap();
    assert_eq!(back.len(), 200);
    assert_eq!(back.dim(), 2);
    assert_eq!(back.num_classes(), 2);
    for id in 0..ds.len() {
        assert_eq!(back.row(id), ds.row(id));
        assert_eq!(back.class_name(back.label(id)), ds.class_name(ds.label(id)));
    }
}

#[test]
fn separated_gaussians_are_learned() {
    let ds = make_synthetic(&SyntheticSpec::two_gaussian(200, 3)).unwrap();
    let (pool, test, _) = split_pool(&ds, &SplitConfig::default(), None).unwrap();
    let h = train(&ds, &pool.pool_ids(), &TrainConfig::default()).unwrap();
    assert!(evaluate(&h, &ds, &test).unwrap() < 0.05);
}

#[test]
fn hidden_cluster_is_misclassified_from_the_visible_clusters() {
    let spec = SyntheticSpec::hidden_cluster(200, 8);
    let ds = make_synthetic(&spec).unwrap();
    let n = spec.per_cluster;
    let visible: Vec<usize> = (0..2 * n).collect();
    let hidden: Vec<usize> = (2 * n..3 * n).collect();
    let h = train(&ds, &visible, &TrainConfig::default()).unwrap();
    let err = evaluate(&h, &ds, &hidden).unwrap();
    assert!(err > 0.9, "hidden cluster error {err}");
    let full: Vec<usize> = (0..3 * n).collect();
    let h = train(&ds, &full, &TrainConfig { epochs: 2000, ..TrainConfig::default() }).unwrap();
    assert!(evaluate(&h, &ds, &full).unwrap() < 0.02, "layout should be linearly separable");
}

#[test]
fn more_labels_never_hurt_on_two_gaussians() {
    let mut ok = 0;
    for seed in 0..30 {
        let ds = make_synthetic(&SyntheticSpec::two_gaussian(100, seed)).unwrap();
        let split = SplitConfig { seed, ..SplitConfig::default() };
        let (pool, test, _) = split_pool(&ds, &split, None).unwrap();
        let cfg = TrainConfig::default();
        let full = evaluate(&train(&ds, &pool.pool_ids(), &cfg).unwrap(), &ds, &test).unwrap();
        let two = evaluate(&train(&ds, &pool.labeled_ids(), &cfg).unwrap(), &ds, &test).unwrap();
        if full <= two {
            ok += 1;
        }
    }
    assert!(ok >= 28, "{ok}/30");
}

fn three_points() -> Dataset {
    Dataset::new(2, vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0], vec![0, 1, 0]).unwrap()
}

#[test]
fn reward_hand_trace() {
    let ds = three_points();
    // binary scores (1, 0, 1) and (0, 1, 1): cosine 1/2, angle π/3
    let a = Hypothesis::from_parts(vec![vec![0.0, 0.0], vec![1.0, 0.0]], vec![0.0, 0.0]).unwrap();
    let b = Hypothesis::from_parts(vec![vec![0.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0]).unwrap();
    assert_eq!(predict_scores(&a, &ds, &[0, 1, 2]).unwrap().values, vec![1.0, 0.0, 1.0]);
    let s = reward_for_step(&a, &b, &ds, &[0, 1, 2], 4).unwrap();
    assert!((s.d_value - 0.5).abs() < 1e-12);
    assert!((s.r_value - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(s.iteration, 4);
    assert!(!s.degenerate);
}

#[test]
fn unchanged_or_rescaled_hypothesis_earns_nothing() {
    let ds = three_points();
    let a = Hypothesis::from_parts(vec![vec![0.5, -1.0], vec![1.0, 2.0]], vec![0.1, -0.3]).unwrap();
    let scaled = Hypothesis::from_parts(vec![vec![1.5, -3.0], vec![3.0, 6.0]], vec![0.3, -0.9]).unwrap();
    assert_eq!(reward_for_step(&a, &a, &ds, &[0, 1, 2], 1).unwrap().r_value, 0.0);
    assert!(reward_for_step(&a, &scaled, &ds, &[0, 1, 2], 1).unwrap().r_value < 1e-6);
}
