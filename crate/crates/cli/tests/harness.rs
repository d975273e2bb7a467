// SPDX-License-Identifier: MIT OR Apache-2.0

use combss_cli::harness::{aggregate, cp_histogram, run_experiment, HarnessOptions};
use combss_core::simgen::SelectionMode;
use combss_core::{experiment_config, ExperimentConfig, SelectionRule};

fn small(name: &str, scales: Vec<f64>, reps: usize) -> ExperimentConfig {
    let mut config = experiment_config(name).unwrap();
    config.scale_values = scales;
    config.replications = reps;
    config
}

#[test]
fn records_ordered_and_independent_of_thread_count() {
    let config = small("A1", vec![1.0, 3.0], 3);
    let one = run_experiment(
        &config,
        &HarnessOptions {
            threads: Some(1),
            ..Default::default()
        },
    )
    .unwrap();
    let four = run_experiment(
        &config,
        &HarnessOptions {
            threads: Some(4),
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(one, four);
    let keys: Vec<(f64, usize)> = one.iter().map(|r| (r.scale_value, r.replication)).collect();
    assert_eq!(
        keys,
        vec![(1.0, 0), (1.0, 1), (1.0, 2), (3.0, 0), (3.0, 1), (3.0, 2)]
    );
    assert!(one.iter().all(|r| r.wall_time_ms == 0.0));
}

#[test]
fn noiseless_known_k_is_exact() {
    let mut config = small("A1", vec![2.0], 2);
    config.noise_scale = 0.0;
    let records = run_experiment(&config, &HarnessOptions::default()).unwrap();
    for r in &records {
        assert!(!r.skipped);
        assert_eq!(r.tau_hat, vec![31, 61, 91, 121]);
        assert_eq!((r.f1, r.hausdorff), (1.0, 0.0));
    }
}

#[test]
fn seed_changes_data() {
    let mut config = small("A1", vec![1.0], 2);
    let a = run_experiment(&config, &HarnessOptions::default()).unwrap();
    config.base_seed = 99;
    let b = run_experiment(&config, &HarnessOptions::default()).unwrap();
    assert_ne!(a, b);
}

#[test]
fn aggregation_ignores_record_order() {
    let mut config = small("B1", vec![2.0, 4.0], 3);
    config.mode = SelectionMode::DpAndCb;
    let records = run_experiment(&config, &HarnessOptions::default()).unwrap();
    assert_eq!(records.len(), 12);
    let mut shuffled = records.clone();
    shuffled.reverse();
    shuffled.swap(1, 7);
    assert_eq!(aggregate(&records), aggregate(&shuffled));
    let rows = aggregate(&records);
    let order: Vec<(f64, SelectionRule)> = rows.iter().map(|r| (r.scale_value, r.rule)).collect();
    assert_eq!(
        order,
        vec![
            (2.0, SelectionRule::Discrepancy),
            (2.0, SelectionRule::ConfidenceBound),
            (4.0, SelectionRule::Discrepancy),
            (4.0, SelectionRule::ConfidenceBound),
        ]
    );
    let total: usize = cp_histogram(&records, 4.0, SelectionRule::Discrepancy)
        .iter()
        .map(|c| c.1)
        .sum();
    let expected: usize = records
        .iter()
        .filter(|r| r.scale_value == 4.0 && r.rule == SelectionRule::Discrepancy)
        .map(|r| r.k_hat)
        .sum();
    assert_eq!(total, expected);
}

#[test]
fn merging_never_adds_change_points() {
    let config = small("B1", vec![1.5], 4);
    let mut merged = config.clone();
    merged.merge_gap = Some(5);
    let plain = run_experiment(&config, &HarnessOptions::default()).unwrap();
    let post = run_experiment(&merged, &HarnessOptions::default()).unwrap();
    for (a, b) in plain.iter().zip(&post) {
        assert!(b.k_hat <= a.k_hat);
        assert!(b.tau_hat.windows(2).all(|w| w[1] - w[0] >= 5));
    }
}

#[test]
fn one_sided_distance_never_exceeds_symmetric() {
    let config = small("A1", vec![1.0, 3.0], 4);
    let both = run_experiment(&config, &HarnessOptions::default()).unwrap();
    let one = run_experiment(
        &config,
        &HarnessOptions {
            one_sided_hausdorff: true,
            ..Default::default()
        },
    )
    .unwrap();
    for (a, b) in both.iter().zip(&one) {
        assert_eq!(a.tau_hat, b.tau_hat);
        assert_eq!(a.f1, b.f1);
        if !a.skipped {
            assert!(b.hausdorff <= a.hausdorff);
        }
    }
}
