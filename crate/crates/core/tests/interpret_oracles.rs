mod common;

use common::{additive_model, linear_model};
use formulanet::interpret::{ale_edges, feature_groups};
use formulanet::tabular::Column;
use formulanet::{
    accumulated_local_effects, avg_conditional_effects, fit, parse_formula, partial_dependence,
    permutation_importance, summarize, synth, DataTable, LossSpec, TrainConfig,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn numeric_table(names: &[&str], columns: Vec<Vec<f64>>) -> DataTable {
    DataTable::new(names.iter().map(|s| s.to_string()).collect(), columns.into_iter().map(Column::Numeric).collect())
        .unwrap()
}

#[test]
fn ace_of_linear_network_equals_slopes() {
    let t = synth::linear(300, 0, 11);
    let m = linear_model(&t, "y ~ x1 + x2", &[2.0, -1.0], 0.3, LossSpec::Gaussian);
    let ace = avg_conditional_effects(&m, 0).unwrap();
    assert!((ace[0].ace - 2.0).abs() < 1e-9, "{}", ace[0].ace);
    assert!((ace[1].ace + 1.0).abs() < 1e-9, "{}", ace[1].ace);
    assert!(ace[0].local.iter().all(|v| (v - 2.0).abs() < 1e-9));
}

#[test]
fn ace_is_per_original_unit_when_standardized() {
    // Standardized network, trained: ACE must approximate the raw-scale slope.
    let mut t = synth::linear(600, 0, 12);
    let columns: Vec<Column> = t
        .columns()
        .iter()
        .enumerate()
        .map(|(i, c)| match (i, c) {
            (1, Column::Numeric(v)) => Column::Numeric(v.iter().map(|x| 10.0 * x + 5.0).collect()),
            (_, c) => c.clone(),
        })
        .collect();
    t = DataTable::new(t.column_names().to_vec(), columns).unwrap();
    let cfg = TrainConfig { hidden: vec![16], epochs: 60, ..TrainConfig::default() };
    let m = fit(&cfg, &t, &parse_formula("y ~ x1 + x2").unwrap()).unwrap();
    let ace = avg_conditional_effects(&m, 0).unwrap();
    assert!((ace[0].ace - 0.2).abs() < 0.05, "x1 was rescaled by 10: {}", ace[0].ace);
}

#[test]
fn constant_model_has_zero_effects_and_flat_curves() {
    let t = synth::linear(100, 0, 13);
    let m = linear_model(&t, "y ~ x1 + x2", &[0.0, 0.0], 1.5, LossSpec::Gaussian);
    for e in avg_conditional_effects(&m, 0).unwrap() {
        assert_eq!(e.ace, 0.0);
    }
    let pd = partial_dependence(&m, "x1", 20, 0).unwrap();
    assert!(pd.values.iter().all(|&v| v == 1.5));
}

#[test]
fn pdp_of_linear_network_is_the_line() {
    let t = synth::linear(200, 0, 14);
    let m = linear_model(&t, "y ~ x1 + x2", &[2.0, -1.0], 0.0, LossSpec::Gaussian);
    let pd = partial_dependence(&m, "x1", 20, 0).unwrap();
    assert_eq!(pd.grid.len(), 20);
    assert!(pd.grid.windows(2).all(|w| w[0] < w[1]));
    let c = pd.values[0] - 2.0 * pd.grid[0];
    for (g, v) in pd.grid.iter().zip(&pd.values) {
        assert!((v - (2.0 * g + c)).abs() < 1e-9);
    }
}

#[test]
fn pdp_monotone_for_monotone_binomial_model() {
    let t = synth::xor(200, 15);
    let m = linear_model(&t, "label ~ x1 + x2", &[1.5, 0.0], 0.0, LossSpec::Binomial);
    let pd = partial_dependence(&m, "x1", 30, 0).unwrap();
    assert!(pd.values.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn ale_of_linear_network_has_slope_two() {
    let t = synth::linear(500, 0, 16);
    let m = linear_model(&t, "y ~ x1 + x2", &[2.0, -1.0], 0.0, LossSpec::Gaussian);
    let ale = accumulated_local_effects(&m, "x1", 10, 0).unwrap();
    assert_eq!(ale.grid.len(), 11);
    for k in 1..ale.grid.len() {
        let slope = (ale.values[k] - ale.values[0]) / (ale.grid[k] - ale.grid[0]);
        assert!((slope - 2.0).abs() < 1e-9, "{slope}");
    }
    let weighted: f64 = ale.bin_counts.iter().zip(&ale.bin_values).map(|(&n, v)| n as f64 * v).sum();
    assert!(weighted.abs() < 1e-8);
}

#[test]
fn ale_ignores_correlation_for_additive_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n = 400;
    let x1: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let independent: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let correlated: Vec<f64> = x1.iter().map(|v| 0.9 * v + 0.1 * rng.random_range(-1.0..1.0)).collect();
    let y = vec![0.0; n];
    let a = numeric_table(&["y", "x1", "x2"], vec![y.clone(), x1.clone(), independent]);
    let b = numeric_table(&["y", "x1", "x2"], vec![y, x1, correlated]);
    let ale_a = accumulated_local_effects(&additive_model(&a), "x1", 10, 0).unwrap();
    let ale_b = accumulated_local_effects(&additive_model(&b), "x1", 10, 0).unwrap();
    assert_eq!(ale_a.grid, ale_b.grid);
    for (u, v) in ale_a.values.iter().zip(&ale_b.values) {
        assert!((u - v).abs() < 1e-9);
    }
}

#[test]
fn pdp_and_ale_agree_up_to_shift_on_additive_linear_model() {
    let t = synth::linear(300, 0, 18);
    let m = linear_model(&t, "y ~ x1 + x2", &[2.0, -1.0], 0.0, LossSpec::Gaussian);
    let ale = accumulated_local_effects(&m, "x1", 10, 0).unwrap();
    // Evaluate the PDP on the ALE edges by building a grid through the line.
    let pd = partial_dependence(&m, "x1", 50, 0).unwrap();
    let slope = (pd.values[1] - pd.values[0]) / (pd.grid[1] - pd.grid[0]);
    let pd_at = |x: f64| pd.values[0] + slope * (x - pd.grid[0]);
    let diffs: Vec<f64> = ale.grid.iter().zip(&ale.values).map(|(&g, &v)| pd_at(g) - v).collect();
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    assert!(diffs.iter().all(|d| (d - mean).abs() < 1e-8));
}

#[test]
fn inert_feature_has_exactly_zero_importance() {
    let t = synth::linear(300, 1, 19);
    let m = linear_model(&t, "y ~ x1 + x2 + noise1", &[2.0, -1.0, 0.0], 0.0, LossSpec::Gaussian);
    let imp = permutation_importance(&m, 5, 3).unwrap();
    assert_eq!(imp[2], ("noise1".to_string(), 0.0));
    assert!(imp[0].1 > imp[1].1 && imp[1].1 > 0.0);
}

#[test]
fn importance_matches_analytic_expectation() {
    // f(x) = x1 fitted perfectly; permuting x1 raises the MSE by E[(x1 − x1')²] = 2·Var(x1).
    let n = 2000;
    let t = synth::linear(n, 0, 20);
    let x1 = match t.column("x1") {
        Some(Column::Numeric(v)) => v.clone(),
        _ => unreachable!(),
    };
    let t = numeric_table(&["y", "x1"], vec![x1.clone(), x1.clone()]);
    let m = linear_model(&t, "y ~ x1", &[1.0], 0.0, LossSpec::Gaussian);
    let mean = x1.iter().sum::<f64>() / n as f64;
    let var = x1.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let imp = permutation_importance(&m, 5, 1).unwrap()[0].1;
    assert!((imp / (2.0 * var) - 1.0).abs() < 0.15, "importance {imp} vs {}", 2.0 * var);
}

#[test]
fn categorical_group_is_permuted_jointly() {
    let n = 120;
    let levels: Vec<Option<&str>> = (0..n).map(|i| Some(["a", "b", "c"][i % 3])).collect();
    let y: Vec<f64> = (0..n).map(|i| (i % 3) as f64).collect();
    let t = DataTable::new(
        vec!["y".into(), "g".into(), "x".into()],
        vec![
            Column::Numeric(y),
            Column::Categorical(formulanet::tabular::Categorical::from_values(&levels)),
            Column::Numeric((0..n).map(|i| i as f64 / n as f64).collect()),
        ],
    )
    .unwrap();
    let m = fit(&TrainConfig { hidden: vec![8], epochs: 10, ..TrainConfig::default() }, &t, &parse_formula("y ~ .").unwrap())
        .unwrap();
    let groups = feature_groups(&m.encoder);
    assert_eq!(groups[0].columns, 0..3);
    let imp = permutation_importance(&m, 2, 0).unwrap();
    assert_eq!(imp.len(), 2);
    let s = summarize(&m, 2, 0).unwrap();
    assert_eq!(s.ace.rows.len(), 1);
    assert!(s.notices.iter().any(|n| n.contains('g')));
    assert!(matches!(
        accumulated_local_effects(&m, "g", 5, 0),
        Err(formulanet::InterpretError::CategoricalFeature(_))
    ));
}

#[test]
fn errors_for_unknown_and_degenerate_features() {
    let t = numeric_table(&["y", "x1", "x2"], vec![vec![0.0; 10], vec![1.0; 10], (0..10).map(f64::from).collect()]);
    let m = linear_model(&t, "y ~ x1 + x2", &[1.0, 1.0], 0.0, LossSpec::Gaussian);
    assert!(matches!(partial_dependence(&m, "zz", 10, 0), Err(formulanet::InterpretError::UnknownFeature(_))));
    assert!(matches!(accumulated_local_effects(&m, "x1", 5, 0), Err(formulanet::InterpretError::DegenerateFeature(_))));
    assert!(matches!(partial_dependence(&m, "x2", 1, 0), Err(formulanet::InterpretError::InvalidArgument(_))));
}

#[test]
fn summary_without_ensemble_has_single_value_column() {
    let t = synth::linear(100, 0, 21);
    let m = linear_model(&t, "y ~ x1", &[2.0], 0.0, LossSpec::Gaussian);
    let s = summarize(&m, 5, 0).unwrap();
    assert_eq!(s.importance.rows.len(), 1);
    assert_eq!(s.ace.rows.len(), 1);
    let text = s.render();
    assert!(text.contains("\tImportance\n"));
    assert!(text.contains("x1 \u{2192} y\t"));
    assert!(!text.contains("Signif. codes"));
}

#[test]
fn xai_leaves_parameters_untouched() {
    let t = synth::linear(200, 1, 22);
    let cfg = TrainConfig { hidden: vec![8], epochs: 5, bootstrap: Some(3), ..TrainConfig::default() };
    let m = fit(&cfg, &t, &parse_formula("y ~ .").unwrap()).unwrap();
    let before = m.clone();
    summarize(&m, 2, 0).unwrap();
    partial_dependence(&m, "x1", 10, 0).unwrap();
    let ale = accumulated_local_effects(&m, "x1", 10, 0).unwrap();
    assert!(ale.se.is_some());
    assert_eq!(m, before);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ale_centering_identity(seed in 0u64..10_000, bins in 2usize..15) {
        let t = synth::linear(150, 0, seed);
        let cfg = TrainConfig { hidden: vec![6], epochs: 1, seed, ..TrainConfig::default() };
        let m = fit(&cfg, &t, &parse_formula("y ~ .").unwrap()).unwrap();
        let ale = accumulated_local_effects(&m, "x2", bins, 0).unwrap();
        let weighted: f64 = ale.bin_counts.iter().zip(&ale.bin_values).map(|(&n, v)| n as f64 * v).sum();
        prop_assert!(weighted.abs() < 1e-8);
        prop_assert_eq!(ale.bin_counts.iter().sum::<usize>(), 150);
        prop_assert!(ale.grid.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn ale_edges_nonempty_bins(values in prop::collection::vec(-5i32..5, 2..60), bins in 2usize..12) {
        let v: Vec<f64> = values.iter().map(|&x| x as f64).collect();
        let edges = ale_edges(&v, bins);
        prop_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        for w in edges.windows(2) {
            prop_assert!(v.iter().any(|&x| x > w[0] && x <= w[1]));
        }
    }
}
