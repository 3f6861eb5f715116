mod common;

use causal_cohort::effect::EstimateSpec;
use causal_cohort::refute::{
    refute_all, refute_placebo, refute_random_common_cause, refute_subset, refute_unobserved_common_cause, RefuteConfig,
};
use causal_cohort::scm::{fixtures, sample};

const SEEDS: u64 = 50;

fn count(f: impl Fn(u64) -> bool) -> u64 {
    (0..SEEDS).filter(|&s| f(s)).count() as u64
}

#[test]
fn placebo_is_near_zero() {
    let table = common::fixture_b_binned(50_000, 100);
    let spec = common::fixture_b_spec(&table, &["Z"]);
    let values: Vec<f64> = (0..SEEDS).map(|s| refute_placebo(&table, &spec, s).unwrap()).collect();
    let within = values.iter().filter(|v| v.abs() <= 0.02).count();
    assert!(within >= 48, "{within}/50 within 0.02: {values:?}");
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    assert!(mean.abs() <= 0.01, "mean {mean}");
}

#[test]
fn random_common_cause_changes_nothing() {
    let table = common::fixture_b_binned(50_000, 101);
    let spec = common::fixture_b_spec(&table, &["Z"]);
    let original = spec.value(&table).unwrap();
    let ok = count(|s| (refute_random_common_cause(&table, &spec, 4, s).unwrap() - original).abs() <= 0.05);
    assert!(ok >= 48, "{ok}/50");
}

#[test]
fn subsets_stay_close() {
    let table = common::fixture_b_binned(50_000, 102);
    let spec = common::fixture_b_spec(&table, &["Z"]);
    let original = spec.value(&table).unwrap();
    let ok = count(|s| (refute_subset(&table, &spec, 0.8, s).unwrap() - original).abs() <= 0.1);
    assert!(ok >= 48, "{ok}/50");
    for s in 0..5 {
        assert!((refute_subset(&table, &spec, 0.999, s).unwrap() - original).abs() <= 0.02);
    }
}

#[test]
fn subset_spread_shrinks_towards_the_full_table() {
    let table = common::fixture_b_binned(20_000, 103);
    let spec = common::fixture_b_spec(&table, &["Z"]);
    let spread: Vec<f64> = [0.2, 0.5, 0.8, 0.99]
        .iter()
        .map(|&f| {
            let v: Vec<f64> = (0..SEEDS).map(|s| refute_subset(&table, &spec, f, s).unwrap()).collect();
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
        })
        .collect();
    assert!(spread.windows(2).all(|w| w[0] > w[1]), "{spread:?}");
}

#[test]
fn strong_unobserved_confounder_moves_the_estimate() {
    let table = common::fixture_b_binned(50_000, 104);
    let spec = common::fixture_b_spec(&table, &["Z"]);
    let original = spec.value(&table).unwrap();
    let moved = count(|s| (refute_unobserved_common_cause(&table, &spec, 0.5, 0.5, s).unwrap() - original).abs() > 0.05);
    assert!(moved >= 48, "{moved}/50");
    let still = count(|s| (refute_unobserved_common_cause(&table, &spec, 0.0, 0.0, s).unwrap() - original).abs() <= 0.05);
    assert_eq!(still, SEEDS);
}

#[test]
fn null_effect_stays_null() {
    let t = common::bin_equal_frequency(&sample(&fixtures::three_arm_null(), 20_000, 6), "age", 10);
    let spec = EstimateSpec::new("drug_group", "los_days", &["age"], "Haloperidol", "NoDrug");
    let original = spec.value(&t).unwrap();
    let rcc = refute_random_common_cause(&t, &spec, 4, 1).unwrap();
    assert!(original.abs() < 0.1 && rcc.abs() < 0.1, "{original} {rcc}");
    assert!(refute_placebo(&t, &spec, 1).unwrap().abs() < 0.1);
}

#[test]
fn report_is_seeded_and_formatted() {
    let table = common::fixture_b_binned(5_000, 105);
    let spec = common::fixture_b_spec(&table, &["Z"]);
    let a = refute_all(&table, &spec, &RefuteConfig::default(), 9).unwrap();
    assert_eq!(a, refute_all(&table, &spec, &RefuteConfig::default(), 9).unwrap());
    assert_ne!(a, refute_all(&table, &spec, &RefuteConfig::default(), 10).unwrap());
    let lines = a.lines();
    let prefixes = [
        "Estimated effect: ",
        "Add a random common cause: ",
        "Add an Unobserved Common Cause: ",
        "Use a Placebo Treatment: ",
        "Use a subset of data: ",
    ];
    for (line, prefix) in lines.iter().zip(prefixes) {
        let value = line.strip_prefix(prefix).unwrap();
        assert_eq!(value.split('.').nth(1).unwrap().len(), 4, "{line}");
    }
    assert_eq!(a.pass_placebo, a.placebo.abs() <= a.tol_zero);
    assert_eq!(a.pass_subset, (a.subset - a.original).abs() <= a.tol_same);
    assert_eq!(a.pass_random_common_cause, (a.random_common_cause - a.original).abs() <= a.tol_same);
}
