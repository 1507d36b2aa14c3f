//! Cross-module properties: simulator, ingestion and analysis invariants.

use std::collections::BTreeMap;

use metawisdom::metrics::summarize_values;
use metawisdom::model::{AidCatalog, Criterion, EstimateSample, TreatmentCondition};
use metawisdom::replicate::{analyze_dataset, parse_samples, write_samples};
use metawisdom::sim::{
    choice_probabilities, generate_counterbalanced_orderings, run_experiment_with_seed, AidEffect, AidEffectSpec,
    ArmSizes, ChoiceModelSpec, DecisionMaker, ExperimentConfig, PopulationSpec,
};
use metawisdom::stats::{bootstrap_gse_diff, kde, welch_t, Alternative, BootstrapConfig, KdeOptions};
use proptest::prelude::*;

fn catalog(k: usize) -> AidCatalog {
    AidCatalog::new((0..k).map(|i| format!("aid{i}"))).unwrap()
}

fn small_config(seed: u64, alpha: f64) -> ExperimentConfig {
    let cat = catalog(3);
    let effects = AidEffectSpec {
        effects: BTreeMap::from([
            (
                "aid0".to_string(),
                AidEffect {
                    mean_shift: -2.0,
                    sd_multiplier: 0.8,
                    anchor_weight: 0.5,
                },
            ),
            (
                "aid1".to_string(),
                AidEffect {
                    mean_shift: 1.0,
                    sd_multiplier: 1.2,
                    anchor_weight: 0.0,
                },
            ),
            (
                "aid2".to_string(),
                AidEffect {
                    mean_shift: 4.0,
                    sd_multiplier: 2.0,
                    anchor_weight: 0.2,
                },
            ),
        ]),
    };
    let mut choice = ChoiceModelSpec::uniform(&cat);
    choice.matching_coefficient = alpha;
    ExperimentConfig {
        criterion: Criterion::fixed(10.0),
        catalog: cat,
        population: PopulationSpec {
            n: 160,
            baseline_mean: Some(8.0),
            baseline_bias_sd: 2.0,
            noise_sd_range: (1.0, 2.0),
        },
        aid_effects: effects,
        choice,
        arm_sizes: ArmSizes {
            control: 30,
            assigned: 40,
            single_choice: 45,
            multiple_choice: 45,
        },
        seed: Some(seed),
        floor_at_zero: false,
        carryover: 0.0,
        task_id: "prop".into(),
    }
}

fn sample_strategy() -> impl Strategy<Value = EstimateSample> {
    let conditions = prop_oneof![
        Just(TreatmentCondition::Control),
        Just(TreatmentCondition::Assigned),
        Just(TreatmentCondition::SingleChoice),
        Just(TreatmentCondition::MultipleChoice),
    ];
    (
        "[a-z][a-z0-9_-]{0,8}",
        conditions,
        proptest::sample::subsequence(vec!["x", "y", "z"], 1..=3),
        prop::num::f64::NORMAL | prop::num::f64::ZERO,
        "[a-z]{1,6}",
    )
        .prop_map(|(id, condition, aids, estimate, task)| {
            let sequence: Vec<String> = match condition {
                TreatmentCondition::Control => Vec::new(),
                TreatmentCondition::MultipleChoice => aids.iter().map(|s| s.to_string()).collect(),
                _ => vec![aids[0].to_string()],
            };
            EstimateSample::new(id, condition, sequence, estimate, task).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ingest_inverts_emit(samples in prop::collection::vec(sample_strategy(), 0..40)) {
        let mut buf = Vec::new();
        write_samples(&mut buf, &samples).unwrap();
        prop_assert_eq!(parse_samples(buf.as_slice()).unwrap(), samples);
    }

    #[test]
    fn untilted_choice_returns_base_shares(
        raw in prop::collection::vec(0.05f64..1.0, 2..6),
        bias in -10.0f64..10.0,
        noise in 0.1f64..5.0,
    ) {
        let k = raw.len();
        let cat = catalog(k);
        let total: f64 = raw.iter().sum();
        let shares: Vec<f64> = raw.iter().map(|r| r / total).collect();
        let mut choice = ChoiceModelSpec::uniform(&cat);
        choice.base_shares = cat.aids().iter().cloned().zip(shares.iter().copied()).collect();
        let effects = AidEffectSpec {
            effects: cat.aids().iter().enumerate().map(|(i, a)| {
                (a.clone(), AidEffect { mean_shift: i as f64, sd_multiplier: 1.0 + i as f64, anchor_weight: 0.0 })
            }).collect(),
        };
        let dm = DecisionMaker { bias, noise_sd: noise };
        let p = choice_probabilities(&dm, &cat, &choice, &effects, cat.aids(), &vec![false; k]).unwrap();
        prop_assert_eq!(p, shares);
    }

    #[test]
    fn counterbalancing_is_balanced(k in 1usize..5, total in 0usize..200) {
        let cat = catalog(k);
        let orderings = generate_counterbalanced_orderings(&cat, total).unwrap();
        prop_assert_eq!(orderings.len(), total);
        let mut counts: BTreeMap<Vec<String>, usize> = BTreeMap::new();
        for o in orderings {
            *counts.entry(o).or_default() += 1;
        }
        if total > 0 {
            let max = *counts.values().max().unwrap();
            let min = if counts.len() < (1..=k).product::<usize>() { 0 } else { *counts.values().min().unwrap() };
            prop_assert!(max - min <= 1);
        }
    }

    #[test]
    fn welch_two_sided_symmetric_and_tails_complement(
        a in prop::collection::vec(-100.0f64..100.0, 2..30),
        b in prop::collection::vec(-100.0f64..100.0, 2..30),
    ) {
        if let (Ok(ab), Ok(ba)) = (welch_t(&a, &b, Alternative::TwoSided), welch_t(&b, &a, Alternative::TwoSided)) {
            prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab.p_value));
            let less = welch_t(&a, &b, Alternative::Less).unwrap().p_value;
            let greater = welch_t(&a, &b, Alternative::Greater).unwrap().p_value;
            prop_assert!((less + greater - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kde_is_a_density(data in prop::collection::vec(-50.0f64..50.0, 2..200)) {
        if let Ok(curve) = kde(&data, KdeOptions::default()) {
            prop_assert!(curve.density.iter().all(|&d| d >= 0.0));
            prop_assert!((curve.integral() - 1.0).abs() <= 0.005);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn simulated_datasets_satisfy_core_identities(seed in any::<u64>(), alpha in 0.0f64..0.5) {
        let config = small_config(seed, alpha);
        let exp = run_experiment_with_seed(&config, seed).unwrap();
        let analysis = analyze_dataset(&exp.samples, &config.criterion, None).unwrap();
        for row in &analysis.rows {
            let s = &row.summary;
            prop_assert!((s.gse - (s.mean - 10.0).powi(2)).abs() <= 1e-9 * s.gse.max(1.0));
            prop_assert!(s.gse <= s.mse);
            prop_assert!(row.identity_residual.abs() < 1e-9);
        }
        for r in analysis.effects.values() {
            prop_assert_eq!(r.metawise, r.choice_effect > 0.0);
        }
    }

    #[test]
    fn simulation_is_a_function_of_the_seed(seed in any::<u64>()) {
        let config = small_config(seed, 0.1);
        let a = run_experiment_with_seed(&config, seed).unwrap();
        let b = run_experiment_with_seed(&config, seed).unwrap();
        prop_assert_eq!(&a.samples, &b.samples);
        let other = run_experiment_with_seed(&config, seed.wrapping_add(1)).unwrap();
        prop_assert_ne!(&a.samples, &other.samples);
    }
}

#[test]
fn bootstrap_is_bit_identical_for_same_seed() {
    let exp = run_experiment_with_seed(&small_config(3, 0.0), 3).unwrap();
    let a = exp.arm_values(TreatmentCondition::Assigned);
    let b = exp.arm_values(TreatmentCondition::SingleChoice);
    let y = Criterion::fixed(10.0);
    let config = BootstrapConfig::new(300, 99);
    let first = bootstrap_gse_diff(&a, &b, &y, &config).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let second = pool.install(|| bootstrap_gse_diff(&a, &b, &y, &config)).unwrap();
    assert_eq!(first.estimate.to_bits(), second.estimate.to_bits());
    assert_eq!(first.ci_low.to_bits(), second.ci_low.to_bits());
    assert_eq!(first.ci_high.to_bits(), second.ci_high.to_bits());
    assert_eq!(first.p_value.to_bits(), second.p_value.to_bits());
    let direct = summarize_values(&a, &y).unwrap().gse - summarize_values(&b, &y).unwrap().gse;
    assert!((first.estimate - direct).abs() < 1e-9);
}

#[test]
fn simulated_file_round_trips_through_ingest() {
    let exp = run_experiment_with_seed(&small_config(11, 0.2), 11).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    write_samples(std::fs::File::create(&path).unwrap(), &exp.samples).unwrap();
    let back = metawisdom::replicate::ingest_csv(&path).unwrap();
    assert_eq!(back, exp.samples);
    assert_eq!(back.len(), 160);
}
