//! Expected information and choice effects over repeated experiments.

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::experiment::{experiment_effects, run_experiment_with_seed};
use crate::effects::EffectReport;
use crate::error::{Error, Result};
use crate::model::TreatmentCondition;
use crate::rng::derive_seed;
use crate::stats::kde::quantile_sorted;

/// Distribution of one effect across replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectDistribution {
    pub mean: f64,
    /// Monte Carlo standard error of the mean.
    pub standard_error: f64,
    /// 2.5th and 97.5th percentiles of the per-replication values.
    pub percentile_low: f64,
    pub percentile_high: f64,
    /// `mean -/+ 1.96 * standard_error`; shrinks as `1/sqrt(R)`.
    pub mean_ci: (f64, f64),
    /// Share of replications with a strictly positive value.
    pub positive_share: f64,
}

impl EffectDistribution {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::SampleTooSmall {
                needed: 2,
                found: values.len(),
            });
        }
        let n = values.len() as f64;
        let mean = crate::numeric::sum(values.iter().copied()) / n;
        let var = crate::numeric::sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1.0);
        let standard_error = (var / n).sqrt();
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self {
            mean,
            standard_error,
            percentile_low: quantile_sorted(&sorted, 0.025),
            percentile_high: quantile_sorted(&sorted, 0.975),
            mean_ci: (mean - 1.96 * standard_error, mean + 1.96 * standard_error),
            positive_share: values.iter().filter(|v| **v > 0.0).count() as f64 / n,
        })
    }
}

/// Per-replication reports for both choice arms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Replication {
    pub seed: u64,
    pub single_choice: EffectReport,
    pub multiple_choice: EffectReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloEffects {
    pub replications: Vec<Replication>,
    pub information_effect: EffectDistribution,
    pub choice_effect_single: EffectDistribution,
    pub choice_effect_multiple: EffectDistribution,
    pub simpson_rate_single: f64,
    pub simpson_rate_multiple: f64,
}

/// Runs `replications` independent experiments; replication `r` uses seed
/// `derive_seed(seed, r)`. The result is the same for any thread count.
pub fn monte_carlo_effects(config: &ExperimentConfig, replications: usize) -> Result<MonteCarloEffects> {
    if replications < 2 {
        return Err(Error::InvalidParameter(format!(
            "replications must be at least 2, got {replications}"
        )));
    }
    config.validate()?;
    let base = config.seed.unwrap_or(0);
    let reps: Vec<Replication> = (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(base, r);
            let exp = run_experiment_with_seed(config, seed)?;
            Ok(Replication {
                seed,
                single_choice: experiment_effects(&exp, &config.criterion, TreatmentCondition::SingleChoice, None)?,
                multiple_choice: experiment_effects(&exp, &config.criterion, TreatmentCondition::MultipleChoice, None)?,
            })
        })
        .collect::<Result<_>>()?;

    let collect = |f: &dyn Fn(&Replication) -> f64| reps.iter().map(f).collect::<Vec<f64>>();
    let rate = |f: &dyn Fn(&Replication) -> bool| reps.iter().filter(|r| f(r)).count() as f64 / reps.len() as f64;
    Ok(MonteCarloEffects {
        information_effect: EffectDistribution::from_values(&collect(&|r| r.single_choice.information_effect))?,
        choice_effect_single: EffectDistribution::from_values(&collect(&|r| r.single_choice.choice_effect))?,
        choice_effect_multiple: EffectDistribution::from_values(&collect(&|r| r.multiple_choice.choice_effect))?,
        simpson_rate_single: rate(&|r| r.single_choice.simpson_flag),
        simpson_rate_multiple: rate(&|r| r.multiple_choice.simpson_flag),
        replications: reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AidCatalog, Criterion};
    use crate::sim::config::{AidEffect, AidEffectSpec, ArmSizes, ChoiceModelSpec, PopulationSpec};

    fn symmetric(d: f64, aids: &[&str]) -> ExperimentConfig {
        let catalog = AidCatalog::new(aids.iter().copied()).unwrap();
        let shifts: Vec<f64> = match aids.len() {
            1 => vec![d],
            _ => vec![-d, 0.0, d],
        };
        ExperimentConfig {
            criterion: Criterion::fixed(100.0),
            population: PopulationSpec {
                n: 1,
                baseline_mean: Some(90.0),
                baseline_bias_sd: 5.0,
                noise_sd_range: (2.0, 4.0),
            },
            aid_effects: AidEffectSpec {
                effects: aids
                    .iter()
                    .zip(shifts)
                    .map(|(a, s)| {
                        (
                            a.to_string(),
                            AidEffect {
                                mean_shift: s,
                                ..AidEffect::NEUTRAL
                            },
                        )
                    })
                    .collect(),
            },
            choice: ChoiceModelSpec::uniform(&catalog),
            catalog,
            arm_sizes: ArmSizes {
                control: 40,
                assigned: 60,
                single_choice: 60,
                multiple_choice: 60,
            },
            seed: Some(2024),
            floor_at_zero: false,
            carryover: 0.0,
            task_id: "mc".into(),
        }
    }

    #[test]
    fn null_choice_effect_is_zero_in_expectation() {
        let mc = monte_carlo_effects(&symmetric(3.0, &["a", "b", "c"]), 200).unwrap();
        let ce = mc.choice_effect_single;
        assert!(ce.mean.abs() < 3.0 * ce.standard_error, "{ce:?}");
        assert_eq!(mc.replications.len(), 200);
    }

    #[test]
    fn single_aid_has_no_choice_effect() {
        let mc = monte_carlo_effects(&symmetric(3.0, &["only"]), 200).unwrap();
        for ce in [mc.choice_effect_single, mc.choice_effect_multiple] {
            assert!(ce.mean.abs() < 3.0 * ce.standard_error, "{ce:?}");
        }
    }

    #[test]
    fn matching_produces_metawisdom() {
        let mut config = symmetric(6.0, &["a", "b", "c"]);
        config.choice.matching_coefficient = 0.2;
        let mc = monte_carlo_effects(&config, 50).unwrap();
        assert!(mc.choice_effect_single.mean > 0.0);
        assert!(
            mc.choice_effect_single.positive_share > 0.8,
            "{:?}",
            mc.choice_effect_single
        );
    }

    #[test]
    fn ci_shrinks_with_replications() {
        let config = symmetric(3.0, &["a", "b", "c"]);
        let width = |mc: &MonteCarloEffects| mc.information_effect.mean_ci.1 - mc.information_effect.mean_ci.0;
        let small = monte_carlo_effects(&config, 40).unwrap();
        let large = monte_carlo_effects(&config, 160).unwrap();
        assert!(width(&large) < 0.7 * width(&small));
    }

    #[test]
    fn deterministic_and_rejects_tiny_counts() {
        let config = symmetric(3.0, &["a", "b", "c"]);
        assert_eq!(
            monte_carlo_effects(&config, 5).unwrap(),
            monte_carlo_effects(&config, 5).unwrap()
        );
        assert!(monte_carlo_effects(&config, 1).is_err());
    }
}
