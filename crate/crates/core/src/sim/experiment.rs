//! One simulated four-arm experiment.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::agents::{
    choose_aids, draw_decision_maker, generate_counterbalanced_orderings, realize_estimate, RealizeOptions,
};
use super::config::ExperimentConfig;
use crate::effects::{effect_report, ArmInput, EffectInputs, EffectReport, DEFAULT_MIN_AIDS_WORSE};
use crate::error::Result;
use crate::metrics::summarize_values;
use crate::model::{Criterion, EstimateSample, TreatmentCondition};
use crate::rng::substream;
use crate::stats::BootstrapConfig;

/// Participant `i` of arm `k` draws from stream `(k << 40) | i`.
const ARM_STREAM_SHIFT: u32 = 40;

/// Samples of one simulated experiment, in arm order then participant order.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedExperiment {
    pub samples: Vec<EstimateSample>,
    /// Number of estimates clipped at zero.
    pub floored: usize,
}

impl SimulatedExperiment {
    pub fn arm(&self, condition: TreatmentCondition) -> impl Iterator<Item = &EstimateSample> {
        self.samples.iter().filter(move |s| s.condition == condition)
    }

    pub fn arm_values(&self, condition: TreatmentCondition) -> Vec<f64> {
        self.arm(condition).map(|s| s.estimate).collect()
    }
}

fn arm_index(condition: TreatmentCondition) -> u64 {
    match condition {
        TreatmentCondition::Control => 0,
        TreatmentCondition::Assigned => 1,
        TreatmentCondition::SingleChoice => 2,
        TreatmentCondition::MultipleChoice => 3,
    }
}

/// Runs all four arms with the config's seed (0 when unset).
pub fn run_experiment(config: &ExperimentConfig) -> Result<SimulatedExperiment> {
    run_experiment_with_seed(config, config.seed.unwrap_or(0))
}

/// Runs all four arms. Every participant owns a random stream, so the output
/// does not depend on thread count.
pub fn run_experiment_with_seed(config: &ExperimentConfig, seed: u64) -> Result<SimulatedExperiment> {
    config.validate()?;
    let offset = config.baseline_offset();
    let options = RealizeOptions {
        last_aid_rule: config.choice.last_aid_rule,
        carryover: config.carryover,
    };

    let mut samples = Vec::with_capacity(config.arm_sizes.total());
    for condition in TreatmentCondition::ALL {
        let size = config.arm_sizes.get(condition);
        let orderings = generate_counterbalanced_orderings(&config.catalog, size)?;
        let arm: Vec<EstimateSample> = (0..size)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream(seed, (arm_index(condition) << ARM_STREAM_SHIFT) | i as u64);
                let dm = draw_decision_maker(&config.population, &mut rng).shifted(offset);
                let sequence = if condition == TreatmentCondition::Control {
                    Vec::new()
                } else {
                    choose_aids(
                        &dm,
                        condition,
                        &config.catalog,
                        &config.choice,
                        &config.aid_effects,
                        &orderings[i],
                        &mut rng,
                    )?
                };
                let estimate = realize_estimate(
                    &dm,
                    &sequence,
                    &config.criterion,
                    &config.aid_effects,
                    options,
                    &mut rng,
                )?;
                EstimateSample::new(
                    format!("{}-{:05}", condition.as_str(), i),
                    condition,
                    sequence,
                    estimate,
                    config.task_id.clone(),
                )
            })
            .collect::<Result<_>>()?;
        samples.extend(arm);
    }

    let mut floored = 0;
    if config.floor_at_zero {
        for s in samples.iter_mut().filter(|s| s.estimate < 0.0) {
            s.estimate = 0.0;
            floored += 1;
        }
        if floored > 0 {
            log::info!("clipped {floored} negative estimates to zero");
        }
    }
    Ok(SimulatedExperiment { samples, floored })
}

/// Effects of one experiment for a choice arm. Aids chosen by nobody in
/// either arm are left out of the per-aid comparison.
pub fn experiment_effects(
    experiment: &SimulatedExperiment,
    criterion: &Criterion,
    choice_arm: TreatmentCondition,
    bootstrap: Option<&BootstrapConfig>,
) -> Result<EffectReport> {
    let control = experiment.arm_values(TreatmentCondition::Control);
    let random = experiment.arm_values(TreatmentCondition::Assigned);
    let choice = experiment.arm_values(choice_arm);

    let mut by_aid: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for s in experiment.arm(TreatmentCondition::Assigned) {
        if let Some(a) = &s.final_aid {
            by_aid.entry(a).or_default().0.push(s.estimate);
        }
    }
    for s in experiment.arm(choice_arm) {
        if let Some(a) = &s.final_aid {
            by_aid.entry(a).or_default().1.push(s.estimate);
        }
    }
    let mut per_aid = BTreeMap::new();
    for (aid, (a, c)) in by_aid {
        if !a.is_empty() && !c.is_empty() {
            per_aid.insert(
                aid.to_string(),
                (summarize_values(&a, criterion)?, summarize_values(&c, criterion)?),
            );
        }
    }

    let control_summary = summarize_values(&control, criterion)?;
    let random_summary = summarize_values(&random, criterion)?;
    let choice_summary = summarize_values(&choice, criterion)?;
    let inputs = EffectInputs {
        control: ArmInput::with_raw(control_summary, &control),
        random: ArmInput::with_raw(random_summary, &random),
        choice: ArmInput::with_raw(choice_summary, &choice),
        per_aid,
        min_aids_worse: DEFAULT_MIN_AIDS_WORSE,
    };
    effect_report(&inputs, bootstrap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AidCatalog;
    use crate::sim::config::{AidEffect, AidEffectSpec, ArmSizes, ChoiceModelSpec, PopulationSpec};
    use crate::stats::ks_two_sample;

    fn null_config(arm_sizes: ArmSizes) -> ExperimentConfig {
        let catalog = AidCatalog::new(["a", "b", "c"]).unwrap();
        ExperimentConfig {
            criterion: Criterion::fixed(10.0),
            population: PopulationSpec {
                n: 1,
                baseline_mean: None,
                baseline_bias_sd: 1.0,
                noise_sd_range: (1.0, 2.0),
            },
            aid_effects: AidEffectSpec {
                effects: catalog.aids().iter().map(|a| (a.clone(), AidEffect::NEUTRAL)).collect(),
            },
            choice: ChoiceModelSpec::uniform(&catalog),
            catalog,
            arm_sizes,
            seed: Some(11),
            floor_at_zero: false,
            carryover: 0.0,
            task_id: "null".into(),
        }
    }

    #[test]
    fn arm_sizes_honored() {
        let config = null_config(ArmSizes {
            control: 100,
            assigned: 400,
            single_choice: 400,
            multiple_choice: 398,
        });
        let exp = run_experiment(&config).unwrap();
        assert_eq!(exp.samples.len(), 1298);
        for c in TreatmentCondition::ALL {
            assert_eq!(exp.arm(c).count(), config.arm_sizes.get(c));
        }
        assert!(exp.arm(TreatmentCondition::Control).all(|s| s.aid_sequence.is_empty()));
        assert_eq!(exp, run_experiment(&config).unwrap());
    }

    #[test]
    fn null_arms_are_exchangeable() {
        let mut config = null_config(ArmSizes {
            control: 80,
            assigned: 80,
            single_choice: 80,
            multiple_choice: 80,
        });
        let mut rejections = 0;
        let mut tests = 0;
        for seed in 0..100 {
            config.seed = Some(seed);
            let exp = run_experiment(&config).unwrap();
            let control = exp.arm_values(TreatmentCondition::Control);
            for c in &TreatmentCondition::ALL[1..] {
                let r = ks_two_sample(&control, &exp.arm_values(*c)).unwrap();
                tests += 1;
                if r.p_value < 0.05 {
                    rejections += 1;
                }
            }
        }
        assert!(rejections as f64 <= 0.10 * tests as f64, "{rejections}/{tests}");
    }

    #[test]
    fn floor_is_applied_and_counted() {
        let mut config = null_config(ArmSizes {
            control: 200,
            assigned: 10,
            single_choice: 10,
            multiple_choice: 10,
        });
        config.criterion = Criterion::fixed(0.5);
        config.floor_at_zero = true;
        let exp = run_experiment(&config).unwrap();
        assert!(exp.floored > 0);
        assert!(exp.samples.iter().all(|s| s.estimate >= 0.0));
    }

    #[test]
    fn effects_of_one_run() {
        let config = null_config(ArmSizes {
            control: 50,
            assigned: 60,
            single_choice: 60,
            multiple_choice: 60,
        });
        let exp = run_experiment(&config).unwrap();
        let r = experiment_effects(&exp, &config.criterion, TreatmentCondition::SingleChoice, None).unwrap();
        assert!((r.information_effect - (r.gse_control - r.gse_random)).abs() < 1e-12);
        assert_eq!(r.per_aid_deltas.len(), 3);
    }
}
