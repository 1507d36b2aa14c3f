//! Information and choice effects, metawisdom, Simpson's-paradox detection and
//! counterfactual reallocation of choosers across aids.
//!
//! All effects here operate on realized group squared errors. Expectations
//! over repeated experiments are estimated by [`crate::sim::monte_carlo_effects`].

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Criterion, CrowdSummary};
use crate::stats::bootstrap::{bootstrap_gse_diff, BootstrapConfig};

/// Default number of aids that must worsen under choice before a
/// Simpson's-paradox pattern is flagged.
pub const DEFAULT_MIN_AIDS_WORSE: usize = 2;

/// `GSE(no aids) - GSE(random assignment)`.
pub fn information_effect(gse_control: f64, gse_random: f64) -> f64 {
    gse_control - gse_random
}

/// `GSE(random assignment) - GSE(self-chosen aids)`.
pub fn choice_effect(gse_random: f64, gse_choice: f64) -> f64 {
    gse_random - gse_choice
}

/// Percentile interval with a bootstrap p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
    pub p_value: f64,
}

/// Realized effects for one choice crowd.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectReport {
    pub gse_control: f64,
    pub gse_random: f64,
    pub gse_choice: f64,
    pub information_effect: f64,
    pub choice_effect: f64,
    pub metawise: bool,
    /// aid -> (GSE under assignment, GSE under choice)
    pub per_aid_deltas: BTreeMap<String, (f64, f64)>,
    pub simpson_flag: bool,
    pub information_ci: Option<Interval>,
    pub choice_ci: Option<Interval>,
}

/// Metawisdom: a strictly positive choice effect.
pub fn is_metawise(report: &EffectReport) -> bool {
    report.choice_effect > 0.0
}

/// True when at least `min_aids_worse` aids have a larger GSE under choice
/// than under assignment while the overall choice GSE is smaller.
pub fn detect_simpson(
    per_aid: &BTreeMap<String, (f64, f64)>,
    overall: (f64, f64),
    min_aids_worse: usize,
) -> Result<bool> {
    if per_aid.is_empty() {
        return Err(Error::EmptyInput("per-aid GSE map"));
    }
    if min_aids_worse == 0 {
        return Err(Error::InvalidParameter("min_aids_worse must be at least 1".into()));
    }
    let worse = per_aid.values().filter(|(assigned, choice)| choice > assigned).count();
    let (overall_assigned, overall_choice) = overall;
    Ok(worse >= min_aids_worse && overall_choice < overall_assigned)
}

/// Moves choosers between aids while holding each aid's group mean fixed.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ReallocationPlan {
    pub aids: Vec<String>,
    pub source_counts: Vec<u64>,
    pub destination_counts: Vec<u64>,
    pub group_means: Vec<f64>,
}

impl ReallocationPlan {
    pub fn validate(&self) -> Result<()> {
        let k = self.aids.len();
        if k == 0 {
            return Err(Error::EmptyInput("reallocation plan"));
        }
        for len in [
            self.source_counts.len(),
            self.destination_counts.len(),
            self.group_means.len(),
        ] {
            if len != k {
                return Err(Error::LengthMismatch {
                    expected: k,
                    found: len,
                });
            }
        }
        if self.group_means.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidParameter("group means must be finite".into()));
        }
        let source_total: u64 = self.source_counts.iter().sum();
        let destination_total: u64 = self.destination_counts.iter().sum();
        if source_total != destination_total {
            return Err(Error::CountNotConserved {
                source_total,
                destination_total,
            });
        }
        if destination_total == 0 {
            return Err(Error::InvalidParameter("plan moves zero participants".into()));
        }
        Ok(())
    }

    /// A plan that keeps every chooser where they are.
    pub fn identity(aids: Vec<String>, counts: Vec<u64>, group_means: Vec<f64>) -> Self {
        Self {
            aids,
            destination_counts: counts.clone(),
            source_counts: counts,
            group_means,
        }
    }
}

/// How the recombined crowd estimate is rounded before squaring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RoundingMode {
    #[default]
    FullPrecision,
    /// Round half away from zero to `decimals` places, as printed.
    PaperRounding { decimals: u32 },
}

/// Rounds half away from zero to a number of decimal places.
pub fn round_to(value: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    (value * scale).round() / scale
}

/// Recombined crowd estimate and GSE under the destination counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Counterfactual {
    pub crowd_estimate: f64,
    pub gse: f64,
}

/// Count-weighted group mean under the plan's destination counts, then its
/// squared error against the criterion.
pub fn counterfactual_reallocation(
    plan: &ReallocationPlan,
    criterion: &Criterion,
    rounding: RoundingMode,
) -> Result<Counterfactual> {
    plan.validate()?;
    let total: u64 = plan.destination_counts.iter().sum();
    let weighted = crate::numeric::sum(
        plan.destination_counts
            .iter()
            .zip(&plan.group_means)
            .map(|(&n, &m)| n as f64 * m),
    );
    let mut estimate = weighted / total as f64;
    if let RoundingMode::PaperRounding { decimals } = rounding {
        estimate = round_to(estimate, decimals);
    }
    Ok(Counterfactual {
        crowd_estimate: estimate,
        gse: crate::metrics::group_squared_error(estimate, criterion),
    })
}

/// One arm's summary, optionally with raw estimates for bootstrap intervals.
#[derive(Debug, Clone, Copy)]
pub struct ArmInput<'a> {
    pub summary: CrowdSummary,
    pub raw: Option<&'a [f64]>,
}

impl<'a> ArmInput<'a> {
    pub fn summary_only(summary: CrowdSummary) -> Self {
        Self { summary, raw: None }
    }

    pub fn with_raw(summary: CrowdSummary, raw: &'a [f64]) -> Self {
        Self {
            summary,
            raw: Some(raw),
        }
    }
}

/// Everything needed to assemble an [`EffectReport`] for one choice crowd.
#[derive(Debug, Clone)]
pub struct EffectInputs<'a> {
    pub control: ArmInput<'a>,
    pub random: ArmInput<'a>,
    pub choice: ArmInput<'a>,
    /// aid -> (assigned-arm summary, choice-arm summary)
    pub per_aid: BTreeMap<String, (CrowdSummary, CrowdSummary)>,
    pub min_aids_worse: usize,
}

/// Assembles realized effects; bootstrap intervals are attached when raw
/// samples for all three arms are present and a config is given.
pub fn effect_report(inputs: &EffectInputs<'_>, bootstrap: Option<&BootstrapConfig>) -> Result<EffectReport> {
    let y = inputs.control.summary.criterion;
    let summaries = [&inputs.random.summary, &inputs.choice.summary]
        .into_iter()
        .chain(inputs.per_aid.values().flat_map(|(a, c)| [a, c]));
    for s in summaries {
        if s.criterion != y {
            return Err(Error::CriterionMismatch(y, s.criterion));
        }
    }

    let gse_control = inputs.control.summary.gse;
    let gse_random = inputs.random.summary.gse;
    let gse_choice = inputs.choice.summary.gse;
    let per_aid_deltas: BTreeMap<String, (f64, f64)> = inputs
        .per_aid
        .iter()
        .map(|(aid, (a, c))| (aid.clone(), (a.gse, c.gse)))
        .collect();
    let simpson_flag = if per_aid_deltas.is_empty() {
        false
    } else {
        detect_simpson(&per_aid_deltas, (gse_random, gse_choice), inputs.min_aids_worse)?
    };

    let (information_ci, choice_ci) = match (bootstrap, inputs.control.raw, inputs.random.raw, inputs.choice.raw) {
        (Some(cfg), Some(control), Some(random), Some(choice)) => {
            let criterion = Criterion::fixed(y);
            let ie = bootstrap_gse_diff(control, random, &criterion, cfg)?;
            // separate substream family for the second comparison
            let ce_cfg = BootstrapConfig {
                seed: cfg.seed.wrapping_add(0x9E37_79B9_7F4A_7C15),
                ..*cfg
            };
            let ce = bootstrap_gse_diff(random, choice, &criterion, &ce_cfg)?;
            (
                Some(Interval {
                    low: ie.ci_low,
                    high: ie.ci_high,
                    p_value: ie.p_value,
                }),
                Some(Interval {
                    low: ce.ci_low,
                    high: ce.ci_high,
                    p_value: ce.p_value,
                }),
            )
        }
        _ => (None, None),
    };

    let choice_effect = choice_effect(gse_random, gse_choice);
    Ok(EffectReport {
        gse_control,
        gse_random,
        gse_choice,
        information_effect: information_effect(gse_control, gse_random),
        choice_effect,
        metawise: choice_effect > 0.0,
        per_aid_deltas,
        simpson_flag,
        information_ci,
        choice_ci,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn map(entries: &[(&str, f64, f64)]) -> BTreeMap<String, (f64, f64)> {
        entries.iter().map(|(k, a, c)| (k.to_string(), (*a, *c))).collect()
    }

    #[test]
    fn information_effect_examples() {
        assert_eq!(information_effect(30685.0, 3422.0), 27263.0);
        assert!((information_effect(2.75, 3.47) + 0.72).abs() < 1e-12);
        assert_eq!(information_effect(4.2, 4.2), 0.0);
    }

    #[test]
    fn choice_effect_examples() {
        assert!((choice_effect(3.47, 1.38) - 2.09).abs() < 1e-12);
        assert_eq!(choice_effect(3422.0, 1508.0), 1914.0);
        assert_eq!(choice_effect(7.0, 7.0), 0.0);
    }

    #[test]
    fn simpson_examples() {
        let bean = map(&[
            ("scale", 32584.0, 31353.0),
            ("equation", 463.0, 8151.0),
            ("comparison", 283.0, 600.0),
        ]);
        assert!(detect_simpson(&bean, (3422.0, 1508.0), 2).unwrap());
        let cpi = map(&[
            ("fed_statement", 0.04, 0.09),
            ("predictive_model", 1.76, 0.55),
            ("components", 19.83, 9.49),
        ]);
        assert!(!detect_simpson(&cpi, (3.47, 1.38), 2).unwrap());
        assert!(detect_simpson(&cpi, (3.47, 1.38), 1).unwrap());
        let all_better = map(&[("a", 2.0, 1.0), ("b", 3.0, 1.0)]);
        assert!(!detect_simpson(&all_better, (2.5, 1.0), 1).unwrap());
        assert!(detect_simpson(&BTreeMap::new(), (1.0, 0.0), 1).is_err());
        assert!(detect_simpson(&all_better, (1.0, 0.0), 0).is_err());
    }

    fn bean_plan(destination: Vec<u64>) -> ReallocationPlan {
        ReallocationPlan {
            aids: vec!["scale".into(), "equation".into(), "comparison".into()],
            source_counts: vec![44, 222, 134],
            destination_counts: destination,
            group_means: vec![311.0, 578.0, 512.0],
        }
    }

    #[test]
    fn counterfactual_even_split() {
        let y = Criterion::fixed(488.0);
        let cf = counterfactual_reallocation(
            &bean_plan(vec![0, 244, 156]),
            &y,
            RoundingMode::PaperRounding { decimals: 0 },
        )
        .unwrap();
        assert_eq!((cf.crowd_estimate, cf.gse), (552.0, 4096.0));
    }

    #[test]
    fn counterfactual_cpi_reallocation() {
        let plan = ReallocationPlan::identity(
            vec!["fed_statement".into(), "predictive_model".into(), "components".into()],
            vec![51, 163, 76],
            vec![6.61, 8.13, 11.25],
        );
        let cf = counterfactual_reallocation(&plan, &Criterion::fixed(6.8), RoundingMode::FullPrecision).unwrap();
        assert!((cf.crowd_estimate - 8.68).abs() < 0.005);
    }

    #[test]
    fn counterfactual_rejects_count_changes() {
        let y = Criterion::fixed(488.0);
        let err = counterfactual_reallocation(&bean_plan(vec![0, 244, 150]), &y, RoundingMode::FullPrecision);
        assert!(matches!(err, Err(Error::CountNotConserved { .. })));
    }

    #[test]
    fn report_with_identical_arms_is_neutral() {
        let s = CrowdSummary::from_table(100, 10.0, 4.0, 20.0, 8.0);
        let inputs = EffectInputs {
            control: ArmInput::summary_only(s),
            random: ArmInput::summary_only(s),
            choice: ArmInput::summary_only(s),
            per_aid: BTreeMap::new(),
            min_aids_worse: DEFAULT_MIN_AIDS_WORSE,
        };
        let r = effect_report(&inputs, None).unwrap();
        assert_eq!(r.information_effect, 0.0);
        assert_eq!(r.choice_effect, 0.0);
        assert!(!r.metawise);
        assert!(!is_metawise(&r));
        assert!(r.choice_ci.is_none());
    }

    #[test]
    fn report_rejects_mixed_criteria() {
        let a = CrowdSummary::from_table(10, 1.0, 0.0, 1.0, 1.0);
        let b = CrowdSummary::from_table(10, 1.0, 0.0, 1.0, 2.0);
        let inputs = EffectInputs {
            control: ArmInput::summary_only(a),
            random: ArmInput::summary_only(b),
            choice: ArmInput::summary_only(a),
            per_aid: BTreeMap::new(),
            min_aids_worse: 2,
        };
        assert!(matches!(
            effect_report(&inputs, None),
            Err(Error::CriterionMismatch(..))
        ));
    }

    proptest! {
        #[test]
        fn effects_telescope(c in 0.0f64..1e6, r in 0.0f64..1e6, ch in 0.0f64..1e6) {
            let total = information_effect(c, r) + choice_effect(r, ch);
            prop_assert!((total - (c - ch)).abs() <= 1e-12 * (1.0 + c.abs() + r.abs() + ch.abs()));
        }

        #[test]
        fn simpson_monotone_in_threshold(
            deltas in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 1..6),
            overall in (0.0f64..100.0, 0.0f64..100.0),
            k in 1usize..6,
        ) {
            let m: BTreeMap<String, (f64, f64)> =
                deltas.iter().enumerate().map(|(i, d)| (format!("aid{i}"), *d)).collect();
            if detect_simpson(&m, overall, k).unwrap() {
                for j in 1..=k {
                    prop_assert!(detect_simpson(&m, overall, j).unwrap());
                }
            }
        }

        #[test]
        fn rounding_modes_agree_within_bound(
            counts in prop::collection::vec(1u64..300, 2..5),
            means in prop::collection::vec(0.0f64..1000.0, 5),
            y in 0.0f64..1000.0,
            decimals in 0u32..3,
        ) {
            let k = counts.len();
            let plan = ReallocationPlan::identity(
                (0..k).map(|i| format!("a{i}")).collect(),
                counts,
                means[..k].to_vec(),
            );
            let crit = Criterion::fixed(y);
            let full = counterfactual_reallocation(&plan, &crit, RoundingMode::FullPrecision).unwrap();
            let paper = counterfactual_reallocation(&plan, &crit, RoundingMode::PaperRounding { decimals }).unwrap();
            let u = 10f64.powi(-(decimals as i32));
            let bound = 2.0 * (full.crowd_estimate - y).abs() * u + u * u;
            prop_assert!((full.gse - paper.gse).abs() <= bound + 1e-9);
        }
    }
}
