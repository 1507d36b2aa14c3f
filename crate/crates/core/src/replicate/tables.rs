//! Checks and derived quantities computed from printed summary rows.

use std::collections::BTreeMap;

use serde::Serialize;

use super::bundle::{experiment_info, find_row, Experiment, SummaryRow, ALL_AIDS};
use crate::effects::{
    counterfactual_reallocation, effect_report, ArmInput, Counterfactual, EffectInputs, EffectReport, ReallocationPlan,
    RoundingMode, DEFAULT_MIN_AIDS_WORSE,
};
use crate::error::{Error, Result};
use crate::metrics::group_squared_error;
use crate::model::{CrowdSummary, TreatmentCondition, NO_AID};
use crate::stats::{welch_t_from_moments, Alternative, Moments, TestResult};

/// Largest `|(mean - Y)^2 - printed GSE|` explained by rounding of the
/// printed mean.
pub fn consistency_threshold(experiment: Experiment) -> f64 {
    match experiment {
        Experiment::Cpi => 0.05,
        Experiment::BeanJar => 180.0,
    }
}

/// Largest recombined-minus-printed mean explained by rounding.
pub fn recombination_threshold(experiment: Experiment) -> f64 {
    match experiment {
        Experiment::Cpi => 0.01,
        Experiment::BeanJar => 1.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyCheck {
    pub row: SummaryRow,
    pub computed_gse: f64,
    pub printed_gse: f64,
    pub delta: f64,
    pub pass: bool,
}

/// Recomputes every row's GSE from its printed mean.
pub fn check_table_consistency(rows: &[SummaryRow]) -> Result<Vec<ConsistencyCheck>> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("summary rows"));
    }
    let mut criteria = BTreeMap::new();
    rows.iter()
        .map(|row| {
            let y = match criteria.get(&row.experiment) {
                Some(&y) => y,
                None => {
                    let y = experiment_info(row.experiment)?.criterion();
                    criteria.insert(row.experiment, y);
                    y
                }
            };
            let computed_gse = group_squared_error(row.mean, &y);
            let delta = computed_gse - row.gse;
            Ok(ConsistencyCheck {
                row: row.clone(),
                computed_gse,
                printed_gse: row.gse,
                delta,
                pass: delta.abs() <= consistency_threshold(row.experiment),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recombined {
    pub experiment: Experiment,
    pub condition: TreatmentCondition,
    pub recombined_mean: f64,
    pub printed_mean: f64,
    pub delta: f64,
    pub pass: bool,
}

/// Count-weighted mean of each treatment arm's per-aid rows, compared with
/// its pooled row. Every catalog aid must have a row.
pub fn recombine_all_rows(rows: &[SummaryRow]) -> Result<Vec<Recombined>> {
    let mut out = Vec::new();
    for experiment in Experiment::ALL {
        if !rows.iter().any(|r| r.experiment == experiment) {
            continue;
        }
        let info = experiment_info(experiment)?;
        for condition in [
            TreatmentCondition::Assigned,
            TreatmentCondition::SingleChoice,
            TreatmentCondition::MultipleChoice,
        ] {
            let arm: Vec<&SummaryRow> = rows
                .iter()
                .filter(|r| r.experiment == experiment && r.condition == condition)
                .collect();
            if arm.is_empty() {
                continue;
            }
            let missing: Vec<&str> = info
                .aids
                .iter()
                .filter(|a| !arm.iter().any(|r| &r.aid == *a))
                .map(String::as_str)
                .collect();
            if !missing.is_empty() {
                return Err(Error::MissingAidRows {
                    condition: format!("{experiment}/{condition}"),
                    missing: missing.join(", "),
                });
            }
            let per_aid: Vec<&&SummaryRow> = arm.iter().filter(|r| !r.is_pooled()).collect();
            let total: usize = per_aid.iter().map(|r| r.n).sum();
            let weighted = crate::numeric::sum(per_aid.iter().map(|r| r.n as f64 * r.mean));
            let recombined_mean = weighted / total as f64;
            let printed_mean = find_row(rows, experiment, condition, ALL_AIDS)?.mean;
            let delta = recombined_mean - printed_mean;
            out.push(Recombined {
                experiment,
                condition,
                recombined_mean,
                printed_mean,
                delta,
                pass: delta.abs() <= recombination_threshold(experiment),
            });
        }
    }
    Ok(out)
}

fn summary(row: &SummaryRow, criterion: f64) -> CrowdSummary {
    CrowdSummary::from_table(row.n, row.mean, row.gse, row.mse, criterion)
}

/// Realized effects of one experiment's choice arm from its printed rows.
pub fn table_effects(
    rows: &[SummaryRow],
    experiment: Experiment,
    choice_arm: TreatmentCondition,
) -> Result<EffectReport> {
    let info = experiment_info(experiment)?;
    let y = info.criterion;
    let control = find_row(rows, experiment, TreatmentCondition::Control, NO_AID)?;
    let random = find_row(rows, experiment, TreatmentCondition::Assigned, ALL_AIDS)?;
    let choice = find_row(rows, experiment, choice_arm, ALL_AIDS)?;
    let mut per_aid = BTreeMap::new();
    for aid in &info.aids {
        let a = find_row(rows, experiment, TreatmentCondition::Assigned, aid)?;
        let c = find_row(rows, experiment, choice_arm, aid)?;
        per_aid.insert(aid.clone(), (summary(a, y), summary(c, y)));
    }
    effect_report(
        &EffectInputs {
            control: ArmInput::summary_only(summary(control, y)),
            random: ArmInput::summary_only(summary(random, y)),
            choice: ArmInput::summary_only(summary(choice, y)),
            per_aid,
            min_aids_worse: DEFAULT_MIN_AIDS_WORSE,
        },
        None,
    )
}

/// A named reallocation of choosers with its recombined estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedCounterfactual {
    pub experiment: Experiment,
    pub label: String,
    pub plan: ReallocationPlan,
    pub result: Counterfactual,
}

fn counts_and_means(
    rows: &[SummaryRow],
    experiment: Experiment,
    aids: &[String],
    count_arm: TreatmentCondition,
    mean_arm: TreatmentCondition,
) -> Result<(Vec<u64>, Vec<f64>)> {
    let mut counts = Vec::new();
    let mut means = Vec::new();
    for aid in aids {
        counts.push(find_row(rows, experiment, count_arm, aid)?.n as u64);
        means.push(find_row(rows, experiment, mean_arm, aid)?.mean);
    }
    Ok((counts, means))
}

/// The discussed what-if reallocations:
///
/// * bean jar: single-choice scale choosers split evenly between the other
///   two aids, then all sent to comparison, holding single-choice aid means;
/// * CPI: single-choice aid counts combined with assigned-arm aid means.
///
/// Unless `full_precision` is set, each estimate is rounded to the decimals
/// its table prints before squaring.
pub fn bundled_counterfactuals(rows: &[SummaryRow], full_precision: bool) -> Result<Vec<NamedCounterfactual>> {
    let mut out = Vec::new();
    let bean = experiment_info(Experiment::BeanJar)?;
    let rounding = |decimals| {
        if full_precision {
            RoundingMode::FullPrecision
        } else {
            RoundingMode::PaperRounding { decimals }
        }
    };

    let (counts, means) = counts_and_means(
        rows,
        Experiment::BeanJar,
        &bean.aids,
        TreatmentCondition::SingleChoice,
        TreatmentCondition::SingleChoice,
    )?;
    let scale = bean
        .aids
        .iter()
        .position(|a| a == "scale")
        .ok_or_else(|| Error::UnknownAid("scale".into()))?;
    let comparison = bean
        .aids
        .iter()
        .position(|a| a == "comparison")
        .ok_or_else(|| Error::UnknownAid("comparison".into()))?;
    let equation = bean
        .aids
        .iter()
        .position(|a| a == "equation")
        .ok_or_else(|| Error::UnknownAid("equation".into()))?;
    let moved = counts[scale];

    let mut even = counts.clone();
    even[scale] = 0;
    even[equation] += moved / 2;
    even[comparison] += moved - moved / 2;
    let mut all_to_comparison = counts.clone();
    all_to_comparison[scale] = 0;
    all_to_comparison[comparison] += moved;

    for (label, destination) in [
        ("scale choosers split evenly", even),
        ("scale choosers all to comparison", all_to_comparison),
    ] {
        let plan = ReallocationPlan {
            aids: bean.aids.clone(),
            source_counts: counts.clone(),
            destination_counts: destination,
            group_means: means.clone(),
        };
        let result = counterfactual_reallocation(&plan, &bean.criterion(), rounding(bean.mean_decimals))?;
        out.push(NamedCounterfactual {
            experiment: Experiment::BeanJar,
            label: label.to_string(),
            plan,
            result,
        });
    }

    let cpi = experiment_info(Experiment::Cpi)?;
    let (counts, means) = counts_and_means(
        rows,
        Experiment::Cpi,
        &cpi.aids,
        TreatmentCondition::SingleChoice,
        TreatmentCondition::Assigned,
    )?;
    let plan = ReallocationPlan::identity(cpi.aids.clone(), counts, means);
    let result = counterfactual_reallocation(&plan, &cpi.criterion(), rounding(cpi.mean_decimals))?;
    out.push(NamedCounterfactual {
        experiment: Experiment::Cpi,
        label: "single-choice counts with assigned means".to_string(),
        plan,
        result,
    });
    Ok(out)
}

/// Welch comparison between two printed rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowComparison {
    pub experiment: Experiment,
    pub condition_a: TreatmentCondition,
    pub aid_a: String,
    pub condition_b: TreatmentCondition,
    pub aid_b: String,
    pub two_sided: TestResult,
    /// Alternative: mean(a) < mean(b).
    pub less: TestResult,
}

fn moments(row: &SummaryRow) -> Moments {
    Moments::from_table_row(row.n, row.mean, row.gse, row.mse, true)
}

fn compare(a: &SummaryRow, b: &SummaryRow) -> Result<RowComparison> {
    Ok(RowComparison {
        experiment: a.experiment,
        condition_a: a.condition,
        aid_a: a.aid.clone(),
        condition_b: b.condition,
        aid_b: b.aid.clone(),
        two_sided: welch_t_from_moments(moments(a), moments(b), Alternative::TwoSided)?,
        less: welch_t_from_moments(moments(a), moments(b), Alternative::Less)?,
    })
}

/// Summary-based Welch tests: every aid pair within each treatment arm, and
/// each choice arm and the control arm against the assigned arm.
pub fn summary_welch_tests(rows: &[SummaryRow], experiment: Experiment) -> Result<Vec<RowComparison>> {
    let info = experiment_info(experiment)?;
    let mut out = Vec::new();
    for condition in [
        TreatmentCondition::Assigned,
        TreatmentCondition::SingleChoice,
        TreatmentCondition::MultipleChoice,
    ] {
        for (i, a) in info.aids.iter().enumerate() {
            for b in &info.aids[i + 1..] {
                out.push(compare(
                    find_row(rows, experiment, condition, a)?,
                    find_row(rows, experiment, condition, b)?,
                )?);
            }
        }
    }
    let assigned = find_row(rows, experiment, TreatmentCondition::Assigned, ALL_AIDS)?;
    for condition in [TreatmentCondition::SingleChoice, TreatmentCondition::MultipleChoice] {
        out.push(compare(find_row(rows, experiment, condition, ALL_AIDS)?, assigned)?);
    }
    out.push(compare(
        find_row(rows, experiment, TreatmentCondition::Control, NO_AID)?,
        assigned,
    )?);
    Ok(out)
}
