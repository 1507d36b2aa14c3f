//! Table, tests and effects for a participant-level dataset.

use std::collections::BTreeMap;

use serde::Serialize;

use super::bundle::ALL_AIDS;
use crate::effects::{effect_report, ArmInput, EffectInputs, EffectReport, DEFAULT_MIN_AIDS_WORSE};
use crate::error::{Error, Result};
use crate::metrics::{diversity_identity_residual, summarize_values};
use crate::model::{Criterion, CrowdSummary, EstimateSample, TreatmentCondition, NO_AID};
use crate::stats::{welch_t, Alternative, BootstrapConfig, TestResult};

/// One table row computed from raw estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupRow {
    pub condition: TreatmentCondition,
    /// Final aid, [`ALL_AIDS`] or [`NO_AID`].
    pub aid: String,
    pub summary: CrowdSummary,
    /// `GSE - (MSE - diversity)` for the group.
    pub identity_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupComparison {
    pub condition_a: TreatmentCondition,
    pub aid_a: String,
    pub condition_b: TreatmentCondition,
    pub aid_b: String,
    pub two_sided: TestResult,
    /// Alternative: mean(a) < mean(b).
    pub less: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetAnalysis {
    pub criterion: f64,
    pub rows: Vec<GroupRow>,
    pub tests: Vec<GroupComparison>,
    /// Keyed by choice arm.
    pub effects: BTreeMap<TreatmentCondition, EffectReport>,
    /// Analyses that were skipped and why.
    pub notices: Vec<String>,
}

impl DatasetAnalysis {
    pub fn row(&self, condition: TreatmentCondition, aid: &str) -> Option<&GroupRow> {
        self.rows.iter().find(|r| r.condition == condition && r.aid == aid)
    }
}

type Groups<'a> = BTreeMap<TreatmentCondition, BTreeMap<&'a str, Vec<f64>>>;

fn group(samples: &[EstimateSample]) -> Groups<'_> {
    let mut groups: Groups<'_> = BTreeMap::new();
    for s in samples {
        let aid = s.final_aid.as_deref().unwrap_or(NO_AID);
        groups
            .entry(s.condition)
            .or_default()
            .entry(aid)
            .or_default()
            .push(s.estimate);
    }
    groups
}

fn arm_values(samples: &[EstimateSample], condition: TreatmentCondition) -> Vec<f64> {
    samples
        .iter()
        .filter(|s| s.condition == condition)
        .map(|s| s.estimate)
        .collect()
}

fn row(condition: TreatmentCondition, aid: &str, values: &[f64], criterion: &Criterion) -> Result<GroupRow> {
    Ok(GroupRow {
        condition,
        aid: aid.to_string(),
        summary: summarize_values(values, criterion)?,
        identity_residual: diversity_identity_residual(values, criterion)?,
    })
}

fn compare(
    a: (TreatmentCondition, &str, &[f64]),
    b: (TreatmentCondition, &str, &[f64]),
    notices: &mut Vec<String>,
) -> Option<GroupComparison> {
    let run = || -> Result<GroupComparison> {
        Ok(GroupComparison {
            condition_a: a.0,
            aid_a: a.1.to_string(),
            condition_b: b.0,
            aid_b: b.1.to_string(),
            two_sided: welch_t(a.2, b.2, Alternative::TwoSided)?,
            less: welch_t(a.2, b.2, Alternative::Less)?,
        })
    };
    match run() {
        Ok(c) => Some(c),
        Err(e) => {
            notices.push(format!("test {}/{} vs {}/{} skipped: {e}", a.0, a.1, b.0, b.1));
            None
        }
    }
}

/// Builds per-aid and pooled rows for every arm, pairwise Welch tests among
/// aids within each treatment arm and of each arm against assignment, and
/// effect reports for each choice arm present. Missing arms drop the
/// dependent analyses with a notice.
pub fn analyze_dataset(
    samples: &[EstimateSample],
    criterion: &Criterion,
    bootstrap: Option<&BootstrapConfig>,
) -> Result<DatasetAnalysis> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("samples"));
    }
    for s in samples {
        s.validate()?;
    }
    let mut notices = Vec::new();
    let tasks: std::collections::BTreeSet<&str> = samples.iter().map(|s| s.task_id.as_str()).collect();
    if tasks.len() > 1 {
        notices.push(format!(
            "dataset mixes {} task ids; all estimates are pooled",
            tasks.len()
        ));
    }

    let groups = group(samples);
    let mut rows = Vec::new();
    let mut tests = Vec::new();
    for (&condition, by_aid) in &groups {
        for (aid, values) in by_aid {
            rows.push(row(condition, aid, values, criterion)?);
        }
        if condition != TreatmentCondition::Control {
            rows.push(row(condition, ALL_AIDS, &arm_values(samples, condition), criterion)?);
            let aids: Vec<(&&str, &Vec<f64>)> = by_aid.iter().collect();
            for (i, (a, va)) in aids.iter().enumerate() {
                for (b, vb) in &aids[i + 1..] {
                    tests.extend(compare((condition, a, va), (condition, b, vb), &mut notices));
                }
            }
        }
    }

    let assigned = arm_values(samples, TreatmentCondition::Assigned);
    let control = arm_values(samples, TreatmentCondition::Control);
    for condition in [
        TreatmentCondition::SingleChoice,
        TreatmentCondition::MultipleChoice,
        TreatmentCondition::Control,
    ] {
        let values = arm_values(samples, condition);
        if !values.is_empty() && !assigned.is_empty() {
            let label = if condition == TreatmentCondition::Control {
                NO_AID
            } else {
                ALL_AIDS
            };
            tests.extend(compare(
                (condition, label, &values),
                (TreatmentCondition::Assigned, ALL_AIDS, &assigned),
                &mut notices,
            ));
        }
    }

    let mut effects = BTreeMap::new();
    for choice_arm in [TreatmentCondition::SingleChoice, TreatmentCondition::MultipleChoice] {
        let choice = arm_values(samples, choice_arm);
        if choice.is_empty() {
            continue;
        }
        if control.is_empty() || assigned.is_empty() {
            notices.push(format!(
                "effects for {choice_arm} omitted: control and assigned arms are both required"
            ));
            continue;
        }
        let mut per_aid = BTreeMap::new();
        if let (Some(a), Some(c)) = (groups.get(&TreatmentCondition::Assigned), groups.get(&choice_arm)) {
            for (aid, va) in a {
                if let Some(vc) = c.get(aid) {
                    per_aid.insert(
                        aid.to_string(),
                        (summarize_values(va, criterion)?, summarize_values(vc, criterion)?),
                    );
                }
            }
        }
        let inputs = EffectInputs {
            control: ArmInput::with_raw(summarize_values(&control, criterion)?, &control),
            random: ArmInput::with_raw(summarize_values(&assigned, criterion)?, &assigned),
            choice: ArmInput::with_raw(summarize_values(&choice, criterion)?, &choice),
            per_aid,
            min_aids_worse: DEFAULT_MIN_AIDS_WORSE,
        };
        effects.insert(choice_arm, effect_report(&inputs, bootstrap)?);
    }

    Ok(DatasetAnalysis {
        criterion: criterion.true_value,
        rows,
        tests,
        effects,
        notices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(id: usize, condition: TreatmentCondition, aids: &[&str], x: f64) -> EstimateSample {
        EstimateSample::new(
            format!("p{id}"),
            condition,
            aids.iter().map(|a| a.to_string()).collect(),
            x,
            "t",
        )
        .unwrap()
    }

    fn identical_arms() -> Vec<EstimateSample> {
        let values = [3.0, 5.0, 4.0, 6.0];
        let mut out = Vec::new();
        for (k, condition) in TreatmentCondition::ALL.into_iter().enumerate() {
            for (i, &x) in values.iter().enumerate() {
                let aids: &[&str] = match condition {
                    TreatmentCondition::Control => &[],
                    _ if i % 2 == 0 => &["a"],
                    _ => &["b"],
                };
                out.push(sample(k * 10 + i, condition, aids, x));
            }
        }
        out
    }

    #[test]
    fn identical_arms_have_no_effects() {
        let a = analyze_dataset(&identical_arms(), &Criterion::fixed(4.0), None).unwrap();
        for r in a.effects.values() {
            assert_eq!(r.information_effect, 0.0);
            assert_eq!(r.choice_effect, 0.0);
        }
        assert_eq!(a.effects.len(), 2);
        for row in &a.rows {
            assert!(row.identity_residual.abs() < 1e-9);
            assert!(row.summary.gse <= row.summary.mse);
        }
        // 3 arms x 1 aid pair + 3 arms vs assigned
        assert_eq!(a.tests.len(), 6);
        assert!(a.row(TreatmentCondition::Control, NO_AID).is_some());
        assert!(a.row(TreatmentCondition::Assigned, ALL_AIDS).is_some());
    }

    #[test]
    fn missing_control_is_noticed() {
        let s: Vec<EstimateSample> = identical_arms()
            .into_iter()
            .filter(|s| s.condition != TreatmentCondition::Control)
            .collect();
        let a = analyze_dataset(&s, &Criterion::fixed(4.0), None).unwrap();
        assert!(a.effects.is_empty());
        assert_eq!(a.notices.len(), 2);
        assert!(!a.rows.is_empty());
    }
}
