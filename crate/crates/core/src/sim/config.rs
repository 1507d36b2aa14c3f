//! Generative parameters for simulated aid-choice experiments.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AidCatalog, Criterion, TreatmentCondition};

/// Between-person layer of the population.
///
/// Each decision-maker gets a personal bias `b_i ~ Normal(0, baseline_bias_sd)`
/// and a noise level `sigma_i ~ Uniform(noise_sd_range)`. When
/// `baseline_mean` is set, every bias is shifted by `baseline_mean - Y` so the
/// unaided crowd centers on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSpec {
    pub n: usize,
    #[serde(default)]
    pub baseline_mean: Option<f64>,
    pub baseline_bias_sd: f64,
    pub noise_sd_range: (f64, f64),
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("population size must be at least 1".into()));
        }
        if !(self.baseline_bias_sd >= 0.0) || !self.baseline_bias_sd.is_finite() {
            return Err(Error::InvalidParameter("baseline_bias_sd must be nonnegative".into()));
        }
        let (lo, hi) = self.noise_sd_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise_sd_range must satisfy 0 < low <= high, got ({lo}, {hi})"
            )));
        }
        if let Some(m) = self.baseline_mean {
            if !m.is_finite() {
                return Err(Error::InvalidParameter("baseline_mean must be finite".into()));
            }
        }
        Ok(())
    }
}

/// How viewing an aid changes a decision-maker's estimate distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AidEffect {
    /// Added to the conditional mean.
    pub mean_shift: f64,
    /// Multiplies the decision-maker's noise sd.
    pub sd_multiplier: f64,
    /// Fraction of the decision-maker's bias removed by the aid, in [0, 1].
    pub anchor_weight: f64,
}

impl AidEffect {
    pub const NEUTRAL: AidEffect = AidEffect {
        mean_shift: 0.0,
        sd_multiplier: 1.0,
        anchor_weight: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AidEffectSpec {
    pub effects: BTreeMap<String, AidEffect>,
}

impl AidEffectSpec {
    pub fn get(&self, aid: &str) -> Result<&AidEffect> {
        self.effects.get(aid).ok_or_else(|| Error::UnknownAid(aid.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        for (aid, e) in &self.effects {
            if !(e.sd_multiplier > 0.0 && e.sd_multiplier.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "aid `{aid}`: sd_multiplier must be positive"
                )));
            }
            if !(0.0..=1.0).contains(&e.anchor_weight) {
                return Err(Error::InvalidParameter(format!(
                    "aid `{aid}`: anchor_weight must lie in [0, 1]"
                )));
            }
            if !e.mean_shift.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "aid `{aid}`: mean_shift must be finite"
                )));
            }
        }
        Ok(())
    }
}

/// Default probabilities of viewing one, two, or all aids in the
/// multiple-choice arm: 248, 36 and 114 of 398 participants.
pub const DEFAULT_MULTIPLE_VIEW_PROBABILITIES: [f64; 3] = [248.0 / 398.0, 36.0 / 398.0, 114.0 / 398.0];

/// Aid-choice behavior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChoiceModelSpec {
    /// Choice shares before tilting; sum to one.
    pub base_shares: BTreeMap<String, f64>,
    /// Strength of the tilt toward aids that minimize the decision-maker's
    /// own expected squared error (alpha).
    #[serde(default)]
    pub matching_coefficient: f64,
    /// Probabilities of viewing 1, 2, or 3+ (all) aids.
    #[serde(default = "default_view_probabilities")]
    pub multiple_view_probabilities: [f64; 3],
    /// When true the final aid viewed governs the estimate and a
    /// multiple-choice participant views their first pick last. When false
    /// the estimate pools the effects of every viewed aid.
    #[serde(default = "default_true")]
    pub last_aid_rule: bool,
    /// Log-weight bonus for the aid presented first (0 = no position effect).
    #[serde(default)]
    pub presentation_bias: f64,
}

fn default_view_probabilities() -> [f64; 3] {
    DEFAULT_MULTIPLE_VIEW_PROBABILITIES
}

fn default_true() -> bool {
    true
}

/// Shares and probabilities read from config files may carry decimal
/// rounding; they must sum to one within this tolerance.
pub const CONFIG_SUM_TOLERANCE: f64 = 1e-9;

impl ChoiceModelSpec {
    /// Uniform shares over a catalog with no tilt.
    pub fn uniform(catalog: &AidCatalog) -> Self {
        let share = 1.0 / catalog.len() as f64;
        Self {
            base_shares: catalog.aids().iter().map(|a| (a.clone(), share)).collect(),
            matching_coefficient: 0.0,
            multiple_view_probabilities: DEFAULT_MULTIPLE_VIEW_PROBABILITIES,
            last_aid_rule: true,
            presentation_bias: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_shares.values().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::InvalidParameter("base shares must be nonnegative".into()));
        }
        let total: f64 = self.base_shares.values().sum();
        if (total - 1.0).abs() > CONFIG_SUM_TOLERANCE {
            return Err(Error::InvalidParameter(format!("base shares sum to {total}, not 1")));
        }
        if !(self.matching_coefficient >= 0.0) || !self.matching_coefficient.is_finite() {
            return Err(Error::InvalidParameter(
                "matching_coefficient must be nonnegative".into(),
            ));
        }
        if self.multiple_view_probabilities.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidParameter("view probabilities must be nonnegative".into()));
        }
        let total: f64 = self.multiple_view_probabilities.iter().sum();
        if (total - 1.0).abs() > CONFIG_SUM_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "view probabilities sum to {total}, not 1"
            )));
        }
        if !self.presentation_bias.is_finite() {
            return Err(Error::InvalidParameter("presentation_bias must be finite".into()));
        }
        Ok(())
    }
}

/// Participants per treatment arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmSizes {
    pub control: usize,
    pub assigned: usize,
    pub single_choice: usize,
    pub multiple_choice: usize,
}

impl ArmSizes {
    pub fn get(&self, condition: TreatmentCondition) -> usize {
        match condition {
            TreatmentCondition::Control => self.control,
            TreatmentCondition::Assigned => self.assigned,
            TreatmentCondition::SingleChoice => self.single_choice,
            TreatmentCondition::MultipleChoice => self.multiple_choice,
        }
    }

    pub fn total(&self) -> usize {
        self.control + self.assigned + self.single_choice + self.multiple_choice
    }
}

fn default_task_id() -> String {
    "task".to_string()
}

/// Complete description of one simulated experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub criterion: Criterion,
    pub catalog: AidCatalog,
    pub population: PopulationSpec,
    pub aid_effects: AidEffectSpec,
    pub choice: ChoiceModelSpec,
    pub arm_sizes: ArmSizes,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Clip negative estimates to zero (count-style tasks).
    #[serde(default)]
    pub floor_at_zero: bool,
    /// Weight on the mean shifts of aids viewed before the final one.
    #[serde(default)]
    pub carryover: f64,
    #[serde(default = "default_task_id")]
    pub task_id: String,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.catalog.is_empty() {
            return Err(Error::InvalidParameter("catalog must list at least one aid".into()));
        }
        Criterion::new(self.criterion.true_value, self.criterion.mean, self.criterion.variance)?;
        self.population.validate()?;
        self.aid_effects.validate()?;
        self.choice.validate()?;
        for aid in self.catalog.aids() {
            if !self.aid_effects.effects.contains_key(aid) {
                return Err(Error::InvalidParameter(format!(
                    "aid `{aid}` has no effect specification"
                )));
            }
            if !self.choice.base_shares.contains_key(aid) {
                return Err(Error::InvalidParameter(format!("aid `{aid}` has no base share")));
            }
        }
        for aid in self.aid_effects.effects.keys().chain(self.choice.base_shares.keys()) {
            if !self.catalog.contains(aid) {
                return Err(Error::UnknownAid(aid.clone()));
            }
        }
        for condition in TreatmentCondition::ALL {
            if self.arm_sizes.get(condition) == 0 {
                return Err(Error::InvalidParameter(format!(
                    "arm `{condition}` must have at least one participant"
                )));
            }
        }
        if !self.carryover.is_finite() {
            return Err(Error::InvalidParameter("carryover must be finite".into()));
        }
        if self.task_id.is_empty() {
            return Err(Error::InvalidParameter("task_id must be nonempty".into()));
        }
        if self.catalog.len() >= 2 {
            let distinct = self
                .catalog
                .aids()
                .windows(2)
                .any(|w| self.aid_effects.effects[&w[0]] != self.aid_effects.effects[&w[1]]);
            if !distinct {
                log::warn!("all aids have identical effects; the choice of aid cannot matter");
            }
        }
        Ok(())
    }

    /// Offset added to every personal bias: `baseline_mean - Y`, or zero.
    pub fn baseline_offset(&self) -> f64 {
        self.population
            .baseline_mean
            .map_or(0.0, |m| m - self.criterion.true_value)
    }
}
