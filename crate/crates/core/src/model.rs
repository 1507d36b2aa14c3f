//! Domain types shared by every layer: the criterion, aid catalogs, treatment
//! conditions, individual estimate records and crowd-level weightings.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for simplex membership of weight and selection vectors.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// The quantity being estimated.
///
/// `true_value` is the realized criterion used for scoring; `mean` and
/// `variance` describe the criterion as a random variable. A fixed criterion
/// has zero variance and its mean equals the realized value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub true_value: f64,
    pub mean: f64,
    pub variance: f64,
}

impl Criterion {
    pub fn new(true_value: f64, mean: f64, variance: f64) -> Result<Self> {
        if !true_value.is_finite() || !mean.is_finite() || !variance.is_finite() {
            return Err(Error::InvalidParameter("criterion values must be finite".into()));
        }
        if variance < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "criterion variance must be nonnegative, got {variance}"
            )));
        }
        if variance == 0.0 && mean != true_value {
            return Err(Error::InvalidParameter(
                "a fixed criterion (variance 0) must have mean equal to its true value".into(),
            ));
        }
        Ok(Self {
            true_value,
            mean,
            variance,
        })
    }

    /// A criterion with no uncertainty.
    pub fn fixed(value: f64) -> Self {
        Self {
            true_value: value,
            mean: value,
            variance: 0.0,
        }
    }
}

/// Ordered set of available decision aids.
///
/// The order is the canonical presentation order used for counterbalancing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct AidCatalog {
    aids: Vec<String>,
}

impl AidCatalog {
    pub fn new<I, S>(aids: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let aids: Vec<String> = aids.into_iter().map(Into::into).collect();
        let mut seen = BTreeSet::new();
        for aid in &aids {
            validate_aid_name(aid)?;
            if !seen.insert(aid.as_str()) {
                return Err(Error::InvalidParameter(format!("duplicate aid `{aid}` in catalog")));
            }
        }
        Ok(Self { aids })
    }

    pub fn aids(&self) -> &[String] {
        &self.aids
    }

    pub fn len(&self) -> usize {
        self.aids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aids.is_empty()
    }

    pub fn index_of(&self, aid: &str) -> Option<usize> {
        self.aids.iter().position(|a| a == aid)
    }

    pub fn contains(&self, aid: &str) -> bool {
        self.index_of(aid).is_some()
    }
}

impl TryFrom<Vec<String>> for AidCatalog {
    type Error = Error;

    fn try_from(aids: Vec<String>) -> Result<Self> {
        Self::new(aids)
    }
}

impl From<AidCatalog> for Vec<String> {
    fn from(catalog: AidCatalog) -> Self {
        catalog.aids
    }
}

/// Aid names end up in `;`-joined CSV fields, so they may not contain
/// separators, and `none` is reserved for "no aid".
pub(crate) fn validate_aid_name(aid: &str) -> Result<()> {
    if aid.trim().is_empty() {
        return Err(Error::InvalidParameter("aid names must be nonempty".into()));
    }
    if aid.contains([';', ',', '\n', '\r', '"']) {
        return Err(Error::InvalidParameter(format!(
            "aid name `{aid}` contains a reserved character"
        )));
    }
    if aid == NO_AID {
        return Err(Error::InvalidParameter(
            "`none` is reserved and cannot name an aid".into(),
        ));
    }
    Ok(())
}

/// Token used in files for "no final aid".
pub const NO_AID: &str = "none";

/// A subset of a catalog's aids. The empty set is the control exposure.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AidSet {
    members: BTreeSet<String>,
}

impl AidSet {
    pub fn new<I, S>(catalog: &AidCatalog, members: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = BTreeSet::new();
        for m in members {
            let m = m.into();
            if !catalog.contains(&m) {
                return Err(Error::UnknownAid(m));
            }
            set.insert(m);
        }
        Ok(Self { members: set })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn members(&self) -> impl Iterator<Item = &str> {
        self.members.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, aid: &str) -> bool {
        self.members.contains(aid)
    }
}

/// Crowd treatment a participant was placed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreatmentCondition {
    Control,
    Assigned,
    SingleChoice,
    MultipleChoice,
}

impl TreatmentCondition {
    pub const ALL: [TreatmentCondition; 4] = [
        TreatmentCondition::Control,
        TreatmentCondition::Assigned,
        TreatmentCondition::SingleChoice,
        TreatmentCondition::MultipleChoice,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TreatmentCondition::Control => "control",
            TreatmentCondition::Assigned => "assigned",
            TreatmentCondition::SingleChoice => "single_choice",
            TreatmentCondition::MultipleChoice => "multiple_choice",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TreatmentCondition::Control => "Control",
            TreatmentCondition::Assigned => "Assigned",
            TreatmentCondition::SingleChoice => "Single Choice",
            TreatmentCondition::MultipleChoice => "Multiple Choice",
        }
    }

    /// Checks the number of aids viewed against the condition's rules.
    pub fn check_sequence_len(self, len: usize) -> Result<()> {
        let ok = match self {
            TreatmentCondition::Control => len == 0,
            TreatmentCondition::Assigned | TreatmentCondition::SingleChoice => len == 1,
            TreatmentCondition::MultipleChoice => len >= 1,
        };
        if ok {
            Ok(())
        } else {
            let rule = match self {
                TreatmentCondition::Control => "no aids",
                TreatmentCondition::Assigned | TreatmentCondition::SingleChoice => "exactly one aid",
                TreatmentCondition::MultipleChoice => "at least one aid",
            };
            Err(Error::Invariant(format!(
                "condition {} requires {rule} but {len} were viewed",
                self.as_str()
            )))
        }
    }
}

impl fmt::Display for TreatmentCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TreatmentCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "control" => Ok(TreatmentCondition::Control),
            "assigned" => Ok(TreatmentCondition::Assigned),
            "single_choice" => Ok(TreatmentCondition::SingleChoice),
            "multiple_choice" => Ok(TreatmentCondition::MultipleChoice),
            other => Err(Error::InvalidParameter(format!("unknown condition `{other}`"))),
        }
    }
}

/// One participant's estimate for one task.
///
/// For multiple-choice participants the final aid (last one viewed) labels
/// the estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSample {
    pub participant_id: String,
    pub condition: TreatmentCondition,
    pub aid_sequence: Vec<String>,
    pub final_aid: Option<String>,
    pub estimate: f64,
    pub task_id: String,
}

impl EstimateSample {
    /// Builds a sample, deriving `final_aid` from the sequence.
    pub fn new(
        participant_id: impl Into<String>,
        condition: TreatmentCondition,
        aid_sequence: Vec<String>,
        estimate: f64,
        task_id: impl Into<String>,
    ) -> Result<Self> {
        let final_aid = aid_sequence.last().cloned();
        let sample = Self {
            participant_id: participant_id.into(),
            condition,
            aid_sequence,
            final_aid,
            estimate,
            task_id: task_id.into(),
        };
        sample.validate()?;
        Ok(sample)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.estimate.is_finite() {
            return Err(Error::Invariant("estimate must be finite".into()));
        }
        for aid in &self.aid_sequence {
            validate_aid_name(aid).map_err(|e| Error::Invariant(e.to_string()))?;
        }
        if self.final_aid.as_ref() != self.aid_sequence.last() {
            return Err(Error::Invariant(format!(
                "final aid {:?} does not match the last aid viewed {:?}",
                self.final_aid,
                self.aid_sequence.last()
            )));
        }
        self.condition.check_sequence_len(self.aid_sequence.len())
    }
}

fn check_simplex(values: &[f64], what: &str, strict: bool) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidWeights(format!("{what} vector is empty")));
    }
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() || v < 0.0 || (strict && v == 0.0) {
            return Err(Error::InvalidWeights(format!(
                "{what}[{i}] = {v} violates {}",
                if strict { "w > 0" } else { "w >= 0" }
            )));
        }
    }
    let total = crate::numeric::sum(values.iter().copied());
    if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
        return Err(Error::InvalidWeights(format!("{what} sum to {total}, not 1")));
    }
    Ok(())
}

/// Aggregation weights `w_i >= 0` summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct CrowdWeights {
    weights: Vec<f64>,
}

impl CrowdWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        check_simplex(&weights, "weights", false)?;
        Ok(Self { weights })
    }

    /// Like [`CrowdWeights::new`] but also rejects zero weights.
    pub fn new_strict(weights: Vec<f64>) -> Result<Self> {
        check_simplex(&weights, "weights", true)?;
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyInput("weights"));
        }
        Ok(Self {
            weights: vec![1.0 / n as f64; n],
        })
    }

    /// Normalizes nonnegative counts (or any nonnegative masses) to weights.
    pub fn from_counts(counts: &[f64]) -> Result<Self> {
        let total = crate::numeric::sum(counts.iter().copied());
        if counts.iter().any(|c| !c.is_finite() || *c < 0.0) || total <= 0.0 {
            return Err(Error::InvalidWeights(
                "counts must be nonnegative with a positive total".into(),
            ));
        }
        Self::new(counts.iter().map(|c| c / total).collect())
    }

    pub(crate) fn from_projection(weights: Vec<f64>) -> Self {
        Self { weights }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Probabilities of selecting each decision-maker at random.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionDistribution {
    probabilities: Vec<f64>,
}

impl SelectionDistribution {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        check_simplex(&probabilities, "selection probabilities", false)?;
        Ok(Self { probabilities })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyInput("selection distribution"));
        }
        Ok(Self {
            probabilities: vec![1.0 / n as f64; n],
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

/// Per-group statistics as reported in the result tables.
///
/// `variance` is the sample variance (n - 1 denominator) when computed from
/// raw data. `criterion` records the true value the errors were scored
/// against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrowdSummary {
    pub n: usize,
    pub mean: f64,
    pub gse: f64,
    pub mse: f64,
    pub variance: f64,
    pub criterion: f64,
}

impl CrowdSummary {
    /// Summary reconstructed from a printed table row. The variance is
    /// recovered as the population variance `MSE - GSE`.
    pub fn from_table(n: usize, mean: f64, gse: f64, mse: f64, criterion: f64) -> Self {
        Self {
            n,
            mean,
            gse,
            mse,
            variance: (mse - gse).max(0.0),
            criterion,
        }
    }
}
