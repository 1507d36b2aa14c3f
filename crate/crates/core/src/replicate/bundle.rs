//! Summary tables shipped with the crate.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{AidCatalog, Criterion, TreatmentCondition, NO_AID};

/// Aid label of the pooled row of a treatment arm.
pub const ALL_AIDS: &str = "All";

const CPI_CSV: &str = include_str!("../../data/cpi.csv");
const BEAN_JAR_CSV: &str = include_str!("../../data/bean_jar.csv");
const SIDECAR_JSON: &str = include_str!("../../data/criteria.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Cpi,
    BeanJar,
}

impl Experiment {
    pub const ALL: [Experiment; 2] = [Experiment::Cpi, Experiment::BeanJar];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Cpi => "cpi",
            Experiment::BeanJar => "bean_jar",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Experiment::Cpi => "CPI forecast",
            Experiment::BeanJar => "Bean jar",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cpi" => Ok(Experiment::Cpi),
            "bean_jar" => Ok(Experiment::BeanJar),
            other => Err(Error::UnknownExperiment(other.to_string())),
        }
    }
}

/// One printed table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment: Experiment,
    pub condition: TreatmentCondition,
    /// Aid name, [`ALL_AIDS`] or [`NO_AID`].
    pub aid: String,
    pub n: usize,
    pub mean: f64,
    pub gse: f64,
    pub mse: f64,
}

impl SummaryRow {
    pub fn is_pooled(&self) -> bool {
        self.aid == ALL_AIDS || self.aid == NO_AID
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::CorruptBundle(format!(
                "row {}/{} has n = 0",
                self.condition, self.aid
            )));
        }
        if !(self.gse >= 0.0 && self.mse >= 0.0 && self.mean.is_finite()) {
            return Err(Error::CorruptBundle(format!(
                "row {}/{} has invalid statistics",
                self.condition, self.aid
            )));
        }
        Ok(())
    }
}

/// Per-experiment metadata from the sidecar file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentInfo {
    pub file: String,
    pub sha256: String,
    pub criterion: f64,
    /// Decimal places the means are printed with.
    pub mean_decimals: u32,
    pub aids: Vec<String>,
    pub labels: BTreeMap<String, String>,
    pub provenance: String,
}

impl ExperimentInfo {
    pub fn criterion(&self) -> Criterion {
        Criterion::fixed(self.criterion)
    }

    pub fn catalog(&self) -> Result<AidCatalog> {
        AidCatalog::new(self.aids.iter().cloned())
    }

    pub fn label<'a>(&'a self, aid: &'a str) -> &'a str {
        self.labels.get(aid).map_or(aid, String::as_str)
    }
}

#[derive(Debug, Clone, Deserialize)]
struct Sidecar {
    experiments: BTreeMap<Experiment, ExperimentInfo>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn bundled_csv(experiment: Experiment) -> &'static str {
    match experiment {
        Experiment::Cpi => CPI_CSV,
        Experiment::BeanJar => BEAN_JAR_CSV,
    }
}

/// Sidecar metadata for an experiment.
pub fn experiment_info(experiment: Experiment) -> Result<ExperimentInfo> {
    let sidecar: Sidecar =
        serde_json::from_str(SIDECAR_JSON).map_err(|e| Error::CorruptBundle(format!("sidecar: {e}")))?;
    sidecar
        .experiments
        .get(&experiment)
        .cloned()
        .ok_or_else(|| Error::CorruptBundle(format!("sidecar has no entry for {experiment}")))
}

#[derive(Debug, Deserialize)]
struct RawRow {
    condition: String,
    aid: String,
    n: usize,
    mean: f64,
    gse: f64,
    mse: f64,
}

/// Parses a summary CSV (`condition,aid,n,mean,gse,mse`).
pub fn parse_summary_csv(experiment: Experiment, text: &str) -> Result<Vec<SummaryRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.deserialize::<RawRow>() {
        let raw = record.map_err(|e| Error::CorruptBundle(format!("{experiment}: {e}")))?;
        let row = SummaryRow {
            experiment,
            condition: raw
                .condition
                .parse()
                .map_err(|e| Error::CorruptBundle(format!("{experiment}: {e}")))?,
            aid: raw.aid,
            n: raw.n,
            mean: raw.mean,
            gse: raw.gse,
            mse: raw.mse,
        };
        row.validate()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Checks a table's bytes against its recorded digest and parses it.
pub fn load_verified(experiment: Experiment, text: &str) -> Result<Vec<SummaryRow>> {
    let info = experiment_info(experiment)?;
    let digest = sha256_hex(text.as_bytes());
    if digest != info.sha256 {
        return Err(Error::CorruptBundle(format!(
            "{}: checksum {digest} does not match recorded {}",
            info.file, info.sha256
        )));
    }
    parse_summary_csv(experiment, text)
}

/// All bundled rows, CPI first, each table in printed order.
pub fn load_bundled_tables() -> Result<Vec<SummaryRow>> {
    let mut rows = Vec::new();
    for experiment in Experiment::ALL {
        rows.extend(load_verified(experiment, bundled_csv(experiment))?);
    }
    Ok(rows)
}

/// The row for `(experiment, condition, aid)`.
pub fn find_row<'a>(
    rows: &'a [SummaryRow],
    experiment: Experiment,
    condition: TreatmentCondition,
    aid: &str,
) -> Result<&'a SummaryRow> {
    rows.iter()
        .find(|r| r.experiment == experiment && r.condition == condition && r.aid == aid)
        .ok_or_else(|| Error::MissingAidRows {
            condition: format!("{experiment}/{condition}"),
            missing: aid.to_string(),
        })
}
