//! Within-participant crossover analysis: does the aid seen on a first task
//! change estimates on a second task made with a given aid?

use std::collections::BTreeMap;

use serde::Serialize;

use super::kde::{kde, DensityCurve, KdeOptions};
use super::welch::{welch_t, Alternative, TestResult};
use crate::error::{Error, Result};
use crate::model::EstimateSample;

/// `(first_aid, second_aid)`
pub type OrderingKey = (String, String);

/// Welch comparison of second-task estimates between two first-aid groups
/// that share the same second aid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingTest {
    pub second_aid: String,
    pub first_aids: (String, String),
    pub result: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingAnalysis {
    pub tests: Vec<OrderingTest>,
    /// Mean-centered densities of the second-task estimates per ordering.
    /// Groups whose estimates have zero spread are omitted.
    pub densities: BTreeMap<OrderingKey, DensityCurve>,
}

/// Runs every pairwise Welch test among first-aid groups for each second aid.
///
/// Each second aid needs at least two first-aid groups with two or more
/// estimates; groups below that size are ignored.
pub fn ordering_effect_analysis(groups: &BTreeMap<OrderingKey, Vec<EstimateSample>>) -> Result<OrderingAnalysis> {
    if groups.is_empty() {
        return Err(Error::InsufficientGroups("no ordering groups supplied".into()));
    }
    let mut by_second: BTreeMap<&str, Vec<(&str, Vec<f64>)>> = BTreeMap::new();
    for ((first, second), samples) in groups {
        by_second.entry(second.as_str()).or_default();
        if samples.len() >= 2 {
            let values = samples.iter().map(|s| s.estimate).collect();
            by_second
                .get_mut(second.as_str())
                .unwrap()
                .push((first.as_str(), values));
        }
    }

    let mut tests = Vec::new();
    for (second, firsts) in &by_second {
        if firsts.len() < 2 {
            return Err(Error::InsufficientGroups(format!(
                "second aid `{second}` has {} first-aid group(s) with n >= 2",
                firsts.len()
            )));
        }
        for i in 0..firsts.len() {
            for j in i + 1..firsts.len() {
                let result = welch_t(&firsts[i].1, &firsts[j].1, Alternative::TwoSided)?;
                tests.push(OrderingTest {
                    second_aid: second.to_string(),
                    first_aids: (firsts[i].0.to_string(), firsts[j].0.to_string()),
                    result,
                });
            }
        }
    }

    let options = KdeOptions {
        mean_centered: true,
        ..KdeOptions::default()
    };
    let mut densities = BTreeMap::new();
    for (key, samples) in groups {
        let values: Vec<f64> = samples.iter().map(|s| s.estimate).collect();
        match kde(&values, options) {
            Ok(curve) => {
                densities.insert(key.clone(), curve);
            }
            Err(Error::ZeroSpread | Error::SampleTooSmall { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(OrderingAnalysis { tests, densities })
}
