//! Welch's unequal-variance t-test, from raw samples or from summary moments.

use serde::Serialize;

use super::special::{student_t_cdf, student_t_sf};
use crate::error::{Error, Result};

/// Alternative hypothesis for a two-sample test, stated for `a` relative to `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    TwoSided,
    /// mean(a) < mean(b)
    Less,
    /// mean(a) > mean(b)
    Greater,
}

/// Test statistic with its p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub degrees_of_freedom: Option<f64>,
    pub p_value: f64,
    pub alternative: Alternative,
}

/// Sample moments used by the summary form of the test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
}

impl Moments {
    /// Mean and sample variance (n - 1 denominator).
    pub fn from_sample(sample: &[f64]) -> Result<Self> {
        if sample.len() < 2 {
            return Err(Error::SampleTooSmall {
                needed: 2,
                found: sample.len(),
            });
        }
        let n = sample.len();
        let mean = crate::numeric::sum(sample.iter().copied()) / n as f64;
        let ss = crate::numeric::sum(sample.iter().map(|x| (x - mean) * (x - mean)));
        Ok(Self {
            n,
            mean,
            variance: ss / (n - 1) as f64,
        })
    }

    /// Moments recovered from a table row: `var = MSE - GSE` is the
    /// population variance; `bessel` rescales it by n/(n-1).
    pub fn from_table_row(n: usize, mean: f64, gse: f64, mse: f64, bessel: bool) -> Self {
        let mut variance = (mse - gse).max(0.0);
        if bessel && n > 1 {
            variance *= n as f64 / (n - 1) as f64;
        }
        Self { n, mean, variance }
    }
}

fn p_value(t: f64, df: f64, alternative: Alternative) -> Result<f64> {
    let p = match alternative {
        Alternative::Less => student_t_cdf(t, df)?,
        Alternative::Greater => student_t_sf(t, df)?,
        Alternative::TwoSided => {
            let lower = student_t_cdf(t, df)?;
            let upper = student_t_sf(t, df)?;
            2.0 * lower.min(upper)
        }
    };
    Ok(p.clamp(0.0, 1.0))
}

/// Welch's t-test on summary moments.
pub fn welch_t_from_moments(a: Moments, b: Moments, alternative: Alternative) -> Result<TestResult> {
    for m in [a, b] {
        if m.n < 2 {
            return Err(Error::SampleTooSmall { needed: 2, found: m.n });
        }
        if !(m.variance >= 0.0) || !m.mean.is_finite() || !m.variance.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "invalid moments: mean {}, variance {}",
                m.mean, m.variance
            )));
        }
    }
    let sa = a.variance / a.n as f64;
    let sb = b.variance / b.n as f64;
    let se2 = sa + sb;
    if se2 <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let t = (a.mean - b.mean) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (a.n - 1) as f64 + sb * sb / (b.n - 1) as f64);
    Ok(TestResult {
        statistic: t,
        degrees_of_freedom: Some(df),
        p_value: p_value(t, df, alternative)?,
        alternative,
    })
}

/// Welch's t-test on two raw samples.
pub fn welch_t(sample_a: &[f64], sample_b: &[f64], alternative: Alternative) -> Result<TestResult> {
    let a = Moments::from_sample(sample_a)?;
    let b = Moments::from_sample(sample_b)?;
    welch_t_from_moments(a, b, alternative)
}

/// Welch's t-test from `(n, mean, variance)` triples.
#[allow(clippy::too_many_arguments)]
pub fn welch_t_from_summary(
    n_a: usize,
    mean_a: f64,
    var_a: f64,
    n_b: usize,
    mean_b: f64,
    var_b: f64,
    alternative: Alternative,
) -> Result<TestResult> {
    welch_t_from_moments(
        Moments {
            n: n_a,
            mean: mean_a,
            variance: var_a,
        },
        Moments {
            n: n_b,
            mean: mean_b,
            variance: var_b,
        },
        alternative,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_samples() {
        let a = [1.0, 2.0, 4.0, 7.0];
        let r = welch_t(&a, &a, Alternative::TwoSided).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn swap_negates_statistic() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [2.0, 4.0, 6.0, 8.0, 10.0];
        let ab = welch_t(&a, &b, Alternative::TwoSided).unwrap();
        let ba = welch_t(&b, &a, Alternative::TwoSided).unwrap();
        assert_eq!(ab.statistic, -ba.statistic);
        assert!((ab.p_value - ba.p_value).abs() < 1e-15);
    }

    #[test]
    fn small_and_degenerate_inputs() {
        assert!(matches!(
            welch_t(&[1.0], &[1.0, 2.0], Alternative::TwoSided),
            Err(Error::SampleTooSmall { .. })
        ));
        assert!(matches!(
            welch_t(&[3.0, 3.0], &[3.0, 3.0, 3.0], Alternative::TwoSided),
            Err(Error::ZeroVariance)
        ));
        assert!(welch_t_from_summary(10, 1.0, 0.0, 10, 1.0, 0.0, Alternative::TwoSided).is_err());
    }

    #[test]
    fn equal_summary_moments() {
        let r = welch_t_from_summary(30, 5.0, 2.0, 40, 5.0, 3.0, Alternative::TwoSided).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn cpi_assigned_fed_vs_predictive_model() {
        let fed = Moments::from_table_row(91, 6.61, 0.04, 1.48, false);
        let pred = Moments::from_table_row(91, 8.13, 1.76, 14.92, false);
        let r = welch_t_from_moments(fed, pred, Alternative::TwoSided).unwrap();
        assert!(r.p_value < 0.001, "{r:?}");
    }

    #[test]
    fn cpi_single_choice_pred_vs_components() {
        let pred = Moments::from_table_row(163, 7.54, 0.55, 5.01, false);
        let comp = Moments::from_table_row(76, 9.88, 9.49, 74.75, false);
        let r = welch_t_from_moments(pred, comp, Alternative::TwoSided).unwrap();
        assert!(r.p_value < 0.016, "{r:?}");
    }

    proptest! {
        #[test]
        fn one_sided_tails_sum_to_one(
            a in prop::collection::vec(-10.0f64..10.0, 2..20),
            b in prop::collection::vec(-10.0f64..10.0, 2..20),
        ) {
            prop_assume!(Moments::from_sample(&a).unwrap().variance + Moments::from_sample(&b).unwrap().variance > 1e-9);
            let less = welch_t(&a, &b, Alternative::Less).unwrap();
            let greater = welch_t(&a, &b, Alternative::Greater).unwrap();
            let two = welch_t(&a, &b, Alternative::TwoSided).unwrap();
            let swapped = welch_t(&b, &a, Alternative::TwoSided).unwrap();
            prop_assert!((less.p_value + greater.p_value - 1.0).abs() < 1e-12);
            prop_assert!((two.p_value - swapped.p_value).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&two.p_value));
        }
    }
}
