//! Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.

use super::welch::{Alternative, TestResult};
use crate::error::{Error, Result};

/// Largest absolute difference between the two empirical CDFs.
pub fn ks_statistic(sample_a: &[f64], sample_b: &[f64]) -> Result<f64> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(Error::EmptyInput("KS sample"));
    }
    if sample_a.iter().chain(sample_b).any(|x| x.is_nan()) {
        return Err(Error::InvalidParameter("KS samples contain NaN".into()));
    }
    let mut a = sample_a.to_vec();
    let mut b = sample_b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Survival function of the Kolmogorov distribution,
/// `Q(lambda) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    // Q(0.2) differs from 1 by less than 1e-25; the series converges slowly there.
    if lambda < 0.2 {
        return 1.0;
    }
    let mut total = 0.0;
    let mut sign = 1.0;
    for k in 1..=100_000u32 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        total += sign * term;
        if term < 1e-12 {
            break;
        }
        sign = -sign;
    }
    (2.0 * total).clamp(0.0, 1.0)
}

/// Two-sample KS test; `p` uses effective size `n_a n_b / (n_a + n_b)`.
pub fn ks_two_sample(sample_a: &[f64], sample_b: &[f64]) -> Result<TestResult> {
    let d = ks_statistic(sample_a, sample_b)?;
    let (na, nb) = (sample_a.len() as f64, sample_b.len() as f64);
    let effective = na * nb / (na + nb);
    Ok(TestResult {
        statistic: d,
        degrees_of_freedom: None,
        p_value: kolmogorov_sf(effective.sqrt() * d),
        alternative: Alternative::TwoSided,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_computed_statistics() {
        assert_eq!(ks_statistic(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(ks_statistic(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 1.0);
        assert_eq!(ks_statistic(&[1.0, 3.0], &[2.0, 4.0]).unwrap(), 0.5);
        // ties across samples are stepped together
        assert_eq!(ks_statistic(&[1.0, 2.0], &[2.0, 2.0]).unwrap(), 0.5);
    }

    #[test]
    fn identical_samples_have_unit_p() {
        let r = ks_two_sample(&[1.0, 5.0, 2.0], &[2.0, 1.0, 5.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn kolmogorov_reference_values() {
        // Classic critical values: Q(1.358) ~ 0.05, Q(1.628) ~ 0.01
        assert!((kolmogorov_sf(1.358) - 0.05).abs() < 5e-4);
        assert!((kolmogorov_sf(1.628) - 0.01).abs() < 2e-4);
        assert!(kolmogorov_sf(5.0) < 1e-20);
    }

    #[test]
    fn rejects_empty() {
        assert!(ks_two_sample(&[], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn statistic_bounds_and_monotone_invariance(
            a in prop::collection::vec(-50.0f64..50.0, 1..40),
            b in prop::collection::vec(-50.0f64..50.0, 1..40),
        ) {
            let d = ks_statistic(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
            let f = |x: &f64| (x / 10.0).exp() * 3.0 + 1.0;
            let ta: Vec<f64> = a.iter().map(f).collect();
            let tb: Vec<f64> = b.iter().map(f).collect();
            prop_assert_eq!(d, ks_statistic(&ta, &tb).unwrap());
            prop_assert_eq!(d, ks_statistic(&b, &a).unwrap());
        }
    }
}
