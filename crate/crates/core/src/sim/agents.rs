//! Decision-makers: how they are drawn, which aids they pick and what they
//! estimate after viewing them.

use itertools::Itertools;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::config::{AidEffect, AidEffectSpec, ChoiceModelSpec, PopulationSpec};
use crate::error::{Error, Result};
use crate::model::{AidCatalog, Criterion, TreatmentCondition};

/// Personal parameters of one simulated decision-maker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionMaker {
    /// Systematic error of the unaided estimate.
    pub bias: f64,
    /// Noise sd of the unaided estimate.
    pub noise_sd: f64,
}

impl DecisionMaker {
    pub fn shifted(self, offset: f64) -> Self {
        Self {
            bias: self.bias + offset,
            ..self
        }
    }

    /// Expected squared error after viewing an aid.
    pub fn expected_sq_error(&self, effect: &AidEffect) -> f64 {
        let bias = (1.0 - effect.anchor_weight) * self.bias + effect.mean_shift;
        let sd = self.noise_sd * effect.sd_multiplier;
        bias * bias + sd * sd
    }
}

pub(crate) fn draw_decision_maker<R: Rng>(spec: &PopulationSpec, rng: &mut R) -> DecisionMaker {
    let bias = if spec.baseline_bias_sd > 0.0 {
        Normal::new(0.0, spec.baseline_bias_sd)
            .expect("validated sd")
            .sample(rng)
    } else {
        0.0
    };
    let (lo, hi) = spec.noise_sd_range;
    let noise_sd = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    DecisionMaker { bias, noise_sd }
}

/// Draws `spec.n` decision-makers from one stream.
pub fn sample_population<R: Rng>(spec: &PopulationSpec, rng: &mut R) -> Result<Vec<DecisionMaker>> {
    spec.validate()?;
    Ok((0..spec.n).map(|_| draw_decision_maker(spec, rng)).collect())
}

/// Every permutation of the catalog order, repeated round-robin until
/// `total` orderings are listed.
pub fn generate_counterbalanced_orderings(catalog: &AidCatalog, total: usize) -> Result<Vec<Vec<String>>> {
    if catalog.is_empty() {
        return Err(Error::EmptyInput("aid catalog"));
    }
    let permutations: Vec<Vec<String>> = catalog.aids().iter().cloned().permutations(catalog.len()).collect();
    Ok((0..total)
        .map(|i| permutations[i % permutations.len()].clone())
        .collect())
}

/// Probability of picking each catalog aid (aligned with catalog order)
/// among those not excluded.
///
/// Weights are `share_a * exp(-alpha * err_a)`, with an extra factor
/// `exp(presentation_bias)` for the first-presented aid. With alpha and the
/// presentation bias both zero the base shares are returned unchanged.
pub fn choice_probabilities(
    dm: &DecisionMaker,
    catalog: &AidCatalog,
    choice: &ChoiceModelSpec,
    effects: &AidEffectSpec,
    presentation: &[String],
    excluded: &[bool],
) -> Result<Vec<f64>> {
    let k = catalog.len();
    let shares: Vec<f64> = catalog
        .aids()
        .iter()
        .map(|a| {
            choice
                .base_shares
                .get(a)
                .copied()
                .ok_or_else(|| Error::UnknownAid(a.clone()))
        })
        .collect::<Result<_>>()?;
    let first_presented = presentation.first().and_then(|a| catalog.index_of(a));
    let untilted = choice.matching_coefficient == 0.0 && (choice.presentation_bias == 0.0 || first_presented.is_none());
    if untilted && excluded.iter().all(|e| !e) {
        return Ok(shares);
    }

    let mut log_weights = vec![f64::NEG_INFINITY; k];
    for (i, aid) in catalog.aids().iter().enumerate() {
        if excluded.get(i).copied().unwrap_or(false) || shares[i] <= 0.0 {
            continue;
        }
        let err = dm.expected_sq_error(effects.get(aid)?);
        let mut lw = shares[i].ln() - choice.matching_coefficient * err;
        if Some(i) == first_presented {
            lw += choice.presentation_bias;
        }
        log_weights[i] = lw;
    }
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        // only zero-share aids remain: pick uniformly among them
        let remaining = excluded.iter().filter(|e| !**e).count().max(1);
        return Ok((0..k)
            .map(|i| {
                if excluded.get(i).copied().unwrap_or(false) {
                    0.0
                } else {
                    1.0 / remaining as f64
                }
            })
            .collect());
    }
    let weights: Vec<f64> = log_weights.iter().map(|lw| (lw - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

fn draw_index<R: Rng>(probabilities: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probabilities.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    last_positive
}

fn views_for_multiple_choice<R: Rng>(choice: &ChoiceModelSpec, catalog_len: usize, rng: &mut R) -> usize {
    let category = draw_index(&choice.multiple_view_probabilities, rng);
    let views = if category == 2 { catalog_len } else { category + 1 };
    views.clamp(1, catalog_len)
}

/// Aid sequence viewed by a decision-maker in a treatment arm.
///
/// Assigned participants get one aid uniformly at random. Single-choice
/// participants pick one aid by the tilted shares. Multiple-choice
/// participants draw a view count, then pick that many distinct aids by the
/// same rule; under the last-aid rule their first pick is viewed last.
pub fn choose_aids<R: Rng>(
    dm: &DecisionMaker,
    condition: TreatmentCondition,
    catalog: &AidCatalog,
    choice: &ChoiceModelSpec,
    effects: &AidEffectSpec,
    presentation: &[String],
    rng: &mut R,
) -> Result<Vec<String>> {
    if catalog.is_empty() {
        return Err(Error::EmptyInput("aid catalog"));
    }
    match condition {
        TreatmentCondition::Control => Err(Error::InvalidParameter(
            "control participants do not choose aids".into(),
        )),
        TreatmentCondition::Assigned => {
            let i = rng.random_range(0..catalog.len());
            Ok(vec![catalog.aids()[i].clone()])
        }
        TreatmentCondition::SingleChoice => {
            let p = choice_probabilities(dm, catalog, choice, effects, presentation, &[])?;
            Ok(vec![catalog.aids()[draw_index(&p, rng)].clone()])
        }
        TreatmentCondition::MultipleChoice => {
            let views = views_for_multiple_choice(choice, catalog.len(), rng);
            let mut excluded = vec![false; catalog.len()];
            let mut picks = Vec::with_capacity(views);
            for _ in 0..views {
                let p = choice_probabilities(dm, catalog, choice, effects, presentation, &excluded)?;
                let i = draw_index(&p, rng);
                excluded[i] = true;
                picks.push(catalog.aids()[i].clone());
            }
            if choice.last_aid_rule {
                picks.rotate_left(1);
            }
            Ok(picks)
        }
    }
}

/// Options for [`realize_estimate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizeOptions {
    /// Final aid governs (true) or the viewed aids' parameters are averaged.
    pub last_aid_rule: bool,
    /// Weight on the mean shifts of aids viewed before the final one.
    pub carryover: f64,
}

impl Default for RealizeOptions {
    fn default() -> Self {
        Self {
            last_aid_rule: true,
            carryover: 0.0,
        }
    }
}

fn pooled_effect(effects: &[&AidEffect]) -> AidEffect {
    let n = effects.len() as f64;
    AidEffect {
        mean_shift: effects.iter().map(|e| e.mean_shift).sum::<f64>() / n,
        sd_multiplier: effects.iter().map(|e| e.sd_multiplier).sum::<f64>() / n,
        anchor_weight: effects.iter().map(|e| e.anchor_weight).sum::<f64>() / n,
    }
}

/// Draws one estimate.
///
/// Unaided: `Normal(Y + b, sigma)`. After aids, the governing effect `e`
/// gives `Normal(Y + (1 - e.anchor) b + e.shift, sigma * e.multiplier)`.
/// Exactly one normal variate is consumed either way.
pub fn realize_estimate<R: Rng>(
    dm: &DecisionMaker,
    aid_sequence: &[String],
    criterion: &Criterion,
    effects: &AidEffectSpec,
    options: RealizeOptions,
    rng: &mut R,
) -> Result<f64> {
    let viewed: Vec<&AidEffect> = aid_sequence.iter().map(|a| effects.get(a)).collect::<Result<_>>()?;
    let (mean, sd) = match viewed.last() {
        None => (criterion.true_value + dm.bias, dm.noise_sd),
        Some(&last) => {
            let effect = if options.last_aid_rule {
                *last
            } else {
                pooled_effect(&viewed)
            };
            let mut mean = criterion.true_value + (1.0 - effect.anchor_weight) * dm.bias + effect.mean_shift;
            if options.carryover != 0.0 && viewed.len() > 1 {
                let prefix = &viewed[..viewed.len() - 1];
                let carried = prefix.iter().map(|e| e.mean_shift).sum::<f64>() / prefix.len() as f64;
                mean += options.carryover * carried;
            }
            (mean, dm.noise_sd * effect.sd_multiplier)
        }
    };
    let z: f64 = rand_distr::StandardNormal.sample(rng);
    Ok(mean + sd * z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use std::collections::BTreeMap;

    fn catalog3() -> AidCatalog {
        AidCatalog::new(["a", "b", "c"]).unwrap()
    }

    fn effects(shifts: [f64; 3]) -> AidEffectSpec {
        AidEffectSpec {
            effects: ["a", "b", "c"]
                .iter()
                .zip(shifts)
                .map(|(k, s)| {
                    (
                        k.to_string(),
                        AidEffect {
                            mean_shift: s,
                            sd_multiplier: 1.0,
                            anchor_weight: 0.0,
                        },
                    )
                })
                .collect(),
        }
    }

    fn shares(values: [f64; 3]) -> ChoiceModelSpec {
        let mut c = ChoiceModelSpec::uniform(&catalog3());
        c.base_shares = ["a", "b", "c"]
            .iter()
            .map(|s| s.to_string())
            .zip(values)
            .collect::<BTreeMap<_, _>>();
        c
    }

    #[test]
    fn degenerate_population_is_constant() {
        let spec = PopulationSpec {
            n: 5,
            baseline_mean: None,
            baseline_bias_sd: 0.0,
            noise_sd_range: (1.0, 1.0),
        };
        let pop = sample_population(&spec, &mut substream(1, 0)).unwrap();
        assert!(pop.iter().all(|dm| *dm
            == DecisionMaker {
                bias: 0.0,
                noise_sd: 1.0
            }));
    }

    #[test]
    fn population_bias_spread_and_determinism() {
        let spec = PopulationSpec {
            n: 10_000,
            baseline_mean: None,
            baseline_bias_sd: 2.0,
            noise_sd_range: (0.5, 1.5),
        };
        let pop = sample_population(&spec, &mut substream(3, 0)).unwrap();
        let biases: Vec<f64> = pop.iter().map(|d| d.bias).collect();
        let m = biases.iter().sum::<f64>() / biases.len() as f64;
        let sd = (biases.iter().map(|b| (b - m).powi(2)).sum::<f64>() / (biases.len() - 1) as f64).sqrt();
        assert!((sd - 2.0).abs() < 0.1, "{sd}");
        assert!(pop.iter().all(|d| (0.5..=1.5).contains(&d.noise_sd)));
        assert_eq!(pop, sample_population(&spec, &mut substream(3, 0)).unwrap());
        let bad = PopulationSpec { n: 0, ..spec };
        assert!(sample_population(&bad, &mut substream(3, 0)).is_err());
    }

    #[test]
    fn counterbalancing() {
        let catalog = catalog3();
        let six = generate_counterbalanced_orderings(&catalog, 6).unwrap();
        let distinct: std::collections::BTreeSet<_> = six.iter().collect();
        assert_eq!(distinct.len(), 6);

        let seven = generate_counterbalanced_orderings(&catalog, 7).unwrap();
        assert_eq!(seven[6], seven[0]);
        let mut counts: BTreeMap<&Vec<String>, usize> = BTreeMap::new();
        for o in &seven {
            *counts.entry(o).or_default() += 1;
        }
        let mut c: Vec<usize> = counts.values().copied().collect();
        c.sort_unstable();
        assert_eq!(c, vec![1, 1, 1, 1, 1, 2]);

        let single = AidCatalog::new(["only"]).unwrap();
        let five = generate_counterbalanced_orderings(&single, 5).unwrap();
        assert_eq!(five, vec![vec!["only".to_string()]; 5]);
        assert!(generate_counterbalanced_orderings(&AidCatalog::new(Vec::<String>::new()).unwrap(), 3).is_err());
    }

    #[test]
    fn zero_alpha_returns_base_shares_exactly() {
        let dm = DecisionMaker {
            bias: 3.0,
            noise_sd: 2.0,
        };
        let c = shares([0.19, 0.61, 0.20]);
        let p = choice_probabilities(&dm, &catalog3(), &c, &effects([1.0, 0.0, -1.0]), &[], &[]).unwrap();
        assert_eq!(p, vec![0.19, 0.61, 0.20]);
    }

    fn empirical_shares(c: &ChoiceModelSpec, draws: usize, seed: u64) -> [f64; 3] {
        let dm = DecisionMaker {
            bias: 0.0,
            noise_sd: 1.0,
        };
        let fx = effects([0.0, 0.0, 0.0]);
        let mut rng = substream(seed, 0);
        let mut counts = [0usize; 3];
        for _ in 0..draws {
            let s = choose_aids(
                &dm,
                TreatmentCondition::SingleChoice,
                &catalog3(),
                c,
                &fx,
                &[],
                &mut rng,
            )
            .unwrap();
            counts[catalog3().index_of(&s[0]).unwrap()] += 1;
        }
        counts.map(|k| k as f64 / draws as f64)
    }

    #[test]
    fn single_choice_matches_shares() {
        let n = 100_000;
        for target in [[1.0 / 3.0; 3], [0.19, 0.61, 0.20]] {
            let c = shares(target);
            let got = empirical_shares(&c, n, 17);
            for (g, p) in got.iter().zip(target) {
                let se = (p * (1.0 - p) / n as f64).sqrt();
                assert!((g - p).abs() < 3.0 * se, "{g} vs {p}");
            }
        }
    }

    #[test]
    fn strong_matching_picks_the_zero_error_aid() {
        let dm = DecisionMaker {
            bias: 0.0,
            noise_sd: 0.0,
        };
        let mut c = shares([0.45, 0.1, 0.45]);
        c.matching_coefficient = 1e3;
        let p = choice_probabilities(&dm, &catalog3(), &c, &effects([2.0, 0.0, -2.0]), &[], &[]).unwrap();
        assert!(p[1] > 1.0 - 1e-12);
    }

    #[test]
    fn multiple_choice_sequences() {
        let dm = DecisionMaker {
            bias: 0.0,
            noise_sd: 1.0,
        };
        let c = shares([0.2, 0.5, 0.3]);
        let fx = effects([0.0; 3]);
        let mut rng = substream(5, 0);
        let mut lengths = [0usize; 3];
        for _ in 0..2000 {
            let s = choose_aids(
                &dm,
                TreatmentCondition::MultipleChoice,
                &catalog3(),
                &c,
                &fx,
                &[],
                &mut rng,
            )
            .unwrap();
            let distinct: std::collections::BTreeSet<_> = s.iter().collect();
            assert_eq!(distinct.len(), s.len());
            lengths[s.len() - 1] += 1;
        }
        assert!(lengths.iter().all(|&l| l > 0));
        let assigned = choose_aids(&dm, TreatmentCondition::Assigned, &catalog3(), &c, &fx, &[], &mut rng).unwrap();
        assert_eq!(assigned.len(), 1);
        assert!(choose_aids(&dm, TreatmentCondition::Control, &catalog3(), &c, &fx, &[], &mut rng).is_err());
    }

    #[test]
    fn full_anchor_removes_bias() {
        let fx = AidEffectSpec {
            effects: [(
                "a".to_string(),
                AidEffect {
                    mean_shift: 0.0,
                    sd_multiplier: 1.0,
                    anchor_weight: 1.0,
                },
            )]
            .into_iter()
            .collect(),
        };
        let y = Criterion::fixed(50.0);
        let dm = DecisionMaker {
            bias: 37.0,
            noise_sd: 2.0,
        };
        let mut rng = substream(8, 0);
        let n = 20_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| realize_estimate(&dm, &["a".to_string()], &y, &fx, RealizeOptions::default(), &mut rng).unwrap())
            .collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((m - 50.0).abs() < 3.0 * 2.0 / (n as f64).sqrt());
        assert!((sd - 2.0).abs() < 0.05);
    }

    #[test]
    fn control_bias_shifts_mean() {
        let y = Criterion::fixed(488.0);
        let dm = DecisionMaker {
            bias: 0.0,
            noise_sd: 1.0,
        }
        .shifted(-175.0);
        let mut rng = substream(9, 0);
        let xs: Vec<f64> = (0..1000)
            .map(|_| realize_estimate(&dm, &[], &y, &effects([0.0; 3]), RealizeOptions::default(), &mut rng).unwrap())
            .collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((m - 313.0).abs() < 0.2);
    }

    #[test]
    fn last_aid_governs() {
        let y = Criterion::fixed(0.0);
        let fx = effects([5.0, -3.0, 1.0]);
        let dm = DecisionMaker {
            bias: 1.0,
            noise_sd: 1.0,
        };
        let a = realize_estimate(
            &dm,
            &["a".into(), "c".into()],
            &y,
            &fx,
            RealizeOptions::default(),
            &mut substream(4, 4),
        )
        .unwrap();
        let b = realize_estimate(
            &dm,
            &["b".into(), "a".into(), "c".into()],
            &y,
            &fx,
            RealizeOptions::default(),
            &mut substream(4, 4),
        )
        .unwrap();
        assert_eq!(a, b);
        assert!(realize_estimate(
            &dm,
            &["zzz".into()],
            &y,
            &fx,
            RealizeOptions::default(),
            &mut substream(4, 4)
        )
        .is_err());
        let carry = RealizeOptions {
            carryover: 1.0,
            ..RealizeOptions::default()
        };
        let c = realize_estimate(&dm, &["a".into(), "c".into()], &y, &fx, carry, &mut substream(4, 4)).unwrap();
        assert!((c - a - 5.0).abs() < 1e-12);
    }
}
