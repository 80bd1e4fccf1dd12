use std::f64::consts::PI;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::commensura::{
    periodicity_base_exact, ratio_to_f64, strong_commensurate, Frequency, PeriodicityBase,
    StrongVerdict, RATIO_DENOMINATOR_BOUND,
};
use crate::error::{Error, Result};
use crate::flow::{FrequencySequence, RadiiRule};

/// How far a verdict can be trusted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "level", rename_all = "kebab-case")]
pub enum Confidence {
    /// Decided in exact arithmetic.
    Exact,
    /// Rationality was tested only against fractions with denominators up to `height`.
    HeightBounded { height: u64 },
}

/// Common period of one prefix `λ_1, …, λ_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefixPeriod {
    pub prefix: usize,
    /// The largest `λ₀` with `λ_k/λ₀` integral for all `k ≤ N`.
    pub lambda0: f64,
    /// `2π/λ₀`.
    pub period: f64,
    /// Exact base, present when every frequency of the prefix is an exact rational.
    pub base: Option<PeriodicityBase>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum TrajectoryKind {
    /// Every trajectory is periodic with `period`. `stable` is false when the
    /// base shrank along the tested prefixes without the pattern required for
    /// Type III; the period is then that of the longest prefix.
    TypeI { period: f64, stable: bool },
    /// Modes `pair` (numbered from 1) have an irrational frequency ratio, so the
    /// projection onto those two modes is dense on its 2-torus.
    TypeII {
        pair: (usize, usize),
        frequencies: (Frequency, Frequency),
    },
    /// All ratios rational, but the common period diverges along the prefixes.
    TypeIII,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryClass {
    pub kind: TrajectoryKind,
    pub confidence: Confidence,
    /// Per-prefix periods; empty for Type II.
    pub prefix_periods: Vec<PrefixPeriod>,
    /// Set when some ratio could not be decided in floating point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub undecided: Option<String>,
}

/// Type I/II/III classification of trajectories on a non-degenerate torus
/// from nested prefixes `N₁ < N₂ < …` of the frequency sequence.
pub fn classify_trajectory(
    freqs: &FrequencySequence,
    prefixes: &[usize],
    radii: &RadiiRule,
) -> Result<TrajectoryClass> {
    if prefixes.is_empty() {
        return Err(Error::param("prefixes", "need at least one prefix length"));
    }
    if prefixes[0] == 0 || prefixes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("prefixes", "must be positive and strictly increasing"));
    }
    let n_max = *prefixes.last().unwrap();
    if !radii.is_nondegenerate() || !radii.prefix(n_max)?.is_nondegenerate() {
        return Err(Error::Degenerate("the torus has a vanishing radius".into()));
    }
    let all = freqs.prefix(n_max)?;
    for f in &all {
        f.check_positive()?;
    }

    let (ratios, exact) = if all.len() < 2 {
        (vec![BigRational::from_integer(1.into())], all[0].exact_form().is_some())
    } else {
        match strong_commensurate(&all)? {
            StrongVerdict::Yes {
                ratios_to_first,
                exact,
            } => (ratios_to_first, exact),
            StrongVerdict::No { pair, exact, .. } => {
                return Ok(type_ii(&all, pair, exact, None));
            }
            StrongVerdict::Undecided { pair, reason } => {
                return Ok(type_ii(&all, pair, false, Some(reason)));
            }
        }
    };

    // exact surd multiples of a common irrational take the ratio path
    let rational = all.iter().all(Frequency::is_exact);
    let first = all[0].value();
    let mut periods = Vec::with_capacity(prefixes.len());
    for &n in prefixes {
        let (lambda0, base) = if rational {
            let values: Vec<BigRational> =
                all[..n].iter().map(|f| f.as_exact().unwrap().clone()).collect();
            let b = periodicity_base_exact(&values)?;
            (ratio_to_f64(&b.lambda0), Some(b))
        } else {
            let g = periodicity_base_exact(&ratios[..n])?;
            (first * ratio_to_f64(&g.lambda0), None)
        };
        periods.push(PrefixPeriod {
            prefix: n,
            lambda0,
            period: 2.0 * PI / lambda0,
            base,
        });
    }

    let same = |a: &PrefixPeriod, b: &PrefixPeriod| match (&a.base, &b.base) {
        (Some(x), Some(y)) => x.lambda0 == y.lambda0,
        _ => (a.lambda0 - b.lambda0).abs() <= 1e-12 * a.lambda0.max(b.lambda0),
    };
    let stable = periods.windows(2).all(|w| same(&w[0], &w[1]));
    // nested prefixes can only shrink λ₀, so "not equal" means "strictly smaller"
    let diverging = periods.len() >= 3 && periods.windows(2).all(|w| !same(&w[0], &w[1]));
    let kind = if diverging {
        TrajectoryKind::TypeIII
    } else {
        TrajectoryKind::TypeI {
            period: periods.last().unwrap().period,
            stable,
        }
    };
    Ok(TrajectoryClass {
        kind,
        confidence: if exact {
            Confidence::Exact
        } else {
            Confidence::HeightBounded {
                height: RATIO_DENOMINATOR_BOUND,
            }
        },
        prefix_periods: periods,
        undecided: None,
    })
}

fn type_ii(all: &[Frequency], pair: (usize, usize), exact: bool, undecided: Option<String>) -> TrajectoryClass {
    let (i, j) = pair;
    TrajectoryClass {
        kind: TrajectoryKind::TypeII {
            pair: (i + 1, j + 1),
            frequencies: (all[i].clone(), all[j].clone()),
        },
        confidence: if exact {
            Confidence::Exact
        } else {
            Confidence::HeightBounded {
                height: RATIO_DENOMINATOR_BOUND,
            }
        },
        prefix_periods: Vec::new(),
        undecided,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_radii() -> RadiiRule {
        RadiiRule::Geometric { a: 1.0, q: 0.5 }
    }

    #[test]
    fn linear_frequencies_are_type_one() {
        let seq = FrequencySequence::Linear {
            scale: Frequency::integer(1),
        };
        let c = classify_trajectory(&seq, &[2, 5, 10, 20], &unit_radii()).unwrap();
        assert_eq!(c.confidence, Confidence::Exact);
        match c.kind {
            TrajectoryKind::TypeI { period, stable } => {
                assert!(stable);
                assert!((period - 2.0 * PI).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reciprocal_factorials_are_type_three() {
        let seq = FrequencySequence::Factorial {
            scale: Frequency::integer(1),
        };
        let c = classify_trajectory(&seq, &[3, 4, 5, 6], &unit_radii()).unwrap();
        assert_eq!(c.kind, TrajectoryKind::TypeIII);
        let want = [6u32, 24, 120, 720];
        for (p, w) in c.prefix_periods.iter().zip(want) {
            assert_eq!(
                p.base.as_ref().unwrap().period_over_two_pi(),
                BigRational::from_integer(w.into())
            );
        }
    }

    #[test]
    fn irrational_pair_is_type_two() {
        let values = ["1", "sqrt(2)", "1/2"].map(|s| Frequency::parse(s).unwrap()).to_vec();
        let seq = FrequencySequence::Explicit { values };
        let c = classify_trajectory(&seq, &[3], &unit_radii()).unwrap();
        match c.kind {
            TrajectoryKind::TypeII { pair, .. } => assert_eq!(pair, (1, 2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn two_prefixes_cannot_show_divergence() {
        let seq = FrequencySequence::Factorial {
            scale: Frequency::integer(1),
        };
        let c = classify_trajectory(&seq, &[3, 4], &unit_radii()).unwrap();
        assert!(matches!(c.kind, TrajectoryKind::TypeI { stable: false, .. }));
    }

    #[test]
    fn degenerate_torus_is_rejected() {
        let seq = FrequencySequence::Linear {
            scale: Frequency::integer(1),
        };
        let radii = RadiiRule::Explicit {
            radii: vec![1.0, 0.0, 1.0],
            tail_energy_bound: 0.0,
        };
        assert!(classify_trajectory(&seq, &[3], &radii).is_err());
    }
}
