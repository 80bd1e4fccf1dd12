//! Rational commensurability of frequency sets.
//!
//! A finite set is *rationally commensurable* when it satisfies a nontrivial
//! integer relation `Σ n_k λ_k = 0`, and *strongly* so when every pairwise
//! ratio is rational. Exact rationals are decided exactly; real frequencies
//! only ever get height-bounded answers.

mod frequency;
mod relation;
pub(crate) mod serde_big;
mod surd;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

pub use frequency::{ratio_to_f64, Frequency};
pub use surd::{integer_kernel, Surd};
pub use relation::{
    convergents, effective_height, rational_ratio, rational_relation, strong_commensurate,
    RelationSearch, RelationWitness, StrongVerdict, MAX_REAL_FREQUENCIES, RATIO_DENOMINATOR_BOUND,
    RATIO_TOL, RELATION_TOL,
};

use crate::error::{Error, Result};

/// Default coefficient height for relation searches.
pub const DEFAULT_HEIGHT: u64 = 1_000_000;

/// `λ_k = λ₀ n_k` with integer multipliers and the largest such `λ₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicityBase {
    #[serde(with = "serde_big::ratio")]
    pub lambda0: BigRational,
    #[serde(with = "serde_big::vec")]
    pub multipliers: Vec<BigInt>,
    pub prefix_length: usize,
}

impl PeriodicityBase {
    /// The minimal common period divided by `2π`, i.e. `1/λ₀`.
    pub fn period_over_two_pi(&self) -> BigRational {
        self.lambda0.recip()
    }

    /// The minimal common period `2π/λ₀`.
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / ratio_to_f64(&self.lambda0)
    }
}

/// Rational gcd of a prefix of exact frequencies.
pub fn periodicity_base(freqs: &[Frequency]) -> Result<PeriodicityBase> {
    let exact: Vec<BigRational> = freqs
        .iter()
        .map(|f| {
            f.as_exact().cloned().ok_or_else(|| {
                Error::param(
                    "freqs",
                    format!("{f} is not an exact rational; decide its ratios first"),
                )
            })
        })
        .collect::<Result<_>>()?;
    periodicity_base_exact(&exact)
}

pub(crate) fn periodicity_base_exact(values: &[BigRational]) -> Result<PeriodicityBase> {
    if values.is_empty() {
        return Err(Error::param("freqs", "need at least one frequency"));
    }
    if values.iter().any(|r| !r.is_positive()) {
        return Err(Error::param("freqs", "frequencies must be positive"));
    }
    let lambda0 = relation::lcm_gcd_base(values);
    let multipliers = values.iter().map(|r| (r / &lambda0).to_integer()).collect();
    Ok(PeriodicityBase {
        lambda0,
        multipliers,
        prefix_length: values.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum JacobiClass {
    /// Strongly commensurate: every trajectory is periodic.
    PeriodicAll {
        /// Present when all inputs are exact.
        base: Option<PeriodicityBase>,
    },
    /// No integer relation up to `height`: trajectories are dense on the torus.
    /// `exact` means independence over ℚ was proved, not just searched.
    DenseOnTorus { height: u64, exact: bool },
    /// A relation exists but some ratio is irrational (or undecided).
    ResonantMixed {
        witness: Option<RelationWitness>,
        undecided: bool,
        height: u64,
    },
}

/// Finite-dimensional classification of the flow with frequencies `freqs`.
pub fn jacobi_classify(freqs: &[Frequency], height: u64) -> Result<JacobiClass> {
    if !(2..=MAX_REAL_FREQUENCIES).contains(&freqs.len()) {
        return Err(Error::param(
            "freqs",
            format!("need between 2 and {MAX_REAL_FREQUENCIES} frequencies"),
        ));
    }
    let strong = strong_commensurate(freqs)?;
    let undecided = match strong {
        StrongVerdict::Yes { .. } => {
            let base = if freqs.iter().all(Frequency::is_exact) {
                Some(periodicity_base(freqs)?)
            } else {
                None
            };
            return Ok(JacobiClass::PeriodicAll { base });
        }
        StrongVerdict::No { .. } => false,
        StrongVerdict::Undecided { .. } => true,
    };
    let search = rational_relation(freqs, height)?;
    Ok(match search.witness {
        None if !undecided => JacobiClass::DenseOnTorus {
            height: search.height,
            exact: freqs.iter().all(|f| f.exact_form().is_some()),
        },
        witness => JacobiClass::ResonantMixed {
            witness,
            undecided,
            height: search.height,
        },
    })
}
