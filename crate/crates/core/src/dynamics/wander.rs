use serde::{Deserialize, Serialize};

use crate::charfn::{analytic_decay_bound, displacement_sq, limsup_estimate, Convention, DecayKind};
use crate::error::{Error, Result};
use crate::measure::Measure;

/// Where the ceiling on `limsup |μ̂_u|` came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CertificateBasis {
    AnalyticBound {
        ceiling: f64,
        rate: f64,
        valid_from: f64,
    },
    SampledEstimate {
        ceiling: f64,
        t_lo: f64,
        t_hi: f64,
        samples: usize,
    },
}

/// `‖Φ_t u - u‖ ≥ δ` for all `t ≥ T`: no point of the torus returns to
/// the `δ`-ball around `u` after time `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WanderingCertificate {
    pub delta: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub basis: CertificateBasis,
    pub measure: String,
    pub mass: f64,
    pub convention: Convention,
}

/// A finite window used when no analytic ceiling is good enough.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleWindow {
    pub t_lo: f64,
    pub t_hi: f64,
    pub samples: usize,
}

/// Tries to certify that every point of the torus of `μ_u` is wandering.
///
/// With ceiling `L` on `limsup |μ̂_u|` and `L < (1 - margin)‖μ_u‖`, returns
/// `δ = √(‖μ_u‖ - L)` together with a time `T` past which the displacement
/// identity forces `‖Φ_t u - u‖² ≥ δ²`. Returns `None` when the ceiling is
/// too high (always the case for purely atomic measures).
pub fn wandering_certificate(
    mu_u: &Measure,
    margin: f64,
    convention: Convention,
    fallback: Option<SampleWindow>,
) -> Result<Option<WanderingCertificate>> {
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::param("margin", "must lie in the open interval (0, 1)"));
    }
    let mass = mu_u.resolved_mass()?;
    if !(mass > 0.0) {
        return Err(Error::Degenerate(format!("{} is the zero measure", mu_u.label())));
    }
    let bound = analytic_decay_bound(mu_u, convention)?;
    if bound.kind != DecayKind::Exact && bound.ceiling < (1.0 - margin) * mass {
        let gap = mass - bound.ceiling;
        // 2(m - L - rate/t) ≥ m - L  ⇔  t ≥ 2·rate/(m - L)
        let t = bound.valid_from.max(2.0 * bound.rate / gap);
        return Ok(Some(WanderingCertificate {
            delta: gap.sqrt(),
            t,
            basis: CertificateBasis::AnalyticBound {
                ceiling: bound.ceiling,
                rate: bound.rate,
                valid_from: bound.valid_from,
            },
            measure: mu_u.label(),
            mass,
            convention,
        }));
    }
    let Some(w) = fallback else {
        return Ok(None);
    };
    let ceiling = limsup_estimate(mu_u, w.t_lo, w.t_hi, w.samples, convention)?;
    if ceiling >= (1.0 - margin) * mass {
        return Ok(None);
    }
    let delta_sq = mass - ceiling;
    // last time on a uniform grid of [0, t_hi] where the orbit is still inside the ball
    let h = w.t_hi / w.samples as f64;
    let mut t = h;
    for i in (1..=w.samples).rev() {
        let ti = h * i as f64;
        if displacement_sq(mu_u, ti, convention)? < delta_sq {
            t = ti;
            break;
        }
    }
    Ok(Some(WanderingCertificate {
        delta: delta_sq.sqrt(),
        t,
        basis: CertificateBasis::SampledEstimate {
            ceiling,
            t_lo: w.t_lo,
            t_hi: w.t_hi,
            samples: w.samples,
        },
        measure: mu_u.label(),
        mass,
        convention,
    }))
}
