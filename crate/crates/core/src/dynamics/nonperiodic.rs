use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FrequencyFunction;
use crate::measure::{BorelSet, DensityMeasure, Interval};
use crate::profile::AmplitudeProfile;
use crate::quadrature::{integrate, GaussLegendre, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodTest {
    #[serde(rename = "T")]
    pub t: f64,
    /// `min D(m)` over `m ∈ [⌈m_max/2⌉, m_max]`.
    pub min_displacement: f64,
    pub argmin_m: usize,
    pub threshold: f64,
    /// `min_displacement ≥ threshold`: `T` is not a period at the tested range.
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonperiodicReport {
    pub interval: Interval,
    /// `∫_Δ r²ρ`.
    pub weighted_mass: f64,
    pub m_range: (usize, usize),
    pub tests: Vec<PeriodTest>,
    pub all_pass: bool,
}

/// `D(m) = ∫_Δ |r|² |e^{iTλ(k)m} - 1|² ρ dk` for `m` in the top half of
/// `1..=m_max`, compared with `½ ∫_Δ r²ρ` for each candidate period `T`.
///
/// For strictly monotone `λ`, `D(m) → 2∫_Δ r²ρ` by Riemann-Lebesgue, so a
/// period `T` would force `D(m) = 0` at every `m`.
pub fn nonperiodicity_check_ac(
    rho: &DensityMeasure,
    lambda: &FrequencyFunction,
    delta: Interval,
    r: &AmplitudeProfile,
    periods: &[f64],
    m_max: usize,
) -> Result<NonperiodicReport> {
    if !(delta.lo.is_finite() && delta.hi.is_finite() && delta.lo < delta.hi) {
        return Err(Error::param("interval", "requires finite lo < hi"));
    }
    if m_max < 2 {
        return Err(Error::param("m_max", "must be at least 2"));
    }
    if periods.is_empty() {
        return Err(Error::param("periods", "need at least one candidate period"));
    }
    if let Some(t) = periods.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::param("periods", format!("{t} is not a positive period")));
    }
    // monotonicity: λ' of one strict sign at interior quadrature nodes, so a
    // critical point at an end of Δ (as for √(k²+m²) at 0) is allowed
    let probes: Vec<f64> = GaussLegendre::order32().mapped(delta.lo, delta.hi).map(|(x, _)| x).collect();
    let slopes: Vec<f64> = probes.iter().map(|&x| lambda.derivative(x)).collect();
    if !(slopes.iter().all(|s| *s > 0.0) || slopes.iter().all(|s| *s < 0.0)) {
        return Err(Error::param(
            "frequency_function",
            "λ must be strictly monotone on the interval",
        ));
    }
    let max_slope = slopes.iter().fold(0.0_f64, |m, s| m.max(s.abs()));

    let restricted = rho
        .restrict(&BorelSet::interval(delta.lo, delta.hi))
        .ok_or_else(|| Error::Degenerate("ρ vanishes on the interval".into()))?;
    let profile = match &restricted.profile {
        Some(p) => p.clone().product(r.clone()),
        None => r.clone(),
    };
    let weighted = DensityMeasure {
        profile: Some(profile.clone()),
        ..restricted
    };
    let mass = weighted.total()?;
    if !(mass > 0.0) {
        return Err(Error::Degenerate("∫_Δ r²ρ vanishes".into()));
    }
    let threshold = 0.5 * mass;
    let pieces = weighted.smooth_pieces();
    let tol = 1e-10 * mass.max(1.0);

    let d = |t: f64, m: usize| -> Result<f64> {
        let omega = t * m as f64;
        let mut sum = 0.0;
        for (seg, pts) in &pieces {
            for w in pts.windows(2) {
                let opts = QuadOptions::with_tol(tol).for_oscillation(omega * max_slope, w[0], w[1]);
                let est = integrate(
                    |x| {
                        let s = (0.5 * omega * lambda.value(x)).sin();
                        // |e^{iθ} - 1|² = 4 sin²(θ/2)
                        seg.at(x) * profile.weight(x) * 4.0 * s * s
                    },
                    w[0],
                    w[1],
                    &opts,
                )?;
                sum += est.value;
            }
        }
        Ok(sum)
    };

    let m_lo = m_max.div_ceil(2);
    let mut tests = Vec::with_capacity(periods.len());
    for &t in periods {
        let values: Vec<(usize, f64)> = (m_lo..=m_max)
            .into_par_iter()
            .map(|m| d(t, m).map(|v| (m, v)))
            .collect::<Result<_>>()?;
        let (argmin_m, min_displacement) = values
            .into_iter()
            .reduce(|a, b| if b.1 < a.1 { b } else { a })
            .unwrap();
        tests.push(PeriodTest {
            t,
            min_displacement,
            argmin_m,
            threshold,
            pass: min_displacement >= threshold,
        });
    }
    Ok(NonperiodicReport {
        interval: delta,
        weighted_mass: mass,
        m_range: (m_lo, m_max),
        all_pass: tests.iter().all(|t| t.pass),
        tests,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_identity_matches_closed_form() {
        let rho = DensityMeasure::uniform(0.0, 1.0, 1.0);
        let rep = nonperiodicity_check_ac(
            &rho,
            &FrequencyFunction::Identity,
            Interval::new(0.0, 1.0),
            &AmplitudeProfile::unit(),
            &[1.0],
            200,
        )
        .unwrap();
        let oracle = (100..=200)
            .map(|m| {
                let x = m as f64;
                2.0 - 2.0 * x.sin() / x
            })
            .fold(f64::INFINITY, f64::min);
        assert!((rep.tests[0].min_displacement - oracle).abs() < 1e-9);
        assert!(rep.all_pass);
        assert_eq!(rep.m_range, (100, 200));
    }

    #[test]
    fn zero_period_is_rejected() {
        let rho = DensityMeasure::uniform(0.0, 1.0, 1.0);
        assert!(nonperiodicity_check_ac(
            &rho,
            &FrequencyFunction::Identity,
            Interval::new(0.0, 1.0),
            &AmplitudeProfile::unit(),
            &[0.0],
            10
        )
        .is_err());
    }

    #[test]
    fn interval_outside_support_is_degenerate() {
        let rho = DensityMeasure::uniform(0.0, 1.0, 1.0);
        assert!(nonperiodicity_check_ac(
            &rho,
            &FrequencyFunction::Identity,
            Interval::new(2.0, 3.0),
            &AmplitudeProfile::unit(),
            &[1.0],
            10
        )
        .is_err());
    }

    #[test]
    fn non_monotone_frequency_is_rejected() {
        let rho = DensityMeasure::uniform(-1.0, 1.0, 1.0);
        assert!(nonperiodicity_check_ac(
            &rho,
            &FrequencyFunction::SineGordon { m: 1.0 },
            Interval::new(-1.0, 1.0),
            &AmplitudeProfile::unit(),
            &[1.0],
            10
        )
        .is_err());
    }
}
