use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{CountableState, FrequencySequence, RadiiRule};

/// Upper limit on the prefix length chosen from a radii rule.
pub const MAX_RECURRENCE_PREFIX: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceOptions {
    pub epsilon: f64,
    pub t_min: f64,
    pub t_max: f64,
    /// Grid step; defaults to `π/(4 λ_max)` and may not exceed it.
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default = "default_max_returns")]
    pub max_returns: usize,
}

fn default_max_returns() -> usize {
    1000
}

impl RecurrenceOptions {
    pub fn new(epsilon: f64, t_min: f64, t_max: f64) -> Self {
        RecurrenceOptions {
            epsilon,
            t_min,
            t_max,
            step: None,
            max_returns: default_max_returns(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnTime {
    pub t: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecurrenceVerdict {
    ReturnsFound,
    NoneFoundWithinHorizon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceReport {
    pub epsilon: f64,
    pub t_min: f64,
    pub scan_horizon: f64,
    pub scan_step: f64,
    pub prefix: usize,
    /// Bound on `Σ_{k>N} r_k²`; below `ε²/8`.
    pub tail_energy_bound: f64,
    /// Local minima of `‖Φ_t u - u‖` below `ε` with `t > t_min`, in time order.
    pub return_times: Vec<ReturnTime>,
    /// Smallest refined distance seen after `t_min`.
    pub closest: Option<ReturnTime>,
    /// More returns existed than `max_returns`.
    pub truncated: bool,
    pub verdict: RecurrenceVerdict,
}

/// `‖Φ_t z - z‖` on a prefix: `(Σ 4 r_k² sin²(λ_k t/2))^{1/2}`.
pub fn return_distance(radii: &[f64], lambdas: &[f64], t: f64) -> f64 {
    radii
        .iter()
        .zip(lambdas)
        .map(|(r, l)| {
            let s = r * (0.5 * l * t).sin();
            4.0 * s * s
        })
        .sum::<f64>()
        .sqrt()
}

/// Scans `t ∈ (t_min, t_max]` for returns of the orbit of `state` to its
/// `ε`-ball. Phases do not matter: `|e^{iλt}z - z| = r|e^{iλt} - 1|`.
///
/// The state's omitted tail must satisfy `Σ_{k>N} r_k² < ε²/8`.
pub fn recurrence_search(
    state: &CountableState,
    lambdas: &[f64],
    opts: &RecurrenceOptions,
) -> Result<RecurrenceReport> {
    let eps = opts.epsilon;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::param("epsilon", "must be positive and finite"));
    }
    if !(opts.t_min.is_finite() && opts.t_max.is_finite() && opts.t_min < opts.t_max) {
        return Err(Error::param("t_max", "requires finite t_min < t_max"));
    }
    if lambdas.len() != state.torus.len() {
        return Err(Error::Mismatch(format!(
            "{} frequencies for {} modes",
            lambdas.len(),
            state.torus.len()
        )));
    }
    let tail = state.torus.tail_energy_bound;
    if tail >= eps * eps / 8.0 {
        return Err(Error::param(
            "prefix",
            format!("omitted energy {tail:.3e} is not below ε²/8 = {:.3e}", eps * eps / 8.0),
        ));
    }
    let radii = &state.torus.radii;
    let lambda_max = lambdas.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    if lambda_max == 0.0 {
        return Err(Error::Degenerate("all frequencies vanish".into()));
    }
    let guard = PI / (4.0 * lambda_max);
    let h = match opts.step {
        None => guard,
        Some(s) if s > 0.0 && s <= guard * (1.0 + 1e-12) => s,
        Some(s) => {
            return Err(Error::param(
                "step",
                format!("step {s} is coarser than π/(4 λ_max) = {guard}"),
            ))
        }
    };
    // ‖Φ_t u - u‖ is Lipschitz in t with constant ‖λu‖
    let lip = radii
        .iter()
        .zip(lambdas)
        .map(|(r, l)| (r * l) * (r * l))
        .sum::<f64>()
        .sqrt();
    let threshold = eps + 0.5 * lip * h;
    let n = ((opts.t_max - opts.t_min) / h).ceil() as usize;
    let d = |t: f64| return_distance(radii, lambdas, t);

    let mut minima: Vec<ReturnTime> = (0..=n)
        .into_par_iter()
        .filter_map(|i| {
            let t = (opts.t_min + h * i as f64).min(opts.t_max);
            if d(t) >= threshold {
                return None;
            }
            let lo = (t - h).max(opts.t_min);
            let hi = (t + h).min(opts.t_max);
            let (tm, dm) = golden_min(&d, lo, hi);
            // the grid point itself may beat the refinement at a boundary
            let (tm, dm) = if d(t) < dm { (t, d(t)) } else { (tm, dm) };
            (tm > opts.t_min).then_some(ReturnTime { t: tm, distance: dm })
        })
        .collect();

    // merge refinements of the same well
    let mut merged: Vec<ReturnTime> = Vec::with_capacity(minima.len());
    minima.sort_by(|a, b| a.t.total_cmp(&b.t));
    for m in minima {
        match merged.last_mut() {
            Some(last) if m.t - last.t <= h => {
                if m.distance < last.distance {
                    *last = m;
                }
            }
            _ => merged.push(m),
        }
    }
    let closest = merged
        .iter()
        .copied()
        .min_by(|a, b| a.distance.total_cmp(&b.distance));
    let mut return_times: Vec<ReturnTime> =
        merged.into_iter().filter(|m| m.distance < eps).collect();
    let truncated = return_times.len() > opts.max_returns;
    return_times.truncate(opts.max_returns);
    let verdict = if return_times.is_empty() {
        RecurrenceVerdict::NoneFoundWithinHorizon
    } else {
        RecurrenceVerdict::ReturnsFound
    };
    Ok(RecurrenceReport {
        epsilon: eps,
        t_min: opts.t_min,
        scan_horizon: opts.t_max,
        scan_step: h,
        prefix: radii.len(),
        tail_energy_bound: tail,
        return_times,
        closest,
        truncated,
        verdict,
    })
}

/// [`recurrence_search`] on the shortest prefix of `radii` whose tail is below `ε²/8`.
pub fn recurrence_search_rule(
    freqs: &FrequencySequence,
    radii: &RadiiRule,
    opts: &RecurrenceOptions,
) -> Result<RecurrenceReport> {
    let eps = opts.epsilon;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::param("epsilon", "must be positive and finite"));
    }
    let limit = MAX_RECURRENCE_PREFIX.min(freqs.max_prefix());
    let n = radii.prefix_for_tail(eps * eps / 8.0, limit)?.max(1);
    let torus = radii.prefix(n)?;
    let lambdas = freqs.values(n)?;
    recurrence_search(&CountableState::at_zero_phase(torus), &lambdas, opts)
}

/// Golden-section minimization of `f` on `[a, b]`.
fn golden_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * a.abs().max(b.abs()).max(1.0) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::CountableTorus;

    fn state(r: &[f64]) -> CountableState {
        CountableState::at_zero_phase(CountableTorus::new(r.to_vec(), 0.0).unwrap())
    }

    #[test]
    fn equal_frequencies_return_at_two_pi() {
        let rep = recurrence_search(&state(&[1.0, 1.0]), &[1.0, 1.0], &RecurrenceOptions::new(1e-6, 1.0, 10.0)).unwrap();
        assert_eq!(rep.verdict, RecurrenceVerdict::ReturnsFound);
        assert_eq!(rep.return_times.len(), 1);
        assert!((rep.return_times[0].t - 2.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn unit_fractions_return_at_twelve_pi() {
        let l = [1.0, 0.5, 1.0 / 3.0];
        let rep = recurrence_search(&state(&[1.0, 0.7, 0.2]), &l, &RecurrenceOptions::new(1e-6, 1.0, 40.0)).unwrap();
        assert_eq!(rep.return_times.len(), 1);
        assert!((rep.return_times[0].t - 12.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn coarse_step_is_rejected() {
        let mut o = RecurrenceOptions::new(0.1, 0.0, 10.0);
        o.step = Some(1.0);
        assert!(recurrence_search(&state(&[1.0]), &[2.0], &o).is_err());
    }

    #[test]
    fn prefix_must_control_tail() {
        let t = CountableTorus::new(vec![1.0], 0.01).unwrap();
        let s = CountableState::at_zero_phase(t);
        assert!(recurrence_search(&s, &[1.0], &RecurrenceOptions::new(0.1, 0.0, 10.0)).is_err());
    }
}
