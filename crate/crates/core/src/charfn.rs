//! Characteristic functions `μ̂(t) = ∫ e^{-iωx} dμ(x)` and their decay.
//!
//! Two kernels are in use and are never mixed silently: the angular kernel
//! `e^{-itx}` (`ω = t`) and the cyclic kernel `e^{-2πitx}` (`ω = 2πt`).
//! Every operation takes the convention explicitly.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{AtomicMeasure, BernoulliPart, DensityMeasure, Measure, Segment};
use crate::quadrature::{integrate, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// `e^{-itx}`
    #[default]
    Angular,
    /// `e^{-2πitx}`
    Cyclic,
}

impl Convention {
    /// Angular frequency of the kernel at time `t`.
    pub fn omega(self, t: f64) -> f64 {
        match self {
            Convention::Angular => t,
            Convention::Cyclic => 2.0 * PI * t,
        }
    }

    /// Time in this convention corresponding to angular frequency `omega`.
    pub fn time_of(self, omega: f64) -> f64 {
        match self {
            Convention::Angular => omega,
            Convention::Cyclic => omega / (2.0 * PI),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Convention::Angular => "angular",
            Convention::Cyclic => "cyclic",
        }
    }
}

/// Truncation tolerance used when a Bernoulli factor appears inside [`charfn`].
pub const BERNOULLI_TOL: f64 = 1e-14;

/// Absolute tolerance for quadrature-backed evaluations.
pub const CHARFN_QUAD_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernoulliProduct {
    pub value: f64,
    /// Number of cosine factors multiplied.
    pub truncation_k: u32,
}

/// `∏_{k≥1} cos(2πtη^k)`, truncated once the remaining factors can move the
/// product by at most `tol`.
///
/// Uses `|∏ - ∏_{k≤K}| ≤ Σ_{k>K} (2πtη^k)²/2`.
pub fn bernoulli_product(eta: f64, t: f64, tol: f64) -> Result<BernoulliProduct> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::param("eta", "must lie in the open interval (0, 1)"));
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    if !t.is_finite() {
        return Err(Error::param("t", "must be finite"));
    }
    if t == 0.0 {
        return Ok(BernoulliProduct {
            value: 1.0,
            truncation_k: 0,
        });
    }
    let w = 2.0 * PI * t.abs();
    let tail_scale = 0.5 * w * w / (1.0 - eta * eta);
    let mut value = 1.0;
    let mut k = 0u32;
    let mut eta_k = 1.0; // η^k
    loop {
        // remainder after K = k factors: tail_scale · η^{2(k+1)}
        let next = eta_k * eta;
        if tail_scale * next * next <= tol {
            break;
        }
        k += 1;
        eta_k = next;
        value *= (w * eta_k).cos();
        if value == 0.0 {
            break;
        }
    }
    Ok(BernoulliProduct {
        value,
        truncation_k: k,
    })
}

/// A characteristic-function value with evaluation metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: Complex64,
    /// Largest Bernoulli truncation depth used, if any Bernoulli part was evaluated.
    pub truncation_k: Option<u32>,
}

/// `μ̂(t)` in the given convention.
pub fn charfn(mu: &Measure, t: f64, convention: Convention) -> Result<Complex64> {
    Ok(evaluate(mu, t, convention)?.value)
}

/// [`charfn`] together with the Bernoulli truncation depth.
pub fn evaluate(mu: &Measure, t: f64, convention: Convention) -> Result<Evaluation> {
    if !t.is_finite() {
        return Err(Error::param("t", "must be finite"));
    }
    eval_omega(mu, convention.omega(t))
}

fn eval_omega(mu: &Measure, omega: f64) -> Result<Evaluation> {
    Ok(match mu {
        Measure::Atomic(a) => Evaluation {
            value: atomic_omega(a, omega),
            truncation_k: None,
        },
        Measure::Density(d) => Evaluation {
            value: density_omega(d, omega)?,
            truncation_k: None,
        },
        Measure::Bernoulli(b) => {
            let p = bernoulli_product(b.eta, omega / (2.0 * PI), BERNOULLI_TOL)?;
            Evaluation {
                value: Complex64::new(p.value, 0.0),
                truncation_k: Some(p.truncation_k),
            }
        }
        Measure::BernoulliPart(p) => part_omega(p, omega)?,
        Measure::Mixture { components } => {
            let mut value = Complex64::new(0.0, 0.0);
            let mut k: Option<u32> = None;
            for c in components {
                let e = eval_omega(&c.measure, omega)?;
                value += e.value * c.coefficient;
                k = match (k, e.truncation_k) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    (a, b) => a.or(b),
                };
            }
            Evaluation {
                value,
                truncation_k: k,
            }
        }
    })
}

fn atomic_omega(a: &AtomicMeasure, omega: f64) -> Complex64 {
    a.atoms
        .iter()
        .map(|x| Complex64::from_polar(x.weight, -omega * x.at))
        .sum()
}

fn part_omega(p: &BernoulliPart, omega: f64) -> Result<Evaluation> {
    let mut value = Complex64::new(0.0, 0.0);
    let mut k = 0;
    for c in &p.pieces {
        let scaled = omega * p.eta.powi(c.depth as i32) / (2.0 * PI);
        let b = bernoulli_product(p.eta, scaled, BERNOULLI_TOL)?;
        k = k.max(b.truncation_k);
        value += Complex64::from_polar(c.weight, -omega * c.offset) * b.value;
    }
    Ok(Evaluation {
        value,
        truncation_k: Some(k),
    })
}

fn density_omega(d: &DensityMeasure, omega: f64) -> Result<Complex64> {
    let profile = match &d.profile {
        None => None,
        Some(p) => match p.as_constant() {
            Some(c) => return Ok(segments_omega(&d.segments(), omega) * (c * c)),
            None => Some(p),
        },
    };
    let Some(profile) = profile else {
        return Ok(segments_omega(&d.segments(), omega));
    };
    let pieces = d.smooth_pieces();
    let n: usize = pieces.iter().map(|(_, pts)| pts.len() - 1).sum();
    let tol = CHARFN_QUAD_TOL / n.max(1) as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for (seg, pts) in &pieces {
        for w in pts.windows(2) {
            let opts = QuadOptions::with_tol(tol).for_oscillation(omega, w[0], w[1]);
            let est = integrate(
                |x| Complex64::from_polar(seg.at(x) * profile.weight(x), -omega * x),
                w[0],
                w[1],
                &opts,
            )?;
            sum += est.value;
        }
    }
    Ok(sum)
}

/// `Σ ∫_{x0}^{x1} f(x) e^{-iωx} dx` over linear pieces, in closed form.
fn segments_omega(segs: &[Segment], omega: f64) -> Complex64 {
    segs.iter()
        .filter(|s| s.x1 > s.x0)
        .map(|s| {
            let h = s.x1 - s.x0;
            let (i0, i1) = linear_moments(omega * h);
            Complex64::from_polar(h, -omega * s.x0) * (i0 * s.f0 + i1 * (s.f1 - s.f0))
        })
        .sum()
}

/// `(∫_0^1 e^{-iθs} ds, ∫_0^1 s e^{-iθs} ds)`.
fn linear_moments(theta: f64) -> (Complex64, Complex64) {
    let z = Complex64::new(0.0, -theta);
    if theta.abs() < 0.5 {
        // Σ z^n/(n+1)! and Σ z^n/(n!(n+2))
        let mut i0 = Complex64::new(0.0, 0.0);
        let mut i1 = Complex64::new(0.0, 0.0);
        let mut zn_over_fact = Complex64::new(1.0, 0.0); // z^n / n!
        for n in 0..30 {
            let nf = n as f64;
            i0 += zn_over_fact / (nf + 1.0);
            i1 += zn_over_fact / (nf + 2.0);
            zn_over_fact = zn_over_fact * z / (nf + 1.0);
        }
        (i0, i1)
    } else {
        let e = z.exp();
        let iz = Complex64::new(0.0, theta);
        let i0 = (Complex64::new(1.0, 0.0) - e) / iz;
        let i1 = (i0 - e) / iz;
        (i0, i1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayKind {
    Exact,
    AnalyticBound,
    SampledEstimate,
}

/// `|μ̂(t)| ≤ ceiling + rate/|t|` for `|t| ≥ valid_from`, in `convention`.
///
/// `ceiling` bounds the limsup; `rate` quantifies how fast the bound is approached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayBound {
    pub ceiling: f64,
    pub rate: f64,
    pub valid_from: f64,
    pub kind: DecayKind,
    pub convention: Convention,
}

impl DecayBound {
    /// The bound at time `t`, or `None` if `|t| < valid_from`.
    pub fn at(&self, t: f64) -> Option<f64> {
        let t = t.abs();
        if t < self.valid_from || (self.rate > 0.0 && t == 0.0) {
            return None;
        }
        let r = if self.rate > 0.0 { self.rate / t } else { 0.0 };
        Some(self.ceiling + r)
    }
}

/// Weight fraction allowed to sit below the depth at which a Bernoulli part's
/// ceiling is applied.
const PART_DEPTH_SLACK: f64 = 1e-3;

/// Analytic ceiling on `limsup |μ̂|`.
///
/// Atomic measures get `‖μ‖` (no decay is guaranteed); densities get 0 with
/// rate equal to the total variation of the density; Bernoulli measures get
/// `max(|cos πη|, |cos πη²|)` past `t = 1/(2η)` (cyclic).
pub fn analytic_decay_bound(mu: &Measure, convention: Convention) -> Result<DecayBound> {
    let to_conv = |angular_rate: f64| match convention {
        Convention::Angular => angular_rate,
        Convention::Cyclic => angular_rate / (2.0 * PI),
    };
    Ok(match mu {
        Measure::Atomic(a) => DecayBound {
            ceiling: a.listed_mass() + a.tail_mass_bound,
            rate: 0.0,
            valid_from: 0.0,
            kind: DecayKind::Exact,
            convention,
        },
        Measure::Density(d) => DecayBound {
            ceiling: 0.0,
            rate: to_conv(d.density_variation()),
            valid_from: 0.0,
            kind: DecayKind::AnalyticBound,
            convention,
        },
        Measure::Bernoulli(b) => DecayBound {
            ceiling: bernoulli_ceiling(b.eta),
            rate: 0.0,
            valid_from: convention.time_of(2.0 * PI / (2.0 * b.eta)),
            kind: DecayKind::AnalyticBound,
            convention,
        },
        Measure::BernoulliPart(p) => part_bound(p, convention),
        Measure::Mixture { components } => {
            let mut out = DecayBound {
                ceiling: 0.0,
                rate: 0.0,
                valid_from: 0.0,
                kind: DecayKind::Exact,
                convention,
            };
            for c in components {
                let b = analytic_decay_bound(&c.measure, convention)?;
                out.ceiling += c.coefficient * b.ceiling;
                out.rate += c.coefficient * b.rate;
                out.valid_from = out.valid_from.max(b.valid_from);
                out.kind = weaker(out.kind, b.kind);
            }
            out
        }
    })
}

fn weaker(a: DecayKind, b: DecayKind) -> DecayKind {
    use DecayKind::*;
    match (a, b) {
        (SampledEstimate, _) | (_, SampledEstimate) => SampledEstimate,
        (AnalyticBound, _) | (_, AnalyticBound) => AnalyticBound,
        _ => Exact,
    }
}

/// `max(|cos πη|, |cos πη²|)`.
pub fn bernoulli_ceiling(eta: f64) -> f64 {
    (PI * eta).cos().abs().max((PI * eta * eta).cos().abs())
}

fn part_bound(p: &BernoulliPart, convention: Convention) -> DecayBound {
    let c = bernoulli_ceiling(p.eta);
    let total = p.mass();
    let max_depth = p.pieces.iter().map(|x| x.depth).max().unwrap_or(0);
    // smallest depth k0 such that pieces deeper than k0 carry little weight
    let mut k0 = max_depth;
    for d in 0..=max_depth {
        let deeper: f64 = p.pieces.iter().filter(|x| x.depth > d).map(|x| x.weight).sum();
        if deeper <= PART_DEPTH_SLACK * total {
            k0 = d;
            break;
        }
    }
    let ceiling: f64 = p
        .pieces
        .iter()
        .map(|x| if x.depth <= k0 { x.weight * c } else { x.weight })
        .sum();
    // a depth-d piece sees μ̂_η at cyclic time s·η^d
    let cyclic_from = 0.5 / p.eta * p.eta.powi(-(k0 as i32));
    DecayBound {
        ceiling,
        rate: 0.0,
        valid_from: convention.time_of(2.0 * PI * cyclic_from),
        kind: DecayKind::AnalyticBound,
        convention,
    }
}

/// Logarithmically spaced grid of `samples` points on `[t_lo, t_hi]`.
pub fn log_grid(t_lo: f64, t_hi: f64, samples: usize) -> Vec<f64> {
    let ratio = (t_hi / t_lo).ln();
    (0..samples)
        .map(|i| {
            if i + 1 == samples {
                t_hi
            } else {
                t_lo * (ratio * i as f64 / (samples - 1) as f64).exp()
            }
        })
        .collect()
}

/// `max |μ̂(t)|` over a logarithmic grid on `[t_lo, t_hi]`: a finite-window
/// proxy for `limsup |μ̂|`.
pub fn limsup_estimate(
    mu: &Measure,
    t_lo: f64,
    t_hi: f64,
    samples: usize,
    convention: Convention,
) -> Result<f64> {
    if !(t_lo > 0.0 && t_hi > t_lo && t_hi.is_finite()) {
        return Err(Error::param("window", "requires 0 < t_lo < t_hi < ∞"));
    }
    if samples < 2 {
        return Err(Error::param("samples", "at least 2 samples are required"));
    }
    let grid = log_grid(t_lo, t_hi, samples);
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&t| charfn(mu, t, convention).map(|z| z.norm()))
        .collect::<Result<_>>()?;
    Ok(values.into_iter().fold(0.0, f64::max))
}

/// `2‖μ_u‖ - 2 Re μ̂_u(t) = ‖Φ_t u - u‖²`, clamped to `[0, 4‖μ_u‖]`.
///
/// Declared atom tails are excluded: they have no phases to compare.
pub fn displacement_sq(mu_u: &Measure, t: f64, convention: Convention) -> Result<f64> {
    let mass = mu_u.resolved_mass()?;
    let z = charfn(mu_u, t, convention)?;
    Ok((2.0 * mass - 2.0 * z.re).clamp(0.0, 4.0 * mass))
}
