//! Invariant tori, states on them, and the linear flow `z_k ↦ e^{iλ_k t} z_k`.
//!
//! States store moduli and phases separately. Phases are fixed-point turns
//! (`u128`, wrapping) and times are fixed-point ticks, so the flow acts on
//! phases by exact modular addition: torus membership, the group law,
//! reversibility and unitarity hold bit for bit.

use std::f64::consts::PI;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::commensura::Frequency;
use crate::error::{Error, FieldError, Result};
use crate::measure::Measure;
use crate::profile::AmplitudeProfile;
use crate::quadrature::GaussLegendre;

const TWO_POW_128: f64 = 340282366920938463463374607431768211456.0;

/// An angle as a fraction of a full turn, in units of `2^-128` turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Phase(pub u128);

impl Phase {
    /// Nearest phase to `x` turns; `from_turns(-x) == -from_turns(x)`.
    pub fn from_turns(x: f64) -> Phase {
        let a = x.abs();
        let frac = a - a.trunc();
        let raw = (frac * TWO_POW_128) as u128;
        Phase(if x < 0.0 { raw.wrapping_neg() } else { raw })
    }

    pub fn from_radians(theta: f64) -> Phase {
        Phase::from_turns(theta / (2.0 * PI))
    }

    /// In `[0, 1)`.
    pub fn turns(self) -> f64 {
        self.0 as f64 / TWO_POW_128
    }

    /// In `[0, 2π)`.
    pub fn radians(self) -> f64 {
        let r = 2.0 * PI * self.turns();
        if r >= 2.0 * PI {
            0.0
        } else {
            r
        }
    }

    /// `|e^{iθ} - 1|`, computed from the signed turn offset.
    pub fn chord(self) -> f64 {
        let signed = self.0 as i128 as f64 / TWO_POW_128;
        2.0 * (PI * signed).sin().abs()
    }

    pub fn cis(self) -> Complex64 {
        let a = self.radians();
        Complex64::new(a.cos(), a.sin())
    }
}

impl Add for Phase {
    type Output = Phase;
    fn add(self, o: Phase) -> Phase {
        Phase(self.0.wrapping_add(o.0))
    }
}

impl Sub for Phase {
    type Output = Phase;
    fn sub(self, o: Phase) -> Phase {
        Phase(self.0.wrapping_sub(o.0))
    }
}

impl Neg for Phase {
    type Output = Phase;
    fn neg(self) -> Phase {
        Phase(self.0.wrapping_neg())
    }
}

/// Fixed-point time in units of `2^-32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct FlowTime(pub i128);

impl FlowTime {
    pub const TICKS_PER_UNIT: f64 = 4294967296.0;

    /// Nearest representable time; rejects non-finite or astronomically large `t`.
    pub fn new(t: f64) -> Result<FlowTime> {
        if !(t.is_finite() && t.abs() < 1e27) {
            return Err(Error::param("t", format!("time {t} is not representable")));
        }
        Ok(FlowTime((t * Self::TICKS_PER_UNIT).round() as i128))
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / Self::TICKS_PER_UNIT
    }
}

impl Add for FlowTime {
    type Output = FlowTime;
    fn add(self, o: FlowTime) -> FlowTime {
        FlowTime(self.0 + o.0)
    }
}

impl Sub for FlowTime {
    type Output = FlowTime;
    fn sub(self, o: FlowTime) -> FlowTime {
        FlowTime(self.0 - o.0)
    }
}

impl Neg for FlowTime {
    type Output = FlowTime;
    fn neg(self) -> FlowTime {
        FlowTime(-self.0)
    }
}

/// Phase advance per tick for angular frequency `lambda`.
fn phase_rate(lambda: f64) -> u128 {
    // λ/(2π) turns per unit time = λ/(2π)·2^-32 turns per tick
    Phase::from_turns(lambda / (2.0 * PI) / FlowTime::TICKS_PER_UNIT).0
}

fn advance(phases: &[Phase], lambdas: &[f64], t: FlowTime) -> Vec<Phase> {
    let ticks = t.0 as u128; // only the residue mod 2^128 matters
    phases
        .iter()
        .zip(lambdas)
        .map(|(p, &l)| *p + Phase(phase_rate(l).wrapping_mul(ticks)))
        .collect()
}

/// Radii `r_k` of a torus as a rule in `k = 1, 2, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum RadiiRule {
    /// Finitely many listed radii; `tail_energy_bound` bounds `Σ r_k²` beyond the list.
    Explicit {
        radii: Vec<f64>,
        #[serde(default)]
        tail_energy_bound: f64,
    },
    /// `r_k = a q^k`, `0 < q < 1`.
    Geometric { a: f64, q: f64 },
    /// `r_k = a k^{-s}`, `s > 1/2`.
    Power { a: f64, s: f64 },
}

impl RadiiRule {
    /// `r_k` for `k ≥ 1`, `None` past an explicit list.
    pub fn radius(&self, k: usize) -> Option<f64> {
        match self {
            RadiiRule::Explicit { radii, .. } => radii.get(k.checked_sub(1)?).copied(),
            RadiiRule::Geometric { a, q } => Some(a * q.powi(k as i32)),
            RadiiRule::Power { a, s } => Some(a * (k as f64).powf(-s)),
        }
    }

    /// Certified bound on `Σ_{k>n} r_k²`.
    pub fn tail_bound(&self, n: usize) -> f64 {
        match self {
            RadiiRule::Explicit {
                radii,
                tail_energy_bound,
            } => {
                radii.iter().skip(n).map(|r| r * r).sum::<f64>() + tail_energy_bound
            }
            RadiiRule::Geometric { a, q } => {
                a * a * q.powi(2 * (n as i32 + 1)) / (1.0 - q * q)
            }
            RadiiRule::Power { a, s } => {
                // Σ_{k>n} k^{-2s} ≤ ∫_n^∞ x^{-2s} dx for n ≥ 1
                if n == 0 {
                    a * a * (1.0 + 1.0 / (2.0 * s - 1.0))
                } else {
                    a * a * (n as f64).powf(1.0 - 2.0 * s) / (2.0 * s - 1.0)
                }
            }
        }
    }

    /// Longest prefix available (unbounded rules report `usize::MAX`).
    pub fn max_prefix(&self) -> usize {
        match self {
            RadiiRule::Explicit { radii, .. } => radii.len(),
            _ => usize::MAX,
        }
    }

    /// Shortest prefix whose tail bound is below `bound`.
    pub fn prefix_for_tail(&self, bound: f64, limit: usize) -> Result<usize> {
        let limit = limit.min(self.max_prefix());
        // tail bounds are nonincreasing in n
        let (mut lo, mut hi) = (0usize, limit);
        if self.tail_bound(hi) >= bound {
            return Err(Error::Degenerate(format!(
                "tail bound {:.3e} at prefix {hi} does not drop below {bound:.3e}",
                self.tail_bound(hi)
            )));
        }
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.tail_bound(mid) < bound {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(lo)
    }

    pub fn is_nondegenerate(&self) -> bool {
        match self {
            RadiiRule::Explicit { radii, .. } => radii.iter().all(|r| *r > 0.0),
            RadiiRule::Geometric { a, .. } | RadiiRule::Power { a, .. } => *a > 0.0,
        }
    }

    pub fn prefix(&self, n: usize) -> Result<CountableTorus> {
        if n > self.max_prefix() {
            return Err(Error::param(
                "prefix",
                format!("only {} radii are listed, {n} requested", self.max_prefix()),
            ));
        }
        let radii = (1..=n).map(|k| self.radius(k).unwrap()).collect();
        CountableTorus::new(radii, self.tail_bound(n))
    }

    pub fn validate(&self) -> std::result::Result<(), FieldError> {
        match self {
            RadiiRule::Explicit {
                radii,
                tail_energy_bound,
            } => {
                if radii.is_empty() {
                    return Err(FieldError::new("radii", "must not be empty"));
                }
                if let Some(i) = radii.iter().position(|r| !(r.is_finite() && *r >= 0.0)) {
                    return Err(FieldError::new(format!("radii[{i}]"), "must be finite and nonnegative"));
                }
                if !(tail_energy_bound.is_finite() && *tail_energy_bound >= 0.0) {
                    return Err(FieldError::new("tail_energy_bound", "must be finite and nonnegative"));
                }
            }
            RadiiRule::Geometric { a, q } => {
                if !(a.is_finite() && *a >= 0.0) {
                    return Err(FieldError::new("a", "must be finite and nonnegative"));
                }
                if !(*q > 0.0 && *q < 1.0) {
                    return Err(FieldError::new("q", "must lie in the open interval (0, 1)"));
                }
            }
            RadiiRule::Power { a, s } => {
                if !(a.is_finite() && *a >= 0.0) {
                    return Err(FieldError::new("a", "must be finite and nonnegative"));
                }
                if !(s.is_finite() && *s > 0.5) {
                    return Err(FieldError::new("s", "must exceed 1/2 for square-summable radii"));
                }
            }
        }
        Ok(())
    }
}

/// A finite prefix of a torus `{|z_k| = r_k}` with a bound on the omitted energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountableTorus {
    pub radii: Vec<f64>,
    pub tail_energy_bound: f64,
}

impl CountableTorus {
    pub fn new(radii: Vec<f64>, tail_energy_bound: f64) -> Result<Self> {
        if radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::param("radii", "must be finite and nonnegative"));
        }
        if !(tail_energy_bound.is_finite() && tail_energy_bound >= 0.0) {
            return Err(Error::param("tail_energy_bound", "must be finite and nonnegative"));
        }
        Ok(CountableTorus {
            radii,
            tail_energy_bound,
        })
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// `Σ r_k²` over the prefix.
    pub fn prefix_energy(&self) -> f64 {
        self.radii.iter().map(|r| r * r).sum()
    }

    /// `‖r‖` over the prefix.
    pub fn norm(&self) -> f64 {
        self.prefix_energy().sqrt()
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.radii.iter().all(|r| *r > 0.0)
    }
}

/// A point `z_k = r_k e^{iθ_k}` of a countable torus prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct CountableState {
    pub torus: CountableTorus,
    pub phases: Vec<Phase>,
}

/// `q = Re z`, `p = Im z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizedState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl RealizedState {
    /// First integrals `I_k = q_k² + p_k²`.
    pub fn actions(&self) -> Vec<f64> {
        self.q.iter().zip(&self.p).map(|(q, p)| q * q + p * p).collect()
    }
}

fn check_len(what: &str, want: usize, got: usize) -> Result<()> {
    if want != got {
        return Err(Error::Mismatch(format!("{what}: expected {want} entries, got {got}")));
    }
    Ok(())
}

impl CountableState {
    pub fn new(torus: CountableTorus, phases_radians: &[f64]) -> Result<Self> {
        check_len("phases", torus.len(), phases_radians.len())?;
        let phases = phases_radians.iter().map(|&t| Phase::from_radians(t)).collect();
        Ok(CountableState { torus, phases })
    }

    pub fn at_zero_phase(torus: CountableTorus) -> Self {
        let phases = vec![Phase::default(); torus.len()];
        CountableState { torus, phases }
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.torus
            .radii
            .iter()
            .zip(&self.phases)
            .map(|(r, p)| p.cis() * *r)
            .collect()
    }

    pub fn realize(&self) -> RealizedState {
        realize(&self.values())
    }

    /// `I_k = r_k²`, exact by construction.
    pub fn actions(&self) -> Vec<f64> {
        self.torus.radii.iter().map(|r| r * r).collect()
    }

    pub fn evolve(&self, lambdas: &[f64], t: f64) -> Result<Self> {
        self.evolve_ticks(lambdas, FlowTime::new(t)?)
    }

    pub fn evolve_ticks(&self, lambdas: &[f64], t: FlowTime) -> Result<Self> {
        check_len("frequencies", self.phases.len(), lambdas.len())?;
        Ok(CountableState {
            torus: self.torus.clone(),
            phases: advance(&self.phases, lambdas, t),
        })
    }

    /// `‖a - b‖` over the prefix.
    pub fn distance(&self, other: &CountableState) -> Result<f64> {
        if self.torus.radii != other.torus.radii {
            return Err(Error::Mismatch("states lie on different tori".into()));
        }
        Ok(self
            .torus
            .radii
            .iter()
            .zip(self.phases.iter().zip(&other.phases))
            .map(|(r, (a, b))| {
                let c = r * (*a - *b).chord();
                c * c
            })
            .sum::<f64>()
            .sqrt())
    }

    /// Bounds `(lower, upper)` on the distance of full states agreeing with
    /// these prefixes: omitted modes add at most `4 Σ_{k>N} r_k²` to `‖a-b‖²`.
    pub fn distance_bounds(&self, other: &CountableState) -> Result<(f64, f64)> {
        let d = self.distance(other)?;
        Ok((d, (d * d + 4.0 * self.torus.tail_energy_bound).sqrt()))
    }

    /// Distance from a full state to its prefix projection, at most `√(Σ_{k>N} r_k²)`.
    pub fn projection_error(&self) -> f64 {
        self.torus.tail_energy_bound.sqrt()
    }

    /// `H = Σ (λ_k/2)(q_k² + p_k²)` from the realized coordinates.
    pub fn energy(&self, lambdas: &[f64]) -> Result<f64> {
        check_len("frequencies", self.phases.len(), lambdas.len())?;
        let r = self.realize();
        Ok(lambdas
            .iter()
            .zip(r.q.iter().zip(&r.p))
            .map(|(l, (q, p))| 0.5 * l * (q * q + p * p))
            .sum())
    }
}

/// `R(u) = (Re u, Im u)`.
pub fn realize(u: &[Complex64]) -> RealizedState {
    RealizedState {
        q: u.iter().map(|z| z.re).collect(),
        p: u.iter().map(|z| z.im).collect(),
    }
}

/// `⟨u, v⟩ = Σ u_k conj(v_k)`.
pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a * b.conj()).sum()
}

/// `ω(u, v) = -Im⟨u, v⟩ = Σ (q_u p_v - p_u q_v)`.
pub fn symplectic_form(u: &[Complex64], v: &[Complex64]) -> Result<f64> {
    check_len("vectors", u.len(), v.len())?;
    Ok(-inner(u, v).im)
}

/// The complex structure `J u = -i u`, so that `ω(u, v) = Re⟨u, J v⟩`,
/// `J² = -1`, and `J g_j = -f_j` for `g_j = e_j`, `f_j = i e_j`.
pub fn apply_j(u: &[Complex64]) -> Vec<Complex64> {
    u.iter().map(|z| Complex64::new(z.im, -z.re)).collect()
}

/// Realized basis of an `n`-mode prefix, ordered `g_1, f_1, …, g_n, f_n`
/// with `g_j = e_j` and `f_j = i e_j`.
pub fn symplectic_basis(n: usize) -> Vec<Vec<Complex64>> {
    let mut out = Vec::with_capacity(2 * n);
    for j in 0..n {
        for unit in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            v[j] = unit;
            out.push(v);
        }
    }
    out
}

/// Gram matrix `ω(b_a, b_b)` of [`symplectic_basis`].
pub fn symplectic_gram(n: usize) -> Vec<Vec<f64>> {
    let basis = symplectic_basis(n);
    basis
        .iter()
        .map(|a| basis.iter().map(|b| -inner(a, b).im).collect())
        .collect()
}

/// A dispersion relation `λ(x)` on the parameter line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FrequencyFunction {
    /// `λ(x) = x`
    Identity,
    /// `λ(x) = scale · x`
    Linear { scale: f64 },
    /// `λ(x) = √(x² + m²)`
    SineGordon { m: f64 },
}

impl FrequencyFunction {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            FrequencyFunction::Identity => x,
            FrequencyFunction::Linear { scale } => scale * x,
            FrequencyFunction::SineGordon { m } => x.hypot(*m),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            FrequencyFunction::Identity => 1.0,
            FrequencyFunction::Linear { scale } => *scale,
            FrequencyFunction::SineGordon { m } => {
                let h = x.hypot(*m);
                if h == 0.0 {
                    0.0
                } else {
                    x / h
                }
            }
        }
    }

    pub fn validate(&self) -> std::result::Result<(), FieldError> {
        match self {
            FrequencyFunction::Identity => Ok(()),
            FrequencyFunction::Linear { scale } if scale.is_finite() => Ok(()),
            FrequencyFunction::Linear { .. } => Err(FieldError::new("scale", "must be finite")),
            FrequencyFunction::SineGordon { m } if m.is_finite() => Ok(()),
            FrequencyFunction::SineGordon { .. } => Err(FieldError::new("m", "must be finite")),
        }
    }
}

/// A frequency sequence `λ_k`, `k = 1, 2, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum FrequencySequence {
    Explicit { values: Vec<Frequency> },
    /// `λ_k = scale · k`
    Linear { scale: Frequency },
    /// `λ_k = scale / k!`
    Factorial {
        #[serde(default = "unit_frequency")]
        scale: Frequency,
    },
    /// `λ_k = √(k² + m²)`
    SineGordon { m: Frequency },
}

fn unit_frequency() -> Frequency {
    Frequency::integer(1)
}

impl FrequencySequence {
    pub fn max_prefix(&self) -> usize {
        match self {
            FrequencySequence::Explicit { values } => values.len(),
            _ => usize::MAX,
        }
    }

    /// `λ_k` for `k ≥ 1`.
    pub fn term(&self, k: usize) -> Result<Frequency> {
        if k == 0 {
            return Err(Error::param("k", "modes are numbered from 1"));
        }
        let kk = BigRational::from_integer(BigInt::from(k));
        Ok(match self {
            FrequencySequence::Explicit { values } => values.get(k - 1).cloned().ok_or_else(|| {
                Error::param("prefix", format!("only {} frequencies are listed", values.len()))
            })?,
            FrequencySequence::Linear { scale } => scale.scale(&kk),
            FrequencySequence::Factorial { scale } => {
                let f: BigInt = (1..=k).fold(BigInt::one(), |a, j| a * j);
                scale.scale(&BigRational::new(BigInt::one(), f))
            }
            FrequencySequence::SineGordon { m } => match m {
                Frequency::Exact(m) => {
                    let s = &kk * &kk + m * m;
                    Frequency::parse(&format!("sqrt({s})"))?
                }
                Frequency::Real { value, label, .. } => Frequency::real(
                    (k as f64).hypot(*value),
                    format!("sqrt({k}^2+({label})^2)"),
                ),
            },
        })
    }

    pub fn prefix(&self, n: usize) -> Result<Vec<Frequency>> {
        if n > self.max_prefix() {
            return Err(Error::param(
                "prefix",
                format!("only {} frequencies are listed, {n} requested", self.max_prefix()),
            ));
        }
        (1..=n).map(|k| self.term(k)).collect()
    }

    /// `λ_k` as floating point for a prefix.
    pub fn values(&self, n: usize) -> Result<Vec<f64>> {
        Ok(self.prefix(n)?.iter().map(Frequency::value).collect())
    }

    /// Growth exponent `g` with `λ_k = O(k^g)`, used for the energy-domain check.
    fn growth(&self) -> Option<f64> {
        match self {
            FrequencySequence::Explicit { .. } => None,
            FrequencySequence::Linear { .. } | FrequencySequence::SineGordon { .. } => Some(1.0),
            FrequencySequence::Factorial { .. } => Some(0.0),
        }
    }

    pub fn validate(&self) -> std::result::Result<(), FieldError> {
        let check = |f: &Frequency, path: &str| {
            f.check_positive().map_err(|_| FieldError::new(path, "must be positive"))
        };
        match self {
            FrequencySequence::Explicit { values } => {
                if values.is_empty() {
                    return Err(FieldError::new("values", "must not be empty"));
                }
                for (i, v) in values.iter().enumerate() {
                    check(v, &format!("values[{i}]"))?;
                }
                Ok(())
            }
            FrequencySequence::Linear { scale } | FrequencySequence::Factorial { scale } => {
                check(scale, "scale")
            }
            FrequencySequence::SineGordon { m } => {
                if m.value() < 0.0 {
                    return Err(FieldError::new("m", "must be nonnegative"));
                }
                Ok(())
            }
        }
    }
}

/// Checks that `Σ λ_k r_k²` converges for the full sequences, so the
/// Hamiltonian is finite on the torus.
pub fn check_energy_domain(freqs: &FrequencySequence, radii: &RadiiRule) -> Result<()> {
    let Some(g) = freqs.growth() else {
        return Ok(());
    };
    match radii {
        RadiiRule::Explicit { tail_energy_bound, .. } => {
            if g > 0.0 && *tail_energy_bound > 0.0 {
                return Err(Error::Degenerate(
                    "energy of the unlisted tail is not controlled for unbounded frequencies".into(),
                ));
            }
            Ok(())
        }
        RadiiRule::Geometric { .. } => Ok(()),
        RadiiRule::Power { s, .. } => {
            // Σ k^{g - 2s} < ∞ iff 2s - g > 1
            if 2.0 * s - g > 1.0 {
                Ok(())
            } else {
                Err(Error::Degenerate(format!(
                    "Σ λ_k r_k² diverges: λ_k grows like k^{g} and r_k² like k^-{}",
                    2.0 * s
                )))
            }
        }
    }
}

/// Depth of the digit tree used to place nodes on a Bernoulli measure.
const BERNOULLI_NODE_DEPTH: u32 = 12;

/// A function `u` on the nodes of a discretized measure.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousState {
    pub nodes: Vec<f64>,
    /// Quadrature weights of `μ` at the nodes.
    pub weights: Vec<f64>,
    /// `r(x_j) = |u(x_j)|`.
    pub amplitudes: Vec<f64>,
    pub phases: Vec<Phase>,
}

impl ContinuousState {
    /// Discretizes `μ` (Gauss–Legendre panels on densities, atoms as they
    /// are, digit-tree partial sums on Bernoulli parts) and places `u` with
    /// modulus `profile` and argument `phase(x)` on the nodes.
    pub fn on_measure(
        mu: &Measure,
        profile: &AmplitudeProfile,
        panels: usize,
        phase: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        collect_nodes(mu, 1.0, panels.max(1), &mut nodes, &mut weights)?;
        let amplitudes = nodes.iter().map(|&x| profile.modulus(x)).collect();
        let phases = nodes.iter().map(|&x| Phase::from_radians(phase(x))).collect();
        Ok(ContinuousState {
            nodes,
            weights,
            amplitudes,
            phases,
        })
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.amplitudes
            .iter()
            .zip(&self.phases)
            .map(|(r, p)| p.cis() * *r)
            .collect()
    }

    pub fn evolve(&self, lambda: &FrequencyFunction, t: f64) -> Result<Self> {
        self.evolve_ticks(lambda, FlowTime::new(t)?)
    }

    pub fn evolve_ticks(&self, lambda: &FrequencyFunction, t: FlowTime) -> Result<Self> {
        let lambdas: Vec<f64> = self.nodes.iter().map(|&x| lambda.value(x)).collect();
        Ok(ContinuousState {
            phases: advance(&self.phases, &lambdas, t),
            ..self.clone()
        })
    }

    /// `(Σ w_j |u_j^a - u_j^b|²)^{1/2}`.
    pub fn distance(&self, other: &ContinuousState) -> Result<f64> {
        if self.nodes != other.nodes || self.weights != other.weights || self.amplitudes != other.amplitudes {
            return Err(Error::Mismatch("states use different discretizations or tori".into()));
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.amplitudes)
            .zip(self.phases.iter().zip(&other.phases))
            .map(|((w, r), (a, b))| {
                let c = r * (*a - *b).chord();
                w * c * c
            })
            .sum::<f64>()
            .sqrt())
    }

    /// `‖u‖² = Σ w_j r_j²`.
    pub fn norm_sq(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.amplitudes)
            .map(|(w, r)| w * r * r)
            .sum()
    }

    /// `H = ½ Σ w_j λ(x_j)(q_j² + p_j²)`.
    pub fn energy(&self, lambda: &FrequencyFunction) -> f64 {
        let r = realize(&self.values());
        self.nodes
            .iter()
            .zip(&self.weights)
            .zip(r.q.iter().zip(&r.p))
            .map(|((&x, w), (q, p))| 0.5 * w * lambda.value(x) * (q * q + p * p))
            .sum()
    }
}

fn collect_nodes(
    mu: &Measure,
    scale: f64,
    panels: usize,
    nodes: &mut Vec<f64>,
    weights: &mut Vec<f64>,
) -> Result<()> {
    match mu {
        Measure::Atomic(a) => {
            for atom in &a.atoms {
                nodes.push(atom.at);
                weights.push(scale * atom.weight);
            }
        }
        Measure::Density(d) => {
            let rule = GaussLegendre::order32();
            for (seg, pts) in d.smooth_pieces() {
                for w in pts.windows(2) {
                    let h = (w[1] - w[0]) / panels as f64;
                    for i in 0..panels {
                        let lo = w[0] + h * i as f64;
                        for (x, gw) in rule.mapped(lo, lo + h) {
                            let pw = d.profile.as_ref().map_or(1.0, |p| p.weight(x));
                            nodes.push(x);
                            weights.push(scale * gw * seg.at(x) * pw);
                        }
                    }
                }
            }
        }
        Measure::Bernoulli(b) => collect_nodes(
            &Measure::BernoulliPart(b.as_part()),
            scale,
            panels,
            nodes,
            weights,
        )?,
        Measure::BernoulliPart(p) => {
            for c in &p.pieces {
                let extra = BERNOULLI_NODE_DEPTH;
                let n = 1u64 << extra;
                let w = scale * c.weight / n as f64;
                for bits in 0..n {
                    let mut x = c.offset;
                    for j in 0..extra {
                        let step = p.eta.powi((c.depth + j + 1) as i32);
                        x += if bits >> j & 1 == 1 { step } else { -step };
                    }
                    nodes.push(x);
                    weights.push(w);
                }
            }
        }
        Measure::Mixture { components } => {
            for c in components {
                collect_nodes(&c.measure, scale * c.coefficient, panels, nodes, weights)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus(r: &[f64]) -> CountableTorus {
        CountableTorus::new(r.to_vec(), 0.0).unwrap()
    }

    #[test]
    fn phase_conversion_is_odd() {
        for x in [0.1, 0.75, 3.3, 1e-9, 12345.678] {
            assert_eq!(Phase::from_turns(-x), -Phase::from_turns(x));
        }
        assert_eq!(Phase::from_turns(1.0), Phase(0));
        assert!((Phase::from_radians(PI).radians() - PI).abs() < 1e-15);
    }

    #[test]
    fn single_mode_half_turn() {
        let s = CountableState::at_zero_phase(torus(&[1.0]));
        let e = s.evolve(&[1.0], PI).unwrap();
        assert!((e.phases[0].radians() - PI).abs() < 1e-9);
        assert!((e.distance(&s).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn common_period_returns_home() {
        let s = CountableState::at_zero_phase(torus(&[1.0, 1.0]));
        let e = s.evolve(&[1.0, 2.0], 2.0 * PI).unwrap();
        assert!(e.distance(&s).unwrap() < 1e-9);
        assert_eq!(s.evolve(&[1.0, 2.0], 0.0).unwrap(), s);
    }

    #[test]
    fn group_law_is_exact_on_ticks() {
        let s = CountableState::new(torus(&[1.0, 0.5, 0.25]), &[0.1, 2.0, 5.0]).unwrap();
        let l = [1.0, 2f64.sqrt(), 1e3 / 7.0];
        let (a, b) = (FlowTime::new(1.234).unwrap(), FlowTime::new(-98.7).unwrap());
        let two_steps = s.evolve_ticks(&l, a).unwrap().evolve_ticks(&l, b).unwrap();
        assert_eq!(two_steps, s.evolve_ticks(&l, a + b).unwrap());
        let back = s.evolve(&l, 17.3).unwrap().evolve(&l, -17.3).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn energy_and_actions() {
        let s = CountableState::at_zero_phase(torus(&[1.0]));
        assert!((s.energy(&[2.0]).unwrap() - 1.0).abs() < 1e-15);
        let s = CountableState::new(torus(&[1.0, 1.0]), &[0.3, 2.0]).unwrap();
        assert!((s.energy(&[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        let s = CountableState::at_zero_phase(torus(&[1.0, 0.5]));
        assert_eq!(s.actions(), vec![1.0, 0.25]);
    }

    #[test]
    fn mismatched_states_are_rejected() {
        let a = CountableState::at_zero_phase(torus(&[1.0]));
        let b = CountableState::at_zero_phase(torus(&[2.0]));
        assert!(matches!(a.distance(&b), Err(Error::Mismatch(_))));
        assert!(a.evolve(&[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn realize_and_symplectic_pairing() {
        let r = realize(&[Complex64::new(1.0, 0.0)]);
        assert_eq!((r.q, r.p), (vec![1.0], vec![0.0]));
        let e = [Complex64::new(1.0, 0.0)];
        let ie = [Complex64::new(0.0, 1.0)];
        assert_eq!(symplectic_form(&e, &ie).unwrap(), 1.0);
        assert_eq!(apply_j(&e), vec![Complex64::new(0.0, -1.0)]);
        let u = [Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.7)];
        let v = [Complex64::new(-0.5, 0.1), Complex64::new(1.1, 1.9)];
        let via_j = inner(&u, &apply_j(&v)).re;
        assert!((via_j - symplectic_form(&u, &v).unwrap()).abs() < 1e-15);
        let jj = apply_j(&apply_j(&u));
        assert_eq!(jj, vec![-u[0], -u[1]]);
    }

    #[test]
    fn gram_matrix_pairs_g_with_f() {
        let g = symplectic_gram(3);
        for a in 0..6 {
            for b in 0..6 {
                let want = if a % 2 == 0 && b == a + 1 {
                    1.0
                } else if b % 2 == 0 && a == b + 1 {
                    -1.0
                } else {
                    0.0
                };
                assert_eq!(g[a][b], want, "({a},{b})");
            }
        }
    }

    #[test]
    fn radii_rule_tails() {
        let geo = RadiiRule::Geometric { a: 1.0, q: 0.5 };
        let exact: f64 = (4..200).map(|k| 0.25f64.powi(k)).sum();
        assert!((geo.tail_bound(3) - exact).abs() < 1e-15);
        let pow = RadiiRule::Power { a: 1.0, s: 1.0 };
        let partial: f64 = (11..100_000).map(|k| 1.0 / (k as f64 * k as f64)).sum();
        assert!(pow.tail_bound(10) >= partial);
        let n = geo.prefix_for_tail(1e-6, 1000).unwrap();
        assert!(geo.tail_bound(n) < 1e-6 && geo.tail_bound(n - 1) >= 1e-6);
        let ex = RadiiRule::Explicit { radii: vec![1.0, 1.0], tail_energy_bound: 0.1 };
        assert!(ex.prefix_for_tail(0.01, 100).is_err());
    }

    #[test]
    fn sequences() {
        let f = FrequencySequence::Factorial { scale: Frequency::integer(1) };
        assert_eq!(f.term(4).unwrap(), Frequency::exact(1, 24));
        let sg = FrequencySequence::SineGordon { m: Frequency::integer(4) };
        assert_eq!(sg.term(3).unwrap(), Frequency::integer(5));
        assert!(!sg.term(1).unwrap().is_exact());
        let lin = FrequencySequence::Linear { scale: Frequency::integer(1) };
        assert_eq!(lin.values(3).unwrap(), vec![1.0, 2.0, 3.0]);
        let ex = FrequencySequence::Explicit { values: vec![Frequency::integer(1)] };
        assert!(ex.prefix(2).is_err());
    }

    #[test]
    fn energy_domain() {
        let lin = FrequencySequence::Linear { scale: Frequency::integer(1) };
        assert!(check_energy_domain(&lin, &RadiiRule::Power { a: 1.0, s: 0.9 }).is_err());
        assert!(check_energy_domain(&lin, &RadiiRule::Power { a: 1.0, s: 1.2 }).is_ok());
        assert!(check_energy_domain(&lin, &RadiiRule::Geometric { a: 1.0, q: 0.9 }).is_ok());
    }

    #[test]
    fn continuous_state_on_uniform() {
        let mu = Measure::uniform(0.0, 1.0, 1.0);
        let s = ContinuousState::on_measure(&mu, &AmplitudeProfile::unit(), 4, |_| 0.0).unwrap();
        assert!((s.norm_sq() - 1.0).abs() < 1e-14);
        let lam = FrequencyFunction::Identity;
        let e = s.evolve(&lam, 4.0).unwrap();
        let d2 = e.distance(&s).unwrap().powi(2);
        // 2 - 2 sin(4)/4
        let want = 2.0 - 2.0 * 4f64.sin() / 4.0;
        assert!((d2 - want).abs() < 1e-9, "{d2} vs {want}");
        assert!((s.energy(&lam) - 0.25).abs() < 1e-14);
    }
}
