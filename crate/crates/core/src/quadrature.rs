//! Composite Gauss–Legendre quadrature with adaptive panel bisection.
//!
//! Every panel is integrated with a 32-point rule and compared against the
//! sum of the same rule on its two halves; panels whose discrepancy exceeds
//! their share of the tolerance are split. Panels are processed depth-first,
//! left to right, so results are bit-reproducible.

use std::f64::consts::PI;
use std::ops::{Add, Mul};
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Nodes per panel.
pub const GL_ORDER: usize = 32;

/// Default absolute tolerance for adaptive integration.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Values that can be integrated: reals and complex numbers.
pub trait QuadValue: Copy + Add<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes an `n`-point rule by Newton iteration on P_n.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// The shared 32-point rule.
    pub fn order32() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(GL_ORDER))
    }

    /// Applies the rule on `[a, b]`.
    pub fn integrate<V: QuadValue, F: Fn(f64) -> V>(&self, f: &F, a: f64, b: f64) -> V {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = V::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(mid + half * x) * *w;
        }
        acc * half
    }

    /// Physical nodes and weights of the rule mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, w * half))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    /// Absolute tolerance on the whole integral.
    pub tol: f64,
    /// Panels the interval is cut into before adaptation starts.
    pub initial_panels: usize,
    /// Maximum bisection depth below an initial panel.
    pub max_depth: u32,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            tol: DEFAULT_TOL,
            initial_panels: 1,
            max_depth: 30,
        }
    }
}

impl QuadOptions {
    pub fn with_tol(tol: f64) -> Self {
        QuadOptions {
            tol,
            ..Default::default()
        }
    }

    /// Sets the initial panel count so no panel spans more than about four
    /// periods of an oscillation with angular frequency `omega`.
    pub fn for_oscillation(mut self, omega: f64, a: f64, b: f64) -> Self {
        let periods = omega.abs() * (b - a).abs() / (2.0 * PI);
        self.initial_panels = self.initial_panels.max((periods / 4.0).ceil() as usize + 1);
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate<V> {
    pub value: V,
    pub error: f64,
    pub panels: usize,
}

/// Adaptive integral of `f` over `[a, b]`.
pub fn integrate<V: QuadValue, F: Fn(f64) -> V>(
    f: F,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<Estimate<V>> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::param("bounds", "integration bounds must be finite"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::param("tol", "tolerance must be positive"));
    }
    if a == b {
        return Ok(Estimate {
            value: V::zero(),
            error: 0.0,
            panels: 0,
        });
    }
    let rule = GaussLegendre::order32();
    let width = (b - a).abs();
    let n0 = opts.initial_panels.max(1);
    let h = (b - a) / n0 as f64;

    let mut value = V::zero();
    let mut error = 0.0;
    let mut panels = 0;
    let mut unconverged = false;
    // (lo, hi, whole-panel estimate, depth); popped LIFO, pushed right-then-left
    let mut stack: Vec<(f64, f64, V, u32)> = Vec::new();
    for i in (0..n0).rev() {
        let lo = a + h * i as f64;
        let hi = if i + 1 == n0 { b } else { a + h * (i + 1) as f64 };
        stack.push((lo, hi, rule.integrate(&f, lo, hi), 0));
    }
    while let Some((lo, hi, whole, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(&f, lo, mid);
        let right = rule.integrate(&f, mid, hi);
        let refined = left + right;
        let diff = (refined + whole * -1.0).magnitude();
        let share = opts.tol * (hi - lo).abs() / width;
        if !diff.is_finite() {
            return Err(Error::NonFinite(format!(
                "integrand not finite on [{lo}, {hi}]"
            )));
        }
        if diff <= share || depth >= opts.max_depth || (hi - lo).abs() < 1e-14 * width {
            if diff > share {
                unconverged = true;
            }
            value = value + refined;
            error += diff;
            panels += 1;
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    if unconverged && error > opts.tol {
        return Err(Error::Quadrature {
            achieved: error,
            requested: opts.tol,
        });
    }
    Ok(Estimate {
        value,
        error,
        panels,
    })
}
