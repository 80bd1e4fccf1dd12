use serde::{Deserialize, Serialize};

use super::borel::{BorelSet, Interval};
use crate::error::{FieldError, Result};
use crate::profile::AmplitudeProfile;
use crate::quadrature::{integrate, QuadOptions};

/// Shape of an absolutely continuous measure on its support.
///
/// The shape fixes the density only up to scale; [`DensityMeasure::mass`]
/// sets the normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DensityShape {
    Uniform,
    /// Triangle with apex at `mode` (midpoint when omitted).
    Triangular {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mode: Option<f64>,
    },
    /// Piecewise linear through `(nodes[i], values[i])`. Nodes are
    /// non-decreasing; a repeated node encodes a jump.
    Tabulated { nodes: Vec<f64>, values: Vec<f64> },
}

/// A linear piece of a density: `f0` at `x0` rising or falling to `f1` at `x1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub x0: f64,
    pub x1: f64,
    pub f0: f64,
    pub f1: f64,
}

impl Segment {
    pub fn integral(&self) -> f64 {
        0.5 * (self.f0 + self.f1) * (self.x1 - self.x0)
    }

    pub fn at(&self, x: f64) -> f64 {
        if self.x1 == self.x0 {
            return self.f0;
        }
        self.f0 + (self.f1 - self.f0) * (x - self.x0) / (self.x1 - self.x0)
    }

    fn clip(&self, lo: f64, hi: f64) -> Option<Segment> {
        let a = self.x0.max(lo);
        let b = self.x1.min(hi);
        (b > a).then(|| Segment {
            x0: a,
            x1: b,
            f0: self.at(a),
            f1: self.at(b),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMeasure {
    pub support: Interval,
    pub shape: DensityShape,
    /// Mass of the unweighted density.
    pub mass: f64,
    /// Optional weight `|u|²` applied on top of the density.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<AmplitudeProfile>,
}

impl DensityMeasure {
    pub fn uniform(lo: f64, hi: f64, mass: f64) -> Self {
        DensityMeasure {
            support: Interval::new(lo, hi),
            shape: DensityShape::Uniform,
            mass,
            profile: None,
        }
    }

    pub fn triangular(lo: f64, hi: f64, mode: Option<f64>, mass: f64) -> Self {
        DensityMeasure {
            support: Interval::new(lo, hi),
            shape: DensityShape::Triangular { mode },
            mass,
            profile: None,
        }
    }

    /// Tabulated density whose nodes/values are the actual density values.
    pub fn tabulated(nodes: Vec<f64>, values: Vec<f64>) -> Self {
        let segs = raw_segments(&nodes, &values);
        let mass = segs.iter().map(Segment::integral).sum();
        DensityMeasure {
            support: Interval::new(nodes[0], *nodes.last().unwrap()),
            shape: DensityShape::Tabulated { nodes, values },
            mass,
            profile: None,
        }
    }

    /// Linear pieces of the unweighted density, scaled to `mass`.
    pub fn segments(&self) -> Vec<Segment> {
        let Interval { lo, hi } = self.support;
        match &self.shape {
            DensityShape::Uniform => {
                let h = self.mass / (hi - lo);
                vec![Segment {
                    x0: lo,
                    x1: hi,
                    f0: h,
                    f1: h,
                }]
            }
            DensityShape::Triangular { mode } => {
                let c = mode.unwrap_or(0.5 * (lo + hi));
                let peak = 2.0 * self.mass / (hi - lo);
                let mut v = Vec::with_capacity(2);
                if c > lo {
                    v.push(Segment {
                        x0: lo,
                        x1: c,
                        f0: 0.0,
                        f1: peak,
                    });
                }
                if hi > c {
                    v.push(Segment {
                        x0: c,
                        x1: hi,
                        f0: peak,
                        f1: 0.0,
                    });
                }
                v
            }
            DensityShape::Tabulated { nodes, values } => {
                let segs = raw_segments(nodes, values);
                let raw: f64 = segs.iter().map(Segment::integral).sum();
                let scale = self.mass / raw;
                segs.into_iter()
                    .map(|s| Segment {
                        f0: s.f0 * scale,
                        f1: s.f1 * scale,
                        ..s
                    })
                    .collect()
            }
        }
    }

    /// Unweighted density at `x` (right limit at jumps).
    pub fn base_density(&self, x: f64) -> f64 {
        let segs = self.segments();
        segs.iter()
            .rev()
            .find(|s| s.x0 <= x && x <= s.x1)
            .map(|s| s.at(x))
            .unwrap_or(0.0)
    }

    /// Weighted density `ρ(x)|u(x)|²`.
    pub fn density(&self, x: f64) -> f64 {
        let w = self.profile.as_ref().map_or(1.0, |p| p.weight(x));
        self.base_density(x) * w
    }

    /// Sub-intervals on which the weighted density is smooth.
    pub(crate) fn smooth_pieces(&self) -> Vec<(Segment, Vec<f64>)> {
        let mut cuts = Vec::new();
        if let Some(p) = &self.profile {
            p.breakpoints(&mut cuts);
        }
        self.segments()
            .into_iter()
            .filter(|s| s.x1 > s.x0)
            .map(|s| {
                let mut pts = vec![s.x0];
                pts.extend(cuts.iter().copied().filter(|c| *c > s.x0 && *c < s.x1));
                pts.push(s.x1);
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                (s, pts)
            })
            .collect()
    }

    /// `∫ ρ |u|²`, exact when there is no profile.
    pub fn total(&self) -> Result<f64> {
        let Some(profile) = &self.profile else {
            return Ok(self.mass);
        };
        if let Some(c) = profile.as_constant() {
            return Ok(self.mass * c * c);
        }
        let mut sum = 0.0;
        for (seg, pts) in self.smooth_pieces() {
            for w in pts.windows(2) {
                let est = integrate(
                    |x| seg.at(x) * profile.weight(x),
                    w[0],
                    w[1],
                    &QuadOptions::default(),
                )?;
                sum += est.value;
            }
        }
        if !sum.is_finite() {
            return Err(crate::error::Error::NonFinite(
                "weighted density has non-finite mass".into(),
            ));
        }
        Ok(sum)
    }

    /// Total variation of the weighted density on ℝ, including the jumps at
    /// the ends of the support. Bounds `|μ̂(t)| ≤ V/|t|`.
    pub fn density_variation(&self) -> f64 {
        let segs = self.segments();
        match &self.profile {
            None => {
                let mut v = 0.0;
                let mut prev = 0.0;
                for s in &segs {
                    v += (s.f0 - prev).abs() + (s.f1 - s.f0).abs();
                    prev = s.f1;
                }
                v + prev.abs()
            }
            Some(profile) => {
                // sampled variation with a small inflation margin
                let mut v = 0.0;
                let mut prev = 0.0;
                for (seg, pts) in self.smooth_pieces() {
                    for w in pts.windows(2) {
                        let n = 512;
                        for i in 0..=n {
                            let x = w[0] + (w[1] - w[0]) * i as f64 / n as f64;
                            let f = seg.at(x) * profile.weight(x);
                            v += (f - prev).abs();
                            prev = f;
                        }
                    }
                }
                (v + prev.abs()) * 1.001
            }
        }
    }

    /// Smallest closed interval outside which the density vanishes.
    pub fn hull(&self) -> Option<Interval> {
        let segs = self.segments();
        let first = segs.iter().find(|s| s.x1 > s.x0 && (s.f0 > 0.0 || s.f1 > 0.0))?;
        let last = segs
            .iter()
            .rev()
            .find(|s| s.x1 > s.x0 && (s.f0 > 0.0 || s.f1 > 0.0))?;
        // a nonnegative linear piece with a positive end is positive inside
        Some(Interval::new(first.x0, last.x1))
    }

    /// Clips the density to `set`; `None` when nothing is left.
    pub fn restrict(&self, set: &BorelSet) -> Option<DensityMeasure> {
        let pieces = set.clip(self.support.lo, self.support.hi);
        if pieces.is_empty() {
            return None;
        }
        if let (DensityShape::Uniform, [only]) = (&self.shape, pieces.as_slice()) {
            let h = self.mass / self.support.len();
            return Some(DensityMeasure {
                support: *only,
                shape: DensityShape::Uniform,
                mass: h * only.len(),
                profile: self.profile.clone(),
            });
        }
        let segs = self.segments();
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for piece in &pieces {
            for s in segs.iter().filter_map(|s| s.clip(piece.lo, piece.hi)) {
                if let Some(&last) = nodes.last() {
                    if s.x0 > last {
                        // zero on the gap between clipped pieces
                        nodes.extend([last, s.x0]);
                        values.extend([0.0, 0.0]);
                    }
                }
                nodes.extend([s.x0, s.x1]);
                values.extend([s.f0, s.f1]);
            }
        }
        // clipping cannot create mass; a zero-valued remainder is empty
        let mass: f64 = raw_segments(&nodes, &values)
            .iter()
            .map(Segment::integral)
            .sum();
        if nodes.len() < 2 || !(mass > 0.0) {
            return None;
        }
        let mut d = DensityMeasure::tabulated(nodes, values);
        d.profile = self.profile.clone();
        Some(d)
    }

    pub fn validate(&self) -> std::result::Result<(), FieldError> {
        let Interval { lo, hi } = self.support;
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(FieldError::new("support", "must be a finite interval with lo < hi"));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(FieldError::new("mass", "must be positive and finite"));
        }
        match &self.shape {
            DensityShape::Uniform => {}
            DensityShape::Triangular { mode } => {
                if let Some(c) = mode {
                    if !(lo <= *c && *c <= hi) {
                        return Err(FieldError::new("shape.mode", "must lie in the support"));
                    }
                }
            }
            DensityShape::Tabulated { nodes, values } => {
                if nodes.len() < 2 || nodes.len() != values.len() {
                    return Err(FieldError::new(
                        "shape.values",
                        "need at least two nodes and one value per node",
                    ));
                }
                if nodes.windows(2).any(|w| !(w[0] <= w[1])) {
                    return Err(FieldError::new("shape.nodes", "must be non-decreasing"));
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(FieldError::new("shape.values", "must be finite and nonnegative"));
                }
                let tol = 1e-12 * (hi - lo).max(1.0);
                if (nodes[0] - lo).abs() > tol || (nodes[nodes.len() - 1] - hi).abs() > tol {
                    return Err(FieldError::new("shape.nodes", "must span the support exactly"));
                }
                let raw: f64 = raw_segments(nodes, values).iter().map(Segment::integral).sum();
                if !(raw > 0.0) {
                    return Err(FieldError::new("shape.values", "density integrates to zero"));
                }
            }
        }
        if let Some(p) = &self.profile {
            p.validate().map_err(|e| e.under("profile"))?;
        }
        Ok(())
    }
}

fn raw_segments(nodes: &[f64], values: &[f64]) -> Vec<Segment> {
    nodes
        .windows(2)
        .zip(values.windows(2))
        .filter(|(x, _)| x[1] > x[0])
        .map(|(x, f)| Segment {
            x0: x[0],
            x1: x[1],
            f0: f[0],
            f1: f[1],
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments_integrate_to_mass() {
        for d in [
            DensityMeasure::uniform(0.0, 2.0, 3.0),
            DensityMeasure::triangular(-1.0, 2.0, Some(0.0), 1.5),
            DensityMeasure {
                support: Interval::new(0.0, 2.0),
                shape: DensityShape::Tabulated {
                    nodes: vec![0.0, 1.0, 1.0, 2.0],
                    values: vec![1.0, 1.0, 3.0, 0.0],
                },
                mass: 2.0,
                profile: None,
            },
        ] {
            d.validate().unwrap();
            let s: f64 = d.segments().iter().map(Segment::integral).sum();
            assert!((s - d.mass).abs() < 1e-12, "{d:?}");
        }
    }

    #[test]
    fn jump_reads_right_limit() {
        let d = DensityMeasure::tabulated(vec![0.0, 1.0, 1.0, 2.0], vec![1.0, 1.0, 3.0, 3.0]);
        assert_eq!(d.base_density(0.5), 1.0);
        assert_eq!(d.base_density(1.0), 3.0);
        assert_eq!(d.mass, 4.0);
    }

    #[test]
    fn uniform_variation_is_twice_height() {
        let d = DensityMeasure::uniform(0.0, 0.5, 1.0);
        assert!((d.density_variation() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn restriction_to_two_pieces_is_tabulated() {
        let d = DensityMeasure::uniform(0.0, 1.0, 1.0);
        let set = BorelSet::new(vec![Interval::new(0.0, 0.25), Interval::new(0.5, 0.75)]);
        let r = d.restrict(&set).unwrap();
        assert!(matches!(r.shape, DensityShape::Tabulated { .. }));
        assert!((r.mass - 0.5).abs() < 1e-15);
        assert_eq!(r.base_density(0.3), 0.0);
        assert_eq!(r.base_density(0.6), 1.0);
    }

    #[test]
    fn hull_trims_zero_tails() {
        let d = DensityMeasure::tabulated(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 0.0, 1.0, 0.0]);
        let h = d.hull().unwrap();
        assert_eq!((h.lo, h.hi), (1.0, 3.0));
    }
}
