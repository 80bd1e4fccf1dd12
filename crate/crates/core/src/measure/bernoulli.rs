//! Bernoulli convolutions: the law of `Σ_{k≥1} ±η^k` with fair independent signs.
//!
//! The measure is handled through its digit tree. A node at depth `d` is the
//! cylinder of sign strings sharing the first `d` digits; it carries weight
//! `2^{-d}`, sits at the partial sum `s`, and its mass is spread over
//! `[s - R_d, s + R_d]` with `R_d = η^{d+1}/(1-η)` as a copy of the
//! original measure scaled by `η^d`.

use serde::{Deserialize, Serialize};

use super::borel::{BorelSet, Interval};
use crate::error::FieldError;

/// Depth at which digit-tree recursion stops.
pub const MAX_DIGIT_DEPTH: u32 = 40;

/// Node-visit budget for one split; relevant only for heavily overlapping `η > 1/2`.
const NODE_BUDGET: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernoulliMeasure {
    pub eta: f64,
}

/// `weight · (δ_offset ∗ law of η^depth X)` with `X ~ μ_η`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub offset: f64,
    pub weight: f64,
    pub depth: u32,
}

/// A finite sum of cylinders of one Bernoulli measure, e.g. its restriction to a set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliPart {
    pub eta: f64,
    pub pieces: Vec<Cylinder>,
    /// Mass attributed to cylinders that were cut by the set boundary at the
    /// recursion limit (split by overlap length rather than resolved).
    #[serde(default)]
    pub mass_uncertainty: f64,
}

pub fn tail_radius(eta: f64, depth: u32) -> f64 {
    eta.powi(depth as i32 + 1) / (1.0 - eta)
}

impl BernoulliMeasure {
    pub fn new(eta: f64) -> Self {
        BernoulliMeasure { eta }
    }

    /// `[-η/(1-η), η/(1-η)]`.
    pub fn hull(&self) -> Interval {
        let r = tail_radius(self.eta, 0);
        Interval::new(-r, r)
    }

    pub fn as_part(&self) -> BernoulliPart {
        BernoulliPart {
            eta: self.eta,
            pieces: vec![Cylinder {
                offset: 0.0,
                weight: 1.0,
                depth: 0,
            }],
            mass_uncertainty: 0.0,
        }
    }

    /// Masses of the `cells` equal cells of `[lo, hi)`.
    pub fn cell_masses(&self, lo: f64, hi: f64, cells: usize) -> Vec<f64> {
        let mut masses = vec![0.0; cells];
        let width = (hi - lo) / cells as f64;
        let cell_of = |x: f64| (((x - lo) / width).floor().max(0.0) as usize).min(cells - 1);
        let mut stack = vec![(0.0_f64, 1.0_f64, 0u32)];
        while let Some((s, w, d)) = stack.pop() {
            let r = tail_radius(self.eta, d);
            let (a, b) = (s - r, s + r);
            let (ca, cb) = (cell_of(a), cell_of(b));
            let ends_on_boundary = cb == ca + 1 && (lo + width * cb as f64 - b).abs() <= 1e-15 * width;
            if ca == cb || ends_on_boundary {
                masses[ca] += w;
            } else if d < MAX_DIGIT_DEPTH {
                let step = self.eta.powi(d as i32 + 1);
                stack.push((s + step, 0.5 * w, d + 1));
                stack.push((s - step, 0.5 * w, d + 1));
            } else {
                for (c, m) in masses.iter_mut().enumerate().take(cb + 1).skip(ca) {
                    let cl = lo + width * c as f64;
                    let ov = (b.min(cl + width) - a.max(cl)).max(0.0);
                    *m += w * ov / (b - a);
                }
            }
        }
        masses
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(FieldError::new("eta", "must lie in the open interval (0, 1)"));
        }
        Ok(())
    }
}

impl BernoulliPart {
    pub fn mass(&self) -> f64 {
        self.pieces.iter().map(|c| c.weight).sum()
    }

    pub fn hull(&self) -> Option<Interval> {
        self.pieces
            .iter()
            .map(|c| {
                let r = tail_radius(self.eta, c.depth);
                Interval::new(c.offset - r, c.offset + r)
            })
            .reduce(|a, b| a.hull(&b))
    }

    /// The part of the measure living on `set`.
    pub fn restrict(&self, set: &BorelSet) -> BernoulliPart {
        let eta = self.eta;
        let mut pieces = Vec::new();
        let mut uncertainty = self.mass_uncertainty;
        let mut visits = 0usize;
        let mut stack: Vec<Cylinder> = self.pieces.iter().rev().copied().collect();
        while let Some(c) = stack.pop() {
            visits += 1;
            let r = tail_radius(eta, c.depth);
            let (a, b) = (c.offset - r, c.offset + r);
            if set.covers(a, b) {
                pieces.push(c);
            } else if set.misses(a, b) {
                continue;
            } else if c.depth < MAX_DIGIT_DEPTH && visits < NODE_BUDGET {
                let step = eta.powi(c.depth as i32 + 1);
                let child = |sign: f64| Cylinder {
                    offset: c.offset + sign * step,
                    weight: 0.5 * c.weight,
                    depth: c.depth + 1,
                };
                stack.push(child(1.0));
                stack.push(child(-1.0));
            } else {
                let frac = set.overlap_len(a, b) / (b - a);
                if frac > 0.0 {
                    pieces.push(Cylinder {
                        weight: c.weight * frac,
                        ..c
                    });
                }
                uncertainty += c.weight * frac.min(1.0 - frac);
            }
        }
        BernoulliPart {
            eta,
            pieces,
            mass_uncertainty: uncertainty,
        }
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        BernoulliMeasure::new(self.eta).validate()?;
        for (i, c) in self.pieces.iter().enumerate() {
            if !(c.weight > 0.0 && c.weight.is_finite() && c.offset.is_finite()) {
                return Err(FieldError::new(
                    format!("pieces[{i}]"),
                    "weight must be positive and offset finite",
                ));
            }
        }
        if !(self.mass_uncertainty >= 0.0) {
            return Err(FieldError::new("mass_uncertainty", "must be nonnegative"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_is_uniform_on_cells() {
        let b = BernoulliMeasure::new(0.5);
        for depth in [1u32, 3, 6] {
            let n = 1usize << depth;
            let m = b.cell_masses(-1.0, 1.0, n);
            for v in m {
                assert!((v - 1.0 / n as f64).abs() < 1e-9, "depth {depth}: {v}");
            }
        }
    }

    #[test]
    fn restriction_mass_of_half_on_positive_axis() {
        let part = BernoulliMeasure::new(0.5)
            .as_part()
            .restrict(&BorelSet::interval(0.0, 1.0));
        assert!((part.mass() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cantor_gap_carries_no_mass() {
        // η = 1/3: the middle of the hull (-1/6, 1/6) is a gap
        let part = BernoulliMeasure::new(1.0 / 3.0)
            .as_part()
            .restrict(&BorelSet::interval(-0.16, 0.16));
        assert_eq!(part.mass(), 0.0);
        let right = BernoulliMeasure::new(1.0 / 3.0)
            .as_part()
            .restrict(&BorelSet::interval(0.0, 1.0));
        assert!((right.mass() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn complementary_restrictions_add_up() {
        let b = BernoulliMeasure::new(0.4).as_part();
        let set = BorelSet::interval(-0.123, 0.31);
        let h = b.hull().unwrap();
        let comp = set.complement_within(h.lo, h.hi + 1e-9);
        let total = b.restrict(&set).mass() + b.restrict(&comp).mass();
        assert!((total - 1.0).abs() < 1e-9, "{total}");
    }
}
