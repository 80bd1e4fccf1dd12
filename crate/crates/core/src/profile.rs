//! Amplitude profiles `r(x) = |u(x)|` used to weight a measure.

use serde::{Deserialize, Serialize};

use crate::error::FieldError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AmplitudeProfile {
    Constant { value: f64 },
    /// `Σ c_i x^i`, coefficients in increasing degree.
    Polynomial { coefficients: Vec<f64> },
    /// Linear interpolation between nodes, clamped outside the node range.
    PiecewiseLinear { nodes: Vec<f64>, values: Vec<f64> },
    Product { factors: Vec<AmplitudeProfile> },
}

impl AmplitudeProfile {
    pub fn constant(value: f64) -> Self {
        AmplitudeProfile::Constant { value }
    }

    pub fn unit() -> Self {
        Self::constant(1.0)
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Self {
        AmplitudeProfile::Polynomial { coefficients }
    }

    pub fn piecewise_linear(nodes: Vec<f64>, values: Vec<f64>) -> Self {
        AmplitudeProfile::PiecewiseLinear { nodes, values }
    }

    /// Profile of the pointwise product `|u v|`.
    pub fn product(self, other: AmplitudeProfile) -> Self {
        if self.is_unit() {
            return other;
        }
        if other.is_unit() {
            return self;
        }
        let mut factors = Vec::new();
        for p in [self, other] {
            match p {
                AmplitudeProfile::Product { factors: inner } => factors.extend(inner),
                p => factors.push(p),
            }
        }
        AmplitudeProfile::Product { factors }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, AmplitudeProfile::Constant { value } if value.abs() == 1.0)
    }

    /// Returns the modulus `|u(x)|`.
    pub fn modulus(&self, x: f64) -> f64 {
        match self {
            AmplitudeProfile::Constant { value } => value.abs(),
            AmplitudeProfile::Polynomial { coefficients } => coefficients
                .iter()
                .rev()
                .fold(0.0, |acc, c| acc * x + c)
                .abs(),
            AmplitudeProfile::PiecewiseLinear { nodes, values } => {
                interpolate(nodes, values, x).abs()
            }
            AmplitudeProfile::Product { factors } => {
                factors.iter().map(|f| f.modulus(x)).product()
            }
        }
    }

    /// `|u(x)|²`.
    pub fn weight(&self, x: f64) -> f64 {
        let m = self.modulus(x);
        m * m
    }

    /// A bound on `|u|` over the whole line, if the profile is bounded.
    pub fn sup_modulus(&self) -> Option<f64> {
        match self {
            AmplitudeProfile::Constant { value } => Some(value.abs()),
            AmplitudeProfile::Polynomial { coefficients } => {
                let nonconst = coefficients.iter().skip(1).any(|c| *c != 0.0);
                if nonconst {
                    None
                } else {
                    Some(coefficients.first().copied().unwrap_or(0.0).abs())
                }
            }
            AmplitudeProfile::PiecewiseLinear { values, .. } => {
                Some(values.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
            }
            AmplitudeProfile::Product { factors } => factors
                .iter()
                .map(|f| f.sup_modulus())
                .try_fold(1.0, |acc, s| s.map(|s| acc * s)),
        }
    }

    /// The constant modulus, when the profile is constant.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            AmplitudeProfile::Constant { value } => Some(value.abs()),
            AmplitudeProfile::Product { factors } => factors
                .iter()
                .map(|f| f.as_constant())
                .try_fold(1.0, |acc, c| c.map(|c| acc * c)),
            _ => None,
        }
    }

    /// Breakpoints where the profile may fail to be smooth.
    pub(crate) fn breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            AmplitudeProfile::PiecewiseLinear { nodes, .. } => out.extend(nodes.iter().copied()),
            AmplitudeProfile::Product { factors } => {
                for f in factors {
                    f.breakpoints(out);
                }
            }
            _ => {}
        }
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        match self {
            AmplitudeProfile::Constant { value } => {
                if !value.is_finite() {
                    return Err(FieldError::new("value", "must be finite"));
                }
            }
            AmplitudeProfile::Polynomial { coefficients } => {
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(FieldError::new("coefficients", "must be finite"));
                }
            }
            AmplitudeProfile::PiecewiseLinear { nodes, values } => {
                if nodes.is_empty() || nodes.len() != values.len() {
                    return Err(FieldError::new(
                        "values",
                        "nodes and values must be non-empty and of equal length",
                    ));
                }
                if nodes.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(FieldError::new("nodes", "must be strictly increasing"));
                }
                if nodes.iter().chain(values).any(|v| !v.is_finite()) {
                    return Err(FieldError::new("values", "must be finite"));
                }
            }
            AmplitudeProfile::Product { factors } => {
                for (i, f) in factors.iter().enumerate() {
                    f.validate()
                        .map_err(|e| e.under(&format!("factors[{i}]")))?;
                }
            }
        }
        Ok(())
    }
}

fn interpolate(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    if x <= nodes[0] {
        return values[0];
    }
    let last = nodes.len() - 1;
    if x >= nodes[last] {
        return values[last];
    }
    let j = nodes.partition_point(|n| *n <= x);
    let (x0, x1) = (nodes[j - 1], nodes[j]);
    let (v0, v1) = (values[j - 1], values[j]);
    v0 + (v1 - v0) * (x - x0) / (x1 - x0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_each_kind() {
        assert_eq!(AmplitudeProfile::constant(-2.0).weight(7.0), 4.0);
        let p = AmplitudeProfile::polynomial(vec![1.0, 0.0, 2.0]);
        assert_eq!(p.modulus(2.0), 9.0);
        let pl = AmplitudeProfile::piecewise_linear(vec![1.0, 2.0], vec![2.0, 0.0]);
        assert_eq!(pl.modulus(1.0), 2.0);
        assert_eq!(pl.modulus(1.5), 1.0);
        assert_eq!(pl.modulus(2.0), 0.0);
        assert_eq!(pl.modulus(-5.0), 2.0);
    }

    #[test]
    fn product_flattens_and_drops_units() {
        let u = AmplitudeProfile::polynomial(vec![0.0, 1.0]);
        assert_eq!(AmplitudeProfile::unit().product(u.clone()), u);
        let uv = u.clone().product(AmplitudeProfile::constant(3.0));
        let uvw = uv.product(u.clone());
        match &uvw {
            AmplitudeProfile::Product { factors } => assert_eq!(factors.len(), 3),
            _ => panic!("expected product"),
        }
        assert_eq!(uvw.modulus(2.0), 12.0);
    }

    #[test]
    fn sup_of_unbounded_polynomial_is_none() {
        assert_eq!(AmplitudeProfile::polynomial(vec![0.0, 1.0]).sup_modulus(), None);
        assert_eq!(AmplitudeProfile::polynomial(vec![3.0]).sup_modulus(), Some(3.0));
    }

    #[test]
    fn validation_rejects_unsorted_nodes() {
        let pl = AmplitudeProfile::piecewise_linear(vec![1.0, 0.0], vec![1.0, 1.0]);
        assert_eq!(pl.validate().unwrap_err().path, "nodes");
    }
}
