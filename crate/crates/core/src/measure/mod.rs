//! Finite nonnegative Borel measures on the real line.
//!
//! A [`Measure`] is one of the three canonical classes (atomic, absolutely
//! continuous, singular Bernoulli) or a finite nonnegative combination of
//! them. Components of a mixture are treated as mutually singular.

mod bernoulli;
mod borel;
mod density;

use serde::{Deserialize, Serialize};

pub use bernoulli::{tail_radius, BernoulliMeasure, BernoulliPart, Cylinder, MAX_DIGIT_DEPTH};
pub use borel::{BorelSet, Interval};
pub use density::{DensityMeasure, DensityShape, Segment};

use crate::error::{Error, FieldError, Result};
use crate::profile::AmplitudeProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub at: f64,
    pub weight: f64,
}

/// `Σ weight_k δ_{at_k}`, plus a declared bound on the mass of omitted atoms.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AtomicMeasure {
    pub atoms: Vec<Atom>,
    #[serde(default)]
    pub tail_mass_bound: f64,
}

impl AtomicMeasure {
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>, tail_mass_bound: f64) -> Result<Self> {
        let mut atoms: Vec<Atom> = atoms
            .into_iter()
            .map(|(at, weight)| Atom { at, weight })
            .collect();
        atoms.sort_by(|a, b| a.at.total_cmp(&b.at));
        let m = AtomicMeasure {
            atoms,
            tail_mass_bound,
        };
        m.validate()
            .map_err(|e| Error::param("atoms", e.to_string()))?;
        Ok(m)
    }

    pub fn listed_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn validate(&self) -> std::result::Result<(), FieldError> {
        for (i, a) in self.atoms.iter().enumerate() {
            if !a.at.is_finite() {
                return Err(FieldError::new(format!("atoms[{i}].at"), "must be finite"));
            }
            if !(a.weight > 0.0 && a.weight.is_finite()) {
                return Err(FieldError::new(
                    format!("atoms[{i}].weight"),
                    "must be positive and finite",
                ));
            }
        }
        let mut locs: Vec<f64> = self.atoms.iter().map(|a| a.at).collect();
        locs.sort_by(f64::total_cmp);
        if locs.windows(2).any(|w| w[0] == w[1]) {
            return Err(FieldError::new("atoms", "locations must be pairwise distinct"));
        }
        if !(self.tail_mass_bound >= 0.0 && self.tail_mass_bound.is_finite()) {
            return Err(FieldError::new("tail_mass_bound", "must be nonnegative and finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub coefficient: f64,
    pub measure: Measure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Measure {
    Atomic(AtomicMeasure),
    Density(DensityMeasure),
    Bernoulli(BernoulliMeasure),
    BernoulliPart(BernoulliPart),
    Mixture { components: Vec<Component> },
}

impl From<AtomicMeasure> for Measure {
    fn from(m: AtomicMeasure) -> Self {
        Measure::Atomic(m)
    }
}

impl From<DensityMeasure> for Measure {
    fn from(m: DensityMeasure) -> Self {
        Measure::Density(m)
    }
}

impl From<BernoulliMeasure> for Measure {
    fn from(m: BernoulliMeasure) -> Self {
        Measure::Bernoulli(m)
    }
}

impl From<BernoulliPart> for Measure {
    fn from(m: BernoulliPart) -> Self {
        Measure::BernoulliPart(m)
    }
}

impl Measure {
    pub fn zero() -> Self {
        Measure::Atomic(AtomicMeasure::default())
    }

    pub fn atomic(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        Ok(Measure::Atomic(AtomicMeasure::new(atoms, 0.0)?))
    }

    pub fn uniform(lo: f64, hi: f64, mass: f64) -> Self {
        Measure::Density(DensityMeasure::uniform(lo, hi, mass))
    }

    pub fn bernoulli(eta: f64) -> Result<Self> {
        let b = BernoulliMeasure::new(eta);
        b.validate()
            .map_err(|e| Error::param("eta", e.message))?;
        Ok(Measure::Bernoulli(b))
    }

    pub fn mixture(components: impl IntoIterator<Item = (f64, Measure)>) -> Self {
        Measure::Mixture {
            components: components
                .into_iter()
                .map(|(coefficient, measure)| Component {
                    coefficient,
                    measure,
                })
                .collect(),
        }
    }

    /// Short human-readable identifier.
    pub fn label(&self) -> String {
        match self {
            Measure::Atomic(a) => format!("atomic({} atoms)", a.atoms.len()),
            Measure::Density(d) => {
                let shape = match d.shape {
                    DensityShape::Uniform => "uniform",
                    DensityShape::Triangular { .. } => "triangular",
                    DensityShape::Tabulated { .. } => "tabulated",
                };
                let w = if d.profile.is_some() { ",weighted" } else { "" };
                format!("density({shape}[{},{}]{w})", d.support.lo, d.support.hi)
            }
            Measure::Bernoulli(b) => format!("bernoulli(eta={})", b.eta),
            Measure::BernoulliPart(p) => {
                format!("bernoulli-part(eta={},{} pieces)", p.eta, p.pieces.len())
            }
            Measure::Mixture { components } => format!("mixture({} components)", components.len()),
        }
    }

    /// Total variation `‖μ‖`, including declared atom tails.
    pub fn total_variation(&self) -> Result<f64> {
        Ok(match self {
            Measure::Atomic(a) => a.listed_mass() + a.tail_mass_bound,
            Measure::Density(d) => d.total()?,
            Measure::Bernoulli(_) => 1.0,
            Measure::BernoulliPart(p) => p.mass(),
            Measure::Mixture { components } => {
                let mut s = 0.0;
                for c in components {
                    s += c.coefficient * c.measure.total_variation()?;
                }
                s
            }
        })
    }

    /// Mass that the characteristic function actually sees: the total
    /// variation without declared atom tails.
    pub fn resolved_mass(&self) -> Result<f64> {
        Ok(match self {
            Measure::Atomic(a) => a.listed_mass(),
            Measure::Mixture { components } => {
                let mut s = 0.0;
                for c in components {
                    s += c.coefficient * c.measure.resolved_mass()?;
                }
                s
            }
            other => other.total_variation()?,
        })
    }

    /// Smallest closed interval containing the support; `None` for the zero measure.
    pub fn support_interval(&self) -> Option<Interval> {
        match self {
            Measure::Atomic(a) => {
                let first = a.atoms.first()?;
                let last = a.atoms.last()?;
                Some(Interval::new(first.at, last.at))
            }
            Measure::Density(d) => d.hull(),
            Measure::Bernoulli(b) => Some(b.hull()),
            Measure::BernoulliPart(p) => p.hull(),
            Measure::Mixture { components } => components
                .iter()
                .filter_map(|c| c.measure.support_interval())
                .reduce(|a, b| a.hull(&b)),
        }
    }

    /// The restriction `μ|_A`.
    pub fn restrict(&self, set: &BorelSet) -> Measure {
        match self {
            Measure::Atomic(a) => Measure::Atomic(AtomicMeasure {
                atoms: a.atoms.iter().copied().filter(|x| set.contains(x.at)).collect(),
                tail_mass_bound: a.tail_mass_bound,
            }),
            Measure::Density(d) => d
                .restrict(set)
                .map(Measure::Density)
                .unwrap_or_else(Measure::zero),
            Measure::Bernoulli(b) => Measure::BernoulliPart(b.as_part().restrict(set)),
            Measure::BernoulliPart(p) => Measure::BernoulliPart(p.restrict(set)),
            Measure::Mixture { components } => Measure::Mixture {
                components: components
                    .iter()
                    .map(|c| Component {
                        coefficient: c.coefficient,
                        measure: c.measure.restrict(set),
                    })
                    .collect(),
            },
        }
    }

    /// Like [`Measure::restrict`] but rejects a zero result.
    pub fn restrict_nonzero(&self, set: &BorelSet) -> Result<Measure> {
        let r = self.restrict(set);
        if r.resolved_mass()? > 0.0 {
            Ok(r)
        } else {
            Err(Error::Degenerate(format!(
                "restriction of {} to {:?} is the zero measure",
                self.label(),
                set.intervals()
            )))
        }
    }

    /// The weighted measure `μ_u(A) = ∫_A |u|² dμ`.
    pub fn amplitude_weight(&self, u: &AmplitudeProfile) -> Result<Measure> {
        if u.is_unit() {
            return Ok(self.clone());
        }
        let out = match self {
            Measure::Atomic(a) => {
                let tail = if a.tail_mass_bound > 0.0 {
                    let sup = u.sup_modulus().ok_or_else(|| {
                        Error::NonFinite("unbounded profile on an atom tail".into())
                    })?;
                    a.tail_mass_bound * sup * sup
                } else {
                    0.0
                };
                Measure::Atomic(AtomicMeasure {
                    atoms: a
                        .atoms
                        .iter()
                        .map(|x| Atom {
                            at: x.at,
                            weight: x.weight * u.weight(x.at),
                        })
                        .filter(|x| x.weight > 0.0)
                        .collect(),
                    tail_mass_bound: tail,
                })
            }
            Measure::Density(d) => {
                let profile = match &d.profile {
                    Some(p) => p.clone().product(u.clone()),
                    None => u.clone(),
                };
                let weighted = DensityMeasure {
                    profile: Some(profile),
                    ..d.clone()
                };
                if weighted.total()? > 0.0 {
                    Measure::Density(weighted)
                } else {
                    Measure::zero()
                }
            }
            Measure::Bernoulli(b) => b.as_part().scaled_by(u)?,
            Measure::BernoulliPart(p) => p.scaled_by(u)?,
            Measure::Mixture { components } => {
                let mut out = Vec::with_capacity(components.len());
                for c in components {
                    out.push(Component {
                        coefficient: c.coefficient,
                        measure: c.measure.amplitude_weight(u)?,
                    });
                }
                Measure::Mixture { components: out }
            }
        };
        let tv = out.total_variation()?;
        if !tv.is_finite() {
            return Err(Error::NonFinite("∫|u|² dμ is not finite".into()));
        }
        Ok(out)
    }

    pub fn validate(&self) -> std::result::Result<(), FieldError> {
        match self {
            Measure::Atomic(a) => a.validate(),
            Measure::Density(d) => d.validate(),
            Measure::Bernoulli(b) => b.validate(),
            Measure::BernoulliPart(p) => p.validate(),
            Measure::Mixture { components } => {
                for (i, c) in components.iter().enumerate() {
                    if !(c.coefficient > 0.0 && c.coefficient.is_finite()) {
                        return Err(FieldError::new(
                            format!("components[{i}].coefficient"),
                            "must be positive and finite",
                        ));
                    }
                    c.measure
                        .validate()
                        .map_err(|e| e.under(&format!("components[{i}].measure")))?;
                }
                Ok(())
            }
        }
    }
}

impl BernoulliPart {
    fn scaled_by(&self, u: &AmplitudeProfile) -> Result<Measure> {
        let c = u.as_constant().ok_or_else(|| {
            Error::Unsupported(
                "only constant amplitude profiles can weight a Bernoulli measure".into(),
            )
        })?;
        let w = c * c;
        if w == 0.0 {
            return Ok(Measure::zero());
        }
        Ok(Measure::BernoulliPart(BernoulliPart {
            eta: self.eta,
            pieces: self
                .pieces
                .iter()
                .map(|p| Cylinder {
                    weight: p.weight * w,
                    ..*p
                })
                .collect(),
            mass_uncertainty: self.mass_uncertainty * w,
        }))
    }
}
