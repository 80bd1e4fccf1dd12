//! Periodicity, transitivity and wandering of linear flows `Φ_t u = e^{itλ} u`
//! on invariant tori of systems of harmonic oscillators.
//!
//! The crate is organized bottom-up:
//!
//! - [`measure`]: finite Borel measures on ℝ (atomic, density, Bernoulli, mixtures)
//! - [`charfn`]: characteristic functions, decay ceilings, the displacement identity
//! - [`commensura`]: exact and height-bounded rational commensurability
//! - [`flow`]: tori, states, evolution, conserved quantities, the symplectic form
//! - [`dynamics`]: wandering certificates, recurrence, trajectory types, equidistribution
//! - [`scenario`]: the JSON scenario schema shared with the command-line tool
//!
//! No module performs I/O.

// `!(x > 0.0)` is how NaN gets rejected along with nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod charfn;
pub mod commensura;
pub mod dynamics;
pub mod error;
pub mod flow;
pub mod measure;
pub mod profile;
pub mod quadrature;
pub mod scenario;

pub use error::{Error, FieldError, Result};
