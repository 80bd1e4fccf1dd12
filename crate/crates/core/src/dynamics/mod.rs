//! Dynamical verdicts for linear flows: wandering certificates, recurrence
//! scans, Type I/II/III trajectory classification, equidistribution tests,
//! the σ-condition scan and the non-periodicity check for densities.
//!
//! Finite computations can only support or refute asymptotic statements at
//! the tested horizon, so every report carries the window it looked at.

mod classify;
mod nonperiodic;
mod recur;
mod sigma;
mod wander;
mod weyl;

pub use classify::{classify_trajectory, Confidence, PrefixPeriod, TrajectoryClass, TrajectoryKind};
pub use nonperiodic::{nonperiodicity_check_ac, NonperiodicReport, PeriodTest};
pub use recur::{
    recurrence_search, recurrence_search_rule, return_distance, RecurrenceOptions,
    RecurrenceReport, RecurrenceVerdict, ReturnTime, MAX_RECURRENCE_PREFIX,
};
pub use sigma::{
    sigma_condition_scan, DyadicCell, SigmaReport, SigmaVerdict, MAX_DYADIC_DEPTH, SCAN_SCOPE,
};
pub use wander::{wandering_certificate, CertificateBasis, SampleWindow, WanderingCertificate};
pub use weyl::{weyl_discrepancy, weyl_table, WeylRow};
