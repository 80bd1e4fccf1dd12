use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::wander::SampleWindow;
use crate::charfn::{limsup_estimate, Convention};
use crate::error::{Error, Result};
use crate::measure::{BorelSet, Measure};

pub const MAX_DYADIC_DEPTH: u32 = 12;

/// Scope label carried by every scan verdict: finitely many cells, finite window.
pub const SCAN_SCOPE: &str = "on tested family";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicCell {
    pub depth: u32,
    pub index: u64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum SigmaVerdict {
    HoldsOnFamily,
    /// First failing cell in (depth, index) order.
    FailsOnSet {
        cell: DyadicCell,
        mass: f64,
        limsup: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaReport {
    pub verdict: SigmaVerdict,
    pub scope: String,
    pub sigma: f64,
    pub depth: u32,
    pub window: SampleWindow,
    pub convention: Convention,
    pub cells_tested: usize,
    /// Largest `limsup |μ̂|_A| / ‖μ|_A‖` over the tested cells.
    pub worst_ratio: f64,
}

/// Checks `limsup |μ̂|_A| ≤ (1 - σ)‖μ|_A‖` on every dyadic cell `A` of depth
/// `≤ depth` of the support hull that carries mass.
pub fn sigma_condition_scan(
    mu: &Measure,
    depth: u32,
    sigma: f64,
    window: SampleWindow,
    convention: Convention,
) -> Result<SigmaReport> {
    if depth > MAX_DYADIC_DEPTH {
        return Err(Error::param("depth", format!("at most {MAX_DYADIC_DEPTH}")));
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::param("sigma", "must lie in the open interval (0, 1)"));
    }
    let hull = mu
        .support_interval()
        .ok_or_else(|| Error::Degenerate(format!("{} is the zero measure", mu.label())))?;
    let (lo, hi) = if hull.hi > hull.lo {
        (hull.lo, hull.hi + 1e-9 * (hull.hi - hull.lo).max(1.0))
    } else {
        (hull.lo - 0.5, hull.lo + 0.5)
    };
    let cells: Vec<(u32, u64)> = (0..=depth)
        .flat_map(|d| (0..1u64 << d).map(move |i| (d, i)))
        .collect();

    let results: Vec<Option<(DyadicCell, f64, f64)>> = cells
        .par_iter()
        .map(|&(d, i)| {
            let set = BorelSet::dyadic_cell(lo, hi, d, i);
            let part = mu.restrict(&set);
            let mass = part.resolved_mass()?;
            if !(mass > 0.0) {
                return Ok(None);
            }
            let iv = set.intervals()[0];
            let ls = limsup_estimate(&part, window.t_lo, window.t_hi, window.samples, convention)?;
            let cell = DyadicCell {
                depth: d,
                index: i,
                lo: iv.lo,
                hi: iv.hi,
            };
            Ok(Some((cell, mass, ls)))
        })
        .collect::<Result<_>>()?;

    let tested: Vec<_> = results.into_iter().flatten().collect();
    let worst_ratio = tested.iter().map(|(_, m, l)| l / m).fold(0.0, f64::max);
    let verdict = tested
        .iter()
        .find(|(_, m, l)| *l > (1.0 - sigma) * m)
        .map_or(SigmaVerdict::HoldsOnFamily, |&(cell, mass, limsup)| {
            SigmaVerdict::FailsOnSet { cell, mass, limsup }
        });
    Ok(SigmaReport {
        verdict,
        scope: SCAN_SCOPE.to_string(),
        sigma,
        depth,
        window,
        convention,
        cells_tested: tested.len(),
        worst_ratio,
    })
}
