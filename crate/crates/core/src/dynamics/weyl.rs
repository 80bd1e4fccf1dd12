use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Golden ratio; sampling steps are this multiple of the fastest period.
const PHI: f64 = 1.618_033_988_749_895;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylRow {
    pub samples: usize,
    pub bins: usize,
    pub discrepancy: f64,
}

/// Box-count discrepancy of the phase vectors `(λ_i t mod 2π)/2π`.
///
/// Samples `t_j = jΔ`, `j = 0, …, N-1`, with `Δ = φ · 2π/λ_max`, and returns
/// the total-variation distance `½ Σ_B |N_B/N - bins^{-d}|` between the
/// empirical box frequencies and the uniform distribution on a
/// `bins × … × bins` grid. Near 0 for equidistributed orbits; a closed orbit
/// through `c` of `bins^d` boxes scores at least `1 - c/bins^d`.
pub fn weyl_discrepancy(freqs: &[f64], samples: usize, bins: usize) -> Result<f64> {
    let d = freqs.len();
    if !(2..=4).contains(&d) {
        return Err(Error::param("freqs", "need between 2 and 4 frequencies"));
    }
    if freqs.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::param("freqs", "frequencies must be positive and finite"));
    }
    if bins == 0 || bins > 256 {
        return Err(Error::param("bins", "must lie in 1..=256"));
    }
    if samples < bins * bins {
        return Err(Error::param("samples", "need at least bins² samples"));
    }
    let lmax = freqs.iter().fold(0.0_f64, |m, &l| m.max(l));
    // phase of mode i at step j, in turns: j · φ · λ_i/λ_max
    let steps: Vec<f64> = freqs.iter().map(|l| PHI * l / lmax).collect();
    let cells = bins.pow(d as u32);
    let mut counts = vec![0u32; cells];
    for j in 0..samples {
        let mut idx = 0usize;
        for s in &steps {
            let x = (s * j as f64).fract();
            let b = ((x * bins as f64) as usize).min(bins - 1);
            idx = idx * bins + b;
        }
        counts[idx] += 1;
    }
    let n = samples as f64;
    let u = 1.0 / cells as f64;
    Ok(0.5 * counts.iter().map(|&c| (c as f64 / n - u).abs()).sum::<f64>())
}

/// [`weyl_discrepancy`] at each sample size.
pub fn weyl_table(freqs: &[f64], sample_sizes: &[usize], bins: usize) -> Result<Vec<WeylRow>> {
    sample_sizes
        .iter()
        .map(|&samples| {
            Ok(WeylRow {
                samples,
                bins,
                discrepancy: weyl_discrepancy(freqs, samples, bins)?,
            })
        })
        .collect()
}
