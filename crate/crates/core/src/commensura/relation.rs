//! Integer relations `Σ n_k λ_k = 0` and pairwise ratio rationality.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::frequency::{ratio_to_f64, Frequency};
use super::serde_big;
use super::surd::{integer_kernel, Surd};
use crate::error::{Error, Result};

/// Residual below which a real relation is accepted, relative to `max λ`.
pub const RELATION_TOL: f64 = 1e-9;

/// Most real frequencies the relation search accepts.
pub const MAX_REAL_FREQUENCIES: usize = 12;

/// Cap on `H^{n-1}`: beyond it, double precision produces spurious relations
/// with residual below [`RELATION_TOL`] for generic irrational inputs.
pub const SEARCH_VOLUME: f64 = 1e7;

/// Budget for the exhaustive search, in candidate coefficient vectors.
const EXHAUSTIVE_BUDGET: f64 = 4e6;

/// Largest denominator tried when reconstructing a real ratio as a fraction.
pub const RATIO_DENOMINATOR_BOUND: u64 = 100_000;

/// Relative residual required for a reconstructed ratio.
pub const RATIO_TOL: f64 = 1e-12;

/// Ratios further than this from 1 (either way) are left undecided.
const RATIO_RANGE: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationWitness {
    pub indices: Vec<usize>,
    #[serde(with = "serde_big::vec")]
    pub coefficients: Vec<BigInt>,
    #[serde(with = "serde_big::int")]
    pub height: BigInt,
    /// `|Σ n_k λ_k|` in floating point.
    pub residual: f64,
    /// The relation was verified in exact arithmetic.
    pub exact: bool,
}

impl RelationWitness {
    fn new(indices: Vec<usize>, mut coefficients: Vec<BigInt>, freqs: &[Frequency]) -> Self {
        // normalize: first coefficient positive
        if coefficients.first().is_some_and(|c| c.is_negative()) {
            for c in &mut coefficients {
                *c = -c.clone();
            }
        }
        let height = coefficients.iter().map(|c| c.abs()).max().unwrap_or_default();
        let exact_sum: Option<Surd> = indices.iter().zip(&coefficients).try_fold(Surd::default(), |acc, (&i, c)| {
            Some(acc.add(&freqs[i].exact_form()?.scale(&BigRational::from_integer(c.clone()))))
        });
        let float_sum: f64 = indices
            .iter()
            .zip(&coefficients)
            .map(|(&i, c)| c.to_f64().unwrap_or(f64::INFINITY) * freqs[i].value())
            .sum();
        let (residual, exact) = match exact_sum {
            Some(s) if s.is_zero() => (0.0, true),
            Some(s) => (s.to_f64().abs(), false),
            None => (float_sum.abs(), false),
        };
        RelationWitness {
            indices,
            coefficients,
            height,
            residual,
            exact,
        }
    }

    /// The full coefficient vector of length `n`.
    pub fn dense(&self, n: usize) -> Vec<BigInt> {
        let mut v = vec![BigInt::zero(); n];
        for (&i, c) in self.indices.iter().zip(&self.coefficients) {
            v[i] = c.clone();
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationSearch {
    pub witness: Option<RelationWitness>,
    /// Height actually searched; `None` means "no relation with coefficients up to this".
    pub height: u64,
}

/// Effective search height for `n` real frequencies.
pub fn effective_height(n: usize, height: u64) -> u64 {
    if n < 2 {
        return height;
    }
    let cap = SEARCH_VOLUME.powf(1.0 / (n - 1) as f64).floor() as u64;
    height.min(cap.max(1))
}

/// Looks for a nontrivial integer relation among `freqs`.
///
/// With two or more exact rationals a relation always exists and the one of
/// least height among exact pairs is returned. When every frequency has an
/// exact surd form the relation lattice is computed exactly, so a missing
/// witness means independence. Otherwise the search is over coefficients of
/// magnitude at most `height` (see [`effective_height`]) and a missing
/// witness never means independence.
pub fn rational_relation(freqs: &[Frequency], height: u64) -> Result<RelationSearch> {
    if height < 1 {
        return Err(Error::param("height", "must be at least 1"));
    }
    if freqs.len() < 2 {
        return Err(Error::param("freqs", "need at least two frequencies"));
    }
    for f in freqs {
        f.check_positive()?;
    }
    let exact: Vec<usize> = (0..freqs.len()).filter(|&i| freqs[i].is_exact()).collect();
    if exact.len() >= 2 {
        let mut best: Option<(BigInt, usize, usize, BigInt, BigInt)> = None;
        for (a, &i) in exact.iter().enumerate() {
            for &j in &exact[a + 1..] {
                let (ni, nj) = pair_relation(freqs[i].as_exact().unwrap(), freqs[j].as_exact().unwrap());
                let h = ni.abs().max(nj.abs());
                if best.as_ref().is_none_or(|b| h < b.0) {
                    best = Some((h, i, j, ni, nj));
                }
            }
        }
        let (_, i, j, ni, nj) = best.unwrap();
        return Ok(RelationSearch {
            witness: Some(RelationWitness::new(vec![i, j], vec![ni, nj], freqs)),
            height,
        });
    }
    if freqs.len() > MAX_REAL_FREQUENCIES {
        return Err(Error::param(
            "freqs",
            format!("at most {MAX_REAL_FREQUENCIES} frequencies for a real relation search"),
        ));
    }
    let values: Vec<f64> = freqs.iter().map(Frequency::value).collect();
    let h = effective_height(values.len(), height);
    let found = if values.len() == 2 {
        two_term(&values, h)
    } else {
        let via_lattice = lll_search(&values, h);
        let volume = (2.0 * h as f64 + 1.0).powi(values.len() as i32 - 1);
        if via_lattice.is_none() && volume <= EXHAUSTIVE_BUDGET {
            exhaustive(&values, h)
        } else {
            via_lattice
        }
    };
    let sparse = |c: Vec<BigInt>| {
        let (indices, coefficients): (Vec<usize>, Vec<BigInt>) =
            c.into_iter().enumerate().filter(|(_, c)| !c.is_zero()).unzip();
        RelationWitness::new(indices, coefficients, freqs)
    };
    let mut witness = found.map(|c| sparse(c.into_iter().map(BigInt::from).collect()));
    let forms: Option<Vec<Surd>> = freqs.iter().map(Frequency::exact_form).collect();
    if let Some(forms) = forms {
        // the exact lattice settles what the floating-point search suggested
        if !witness.as_ref().is_some_and(|w| w.exact) {
            witness = integer_kernel(&forms)
                .into_iter()
                .min_by_key(|v| v.iter().map(|c| c.abs()).max())
                .map(sparse);
        }
    }
    Ok(RelationSearch { witness, height: h })
}

/// `(n_i, n_j)` of least height with `n_i a + n_j b = 0`.
fn pair_relation(a: &BigRational, b: &BigRational) -> (BigInt, BigInt) {
    // b/a = (pb·qa)/(qb·pa) = u/v in lowest terms; v·b - u·a = 0
    let r = b / a;
    (-r.numer().clone(), r.denom().clone())
}

fn accept(values: &[f64], c: &[i64]) -> Option<f64> {
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let s: f64 = c.iter().zip(values).map(|(&c, &v)| c as f64 * v).sum();
    (s.abs() < RELATION_TOL * scale).then_some(s.abs())
}

/// Continued-fraction convergents `p/q` of `x ≥ 0` with `max(p, q) ≤ bound`.
pub fn convergents(x: f64, bound: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let (mut p0, mut q0, mut p1, mut q1) = (0u128, 1u128, 1u128, 0u128);
    let mut y = x;
    for _ in 0..64 {
        if !y.is_finite() || y > 1e18 {
            break;
        }
        let a = y.floor();
        let ai = a as u128;
        let p2 = ai * p1 + p0;
        let q2 = ai * q1 + q0;
        if p2.max(q2) > bound as u128 {
            break;
        }
        out.push((p2 as u64, q2 as u64));
        let frac = y - a;
        if frac <= 0.0 {
            break;
        }
        y = 1.0 / frac;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    out
}

fn two_term(values: &[f64], h: u64) -> Option<Vec<i64>> {
    let (a, b) = (values[0], values[1]);
    // b/a ≈ p/q  ⇒  q·b - p·a ≈ 0
    convergents(b / a, h)
        .into_iter()
        .map(|(p, q)| vec![-(p as i64), q as i64])
        .find(|c| accept(values, c).is_some())
}

fn exhaustive(values: &[f64], h: u64) -> Option<Vec<i64>> {
    let n = values.len();
    let h = h as i64;
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut best: Option<(i64, f64, Vec<i64>)> = None;
    let mut c = vec![-h; n - 1];
    loop {
        if c.iter().any(|&x| x != 0) {
            let s: f64 = c.iter().zip(&values[1..]).map(|(&c, &v)| c as f64 * v).sum();
            let c0 = (-s / values[0]).round();
            if c0.abs() <= h as f64 {
                let r = (c0 * values[0] + s).abs();
                if r < RELATION_TOL * scale {
                    let mut full = vec![c0 as i64];
                    full.extend_from_slice(&c);
                    let height = full.iter().map(|x| x.abs()).max().unwrap();
                    if best.as_ref().is_none_or(|b| (height, r) < (b.0, b.1)) {
                        best = Some((height, r, full));
                    }
                }
            }
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == c.len() {
                return best.map(|b| b.2);
            }
            if c[k] < h {
                c[k] += 1;
                break;
            }
            c[k] = -h;
            k += 1;
        }
    }
}

/// LLL on the lattice spanned by `e_i ⊕ C·λ_i`; short vectors with a small
/// last coordinate are relation candidates.
fn lll_search(values: &[f64], h: u64) -> Option<Vec<i64>> {
    let n = values.len();
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let c = 1e14 / scale;
    let mut basis: Vec<Vec<i128>> = (0..n)
        .map(|i| {
            let mut row = vec![0i128; n + 1];
            row[i] = 1;
            row[n] = (c * values[i]).round() as i128;
            row
        })
        .collect();
    lll_reduce(&mut basis, 0.99);
    let mut best: Option<(i64, Vec<i64>)> = None;
    for row in &basis {
        let coeffs: Option<Vec<i64>> = row[..n].iter().map(|&x| i64::try_from(x).ok()).collect();
        let Some(coeffs) = coeffs else { continue };
        let height = coeffs.iter().map(|x| x.abs()).max().unwrap_or(0);
        if height == 0 || height as u64 > h {
            continue;
        }
        if accept(values, &coeffs).is_some() && best.as_ref().is_none_or(|b| height < b.0) {
            best = Some((height, coeffs));
        }
    }
    best.map(|b| b.1)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gram_schmidt(basis: &[Vec<i128>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) {
    let n = basis.len();
    let rows: Vec<Vec<f64>> = basis
        .iter()
        .map(|r| r.iter().map(|&x| x as f64).collect())
        .collect();
    let mut star: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut mu = vec![vec![0.0; n]; n];
    let mut norms = vec![0.0; n];
    for i in 0..n {
        let mut v = rows[i].clone();
        for j in 0..i {
            mu[i][j] = if norms[j] > 0.0 { dot(&rows[i], &star[j]) / norms[j] } else { 0.0 };
            for (vk, sk) in v.iter_mut().zip(&star[j]) {
                *vk -= mu[i][j] * sk;
            }
        }
        norms[i] = dot(&v, &v);
        star.push(v);
    }
    (star, mu, norms)
}

/// Textbook LLL with floating-point Gram–Schmidt, recomputed after each swap.
fn lll_reduce(basis: &mut [Vec<i128>], delta: f64) {
    let n = basis.len();
    let (mut _star, mut mu, mut norms) = gram_schmidt(basis);
    let mut k = 1;
    let mut iterations = 0;
    while k < n && iterations < 100_000 {
        iterations += 1;
        for j in (0..k).rev() {
            let q = mu[k][j].round();
            if q != 0.0 {
                let qi = q as i128;
                let (head, tail) = basis.split_at_mut(k);
                for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                    *x -= qi * y;
                }
                for l in 0..=j {
                    let m = if l == j { 1.0 } else { mu[j][l] };
                    mu[k][l] -= q * m;
                }
            }
        }
        if norms[k] >= (delta - mu[k][k - 1] * mu[k][k - 1]) * norms[k - 1] {
            k += 1;
        } else {
            basis.swap(k, k - 1);
            (_star, mu, norms) = gram_schmidt(basis);
            k = (k - 1).max(1);
        }
    }
}

/// Rational reconstruction of a positive real ratio, if it is a fraction
/// with denominator at most [`RATIO_DENOMINATOR_BOUND`].
pub fn rational_ratio(x: f64) -> Option<BigRational> {
    if !(x.is_finite() && x > 0.0) {
        return None;
    }
    let bound = RATIO_DENOMINATOR_BOUND.saturating_mul(x.ceil().max(1.0) as u64);
    convergents(x, bound)
        .into_iter()
        .filter(|&(_, q)| q <= RATIO_DENOMINATOR_BOUND)
        .find(|&(p, q)| ((p as f64 / q as f64) - x).abs() <= RATIO_TOL * x)
        .map(|(p, q)| BigRational::new(p.into(), q.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum StrongVerdict {
    /// Every ratio `λ_k/λ_0` is rational.
    Yes {
        #[serde(with = "serde_big::ratio_vec")]
        ratios_to_first: Vec<BigRational>,
        /// All ratios were decided in exact arithmetic.
        exact: bool,
    },
    /// `λ_j/λ_i` is irrational (`exact`) or not a fraction with denominator up to the bound.
    No {
        pair: (usize, usize),
        denominator_bound: u64,
        exact: bool,
    },
    Undecided { pair: (usize, usize), reason: String },
}

enum PairRatio {
    Rational(BigRational, bool),
    Irrational(bool),
    Undecided(String),
}

/// Ratio `λ_j/λ_i`; the flags record whether exact arithmetic decided it.
fn pair_ratio(freqs: &[Frequency], i: usize, j: usize) -> PairRatio {
    if let (Some(a), Some(b)) = (freqs[i].exact_form(), freqs[j].exact_form()) {
        return match b.ratio_to(&a) {
            Some(r) => PairRatio::Rational(r, true),
            None => PairRatio::Irrational(true),
        };
    }
    let r = freqs[j].value() / freqs[i].value();
    if !(1.0 / RATIO_RANGE..=RATIO_RANGE).contains(&r) {
        return PairRatio::Undecided(format!("ratio {r:e} outside the decidable range"));
    }
    match rational_ratio(r) {
        Some(q) => PairRatio::Rational(q, false),
        None => PairRatio::Irrational(false),
    }
}

/// Strong rational commensurability, decided through pairwise ratios.
pub fn strong_commensurate(freqs: &[Frequency]) -> Result<StrongVerdict> {
    if freqs.len() < 2 {
        return Err(Error::param("freqs", "need at least two frequencies"));
    }
    for f in freqs {
        f.check_positive()?;
    }
    let mut ratios = Vec::with_capacity(freqs.len());
    ratios.push(BigRational::from_integer(1.into()));
    let mut all_exact = true;
    let mut undecided = None;
    for j in 1..freqs.len() {
        match pair_ratio(freqs, 0, j) {
            PairRatio::Rational(r, ex) => {
                all_exact &= ex;
                ratios.push(r);
            }
            PairRatio::Irrational(exact) => {
                return Ok(StrongVerdict::No {
                    pair: (0, j),
                    denominator_bound: RATIO_DENOMINATOR_BOUND,
                    exact,
                })
            }
            PairRatio::Undecided(reason) => {
                undecided.get_or_insert((0, j, reason));
                ratios.push(BigRational::zero());
            }
        }
    }
    // ratios to the first element settle every pair except when one was undecided
    if let Some((i, j, reason)) = undecided {
        for a in 1..freqs.len() {
            for b in a + 1..freqs.len() {
                if let PairRatio::Irrational(exact) = pair_ratio(freqs, a, b) {
                    return Ok(StrongVerdict::No {
                        pair: (a, b),
                        denominator_bound: RATIO_DENOMINATOR_BOUND,
                        exact,
                    });
                }
            }
        }
        return Ok(StrongVerdict::Undecided { pair: (i, j), reason });
    }
    if !all_exact {
        // reconstructed ratios must also be mutually consistent
        for a in 1..freqs.len() {
            for b in a + 1..freqs.len() {
                if freqs[a].exact_form().is_none() || freqs[b].exact_form().is_none() {
                    let want = &ratios[b] / &ratios[a];
                    let got = freqs[b].value() / freqs[a].value();
                    if (ratio_to_f64(&want) - got).abs() > 1e3 * RATIO_TOL * got {
                        return Ok(StrongVerdict::No {
                            pair: (a, b),
                            denominator_bound: RATIO_DENOMINATOR_BOUND,
                            exact: false,
                        });
                    }
                }
            }
        }
    }
    Ok(StrongVerdict::Yes {
        ratios_to_first: ratios,
        exact: all_exact,
    })
}

pub(crate) fn lcm_gcd_base(values: &[BigRational]) -> BigRational {
    let mut num = BigInt::zero();
    let mut den = BigInt::from(1);
    for r in values {
        num = num.gcd(r.numer());
        den = den.lcm(r.denom());
    }
    BigRational::new(num, den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(s: &str) -> Frequency {
        Frequency::parse(s).unwrap()
    }

    fn dense_i64(w: &RelationWitness, n: usize) -> Vec<i64> {
        w.dense(n).iter().map(|c| c.to_i64().unwrap()).collect()
    }

    #[test]
    fn exact_rationals_always_related() {
        let fs = [f("1"), f("1/2"), f("1/3")];
        let w = rational_relation(&fs, 1).unwrap().witness.unwrap();
        assert!(w.exact);
        assert_eq!(dense_i64(&w, 3), vec![1, -2, 0]);
    }

    #[test]
    fn sqrt_two_has_no_small_relation() {
        let fs = [f("1"), f("sqrt(2)")];
        let s = rational_relation(&fs, 1_000_000).unwrap();
        assert!(s.witness.is_none());
        assert_eq!(s.height, 1_000_000);
    }

    #[test]
    fn finds_three_term_relation() {
        let fs = [f("1"), f("sqrt(2)"), f("1+sqrt(2)")];
        let w = rational_relation(&fs, 1_000_000).unwrap().witness.unwrap();
        assert_eq!(dense_i64(&w, 3), vec![1, 1, -1]);
        assert!(w.exact && w.residual == 0.0);
        let w = rational_relation(&fs, 5).unwrap().witness.unwrap();
        assert_eq!(dense_i64(&w, 3), vec![1, 1, -1]);
    }

    #[test]
    fn lll_finds_larger_relations() {
        // 3√2 + 5√3 − 7·x = 0 for x = (3√2 + 5√3)/7
        let x = (3.0 * 2f64.sqrt() + 5.0 * 3f64.sqrt()) / 7.0;
        let fs = [f("sqrt2"), f("sqrt3"), Frequency::real(x, "x"), f("pi")];
        let w = rational_relation(&fs, 1000).unwrap().witness.unwrap();
        let d = dense_i64(&w, 4);
        assert_eq!(d, vec![3, 5, -7, 0]);
    }

    #[test]
    fn height_must_be_positive() {
        assert!(rational_relation(&[f("1"), f("2")], 0).is_err());
    }

    #[test]
    fn convergents_of_golden_ratio_are_fibonacci() {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let c = convergents(phi, 100);
        assert_eq!(c, vec![(1, 1), (2, 1), (3, 2), (5, 3), (8, 5), (13, 8), (21, 13), (34, 21), (55, 34), (89, 55)]);
    }

    #[test]
    fn strong_examples() {
        let fact: Vec<Frequency> = (1..=6).map(|k| f(&format!("1/factorial({k})"))).collect();
        assert!(matches!(strong_commensurate(&fact).unwrap(), StrongVerdict::Yes { exact: true, .. }));
        assert_eq!(
            strong_commensurate(&[f("1"), f("sqrt(2)")]).unwrap(),
            StrongVerdict::No {
                pair: (0, 1),
                denominator_bound: RATIO_DENOMINATOR_BOUND,
                exact: true,
            }
        );
        assert!(matches!(
            strong_commensurate(&[f("3"), f("6"), f("15")]).unwrap(),
            StrongVerdict::Yes { exact: true, .. }
        ));
    }

    #[test]
    fn strong_reconstructs_real_ratios() {
        let v = strong_commensurate(&[f("pi"), f("3*pi/7")]).unwrap();
        match v {
            StrongVerdict::Yes { ratios_to_first, exact } => {
                assert!(!exact);
                assert_eq!(ratios_to_first[1], BigRational::new(3.into(), 7.into()));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn extreme_ratio_is_undecided() {
        let v = strong_commensurate(&[f("1e-13*pi"), f("1")]).unwrap();
        assert!(matches!(v, StrongVerdict::Undecided { .. }));
    }
}
