//! Exact arithmetic in the field generated by square roots of rationals.
//!
//! Square roots of distinct squarefree integers are linearly independent
//! over ℚ, so a sum `Σ q_d √d` is zero exactly when every `q_d` is.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// `Σ q_d √d` over distinct squarefree radicands `d ≥ 1`; `d = 1` is the rational part.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Surd {
    terms: BTreeMap<u64, BigRational>,
}

/// Trial division limit for radicand factoring.
const TRIAL_LIMIT: u128 = 1_000_000;

/// `n = k² s` with `s` squarefree, for `1 ≤ n < 2^128`. `None` when `n` is
/// too large to factor reliably.
fn squarefree_split(n: u128) -> Option<(u128, u64)> {
    let (mut k, mut s, mut m) = (1u128, 1u128, n);
    let mut d = 2u128;
    while d <= TRIAL_LIMIT && d * d <= m {
        if m % d == 0 {
            let mut e = 0;
            while m % d == 0 {
                m /= d;
                e += 1;
            }
            k *= d.pow(e / 2);
            if e % 2 == 1 {
                s *= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        // every prime factor of m exceeds the trial limit
        if m < TRIAL_LIMIT * TRIAL_LIMIT {
            s *= m;
        } else if m < TRIAL_LIMIT.pow(3) {
            // m is p, p·q or p²
            let r = isqrt(m);
            if r * r == m {
                k *= r;
            } else {
                s *= m;
            }
        } else {
            return None;
        }
    }
    Some((k, u64::try_from(s).ok()?))
}

fn isqrt(m: u128) -> u128 {
    let mut r = (m as f64).sqrt() as u128;
    while r * r > m {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= m {
        r += 1;
    }
    r
}

impl Surd {
    pub fn rational(r: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !r.is_zero() {
            terms.insert(1, r);
        }
        Surd { terms }
    }

    /// `√r` for `r ≥ 0`, when the radicand can be factored.
    pub fn sqrt_of(r: &BigRational) -> Option<Surd> {
        if r.is_negative() {
            return None;
        }
        if r.is_zero() {
            return Some(Surd::default());
        }
        // √(p/q) = √(pq)/q
        let pq = (r.numer() * r.denom()).to_u128()?;
        let (k, s) = squarefree_split(pq)?;
        let coeff = BigRational::new(BigInt::from(k), r.denom().clone());
        let mut terms = BTreeMap::new();
        terms.insert(s, coeff);
        Some(Surd { terms })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&1).cloned(),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(&d, q)| super::ratio_to_f64(q) * (d as f64).sqrt())
            .sum()
    }

    fn insert(&mut self, d: u64, q: BigRational) {
        let e = self.terms.entry(d).or_insert_with(BigRational::zero);
        *e += q;
        if e.is_zero() {
            self.terms.remove(&d);
        }
    }

    pub fn add(&self, other: &Surd) -> Surd {
        let mut out = self.clone();
        for (&d, q) in &other.terms {
            out.insert(d, q.clone());
        }
        out
    }

    pub fn neg(&self) -> Surd {
        Surd {
            terms: self.terms.iter().map(|(&d, q)| (d, -q)).collect(),
        }
    }

    pub fn sub(&self, other: &Surd) -> Surd {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &BigRational) -> Surd {
        if c.is_zero() {
            return Surd::default();
        }
        Surd {
            terms: self.terms.iter().map(|(&d, q)| (d, q * c)).collect(),
        }
    }

    /// Product; `None` if a combined radicand overflows.
    pub fn mul(&self, other: &Surd) -> Option<Surd> {
        let mut out = Surd::default();
        for (&a, p) in &self.terms {
            for (&b, q) in &other.terms {
                // √a√b = g√(a'b') with g = gcd(a, b), a = g a', b = g b'
                let g = num_integer::gcd(a, b);
                let d = (a / g).checked_mul(b / g)?;
                out.insert(d, p * q * BigRational::from_integer(BigInt::from(g)));
            }
        }
        Some(out)
    }

    /// Quotient when the divisor is a single term `q√d`.
    pub fn div(&self, other: &Surd) -> Option<Surd> {
        if other.terms.len() != 1 {
            return None;
        }
        let (&d, q) = other.terms.iter().next().unwrap();
        // x/(q√d) = x√d/(q d)
        let root = Surd {
            terms: BTreeMap::from([(d, BigRational::one())]),
        };
        let inv = BigRational::one() / (q * BigRational::from_integer(BigInt::from(d)));
        Some(self.mul(&root)?.scale(&inv))
    }

    /// `r` with `self = r · other`, if one exists.
    pub fn ratio_to(&self, other: &Surd) -> Option<BigRational> {
        let (&d, q) = other.terms.iter().next()?;
        let r = self.terms.get(&d)? / q;
        (other.scale(&r) == *self).then_some(r)
    }
}

/// Primitive integer basis of `{n ∈ ℚ^k : Σ n_j v_j = 0}`.
pub fn integer_kernel(vectors: &[Surd]) -> Vec<Vec<BigInt>> {
    let mut radicands: Vec<u64> = vectors.iter().flat_map(|v| v.terms.keys().copied()).collect();
    radicands.sort_unstable();
    radicands.dedup();
    let cols = vectors.len();
    let mut m: Vec<Vec<BigRational>> = radicands
        .iter()
        .map(|d| {
            vectors
                .iter()
                .map(|v| v.terms.get(d).cloned().unwrap_or_else(BigRational::zero))
                .collect()
        })
        .collect();
    // reduced row echelon form
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let lead = m[row][col].clone();
        for x in &mut m[row] {
            *x = &*x / &lead;
        }
        for r in 0..m.len() {
            if r != row && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                let pivot_row = m[row].clone();
                for (x, y) in m[r].iter_mut().zip(&pivot_row) {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); cols];
            v[f] = BigRational::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[r][f].clone();
            }
            let den = v.iter().fold(BigInt::one(), |acc, x| num_integer::lcm(acc, x.denom().clone()));
            let ints: Vec<BigInt> = v.iter().map(|x| (x * BigRational::from_integer(den.clone())).to_integer()).collect();
            let g = ints.iter().fold(BigInt::zero(), |acc, x| num_integer::gcd(acc, x.clone()));
            ints.into_iter().map(|x| x / &g).collect()
        })
        .collect()
}
