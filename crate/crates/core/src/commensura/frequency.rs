use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::surd::Surd;
use crate::error::{Error, Result};

/// A positive frequency, either an exact rational or a real number known to
/// floating-point precision.
#[derive(Debug, Clone, PartialEq)]
pub enum Frequency {
    Exact(BigRational),
    /// `label` is the expression the value came from, e.g. `sqrt(2)`.
    /// `surd` is its exact form when it is a combination of square roots of rationals.
    Real {
        value: f64,
        label: String,
        surd: Option<Surd>,
    },
}

impl Frequency {
    pub fn exact(num: i64, den: i64) -> Self {
        Frequency::Exact(BigRational::new(num.into(), den.into()))
    }

    pub fn integer(n: i64) -> Self {
        Frequency::exact(n, 1)
    }

    pub fn real(value: f64, label: impl Into<String>) -> Self {
        Frequency::Real {
            value,
            label: label.into(),
            surd: None,
        }
    }

    /// Parses an expression such as `3/4`, `0.125`, `sqrt(2)`, `1+sqrt2`,
    /// `pi/3`, `e`, `factorial(5)` or `1/factorial(4)`.
    ///
    /// Results stay exact as long as only rational operations and square
    /// roots of perfect-square rationals are involved.
    pub fn parse(src: &str) -> Result<Self> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
        };
        let v = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        let f = match v {
            Val::Exact(r) => Frequency::Exact(r),
            Val::Surd(r) => Frequency::Real {
                value: r.to_f64(),
                label: src.trim().to_string(),
                surd: Some(r),
            },
            Val::Real(x) => Frequency::real(x, src.trim()),
        };
        f.check_positive()?;
        Ok(f)
    }

    pub fn check_positive(&self) -> Result<()> {
        let ok = match self {
            Frequency::Exact(r) => r.is_positive(),
            Frequency::Real { value, .. } => *value > 0.0 && value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param("frequency", format!("{self} is not a positive finite number")))
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            Frequency::Exact(r) => ratio_to_f64(r),
            Frequency::Real { value, .. } => *value,
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Frequency::Exact(r) => Some(r),
            Frequency::Real { .. } => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Frequency::Exact(_))
    }

    /// Exact algebraic form: rationals and sums of rational multiples of square roots.
    pub fn exact_form(&self) -> Option<Surd> {
        match self {
            Frequency::Exact(r) => Some(Surd::rational(r.clone())),
            Frequency::Real { surd, .. } => surd.clone(),
        }
    }

    /// Multiplies by a positive rational, keeping exactness where possible.
    pub fn scale(&self, c: &BigRational) -> Frequency {
        match self {
            Frequency::Exact(r) => Frequency::Exact(r * c),
            Frequency::Real { value, label, surd } => Frequency::Real {
                value: value * ratio_to_f64(c),
                label: format!("({c})*({label})"),
                surd: surd.as_ref().map(|s| s.scale(c)),
            },
        }
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frequency::Exact(r) => write!(f, "{r}"),
            Frequency::Real { label, .. } => f.write_str(label),
        }
    }
}

impl FromStr for Frequency {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Frequency::parse(s)
    }
}

impl Serialize for Frequency {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Frequency {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(serde_json::Number),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Text(s) => s,
            Raw::Number(n) => n.to_string(),
        };
        Frequency::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Nearest `f64` to a rational, also for huge numerators and denominators.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if let Some(x) = r.to_f64() {
        if x.is_finite() && (x != 0.0 || r.is_zero()) {
            return x;
        }
    }
    // fall back to logarithms for extreme magnitudes
    let sign = if r.is_negative() { -1.0 } else { 1.0 };
    let ln = big_ln(&r.numer().abs()) - big_ln(r.denom());
    sign * ln.exp()
}

fn big_ln(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return n.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top: BigInt = n >> shift;
    top.to_f64().unwrap_or(1.0).ln() + shift as f64 * std::f64::consts::LN_2
}

pub(crate) fn parse_ratio(s: &str) -> Option<BigRational> {
    match Frequency::parse(s).ok()? {
        Frequency::Exact(r) => Some(r),
        Frequency::Real { .. } => None,
    }
}

#[derive(Debug, Clone)]
enum Val {
    Exact(BigRational),
    /// Exact but irrational.
    Surd(Surd),
    Real(f64),
}

impl Val {
    fn to_f64(&self) -> f64 {
        match self {
            Val::Exact(r) => ratio_to_f64(r),
            Val::Surd(s) => s.to_f64(),
            Val::Real(x) => *x,
        }
    }

    fn exact_form(&self) -> Option<Surd> {
        match self {
            Val::Exact(r) => Some(Surd::rational(r.clone())),
            Val::Surd(s) => Some(s.clone()),
            Val::Real(_) => None,
        }
    }

    fn from_surd(s: Surd) -> Val {
        match s.as_rational() {
            Some(r) => Val::Exact(r),
            None => Val::Surd(s),
        }
    }
}

/// Largest factorial argument accepted by the parser.
const MAX_FACTORIAL: u64 = 1000;

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::param(
            "frequency",
            format!(
                "{msg} at position {} in `{}`",
                self.pos,
                String::from_utf8_lossy(self.src)
            ),
        )
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Val> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                let rhs = self.term()?;
                acc = arith(acc, rhs, Op::Add, self)?;
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                acc = arith(acc, rhs, Op::Sub, self)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Val> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.unary()?;
                acc = arith(acc, rhs, Op::Mul, self)?;
            } else if self.eat(b'/') {
                let rhs = self.unary()?;
                acc = arith(acc, rhs, Op::Div, self)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Val> {
        if self.eat(b'-') {
            return Ok(match self.unary()? {
                Val::Exact(r) => Val::Exact(-r),
                Val::Surd(s) => Val::Surd(s.neg()),
                Val::Real(x) => Val::Real(-x),
            });
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            return power(base, exp, self);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Val> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.name(),
            _ => Err(self.error("expected a number, constant or `(`")),
        }
    }

    fn number(&mut self) -> Result<Val> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
        {
            self.pos += 1;
        }
        let mantissa = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let mut exponent: i64 = 0;
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            let estart = self.pos;
            if self.pos < self.src.len() && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-') {
                self.pos += 1;
            }
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            match std::str::from_utf8(&self.src[estart..self.pos]).unwrap().parse() {
                Ok(e) => exponent = e,
                // `2e` is 2 times Euler's number, not an exponent
                Err(_) => self.pos = save,
            }
        }
        let (int_part, frac_part) = match mantissa.split_once('.') {
            Some((i, f)) => (i, f),
            None => (mantissa, ""),
        };
        if (int_part.is_empty() && frac_part.is_empty()) || frac_part.contains('.') {
            return Err(self.error("malformed number"));
        }
        if exponent.abs() > 4000 {
            return Err(self.error("exponent out of range"));
        }
        let digits: BigInt = format!("{int_part}{frac_part}0")
            .parse::<BigInt>()
            .map_err(|_| self.error("malformed number"))?
            / 10;
        let scale = exponent - frac_part.len() as i64;
        let ten = BigInt::from(10);
        let r = if scale >= 0 {
            BigRational::from_integer(digits * num_traits::pow(ten, scale as usize))
        } else {
            BigRational::new(digits, num_traits::pow(ten, (-scale) as usize))
        };
        Ok(Val::Exact(r))
    }

    fn name(&mut self) -> Result<Val> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_ascii_lowercase();
        match name.as_str() {
            "pi" => Ok(Val::Real(std::f64::consts::PI)),
            "e" => Ok(Val::Real(std::f64::consts::E)),
            "phi" => Ok(sqrt(Val::Exact(BigRational::from_integer(5.into())), self)
                .and_then(|s| arith(s, Val::Exact(BigRational::one()), Op::Add, self))
                .and_then(|s| arith(s, Val::Exact(BigRational::from_integer(2.into())), Op::Div, self))?),
            "sqrt" | "factorial" => {
                if !self.eat(b'(') {
                    return Err(self.error("expected `(` after function name"));
                }
                let arg = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                if name == "sqrt" {
                    sqrt(arg, self)
                } else {
                    factorial(arg, self)
                }
            }
            other => match other.strip_prefix("sqrt") {
                Some(n) if !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()) => {
                    let n: BigInt = n.parse().unwrap();
                    sqrt(Val::Exact(BigRational::from_integer(n)), self)
                }
                _ => Err(self.error(&format!("unknown name `{other}`"))),
            },
        }
    }
}

#[derive(Clone, Copy)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

fn arith(a: Val, b: Val, op: Op, p: &Parser) -> Result<Val> {
    if let (Val::Exact(x), Val::Exact(y)) = (&a, &b) {
        return Ok(Val::Exact(match op {
            Op::Add => x + y,
            Op::Sub => x - y,
            Op::Mul => x * y,
            Op::Div => {
                if y.is_zero() {
                    return Err(p.error("division by zero"));
                }
                x / y
            }
        }));
    }
    if let (Some(x), Some(y)) = (a.exact_form(), b.exact_form()) {
        let exact = match op {
            Op::Add => Some(x.add(&y)),
            Op::Sub => Some(x.sub(&y)),
            Op::Mul => x.mul(&y),
            Op::Div => {
                if y.is_zero() {
                    return Err(p.error("division by zero"));
                }
                x.div(&y)
            }
        };
        if let Some(v) = exact {
            return Ok(Val::from_surd(v));
        }
    }
    let (x, y) = (a.to_f64(), b.to_f64());
    let v = match op {
        Op::Add => x + y,
        Op::Sub => x - y,
        Op::Mul => x * y,
        Op::Div => x / y,
    };
    if !v.is_finite() {
        return Err(p.error("non-finite intermediate value"));
    }
    Ok(Val::Real(v))
}

fn power(base: Val, exp: Val, p: &Parser) -> Result<Val> {
    if let (Val::Exact(b), Val::Exact(e)) = (&base, &exp) {
        if e.is_integer() {
            let n = e.to_integer().to_i32().ok_or_else(|| p.error("exponent too large"))?;
            if n.abs() > 4096 {
                return Err(p.error("exponent too large"));
            }
            if b.is_zero() && n < 0 {
                return Err(p.error("division by zero"));
            }
            return Ok(Val::Exact(num_traits::pow::Pow::pow(b, n)));
        }
        if *e == BigRational::new(1.into(), 2.into()) {
            return sqrt(base, p);
        }
    }
    if let (Val::Surd(b), Val::Exact(e)) = (&base, &exp) {
        // small integer powers stay exact
        if let Some(n) = e.is_integer().then(|| e.to_integer().to_i32()).flatten().filter(|n| n.abs() <= 64) {
            let mut acc = Some(Surd::rational(BigRational::one()));
            for _ in 0..n.abs() {
                acc = acc.and_then(|a| a.mul(b));
            }
            let acc = if n < 0 {
                acc.and_then(|a| Surd::rational(BigRational::one()).div(&a))
            } else {
                acc
            };
            if let Some(v) = acc {
                return Ok(Val::from_surd(v));
            }
        }
    }
    let v = base.to_f64().powf(exp.to_f64());
    if !v.is_finite() {
        return Err(p.error("non-finite power"));
    }
    Ok(Val::Real(v))
}

fn sqrt(v: Val, p: &Parser) -> Result<Val> {
    match v {
        Val::Exact(r) => {
            if r.is_negative() {
                return Err(p.error("square root of a negative number"));
            }
            let (n, d) = (r.numer(), r.denom());
            let (sn, sd) = (n.sqrt(), d.sqrt());
            if &(&sn * &sn) == n && &(&sd * &sd) == d {
                Ok(Val::Exact(BigRational::new(sn, sd)))
            } else if let Some(s) = Surd::sqrt_of(&r) {
                Ok(Val::Surd(s))
            } else {
                Ok(Val::Real(ratio_to_f64(&r).sqrt()))
            }
        }
        Val::Surd(s) if s.to_f64() >= 0.0 => Ok(Val::Real(s.to_f64().sqrt())),
        Val::Surd(_) => Err(p.error("square root of a negative number")),
        Val::Real(x) if x >= 0.0 => Ok(Val::Real(x.sqrt())),
        Val::Real(_) => Err(p.error("square root of a negative number")),
    }
}

fn factorial(v: Val, p: &Parser) -> Result<Val> {
    let n = match v {
        Val::Exact(r) if r.is_integer() && !r.is_negative() => r.to_integer().to_u64(),
        _ => None,
    }
    .ok_or_else(|| p.error("factorial needs a nonnegative integer"))?;
    if n > MAX_FACTORIAL {
        return Err(p.error("factorial argument too large"));
    }
    let f = (1..=n).fold(BigInt::one(), |acc, k| acc * k);
    Ok(Val::Exact(BigRational::from_integer(f)))
}
