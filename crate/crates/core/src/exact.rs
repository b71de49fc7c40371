//! Exact scalars of the form `q * sqrt(m) * pi^(e/2) * pi^j`.

use std::fmt;
use std::ops::{Mul, Neg};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{MelnikovError, Result};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Splits `m` into `(s, r)` with `m = s^2 * r` and `r` squarefree.
pub fn squarefree_split(m: u64) -> (u64, u64) {
    assert!(m > 0, "radicand must be positive");
    let mut s = 1u64;
    let mut r = 1u64;
    let mut rest = m;
    let mut p = 2u64;
    while p * p <= rest {
        let mut e = 0;
        while rest.is_multiple_of(p) {
            rest /= p;
            e += 1;
        }
        for _ in 0..e / 2 {
            s *= p;
        }
        if e % 2 == 1 {
            r *= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    r *= rest;
    (s, r)
}

pub fn is_squarefree(m: u64) -> bool {
    squarefree_split(m).0 == 1
}

/// Exact value `coeff * sqrt(radicand) * pi^(pi_half/2) * pi^pi_int`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RadicalValue {
    coeff: Rational,
    radicand: u64,
    pi_half: u8,
    pi_int: i32,
}

impl RadicalValue {
    pub fn new(coeff: Rational, radicand: u64, pi_half: u8, pi_int: i32) -> Self {
        assert!(pi_half <= 1, "pi_half must be 0 or 1");
        let (s, r) = squarefree_split(radicand);
        let coeff = coeff * Rational::from_integer(BigInt::from(s));
        if coeff.is_zero() {
            return Self::zero();
        }
        RadicalValue { coeff, radicand: r, pi_half, pi_int }
    }

    pub fn zero() -> Self {
        RadicalValue { coeff: Rational::zero(), radicand: 1, pi_half: 0, pi_int: 0 }
    }

    pub fn one() -> Self {
        Self::rational(Rational::one())
    }

    pub fn rational(q: Rational) -> Self {
        Self::new(q, 1, 0, 0)
    }

    pub fn integer(n: i64) -> Self {
        Self::rational(int(n))
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Self::rational(Rational::from_integer(n))
    }

    pub fn sqrt(m: u64) -> Self {
        Self::new(Rational::one(), m, 0, 0)
    }

    pub fn sqrt_pi() -> Self {
        Self::new(Rational::one(), 1, 1, 0)
    }

    pub fn sqrt_2pi() -> Self {
        Self::new(Rational::one(), 2, 1, 0)
    }

    pub fn pi() -> Self {
        Self::new(Rational::one(), 1, 0, 1)
    }

    pub fn coeff(&self) -> &Rational {
        &self.coeff
    }

    pub fn radicand(&self) -> u64 {
        self.radicand
    }

    pub fn pi_half(&self) -> u8 {
        self.pi_half
    }

    pub fn pi_int(&self) -> i32 {
        self.pi_int
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.radicand == 1 && self.pi_half == 0 && self.pi_int == 0
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        if self.is_rational() {
            Some(&self.coeff)
        } else {
            None
        }
    }

    /// -1, 0 or 1.
    pub fn signum(&self) -> i8 {
        if self.coeff.is_zero() {
            0
        } else if self.coeff.is_positive() {
            1
        } else {
            -1
        }
    }

    pub fn same_radical(&self, other: &Self) -> bool {
        self.radicand == other.radicand && self.pi_half == other.pi_half && self.pi_int == other.pi_int
    }

    pub fn scale(&self, q: &Rational) -> Self {
        if q.is_zero() || self.is_zero() {
            return Self::zero();
        }
        RadicalValue { coeff: &self.coeff * q, ..self.clone() }
    }

    pub fn radical_mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let g = self.radicand.gcd(&other.radicand);
        let a = self.radicand / g;
        let b = other.radicand / g;
        // sqrt(g a) sqrt(g b) = g sqrt(a b), with a, b coprime and squarefree
        let coeff = &self.coeff * &other.coeff * int(g as i64);
        let radicand = a.checked_mul(b).expect("radicand overflow");
        let halves = self.pi_half + other.pi_half;
        let pi_int = self.pi_int + other.pi_int + (halves / 2) as i32;
        Self::new(coeff, radicand, halves % 2, pi_int)
    }

    pub fn radical_add(&self, other: &Self) -> Result<Self> {
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.is_zero() {
            return Ok(other.clone());
        }
        if !self.same_radical(other) {
            return Err(MelnikovError::IncompatibleRadicals(self.to_string(), other.to_string()));
        }
        let coeff = &self.coeff + &other.coeff;
        if coeff.is_zero() {
            return Ok(Self::zero());
        }
        Ok(RadicalValue { coeff, ..self.clone() })
    }

    pub fn radical_sub(&self, other: &Self) -> Result<Self> {
        self.radical_add(&-other.clone())
    }

    /// Multiplicative inverse; panics on zero.
    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        let m = self.radicand;
        // 1/(q sqrt(m)) = sqrt(m)/(q m); pi^(-1/2) = pi^(1/2) / pi
        let coeff = self.coeff.recip() / int(m as i64);
        let pi_int = -self.pi_int - self.pi_half as i32;
        Self::new(coeff, m, self.pi_half, pi_int)
    }

    pub fn div(&self, other: &Self) -> Self {
        self.radical_mul(&other.recip())
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = acc.radical_mul(self);
        }
        acc
    }

    /// Fixed-point approximation `X` of `|value| * 10^w`, with `| X - |value| 10^w | <= err`.
    fn fixed_abs(&self, w: u32) -> (BigInt, BigInt) {
        let guard = 12 + 2 * self.pi_int.unsigned_abs();
        let wp = w + guard;
        let scale = pow10(wp);
        // radical factor sqrt(m) * pi^(e/2) * pi^j at scale 10^wp, error a few units
        let pi = pi_fixed(wp + 5) / pow10(5);
        let mut factor =
            if self.radicand == 1 { scale.clone() } else { (BigInt::from(self.radicand) * &scale * &scale).sqrt() };
        if self.pi_half == 1 {
            let sp = (&pi * &scale).sqrt();
            factor = factor * sp / &scale;
        }
        if self.pi_int > 0 {
            for _ in 0..self.pi_int {
                factor = factor * &pi / &scale;
            }
        } else {
            for _ in 0..(-self.pi_int) {
                factor = factor * &scale / &pi;
            }
        }
        let numer = self.coeff.numer().abs();
        let denom = self.coeff.denom().clone();
        // each step loses a few units of 10^-wp relative to the running magnitude
        let steps = 4 + 2 * self.pi_int.unsigned_abs() as i64;
        let growth = BigInt::one() + &factor / &scale;
        let x = (numer.clone() * factor) / (denom.clone() * pow10(guard));
        let err = (numer * BigInt::from(steps * 4) * growth) / (denom * pow10(guard)) + BigInt::from(2);
        (x, err)
    }

    /// Correctly rounded (half-to-even) significant digits and decimal exponent of `|value|`.
    fn significant_digits(&self, digits: usize) -> (String, i64) {
        assert!(digits >= 1);
        if self.is_rational() {
            return rational_digits(&self.coeff.abs(), digits);
        }
        // rough magnitude in decimal digits to pick a working precision
        let mag = approx_log10(&self.coeff.abs())
            + (self.radicand as f64).log10() / 2.0
            + (self.pi_half as f64) * 0.2485749
            + (self.pi_int as f64) * 0.4971499;
        let mut w = (digits as i64 + 10 - mag.floor() as i64).max(10) as u32;
        loop {
            let (x, err) = self.fixed_abs(w);
            let lo = &x - &err;
            let hi = &x + &err;
            if lo.is_positive() {
                let a = round_sig(&lo.to_biguint().unwrap(), digits);
                let b = round_sig(&hi.to_biguint().unwrap(), digits);
                if let (Some(a), Some(b)) = (a, b) {
                    if a == b {
                        return (a.0, a.1 - w as i64);
                    }
                }
            }
            w += 20;
        }
    }

    pub fn to_decimal(&self, digits: usize) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let (d, e) = self.significant_digits(digits);
        let sign = if self.signum() < 0 { "-" } else { "" };
        format!("{}{}", sign, format_digits(&d, e))
    }

    /// Nearest double.
    pub fn to_f64(&self) -> f64 {
        self.to_double_double().0
    }

    /// Unevaluated pair `(hi, lo)` with `hi + lo` within ~2^-104 relative of the value.
    pub fn to_double_double(&self) -> (f64, f64) {
        if self.is_zero() {
            return (0.0, 0.0);
        }
        let r = if self.is_rational() {
            self.coeff.clone()
        } else {
            let (d, e) = self.significant_digits(40);
            let n = BigInt::parse_bytes(d.as_bytes(), 10).unwrap();
            let shift = e - (d.len() as i64 - 1);
            let q = if shift >= 0 {
                Rational::from_integer(n * pow10(shift as u32))
            } else {
                Rational::new(n, pow10((-shift) as u32))
            };
            if self.signum() < 0 {
                -q
            } else {
                q
            }
        };
        let hi = rational_to_f64(&r);
        let rest = r - f64_to_rational(hi);
        (hi, rational_to_f64(&rest))
    }
}

impl Neg for RadicalValue {
    type Output = RadicalValue;
    fn neg(self) -> RadicalValue {
        RadicalValue { coeff: -self.coeff, ..self }
    }
}

impl Mul for &RadicalValue {
    type Output = RadicalValue;
    fn mul(self, rhs: &RadicalValue) -> RadicalValue {
        self.radical_mul(rhs)
    }
}

impl fmt::Display for RadicalValue {
    /// Canonical string `p/q * sqrt(m) * pi^(e/2)`, unit factors omitted.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut parts: Vec<String> = Vec::new();
        if self.radicand != 1 {
            parts.push(format!("sqrt({})", self.radicand));
        }
        let twice = 2 * self.pi_int + self.pi_half as i32;
        if twice != 0 {
            if twice % 2 == 0 {
                if twice == 2 {
                    parts.push("pi".to_string());
                } else {
                    parts.push(format!("pi^({})", twice / 2));
                }
            } else {
                parts.push(format!("pi^({}/2)", twice));
            }
        }
        let c = &self.coeff;
        let cstr = if c.is_integer() { c.numer().to_string() } else { format!("{}/{}", c.numer(), c.denom()) };
        if parts.is_empty() {
            return write!(f, "{}", cstr);
        }
        if c.is_one() {
            write!(f, "{}", parts.join(" * "))
        } else if (-c.clone()).is_one() {
            write!(f, "-{}", parts.join(" * "))
        } else {
            write!(f, "{} * {}", cstr, parts.join(" * "))
        }
    }
}

impl FromStr for RadicalValue {
    type Err = MelnikovError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || MelnikovError::Parse(s.to_string());
        let s = s.trim();
        if s == "0" {
            return Ok(Self::zero());
        }
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) if rest.starts_with("sqrt") || rest.starts_with("pi") => (true, rest),
            _ => (false, s),
        };
        let mut coeff = Rational::one();
        let mut radicand = 1u64;
        let mut twice = 0i32;
        for (i, part) in body.split(" * ").enumerate() {
            if let Some(m) = part.strip_prefix("sqrt(").and_then(|p| p.strip_suffix(')')) {
                radicand = m.parse().map_err(|_| bad())?;
            } else if part == "pi" {
                twice = 2;
            } else if let Some(e) = part.strip_prefix("pi^(").and_then(|p| p.strip_suffix(')')) {
                twice = match e.strip_suffix("/2") {
                    Some(num) => num.parse().map_err(|_| bad())?,
                    None => 2 * e.parse::<i32>().map_err(|_| bad())?,
                };
            } else if i == 0 {
                coeff = match part.split_once('/') {
                    Some((p, q)) => {
                        Rational::new(p.parse::<BigInt>().map_err(|_| bad())?, q.parse::<BigInt>().map_err(|_| bad())?)
                    }
                    None => Rational::from_integer(part.parse::<BigInt>().map_err(|_| bad())?),
                };
            } else {
                return Err(bad());
            }
        }
        if neg {
            coeff = -coeff;
        }
        let pi_half = twice.rem_euclid(2) as u8;
        let pi_int = (twice - pi_half as i32) / 2;
        let v = Self::new(coeff, radicand, pi_half, pi_int);
        if v.to_string() != s {
            return Err(bad());
        }
        Ok(v)
    }
}

impl Serialize for RadicalValue {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for RadicalValue {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn pow10(n: u32) -> BigInt {
    BigInt::from(10u32).pow(n)
}

/// `floor(pi * 10^w)` up to an error of a few units, by Machin's formula.
pub fn pi_fixed(w: u32) -> BigInt {
    let guard = 10;
    let scale = pow10(w + guard);
    let atan_inv = |x: u64| -> BigInt {
        let x = BigInt::from(x);
        let x2 = &x * &x;
        let mut term = &scale / &x;
        let mut sum = term.clone();
        let mut k = 1u64;
        loop {
            term = &term / &x2;
            if term.is_zero() {
                break;
            }
            let t = &term / BigInt::from(2 * k + 1);
            if k % 2 == 1 {
                sum -= t;
            } else {
                sum += t;
            }
            k += 1;
        }
        sum
    };
    let pi = atan_inv(5) * 16 - atan_inv(239) * 4;
    pi / pow10(guard)
}

fn approx_log10(q: &Rational) -> f64 {
    let n = q.numer().abs();
    let d = q.denom().clone();
    let ln = |b: &BigInt| -> f64 {
        let bits = b.bits();
        if bits < 1000 {
            b.to_f64().unwrap().log10()
        } else {
            let shift = bits - 900;
            (b >> shift).to_f64().unwrap().log10() + shift as f64 * std::f64::consts::LOG10_2
        }
    };
    ln(&n) - ln(&d)
}

/// Rounds `n` to `digits` significant digits (half-to-even). Returns the digit string and the
/// decimal exponent of the leading digit, or `None` if `n` has too few digits to decide.
fn round_sig(n: &BigUint, digits: usize) -> Option<(String, i64)> {
    let s = n.to_str_radix(10);
    if s.len() < digits + 2 {
        return None;
    }
    let drop = (s.len() - digits) as u32;
    let base = BigUint::from(10u32).pow(drop);
    let (mut q, r) = n.div_rem(&base);
    let twice = r * 2u32;
    if twice > base || (twice == base && q.is_odd()) {
        q += 1u32;
    }
    let mut exp = s.len() as i64 - 1;
    let mut qs = q.to_str_radix(10);
    if qs.len() > digits {
        qs.truncate(digits);
        exp += 1;
    }
    Some((qs, exp))
}

/// Exact half-to-even rounding of a positive rational.
fn rational_digits(q: &Rational, digits: usize) -> (String, i64) {
    let mut e = approx_log10(q).floor() as i64;
    let ten = Rational::from_integer(BigInt::from(10));
    let p10 = |k: i64| -> Rational { ten.pow(k as i32) };
    while &p10(e) > q {
        e -= 1;
    }
    while &p10(e + 1) <= q {
        e += 1;
    }
    let scaled = q * p10(digits as i64 - 1 - e);
    let fl = scaled.floor();
    let frac = &scaled - &fl;
    let half = rat(1, 2);
    let mut n = fl.to_integer();
    if frac > half || (frac == half && n.is_odd()) {
        n += 1;
    }
    let mut s = n.to_str_radix(10);
    if s.len() > digits {
        s.truncate(digits);
        e += 1;
    }
    (s, e)
}

fn format_digits(d: &str, e: i64) -> String {
    let s = d.len() as i64;
    if e >= -5 && e < s {
        if e >= 0 {
            let (int_part, frac) = d.split_at((e + 1) as usize);
            if frac.is_empty() {
                int_part.to_string()
            } else {
                format!("{}.{}", int_part, frac)
            }
        } else {
            format!("0.{}{}", "0".repeat((-e - 1) as usize), d)
        }
    } else {
        let (lead, rest) = d.split_at(1);
        if rest.is_empty() {
            format!("{}e{}", lead, e)
        } else {
            format!("{}.{}e{}", lead, rest, e)
        }
    }
}

/// Conversion of a rational to a nearby double (round to nearest, ties away from zero).
pub fn rational_to_f64(r: &Rational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let neg = r.is_negative();
    let n = r.numer().abs();
    let d = r.denom().clone();
    let mut e = n.bits() as i64 - d.bits() as i64 - 53;
    let mant = |e: i64| -> BigInt {
        if e >= 0 {
            &n / (&d << e as usize)
        } else {
            (&n << (-e) as usize) / &d
        }
    };
    let two53 = BigInt::one() << 53usize;
    let two52 = BigInt::one() << 52usize;
    let mut m = mant(e);
    while m >= two53 {
        e += 1;
        m = mant(e);
    }
    while m < two52 {
        e -= 1;
        m = mant(e);
    }
    let m2 = mant(e - 1);
    let m = (&m2 >> 1usize) + (&m2 & BigInt::one());
    let v = m.to_f64().unwrap() * 2f64.powi(e as i32);
    if neg {
        -v
    } else {
        v
    }
}

pub fn f64_to_rational(x: f64) -> Rational {
    Rational::from_float(x).expect("finite double")
}

pub fn bigint_sign(b: &BigInt) -> i8 {
    match b.sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_digits() {
        assert_eq!(pi_fixed(30).to_string(), "3141592653589793238462643383279");
    }

    #[test]
    fn decimal_examples() {
        assert_eq!(RadicalValue::sqrt_2pi().to_decimal(10), "2.506628275");
        let v = RadicalValue::new(int(-4), 1, 1, 0);
        assert_eq!(v.to_decimal(6), "-7.08982");
        assert_eq!(RadicalValue::zero().to_decimal(7), "0");
        assert_eq!(RadicalValue::rational(rat(1, 8)).to_decimal(1), "0.1");
        assert_eq!(RadicalValue::rational(rat(3, 8)).to_decimal(2), "0.38");
        assert_eq!(RadicalValue::rational(rat(5, 8)).to_decimal(2), "0.62");
        assert_eq!(RadicalValue::integer(999).to_decimal(2), "1.0e3");
    }

    #[test]
    fn canonical_strings() {
        let v = RadicalValue::new(rat(-3, 2), 8, 1, 0);
        assert_eq!(v.to_string(), "-3 * sqrt(2) * pi^(1/2)");
        let w = RadicalValue::sqrt_2pi().radical_mul(&RadicalValue::sqrt_2pi());
        assert_eq!(w.to_string(), "2 * pi");
        for s in ["2 * pi", "-sqrt(2)", "7/3 * sqrt(5) * pi^(-1/2)", "pi^(3)", "-1/2", "0"] {
            let p: RadicalValue = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
    }

    #[test]
    fn double_double() {
        let (hi, lo) = RadicalValue::sqrt_2pi().to_double_double();
        // sqrt(2 pi) = 2.506628274631000502415765284811...; f64 sqrt of the rounded 2 pi is one ulp low
        assert_eq!(hi, 2.5066282746310007);
        assert!((lo + 1.8328579980459167e-16).abs() < 1e-30);
    }
}
