//! Finite exact series in the basis `H_j(t/sqrt(2))` (physicists' Hermite polynomials).

use std::collections::BTreeMap;
use std::sync::RwLock;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exact::{int, RadicalValue, Rational};

static FACTORIALS: RwLock<Vec<BigInt>> = RwLock::new(Vec::new());

/// `n!`, memoized.
pub fn factorial(n: usize) -> BigInt {
    {
        let table = FACTORIALS.read().unwrap();
        if n < table.len() {
            return table[n].clone();
        }
    }
    let mut table = FACTORIALS.write().unwrap();
    if table.is_empty() {
        table.push(BigInt::one());
    }
    while table.len() <= n {
        let k = table.len();
        let next = &table[k - 1] * BigInt::from(k);
        table.push(next);
    }
    table[n].clone()
}

/// `n!!`, with `0!! = (-1)!! = 1`.
pub fn double_factorial(n: i64) -> BigInt {
    let mut acc = BigInt::one();
    let mut k = n;
    while k > 1 {
        acc *= BigInt::from(k);
        k -= 2;
    }
    acc
}

pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

fn bigrat(n: BigInt) -> Rational {
    Rational::from_integer(n)
}

/// `H_n(0)`: zero for odd `n`, `(-2)^(n/2) (n-1)!!` for even `n`.
pub fn hermite_at_zero(n: usize) -> RadicalValue {
    if n % 2 == 1 {
        return RadicalValue::zero();
    }
    let sign = if (n / 2).is_multiple_of(2) { 1 } else { -1 };
    let v = BigInt::from(2).pow((n / 2) as u32) * double_factorial(n as i64 - 1) * sign;
    RadicalValue::from_bigint(v)
}

/// `int_R e^{-t^2/2} H_n(t/sqrt 2) H_m(t/sqrt 2) dt`.
pub fn gaussian_pair_integral(n: usize, m: usize) -> RadicalValue {
    if n != m {
        return RadicalValue::zero();
    }
    let c = BigInt::from(2).pow(n as u32) * factorial(n);
    RadicalValue::sqrt_2pi().scale(&bigrat(c))
}

/// `int_R e^{-t^2/2} H_n H_m H_l dt` (all at `t/sqrt 2`).
pub fn gaussian_triple_integral(n: usize, m: usize, l: usize) -> RadicalValue {
    let total = n + m + l;
    if total % 2 == 1 {
        return RadicalValue::zero();
    }
    let s = total / 2;
    if s < n || s < m || s < l {
        return RadicalValue::zero();
    }
    let num = BigInt::from(2).pow(s as u32) * factorial(n) * factorial(m) * factorial(l);
    let den = factorial(s - n) * factorial(s - m) * factorial(s - l);
    RadicalValue::sqrt_2pi().scale(&Rational::new(num, den))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

/// `sum_j coeffs[j] H_j(t/sqrt 2)` with no stored zero coefficient.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HermiteSeries {
    coeffs: BTreeMap<usize, RadicalValue>,
}

impl HermiteSeries {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `c * H_n`.
    pub fn term(n: usize, c: RadicalValue) -> Self {
        let mut s = Self::zero();
        if !c.is_zero() {
            s.coeffs.insert(n, c);
        }
        s
    }

    pub fn basis(n: usize) -> Self {
        Self::term(n, RadicalValue::one())
    }

    pub fn constant(c: RadicalValue) -> Self {
        Self::term(0, c)
    }

    pub fn from_terms<I: IntoIterator<Item = (usize, RadicalValue)>>(terms: I) -> Result<Self> {
        let mut s = Self::zero();
        for (n, c) in terms {
            s.add_term(n, &c)?;
        }
        Ok(s)
    }

    pub fn add_term(&mut self, n: usize, c: &RadicalValue) -> Result<()> {
        if c.is_zero() {
            return Ok(());
        }
        let next = match self.coeffs.get(&n) {
            Some(old) => old.radical_add(c)?,
            None => c.clone(),
        };
        if next.is_zero() {
            self.coeffs.remove(&n);
        } else {
            self.coeffs.insert(n, next);
        }
        Ok(())
    }

    pub fn coeff(&self, n: usize) -> RadicalValue {
        self.coeffs.get(&n).cloned().unwrap_or_else(RadicalValue::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &RadicalValue)> {
        self.coeffs.iter().map(|(k, v)| (*k, v))
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut s = self.clone();
        for (n, c) in other.terms() {
            s.add_term(n, c)?;
        }
        Ok(s)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        HermiteSeries { coeffs: self.coeffs.iter().map(|(k, v)| (*k, -v.clone())).collect() }
    }

    pub fn scale(&self, c: &RadicalValue) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        HermiteSeries { coeffs: self.coeffs.iter().map(|(k, v)| (*k, v.radical_mul(c))).collect() }
    }

    pub fn scale_rational(&self, q: &Rational) -> Self {
        self.scale(&RadicalValue::rational(q.clone()))
    }

    /// `d/dt H_n(t/sqrt 2) = sqrt(2) n H_{n-1}(t/sqrt 2)`.
    pub fn derivative(&self) -> Self {
        let root2 = RadicalValue::sqrt(2);
        let mut out = BTreeMap::new();
        for (n, c) in self.terms() {
            if n > 0 {
                out.insert(n - 1, c.radical_mul(&root2).scale(&int(n as i64)));
            }
        }
        HermiteSeries { coeffs: out }
    }

    /// `t H_n = (sqrt 2 / 2) H_{n+1} + sqrt(2) n H_{n-1}`.
    pub fn mul_t(&self) -> Result<Self> {
        let root2 = RadicalValue::sqrt(2);
        let half = Rational::new(BigInt::one(), BigInt::from(2));
        let mut out = Self::zero();
        for (n, c) in self.terms() {
            let cr = c.radical_mul(&root2);
            out.add_term(n + 1, &cr.scale(&half))?;
            if n > 0 {
                out.add_term(n - 1, &cr.scale(&int(n as i64)))?;
            }
        }
        Ok(out)
    }

    /// Bilinear extension of `H_n H_m = sum_j C(m,j) C(n,j) 2^j j! H_{n+m-2j}`.
    pub fn product(&self, other: &Self) -> Result<Self> {
        let mut out = Self::zero();
        for (n, a) in self.terms() {
            for (m, b) in other.terms() {
                let ab = a.radical_mul(b);
                for j in 0..=n.min(m) {
                    let w = binomial(m, j) * binomial(n, j) * BigInt::from(2).pow(j as u32) * factorial(j);
                    out.add_term(n + m - 2 * j, &ab.scale(&bigrat(w)))?;
                }
            }
        }
        Ok(out)
    }

    /// Antiderivative via `int H_n = H_{n+1} / (sqrt(2) (n+1))`, shifted to take `value_at_zero` at 0.
    pub fn antiderivative(&self, value_at_zero: &RadicalValue) -> Result<Self> {
        let inv_root2 = RadicalValue::sqrt(2).recip();
        let mut out = Self::zero();
        for (n, c) in self.terms() {
            let w = Rational::new(BigInt::one(), BigInt::from(n + 1));
            out.add_term(n + 1, &c.radical_mul(&inv_root2).scale(&w))?;
        }
        let shift = value_at_zero.radical_sub(&out.value_at_zero()?)?;
        out.add_term(0, &shift)?;
        Ok(out)
    }

    /// The series evaluated at `t = 0`.
    pub fn value_at_zero(&self) -> Result<RadicalValue> {
        let mut acc = RadicalValue::zero();
        for (n, c) in self.terms() {
            acc = acc.radical_add(&c.radical_mul(&hermite_at_zero(n)))?;
        }
        Ok(acc)
    }

    /// `int_R e^{-t^2/2} s(t) dt`.
    pub fn gaussian_integral(&self) -> RadicalValue {
        self.coeff(0).radical_mul(&gaussian_pair_integral(0, 0))
    }

    pub fn parity(&self) -> Parity {
        let even = self.coeffs.keys().all(|k| k % 2 == 0);
        let odd = self.coeffs.keys().all(|k| k % 2 == 1);
        match (even, odd) {
            (true, _) => Parity::Even,
            (false, true) => Parity::Odd,
            _ => Parity::Mixed,
        }
    }

    /// Double-precision evaluation by the three-term recurrence (diagnostics only).
    pub fn eval_f64(&self, t: f64) -> f64 {
        let s = t / std::f64::consts::SQRT_2;
        let deg = match self.degree() {
            Some(d) => d,
            None => return 0.0,
        };
        let (mut h0, mut h1) = (1.0, 2.0 * s);
        let mut acc = 0.0;
        for n in 0..=deg {
            let h = if n == 0 { h0 } else { h1 };
            acc += self.coeff(n).to_f64() * h;
            if n >= 1 {
                let h2 = 2.0 * s * h1 - 2.0 * n as f64 * h0;
                h0 = h1;
                h1 = h2;
            }
        }
        acc
    }
}

pub fn series_derivative(s: &HermiteSeries) -> HermiteSeries {
    s.derivative()
}

pub fn series_mul_t(s: &HermiteSeries) -> Result<HermiteSeries> {
    s.mul_t()
}

pub fn series_product(a: &HermiteSeries, b: &HermiteSeries) -> Result<HermiteSeries> {
    a.product(b)
}

pub fn series_antiderivative(s: &HermiteSeries, value_at_zero: &RadicalValue) -> Result<HermiteSeries> {
    s.antiderivative(value_at_zero)
}

pub fn gaussian_series_integral(s: &HermiteSeries) -> RadicalValue {
    s.gaussian_integral()
}

pub fn series_parity(s: &HermiteSeries) -> Parity {
    s.parity()
}
