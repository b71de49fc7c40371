//! Exact Hermite identity suite with an independent monomial-basis route.
//!
//! Series in `H_n(t/sqrt 2)` are expanded in powers of `s = t/sqrt 2` by the three-term
//! recurrence, multiplied as ordinary polynomials, and integrated with
//! `int e^{-t^2/2} s^{2j} dt = sqrt(2 pi) (2j-1)!! / 2^j`.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::exact::{RadicalValue, Rational};
use crate::hermite::{double_factorial, gaussian_pair_integral, gaussian_triple_integral, HermiteSeries, Parity};

/// Monomial coefficients of `H_n(s)`, lowest degree first.
pub fn hermite_monomials(n: usize) -> Vec<BigInt> {
    let mut prev = vec![BigInt::one()];
    if n == 0 {
        return prev;
    }
    let mut cur = vec![BigInt::zero(), BigInt::from(2)];
    for k in 1..n {
        let mut next = vec![BigInt::zero(); k + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += c * 2;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= c * BigInt::from(2 * k);
        }
        prev = cur;
        cur = next;
    }
    cur
}

fn trim(mut v: Vec<Rational>) -> Vec<Rational> {
    while v.len() > 1 && v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
    v
}

/// Monomial coefficients of a rational series; `None` if a coefficient is irrational.
pub fn to_monomials(s: &HermiteSeries) -> Option<Vec<Rational>> {
    let mut out = vec![Rational::zero(); s.degree().unwrap_or(0) + 1];
    for (n, c) in s.terms() {
        let c = c.as_rational()?;
        for (i, m) in hermite_monomials(n).into_iter().enumerate() {
            out[i] += c * Rational::from_integer(m);
        }
    }
    Some(trim(out))
}

pub fn poly_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(out)
}

/// `int e^{-t^2/2} p(t/sqrt 2) dt` for a polynomial given by monomial coefficients.
pub fn monomial_gaussian_integral(p: &[Rational]) -> RadicalValue {
    let mut acc = Rational::zero();
    for (d, c) in p.iter().enumerate().filter(|(d, _)| d % 2 == 0) {
        let j = d / 2;
        let m = Rational::new(double_factorial(2 * j as i64 - 1), BigInt::from(2).pow(j as u32));
        acc += c * m;
    }
    RadicalValue::sqrt_2pi().scale(&acc)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub cases: usize,
    pub failures: Vec<String>,
    pub pass: bool,
}

impl IdentityCheck {
    fn new(name: &str) -> Self {
        IdentityCheck { name: name.into(), cases: 0, failures: Vec::new(), pass: true }
    }

    fn record(&mut self, ok: bool, case: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.pass = false;
            if self.failures.len() < 10 {
                self.failures.push(case());
            }
        }
    }
}

/// Runs the identity suite: products of basis elements up to `max_degree`, triple and pair
/// integrals up to `max_triple`, and parity-zero integrals.
pub fn run_identity_suite(max_degree: usize, max_triple: usize) -> Vec<IdentityCheck> {
    let mono: Vec<Vec<Rational>> = (0..=max_degree.max(max_triple))
        .map(|n| hermite_monomials(n).into_iter().map(Rational::from_integer).collect())
        .collect();

    let mut lin = IdentityCheck::new("product_linearization");
    for n in 0..=max_degree {
        for m in 0..=max_degree {
            let p = HermiteSeries::basis(n).product(&HermiteSeries::basis(m));
            let ok = p.ok().and_then(|p| to_monomials(&p)).is_some_and(|p| p == poly_mul(&mono[n], &mono[m]));
            lin.record(ok, || format!("H_{n} H_{m}"));
        }
    }

    let mut pair = IdentityCheck::new("pair_orthogonality");
    for n in 0..=max_degree {
        for m in 0..=max_degree {
            let ok = gaussian_pair_integral(n, m) == monomial_gaussian_integral(&poly_mul(&mono[n], &mono[m]));
            pair.record(ok, || format!("<H_{n}, H_{m}>"));
        }
    }

    let mut triple = IdentityCheck::new("triple_product");
    let mut parity = IdentityCheck::new("parity_zero");
    for n in 0..=max_triple {
        for m in 0..=max_triple {
            let hm = HermiteSeries::basis(n).product(&HermiteSeries::basis(m));
            for l in 0..=max_triple {
                let closed = gaussian_triple_integral(n, m, l);
                let full = hm.as_ref().ok().and_then(|h| h.product(&HermiteSeries::basis(l)).ok());
                let reduced = full.as_ref().map(|f| f.gaussian_integral());
                let monomial = monomial_gaussian_integral(&poly_mul(&poly_mul(&mono[n], &mono[m]), &mono[l]));
                let ok = reduced.as_ref() == Some(&closed) && monomial == closed;
                triple.record(ok, || format!("(H_{n}, H_{m}, H_{l})"));
                if (n + m + l) % 2 == 1 {
                    let odd =
                        full.as_ref().is_some_and(|f| f.parity() == Parity::Odd && f.gaussian_integral().is_zero());
                    parity.record(odd && closed.is_zero() && monomial.is_zero(), || format!("(H_{n}, H_{m}, H_{l})"));
                }
            }
        }
    }
    vec![lin, pair, triple, parity]
}
