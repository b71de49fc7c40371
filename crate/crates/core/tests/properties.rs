//! Property tests for exact scalars, Hermite series and the Weber operator.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use proptest::prelude::*;

use melnikov_core::exact::{is_squarefree, rat, RadicalValue, Rational};
use melnikov_core::hermite::{gaussian_triple_integral, HermiteSeries, Parity};
use melnikov_core::weber::{apply_l, apply_l_direct, solve_weber, WeberProblem};

fn radical() -> impl Strategy<Value = RadicalValue> {
    (-50i64..50, 1i64..20, 1u64..60, 0u8..2, -1i32..2)
        .prop_map(|(p, q, m, e, pi)| RadicalValue::new(rat(p, q), m, e, pi))
}

fn rational_series(max_deg: usize) -> impl Strategy<Value = HermiteSeries> {
    prop::collection::vec((0..=max_deg, -20i64..20, 1i64..6), 0..6).prop_map(|terms| {
        let mut s = HermiteSeries::zero();
        for (d, p, q) in terms {
            s = s.add(&HermiteSeries::term(d, RadicalValue::rational(rat(p, q)))).unwrap();
        }
        s
    })
}

/// Monomial coefficients of `H_n(s)` from `H_{n+1} = 2s H_n - 2n H_{n-1}`.
fn hermite_monomials(n: usize) -> Vec<BigInt> {
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

fn to_monomials(s: &HermiteSeries) -> Vec<Rational> {
    let deg = s.degree().unwrap_or(0);
    let mut out = vec![Rational::zero(); deg + 1];
    for (n, c) in s.terms() {
        let c = c.as_rational().expect("rational series").clone();
        for (i, m) in hermite_monomials(n).into_iter().enumerate() {
            out[i] += &c * Rational::from_integer(m);
        }
    }
    while out.len() > 1 && out.last().unwrap().is_zero() {
        out.pop();
    }
    out
}

fn poly_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    while out.len() > 1 && out.last().unwrap().is_zero() {
        out.pop();
    }
    out
}

proptest! {
    #[test]
    fn radical_mul_commutative_associative(a in radical(), b in radical(), c in radical()) {
        prop_assert_eq!(a.radical_mul(&b), b.radical_mul(&a));
        prop_assert_eq!(a.radical_mul(&b).radical_mul(&c), a.radical_mul(&b.radical_mul(&c)));
    }

    #[test]
    fn radical_mul_squarefree(a in radical(), b in radical()) {
        let r = a.radical_mul(&b);
        prop_assert!(is_squarefree(r.radicand()));
        prop_assert!(r.pi_half() <= 1);
    }

    #[test]
    fn decimal_prefix_consistency(a in radical(), d in 1usize..12) {
        let short: f64 = a.to_decimal(d).parse().unwrap();
        let long: f64 = a.to_decimal(d + 5).parse().unwrap();
        if long == 0.0 {
            prop_assert_eq!(short, 0.0);
        } else {
            let e = long.abs().log10().floor() as i32;
            let ulp = 10f64.powi(e - d as i32 + 1);
            prop_assert!((short - long).abs() <= 0.5 * ulp + 0.5 * ulp * 1e-5 + long.abs() * 1e-14,
                "{} vs {}", a.to_decimal(d), a.to_decimal(d + 5));
        }
    }

    #[test]
    fn canonical_string_round_trip(a in radical()) {
        let s = a.to_string();
        prop_assert_eq!(s.parse::<RadicalValue>().unwrap(), a);
    }

    #[test]
    fn product_matches_monomial_oracle(a in rational_series(15), b in rational_series(15)) {
        let p = a.product(&b).unwrap();
        if a.is_zero() || b.is_zero() {
            prop_assert!(p.is_zero());
        } else {
            prop_assert_eq!(to_monomials(&p), poly_mul(&to_monomials(&a), &to_monomials(&b)));
        }
    }

    #[test]
    fn derivative_inverts_antiderivative(a in rational_series(20), c in -5i64..5) {
        // antiderivatives of rational series carry a sqrt(2) factor, so the constant must too
        let c = RadicalValue::sqrt(2).scale(&rat(c, 1));
        let s = a.antiderivative(&c).unwrap();
        prop_assert_eq!(s.value_at_zero().unwrap(), c);
        prop_assert_eq!(s.derivative(), a);
    }

    #[test]
    fn odd_series_integrate_to_zero(a in rational_series(25)) {
        let mut odd = HermiteSeries::zero();
        for (n, c) in a.terms() {
            if n % 2 == 1 {
                odd.add_term(n, c).unwrap();
            }
        }
        prop_assert!(odd.gaussian_integral().is_zero());
        prop_assert!(odd.is_zero() || odd.parity() == Parity::Odd);
    }

    #[test]
    fn weber_round_trip(beta in 0usize..=30, rhs in rational_series(30)) {
        let mut r = HermiteSeries::zero();
        for (n, c) in rhs.terms() {
            if n != beta {
                r.add_term(n, c).unwrap();
            }
        }
        let x = solve_weber(&WeberProblem::new(beta, r.clone())).unwrap();
        prop_assert!(x.coeff(beta).is_zero());
        prop_assert_eq!(apply_l(beta, &x), r.clone());
        prop_assert_eq!(apply_l_direct(beta, &x).unwrap(), r);
    }
}

#[test]
fn triple_integral_matches_product_reduction() {
    for n in 0..=12 {
        for m in 0..=12 {
            let hm = HermiteSeries::basis(n).product(&HermiteSeries::basis(m)).unwrap();
            for l in 0..=12 {
                let full = hm.product(&HermiteSeries::basis(l)).unwrap();
                assert_eq!(gaussian_triple_integral(n, m, l), full.gaussian_integral(), "({},{},{})", n, m, l);
            }
        }
    }
}

#[test]
fn l_operator_compatibility() {
    for beta in 0..=30 {
        for n in 0..=30 {
            let h = HermiteSeries::basis(n);
            let expect = HermiteSeries::term(n, RadicalValue::integer(beta as i64 - n as i64));
            assert_eq!(apply_l_direct(beta, &h).unwrap(), expect);
            assert_eq!(apply_l(beta, &h), expect);
        }
    }
}

#[test]
fn monomial_oracle_self_check() {
    assert_eq!(hermite_monomials(2), vec![BigInt::from(-2), BigInt::zero(), BigInt::from(4)]);
    assert_eq!(hermite_monomials(3), vec![BigInt::zero(), BigInt::from(-12), BigInt::zero(), BigInt::from(8)]);
}
