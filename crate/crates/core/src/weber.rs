//! The Weber operator `L_beta q = q'' - t q' + beta q`, diagonal on `H_l(t/sqrt 2)`.

use num_traits::Signed;

use crate::error::{MelnikovError, Result};
use crate::exact::{int, RadicalValue, Rational};
use crate::hermite::{hermite_at_zero, HermiteSeries};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KernelPolicy {
    ZeroKernelComponent,
    MatchValueAtZero(RadicalValue),
}

#[derive(Clone, Debug)]
pub struct WeberProblem {
    pub beta: usize,
    pub rhs: HermiteSeries,
    pub kernel_policy: KernelPolicy,
}

impl WeberProblem {
    pub fn new(beta: usize, rhs: HermiteSeries) -> Self {
        WeberProblem { beta, rhs, kernel_policy: KernelPolicy::ZeroKernelComponent }
    }
}

/// `L_beta H_l = (beta - l) H_l`, applied termwise.
pub fn apply_l(beta: usize, s: &HermiteSeries) -> HermiteSeries {
    let mut out = HermiteSeries::zero();
    for (l, c) in s.terms() {
        let w = int(beta as i64 - l as i64);
        out.add_term(l, &c.scale(&w)).expect("distinct degrees");
    }
    out
}

/// `L_beta` assembled from its defining expression with series derivatives.
pub fn apply_l_direct(beta: usize, s: &HermiteSeries) -> Result<HermiteSeries> {
    let d1 = s.derivative();
    let d2 = d1.derivative();
    d2.sub(&d1.mul_t()?)?.add(&s.scale_rational(&int(beta as i64)))
}

pub fn solve_weber(p: &WeberProblem) -> Result<HermiteSeries> {
    let beta = p.beta;
    if !p.rhs.coeff(beta).is_zero() {
        return Err(MelnikovError::ResonantForcing { beta });
    }
    let mut x = HermiteSeries::zero();
    for (l, c) in p.rhs.terms() {
        let w = Rational::new(1.into(), (beta as i64 - l as i64).into());
        x.add_term(l, &c.scale(&w))?;
    }
    match &p.kernel_policy {
        KernelPolicy::ZeroKernelComponent => Ok(x),
        KernelPolicy::MatchValueAtZero(target) => {
            let h0 = hermite_at_zero(beta);
            if h0.is_zero() {
                return Err(MelnikovError::KernelConditionUnsatisfiable { beta });
            }
            let gap = target.radical_sub(&x.value_at_zero()?)?;
            x.add_term(beta, &gap.div(&h0))?;
            Ok(x)
        }
    }
}

/// True iff `beta` is a non-negative integer.
pub fn algebraic_solution_exists(beta_candidate: &Rational) -> bool {
    beta_candidate.is_integer() && !beta_candidate.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn apply_examples() {
        assert_eq!(apply_l(3, &HermiteSeries::basis(5)), HermiteSeries::term(5, RadicalValue::integer(-2)));
        assert!(apply_l(3, &HermiteSeries::basis(3)).is_zero());
        let s = HermiteSeries::constant(RadicalValue::integer(4));
        assert_eq!(apply_l(2, &s), HermiteSeries::constant(RadicalValue::integer(8)));
    }

    #[test]
    fn solve_examples() {
        let p = WeberProblem::new(2, HermiteSeries::basis(0));
        assert_eq!(solve_weber(&p).unwrap(), HermiteSeries::constant(RadicalValue::rational(rat(1, 2))));
        let p = WeberProblem::new(2, HermiteSeries::basis(2));
        assert_eq!(solve_weber(&p), Err(MelnikovError::ResonantForcing { beta: 2 }));
        let mut p = WeberProblem::new(3, HermiteSeries::basis(0));
        p.kernel_policy = KernelPolicy::MatchValueAtZero(RadicalValue::one());
        assert_eq!(solve_weber(&p), Err(MelnikovError::KernelConditionUnsatisfiable { beta: 3 }));
    }

    #[test]
    fn match_value_at_zero() {
        let mut p = WeberProblem::new(2, HermiteSeries::basis(0));
        p.kernel_policy = KernelPolicy::MatchValueAtZero(RadicalValue::integer(5));
        let x = solve_weber(&p).unwrap();
        assert_eq!(x.value_at_zero().unwrap(), RadicalValue::integer(5));
        assert_eq!(apply_l(2, &x), HermiteSeries::basis(0));
    }

    #[test]
    fn existence() {
        assert!(algebraic_solution_exists(&int(3)));
        assert!(!algebraic_solution_exists(&rat(7, 2)));
        assert!(algebraic_solution_exists(&int(0)));
        assert!(!algebraic_solution_exists(&int(-1)));
    }
}
