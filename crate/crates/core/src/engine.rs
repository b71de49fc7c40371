//! Higher-order variations, exact Melnikov derivatives, classification and branch sides.

use serde::{Deserialize, Serialize};

use crate::error::{MelnikovError, Result};
use crate::exact::{int, RadicalValue, Rational};
use crate::hermite::{HermiteSeries, Parity};
use crate::oracle::{closed_form_oracle, printed_formula, Derivative, OracleSource};
use crate::systems::{leading_sign, pairing, AdjointSolution, PerturbedSystem, Series3, SystemName, VariationTriple};
use crate::weber::{solve_weber, WeberProblem};

/// Everything the derivative assembly needs, computed once per system.
#[derive(Clone, Debug)]
pub struct Variations {
    pub first: VariationTriple,
    pub adjoint: AdjointSolution,
    pub second: Option<VariationTriple>,
}

/// `2 quad(z', z')`, the forcing of the second variation.
pub fn second_order_forcing(sys: &PerturbedSystem, zp: &VariationTriple) -> Result<Series3> {
    let q = PerturbedSystem::quad_apply(&sys.quad, &zp.z, &zp.z)?;
    Ok(std::array::from_fn(|i| q[i].scale_rational(&int(2))))
}

/// Solution of `z'' = A(t) z'' + 2 quad(z', z')` whose value at 0 has no `e_u` or `e_v` component.
pub fn second_variation_from(sys: &PerturbedSystem, zp: &VariationTriple) -> Result<VariationTriple> {
    let forcing = second_order_forcing(sys, zp)?;
    let d = sys.designated;
    let beta = sys.beta()?;
    let mut rhs = forcing[d].derivative();
    for j in 0..3 {
        if j != d && !sys.a0[d][j].is_zero_rational() {
            rhs = rhs.add(&forcing[j].scale_rational(&sys.a0[d][j]))?;
        }
    }
    let zd = solve_weber(&WeberProblem::new(beta, rhs))?;
    let particular = sys.complete_solution(&forcing, zd)?;
    let p0 = VariationTriple { z: particular.clone() }.value_at_zero()?;
    let c = sys.frame_coordinates(&p0)?;
    // z'(0) = e_v has frame coordinates (0, scale_v, 0)
    let a = c[1].div(&sys.frame.e_v.scale);
    let mut z = particular;
    for i in 0..3 {
        z[i] = z[i].sub(&zp.z[i].scale(&a))?;
    }
    let z = PerturbedSystem::add_constant(&z, &-c[0].clone(), &sys.frame.e_u.dir)?;
    let out = VariationTriple { z };
    let c = sys.frame_coordinates(&out.value_at_zero()?)?;
    debug_assert!(c[0].is_zero() && c[1].is_zero());
    Ok(out)
}

pub fn second_variation(sys: &PerturbedSystem) -> Result<VariationTriple> {
    let zp = sys.first_variation()?;
    second_variation_from(sys, &zp)
}

trait RationalZero {
    fn is_zero_rational(&self) -> bool;
}

impl RationalZero for Rational {
    fn is_zero_rational(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
}

/// Integrand factor for converting a full-line Gaussian integral into the derivative of `D`.
/// Pitchfork case: `D = int_0^inf <psi, g(v) - g(-v)>`, so odd-order derivatives are full-line
/// integrals. Transcritical case: `D = c int_0^inf <psi, g>`.
pub fn integrand_prefactor(sys: &PerturbedSystem) -> Rational {
    if sys.frame.sigma_v == -1 {
        int(1)
    } else {
        sys.conventions.half_line_factor.clone() / int(2)
    }
}

fn integrate_even(sys: &PerturbedSystem, integrand: &HermiteSeries) -> Result<RadicalValue> {
    match integrand.parity() {
        Parity::Even => Ok(integrand.gaussian_integral().scale(&integrand_prefactor(sys))),
        p => Err(MelnikovError::OddIntegrand(format!("{:?}", p).to_lowercase())),
    }
}

/// Polynomial factor of `<psi, B z'>`.
pub fn dva_integrand(sys: &PerturbedSystem, v: &Variations) -> Result<HermiteSeries> {
    pairing(&v.adjoint.psi, &sys.alpha_lin_apply(&v.first.z)?)
}

/// Polynomial factor of `<psi, 2 quad(z', z')>`.
pub fn dvv_integrand(sys: &PerturbedSystem, v: &Variations) -> Result<HermiteSeries> {
    pairing(&v.adjoint.psi, &second_order_forcing(sys, &v.first)?)
}

/// Polynomial factor of `<psi, 6 quad(z', z'')>`.
pub fn d3_integrand(sys: &PerturbedSystem, v: &Variations) -> Result<HermiteSeries> {
    let zpp = v.second.as_ref().ok_or(MelnikovError::WrongParity { sigma_v: sys.frame.sigma_v })?;
    let q = PerturbedSystem::quad_apply(&sys.quad, &v.first.z, &zpp.z)?;
    let q6: Series3 = std::array::from_fn(|i| q[i].scale_rational(&int(6)));
    pairing(&v.adjoint.psi, &q6)
}

pub fn variations(sys: &PerturbedSystem) -> Result<Variations> {
    let first = sys.first_variation()?;
    let adjoint = sys.adjoint_solution()?;
    let second = if sys.frame.sigma_v == -1 { Some(second_variation_from(sys, &first)?) } else { None };
    Ok(Variations { first, adjoint, second })
}

pub fn d2_dv_dalpha(sys: &PerturbedSystem) -> Result<RadicalValue> {
    let v = Variations { first: sys.first_variation()?, adjoint: sys.adjoint_solution()?, second: None };
    integrate_even(sys, &dva_integrand(sys, &v)?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecondDerivative {
    Value(RadicalValue),
    IdenticallyZeroByParity,
}

impl SecondDerivative {
    pub fn value(&self) -> RadicalValue {
        match self {
            SecondDerivative::Value(v) => v.clone(),
            SecondDerivative::IdenticallyZeroByParity => RadicalValue::zero(),
        }
    }
}

pub fn d2_dv2(sys: &PerturbedSystem) -> Result<SecondDerivative> {
    if sys.frame.sigma_v == -1 {
        return Ok(SecondDerivative::IdenticallyZeroByParity);
    }
    let v = Variations { first: sys.first_variation()?, adjoint: sys.adjoint_solution()?, second: None };
    Ok(SecondDerivative::Value(integrate_even(sys, &dvv_integrand(sys, &v)?)?))
}

pub fn d3_dv3(sys: &PerturbedSystem) -> Result<RadicalValue> {
    if sys.frame.sigma_v != -1 {
        return Err(MelnikovError::WrongParity { sigma_v: sys.frame.sigma_v });
    }
    let v = variations(sys)?;
    integrate_even(sys, &d3_integrand(sys, &v)?)
}

/// Folded node, even `n`: the by-parts form using `z1 = z3'/2`,
/// `D''' = 3/(sqrt(2) H_n(0)) int_0^inf e^{-t^2/2} H_{n+1} z3' z3'' dt`.
pub fn d3_dv3_folded_node_by_parts(sys: &PerturbedSystem) -> Result<RadicalValue> {
    if sys.name != SystemName::FoldedNode || sys.n % 2 == 1 {
        return Err(MelnikovError::WrongParity { sigma_v: sys.frame.sigma_v });
    }
    let n = sys.n;
    let zp = sys.first_variation()?;
    let zpp = second_variation_from(sys, &zp)?;
    let integrand = HermiteSeries::basis(n + 1).product(&zp.z[2])?.product(&zpp.z[2])?;
    if integrand.parity() != Parity::Even {
        return Err(MelnikovError::OddIntegrand(format!("{:?}", integrand.parity())));
    }
    let h0 = crate::hermite::hermite_at_zero(n);
    let pref = RadicalValue::integer(3).div(&RadicalValue::sqrt(2).radical_mul(&h0)).scale(&crate::exact::rat(1, 2));
    Ok(integrand.gaussian_integral().radical_mul(&pref))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bifurcation {
    Transcritical { orientation_sign: i8 },
    Pitchfork { orientation_sign: i8 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchSide {
    SecondaryExistsForAlphaPositive,
    SecondaryExistsForAlphaNegative,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub derivative: Derivative,
    pub recipe: RadicalValue,
    pub oracle: Option<RadicalValue>,
    pub oracle_source: Option<OracleSource>,
    pub exact_match: Option<bool>,
    /// The formula as printed in the source, when it differs from the oracle used.
    pub printed: Option<RadicalValue>,
    pub printed_match: Option<bool>,
}

/// The derivatives of `D` at the origin, before any nondegeneracy checks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derivatives {
    pub d2_dv_dalpha: RadicalValue,
    pub d2_dv2: SecondDerivative,
    pub d3_dv3: Option<RadicalValue>,
}

pub fn compute_derivatives(sys: &PerturbedSystem) -> Result<Derivatives> {
    let v = variations(sys)?;
    let dva = integrate_even(sys, &dva_integrand(sys, &v)?)?;
    let (dvv, d3) = if sys.frame.sigma_v == -1 {
        let odd = dvv_integrand(sys, &v)?;
        if odd.parity() != Parity::Odd && !odd.is_zero() {
            return Err(MelnikovError::OddIntegrand("second-order integrand is not odd".into()));
        }
        (SecondDerivative::IdenticallyZeroByParity, Some(integrate_even(sys, &d3_integrand(sys, &v)?)?))
    } else {
        (SecondDerivative::Value(integrate_even(sys, &dvv_integrand(sys, &v)?)?), None)
    };
    Ok(Derivatives { d2_dv_dalpha: dva, d2_dv2: dvv, d3_dv3: d3 })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MelnikovReport {
    pub system: SystemName,
    pub n: usize,
    pub parity: String,
    pub beta: usize,
    pub sigma_v: i8,
    pub sigma_w: i8,
    pub d2_dv_dalpha: RadicalValue,
    pub d2_dv2: SecondDerivative,
    pub d3_dv3: Option<RadicalValue>,
    pub bifurcation: Bifurcation,
    pub branch_side: Option<BranchSide>,
    pub oracle_agreement: Vec<OracleCheck>,
}

fn oracle_check(sys: &PerturbedSystem, which: Derivative, recipe: &RadicalValue) -> OracleCheck {
    let oracle = closed_form_oracle(sys, which).ok();
    let printed = printed_formula(sys, which).ok();
    let (oracle_value, source) = match oracle {
        Some((v, s)) => (Some(v), Some(s)),
        None => (None, None),
    };
    let printed_differs = match (&printed, &oracle_value) {
        (Some(p), Some(o)) => p != o || source != Some(OracleSource::Printed),
        (Some(_), None) => true,
        _ => false,
    };
    OracleCheck {
        derivative: which,
        recipe: recipe.clone(),
        exact_match: oracle_value.as_ref().map(|o| o == recipe),
        oracle: oracle_value,
        oracle_source: source,
        printed_match: if printed_differs { printed.as_ref().map(|p| p == recipe) } else { None },
        printed: if printed_differs { printed } else { None },
    }
}

pub fn orientation_sign(d: &Derivatives) -> i8 {
    let dva = d.d2_dv_dalpha.signum();
    match (&d.d2_dv2, &d.d3_dv3) {
        (SecondDerivative::Value(v), _) => v.signum() * dva,
        (_, Some(v)) => v.signum() * dva,
        _ => 0,
    }
}

pub fn classify_from(sys: &PerturbedSystem, d: &Derivatives) -> Result<Bifurcation> {
    if d.d2_dv_dalpha.is_zero() {
        return Err(MelnikovError::DegenerateBifurcation("d2D/dv dalpha".into()));
    }
    let o = orientation_sign(d);
    if sys.frame.sigma_v == 1 {
        if d.d2_dv2.value().is_zero() {
            return Err(MelnikovError::DegenerateBifurcation("d2D/dv2".into()));
        }
        Ok(Bifurcation::Transcritical { orientation_sign: o })
    } else {
        match &d.d3_dv3 {
            Some(v) if !v.is_zero() => Ok(Bifurcation::Pitchfork { orientation_sign: o }),
            _ => Err(MelnikovError::DegenerateBifurcation("d3D/dv3".into())),
        }
    }
}

/// Side of `alpha = 0` on which the bifurcating connection follows the global return.
///
/// The nontrivial root of `D_va v alpha + D_vv v^2 / 2` has `sign v = -o sign alpha`; along it
/// `z ~ v z'` grows like the tracked component's leading term, which must carry `return_sign`.
pub fn branch_side_from(sys: &PerturbedSystem, d: &Derivatives, zp: &VariationTriple) -> Result<BranchSide> {
    if sys.frame.sigma_v == -1 {
        return Err(MelnikovError::WrongParity { sigma_v: -1 });
    }
    let o = orientation_sign(d);
    let lead = leading_sign(&zp.z[sys.conventions.tracked_component]);
    if o == 0 || lead == 0 {
        return Err(MelnikovError::DegenerateBifurcation("orientation".into()));
    }
    let s_alpha = -sys.conventions.return_sign * o * lead;
    Ok(if s_alpha > 0 {
        BranchSide::SecondaryExistsForAlphaPositive
    } else {
        BranchSide::SecondaryExistsForAlphaNegative
    })
}

pub fn branch_side(sys: &PerturbedSystem) -> Result<BranchSide> {
    if sys.frame.sigma_v == -1 {
        return Err(MelnikovError::WrongParity { sigma_v: -1 });
    }
    let d = compute_derivatives(sys)?;
    branch_side_from(sys, &d, &sys.first_variation()?)
}

pub fn classify_bifurcation(sys: &PerturbedSystem) -> Result<MelnikovReport> {
    let d = compute_derivatives(sys)?;
    let bifurcation = classify_from(sys, &d)?;
    let branch = if sys.frame.sigma_v == 1 { Some(branch_side_from(sys, &d, &sys.first_variation()?)?) } else { None };
    let mut checks = vec![oracle_check(sys, Derivative::DvAlpha, &d.d2_dv_dalpha)];
    match (&d.d2_dv2, &d.d3_dv3) {
        (SecondDerivative::Value(v), _) => checks.push(oracle_check(sys, Derivative::Dvv, v)),
        (_, Some(v)) => checks.push(oracle_check(sys, Derivative::Dvvv, v)),
        _ => {}
    }
    Ok(MelnikovReport {
        system: sys.name,
        n: sys.n,
        parity: sys.parity_of_n().to_string(),
        beta: sys.beta()?,
        sigma_v: sys.frame.sigma_v,
        sigma_w: sys.frame.sigma_w,
        d2_dv_dalpha: d.d2_dv_dalpha,
        d2_dv2: d.d2_dv2,
        d3_dv3: d.d3_dv3,
        bifurcation,
        branch_side: branch,
        oracle_agreement: checks,
    })
}
