//! Numeric quadrature of the exact integrands.

use melnikov_core::exact::rat;
use melnikov_core::{d3_dv3, Derivative, HermiteSeries, PerturbedSystem, RadicalValue, SystemName};
use melnikov_lab::{check_system, quadrature_check, LabError};

const REL_TOL: f64 = 1e-10;

#[test]
fn squared_second_hermite_gives_eight_sqrt_two_pi() {
    let h2 = HermiteSeries::basis(2);
    let sq = h2.product(&h2).unwrap();
    let exact = RadicalValue::sqrt_2pi().scale(&rat(8, 1));
    let r = quadrature_check(&sq, &exact, REL_TOL).unwrap();
    assert!(r.pass, "{r:?}");
    assert!(r.rel_error < 1e-28);
}

#[test]
fn folded_node_k1_third_derivative() {
    let sys = PerturbedSystem::build(SystemName::FoldedNode, 2);
    let checks = check_system(&sys, REL_TOL).unwrap();
    let c = checks.iter().find(|c| c.derivative == Derivative::Dvvv).unwrap();
    assert!(c.report.pass);
    assert!((c.report.numeric - 360.9544715).abs() < 1e-7);
    assert_eq!(d3_dv3(&sys).unwrap().to_decimal(10), "360.9544715");
}

#[test]
fn odd_integrand_is_rejected() {
    let odd = HermiteSeries::basis(1).product(&HermiteSeries::basis(2)).unwrap();
    let e = quadrature_check(&odd, &RadicalValue::zero(), REL_TOL).unwrap_err();
    assert!(matches!(e, LabError::PreconditionViolation(_)));
}

#[test]
fn every_derivative_of_every_system_up_to_k6() {
    for name in [SystemName::FoldedNode, SystemName::FalknerSkan, SystemName::Nose] {
        for n in 1..=12 {
            let checks = check_system(&PerturbedSystem::build(name, n), REL_TOL).unwrap();
            assert!(checks.len() >= 2, "{name:?} n={n}");
            for c in checks {
                assert!(c.report.pass, "{name:?} n={n} {:?}: {:?}", c.derivative, c.report);
            }
        }
    }
}

#[test]
fn zero_exact_value_uses_absolute_scale() {
    // H_1 H_3 integrates to zero against the Gaussian weight.
    let s = HermiteSeries::basis(1).product(&HermiteSeries::basis(3)).unwrap();
    let r = quadrature_check(&s, &RadicalValue::zero(), REL_TOL).unwrap();
    assert!(r.pass && r.rel_error < 1e-25, "{r:?}");
}
