//! Exact derivative values frozen from an independent symbolic computation.

use melnikov_core::exact::rat;
use melnikov_core::{compute_derivatives, PerturbedSystem, RadicalValue, SecondDerivative, SystemName};

fn s2pi(p: i64, q: i64) -> RadicalValue {
    RadicalValue::sqrt_2pi().scale(&rat(p, q))
}

fn spi(p: i64, q: i64) -> RadicalValue {
    RadicalValue::sqrt_pi().scale(&rat(p, q))
}

fn s5pi(p: i64, q: i64) -> RadicalValue {
    RadicalValue::sqrt(5).radical_mul(&RadicalValue::sqrt_pi()).scale(&rat(p, q))
}

fn s13pi(p: i64, q: i64) -> RadicalValue {
    RadicalValue::sqrt(13).radical_mul(&RadicalValue::sqrt_pi()).scale(&rat(p, q))
}

struct Expect {
    name: SystemName,
    n: usize,
    dva: RadicalValue,
    dvv: Option<RadicalValue>,
    d3: Option<RadicalValue>,
}

fn e(name: SystemName, n: usize, dva: RadicalValue, dvv: Option<RadicalValue>, d3: Option<RadicalValue>) -> Expect {
    Expect { name, n, dva, dvv, d3 }
}

#[test]
fn derivatives_match_frozen_values() {
    use SystemName::*;
    let cases = vec![
        e(FoldedNode, 1, s2pi(-2, 1), Some(s2pi(8, 1)), None),
        e(FoldedNode, 2, s2pi(1, 1), None, Some(s2pi(144, 1))),
        e(FoldedNode, 3, s2pi(-4, 3), Some(s2pi(-32, 1)), None),
        e(FoldedNode, 4, s2pi(4, 3), None, Some(s2pi(204800, 9))),
        e(FoldedNode, 5, s2pi(-16, 15), Some(s2pi(512, 3)), None),
        e(FalknerSkan, 1, s2pi(2, 1), None, Some(RadicalValue::zero())),
        e(FalknerSkan, 2, s2pi(-4, 1), Some(s2pi(-8, 1)), None),
        e(FalknerSkan, 3, s2pi(4, 3), None, Some(s2pi(120, 1))),
        e(FalknerSkan, 4, s2pi(-16, 3), Some(s2pi(512, 3)), None),
        e(FalknerSkan, 5, s2pi(16, 15), None, Some(s2pi(170240, 9))),
        e(Nose, 1, spi(-4, 1), None, Some(spi(-288, 1))),
        e(Nose, 2, s2pi(2, 1), Some(s2pi(-32, 1)), None),
        e(Nose, 3, s5pi(-16, 15), None, Some(s5pi(-70656, 5))),
        e(Nose, 4, s2pi(8, 3), Some(s2pi(1664, 3)), None),
        e(Nose, 5, s13pi(-32, 65), None, Some(s13pi(-525600768, 845))),
    ];
    for c in cases {
        let sys = PerturbedSystem::build(c.name, c.n);
        let d = compute_derivatives(&sys).unwrap();
        assert_eq!(d.d2_dv_dalpha, c.dva, "{:?} n={} D_va", c.name, c.n);
        match c.dvv {
            Some(v) => assert_eq!(d.d2_dv2, SecondDerivative::Value(v), "{:?} n={} D_vv", c.name, c.n),
            None => assert_eq!(d.d2_dv2, SecondDerivative::IdenticallyZeroByParity),
        }
        assert_eq!(d.d3_dv3, c.d3, "{:?} n={} D3", c.name, c.n);
    }
}

#[test]
fn falkner_skan_seven() {
    let d = compute_derivatives(&PerturbedSystem::build(SystemName::FalknerSkan, 7)).unwrap();
    assert_eq!(d.d3_dv3, Some(s2pi(228819456, 125)));
}
