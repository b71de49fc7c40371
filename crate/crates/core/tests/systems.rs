//! Builders, first variations, adjoints and the second variation.

use num_traits::Zero;

use melnikov_core::engine::{second_order_forcing, second_variation};
use melnikov_core::exact::{int, rat, RadicalValue};
use melnikov_core::hermite::{binomial, factorial, hermite_at_zero, HermiteSeries};
use melnikov_core::systems::{build_generic, pairing, GenericCoefficients};
use melnikov_core::weber::algebraic_solution_exists;
use melnikov_core::{MelnikovError, PerturbedSystem, SystemName};

const NAMED: [SystemName; 3] = [SystemName::FoldedNode, SystemName::FalknerSkan, SystemName::Nose];

fn r2() -> RadicalValue {
    RadicalValue::sqrt(2)
}

fn q(p: i64, d: i64) -> RadicalValue {
    RadicalValue::rational(rat(p, d))
}

#[test]
fn reversibility_up_to_20() {
    for name in NAMED {
        for n in 1..=20 {
            let s = PerturbedSystem::build(name, n);
            let (d0, d1) = s.reversibility_defect();
            assert!(d0.iter().flatten().chain(d1.iter().flatten()).all(|x| x.is_zero()), "{:?} {}", name, n);
            assert!(s.quad_is_reversible());
        }
    }
}

#[test]
fn residuals_and_duality_up_to_12() {
    for name in NAMED {
        for n in 1..=12 {
            let s = PerturbedSystem::build(name, n);
            let z = s.first_variation().unwrap();
            let zero: [HermiteSeries; 3] = Default::default();
            assert!(s.variational_residual(&z.z, &zero).unwrap().iter().all(|r| r.is_zero()));
            assert_eq!(z.value_at_zero().unwrap(), s.frame.e_v.vector());
            let a = s.adjoint_solution().unwrap();
            assert!(s.adjoint_residual(&a).unwrap().iter().all(|r| r.is_zero()));
            let psi0: Vec<RadicalValue> = a.psi.iter().map(|p| p.value_at_zero().unwrap()).collect();
            assert_eq!(psi0, s.frame.e_w.vector().to_vec());
            // <psi, z'> is constant and decays, hence identically zero
            assert!(pairing(&a.psi, &z.z).unwrap().is_zero(), "{:?} {}", name, n);
        }
    }
}

#[test]
fn second_variation_residual_and_normalization() {
    for name in NAMED {
        for n in 1..=8 {
            let s = PerturbedSystem::build(name, n);
            if s.frame.sigma_v == 1 {
                // the obstruction to solving is exactly the nonzero second derivative
                assert!(matches!(second_variation(&s), Err(MelnikovError::ResonantForcing { .. })));
                continue;
            }
            let zp = s.first_variation().unwrap();
            let zpp = second_variation(&s).unwrap();
            let f = second_order_forcing(&s, &zp).unwrap();
            assert!(s.variational_residual(&zpp.z, &f).unwrap().iter().all(|r| r.is_zero()));
            let c = s.frame_coordinates(&zpp.value_at_zero().unwrap()).unwrap();
            assert!(c[0].is_zero() && c[1].is_zero(), "{:?} {}", name, n);
        }
    }
}

#[test]
fn frame_eigen_relations() {
    for name in NAMED {
        for n in 1..=12 {
            let s = PerturbedSystem::build(name, n);
            let f = &s.frame;
            for (v, sig) in [(&f.e_v, f.sigma_v), (&f.e_w, f.sigma_w)] {
                for i in 0..3 {
                    assert_eq!(&v.dir[i] * int(s.sigma[i] as i64), &v.dir[i] * int(sig as i64));
                }
            }
            assert_eq!(f.sigma_v, -f.sigma_w);
        }
    }
}

#[test]
fn builder_examples() {
    let s = PerturbedSystem::build(SystemName::FoldedNode, 2);
    let nz: Vec<(usize, usize)> =
        (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).filter(|&(i, j)| !s.a1[i][j].is_zero()).collect();
    assert_eq!(nz, vec![(0, 0)]);
    assert_eq!(s.a0[0], [int(0), int(1), int(0)]);
    assert_eq!(s.beta().unwrap(), 1);
    assert_eq!(s.frame.e_v.vector(), [q(0, 1), q(1, 1), q(0, 1)]);
    assert_eq!(s.frame.e_w.vector(), [q(1, 1), q(0, 1), q(0, 1)]);

    let s = PerturbedSystem::build(SystemName::FalknerSkan, 3);
    assert_eq!(s.frame.e_v.vector(), [q(0, 1), q(0, 1), q(1, 1)]);
    assert_eq!(s.frame.sigma_v, -1);
    let s = PerturbedSystem::build(SystemName::FalknerSkan, 2);
    assert!(s.quad[0].iter().chain(s.quad[1].iter()).flatten().all(|x| x.is_zero()));
    assert_eq!(s.quad[2][0][2], rat(-1, 2));
    assert_eq!(s.quad[2][1][1], int(1));
    assert_eq!(s.beta().unwrap(), 1);

    let s = PerturbedSystem::build(SystemName::Nose, 2);
    assert_eq!(s.alpha_lin[2][0], int(2));
    assert_eq!(s.quad[2][0][0], int(1));
    assert_eq!(s.alpha_quad[2][0][0], int(1));
    assert_eq!(s.frame.e_v.vector(), [q(1, 1), q(0, 1), q(0, 1)]);
    assert_eq!(s.beta().unwrap(), 2);
    assert_eq!(PerturbedSystem::build(SystemName::FoldedNode, 4).beta().unwrap(), 3);
}

#[test]
fn folded_node_first_variation_and_adjoint_k1() {
    let s = PerturbedSystem::build(SystemName::FoldedNode, 2);
    let z = s.first_variation().unwrap();
    let h20 = hermite_at_zero(2);
    let z1 = HermiteSeries::term(1, r2().div(&h20).scale(&int(-1)));
    let z2 = HermiteSeries::term(2, h20.recip());
    let z3 = HermiteSeries::basis(0).sub(&z2).unwrap();
    assert_eq!(z.z, [z1, z2, z3]);
    let a = s.adjoint_solution().unwrap();
    let p1 = HermiteSeries::term(2, h20.recip());
    let p2 = HermiteSeries::term(1, RadicalValue::integer(2).div(&r2().radical_mul(&h20)));
    assert_eq!(a.psi, [p1, p2, HermiteSeries::zero()]);
}

#[test]
fn falkner_skan_first_variation_n2() {
    // columns of the state-transition matrix for even n
    let n = 2usize;
    let s = PerturbedSystem::build(SystemName::FalknerSkan, n);
    let z = s.first_variation().unwrap();
    let h = hermite_at_zero(n);
    let z1 = HermiteSeries::term(n + 1, r2().radical_mul(&h).scale(&int(n as i64 + 1)).recip());
    let z2 = HermiteSeries::term(n, h.recip());
    let z3 = HermiteSeries::term(n - 1, r2().scale(&int(n as i64)).div(&h));
    assert_eq!(z.z, [z1, z2, z3]);
}

/// The bracket shared by the closed forms of `z1''` and `z3''` for the folded node, `n = 2k`.
fn folded_node_x(k: usize) -> HermiteSeries {
    let h = hermite_at_zero(2 * k);
    let pref = r2().scale(&int(k as i64)).div(&h.radical_mul(&h));
    let mut x = HermiteSeries::zero();
    for j in 0..2 * k {
        let c = binomial(2 * k - 1, j) * binomial(2 * k, j) * num_bigint::BigInt::from(2).pow(j as u32) * factorial(j);
        let w = melnikov_core::Rational::new(c, (2 * k as i64 - 1 - 2 * j as i64).into());
        x = x.add(&HermiteSeries::term(4 * k - 1 - 2 * j, pref.scale(&w))).unwrap();
    }
    x.add(&HermiteSeries::term(2 * k - 1, r2().scale(&int(k as i64)).div(&h))).unwrap()
}

#[test]
fn folded_node_second_variation_closed_form() {
    for k in 1..=3 {
        let s = PerturbedSystem::build(SystemName::FoldedNode, 2 * k);
        let zpp = second_variation(&s).unwrap();
        let x = folded_node_x(k);
        assert_eq!(zpp.z[0], x.derivative().scale_rational(&int(-2)), "z1'' k={}", k);
        assert_eq!(zpp.z[2], x.scale_rational(&int(-4)), "z3'' k={}", k);
    }
}

#[test]
fn folded_node_z1_z3_product_k2() {
    let k = 2usize;
    let s = PerturbedSystem::build(SystemName::FoldedNode, 2 * k);
    let z = s.first_variation().unwrap();
    let h = hermite_at_zero(2 * k);
    let pref = r2().scale(&int(k as i64)).div(&h.radical_mul(&h));
    let mut expect = HermiteSeries::zero();
    for j in 0..2 * k {
        let c = binomial(2 * k - 1, j) * binomial(2 * k, j) * num_bigint::BigInt::from(2).pow(j as u32) * factorial(j);
        expect = expect
            .add(&HermiteSeries::term(4 * k - 1 - 2 * j, pref.scale(&melnikov_core::Rational::from_integer(c))))
            .unwrap();
    }
    let expect = expect.sub(&HermiteSeries::term(2 * k - 1, r2().scale(&int(k as i64)).div(&h))).unwrap();
    assert_eq!(z.z[0].product(&z.z[2]).unwrap(), expect);
}

#[test]
fn transversality_criterion() {
    assert!(algebraic_solution_exists(&int(3)));
    assert!(!algebraic_solution_exists(&rat(7, 2)));
    assert!(algebraic_solution_exists(&int(0)));
    assert!(!algebraic_solution_exists(&int(-2)));
    let p = melnikov_core::WeberProblem::new(2, HermiteSeries::basis(2));
    assert_eq!(melnikov_core::solve_weber(&p), Err(MelnikovError::ResonantForcing { beta: 2 }));
}

fn generic(a2: i64, b1: i64, c23: i64) -> GenericCoefficients {
    GenericCoefficients {
        a2: int(a2),
        a12: int(1),
        b1: int(b1),
        b11: int(2),
        b22: int(-1),
        c1: int(3),
        c11: int(1),
        c22: int(1),
        c23: int(c23),
        da2: int(1),
        db1: int(0),
        dc1: int(0),
    }
}

#[test]
fn generic_builder() {
    assert!(matches!(build_generic(&generic(1, 1, 0)), Err(MelnikovError::NotResonant(_))));
    let c = GenericCoefficients { b1: rat(-5, 2), ..generic(1, 0, 0) };
    assert!(matches!(build_generic(&c), Err(MelnikovError::NotResonant(_))));
    for (a2, b1, c23) in [(1, -1, 0), (3, -1, 2), (-1, 4, 1), (2, -2, -3), (-5, 1, 1)] {
        let s = build_generic(&generic(a2, b1, c23)).unwrap();
        let beta = (-(a2 * b1) - 1) as usize;
        assert_eq!(s.beta().unwrap(), beta);
        let z = s.first_variation().unwrap();
        let zero: [HermiteSeries; 3] = Default::default();
        assert!(s.variational_residual(&z.z, &zero).unwrap().iter().all(|r| r.is_zero()));
        let a = s.adjoint_solution().unwrap();
        assert!(s.adjoint_residual(&a).unwrap().iter().all(|r| r.is_zero()));
        assert!(pairing(&a.psi, &z.z).unwrap().is_zero());
    }
}

#[test]
fn system_json_round_trip() {
    for name in NAMED {
        let s = PerturbedSystem::build(name, 5);
        let j = serde_json::to_string(&s).unwrap();
        let back: PerturbedSystem = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
    }
    let s = HermiteSeries::term(0, RadicalValue::one())
        .add(&HermiteSeries::term(3, RadicalValue::sqrt(2).radical_mul(&RadicalValue::sqrt_pi())))
        .unwrap();
    let j = serde_json::to_string(&s).unwrap();
    assert_eq!(j, r#"{"0":"1","3":"sqrt(2) * pi^(1/2)"}"#);
    assert_eq!(serde_json::from_str::<HermiteSeries>(&j).unwrap(), s);
}
