//! Double-double division and exponential.
//!
//! `twofloat` 0.8 computes `TwoFloat / TwoFloat` and `exp` to plain double precision,
//! so quadrature uses these instead. Addition, subtraction, multiplication and `sqrt`
//! from `twofloat` are full precision.

use twofloat::TwoFloat;

/// `a / b` to about 32 significant digits.
pub fn div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    TwoFloat::new_add(q1, q2) + q3
}

const SQUARINGS: i32 = 6;
const TAYLOR_TERMS: usize = 14;

/// `e^x` by range reduction `x = k ln 2 + r`, a Taylor series in `r / 2^6` and repeated squaring.
pub fn exp(x: TwoFloat) -> TwoFloat {
    if x.hi() < -745.0 {
        return TwoFloat::from(0.0);
    }
    if x.hi() > 709.0 {
        return TwoFloat::from(f64::INFINITY);
    }
    let ln2 = twofloat::consts::LN_2;
    let k = (x.hi() / std::f64::consts::LN_2).round();
    let r = (x - ln2 * k) * 2f64.powi(-SQUARINGS);
    // Horner form of sum_{n<=N} r^n / n!, dividing by exact small integers.
    let mut acc = TwoFloat::from(1.0);
    for n in (1..=TAYLOR_TERMS).rev() {
        acc = TwoFloat::from(1.0) + r * acc / n as f64;
    }
    for _ in 0..SQUARINGS {
        acc = acc * acc;
    }
    // Scale in two stages so subnormal results keep their leading bits.
    let k = k as i32;
    let (k1, k2) = (k / 2, k - k / 2);
    acc * 2f64.powi(k1) * 2f64.powi(k2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: TwoFloat, hi: f64, lo: f64) -> f64 {
        ((a - TwoFloat::new_add(hi, lo)).hi() / hi).abs()
    }

    #[test]
    fn division_is_double_double_accurate() {
        let third = div(TwoFloat::from(1.0), TwoFloat::from(3.0));
        assert!(rel(third, 0.3333333333333333, 1.850371707708594e-17) < 1e-31);
        let a = TwoFloat::new_add(std::f64::consts::PI, 1.2246467991473532e-16);
        let b = TwoFloat::new_add(std::f64::consts::E, 1.4456468917292502e-16);
        assert!(((div(a, b) * b - a).hi() / a.hi()).abs() < 1e-31);
    }

    #[test]
    fn exponential_matches_reference_values() {
        let cases = [
            (1.0, std::f64::consts::E, 1.4456468917292502e-16),
            (-0.5, 0.6065306597126334, -6.593178415491414e-19),
            (-12.5, 3.726653172078671e-06, 5.469656173191849e-23),
            (-50.0, 1.9287498479639178e-22, -3.7546101071240096e-39),
            (-200.0, 1.3838965267367376e-87, -3.0390043403234164e-104),
        ];
        for (x, hi, lo) in cases {
            let e = rel(exp(TwoFloat::from(x)), hi, lo);
            assert!(e < 1e-29, "exp({x}) rel {e}");
        }
    }

    #[test]
    fn exponential_of_opposite_arguments_multiplies_to_one() {
        for x in [0.1, 0.3466, 2.5, 17.25] {
            let a = TwoFloat::from(x) / 3.0;
            let p = exp(a) * exp(-a);
            assert!((p - TwoFloat::from(1.0)).hi().abs() < 1e-29);
        }
    }
}
