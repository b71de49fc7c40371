//! Adaptive Gauss-Legendre quadrature of Gaussian-weighted Hermite series in double-double.

use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use melnikov_core::engine::{compute_derivatives, integrand_prefactor, variations};
use melnikov_core::systems::Mat3;
use melnikov_core::{Derivative, HermiteSeries, Parity, PerturbedSystem, RadicalValue, Rational, SecondDerivative};

use crate::dd;
use crate::error::{LabError, Result};

const GL_ORDER: usize = 20;
const MAX_DEPTH: u32 = 24;
/// Panel differences below this fraction of the panel mass are rounding noise.
const NOISE_REL: f64 = 1e-30;
/// Panel tolerance relative to the integral of the absolute integrand.
const PANEL_REL_TOL: f64 = 1e-27;
/// Tail bound relative to the peak of the integrand envelope.
const TAIL_REL: f64 = 1e-34;

pub fn dd(v: &RadicalValue) -> TwoFloat {
    let (hi, lo) = v.to_double_double();
    TwoFloat::new_add(hi, lo)
}

pub fn dd_rational(q: &Rational) -> TwoFloat {
    dd(&RadicalValue::rational(q.clone()))
}

/// Dense coefficient vector of a series, evaluated by the three-term recurrence at `s = t/sqrt 2`.
#[derive(Clone, Debug)]
pub struct SeriesEvaluator {
    coeffs: Vec<TwoFloat>,
    abs_coeffs: Vec<f64>,
    inv_sqrt2: TwoFloat,
}

impl SeriesEvaluator {
    pub fn new(s: &HermiteSeries) -> Self {
        let len = s.degree().map_or(0, |d| d + 1);
        let mut coeffs = vec![TwoFloat::from(0.0); len];
        for (j, c) in s.terms() {
            coeffs[j] = dd(c);
        }
        let abs_coeffs = coeffs.iter().map(|c| c.hi().abs()).collect();
        SeriesEvaluator { coeffs, abs_coeffs, inv_sqrt2: TwoFloat::from(0.5).sqrt() }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, t: TwoFloat) -> TwoFloat {
        let s = t * self.inv_sqrt2;
        let mut acc = TwoFloat::from(0.0);
        let (mut h0, mut h1) = (TwoFloat::from(1.0), s * 2.0);
        for (n, c) in self.coeffs.iter().enumerate() {
            let h = if n == 0 { h0 } else { h1 };
            acc += *c * h;
            if n >= 1 {
                let h2 = s * h1 * 2.0 - h0 * (2.0 * n as f64);
                h0 = h1;
                h1 = h2;
            }
        }
        acc
    }

    /// `sum |c_j| |H_j(t/sqrt 2)|`, an upper bound for `|series(t)|`.
    pub fn envelope(&self, t: f64) -> f64 {
        let s = t / std::f64::consts::SQRT_2;
        let (mut h0, mut h1) = (1.0f64, 2.0 * s);
        let mut acc = 0.0f64;
        for (n, c) in self.abs_coeffs.iter().enumerate() {
            let h = if n == 0 { h0 } else { h1 };
            acc += c * h.abs();
            if n >= 1 {
                let h2 = 2.0 * s * h1 - 2.0 * n as f64 * h0;
                h0 = h1;
                h1 = h2;
            }
        }
        acc
    }
}

/// Gauss-Legendre rule on `[-1, 1]` with nodes refined by Newton iteration in double-double.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<TwoFloat>,
    pub weights: Vec<TwoFloat>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let one = TwoFloat::from(1.0);
        for i in 0..n {
            let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut x = TwoFloat::from(guess);
            let mut dp = one;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = dd::div(p, d);
                x -= dx;
                if dx.hi().abs() < 1e-33 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d.hi() != 0.0 {
                dp = d;
            }
            nodes.push(x);
            weights.push(dd::div(TwoFloat::from(2.0), (one - x * x) * dp * dp));
        }
        GaussLegendre { nodes, weights }
    }

    pub fn integrate<F: Fn(TwoFloat) -> TwoFloat>(&self, f: &F, a: TwoFloat, b: TwoFloat) -> (TwoFloat, TwoFloat) {
        let half = (b - a) / 2.0;
        let mid = (a + b) / 2.0;
        let mut acc = TwoFloat::from(0.0);
        let mut abs = TwoFloat::from(0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(mid + half * *x) * *w;
            acc += v;
            abs += v.abs();
        }
        (acc * half, abs * half)
    }
}

/// `(P_n(x), P_n'(x))`.
fn legendre(n: usize, x: TwoFloat) -> (TwoFloat, TwoFloat) {
    let one = TwoFloat::from(1.0);
    let (mut p0, mut p1) = (one, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = (x * p1 * (2.0 * kf - 1.0) - p0 * (kf - 1.0)) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = dd::div((x * p1 - p0) * (n as f64), x * x - one);
    (p1, d)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureValue {
    pub value: TwoFloat,
    pub abs_integral: f64,
    pub error_estimate: f64,
}

/// Integral of `e^{-t^2/2} f(t)` over `[-l, l]` by adaptive panel bisection.
pub fn integrate_gaussian<F: Fn(TwoFloat) -> TwoFloat>(f: &F, l: f64) -> QuadratureValue {
    let rule = GaussLegendre::new(GL_ORDER);
    let g = |t: TwoFloat| f(t) * dd::exp(-(t * t) / 2.0);
    let panels = (2.0 * l).ceil().max(2.0) as usize;
    let width = TwoFloat::from(2.0 * l) / panels as f64;
    let edges: Vec<TwoFloat> = (0..=panels).map(|i| TwoFloat::from(-l) + width * i as f64).collect();
    let coarse: Vec<(TwoFloat, TwoFloat)> = edges.windows(2).map(|e| rule.integrate(&g, e[0], e[1])).collect();
    let scale: f64 = coarse.iter().map(|c| c.1.hi()).sum::<f64>().max(f64::MIN_POSITIVE);
    let tol = PANEL_REL_TOL * scale;
    let mut value = TwoFloat::from(0.0);
    let mut err = 0.0;
    let mut abs = 0.0;
    for (e, whole) in edges.windows(2).zip(coarse) {
        let (v, ee, a) = adapt(&rule, &g, e[0], e[1], whole.0, tol * (width.hi() / (2.0 * l)), 0);
        value += v;
        err += ee;
        abs += a;
    }
    QuadratureValue { value, abs_integral: abs, error_estimate: err }
}

fn adapt<G: Fn(TwoFloat) -> TwoFloat>(
    rule: &GaussLegendre,
    g: &G,
    a: TwoFloat,
    b: TwoFloat,
    whole: TwoFloat,
    tol: f64,
    depth: u32,
) -> (TwoFloat, f64, f64) {
    let m = (a + b) / 2.0;
    let (l, la) = rule.integrate(g, a, m);
    let (r, ra) = rule.integrate(g, m, b);
    let diff = (whole - (l + r)).hi().abs();
    if diff <= tol.max(NOISE_REL * (la + ra).hi()) || depth >= MAX_DEPTH {
        return (l + r, diff, (la + ra).hi());
    }
    let (v1, e1, a1) = adapt(rule, g, a, m, l, tol / 2.0, depth + 1);
    let (v2, e2, a2) = adapt(rule, g, m, b, r, tol / 2.0, depth + 1);
    (v1 + v2, e1 + e2, a1 + a2)
}

/// Half-width beyond which the envelope of `e^{-t^2/2}` times a product of vector series is negligible.
///
/// Each factor is a group of component series; its envelope is the sum of the component envelopes.
pub fn truncation_half_width(factors: &[&[SeriesEvaluator]]) -> f64 {
    let ln_env = |t: f64| {
        factors.iter().map(|g| g.iter().map(|e| e.envelope(t)).sum::<f64>().max(f64::MIN_POSITIVE).ln()).sum::<f64>()
            - t * t / 2.0
    };
    let deg: usize = factors.iter().map(|g| g.iter().map(|e| e.degree()).max().unwrap_or(0)).sum();
    let mut peak = f64::NEG_INFINITY;
    let mut t = 0.0;
    while t <= (2.0 * deg as f64).sqrt() + 2.0 {
        peak = peak.max(ln_env(t));
        t += 0.25;
    }
    let target = peak + TAIL_REL.ln();
    let mut l = ((2.0 * deg as f64).sqrt() + 2.0).max(4.0);
    while ln_env(l) > target || ln_env(-l) > target {
        l += 0.5;
    }
    l
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureReport {
    pub numeric: f64,
    pub numeric_lo: f64,
    pub exact: String,
    pub exact_decimal: String,
    pub rel_error: f64,
    pub error_estimate: f64,
    pub rel_tol: f64,
    pub pass: bool,
}

fn report(q: QuadratureValue, exact: &RadicalValue, rel_tol: f64) -> Result<QuadratureReport> {
    let e = dd(exact);
    let denom = if exact.is_zero() { q.abs_integral.max(f64::MIN_POSITIVE) } else { e.hi().abs() };
    let rel_error = (q.value - e).hi().abs() / denom;
    let rel_estimate = q.error_estimate / denom;
    if rel_estimate > rel_tol / 10.0 {
        return Err(LabError::QuadratureNonConvergent { estimate: rel_estimate, limit: rel_tol / 10.0 });
    }
    Ok(QuadratureReport {
        numeric: q.value.hi(),
        numeric_lo: q.value.lo(),
        exact: exact.to_string(),
        exact_decimal: exact.to_decimal(16),
        rel_error,
        error_estimate: rel_estimate,
        rel_tol,
        pass: rel_error < rel_tol,
    })
}

/// Numeric `int e^{-t^2/2} series(t) dt` over the real line against an exact value.
pub fn quadrature_check(series: &HermiteSeries, exact: &RadicalValue, rel_tol: f64) -> Result<QuadratureReport> {
    match series.parity() {
        Parity::Even => {}
        p => {
            return Err(LabError::PreconditionViolation(format!("integrand parity is {:?}, expected even", p)));
        }
    }
    let ev = SeriesEvaluator::new(series);
    let l = truncation_half_width(&[std::slice::from_ref(&ev)]);
    report(integrate_gaussian(&|t| ev.eval(t), l), exact, rel_tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub derivative: Derivative,
    pub report: QuadratureReport,
}

fn mat_dd(m: &Mat3) -> [[TwoFloat; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| dd_rational(&m[i][j])))
}

fn evals(s: &[HermiteSeries; 3]) -> [SeriesEvaluator; 3] {
    std::array::from_fn(|i| SeriesEvaluator::new(&s[i]))
}

fn at(e: &[SeriesEvaluator; 3], t: TwoFloat) -> [TwoFloat; 3] {
    std::array::from_fn(|i| e[i].eval(t))
}

fn quad_form(q: &[[[TwoFloat; 3]; 3]; 3], x: &[TwoFloat; 3], y: &[TwoFloat; 3]) -> [TwoFloat; 3] {
    std::array::from_fn(|i| {
        let mut acc = TwoFloat::from(0.0);
        for a in 0..3 {
            for b in 0..3 {
                acc += q[i][a][b] * x[a] * y[b];
            }
        }
        acc
    })
}

fn dot(a: &[TwoFloat; 3], b: &[TwoFloat; 3]) -> TwoFloat {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Quadrature of every derivative the engine computes for `sys`.
///
/// The integrands are assembled pointwise from the component series of `psi`, `z'` and `z''`,
/// so the exact product linearization and pairing are checked as well as the final integral.
pub fn check_system(sys: &PerturbedSystem, rel_tol: f64) -> Result<Vec<DerivativeCheck>> {
    let d = compute_derivatives(sys)?;
    let v = variations(sys)?;
    let pre = dd_rational(&integrand_prefactor(sys));
    let psi = evals(&v.adjoint.psi);
    let z1 = evals(&v.first.z);
    let z2 = v.second.as_ref().map(|s| evals(&s.z));
    let b = mat_dd(&sys.alpha_lin);
    let q: [[[TwoFloat; 3]; 3]; 3] = std::array::from_fn(|i| mat_dd(&sys.quad[i]));
    let mut factors: Vec<&[SeriesEvaluator]> = vec![&psi, &z1, &z1];
    if let Some(z2) = &z2 {
        factors.push(z2);
    }
    let l = truncation_half_width(&factors);

    let mut out = Vec::new();
    let dva = |t: TwoFloat| {
        let z = at(&z1, t);
        let bz: [TwoFloat; 3] = std::array::from_fn(|i| b[i][0] * z[0] + b[i][1] * z[1] + b[i][2] * z[2]);
        dot(&at(&psi, t), &bz) * pre
    };
    out.push(DerivativeCheck {
        derivative: Derivative::DvAlpha,
        report: report(integrate_gaussian(&dva, l), &d.d2_dv_dalpha, rel_tol)?,
    });
    if let SecondDerivative::Value(exact) = &d.d2_dv2 {
        let dvv = |t: TwoFloat| {
            let z = at(&z1, t);
            dot(&at(&psi, t), &quad_form(&q, &z, &z)) * pre * 2.0
        };
        out.push(DerivativeCheck {
            derivative: Derivative::Dvv,
            report: report(integrate_gaussian(&dvv, l), exact, rel_tol)?,
        });
    }
    if let (Some(exact), Some(z2)) = (&d.d3_dv3, &z2) {
        let d3 = |t: TwoFloat| dot(&at(&psi, t), &quad_form(&q, &at(&z1, t), &at(z2, t))) * pre * 6.0;
        out.push(DerivativeCheck {
            derivative: Derivative::Dvvv,
            report: report(integrate_gaussian(&d3, l), exact, rel_tol)?,
        });
    }
    Ok(out)
}
