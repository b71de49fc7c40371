//! Quadratic time-reversible systems rectified about the symmetric orbit, with their first
//! variations and decaying adjoint solutions.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{MelnikovError, Result};
use crate::exact::{int, rat, RadicalValue, Rational};
use crate::hermite::HermiteSeries;
use crate::weber::algebraic_solution_exists;

pub type Mat3 = [[Rational; 3]; 3];
pub type Series3 = [HermiteSeries; 3];

pub fn mat_zero() -> Mat3 {
    std::array::from_fn(|_| std::array::from_fn(|_| Rational::zero()))
}

fn series3_zero() -> Series3 {
    std::array::from_fn(|_| HermiteSeries::zero())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemName {
    FoldedNode,
    FalknerSkan,
    Nose,
    Generic,
}

impl SystemName {
    pub fn as_str(&self) -> &'static str {
        match self {
            SystemName::FoldedNode => "folded_node",
            SystemName::FalknerSkan => "falkner_skan",
            SystemName::Nose => "nose",
            SystemName::Generic => "generic",
        }
    }
}

/// The vector `scale * dir` with a rational direction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Direction {
    #[serde(with = "rat3_serde")]
    pub dir: [Rational; 3],
    pub scale: RadicalValue,
}

impl Direction {
    pub fn axis(i: usize) -> Self {
        let mut dir: [Rational; 3] = std::array::from_fn(|_| Rational::zero());
        dir[i] = Rational::one();
        Direction { dir, scale: RadicalValue::one() }
    }

    pub fn new(dir: [i64; 3], scale: RadicalValue) -> Self {
        Direction { dir: dir.map(int), scale }
    }

    pub fn vector(&self) -> [RadicalValue; 3] {
        std::array::from_fn(|i| self.scale.scale(&self.dir[i]))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub e_u: Direction,
    pub e_v: Direction,
    pub e_w: Direction,
    pub sigma_v: i8,
    pub sigma_w: i8,
}

/// Table-driven conventions taken from the per-system Melnikov displays.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conventions {
    /// Prefactor of the half-line integral of `<psi, g>` in the transcritical case.
    #[serde(with = "rat_serde")]
    pub half_line_factor: Rational,
    /// Component of `z'` whose growth decides whether a connection follows the global return.
    pub tracked_component: usize,
    /// Required sign of `v` times the tracked component's leading coefficient on the return side.
    pub return_sign: i8,
}

/// `z' = A(t) z + g(z, alpha)` with `A(t) = A0 + t A1`, `g` quadratic in `z` plus `alpha`-linear terms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbedSystem {
    pub name: SystemName,
    pub n: usize,
    /// `mu = mu0 + alpha`.
    #[serde(with = "rat_serde")]
    pub mu0: Rational,
    #[serde(with = "mat_serde")]
    pub a0: Mat3,
    #[serde(with = "mat_serde")]
    pub a1: Mat3,
    /// Component `i` of the quadratic part is `z^T quad[i] z` with `quad[i]` symmetric.
    #[serde(with = "mats_serde")]
    pub quad: [Mat3; 3],
    #[serde(with = "mat_serde")]
    pub alpha_lin: Mat3,
    #[serde(with = "mats_serde")]
    pub alpha_quad: [Mat3; 3],
    pub sigma: [i8; 3],
    pub frame: Frame,
    /// Component carrying the `t z_d` term, reduced to a Weber equation.
    pub designated: usize,
    pub conventions: Conventions,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariationTriple {
    pub z: Series3,
}

impl VariationTriple {
    pub fn value_at_zero(&self) -> Result<[RadicalValue; 3]> {
        let v: Vec<RadicalValue> = self.z.iter().map(|s| s.value_at_zero()).collect::<Result<_>>()?;
        Ok([v[0].clone(), v[1].clone(), v[2].clone()])
    }
}

/// `psi(t) = e^{-t^2/2} (psi1, psi2, psi3)(t)`; only the polynomial factor is stored.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjointSolution {
    pub psi: Series3,
}

fn sym_set(m: &mut Mat3, i: usize, j: usize, coeff_of_monomial: Rational) {
    if i == j {
        m[i][i] = coeff_of_monomial;
    } else {
        let half = coeff_of_monomial / int(2);
        m[i][j] = half.clone();
        m[j][i] = half;
    }
}

fn n_rat(n: usize) -> Rational {
    int(n as i64)
}

/// Folded node: `z1' = t z1 + (n/2) z2 + (alpha/2) z2 + z1 z3`, `z2' = -2 z1`, `z3' = 2 z1`.
pub fn build_folded_node(n: usize) -> PerturbedSystem {
    assert!(n >= 1);
    let mut a0 = mat_zero();
    a0[0][1] = n_rat(n) / int(2);
    a0[1][0] = int(-2);
    a0[2][0] = int(2);
    let mut a1 = mat_zero();
    a1[0][0] = int(1);
    let mut quad = [mat_zero(), mat_zero(), mat_zero()];
    sym_set(&mut quad[0], 0, 2, int(1));
    let mut alpha_lin = mat_zero();
    alpha_lin[0][1] = rat(1, 2);
    let frame = if n % 2 == 1 {
        Frame { e_u: Direction::axis(2), e_v: Direction::axis(0), e_w: Direction::axis(1), sigma_v: 1, sigma_w: -1 }
    } else {
        Frame { e_u: Direction::axis(2), e_v: Direction::axis(1), e_w: Direction::axis(0), sigma_v: -1, sigma_w: 1 }
    };
    PerturbedSystem {
        name: SystemName::FoldedNode,
        n,
        mu0: n_rat(n),
        a0,
        a1,
        quad,
        alpha_lin,
        alpha_quad: [mat_zero(), mat_zero(), mat_zero()],
        sigma: [1, -1, -1],
        frame,
        designated: 0,
        conventions: Conventions { half_line_factor: int(2), tracked_component: 1, return_sign: -1 },
    }
}

/// Falkner–Skan: `z1' = z2`, `z2' = z3`, `z3' = t z3 - n z2 - 2 alpha z2 - z1 z3 + (n/2 + alpha) z2^2`.
pub fn build_falkner_skan(n: usize) -> PerturbedSystem {
    assert!(n >= 1);
    let mut a0 = mat_zero();
    a0[0][1] = int(1);
    a0[1][2] = int(1);
    a0[2][1] = -n_rat(n);
    let mut a1 = mat_zero();
    a1[2][2] = int(1);
    let mut quad = [mat_zero(), mat_zero(), mat_zero()];
    sym_set(&mut quad[2], 0, 2, int(-1));
    sym_set(&mut quad[2], 1, 1, n_rat(n) / int(2));
    let mut alpha_lin = mat_zero();
    alpha_lin[2][1] = int(-2);
    let mut alpha_quad = [mat_zero(), mat_zero(), mat_zero()];
    sym_set(&mut alpha_quad[2], 1, 1, int(1));
    let frame = if n % 2 == 1 {
        Frame { e_u: Direction::axis(0), e_v: Direction::axis(2), e_w: Direction::axis(1), sigma_v: -1, sigma_w: 1 }
    } else {
        Frame { e_u: Direction::axis(0), e_v: Direction::axis(1), e_w: Direction::axis(2), sigma_v: 1, sigma_w: -1 }
    };
    PerturbedSystem {
        name: SystemName::FalknerSkan,
        n,
        mu0: n_rat(n) / int(2),
        a0,
        a1,
        quad,
        alpha_lin,
        alpha_quad,
        sigma: [-1, 1, -1],
        frame,
        designated: 2,
        conventions: Conventions { half_line_factor: int(2), tracked_component: 1, return_sign: 1 },
    }
}

/// Nosé: `z1' = t z1 - z2 - z3 - z1 z3`, `z2' = z1`, `z3' = n z1 + 2 alpha z1 + (n/2 + alpha) z1^2`.
pub fn build_nose(n: usize) -> PerturbedSystem {
    assert!(n >= 1);
    let mut a0 = mat_zero();
    a0[0][1] = int(-1);
    a0[0][2] = int(-1);
    a0[1][0] = int(1);
    a0[2][0] = n_rat(n);
    let mut a1 = mat_zero();
    a1[0][0] = int(1);
    let mut quad = [mat_zero(), mat_zero(), mat_zero()];
    sym_set(&mut quad[0], 0, 2, int(-1));
    sym_set(&mut quad[2], 0, 0, n_rat(n) / int(2));
    let mut alpha_lin = mat_zero();
    alpha_lin[2][0] = int(2);
    let mut alpha_quad = [mat_zero(), mat_zero(), mat_zero()];
    sym_set(&mut alpha_quad[2], 0, 0, int(1));
    let e_u = Direction::new([0, 1, -1], RadicalValue::sqrt(2).recip());
    let (frame, half_line_factor) = if n % 2 == 1 {
        let nn = (n * n + 1) as u64;
        let e_v = Direction::new([0, 1, n as i64], RadicalValue::sqrt(nn).recip());
        (Frame { e_u, e_v, e_w: Direction::axis(0), sigma_v: -1, sigma_w: 1 }, int(2))
    } else {
        // e_w = (0,1,1) without unit normalization, matching the displayed adjoint at t = 0
        let e_w = Direction::new([0, 1, 1], RadicalValue::one());
        (Frame { e_u, e_v: Direction::axis(0), e_w, sigma_v: 1, sigma_w: -1 }, int(1))
    };
    PerturbedSystem {
        name: SystemName::Nose,
        n,
        mu0: n_rat(n) / int(2) + int(1),
        a0,
        a1,
        quad,
        alpha_lin,
        alpha_quad,
        sigma: [1, -1, -1],
        frame,
        designated: 0,
        conventions: Conventions { half_line_factor, tracked_component: 1, return_sign: 1 },
    }
}

/// Coefficients of the general quadratic normal form
/// `f1 = a2 x2 + a12 x1 x2 + x1 x3`, `f2 = b1 x1 + b11 x1^2 + b22 x2^2`,
/// `f3 = 1 + c1 x1 + c11 x1^2 + c22 x2^2 + c23 x2 x3`, together with the `alpha`-derivatives
/// of the linear coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenericCoefficients {
    pub a2: Rational,
    pub a12: Rational,
    pub b1: Rational,
    pub b11: Rational,
    pub b22: Rational,
    pub c1: Rational,
    pub c11: Rational,
    pub c22: Rational,
    pub c23: Rational,
    pub da2: Rational,
    pub db1: Rational,
    pub dc1: Rational,
}

impl GenericCoefficients {
    pub fn beta(&self) -> Rational {
        -(&self.a2 * &self.b1 + int(1))
    }
}

pub fn build_generic(c: &GenericCoefficients) -> Result<PerturbedSystem> {
    let beta = c.beta();
    if !algebraic_solution_exists(&beta) {
        return Err(MelnikovError::NotResonant(beta.to_string()));
    }
    let b = beta.to_integer().try_into().map_err(|_| MelnikovError::NotResonant(beta.to_string()))?;
    let b: usize = b;
    let mut a0 = mat_zero();
    a0[0][1] = c.a2.clone();
    a0[1][0] = c.b1.clone();
    a0[2][0] = c.c1.clone();
    let mut a1 = mat_zero();
    a1[0][0] = int(1);
    a1[2][1] = c.c23.clone();
    let mut quad = [mat_zero(), mat_zero(), mat_zero()];
    sym_set(&mut quad[0], 0, 1, c.a12.clone());
    sym_set(&mut quad[0], 0, 2, int(1));
    sym_set(&mut quad[1], 0, 0, c.b11.clone());
    sym_set(&mut quad[1], 1, 1, c.b22.clone());
    sym_set(&mut quad[2], 0, 0, c.c11.clone());
    sym_set(&mut quad[2], 1, 1, c.c22.clone());
    sym_set(&mut quad[2], 1, 2, c.c23.clone());
    let mut alpha_lin = mat_zero();
    alpha_lin[0][1] = c.da2.clone();
    alpha_lin[1][0] = c.db1.clone();
    alpha_lin[2][0] = c.dc1.clone();
    let frame = if b % 2 == 1 {
        Frame { e_u: Direction::axis(2), e_v: Direction::axis(1), e_w: Direction::axis(0), sigma_v: -1, sigma_w: 1 }
    } else {
        Frame { e_u: Direction::axis(2), e_v: Direction::axis(0), e_w: Direction::axis(1), sigma_v: 1, sigma_w: -1 }
    };
    Ok(PerturbedSystem {
        name: SystemName::Generic,
        n: b + 1,
        mu0: Rational::zero(),
        a0,
        a1,
        quad,
        alpha_lin,
        alpha_quad: [mat_zero(), mat_zero(), mat_zero()],
        sigma: [1, -1, -1],
        frame,
        designated: 0,
        conventions: Conventions { half_line_factor: int(2), tracked_component: 1, return_sign: 1 },
    })
}

/// Data of the scalar reduction `L_beta z_d = F_d' + sum_j a_j F_j`.
#[derive(Clone, Debug)]
struct Reduction {
    d: usize,
    a: [Rational; 3],
    beta: usize,
}

impl PerturbedSystem {
    pub fn build(name: SystemName, n: usize) -> Self {
        match name {
            SystemName::FoldedNode => build_folded_node(n),
            SystemName::FalknerSkan => build_falkner_skan(n),
            SystemName::Nose => build_nose(n),
            SystemName::Generic => panic!("generic systems are built from coefficients"),
        }
    }

    pub fn parity_of_n(&self) -> &'static str {
        if self.n.is_multiple_of(2) {
            "even"
        } else {
            "odd"
        }
    }

    /// Rational resonance parameter `-(1 + kappa)`; a non-negative integer exactly when the
    /// variational equation has an algebraic solution.
    pub fn beta_rational(&self) -> Result<Rational> {
        let d = self.designated;
        for j in 0..3 {
            let expect = if j == d { Rational::one() } else { Rational::zero() };
            if self.a1[d][j] != expect {
                return Err(MelnikovError::NoAlgebraicSolution(format!("row {} of A1 is not e_{}", d, d)));
            }
        }
        if !self.a0[d][d].is_zero() {
            return Err(MelnikovError::NoAlgebraicSolution("A0 has a diagonal designated entry".into()));
        }
        let mut kappa = Rational::zero();
        for l in 0..3 {
            let mut acc = Rational::zero();
            for j in 0..3 {
                if j == d || self.a0[d][j].is_zero() {
                    continue;
                }
                if (0..3).any(|m| !self.a1[j][m].is_zero()) {
                    return Err(MelnikovError::NoAlgebraicSolution(format!("row {} depends on t", j)));
                }
                acc += &self.a0[d][j] * &self.a0[j][l];
            }
            if l == d {
                kappa = acc;
            } else if !acc.is_zero() {
                return Err(MelnikovError::NoAlgebraicSolution("no scalar Weber reduction".into()));
            }
        }
        Ok(-(kappa + int(1)))
    }

    fn reduction(&self) -> Result<Reduction> {
        let beta = self.beta_rational()?;
        if !algebraic_solution_exists(&beta) {
            return Err(MelnikovError::NotResonant(beta.to_string()));
        }
        let beta: usize = beta.to_integer().try_into().unwrap();
        let d = self.designated;
        let a = std::array::from_fn(|j| if j == d { Rational::zero() } else { self.a0[d][j].clone() });
        Ok(Reduction { d, a, beta })
    }

    pub fn beta(&self) -> Result<usize> {
        Ok(self.reduction()?.beta)
    }

    /// Row `i` of `A(t) z`.
    fn apply_a_row(&self, i: usize, z: &Series3) -> Result<HermiteSeries> {
        let mut acc = HermiteSeries::zero();
        for l in 0..3 {
            if !self.a0[i][l].is_zero() {
                acc = acc.add(&z[l].scale_rational(&self.a0[i][l]))?;
            }
            if !self.a1[i][l].is_zero() {
                acc = acc.add(&z[l].mul_t()?.scale_rational(&self.a1[i][l]))?;
            }
        }
        Ok(acc)
    }

    pub fn apply_a(&self, z: &Series3) -> Result<Series3> {
        Ok([self.apply_a_row(0, z)?, self.apply_a_row(1, z)?, self.apply_a_row(2, z)?])
    }

    /// Row `i` of `A(t)^T p`.
    fn apply_at_row(&self, i: usize, p: &Series3) -> Result<HermiteSeries> {
        let mut acc = HermiteSeries::zero();
        for j in 0..3 {
            if !self.a0[j][i].is_zero() {
                acc = acc.add(&p[j].scale_rational(&self.a0[j][i]))?;
            }
            if !self.a1[j][i].is_zero() {
                acc = acc.add(&p[j].mul_t()?.scale_rational(&self.a1[j][i]))?;
            }
        }
        Ok(acc)
    }

    /// `z' - A(t) z - forcing`.
    pub fn variational_residual(&self, z: &Series3, forcing: &Series3) -> Result<Series3> {
        let az = self.apply_a(z)?;
        let mut out = series3_zero();
        for i in 0..3 {
            out[i] = z[i].derivative().sub(&az[i])?.sub(&forcing[i])?;
        }
        Ok(out)
    }

    /// Polynomial factor of `psi' + A(t)^T psi` for `psi = e^{-t^2/2} p`, i.e. `p' - t p + A^T p`.
    pub fn adjoint_residual(&self, adj: &AdjointSolution) -> Result<Series3> {
        let p = &adj.psi;
        let mut out = series3_zero();
        for i in 0..3 {
            out[i] = p[i].derivative().sub(&p[i].mul_t()?)?.add(&self.apply_at_row(i, p)?)?;
        }
        Ok(out)
    }

    /// Solves `z' = A(t) z + forcing` given the designated component `zd`, recovering the other
    /// components by integration (value 0 at 0) or from the designated row.
    pub(crate) fn complete_solution(&self, forcing: &Series3, zd: HermiteSeries) -> Result<Series3> {
        let red = self.reduction()?;
        let d = red.d;
        let s = zd.derivative().sub(&zd.mul_t()?)?.sub(&forcing[d])?;
        let coupled: Vec<usize> = (0..3).filter(|&j| !red.a[j].is_zero()).collect();
        let recovered =
            *coupled.last().ok_or_else(|| MelnikovError::NoAlgebraicSolution("decoupled designated row".into()))?;
        let mut z = series3_zero();
        let mut known = [false; 3];
        z[d] = zd;
        known[d] = true;
        while known.iter().any(|k| !k) {
            if !known[recovered] && coupled.iter().all(|&j| j == recovered || known[j]) {
                let mut rest = s.clone();
                for &j in &coupled {
                    if j != recovered {
                        rest = rest.sub(&z[j].scale_rational(&red.a[j]))?;
                    }
                }
                z[recovered] = rest.scale_rational(&red.a[recovered].recip());
                known[recovered] = true;
                continue;
            }
            let next = (0..3).find(|&j| {
                !known[j]
                    && j != recovered
                    && (0..3).all(|l| known[l] || (self.a0[j][l].is_zero() && self.a1[j][l].is_zero()))
            });
            let j = next.ok_or_else(|| MelnikovError::NoAlgebraicSolution("cyclic component dependencies".into()))?;
            let rhs = self.apply_a_row(j, &z)?.add(&forcing[j])?;
            z[j] = rhs.antiderivative(&RadicalValue::zero())?;
            known[j] = true;
        }
        let res = self.variational_residual(&z, forcing)?;
        if res.iter().any(|r| !r.is_zero()) {
            return Err(MelnikovError::NoAlgebraicSolution("reduction left a nonzero residual".into()));
        }
        Ok(z)
    }

    /// Rational coordinates of `x` in the basis of frame directions `(u, v, w)`.
    pub fn frame_coordinates(&self, x: &[RadicalValue; 3]) -> Result<[RadicalValue; 3]> {
        let cols = [&self.frame.e_u.dir, &self.frame.e_v.dir, &self.frame.e_w.dir];
        let m: Mat3 = std::array::from_fn(|i| std::array::from_fn(|j| cols[j][i].clone()));
        let inv = mat_inverse(&m).ok_or_else(|| MelnikovError::NoAlgebraicSolution("degenerate frame".into()))?;
        let mut out: [RadicalValue; 3] = std::array::from_fn(|_| RadicalValue::zero());
        for (i, o) in out.iter_mut().enumerate() {
            for (j, xj) in x.iter().enumerate() {
                *o = o.radical_add(&xj.scale(&inv[i][j]))?;
            }
        }
        Ok(out)
    }

    fn check_constant_solution(&self, dir: &[Rational; 3]) -> Result<()> {
        for i in 0..3 {
            let mut c0 = Rational::zero();
            let mut c1 = Rational::zero();
            for l in 0..3 {
                c0 += &self.a0[i][l] * &dir[l];
                c1 += &self.a1[i][l] * &dir[l];
            }
            if !c0.is_zero() || !c1.is_zero() {
                return Err(MelnikovError::NoAlgebraicSolution("e_u is not a constant solution".into()));
            }
        }
        Ok(())
    }

    /// The homogeneous algebraic solution with designated component `H_beta`.
    fn raw_homogeneous(&self) -> Result<Series3> {
        let red = self.reduction()?;
        self.complete_solution(&series3_zero(), HermiteSeries::basis(red.beta))
    }

    /// Adds `c * dir` as a constant to each component.
    pub(crate) fn add_constant(z: &Series3, c: &RadicalValue, dir: &[Rational; 3]) -> Result<Series3> {
        let mut out = z.clone();
        for i in 0..3 {
            out[i] = out[i].add(&HermiteSeries::constant(c.scale(&dir[i])))?;
        }
        Ok(out)
    }

    /// Algebraic solution of `z' = A(t) z` with `z(0) = e_v`.
    pub fn first_variation(&self) -> Result<VariationTriple> {
        let zh = self.raw_homogeneous()?;
        let u = &self.frame.e_u.dir;
        self.check_constant_solution(u)?;
        let x0 = VariationTriple { z: zh.clone() }.value_at_zero()?;
        let c = self.frame_coordinates(&x0)?;
        if !c[2].is_zero() {
            return Err(MelnikovError::NoAlgebraicSolution("initial value has an e_w component".into()));
        }
        if c[1].is_zero() {
            return Err(MelnikovError::NoAlgebraicSolution("initial value has no e_v component".into()));
        }
        let shifted = Self::add_constant(&zh, &-c[0].clone(), u)?;
        let k0 = self.frame.e_v.scale.div(&c[1]);
        let z: Series3 = std::array::from_fn(|i| shifted[i].scale(&k0));
        let out = VariationTriple { z };
        if out.value_at_zero()? != self.frame.e_v.vector() {
            return Err(MelnikovError::NoAlgebraicSolution("normalization failed".into()));
        }
        Ok(out)
    }

    /// Decaying solution of `psi' = -A(t)^T psi` with `psi(0) = e_w`.
    pub fn adjoint_solution(&self) -> Result<AdjointSolution> {
        let red = self.reduction().map_err(|e| MelnikovError::NoDecayingSolution(e.to_string()))?;
        let d = red.d;
        let mut p = series3_zero();
        let mut known = [false; 3];
        p[d] = HermiteSeries::basis(red.beta + 1);
        known[d] = true;
        while known.iter().any(|k| !k) {
            let next = (0..3).find(|&i| {
                !known[i] && (0..3).all(|j| known[j] || (self.a0[j][i].is_zero() && self.a1[j][i].is_zero()))
            });
            let i = next.ok_or_else(|| MelnikovError::NoDecayingSolution("cyclic component dependencies".into()))?;
            // (d/dt - t) p_i = -(A^T p)_i
            let rhs = self.apply_at_row(i, &p)?.neg();
            p[i] = invert_d_minus_t(&rhs)?;
            known[i] = true;
        }
        let mut adj = AdjointSolution { psi: p };
        if self.adjoint_residual(&adj)?.iter().any(|r| !r.is_zero()) {
            return Err(MelnikovError::NoDecayingSolution("adjoint residual is nonzero".into()));
        }
        let p0 = VariationTriple { z: adj.psi.clone() }.value_at_zero()?;
        let ew = self.frame.e_w.vector();
        let i =
            (0..3).find(|&i| !p0[i].is_zero()).ok_or_else(|| MelnikovError::NoDecayingSolution("psi(0) = 0".into()))?;
        let lambda = ew[i].div(&p0[i]);
        adj.psi = std::array::from_fn(|j| adj.psi[j].scale(&lambda));
        let p0 = VariationTriple { z: adj.psi.clone() }.value_at_zero()?;
        if p0 != ew {
            return Err(MelnikovError::NoDecayingSolution("psi(0) is not parallel to e_w".into()));
        }
        Ok(adj)
    }

    /// `sigma (A0 - t A1) sigma + (A0 + t A1)`, coefficientwise; zero for a reversible system.
    pub fn reversibility_defect(&self) -> (Mat3, Mat3) {
        let s = self.sigma;
        let d0 = std::array::from_fn(|i| {
            std::array::from_fn(|j| &self.a0[i][j] * int((s[i] * s[j]) as i64) + &self.a0[i][j])
        });
        let d1 = std::array::from_fn(|i| {
            std::array::from_fn(|j| -(&self.a1[i][j] * int((s[i] * s[j]) as i64)) + &self.a1[i][j])
        });
        (d0, d1)
    }

    /// Whether `sigma quad(sigma z, sigma z) = -quad(z, z)` holds for all `z`.
    pub fn quad_is_reversible(&self) -> bool {
        let s = self.sigma;
        (0..3).all(|i| {
            (0..3).all(|a| {
                (0..3).all(|b| {
                    let q = &self.quad[i][a][b];
                    let flipped = q * int((s[i] * s[a] * s[b]) as i64);
                    (flipped + q).is_zero()
                })
            })
        })
    }

    /// `quad_i(x, y) = x^T quad[i] y`, componentwise on series.
    pub fn quad_apply(q: &[Mat3; 3], x: &Series3, y: &Series3) -> Result<Series3> {
        let mut out = series3_zero();
        for i in 0..3 {
            for a in 0..3 {
                for b in 0..3 {
                    if q[i][a][b].is_zero() {
                        continue;
                    }
                    out[i] = out[i].add(&x[a].product(&y[b])?.scale_rational(&q[i][a][b]))?;
                }
            }
        }
        Ok(out)
    }

    pub fn alpha_lin_apply(&self, z: &Series3) -> Result<Series3> {
        let mut out = series3_zero();
        for i in 0..3 {
            for l in 0..3 {
                if !self.alpha_lin[i][l].is_zero() {
                    out[i] = out[i].add(&z[l].scale_rational(&self.alpha_lin[i][l]))?;
                }
            }
        }
        Ok(out)
    }
}

/// Inverse of `d/dt - t` on polynomials: `(d/dt - t) H_l = -(sqrt 2 / 2) H_{l+1}`.
fn invert_d_minus_t(rhs: &HermiteSeries) -> Result<HermiteSeries> {
    if !rhs.coeff(0).is_zero() {
        return Err(MelnikovError::NoDecayingSolution("constant term in adjoint forcing".into()));
    }
    let m = -RadicalValue::sqrt(2);
    let mut out = HermiteSeries::zero();
    for (l, c) in rhs.terms() {
        out.add_term(l - 1, &c.radical_mul(&m))?;
    }
    Ok(out)
}

/// `sum_i psi_i z_i` as a series (the Gaussian weight omitted).
pub fn pairing(psi: &Series3, z: &Series3) -> Result<HermiteSeries> {
    let mut acc = HermiteSeries::zero();
    for i in 0..3 {
        acc = acc.add(&psi[i].product(&z[i])?)?;
    }
    Ok(acc)
}

pub fn mat_inverse(m: &Mat3) -> Option<Mat3> {
    let det = &m[0][0] * (&m[1][1] * &m[2][2] - &m[1][2] * &m[2][1])
        - &m[0][1] * (&m[1][0] * &m[2][2] - &m[1][2] * &m[2][0])
        + &m[0][2] * (&m[1][0] * &m[2][1] - &m[1][1] * &m[2][0]);
    if det.is_zero() {
        return None;
    }
    let cof = |i: usize, j: usize| -> Rational {
        let r: Vec<usize> = (0..3).filter(|&x| x != i).collect();
        let c: Vec<usize> = (0..3).filter(|&x| x != j).collect();
        let minor = &m[r[0]][c[0]] * &m[r[1]][c[1]] - &m[r[0]][c[1]] * &m[r[1]][c[0]];
        if (i + j).is_multiple_of(2) {
            minor
        } else {
            -minor
        }
    };
    Some(std::array::from_fn(|i| std::array::from_fn(|j| cof(j, i) / &det)))
}

/// Sign of the leading (highest-degree) coefficient of a series; `H_n` has a positive leading
/// monomial coefficient.
pub fn leading_sign(s: &HermiteSeries) -> i8 {
    match s.degree() {
        Some(d) => s.coeff(d).signum(),
        None => 0,
    }
}

pub fn is_positive(q: &Rational) -> bool {
    q.is_positive()
}

pub(crate) mod rat_serde {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&q.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

mod rat3_serde {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational; 3], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|q| q.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[Rational; 3], D::Error> {
        let v: Vec<String> = Vec::deserialize(d)?;
        if v.len() != 3 {
            return Err(serde::de::Error::custom("expected 3 entries"));
        }
        let p: Vec<Rational> =
            v.iter().map(|s| s.parse()).collect::<Result<_, _>>().map_err(serde::de::Error::custom)?;
        Ok([p[0].clone(), p[1].clone(), p[2].clone()])
    }
}

mod mat_serde {
    use super::{Mat3, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &Mat3, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = m.iter().map(|r| r.iter().map(|q| q.to_string()).collect()).collect();
        s.collect_seq(rows)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat3, D::Error> {
        let rows: Vec<Vec<String>> = Vec::deserialize(d)?;
        parse(&rows).map_err(serde::de::Error::custom)
    }

    pub fn parse(rows: &[Vec<String>]) -> Result<Mat3, String> {
        if rows.len() != 3 || rows.iter().any(|r| r.len() != 3) {
            return Err("expected a 3x3 matrix".into());
        }
        let mut m = super::mat_zero();
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = rows[i][j].parse::<Rational>().map_err(|e| e.to_string())?;
            }
        }
        Ok(m)
    }
}

mod mats_serde {
    use super::Mat3;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &[Mat3; 3], s: S) -> Result<S::Ok, S::Error> {
        let all: Vec<Vec<Vec<String>>> =
            m.iter().map(|mm| mm.iter().map(|r| r.iter().map(|q| q.to_string()).collect()).collect()).collect();
        s.collect_seq(all)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[Mat3; 3], D::Error> {
        let all: Vec<Vec<Vec<String>>> = Vec::deserialize(d)?;
        if all.len() != 3 {
            return Err(serde::de::Error::custom("expected 3 matrices"));
        }
        let p: Vec<Mat3> = all
            .iter()
            .map(|r| super::mat_serde::parse(r))
            .collect::<Result<_, _>>()
            .map_err(serde::de::Error::custom)?;
        Ok([p[0].clone(), p[1].clone(), p[2].clone()])
    }
}

pub(crate) mod ratvec_serde {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|q| q.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let v: Vec<String> = Vec::deserialize(d)?;
        v.iter().map(|s| s.parse()).collect::<Result<_, _>>().map_err(serde::de::Error::custom)
    }
}

pub(crate) mod opt_ratvec_serde {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<Rational>>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(|v| v.iter().map(|q| q.to_string()).collect::<Vec<_>>()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<Rational>>, D::Error> {
        let v: Option<Vec<String>> = Option::deserialize(d)?;
        v.map(|v| v.iter().map(|s| s.parse()).collect::<Result<Vec<Rational>, _>>())
            .transpose()
            .map_err(serde::de::Error::custom)
    }
}
