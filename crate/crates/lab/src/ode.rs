//! Dormand-Prince 5(4) with cubic Hermite dense output.

use crate::error::{LabError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rel: 1e-12, abs: 1e-12 }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// One accepted step with the data for cubic Hermite interpolation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    pub f0: [f64; N],
    pub f1: [f64; N],
}

impl<const N: usize> Step<N> {
    pub fn interpolate(&self, t: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        let th = (t - self.t0) / h;
        let h00 = (1.0 + 2.0 * th) * (1.0 - th) * (1.0 - th);
        let h10 = th * (1.0 - th) * (1.0 - th);
        let h01 = th * th * (3.0 - 2.0 * th);
        let h11 = th * th * (th - 1.0);
        std::array::from_fn(|i| h00 * self.y0[i] + h10 * h * self.f0[i] + h01 * self.y1[i] + h11 * h * self.f1[i])
    }
}

/// A single Dormand-Prince step of size `h` from `(t, y)` with `f(t, y) = fy`.
/// Returns the fifth-order solution, its derivative, and the embedded error vector.
pub fn dopri_step<const N: usize, F: Fn(f64, &[f64; N]) -> [f64; N]>(
    f: &F,
    t: f64,
    y: &[f64; N],
    fy: &[f64; N],
    h: f64,
) -> ([f64; N], [f64; N], [f64; N]) {
    let mut k = [[0.0; N]; 7];
    k[0] = *fy;
    for s in 1..7 {
        let ys: [f64; N] = std::array::from_fn(|i| y[i] + h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>());
        k[s] = f(t + C[s] * h, &ys);
    }
    let y5: [f64; N] = std::array::from_fn(|i| y[i] + h * (0..7).map(|j| B5[j] * k[j][i]).sum::<f64>());
    let err: [f64; N] = std::array::from_fn(|i| h * (0..7).map(|j| (B5[j] - B4[j]) * k[j][i]).sum::<f64>());
    (y5, k[6], err)
}

/// Adaptive stepper; `h` carries the integration direction.
pub struct DormandPrince<const N: usize, F: Fn(f64, &[f64; N]) -> [f64; N]> {
    pub f: F,
    pub t: f64,
    pub y: [f64; N],
    pub fy: [f64; N],
    pub h: f64,
    pub h_max: f64,
    pub tol: Tolerances,
}

impl<const N: usize, F: Fn(f64, &[f64; N]) -> [f64; N]> DormandPrince<N, F> {
    pub fn new(f: F, t0: f64, y0: [f64; N], h0: f64, h_max: f64, tol: Tolerances) -> Self {
        let fy = f(t0, &y0);
        DormandPrince { f, t: t0, y: y0, fy, h: h0, h_max, tol }
    }

    fn error_norm(&self, y1: &[f64; N], err: &[f64; N]) -> f64 {
        let mut acc = 0.0;
        for i in 0..N {
            let sc = self.tol.abs + self.tol.rel * self.y[i].abs().max(y1[i].abs());
            acc += (err[i] / sc).powi(2);
        }
        (acc / N as f64).sqrt()
    }

    pub fn step(&mut self) -> Result<Step<N>> {
        loop {
            let h = self.h;
            if h.abs() < 1e-14 * self.t.abs().max(1.0) {
                return Err(LabError::StepSizeUnderflow(self.t));
            }
            let (y1, f1, err) = dopri_step(&self.f, self.t, &self.y, &self.fy, h);
            let e = self.error_norm(&y1, &err);
            let finite = y1.iter().all(|v| v.is_finite());
            let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
            if finite && e <= 1.0 {
                let step = Step { t0: self.t, t1: self.t + h, y0: self.y, y1, f0: self.fy, f1 };
                self.t += h;
                self.y = y1;
                self.fy = f1;
                self.h = (h * factor).clamp(-self.h_max, self.h_max);
                return Ok(step);
            }
            self.h = if finite { h * factor.min(1.0) } else { h * 0.2 };
        }
    }

    /// Restart from a new point, keeping the step size.
    pub fn reset(&mut self, t: f64, y: [f64; N]) {
        self.t = t;
        self.y = y;
        self.fy = (self.f)(t, &y);
    }
}
