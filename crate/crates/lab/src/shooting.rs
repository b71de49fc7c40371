//! Symmetric periodic orbits by shooting between fix-point sets, twist counting, and seeding.
//!
//! Both models are shot backward in time from `(0, y1, 0)`, which is fixed by the reversor
//! `(x, y, z) -> (-x, y, -z)`. Falkner-Skan: the residual is `z` at the next `x = 0` crossing.
//! Nose: the residual is `y` at the second `z = 0` crossing, the target set being the `x`-axis.

use serde::{Deserialize, Serialize};

use melnikov_core::systems::{build_falkner_skan, build_nose};
use melnikov_core::{branch_side, BranchSide};

use crate::atlas::{
    integrate, ChartAtlas, Event, EventKind, IntegrationOptions, Model, OrbitTrace, Plane, Sample, WatchedPlane,
};
use crate::error::{LabError, Result};
use crate::ode::Tolerances;

/// Reversor fixing the shooting start set `{(0, y, 0)}` in both models.
pub const START_REVERSOR: [f64; 3] = [-1.0, 1.0, -1.0];
pub const DEFAULT_TWIST_WINDOW: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct ShootingOptions {
    pub tol: Tolerances,
    pub handoff_threshold: f64,
    pub max_arc: f64,
    pub twist_window: f64,
    pub max_iterations: usize,
    /// Shooting stops once `|residual|` is at or below this value.
    pub residual_floor: f64,
    pub dense_samples: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            tol: Tolerances::default(),
            handoff_threshold: crate::atlas::DEFAULT_HANDOFF,
            max_arc: 200.0,
            twist_window: DEFAULT_TWIST_WINDOW,
            max_iterations: 200,
            residual_floor: 1e-13,
            dense_samples: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwistReport {
    /// Nearest half-integer to `raw`.
    pub twist: f64,
    /// Rotation of `(y + 1, z)` between its first and last axis crossing in the window, in turns.
    pub raw: f64,
    /// Rotation over the whole window segment, in turns, including partial turns at its ends.
    pub window_rotation: f64,
    pub window: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbitResult {
    pub model: Model,
    pub mu: f64,
    pub shooting_parameter: f64,
    pub closure_residual: f64,
    pub symmetry_residual: f64,
    pub period: f64,
    pub twist_count: Option<f64>,
    pub twist: Option<TwistReport>,
    /// Fix-point-set intersections in the order visited.
    pub crossings: Vec<[f64; 3]>,
    /// `|residual|` at every root-finding step.
    pub residual_history: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct PeriodicOrbit {
    pub result: PeriodicOrbitResult,
    /// Shot segment, backward in time from the start point to the first target fix-point set.
    pub half_orbit: OrbitTrace,
    /// One full period assembled from the half orbit by the reversors, sampled by time.
    pub closed: OrbitTrace,
    pub atlas: ChartAtlas,
}

fn atlas_for(model: Model, mu: f64, opts: &ShootingOptions) -> ChartAtlas {
    ChartAtlas::with_threshold(model, mu, opts.handoff_threshold)
}

fn start_point(atlas: &ChartAtlas, y1: f64) -> (crate::atlas::ChartId, [f64; 3]) {
    let p = [0.0, y1, 0.0];
    let id = atlas.chart_for_affine(&p);
    (id, atlas.from_affine(id, &p).expect("start point lies in its chart"))
}

fn stop_plane(model: Model) -> (WatchedPlane, usize) {
    match model {
        Model::FalknerSkan => (WatchedPlane { label: "x=0".into(), plane: Plane::new(0, 0.0) }, 0),
        Model::Nose => (WatchedPlane { label: "z=0".into(), plane: Plane::new(2, 0.0) }, 1),
        Model::FoldedNodeScaled => unreachable!("no periodic orbits are shot for the folded node"),
    }
}

fn half_orbit_options(model: Model, opts: &ShootingOptions, dense: bool) -> IntegrationOptions {
    let (wp, skip) = stop_plane(model);
    let label = wp.label.clone();
    IntegrationOptions {
        tol: opts.tol,
        direction: -1.0,
        max_arc: opts.max_arc,
        dense_samples: if dense { opts.dense_samples } else { 0 },
        watch: vec![wp],
        stop: Some((label, skip)),
        ..IntegrationOptions::default()
    }
}

/// Signed shooting residual for the start `(0, y1, 0)`.
pub fn shooting_residual(model: Model, mu: f64, y1: f64, opts: &ShootingOptions) -> Result<f64> {
    let atlas = atlas_for(model, mu, opts);
    let trace = integrate(&atlas, start_point(&atlas, y1), &half_orbit_options(model, opts, false))?;
    let last = trace.last();
    let p = atlas
        .to_affine(last.chart, &last.state)
        .ok_or_else(|| LabError::NonConvergent("stop event at infinity".into()))?;
    Ok(match model {
        Model::FalknerSkan => p[2],
        _ => p[1],
    })
}

/// Checks the branch-side verdict for the resonance nearest to `mu`.
pub fn check_periodic_side(model: Model, mu: f64) -> Result<()> {
    let (res, sys) = match model {
        Model::FalknerSkan => {
            let k = mu.round().max(1.0);
            (k, build_falkner_skan(2 * k as usize))
        }
        Model::Nose => {
            let r = mu.round().max(2.0);
            (r, build_nose(2 * (r as usize - 1)))
        }
        Model::FoldedNodeScaled => {
            return Err(LabError::PreconditionViolation("periodic orbits are not defined for the folded node".into()))
        }
    };
    let alpha = mu - res;
    let side = branch_side(&sys)?;
    let want = match side {
        BranchSide::SecondaryExistsForAlphaPositive => 1.0,
        BranchSide::SecondaryExistsForAlphaNegative => -1.0,
    };
    if alpha == 0.0 || alpha.signum() != want {
        let rel = if want > 0.0 { "above" } else { "below" };
        return Err(LabError::NonPeriodicSide {
            mu,
            reason: format!("periodic orbits bifurcate from the resonance mu = {res} only for mu {rel} it"),
        });
    }
    Ok(())
}

/// Scans the shooting parameter and returns the bracket used by default.
///
/// Falkner-Skan: `1 - y1` on a geometric grid, root nearest `y1 = 1`.
/// Nose: `y1` on a geometric grid in `[1, 150]`, largest root.
pub fn default_bracket(model: Model, mu: f64, opts: &ShootingOptions) -> Result<(f64, f64)> {
    let grid: Vec<f64> = match model {
        Model::FalknerSkan => (0..=80).map(|i| 1.0 - 10f64.powf(-8.0 + 7.7 * i as f64 / 80.0)).collect(),
        Model::Nose => (0..=120).rev().map(|i| 150f64.powf(i as f64 / 120.0)).collect(),
        Model::FoldedNodeScaled => {
            return Err(LabError::PreconditionViolation("no shooting for the folded node".into()))
        }
    };
    let mut prev: Option<(f64, f64)> = None;
    for &p in &grid {
        let r = shooting_residual(model, mu, p, opts).ok().filter(|r| r.is_finite());
        if let (Some((q, rq)), Some(r)) = (prev, r) {
            if rq * r <= 0.0 {
                return Ok((q.min(p), q.max(p)));
            }
        }
        prev = r.map(|r| (p, r));
    }
    Err(LabError::NoRoot(format!("no sign change of the shooting residual for mu = {mu}")))
}

pub fn find_symmetric_periodic_orbit(
    model: Model,
    mu: f64,
    bracket: (f64, f64),
    opts: &ShootingOptions,
) -> Result<PeriodicOrbit> {
    check_periodic_side(model, mu)?;
    let (mut a, mut b) = bracket;
    let res = |p: f64| shooting_residual(model, mu, p, opts);
    let (mut ra, mut rb) = (res(a)?, res(b)?);
    if ra * rb > 0.0 {
        return Err(LabError::NoRoot(format!("residuals {ra:e} and {rb:e} at ({a}, {b}) have the same sign")));
    }
    // Illinois regula falsi: secant steps kept inside the bracket, stale endpoint value halved.
    let mut history = Vec::new();
    for _ in 0..opts.max_iterations {
        if ra.abs().min(rb.abs()) <= opts.residual_floor {
            break;
        }
        let mut m = (a * rb - b * ra) / (rb - ra);
        if !(m > a.min(b) && m < a.max(b)) {
            m = 0.5 * (a + b);
        }
        if m == a || m == b {
            break;
        }
        let rm = res(m)?;
        history.push(rm.abs());
        if rm * rb < 0.0 {
            a = b;
            ra = rb;
        } else {
            ra *= 0.5;
        }
        b = m;
        rb = rm;
    }
    let y1 = if res(a)?.abs() <= res(b)?.abs() { a } else { b };
    assemble(model, mu, y1, history, opts)
}

/// Reversors whose fix-point sets the half orbit ends on, applied in turn to close the orbit.
fn closing_reversors(model: Model) -> Vec<[f64; 3]> {
    match model {
        Model::FalknerSkan => vec![START_REVERSOR],
        _ => vec![[1.0, -1.0, -1.0], START_REVERSOR],
    }
}

fn apply(r: &[f64; 3], p: &[f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| r[i] * p[i])
}

fn assemble(model: Model, mu: f64, y1: f64, history: Vec<f64>, opts: &ShootingOptions) -> Result<PeriodicOrbit> {
    let atlas = atlas_for(model, mu, opts);
    let p0 = [0.0, y1, 0.0];
    let half = integrate(&atlas, start_point(&atlas, y1), &half_orbit_options(model, opts, true))?;
    let half_pts = half.points(&atlas);
    let (t_end, p_end) = *half_pts.last().ok_or_else(|| LabError::NonConvergent("empty trace".into()))?;
    if half_pts.len() != half.samples.len() {
        return Err(LabError::NonConvergent("half orbit passes through infinity".into()));
    }
    let reversors = closing_reversors(model);
    let r_end = reversors[0];

    // the junction point must lie on Fix(r_end); its mirror gap closes the orbit
    let closure = dist(&p_end, &apply(&r_end, &p_end));
    // local reversibility at the junction: r_end phi_{-d}(p_end) = phi_{d}(p_end)
    let d = (0.25 * -t_end).min(0.5);
    let local_opts =
        IntegrationOptions { tol: opts.tol, direction: -1.0, end_s: Some(-d), ..IntegrationOptions::default() };
    let id = atlas.chart_for_affine(&p_end);
    let st = atlas.from_affine(id, &p_end).ok_or_else(|| LabError::NonConvergent("junction not in a chart".into()))?;
    let ahead = integrate(&atlas, (id, st), &local_opts)?;
    let q = ahead.points(&atlas).last().map(|x| x.1).ok_or_else(|| LabError::NonConvergent("empty arc".into()))?;
    let behind =
        point_at_time(&half, &atlas, t_end + d).ok_or_else(|| LabError::NonConvergent("no trace point".into()))?;
    let symmetry = dist(&apply(&r_end, &q), &behind) / behind.iter().fold(1.0f64, |m, v| m.max(v.abs()));

    let mut pts = half_pts;
    let mut crossings = vec![p0, p_end];
    for r in &reversors {
        let (te, _) = *pts.last().unwrap();
        let mirrored: Vec<(f64, [f64; 3])> =
            pts.iter().rev().skip(1).map(|(t, p)| (2.0 * te - t, apply(r, p))).collect();
        pts.extend(mirrored);
        if pts.len() > 1 {
            crossings.push(pts.last().unwrap().1);
        }
    }
    crossings.pop();
    if model == Model::Nose {
        // order visited: (0, y1, 0), (x0, 0, 0), (0, -y1, 0), (-x0, 0, 0)
        crossings.truncate(3);
        crossings.push(apply(&START_REVERSOR, &p_end));
    }
    let period = -pts.last().unwrap().0;
    let closed = closed_trace(&atlas, &pts, &crossings);
    let twist = if model == Model::FalknerSkan { Some(twist_count(&closed, &atlas, opts.twist_window)?) } else { None };
    if closure > 1e-6 || symmetry > 1e-6 {
        return Err(LabError::NonConvergent(format!("closure {closure:e}, symmetry {symmetry:e}")));
    }
    let result = PeriodicOrbitResult {
        model,
        mu,
        shooting_parameter: y1,
        closure_residual: closure,
        symmetry_residual: symmetry,
        period,
        twist_count: twist.as_ref().map(|t| t.twist),
        twist,
        crossings,
        residual_history: history,
    };
    Ok(PeriodicOrbit { result, half_orbit: half, closed, atlas })
}

/// Closed orbit as a trace parametrized by time, with the fix-point-set hits as events.
fn closed_trace(atlas: &ChartAtlas, pts: &[(f64, [f64; 3])], crossings: &[[f64; 3]]) -> OrbitTrace {
    let samples = pts
        .iter()
        .map(|(t, p)| {
            let id = atlas.chart_for_affine(p);
            Sample { s: *t, t: *t, chart: id, state: atlas.from_affine(id, p).unwrap_or(*p) }
        })
        .collect();
    let events = crossings
        .iter()
        .map(|c| {
            let (t, _) = pts.iter().min_by(|a, b| dist(&a.1, c).partial_cmp(&dist(&b.1, c)).unwrap()).unwrap();
            let id = atlas.chart_for_affine(c);
            Event {
                kind: EventKind::SymmetryHit,
                label: "fix-point set".into(),
                s: *t,
                t: *t,
                chart: id,
                state: atlas.from_affine(id, c).unwrap_or(*c),
                point: Some(*c),
                residual: 0.0,
            }
        })
        .collect();
    OrbitTrace { samples, events, steps: Vec::new() }
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
}

/// Blown-down point at physical time `t` on the trace, from the dense output.
pub fn point_at_time(trace: &OrbitTrace, atlas: &ChartAtlas, t: f64) -> Option<[f64; 3]> {
    let (id, step) = trace.steps.iter().find(|(_, s)| {
        let (lo, hi) = if s.y0[3] <= s.y1[3] { (s.y0[3], s.y1[3]) } else { (s.y1[3], s.y0[3]) };
        lo <= t && t <= hi
    })?;
    let (mut a, mut b) = (step.t0, step.t1);
    let increasing = step.y1[3] >= step.y0[3];
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if (step.interpolate(m)[3] < t) == increasing {
            a = m;
        } else {
            b = m;
        }
    }
    let v = step.interpolate(0.5 * (a + b));
    atlas.to_affine(*id, &[v[0], v[1], v[2]])
}

/// Twist of a closed symmetric Falkner-Skan orbit around the axis `y = -1, z = 0`.
///
/// Uses the contiguous window segment `|y + 1| < window` closest to the axis. The rotation of
/// `(y + 1, z)` is measured between its first and last crossing of the coordinate axes, so partial
/// turns at the window edges are excluded; they are reported in `window_rotation`.
pub fn twist_count(trace: &OrbitTrace, atlas: &ChartAtlas, window: f64) -> Result<TwistReport> {
    let pts: Vec<[f64; 3]> = trace.points(atlas).into_iter().map(|(_, p)| p).collect();
    let inside: Vec<bool> = pts.iter().map(|p| (p[1] + 1.0).abs() < window).collect();
    let center = (0..pts.len())
        .filter(|&i| inside[i])
        .min_by(|&i, &j| {
            let d = |p: &[f64; 3]| (p[1] + 1.0).powi(2) + p[2].powi(2);
            d(&pts[i]).partial_cmp(&d(&pts[j])).unwrap()
        })
        .ok_or(LabError::WindowEmpty)?;
    let mut lo = center;
    while lo > 0 && inside[lo - 1] {
        lo -= 1;
    }
    let mut hi = center;
    while hi + 1 < pts.len() && inside[hi + 1] {
        hi += 1;
    }
    let seg = &pts[lo..=hi];
    let mut theta = Vec::with_capacity(seg.len());
    for p in seg {
        let a = p[2].atan2(p[1] + 1.0);
        let v: f64 = match theta.last() {
            None => a,
            Some(&prev) => {
                let prev: f64 = prev;
                let pi = std::f64::consts::PI;
                prev + (a - prev + pi).rem_euclid(2.0 * pi) - pi
            }
        };
        theta.push(v);
    }
    let mut crossing_angles = Vec::new();
    for k in 1..seg.len() {
        // axis crossings of (y + 1, z): y + 1 = 0 or z = 0
        for (a0, a1) in [(seg[k - 1][2], seg[k][2]), (seg[k - 1][1] + 1.0, seg[k][1] + 1.0)] {
            if a0 * a1 < 0.0 {
                let f = a0 / (a0 - a1);
                crossing_angles.push(theta[k - 1] + f * (theta[k] - theta[k - 1]));
            }
        }
    }
    let turn = 2.0 * std::f64::consts::PI;
    let raw: f64 = match (crossing_angles.first(), crossing_angles.last()) {
        (Some(a), Some(b)) => ((b - a) / turn).abs(),
        _ => 0.0,
    };
    let window_rotation = ((theta[theta.len() - 1] - theta[0]) / turn).abs();
    Ok(TwistReport { twist: (2.0 * raw).round() / 2.0, raw, window_rotation, window })
}

/// Point on the two-term truncation of the invariant manifold graph.
///
/// Falkner-Skan (`location = (x, y)`): `z = -(1 - y^2) mu / x`, error `O(x^-2)`.
/// Folded node (`location = (z, y)`): `x = -z^2 + (mu + 1)/2 - mu y / (4 z)`, error `O(z^-2)`.
pub fn seed_on_center_manifold(atlas: &ChartAtlas, location: (f64, f64)) -> Result<(crate::atlas::ChartId, [f64; 3])> {
    let mu = atlas.mu;
    let (a, y) = location;
    let p = match atlas.model {
        Model::FalknerSkan => {
            let x = a;
            if x.abs() < atlas.handoff_threshold || y.abs() >= 1.0 {
                return Err(LabError::OutsideValidity(format!("need |x| >= {} and |y| < 1", atlas.handoff_threshold)));
            }
            [x, y, -(1.0 - y * y) * mu / x]
        }
        Model::FoldedNodeScaled => {
            let z = a;
            if z.abs() < atlas.handoff_threshold || (y / z).abs() > 4.0 {
                return Err(LabError::OutsideValidity(format!(
                    "need |z| >= {} and |y/z| <= 4",
                    atlas.handoff_threshold
                )));
            }
            [-z * z + 0.5 * (mu + 1.0) - 0.25 * mu * y / z, y, z]
        }
        Model::Nose => {
            return Err(LabError::PreconditionViolation("no center-manifold truncation for the Nose model".into()))
        }
    };
    let id = atlas.chart_for_affine(&p);
    let st = atlas.from_affine(id, &p).ok_or_else(|| LabError::OutsideValidity("seed not in any chart".into()))?;
    Ok((id, st))
}
