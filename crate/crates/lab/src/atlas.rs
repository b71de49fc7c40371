//! Chart atlases for the compactified models and event-driven integration across charts.
//!
//! A directional chart along axis `j` with sign `s` and weights `w` uses
//! `u_j = s W^{-w_j}`, `u_i = U_i W^{-w_i}`; the chart state stores `W` in slot `j`.
//! The chart field is multiplied by the smallest power `W^m` that makes it polynomial,
//! so the chart parameter satisfies `dt = W^m ds`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::ode::{dopri_step, DormandPrince, Step, Tolerances};

pub const DEFAULT_HANDOFF: f64 = 10.0;
pub const DEFAULT_HYSTERESIS: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    FalknerSkan,
    Nose,
    FoldedNodeScaled,
}

impl Model {
    pub fn as_str(&self) -> &'static str {
        match self {
            Model::FalknerSkan => "falkner_skan",
            Model::Nose => "nose",
            Model::FoldedNodeScaled => "folded_node_scaled",
        }
    }

    /// Reversing symmetry used for the periodic orbits.
    pub fn sigma(&self) -> [f64; 3] {
        match self {
            Model::FalknerSkan => [-1.0, 1.0, -1.0],
            Model::Nose => [1.0, -1.0, -1.0],
            Model::FoldedNodeScaled => [1.0, -1.0, -1.0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartId {
    Affine,
    Directional { axis: usize, sign: i8 },
}

impl fmt::Display for ChartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChartId::Affine => write!(f, "affine"),
            ChartId::Directional { axis, sign } => write!(f, "{}bar={}", ["x", "y", "z"][*axis], sign),
        }
    }
}

/// Sparse Laurent polynomial in three variables.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    pub terms: BTreeMap<[i32; 3], f64>,
}

impl Poly {
    pub fn from_terms(terms: &[(f64, [i32; 3])]) -> Self {
        let mut p = Poly::default();
        for (c, e) in terms {
            p.add_term(*c, *e);
        }
        p
    }

    pub fn add_term(&mut self, c: f64, e: [i32; 3]) {
        if c == 0.0 {
            return;
        }
        let v = self.terms.entry(e).or_insert(0.0);
        *v += c;
        if *v == 0.0 {
            self.terms.remove(&e);
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*c, *e);
        }
        out
    }

    /// `c x^e * self`.
    pub fn mul_monomial(&self, c: f64, e: [i32; 3]) -> Poly {
        let mut out = Poly::default();
        for (k, v) in &self.terms {
            out.add_term(v * c, [k[0] + e[0], k[1] + e[1], k[2] + e[2]]);
        }
        out
    }

    pub fn min_exponent(&self, var: usize) -> i32 {
        self.terms.keys().map(|e| e[var]).min().unwrap_or(0)
    }

    pub fn is_polynomial(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&k| k >= 0))
    }

    pub fn eval(&self, u: &[f64; 3]) -> f64 {
        self.terms.iter().map(|(e, c)| c * u[0].powi(e[0]) * u[1].powi(e[1]) * u[2].powi(e[2])).sum()
    }
}

pub type PolyField = [Poly; 3];

fn affine_field(model: Model, mu: f64) -> PolyField {
    match model {
        // x' = y, y' = z, z' = -x z - mu (1 - y^2)
        Model::FalknerSkan => [
            Poly::from_terms(&[(1.0, [0, 1, 0])]),
            Poly::from_terms(&[(1.0, [0, 0, 1])]),
            Poly::from_terms(&[(-1.0, [1, 0, 1]), (-mu, [0, 0, 0]), (mu, [0, 2, 0])]),
        ],
        // x' = -y - x z, y' = x, z' = -mu + (mu - 1) x^2
        Model::Nose => [
            Poly::from_terms(&[(-1.0, [0, 1, 0]), (-1.0, [1, 0, 1])]),
            Poly::from_terms(&[(1.0, [1, 0, 0])]),
            Poly::from_terms(&[(-mu, [0, 0, 0]), (mu - 1.0, [2, 0, 0])]),
        ],
        // x' = mu y / 2 - (mu + 1) z, y' = 1, z' = x + z^2
        Model::FoldedNodeScaled => [
            Poly::from_terms(&[(mu / 2.0, [0, 1, 0]), (-(mu + 1.0), [0, 0, 1])]),
            Poly::from_terms(&[(1.0, [0, 0, 0])]),
            Poly::from_terms(&[(1.0, [1, 0, 0]), (1.0, [0, 0, 2])]),
        ],
    }
}

/// Weights and the axes that carry directional charts.
fn model_layout(model: Model) -> ([i32; 3], Vec<usize>) {
    match model {
        Model::FalknerSkan => ([1, 0, 1], vec![0]),
        Model::Nose => ([1, 1, 1], vec![0, 1, 2]),
        Model::FoldedNodeScaled => ([2, 1, 1], vec![2]),
    }
}

/// Desingularized field of the directional chart and the power `m` of the time rescaling.
pub fn directional_field(f: &PolyField, weights: [i32; 3], axis: usize, sign: i8) -> (PolyField, i32) {
    let s = sign as f64;
    let wj = weights[axis];
    assert!(wj > 0, "directional chart needs a positive weight");
    let subst = |p: &Poly| {
        let mut out = Poly::default();
        for (e, c) in &p.terms {
            let mut ne = *e;
            ne[axis] = -(0..3).map(|i| weights[i] * e[i]).sum::<i32>();
            out.add_term(c * s.powi(e[axis]), ne);
        }
        out
    };
    let big_f: [Poly; 3] = std::array::from_fn(|i| subst(&f[i]));
    let exp_w = |k: i32| {
        let mut e = [0; 3];
        e[axis] = k;
        e
    };
    let w_dot = big_f[axis].mul_monomial(-s / wj as f64, exp_w(wj + 1));
    let mut comps: [Poly; 3] = std::array::from_fn(|_| Poly::default());
    for i in 0..3 {
        if i == axis {
            comps[i] = w_dot.clone();
        } else {
            let mut ui = [0; 3];
            ui[i] = 1;
            ui[axis] = -1;
            comps[i] = big_f[i].mul_monomial(1.0, exp_w(weights[i])).add(&w_dot.mul_monomial(weights[i] as f64, ui));
        }
    }
    let min = comps.iter().map(|p| p.min_exponent(axis)).min().unwrap_or(0);
    let m = (-min).max(0);
    let comps = std::array::from_fn(|i| comps[i].mul_monomial(1.0, exp_w(m)));
    (comps, m)
}

#[derive(Clone, Debug)]
pub struct Chart {
    pub id: ChartId,
    pub field: PolyField,
    /// `dt = W^m ds` in this chart.
    pub time_power: i32,
}

#[derive(Clone, Debug)]
pub struct ChartAtlas {
    pub model: Model,
    pub mu: f64,
    pub weights: [i32; 3],
    pub chart_axes: Vec<usize>,
    pub charts: Vec<Chart>,
    pub handoff_threshold: f64,
    pub hysteresis: f64,
}

impl ChartAtlas {
    pub fn new(model: Model, mu: f64) -> Self {
        Self::with_threshold(model, mu, DEFAULT_HANDOFF)
    }

    pub fn with_threshold(model: Model, mu: f64, handoff_threshold: f64) -> Self {
        let f = affine_field(model, mu);
        let (weights, chart_axes) = model_layout(model);
        let mut charts = vec![Chart { id: ChartId::Affine, field: f.clone(), time_power: 0 }];
        for &axis in &chart_axes {
            for sign in [-1i8, 1] {
                let (field, m) = directional_field(&f, weights, axis, sign);
                charts.push(Chart { id: ChartId::Directional { axis, sign }, field, time_power: m });
            }
        }
        ChartAtlas { model, mu, weights, chart_axes, charts, handoff_threshold, hysteresis: DEFAULT_HYSTERESIS }
    }

    pub fn chart(&self, id: ChartId) -> Result<&Chart> {
        self.charts.iter().find(|c| c.id == id).ok_or_else(|| LabError::LeftAtlas(format!("no chart {id}")))
    }

    /// Blown-down coordinates, `None` at or beyond infinity.
    pub fn to_affine(&self, id: ChartId, st: &[f64; 3]) -> Option<[f64; 3]> {
        match id {
            ChartId::Affine => Some(*st),
            ChartId::Directional { axis, sign } => {
                let w = st[axis];
                if w <= 0.0 {
                    return None;
                }
                Some(std::array::from_fn(|i| {
                    if i == axis {
                        sign as f64 * w.powi(-self.weights[i])
                    } else {
                        st[i] * w.powi(-self.weights[i])
                    }
                }))
            }
        }
    }

    pub fn from_affine(&self, id: ChartId, u: &[f64; 3]) -> Option<[f64; 3]> {
        match id {
            ChartId::Affine => Some(*u),
            ChartId::Directional { axis, sign } => {
                let su = sign as f64 * u[axis];
                if su <= 0.0 {
                    return None;
                }
                let w = su.powf(-1.0 / self.weights[axis] as f64);
                Some(std::array::from_fn(|i| if i == axis { w } else { u[i] * w.powi(self.weights[i]) }))
            }
        }
    }

    /// `(U~, W)` with `u = U~ W^{-w}` componentwise; `W = 1` in the affine chart.
    pub fn homogeneous(&self, id: ChartId, st: &[f64; 3]) -> ([f64; 3], f64) {
        match id {
            ChartId::Affine => (*st, 1.0),
            ChartId::Directional { axis, sign } => {
                let mut u = *st;
                u[axis] = sign as f64;
                (u, st[axis])
            }
        }
    }

    /// Right-hand side in chart `id`, augmented with `dt/ds`.
    pub fn rhs(&self, chart: &Chart, y: &[f64; 4]) -> [f64; 4] {
        let st = [y[0], y[1], y[2]];
        let dt = match chart.id {
            ChartId::Affine => 1.0,
            ChartId::Directional { axis, .. } => st[axis].powi(chart.time_power),
        };
        [chart.field[0].eval(&st), chart.field[1].eval(&st), chart.field[2].eval(&st), dt]
    }

    /// Magnitude used for handoff and the axis achieving it.
    fn magnitude(&self, id: ChartId, st: &[f64; 3]) -> (f64, usize, f64) {
        let (u, w) = self.homogeneous(id, st);
        let mut best = (f64::NEG_INFINITY, 0usize, 1.0);
        for &a in &self.chart_axes {
            let r = u[a].abs().powf(1.0 / self.weights[a] as f64);
            if r > best.0 {
                best = (r, a, u[a].signum());
            }
        }
        (best.0 / w, best.1, best.2)
    }

    /// Chart preferred for a point in chart `id`, with hysteresis.
    pub fn preferred_chart(&self, id: ChartId, st: &[f64; 3]) -> Result<ChartId> {
        let up = self.handoff_threshold * (1.0 + self.hysteresis);
        let down = self.handoff_threshold * (1.0 - self.hysteresis);
        match id {
            ChartId::Affine => {
                let (rho, a, s) = self.magnitude(id, st);
                if rho > up {
                    Ok(ChartId::Directional { axis: a, sign: s as i8 })
                } else {
                    Ok(id)
                }
            }
            ChartId::Directional { axis, .. } => {
                let w = st[axis];
                if w.is_nan() || w <= 0.0 {
                    return Err(LabError::LeftAtlas(format!("W = {w} in chart {id}")));
                }
                let (rho, a, s) = self.magnitude(id, st);
                let (u, _) = self.homogeneous(id, st);
                if rho < down {
                    Ok(ChartId::Affine)
                } else if a != axis && u[a].abs().powf(1.0 / self.weights[a] as f64) > 1.0 + self.hysteresis {
                    Ok(ChartId::Directional { axis: a, sign: s as i8 })
                } else {
                    Ok(id)
                }
            }
        }
    }

    /// Chart that the atlas would use for an affine point.
    pub fn chart_for_affine(&self, u: &[f64; 3]) -> ChartId {
        let (rho, a, s) = self.magnitude(ChartId::Affine, u);
        if rho > self.handoff_threshold {
            ChartId::Directional { axis: a, sign: s as i8 }
        } else {
            ChartId::Affine
        }
    }

    pub fn transition(&self, from: ChartId, to: ChartId, st: &[f64; 3]) -> Option<[f64; 3]> {
        self.from_affine(to, &self.to_affine(from, st)?)
    }

    /// Plane `u_axis = level` as a function of the chart state, positive on the side `u_axis > level`.
    pub fn plane_value(&self, plane: &Plane, id: ChartId, st: &[f64; 3]) -> f64 {
        let (u, w) = self.homogeneous(id, st);
        u[plane.axis] - plane.level * w.powi(self.weights[plane.axis])
    }

    fn plane_gradient(&self, plane: &Plane, id: ChartId, st: &[f64; 3]) -> [f64; 3] {
        let mut g = [0.0; 3];
        match id {
            ChartId::Affine => g[plane.axis] = 1.0,
            ChartId::Directional { axis, .. } => {
                let wp = self.weights[plane.axis];
                if plane.axis != axis {
                    g[plane.axis] = 1.0;
                }
                if wp > 0 {
                    g[axis] -= plane.level * wp as f64 * st[axis].powi(wp - 1);
                }
            }
        }
        g
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub axis: usize,
    pub level: f64,
}

impl Plane {
    pub fn new(axis: usize, level: f64) -> Self {
        Plane { axis, level }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    PlaneCrossing,
    ChartSwitch,
    SymmetryHit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub label: String,
    pub s: f64,
    pub t: f64,
    pub chart: ChartId,
    pub state: [f64; 3],
    /// Blown-down location where finite.
    pub point: Option<[f64; 3]>,
    /// `|event function|` for crossings, transition round-trip error for chart switches.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub s: f64,
    pub t: f64,
    pub chart: ChartId,
    pub state: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitTrace {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    #[serde(skip)]
    pub steps: Vec<(ChartId, Step<4>)>,
}

impl OrbitTrace {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trace has at least the initial sample")
    }

    pub fn crossings(&self, label: &str) -> impl Iterator<Item = &Event> {
        let label = label.to_string();
        self.events.iter().filter(move |e| e.kind == EventKind::PlaneCrossing && e.label == label)
    }

    /// Blown-down samples, skipping points at infinity.
    pub fn points(&self, atlas: &ChartAtlas) -> Vec<(f64, [f64; 3])> {
        self.samples.iter().filter_map(|s| atlas.to_affine(s.chart, &s.state).map(|p| (s.t, p))).collect()
    }

    /// CSV with columns `s, chart, x, y, z`; blown-down coordinates are empty where infinite.
    pub fn to_csv(&self, atlas: &ChartAtlas) -> std::result::Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["s", "chart", "x", "y", "z"])?;
        for s in &self.samples {
            let p = atlas.to_affine(s.chart, &s.state);
            let c = |i: usize| p.map(|p| format!("{:.17e}", p[i])).unwrap_or_default();
            w.write_record([format!("{:.17e}", s.s), s.chart.to_string(), c(0), c(1), c(2)])?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WatchedPlane {
    pub label: String,
    pub plane: Plane,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegrationOptions {
    pub tol: Tolerances,
    /// `+1` forward, `-1` backward in time.
    pub direction: f64,
    pub initial_step: f64,
    pub max_step: f64,
    /// Bound on the accumulated chart parameter.
    pub max_arc: f64,
    pub max_steps: usize,
    /// Interpolated samples inserted inside every step.
    pub dense_samples: usize,
    pub watch: Vec<WatchedPlane>,
    /// Terminate at the `skip + 1`-th crossing of the watched plane with this label.
    pub stop: Option<(String, usize)>,
    /// Terminate exactly at this chart parameter.
    pub end_s: Option<f64>,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions {
            tol: Tolerances::default(),
            direction: 1.0,
            initial_step: 1e-3,
            max_step: 0.1,
            max_arc: 1e3,
            max_steps: 2_000_000,
            dense_samples: 0,
            watch: Vec::new(),
            stop: None,
            end_s: None,
        }
    }
}

const EVENT_TOL: f64 = 1e-12;

/// Integrates through the atlas until the stop event, `max_arc`, or failure.
pub fn integrate(atlas: &ChartAtlas, start: (ChartId, [f64; 3]), opts: &IntegrationOptions) -> Result<OrbitTrace> {
    let (mut id, st0) = start;
    if let ChartId::Directional { axis, .. } = id {
        if st0[axis] <= 0.0 {
            return Err(LabError::LeftAtlas(format!("initial W = {} in chart {id}", st0[axis])));
        }
    }
    let mut trace =
        OrbitTrace { samples: vec![Sample { s: 0.0, t: 0.0, chart: id, state: st0 }], events: vec![], steps: vec![] };
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut y = [st0[0], st0[1], st0[2], 0.0];
    let mut s = 0.0;
    let mut h = opts.initial_step.abs() * opts.direction.signum();
    let mut steps = 0usize;
    loop {
        let chart = atlas.chart(id)?.clone();
        let f = |_s: f64, y: &[f64; 4]| atlas.rhs(&chart, y);
        let mut stepper = DormandPrince::new(f, s, y, h, opts.max_step, opts.tol);
        loop {
            steps += 1;
            if steps > opts.max_steps || (stepper.t).abs() > opts.max_arc {
                return Err(LabError::MaxArcLength(opts.max_arc));
            }
            if let Some(end) = opts.end_s {
                let remaining = end - stepper.t;
                if remaining * stepper.h <= 0.0 || remaining.abs() <= 1e-15 * end.abs().max(1.0) {
                    return Ok(trace);
                }
                if stepper.h.abs() > remaining.abs() {
                    stepper.h = remaining;
                }
            }
            let step = stepper.step()?;
            if let ChartId::Directional { axis, .. } = id {
                if step.y1[axis] <= 0.0 {
                    return Err(LabError::LeftAtlas(format!("W = {} in chart {id}", step.y1[axis])));
                }
            }
            let mut hits: Vec<(f64, [f64; 4], String, f64)> = Vec::new();
            for wp in &opts.watch {
                let st = |v: &[f64; 4]| [v[0], v[1], v[2]];
                let g0 = atlas.plane_value(&wp.plane, id, &st(&step.y0));
                let g1 = atlas.plane_value(&wp.plane, id, &st(&step.y1));
                if (g0 != 0.0 && g0 * g1 < 0.0) || (g1 == 0.0 && g0 != 0.0) {
                    let (sv, yv, res) = refine(atlas, &chart, &wp.plane, &step);
                    hits.push((sv, yv, wp.label.clone(), res));
                }
            }
            hits.sort_by(|a, b| ((a.0 - step.t0).abs()).partial_cmp(&(b.0 - step.t0).abs()).unwrap());
            for k in 1..=opts.dense_samples {
                let sk = step.t0 + (step.t1 - step.t0) * k as f64 / (opts.dense_samples + 1) as f64;
                let v = step.interpolate(sk);
                trace.samples.push(Sample { s: sk, t: v[3], chart: id, state: [v[0], v[1], v[2]] });
            }
            let mut stopped = false;
            for (sv, yv, label, res) in hits {
                let state = [yv[0], yv[1], yv[2]];
                trace.events.push(Event {
                    kind: EventKind::PlaneCrossing,
                    label: label.clone(),
                    s: sv,
                    t: yv[3],
                    chart: id,
                    state,
                    point: atlas.to_affine(id, &state),
                    residual: res,
                });
                let c = counts.entry(label.clone()).or_insert(0);
                *c += 1;
                if let Some((stop_label, skip)) = &opts.stop {
                    if *stop_label == label && *c == skip + 1 {
                        trace.samples.retain(|smp| {
                            (smp.s - step.t0) * opts.direction.signum() <= (sv - step.t0) * opts.direction.signum()
                        });
                        trace.samples.push(Sample { s: sv, t: yv[3], chart: id, state });
                        let mut partial = step;
                        partial.t1 = sv;
                        partial.y1 = yv;
                        partial.f1 = atlas.rhs(&chart, &yv);
                        trace.steps.push((id, partial));
                        stopped = true;
                        break;
                    }
                }
            }
            if stopped {
                return Ok(trace);
            }
            trace.steps.push((id, step));
            let st1 = [step.y1[0], step.y1[1], step.y1[2]];
            trace.samples.push(Sample { s: step.t1, t: step.y1[3], chart: id, state: st1 });
            let next = atlas.preferred_chart(id, &st1)?;
            if next != id {
                let new = atlas
                    .transition(id, next, &st1)
                    .ok_or_else(|| LabError::LeftAtlas(format!("no transition {id} -> {next}")))?;
                let back = atlas.transition(next, id, &new).unwrap_or([f64::NAN; 3]);
                let err = (0..3).map(|i| (back[i] - st1[i]).abs() / st1[i].abs().max(1.0)).fold(0.0, f64::max);
                trace.events.push(Event {
                    kind: EventKind::ChartSwitch,
                    label: format!("{id}->{next}"),
                    s: step.t1,
                    t: step.y1[3],
                    chart: next,
                    state: new,
                    point: atlas.to_affine(next, &new),
                    residual: err,
                });
                trace.samples.push(Sample { s: step.t1, t: step.y1[3], chart: next, state: new });
                s = step.t1;
                y = [new[0], new[1], new[2], step.y1[3]];
                h = stepper.h;
                id = next;
                break;
            }
        }
    }
}

/// Event location: bisection on the dense output, then Newton with exact partial steps.
fn refine(atlas: &ChartAtlas, chart: &Chart, plane: &Plane, step: &Step<4>) -> (f64, [f64; 4], f64) {
    let id = chart.id;
    let g = |v: &[f64; 4]| atlas.plane_value(plane, id, &[v[0], v[1], v[2]]);
    let (mut a, mut b) = (step.t0, step.t1);
    let ga = g(&step.y0);
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if g(&step.interpolate(m)) * ga > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let f = |_s: f64, y: &[f64; 4]| atlas.rhs(chart, y);
    let exact = |sv: f64| dopri_step(&f, step.t0, &step.y0, &step.f0, sv - step.t0).0;
    let mut sv = 0.5 * (a + b);
    let mut yv = exact(sv);
    for _ in 0..20 {
        let gv = g(&yv);
        if gv.abs() < EVENT_TOL {
            break;
        }
        let grad = atlas.plane_gradient(plane, id, &[yv[0], yv[1], yv[2]]);
        let fv = atlas.rhs(chart, &yv);
        let dg = grad[0] * fv[0] + grad[1] * fv[1] + grad[2] * fv[2];
        if dg == 0.0 {
            break;
        }
        sv -= gv / dg;
        yv = exact(sv);
    }
    (sv, yv, g(&yv).abs())
}
