//! Symmetric periodic orbits by shooting.

use melnikov_lab::{
    default_bracket, find_symmetric_periodic_orbit, integrate, ChartAtlas, IntegrationOptions, LabError, Model,
    PeriodicOrbit, PeriodicOrbitResult, Plane, ShootingOptions, WatchedPlane,
};

fn shoot(model: Model, mu: f64) -> PeriodicOrbit {
    let opts = ShootingOptions::default();
    let bracket = default_bracket(model, mu, &opts).unwrap();
    find_symmetric_periodic_orbit(model, mu, bracket, &opts).unwrap()
}

fn assert_final_residuals_decrease(r: &PeriodicOrbitResult) {
    let h = &r.residual_history;
    let tail = &h[h.len().saturating_sub(5)..];
    assert!(tail.windows(2).all(|w| w[1] < w[0]), "{h:?}");
}

fn hausdorff(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    let d = |p: &[f64; 3], q: &[f64; 3]| (0..3).map(|i| (p[i] - q[i]).powi(2)).sum::<f64>().sqrt();
    let one_way = |x: &[[f64; 3]], y: &[[f64; 3]]| {
        x.iter().map(|p| y.iter().map(|q| d(p, q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

#[test]
fn falkner_skan_twist_counts() {
    for (mu, twist) in [(1.1, 0.5), (2.3, 1.5), (3.4, 2.5)] {
        let o = shoot(Model::FalknerSkan, mu);
        let r = &o.result;
        assert!(r.closure_residual < 1e-6 && r.symmetry_residual < 1e-6, "{r:?}");
        let t = r.twist.as_ref().unwrap();
        assert_eq!(r.twist_count, Some(twist));
        assert!((t.raw - twist).abs() < 0.05, "mu={mu} raw={}", t.raw);
        assert_final_residuals_decrease(r);
        assert!(r.shooting_parameter < 1.0 && r.shooting_parameter > 0.9);
    }
}

#[test]
fn falkner_skan_orbit_is_reversible_as_a_point_set() {
    let o = shoot(Model::FalknerSkan, 2.3);
    let pts: Vec<[f64; 3]> = o.closed.points(&o.atlas).into_iter().map(|p| p.1).collect();
    let sigma = Model::FalknerSkan.sigma();
    let image: Vec<[f64; 3]> = pts.iter().map(|p| std::array::from_fn(|i| sigma[i] * p[i])).collect();
    assert!(hausdorff(&pts, &image) < 1e-6);
}

#[test]
fn nose_four_crossing_pattern() {
    let o = shoot(Model::Nose, 1.9);
    let r = &o.result;
    assert!(r.closure_residual < 1e-6, "{r:?}");
    assert_eq!(r.crossings.len(), 4);
    let (y1, x0) = (r.crossings[0][1], r.crossings[1][0]);
    assert!(y1 > 1.0 && x0 > 0.0);
    let expect = [[0.0, y1, 0.0], [x0, 0.0, 0.0], [0.0, -y1, 0.0], [-x0, 0.0, 0.0]];
    for (c, e) in r.crossings.iter().zip(expect) {
        for i in 0..3 {
            assert!((c[i] - e[i]).abs() < 1e-6, "{c:?} vs {e:?}");
        }
    }
    assert_final_residuals_decrease(r);
}

#[test]
fn nose_full_period_integration_closes() {
    // Independent of the reflection assembly: integrate one whole period directly.
    let o = shoot(Model::Nose, 1.9);
    let y1 = o.result.shooting_parameter;
    let atlas = ChartAtlas::new(Model::Nose, 1.9);
    let p0 = [0.0, y1, 0.0];
    let id = atlas.chart_for_affine(&p0);
    let opts = IntegrationOptions {
        direction: -1.0,
        max_arc: 400.0,
        watch: vec![
            WatchedPlane { label: "z=0".into(), plane: Plane::new(2, 0.0) },
            WatchedPlane { label: "x=0".into(), plane: Plane::new(0, 0.0) },
        ],
        stop: Some(("z=0".into(), 7)),
        ..IntegrationOptions::default()
    };
    let tr = integrate(&atlas, (id, atlas.from_affine(id, &p0).unwrap()), &opts).unwrap();
    let end = atlas.to_affine(tr.last().chart, &tr.last().state).unwrap();
    let gap = (0..3).map(|i| (end[i] - p0[i]).powi(2)).sum::<f64>().sqrt();
    assert!(gap < 1e-6, "{end:?}");
    // every second z = 0 crossing lies on a coordinate axis
    let z: Vec<[f64; 3]> = tr.crossings("z=0").map(|e| e.point.unwrap()).collect();
    assert_eq!(z.len(), 8);
    let on_axes: Vec<[f64; 3]> = z.iter().skip(1).step_by(2).copied().collect();
    let x0 = o.result.crossings[1][0];
    let expect = [[x0, 0.0, 0.0], [0.0, -y1, 0.0], [-x0, 0.0, 0.0], [0.0, y1, 0.0]];
    for (c, e) in on_axes.iter().zip(expect) {
        for i in 0..3 {
            assert!((c[i] - e[i]).abs() < 1e-6, "{c:?} vs {e:?}");
        }
    }
}

#[test]
fn nose_above_resonance_is_refused() {
    let opts = ShootingOptions::default();
    let e = find_symmetric_periodic_orbit(Model::Nose, 2.1, (1.0, 150.0), &opts).unwrap_err();
    assert!(matches!(e, LabError::NonPeriodicSide { .. }), "{e:?}");
}

#[test]
fn falkner_skan_below_resonance_is_refused() {
    let opts = ShootingOptions::default();
    let e = find_symmetric_periodic_orbit(Model::FalknerSkan, 1.9, (0.5, 0.99), &opts).unwrap_err();
    assert!(matches!(e, LabError::NonPeriodicSide { .. }), "{e:?}");
}

#[test]
fn bracket_without_sign_change_is_rejected() {
    let opts = ShootingOptions::default();
    let e = find_symmetric_periodic_orbit(Model::FalknerSkan, 2.3, (0.2, 0.21), &opts).unwrap_err();
    assert!(matches!(e, LabError::NoRoot(_)), "{e:?}");
}

#[test]
fn result_json_round_trip_and_trace_csv() {
    let o = shoot(Model::FalknerSkan, 1.1);
    let json = serde_json::to_string(&o.result).unwrap();
    let back: PeriodicOrbitResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back, o.result);
    let csv = o.half_orbit.to_csv(&o.atlas).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "s,chart,x,y,z");
    assert_eq!(csv.lines().count(), o.half_orbit.samples.len() + 1);
}
