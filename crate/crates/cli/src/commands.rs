//! Subcommand implementations.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use melnikov_core::identities::run_identity_suite;
use melnikov_core::oracle::{agrees_to_nine_digits, coefficient_rows, TABLE1};
use melnikov_core::{
    classify_bifurcation, coefficient_table, d3_dv3, Bifurcation, BranchSide, MelnikovError, MelnikovReport,
    PerturbedSystem, RadicalValue, SecondDerivative, SystemName,
};
use melnikov_lab::{
    check_system, default_bracket, find_symmetric_periodic_orbit, LabError, ShootingOptions, Tolerances,
};

use crate::output::{yes_no, Outcome, EXIT_MISMATCH, EXIT_NONCONVERGENT, EXIT_USAGE};
use crate::{OrbitArgs, SystemArg};

pub type CmdResult = Result<Outcome, (i32, String)>;

fn core_err(e: MelnikovError) -> (i32, String) {
    (EXIT_MISMATCH, e.to_string())
}

fn lab_code(e: &LabError) -> i32 {
    match e {
        LabError::QuadratureNonConvergent { .. }
        | LabError::MaxArcLength(_)
        | LabError::LeftAtlas(_)
        | LabError::StepSizeUnderflow(_)
        | LabError::NoRoot(_)
        | LabError::NonConvergent(_)
        | LabError::WindowEmpty => EXIT_NONCONVERGENT,
        _ => EXIT_MISMATCH,
    }
}

fn lab_err(e: LabError) -> (i32, String) {
    (lab_code(&e), e.to_string())
}

fn json_of<T: Serialize>(v: &T) -> Result<Value, (i32, String)> {
    serde_json::to_value(v).map_err(|e| (1, e.to_string()))
}

pub fn identities(max_degree: usize, max_triple: usize) -> CmdResult {
    let mut o = Outcome::new("identities");
    let checks = run_identity_suite(max_degree, max_triple);
    o.header = ["identity", "cases", "pass", "first_failure"].map(String::from).to_vec();
    for c in &checks {
        let first = c.failures.first().cloned().unwrap_or_default();
        o.rows.push(vec![c.name.clone(), c.cases.to_string(), c.pass.to_string(), first.clone()]);
        let _ = writeln!(o.text, "{:<24} {:>6} cases  {}", c.name, c.cases, if c.pass { "PASS" } else { "FAIL" });
        if !c.pass {
            o.fail(EXIT_MISMATCH);
            let _ = writeln!(o.text, "    failures: {}", c.failures.join(", "));
        }
    }
    o.results = json_of(&checks)?;
    Ok(o)
}

fn derivative_rows(r: &MelnikovReport) -> Vec<(&'static str, RadicalValue)> {
    let mut v = vec![("d2_dv_dalpha", r.d2_dv_dalpha.clone())];
    if let SecondDerivative::Value(x) = &r.d2_dv2 {
        v.push(("d2_dv2", x.clone()));
    }
    if let Some(x) = &r.d3_dv3 {
        v.push(("d3_dv3", x.clone()));
    }
    v
}

fn bifurcation_text(b: &Bifurcation) -> (String, i8) {
    match b {
        Bifurcation::Transcritical { orientation_sign } => ("transcritical".into(), *orientation_sign),
        Bifurcation::Pitchfork { orientation_sign } => ("pitchfork".into(), *orientation_sign),
    }
}

fn side_text(s: &BranchSide) -> &'static str {
    match s {
        BranchSide::SecondaryExistsForAlphaPositive => "alpha > 0",
        BranchSide::SecondaryExistsForAlphaNegative => "alpha < 0",
    }
}

pub fn melnikov(system: SystemArg, n: usize, digits: usize) -> CmdResult {
    let mut o = Outcome::new("melnikov");
    let sys = PerturbedSystem::build(system.name(), n);
    let r = classify_bifurcation(&sys).map_err(core_err)?;
    let (kind, orientation) = bifurcation_text(&r.bifurcation);
    let _ = writeln!(o.text, "system {} n={} ({}, beta={})", r.system.as_str(), r.n, r.parity, r.beta);
    let mut decimals = serde_json::Map::new();
    o.header =
        ["derivative", "exact", "decimal", "oracle_match", "oracle_source", "printed_match"].map(String::from).to_vec();
    for (name, v) in derivative_rows(&r) {
        let dec = v.to_decimal(digits);
        let chk = r.oracle_agreement.iter().find(|c| c.derivative.as_str() == name);
        let oracle = chk.and_then(|c| c.exact_match);
        let source = chk.and_then(|c| c.oracle_source).map(|s| format!("{s:?}").to_lowercase()).unwrap_or_default();
        let printed = chk.and_then(|c| c.printed_match);
        if oracle == Some(false) {
            o.fail(EXIT_MISMATCH);
        }
        let fmt_opt = |b: Option<bool>| b.map(|b| b.to_string()).unwrap_or_default();
        o.rows.push(vec![name.into(), v.to_string(), dec.clone(), fmt_opt(oracle), source.clone(), fmt_opt(printed)]);
        let _ = write!(o.text, "{name:<13} = {v}  ~ {dec}");
        match oracle {
            Some(b) => {
                let _ = write!(o.text, "  oracle ({source}): {}", if b { "match" } else { "MISMATCH" });
            }
            None => {
                let _ = write!(o.text, "  oracle: none");
            }
        }
        if let Some(p) = printed {
            let _ = write!(o.text, "  printed formula: {}", if p { "match" } else { "differs (reported)" });
        }
        o.text.push('\n');
        decimals.insert(name.into(), Value::String(dec));
    }
    if r.d2_dv2 == SecondDerivative::IdenticallyZeroByParity {
        let _ = writeln!(o.text, "d2_dv2        = 0 by parity");
    }
    let _ = writeln!(o.text, "bifurcation: {kind}, orientation {orientation:+}");
    if let Some(s) = &r.branch_side {
        let _ = writeln!(o.text, "branch side: secondary connections for {}", side_text(s));
    }
    o.results = json!({ "report": json_of(&r)?, "decimals": decimals });
    Ok(o)
}

/// Number of leading significant digits two decimal renderings share.
pub fn matching_digits(a: &str, b: &str) -> usize {
    let (x, y): (f64, f64) = match (a.parse(), b.parse()) {
        (Ok(x), Ok(y)) => (x, y),
        _ => return 0,
    };
    if x == 0.0 || y == 0.0 || x.signum() != y.signum() || x.abs().log10().floor() != y.abs().log10().floor() {
        return 0;
    }
    let sig = |s: &str| -> Vec<char> {
        let m = s.split(['e', 'E']).next().unwrap_or("");
        m.chars().filter(|c| c.is_ascii_digit()).skip_while(|c| *c == '0').collect()
    };
    sig(a).iter().zip(sig(b).iter()).take_while(|(p, q)| p == q).count()
}

#[derive(Serialize)]
struct Table1Row {
    n: usize,
    exact: String,
    computed: String,
    printed_closed_form: &'static str,
    printed_reference_converted: &'static str,
    flagged: bool,
    matching_digits: usize,
    agrees: bool,
}

pub fn table1(digits: usize) -> CmdResult {
    let mut o = Outcome::new("table1");
    let mut rows = Vec::new();
    for row in TABLE1 {
        let v = d3_dv3(&PerturbedSystem::build(SystemName::FoldedNode, row.n)).map_err(core_err)?;
        let computed = v.to_decimal(digits.max(10));
        let ten = v.to_decimal(10);
        let printed: f64 = row.closed_form.parse().map_err(|_| (1, "bad fixture".to_string()))?;
        let rendered: f64 = ten.parse().map_err(|_| (1, format!("unparsable rendering {ten}")))?;
        let agrees = agrees_to_nine_digits(rendered, printed);
        if !agrees {
            o.fail(EXIT_MISMATCH);
        }
        rows.push(Table1Row {
            n: row.n,
            exact: v.to_string(),
            computed,
            printed_closed_form: row.closed_form,
            printed_reference_converted: row.converted,
            flagged: row.flagged,
            matching_digits: matching_digits(&ten, row.closed_form),
            agrees,
        });
    }
    o.header = ["n", "exact", "computed", "printed", "reference_converted", "flagged", "matching_digits", "agrees"]
        .map(String::from)
        .to_vec();
    let _ = writeln!(
        o.text,
        "{:>3}  {:<16} {:<16} {:>6} {:>7}  {:<6} exact",
        "n", "computed", "printed", "digits", "flagged", "agrees"
    );
    for r in &rows {
        o.rows.push(vec![
            r.n.to_string(),
            r.exact.clone(),
            r.computed.clone(),
            r.printed_closed_form.into(),
            r.printed_reference_converted.into(),
            r.flagged.to_string(),
            r.matching_digits.to_string(),
            r.agrees.to_string(),
        ]);
        let _ = writeln!(
            o.text,
            "{:>3}  {:<16} {:<16} {:>6} {:>7}  {:<6} {}",
            r.n,
            r.computed,
            r.printed_closed_form,
            r.matching_digits,
            yes_no(r.flagged),
            yes_no(r.agrees),
            r.exact
        );
    }
    o.results = json_of(&rows)?;
    Ok(o)
}

pub fn coeffs(system: SystemArg, k: usize, digits: usize) -> CmdResult {
    let mut o = Outcome::new("coeffs");
    let t = coefficient_table(system.name(), k).map_err(|e| (EXIT_USAGE, e.to_string()))?;
    o.header = ["k", "j", "name", "exact", "decimal"].map(String::from).to_vec();
    o.rows = coefficient_rows(&t, digits).into_iter().map(|r| r.to_vec()).collect();
    for r in &o.rows {
        let _ = writeln!(o.text, "{}_{{{},{}}} = {}  ~ {}", r[2], r[0], r[1], r[3], r[4]);
    }
    let sum = RadicalValue::rational(t.sum.clone());
    let _ = writeln!(o.text, "sum = {}  ~ {}", sum, sum.to_decimal(digits));
    let flags = [
        ("sign pattern", t.sign_pattern_holds),
        ("ratio bound", t.ratio_bound_holds),
        ("halved-sum bound", t.halved_sum_bound_holds),
    ];
    for (name, f) in flags {
        if let Some(b) = f {
            let _ = writeln!(o.text, "{name}: {}", if b { "holds" } else { "FAILS" });
            if !b {
                o.fail(EXIT_MISMATCH);
            }
        }
    }
    o.results = json_of(&t)?;
    Ok(o)
}

pub fn quadcheck(system: SystemArg, n: usize, rel_tol: f64, digits: usize) -> CmdResult {
    let mut o = Outcome::new("quadcheck");
    let sys = PerturbedSystem::build(system.name(), n);
    let checks = check_system(&sys, rel_tol).map_err(lab_err)?;
    o.header = ["derivative", "exact", "exact_decimal", "numeric", "rel_error", "pass"].map(String::from).to_vec();
    for c in &checks {
        let r = &c.report;
        if !r.pass {
            o.fail(EXIT_MISMATCH);
        }
        let numeric = format!("{:.*e}", digits.saturating_sub(1), r.numeric);
        o.rows.push(vec![
            c.derivative.as_str().into(),
            r.exact.clone(),
            r.exact_decimal.clone(),
            numeric.clone(),
            format!("{:.3e}", r.rel_error),
            r.pass.to_string(),
        ]);
        let _ = writeln!(
            o.text,
            "{:<13} exact {} ~ {}  numeric {}  rel error {:.3e}  {}",
            c.derivative.as_str(),
            r.exact,
            r.exact_decimal,
            numeric,
            r.rel_error,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    o.results = json_of(&checks)?;
    Ok(o)
}

pub fn orbit(a: &OrbitArgs) -> CmdResult {
    let model = a.system.model();
    if a.system == SystemArg::FoldedNode {
        return Err((EXIT_USAGE, "orbit supports falkner-skan and nose".into()));
    }
    let opts = ShootingOptions {
        tol: Tolerances { rel: a.rel_tol, abs: a.abs_tol },
        handoff_threshold: a.handoff,
        twist_window: a.twist_window,
        ..ShootingOptions::default()
    };
    melnikov_lab::check_periodic_side(model, a.mu).map_err(lab_err)?;
    let bracket = match &a.bracket {
        Some(b) => (b[0], b[1]),
        None => default_bracket(model, a.mu, &opts).map_err(lab_err)?,
    };
    let orbit = find_symmetric_periodic_orbit(model, a.mu, bracket, &opts).map_err(lab_err)?;
    let r = &orbit.result;
    let stem = format!("{}_mu{}", model.as_str(), a.mu);
    let csv_path = a.out_dir.join(format!("{stem}_trace.csv"));
    let json_path = a.out_dir.join(format!("{stem}_result.json"));
    let csv = orbit.closed.to_csv(&orbit.atlas).map_err(|e| (1, e.to_string()))?;
    std::fs::write(&csv_path, csv).map_err(|e| (1, format!("{}: {e}", csv_path.display())))?;
    let js = serde_json::to_string_pretty(r).map_err(|e| (1, e.to_string()))?;
    std::fs::write(&json_path, js + "\n").map_err(|e| (1, format!("{}: {e}", json_path.display())))?;

    let mut o = Outcome::new("orbit");
    let _ = writeln!(o.text, "{} mu={}: symmetric periodic orbit found", model.as_str(), a.mu);
    let _ = writeln!(o.text, "shooting parameter y1 = {:.15}", r.shooting_parameter);
    let _ = writeln!(o.text, "period = {:.12}", r.period);
    let _ = writeln!(
        o.text,
        "closure residual = {:.3e}, symmetry residual = {:.3e}",
        r.closure_residual, r.symmetry_residual
    );
    for c in &r.crossings {
        let _ = writeln!(o.text, "fix-point set crossing ({:.10}, {:.10}, {:.10})", c[0], c[1], c[2]);
    }
    if let Some(t) = &r.twist {
        let _ = writeln!(o.text, "twist {} (raw {:.6}, window |y+1| < {})", t.twist, t.raw, t.window);
    }
    let _ = writeln!(o.text, "trace: {}", csv_path.display());
    let _ = writeln!(o.text, "result: {}", json_path.display());
    o.header = ["model", "mu", "shooting_parameter", "period", "closure_residual", "symmetry_residual", "twist"]
        .map(String::from)
        .to_vec();
    o.rows.push(vec![
        model.as_str().into(),
        a.mu.to_string(),
        r.shooting_parameter.to_string(),
        r.period.to_string(),
        r.closure_residual.to_string(),
        r.symmetry_residual.to_string(),
        r.twist_count.map(|t| t.to_string()).unwrap_or_default(),
    ]);
    o.results = json!({
        "result": json_of(r)?,
        "trace_csv": csv_path.display().to_string(),
        "result_json": json_path.display().to_string(),
    });
    Ok(o)
}

#[derive(Serialize)]
struct SweepRow {
    system: SystemName,
    n: usize,
    status: String,
    bifurcation: Option<String>,
    orientation_sign: Option<i8>,
    branch_side: Option<BranchSide>,
    d2_dv_dalpha: Option<String>,
    second_or_third: Option<String>,
    oracle_match: Option<bool>,
    quadrature_pass: Option<bool>,
}

fn sweep_task(name: SystemName, n: usize, quad: Option<f64>, digits: usize) -> SweepRow {
    let sys = PerturbedSystem::build(name, n);
    let mut row = SweepRow {
        system: name,
        n,
        status: "ok".into(),
        bifurcation: None,
        orientation_sign: None,
        branch_side: None,
        d2_dv_dalpha: None,
        second_or_third: None,
        oracle_match: None,
        quadrature_pass: None,
    };
    match classify_bifurcation(&sys) {
        Ok(r) => {
            let (kind, o) = bifurcation_text(&r.bifurcation);
            row.bifurcation = Some(kind);
            row.orientation_sign = Some(o);
            row.branch_side = r.branch_side;
            row.d2_dv_dalpha = Some(r.d2_dv_dalpha.to_decimal(digits));
            row.second_or_third = match (&r.d2_dv2, &r.d3_dv3) {
                (SecondDerivative::Value(v), _) => Some(v.to_decimal(digits)),
                (_, Some(v)) => Some(v.to_decimal(digits)),
                _ => None,
            };
            let flags: Vec<bool> = r.oracle_agreement.iter().filter_map(|c| c.exact_match).collect();
            row.oracle_match = if flags.is_empty() { None } else { Some(flags.iter().all(|b| *b)) };
        }
        Err(e) => row.status = e.to_string(),
    }
    if let Some(tol) = quad {
        row.quadrature_pass = Some(match check_system(&sys, tol) {
            Ok(c) => c.iter().all(|c| c.report.pass),
            Err(e) => {
                if row.status == "ok" {
                    row.status = e.to_string();
                }
                false
            }
        });
    }
    row
}

fn system_order(s: SystemName) -> u8 {
    match s {
        SystemName::FoldedNode => 0,
        SystemName::FalknerSkan => 1,
        SystemName::Nose => 2,
        SystemName::Generic => 3,
    }
}

pub fn sweep(systems: &[SystemArg], n_min: usize, n_max: usize, quad: Option<f64>, digits: usize) -> CmdResult {
    let mut o = Outcome::new("sweep");
    let mut tasks: Vec<(SystemName, usize)> =
        systems.iter().flat_map(|s| (n_min..=n_max).map(move |n| (s.name(), n))).collect();
    tasks.sort_by_key(|(s, n)| (system_order(*s), *n));
    tasks.dedup();
    let mut rows: Vec<SweepRow> = tasks.par_iter().map(|(s, n)| sweep_task(*s, *n, quad, digits)).collect();
    rows.sort_by_key(|r| (system_order(r.system), r.n));
    o.header = [
        "system",
        "n",
        "status",
        "bifurcation",
        "orientation",
        "branch_side",
        "d2_dv_dalpha",
        "d2_dv2_or_d3_dv3",
        "oracle_match",
        "quadrature_pass",
    ]
    .map(String::from)
    .to_vec();
    let opt = |v: &Option<String>| v.clone().unwrap_or_default();
    let optb = |v: Option<bool>| v.map(|b| b.to_string()).unwrap_or_default();
    for r in &rows {
        if r.status != "ok" || r.oracle_match == Some(false) || r.quadrature_pass == Some(false) {
            o.fail(EXIT_MISMATCH);
        }
        let side = r.branch_side.as_ref().map(|s| side_text(s).to_string());
        o.rows.push(vec![
            r.system.as_str().into(),
            r.n.to_string(),
            r.status.clone(),
            opt(&r.bifurcation),
            r.orientation_sign.map(|s| s.to_string()).unwrap_or_default(),
            opt(&side),
            opt(&r.d2_dv_dalpha),
            opt(&r.second_or_third),
            optb(r.oracle_match),
            optb(r.quadrature_pass),
        ]);
        let _ = writeln!(
            o.text,
            "{:<13} n={:<3} {:<14} {:>3} {:<10} D_va {:<18} D2/D3 {:<18} oracle {:<5} quad {}",
            r.system.as_str(),
            r.n,
            opt(&r.bifurcation).to_string() + if r.status == "ok" { "" } else { "error" },
            r.orientation_sign.map(|s| format!("{s:+}")).unwrap_or_default(),
            opt(&side),
            opt(&r.d2_dv_dalpha),
            opt(&r.second_or_third),
            optb(r.oracle_match),
            optb(r.quadrature_pass),
        );
        if r.status != "ok" {
            let _ = writeln!(o.text, "    {}", r.status);
        }
    }
    o.results = json_of(&rows)?;
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::matching_digits;

    #[test]
    fn digit_matching() {
        assert_eq!(matching_digits("360.9544715", "360.9544714"), 9);
        assert_eq!(matching_digits("3.355694920e16", "3.355694920e16"), 10);
        assert_eq!(matching_digits("612865632.0", "6.1286563218e8"), 9);
        assert_eq!(matching_digits("1.0", "10.0"), 0);
    }
}
