use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::input::{self, InputError, Rows};
use super::{BatchArgs, Command, FuzzArgs, OutputFormat, PolyArgs, Preset, Route, RunConfig, SliceArgs, SpinArgs, SCHEMA};
use crate::exact_d1::p_n1_membership;
use crate::fuzz::{run_suite, Suite};
use crate::halfdeg::{reduced_global_min, DEFAULT_RESTARTS};
use crate::model::{MomentVector, ProblemDims, SymmetricQuadratic};
use crate::moment::{classify, necessary_condition, sufficient_condition};
use crate::slice::{compute_slice, MembershipOracle, Plane, SliceCone};
use crate::sos::{sigma_membership_ellipsoid, sigma_membership_lmi, sos_witness_for_member};
use crate::spin::{coherent_state, dicke_state, entanglement_witness, ghz_state, mixed, SpinVerdict, SymmetricState};
use crate::verdict::{ConeVerdict, Status};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NON_MEMBER: i32 = 1;
pub const EXIT_INDETERMINATE: i32 = 2;
pub const EXIT_INPUT: i32 = 64;
pub const EXIT_DISAGREEMENT: i32 = 70;

/// Half-degree search is skipped beyond this many multiplicity patterns.
pub const MAX_HALFDEG_PATTERNS: u64 = 20_000;

type Out<'a> = &'a mut dyn Write;

fn fail(err: Out, e: impl std::fmt::Display) -> i32 {
    let _ = writeln!(err, "error: {e}");
    EXIT_INPUT
}

fn write_json(out: Out, command: &str, body: Value) {
    let mut doc = json!({ "schema": SCHEMA, "command": command });
    if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
        d.extend(b);
    }
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serializable"));
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Member => "member",
        Status::NonMember => "non_member",
        Status::Indeterminate => "indeterminate",
    }
}

/// NonMember outranks Indeterminate, which outranks Member.
fn exit_for(statuses: impl IntoIterator<Item = Status>) -> i32 {
    statuses.into_iter().fold(EXIT_OK, |code, s| match s {
        Status::NonMember => EXIT_NON_MEMBER,
        Status::Indeterminate if code != EXIT_NON_MEMBER => EXIT_INDETERMINATE,
        _ => code,
    })
}

pub(super) fn dispatch(command: Command, cfg: &RunConfig, out: Out, err: Out) -> i32 {
    match command {
        Command::CheckMoments(a) => check_moments(&a, cfg, out, err),
        Command::CheckPoly(a) => check_poly(&a, cfg, out, err),
        Command::Spin(a) => spin(&a, cfg, out, err),
        Command::Slice(a) => slice(&a, cfg, out, err),
        Command::Fuzz(a) => fuzz(&a, cfg, out, err),
    }
}

fn batch<T>(
    a: &BatchArgs,
    from_file: fn(&Path) -> Result<Rows<T>, InputError>,
    build: impl Fn(ProblemDims, &[f64]) -> crate::Result<T>,
) -> Result<Rows<T>, InputError> {
    if let Some(path) = &a.file {
        return from_file(path);
    }
    let plain = |message: String| InputError { line: None, message };
    let (Some(n), Some(d)) = (a.n, a.d) else {
        return Err(plain("give --file or --n, --d and inline values".into()));
    };
    if a.values.is_empty() {
        return Err(plain("no inline values".into()));
    }
    let dims = ProblemDims::new(n, d).map_err(|e| plain(e.to_string()))?;
    a.values
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let flat = input::parse_tuple(s)?;
            let at = |message: String| InputError { line: None, message: format!("instance {}: {message}", i + 1) };
            build(dims, &flat).map(|t| (i as u64 + 1, t)).map_err(|e| at(e.to_string()))
        })
        .collect()
}

#[derive(Serialize)]
struct MomentRow {
    line: u64,
    input: MomentVector,
    status: Status,
    boundary: bool,
    necessary_residual: f64,
    sufficient_residual: f64,
    witness: crate::Witness,
}

fn check_moments(a: &BatchArgs, cfg: &RunConfig, out: Out, err: Out) -> i32 {
    let rows = match batch(a, input::read_moments, MomentVector::from_flat) {
        Ok(r) => r,
        Err(e) => return fail(err, e),
    };
    let reports: Result<Vec<MomentRow>, InputError> = rows
        .into_par_iter()
        .map(|(line, m)| {
            let v = classify(&m, cfg.tol).map_err(|e| InputError { line: Some(line), message: e.to_string() })?;
            Ok(MomentRow {
                line,
                status: v.status,
                boundary: v.boundary,
                necessary_residual: necessary_condition(&m, cfg.tol).1.residual,
                sufficient_residual: sufficient_condition(&m, cfg.tol).1.residual,
                witness: v.witness,
                input: m,
            })
        })
        .collect();
    let reports = match reports {
        Ok(r) => r,
        Err(e) => return fail(err, e),
    };
    let code = exit_for(reports.iter().map(|r| r.status));
    match cfg.output {
        OutputFormat::Json => write_json(out, "check-moments", json!({ "exit_code": code, "results": reports })),
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let _ = w.write_record(["line", "n", "d", "status", "boundary", "necessary_residual", "sufficient_residual"]);
            for r in &reports {
                let _ = w.write_record([
                    r.line.to_string(),
                    r.input.n().to_string(),
                    r.input.d().to_string(),
                    status_name(r.status).to_string(),
                    r.boundary.to_string(),
                    r.necessary_residual.to_string(),
                    r.sufficient_residual.to_string(),
                ]);
            }
            let _ = out.write_all(&w.into_inner().unwrap_or_default());
        }
        OutputFormat::Text => {
            for r in &reports {
                let _ = writeln!(
                    out,
                    "{:>5}  {:<13}{}  necessary {:+.6e}  sufficient {:+.6e}",
                    r.line,
                    status_name(r.status),
                    if r.boundary { " (boundary)" } else { "" },
                    r.necessary_residual,
                    r.sufficient_residual
                );
            }
        }
    }
    code
}

#[derive(Serialize)]
struct RouteReport {
    route: &'static str,
    cone: &'static str,
    status: Status,
    boundary: bool,
    witness: Value,
}

fn from_verdict(route: &'static str, cone: &'static str, v: ConeVerdict) -> RouteReport {
    RouteReport {
        route,
        cone,
        status: v.status,
        boundary: v.boundary,
        witness: to_value(&v.witness),
    }
}

/// Partitions of `n` into at most `k` parts.
fn partitions(n: usize, k: usize) -> u64 {
    // p[j] = partitions of j into parts of size ≤ i, for growing i; parts ≤ k
    // is conjugate to at most k parts.
    let mut p = vec![0u64; n + 1];
    p[0] = 1;
    for part in 1..=k.min(n) {
        for j in part..=n {
            p[j] = p[j].saturating_add(p[j - part]);
        }
    }
    p[n]
}

fn halfdeg_feasible(dims: ProblemDims) -> bool {
    partitions(dims.n, 2 * dims.d) <= MAX_HALFDEG_PATTERNS
}

fn run_route(route: Route, q: &SymmetricQuadratic, cfg: &RunConfig) -> crate::Result<RouteReport> {
    Ok(match route {
        Route::Lmi => {
            let (v, feas) = sigma_membership_lmi(q, cfg.tol)?;
            let mut r = from_verdict("lmi", "Sigma", v);
            if r.status == Status::Member {
                r.witness = json!({ "arrow": feas, "sos": sos_witness_for_member(q, cfg.tol)? });
            }
            r
        }
        Route::Ellipsoid => from_verdict("ellipsoid", "Sigma", sigma_membership_ellipsoid(q, cfg.tol)?),
        Route::ExactD1 => from_verdict("exact-d1", "P", p_n1_membership(q, cfg.tol)?.0),
        Route::Halfdeg => {
            let min = reduced_global_min(q, DEFAULT_RESTARTS, cfg.seed)?;
            let bound = cfg.tol * q.scale();
            RouteReport {
                route: "halfdeg",
                cone: "P",
                status: if min.value >= -bound { Status::Member } else { Status::NonMember },
                boundary: min.value.abs() <= bound,
                witness: json!({ "kind": "sphere_minimum", "value": min.value, "argmin": min.config.points() }),
            }
        }
        Route::All => unreachable!("expanded by the caller"),
    })
}

fn disagreements(reports: &[RouteReport]) -> Vec<String> {
    let get = |name: &str| reports.iter().find(|r| r.route == name);
    let mut found = Vec::new();
    let mut same_cone = |a: &str, b: &str| {
        if let (Some(x), Some(y)) = (get(a), get(b)) {
            if x.status != y.status {
                found.push(format!("{a} says {}, {b} says {}", status_name(x.status), status_name(y.status)));
            }
        }
    };
    same_cone("lmi", "ellipsoid");
    same_cone("exact-d1", "halfdeg");
    for sigma in reports.iter().filter(|r| r.cone == "Sigma" && r.status == Status::Member) {
        for p in reports.iter().filter(|r| r.cone == "P" && r.status == Status::NonMember) {
            found.push(format!("{} certifies a sum of squares but {} finds a negative value", sigma.route, p.route));
        }
    }
    found
}

#[derive(Serialize)]
struct PolyRow {
    line: u64,
    input: SymmetricQuadratic,
    routes: Vec<RouteReport>,
    skipped: Vec<String>,
    disagreements: Vec<String>,
}

fn check_poly(a: &PolyArgs, cfg: &RunConfig, out: Out, err: Out) -> i32 {
    let rows = match batch(&a.batch, input::read_quadratics, SymmetricQuadratic::from_flat) {
        Ok(r) => r,
        Err(e) => return fail(err, e),
    };
    for (line, q) in &rows {
        let at = |msg: String| InputError { line: Some(*line), message: msg };
        if a.route == Route::ExactD1 && q.d() != 1 {
            return fail(err, at(format!("route exact-d1 needs d = 1, got d = {}", q.d())));
        }
        if a.route == Route::Halfdeg && !halfdeg_feasible(q.dims()) {
            return fail(err, at(format!("route halfdeg: more than {MAX_HALFDEG_PATTERNS} patterns at n = {}, d = {}", q.n(), q.d())));
        }
    }
    let results: Result<Vec<PolyRow>, InputError> = rows
        .into_iter()
        .map(|(line, q)| {
            let mut skipped = Vec::new();
            let routes: Vec<Route> = if a.route == Route::All {
                let mut r = vec![Route::Lmi, Route::Ellipsoid];
                if q.d() == 1 {
                    r.push(Route::ExactD1);
                } else {
                    skipped.push("exact-d1 (needs d = 1)".to_string());
                }
                if halfdeg_feasible(q.dims()) {
                    r.push(Route::Halfdeg);
                } else {
                    skipped.push("halfdeg (too many patterns)".to_string());
                }
                r
            } else {
                vec![a.route]
            };
            let reports = routes
                .into_iter()
                .map(|r| run_route(r, &q, cfg))
                .collect::<crate::Result<Vec<_>>>()
                .map_err(|e| InputError { line: Some(line), message: e.to_string() })?;
            Ok(PolyRow {
                line,
                disagreements: disagreements(&reports),
                input: q,
                routes: reports,
                skipped,
            })
        })
        .collect();
    let results = match results {
        Ok(r) => r,
        Err(e) => return fail(err, e),
    };
    let code = if results.iter().any(|r| !r.disagreements.is_empty()) {
        EXIT_DISAGREEMENT
    } else {
        exit_for(results.iter().flat_map(|r| r.routes.iter().map(|x| x.status)))
    };
    match cfg.output {
        OutputFormat::Json => write_json(out, "check-poly", json!({ "exit_code": code, "results": results })),
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let _ = w.write_record(["line", "n", "d", "route", "cone", "status", "boundary", "disagreements"]);
            for r in &results {
                for x in &r.routes {
                    let _ = w.write_record([
                        r.line.to_string(),
                        r.input.n().to_string(),
                        r.input.d().to_string(),
                        x.route.to_string(),
                        x.cone.to_string(),
                        status_name(x.status).to_string(),
                        x.boundary.to_string(),
                        r.disagreements.len().to_string(),
                    ]);
                }
            }
            let _ = out.write_all(&w.into_inner().unwrap_or_default());
        }
        OutputFormat::Text => {
            for r in &results {
                let routes: Vec<String> = r
                    .routes
                    .iter()
                    .map(|x| {
                        format!("{} ({}): {}{}", x.route, x.cone, status_name(x.status), if x.boundary { "*" } else { "" })
                    })
                    .collect();
                let _ = writeln!(out, "{:>5}  {}", r.line, routes.join("  "));
                for s in &r.skipped {
                    let _ = writeln!(out, "       skipped {s}");
                }
                for s in &r.disagreements {
                    let _ = writeln!(out, "       DISAGREEMENT: {s}");
                }
            }
        }
    }
    code
}

fn load_state(a: &SpinArgs) -> Result<SymmetricState, String> {
    if let Some(path) = &a.state {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        return serde_json::from_str(&text).map_err(|e| format!("line {}: {e}", e.line()));
    }
    let (Some(preset), Some(n)) = (a.preset, a.n) else {
        return Err("give --state or --preset with --n".into());
    };
    let r = match preset {
        Preset::Coherent => coherent_state(n, a.theta, a.phi),
        Preset::Dicke => dicke_state(n, a.m),
        Preset::Ghz => ghz_state(n),
        Preset::Mixed => {
            let h = std::f64::consts::FRAC_PI_2;
            [(h, 0.0), (h, h), (0.0, 0.0)]
                .into_iter()
                .map(|(t, p)| coherent_state(n, t, p))
                .collect::<crate::Result<Vec<_>>>()
                .and_then(|s| mixed(&s, &[1.0; 3]))
        }
    };
    r.map_err(|e| e.to_string())
}

fn spin(a: &SpinArgs, cfg: &RunConfig, out: Out, err: Out) -> i32 {
    let report = match load_state(a).and_then(|s| entanglement_witness(&s, cfg.tol).map_err(|e| e.to_string())) {
        Ok(r) => r,
        Err(e) => return fail(err, e),
    };
    let code = match report.verdict {
        SpinVerdict::SeparabilityCertified => EXIT_OK,
        SpinVerdict::EntanglementDetected => EXIT_NON_MEMBER,
        SpinVerdict::Inconclusive => EXIT_INDETERMINATE,
    };
    match cfg.output {
        OutputFormat::Json => write_json(out, "spin", json!({ "exit_code": code, "report": report })),
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let _ = w.write_record(["name", "side", "family", "lhs", "rhs", "residual", "boundary"]);
            for e in &report.inequalities {
                let _ = w.write_record([
                    e.name.clone(),
                    to_value(&e.side).as_str().unwrap_or_default().to_string(),
                    to_value(&e.family).as_str().unwrap_or_default().to_string(),
                    e.lhs.to_string(),
                    e.rhs.to_string(),
                    e.residual.to_string(),
                    e.boundary.to_string(),
                ]);
            }
            let _ = out.write_all(&w.into_inner().unwrap_or_default());
        }
        OutputFormat::Text => {
            let _ = writeln!(out, "n = {}", report.n);
            for e in &report.inequalities {
                let mark = if e.residual < -cfg.tol * (report.n * report.n) as f64 {
                    "VIOLATED"
                } else if e.boundary {
                    "equality"
                } else {
                    ""
                };
                let _ = writeln!(
                    out,
                    "{:<36} lhs {:>14.6}  rhs {:>14.6}  residual {:>+14.6e}  {mark}",
                    e.name, e.lhs, e.rhs, e.residual
                );
            }
            let verdict = to_value(&report.verdict);
            let _ = writeln!(out, "verdict: {}", verdict.as_str().unwrap_or_default());
            if let Some(by) = &report.detected_by {
                let _ = writeln!(out, "detected by: {by}");
            }
        }
    }
    code
}

fn slice(a: &SliceArgs, cfg: &RunConfig, out: Out, err: Out) -> i32 {
    let result = (|| {
        let cone: SliceCone = a.cone.parse()?;
        let dims = ProblemDims::new(a.n, a.d)?;
        let plane = Plane::parse(&a.plane, cone, a.d)?;
        let oracle = MembershipOracle::new(cone, dims, cfg.tol, cfg.seed)?;
        compute_slice(&oracle, &plane, a.grid)
    })();
    let result = match result {
        Ok(r) => r,
        Err(e) => return fail(err, e),
    };
    match cfg.output {
        OutputFormat::Json => write_json(out, "slice", json!({ "n": a.n, "d": a.d, "slice": result })),
        OutputFormat::Csv | OutputFormat::Text => {
            let _ = out.write_all(result.to_csv().as_bytes());
        }
    }
    EXIT_OK
}

fn fuzz(a: &FuzzArgs, cfg: &RunConfig, out: Out, err: Out) -> i32 {
    let suite: Suite = match a.suite.parse() {
        Ok(s) => s,
        Err(e) => return fail(err, e),
    };
    let summary = run_suite(suite, a.iters, cfg.seed, cfg.tol);
    match cfg.output {
        OutputFormat::Json => write_json(out, "fuzz", json!({ "summary": summary })),
        OutputFormat::Csv => {
            let _ = writeln!(out, "suite,seed,iters,violations,first_failure");
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                suite,
                summary.seed,
                summary.iters,
                summary.violations,
                summary.first_failure.as_ref().map_or(String::new(), |r| r.iteration.to_string())
            );
        }
        OutputFormat::Text => {
            let _ = writeln!(
                out,
                "suite {suite}: {} iterations, seed {}, {} violations",
                summary.iters, summary.seed, summary.violations
            );
        }
    }
    match &summary.first_failure {
        None => EXIT_OK,
        Some(r) => {
            let _ = writeln!(err, "first failure at iteration {}: {}", r.iteration, r.message);
            let _ = writeln!(
                err,
                "reproduce: symcone fuzz --suite {suite} --seed {} --iters {}",
                r.seed,
                r.iteration + 1
            );
            EXIT_NON_MEMBER
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_counts() {
        assert_eq!(partitions(5, 2), 3);
        assert_eq!(partitions(6, 6), 11);
        assert_eq!(partitions(4, 10), 5);
    }

    #[test]
    fn exit_precedence() {
        use Status::*;
        assert_eq!(exit_for([Member, Member]), EXIT_OK);
        assert_eq!(exit_for([Indeterminate, Member]), EXIT_INDETERMINATE);
        assert_eq!(exit_for([NonMember, Indeterminate]), EXIT_NON_MEMBER);
        assert_eq!(exit_for([Indeterminate, NonMember, Indeterminate]), EXIT_NON_MEMBER);
    }
}
