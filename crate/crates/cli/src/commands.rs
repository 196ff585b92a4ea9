use num_complex::Complex64;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde_json::{json, Value};

use lebrun_core::bergman::kernel::{balanced_scan, epsilon_at, epsilon_at_z, epsilon_deviation, EpsilonSample};
use lebrun_core::bergman::Weight;
use lebrun_core::coords::{forward_map, inverse_map, lift, ComplexPoint, Params, SigmaPoint, DEFAULT_TOL};
use lebrun_core::exact::verify::Mutation;
use lebrun_core::expansion::{asymptotic_fit, coeffs_ricci_flat, coeffs_ricci_flat_contracted, origin_comparison, NORMALIZATION_NOTE};
use lebrun_core::geometry::{
    closed_form_invariants, comparison_metric_at, completeness_check, completeness_form, contracted_invariants, curvature_at,
    metric_at, norm_r2_at, Mat2,
};
use lebrun_core::series::{calabi_verdict, exp_alpha_phi, parse_rational};
use lebrun_core::suite::{overall_pass, run_all, run_criterion, CheckResult, Status, SuiteOptions, CRITERIA};

use crate::output::{fmt, num, nums, obj, Output, Table};
use crate::{CliError, Command, MutateArg, PointArgs};

type Run = Result<(Output, Result<(), CliError>), CliError>;

pub const SCHEMA: &str = include_str!("../schema/lebrun-output.schema.json");

fn params(m: f64) -> Result<Params, CliError> {
    Ok(Params::new(m)?)
}

fn weight(alpha: f64) -> Result<Weight, CliError> {
    Ok(Weight::new(alpha)?)
}

fn check_tol(tol: f64) -> Result<(), CliError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--tol must be finite and > 0, got {tol}")))
    }
}

/// The complex point and its implicit coordinates; `(U,V)` inputs use real `z`.
fn resolve(point: &PointArgs, prm: Params) -> Result<(ComplexPoint, SigmaPoint), CliError> {
    match (point.point, point.zpoint) {
        (Some((u, v)), None) => {
            let p = SigmaPoint::new(u, v)?;
            Ok((ComplexPoint::real(forward_map(p, prm)?), p))
        }
        (None, Some(q)) => {
            let z = ComplexPoint::new(Complex64::new(q[0], q[1]), Complex64::new(q[2], q[3]))?;
            let (_, p) = lift(z, prm, DEFAULT_TOL)?;
            Ok((z, p))
        }
        _ => Err(CliError::Usage("exactly one of --point U,V or --zpoint re1,im1,re2,im2 is required".into())),
    }
}

fn cnum(c: Complex64) -> Value {
    nums(&[c.re, c.im])
}

fn mat(m: &Mat2) -> Value {
    Value::Array(m.iter().map(|row| Value::Array(row.iter().map(|&c| cnum(c)).collect())).collect())
}

fn point_json(z: ComplexPoint, p: SigmaPoint) -> [(&'static str, Value); 4] {
    [("U", num(p.u)), ("V", num(p.v)), ("z1", cnum(z.z1)), ("z2", cnum(z.z2))]
}

fn merge(a: Value, b: Value) -> Value {
    match (a, b) {
        (Value::Object(mut x), Value::Object(y)) => {
            x.extend(y);
            Value::Object(x)
        }
        (a, _) => a,
    }
}

pub fn run(cmd: &Command) -> Run {
    match cmd {
        Command::Coords { m, point, tol } => coords(*m, point, *tol),
        Command::Metric { m, point } => metric(*m, point),
        Command::Curvature { m, point } => curvature(*m, point),
        Command::Epsilon { m, alpha, point, tol, grid, grid_max } => epsilon(*m, *alpha, point, *tol, *grid, *grid_max),
        Command::Series { m, alpha, max_degree } => series(m, alpha, *max_degree),
        Command::BalancedScan { alpha, m_min, m_max, steps, include_zero, grid, tol } => {
            scan(*alpha, *m_min, *m_max, *steps, *include_zero, *grid, *tol)
        }
        Command::EnglisFit { m, alphas, point, tol } => englis(*m, alphas, *point, *tol),
        Command::CheckCompleteness { m, grid, umax } => completeness(*m, *grid, *umax),
        Command::Verify { criterion, timings, mutate } => verify(criterion, *timings, *mutate),
        Command::Schema => {
            let json: Value = serde_json::from_str(SCHEMA).expect("bundled schema is valid JSON");
            let mut t = Table::new(&["schema"]);
            t.push(vec![SCHEMA.to_string()]);
            Ok((Output { json, table: t }, Ok(())))
        }
    }
}

fn coords(m: f64, point: &PointArgs, tol: f64) -> Run {
    check_tol(tol)?;
    let prm = params(m)?;
    let (z, p) = resolve(point, prm)?;
    let x = forward_map(p, prm)?;
    let back = inverse_map(x, prm, tol)?;
    let err = (back.u - p.u).abs().max((back.v - p.v).abs());
    let e = (2.0 * m * (p.u - p.v)).exp();
    let d = 1.0 + 2.0 * m * p.sum();
    let body = merge(
        obj(point_json(z, p)),
        obj([("m", num(m)), ("x1", num(x.x1)), ("x2", num(x.x2)), ("E", num(e)), ("D", num(d)), ("roundtrip_err", num(err))]),
    );
    let mut t = Table::new(&["m", "U", "V", "x1", "x2", "E", "D", "roundtrip_err"]);
    t.push([m, p.u, p.v, x.x1, x.x2, e, d, err].iter().map(|&v| fmt(v)).collect());
    Ok((Output::new("coords", body, t), Ok(())))
}

fn metric(m: f64, point: &PointArgs) -> Run {
    let prm = params(m)?;
    let (z, p) = resolve(point, prm)?;
    let g = metric_at(z, prm)?;
    let gt = comparison_metric_at(z, prm)?;
    let body = merge(
        obj(point_json(z, p)),
        obj([("m", num(m)), ("g", mat(&g.g)), ("ginv", mat(&g.ginv)), ("det", num(g.det)), ("g_comparison", mat(&gt.g))]),
    );
    let mut t = Table::new(&["m", "U", "V", "g11", "g12_re", "g12_im", "g22", "det"]);
    t.push([m, p.u, p.v, g.g[0][0].re, g.g[0][1].re, g.g[0][1].im, g.g[1][1].re, g.det].iter().map(|&v| fmt(v)).collect());
    Ok((Output::new("metric", body, t), Ok(())))
}

fn curvature(m: f64, point: &PointArgs) -> Run {
    let prm = params(m)?;
    let (z, p) = resolve(point, prm)?;
    let c = curvature_at(z, prm)?;
    let displayed = closed_form_invariants(p, prm);
    let contracted = contracted_invariants(p, prm);
    let ricci_max = c.ric.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max);
    let mut comps = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    comps.push(json!({"index": [i + 1, j + 1, k + 1, l + 1], "value": cnum(c.r[i][j][k][l])}));
                }
            }
        }
    }
    let body = merge(
        obj(point_json(z, p)),
        obj([
            ("m", num(m)),
            ("normR2", num(c.norm_r2)),
            ("lapR2", num(c.lap_r2)),
            ("rho", num(c.rho)),
            ("ricci_max_abs", num(ricci_max)),
            ("ricci", mat(&c.ric)),
            ("normR2_displayed_form", num(displayed.norm_r2)),
            ("lapR2_displayed_form", num(displayed.lap_r2)),
            ("normR2_contracted_form", num(contracted.norm_r2)),
            ("lapR2_contracted_form", num(contracted.lap_r2)),
            ("components", Value::Array(comps)),
        ]),
    );
    let mut t = Table::new(&["m", "U", "V", "normR2", "lapR2", "rho", "ricci_max_abs", "normR2_displayed_form", "lapR2_displayed_form"]);
    t.push(
        [m, p.u, p.v, c.norm_r2, c.lap_r2, c.rho, ricci_max, displayed.norm_r2, displayed.lap_r2]
            .iter()
            .map(|&v| fmt(v))
            .collect(),
    );
    Ok((Output::new("curvature", body, t), Ok(())))
}

const EPS_COLUMNS: [&str; 8] = ["m", "alpha", "U", "V", "epsilon", "trunc_bound", "h", "norm_ratio"];

fn sample_json(s: &EpsilonSample) -> Value {
    obj([
        ("U", num(s.point.u)),
        ("V", num(s.point.v)),
        ("epsilon", num(s.value)),
        ("pi2_epsilon", num(std::f64::consts::PI.powi(2) * s.value)),
        ("trunc_bound", num(s.trunc_bound)),
        ("abs_err", num(s.abs_err)),
        ("window", json!(s.window)),
    ])
}

fn epsilon(m: f64, alpha: f64, point: &PointArgs, tol: f64, grid: Option<usize>, grid_max: f64) -> Run {
    check_tol(tol)?;
    let prm = params(m)?;
    let w = weight(alpha)?;
    let mut t = Table::new(&EPS_COLUMNS);
    let row = |s: &EpsilonSample| vec![fmt(m), fmt(alpha), fmt(s.point.u), fmt(s.point.v), fmt(s.value), fmt(s.trunc_bound), String::new(), String::new()];
    if let Some(n) = grid {
        if n < 2 || !(grid_max > 0.0) {
            return Err(CliError::Usage("--grid needs n >= 2 and --grid-max > 0".into()));
        }
        let xs: Vec<f64> = (0..n).map(|i| grid_max * i as f64 / (n - 1) as f64).collect();
        let pts: Vec<SigmaPoint> = xs.iter().flat_map(|&u| xs.iter().map(move |&v| SigmaPoint { u, v })).collect();
        let rep = epsilon_deviation(prm, w, &pts, tol)?;
        for s in &rep.samples {
            t.push(row(s));
        }
        let body = obj([
            ("m", num(m)),
            ("alpha", num(alpha)),
            ("tol", num(tol)),
            ("epsilon_origin", num(rep.eps0)),
            ("max_rel_dev", num(rep.max_rel_dev)),
            ("argmax", nums(&[rep.argmax.u, rep.argmax.v])),
            ("combined_err", num(rep.combined_err)),
            ("samples", Value::Array(rep.samples.iter().map(sample_json).collect())),
            ("normalization", json!(NORMALIZATION_NOTE)),
        ]);
        return Ok((Output::new("epsilon", body, t), Ok(())));
    }
    let s = match (point.point, point.zpoint) {
        (None, Some(_)) => epsilon_at_z(resolve(point, prm)?.0, prm, w, tol)?,
        _ => epsilon_at(resolve(point, prm)?.1, prm, w, tol)?,
    };
    t.push(row(&s));
    let body = merge(obj([("m", num(m)), ("alpha", num(alpha)), ("tol", num(tol)), ("normalization", json!(NORMALIZATION_NOTE))]), sample_json(&s));
    Ok((Output::new("epsilon", body, t), Ok(())))
}

fn series(m: &str, alpha: &str, max_degree: u32) -> Run {
    let qm = parse_rational(m)?;
    let qa = parse_rational(alpha)?;
    let s = exp_alpha_phi(&qm, &qa, max_degree)?;
    let verdict = calabi_verdict(&qm, &qa, max_degree)?;
    let mut t = Table::new(&["i", "j", "coefficient", "approx"]);
    let mut coeffs = Vec::new();
    for ((i, j), c) in s.terms() {
        let approx = c.to_f64().unwrap_or(f64::NAN);
        t.push(vec![i.to_string(), j.to_string(), c.to_string(), fmt(approx)]);
        coeffs.push(json!({"i": i, "j": j, "value": c.to_string(), "approx": num(approx)}));
    }
    let first_negative = match verdict.first_negative {
        Some(((i, j), c)) => json!({"i": i, "j": j, "value": c.to_string()}),
        None => Value::Null,
    };
    let body = obj([
        ("m", json!(qm.to_string())),
        ("alpha", json!(qa.to_string())),
        ("max_degree", json!(max_degree)),
        ("coefficients", Value::Array(coeffs)),
        ("first_negative", first_negative),
    ]);
    Ok((Output::new("series", body, t), Ok(())))
}

fn scan(alpha: f64, m_min: f64, m_max: f64, steps: usize, include_zero: bool, grid: Option<usize>, tol: f64) -> Run {
    check_tol(tol)?;
    let w = weight(alpha)?;
    if steps == 0 || !(m_min <= m_max) {
        return Err(CliError::Usage("need --steps >= 1 and --m-min <= --m-max".into()));
    }
    let mut ms: Vec<f64> = if steps == 1 {
        vec![m_min]
    } else {
        (0..steps).map(|i| m_min + (m_max - m_min) * i as f64 / (steps - 1) as f64).collect()
    };
    if include_zero && ms[0] != 0.0 {
        ms.insert(0, 0.0);
    }
    if let Some(bad) = ms.iter().find(|&&m| !(0.0..=0.5 * alpha).contains(&m)) {
        return Err(CliError::Usage(format!("m = {bad} lies outside [0, alpha/2]")));
    }
    let pts: Vec<SigmaPoint> = match grid {
        Some(n) if n >= 2 => {
            let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
            xs.iter().flat_map(|&u| xs.iter().map(move |&v| SigmaPoint { u, v })).collect()
        }
        Some(_) => return Err(CliError::Usage("--grid needs n >= 2".into())),
        None => Vec::new(),
    };
    let rows: Vec<Result<Value, String>> = ms
        .par_iter()
        .map(|&m| {
            let run = || -> lebrun_core::Result<Value> {
                let prm = Params::new(m)?;
                let rep = balanced_scan(&[m], w)?;
                let r = &rep.rows[0];
                let e0 = epsilon_at(SigmaPoint::ORIGIN, prm, w, tol)?;
                let dev = if pts.is_empty() { Value::Null } else { num(epsilon_deviation(prm, w, &pts, tol)?.max_rel_dev) };
                Ok(obj([
                    ("m", num(m)),
                    ("h", num(r.h.value)),
                    ("h_err", num(r.h.abs_err)),
                    ("h_via_quadratic", num(r.h_via_quadratic)),
                    ("h_paths_agree", json!(r.h_paths_agree)),
                    ("norm_ratio", num(r.norm_ratio.value)),
                    ("norm_ratio_err", num(r.norm_ratio.abs_err)),
                    ("epsilon_origin", num(e0.value)),
                    ("trunc_bound", num(e0.trunc_bound)),
                    ("max_rel_dev", dev),
                    ("sign", json!(rep.sign_pattern)),
                ]))
            };
            run().map_err(|e| e.to_string())
        })
        .collect();
    let mut t = Table::new(&[&EPS_COLUMNS[..], &["h_err", "norm_ratio_err", "max_rel_dev", "status"]].concat());
    let mut json_rows = Vec::new();
    let mut failures = 0;
    let mut min_abs_h = f64::INFINITY;
    let mut pattern = String::new();
    let get = |v: &Value, k: &str| v[k].as_f64().map(fmt).unwrap_or_default();
    for (m, r) in ms.iter().zip(rows) {
        match r {
            Ok(v) => {
                if *m > 0.0 {
                    min_abs_h = min_abs_h.min(v["h"].as_f64().unwrap_or(f64::NAN).abs());
                }
                pattern.push_str(v["sign"].as_str().unwrap_or("?"));
                t.push(vec![
                    fmt(*m),
                    fmt(alpha),
                    fmt(0.0),
                    fmt(0.0),
                    get(&v, "epsilon_origin"),
                    get(&v, "trunc_bound"),
                    get(&v, "h"),
                    get(&v, "norm_ratio"),
                    get(&v, "h_err"),
                    get(&v, "norm_ratio_err"),
                    get(&v, "max_rel_dev"),
                    "ok".into(),
                ]);
                let mut v = v;
                v.as_object_mut().expect("row object").remove("sign");
                json_rows.push(merge(v, json!({"status": "ok"})));
            }
            Err(e) => {
                failures += 1;
                pattern.push('?');
                let mut row = vec![fmt(*m), fmt(alpha)];
                row.extend(std::iter::repeat(String::new()).take(9));
                row.push(format!("error: {e}"));
                t.push(row);
                json_rows.push(json!({"m": num(*m), "status": "error", "error": e}));
            }
        }
    }
    let body = obj([
        ("alpha", num(alpha)),
        ("rows", Value::Array(json_rows)),
        ("min_abs_h", if min_abs_h.is_finite() { num(min_abs_h) } else { Value::Null }),
        ("sign_pattern", json!(pattern)),
        ("partial", json!(failures > 0)),
    ]);
    let status = if failures > 0 { Err(CliError::Numerical(format!("{failures} grid point(s) failed"))) } else { Ok(()) };
    Ok((Output::new("balanced-scan", body, t), status))
}

fn englis(m: f64, alphas: &[f64], point: (f64, f64), tol: f64) -> Run {
    check_tol(tol)?;
    let prm = params(m)?;
    let p = SigmaPoint::new(point.0, point.1)?;
    let origin = p.u == 0.0 && p.v == 0.0;
    let (fit, c2_curv, c3_watson, a3_red, a3_con, finding) = if origin && m > 0.0 {
        let r = origin_comparison(prm, alphas, tol)?;
        (r.fit, r.c2_curvature, num(r.c3_watson), r.a3_reduction, r.a3_contracted, json!(r.finding))
    } else {
        let fit = asymptotic_fit(p, prm, alphas, tol)?;
        let x = forward_map(p, prm)?;
        let c2 = norm_r2_at(x, prm)? / 24.0;
        let w = if origin { num(0.0) } else { Value::Null };
        (fit, c2, w, coeffs_ricci_flat(p, prm).a3, coeffs_ricci_flat_contracted(p, prm).a3, Value::Null)
    };
    let body = obj([
        ("m", num(m)),
        ("point", nums(&[p.u, p.v])),
        ("alphas", nums(alphas)),
        ("c2_fit", num(fit.c2)),
        ("c3_fit", num(fit.c3)),
        ("c2_curvature", num(c2_curv)),
        ("a3_reduction", num(a3_red)),
        ("a3_contracted", num(a3_con)),
        ("c3_watson", c3_watson.clone()),
        ("residuals", obj([("residual_norm", num(fit.residual_norm)), ("condition", num(fit.condition)), ("max_sample_err", num(fit.max_sample_err))])),
        ("finding", finding),
        ("normalization", json!(fit.normalization)),
    ]);
    let mut t = Table::new(&["m", "U", "V", "c2_fit", "c3_fit", "c2_curvature", "a3_reduction", "a3_contracted", "c3_watson", "residual_norm"]);
    let watson = c3_watson.as_f64().map(fmt).unwrap_or_default();
    t.push(vec![
        fmt(m),
        fmt(p.u),
        fmt(p.v),
        fmt(fit.c2),
        fmt(fit.c3),
        fmt(c2_curv),
        fmt(a3_red),
        fmt(a3_con),
        watson,
        fmt(fit.residual_norm),
    ]);
    Ok((Output::new("englis-fit", body, t), Ok(())))
}

fn completeness(m: f64, grid: usize, umax: f64) -> Run {
    let prm = params(m)?;
    if grid < 2 || !(umax > 0.0) || !umax.is_finite() {
        return Err(CliError::Usage("need --grid >= 2 and a finite --umax > 0".into()));
    }
    let xs: Vec<f64> = (0..grid).map(|i| umax * i as f64 / (grid - 1) as f64).collect();
    let roots: Vec<(f64, f64)> = xs.iter().flat_map(|&a| xs.iter().map(move |&b| (a, b))).collect();
    let rep = completeness_check(&roots, prm)?;
    // The tangent form at u = 0 in direction (1, 0); expected to vanish.
    let at_u0 = xs.iter().map(|&b| completeness_form(m, 0.0, b, 1.0, 0.0).abs()).fold(0.0, f64::max);
    let body = obj([
        ("m", num(m)),
        ("grid", json!(grid)),
        ("umax", num(umax)),
        ("points", json!(rep.points)),
        ("min_eig", num(rep.min_eig)),
        ("min_eig_naive", num(rep.min_eig_naive)),
        ("argmin_eig", nums(&[rep.argmin_eig.u, rep.argmin_eig.v])),
        ("min_quadform", num(rep.min_quadform)),
        ("argmin_quadform", nums(&[rep.argmin_quadform.u, rep.argmin_quadform.v])),
        ("form_at_u0_max_abs", num(at_u0)),
    ]);
    let mut t = Table::new(&["m", "points", "min_eig", "min_eig_naive", "min_quadform", "form_at_u0_max_abs"]);
    t.push(vec![fmt(m), rep.points.to_string(), fmt(rep.min_eig), fmt(rep.min_eig_naive), fmt(rep.min_quadform), fmt(at_u0)]);
    Ok((Output::new("check-completeness", body, t), Ok(())))
}

fn check_json(r: &CheckResult, timings: bool) -> Value {
    let measured: serde_json::Map<String, Value> = r.measured.iter().map(|(k, v)| (k.clone(), num(*v))).collect();
    let mut v = json!({
        "id": r.id,
        "name": r.name,
        "status": r.status.as_str(),
        "reference": r.reference,
        "measured": measured,
        "notes": r.notes,
    });
    if timings {
        v["elapsed_s"] = num(r.elapsed.as_secs_f64());
    }
    v
}

fn verify(criteria: &[u32], timings: bool, mutate: Option<MutateArg>) -> Run {
    let mutation = match mutate {
        None => Mutation::None,
        Some(MutateArg::Metric) => Mutation::MetricOffDiagonal,
        Some(MutateArg::Curvature) => Mutation::CurvatureR1111,
    };
    let opts = SuiteOptions { mutation };
    let results: Vec<CheckResult> = if criteria.is_empty() {
        run_all(opts)
    } else {
        let mut ids = criteria.to_vec();
        ids.sort_unstable();
        ids.dedup();
        ids.iter()
            .map(|&id| run_criterion(id, opts).ok_or_else(|| CliError::Usage(format!("criterion must be in 1..={CRITERIA}, got {id}"))))
            .collect::<Result<_, _>>()?
    };
    let pass = overall_pass(&results);
    let count = |s: Status| results.iter().filter(|r| r.status == s).count();
    let body = obj([
        ("overall", json!(if pass { "pass" } else { "fail" })),
        ("mutation", json!(format!("{mutation:?}"))),
        ("checks", Value::Array(results.iter().map(|r| check_json(r, timings)).collect())),
        ("summary", json!({"passed": count(Status::Pass), "failed": count(Status::Fail), "informational": count(Status::Info)})),
    ]);
    let mut header = vec!["id", "name", "status", "reference", "measured", "notes"];
    if timings {
        header.push("elapsed_s");
    }
    let mut t = Table::new(&header);
    for r in &results {
        let mut row = vec![
            r.id.to_string(),
            r.name.to_string(),
            r.status.as_str().to_string(),
            r.reference.to_string(),
            r.measured.iter().map(|(k, v)| format!("{k}={}", fmt(*v))).collect::<Vec<_>>().join(";"),
            r.notes.join("; "),
        ];
        if timings {
            row.push(fmt(r.elapsed.as_secs_f64()));
        }
        t.push(row);
    }
    let status = if pass { Ok(()) } else { Err(CliError::Verification) };
    Ok((Output::new("verify", body, t), status))
}
