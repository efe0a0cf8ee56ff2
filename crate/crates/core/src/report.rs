//! JSON and CSV rendering of verification reports.
//!
//! Every floating-point number is written as a decimal string with 17
//! significant digits so values round-trip exactly; complex numbers become
//! `[re, im]` string pairs. Object keys are emitted in sorted order.

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::verify::{DrawRecord, ParamValue, RunConfig, Summary, VerificationReport};

/// Name of the per-draw timing field, the only non-deterministic output.
pub const WALL_TIME_FIELD: &str = "wall_time_s";

/// `x` with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn complex(z: Complex64) -> Value {
    json!([num(z.re), num(z.im)])
}

fn param(v: &ParamValue) -> Value {
    match v {
        ParamValue::Real(x) => json!(num(*x)),
        ParamValue::Complex(z) => complex(*z),
        ParamValue::Vector(xs) => Value::Array(xs.iter().map(|x| json!(num(*x))).collect()),
    }
}

fn config_json(c: &RunConfig) -> Value {
    json!({
        "command": c.command.as_str(),
        "nome_p": num(c.nome_p),
        "nome_q": num(c.nome_q),
        "n": c.n,
        "seed": c.seed,
        "draws": c.draws,
        "grid_n": c.grid_n,
        "max_grid_n": c.max_grid_n,
        "rel_tol": num(c.rel_tol),
        "format": c.format.to_string(),
        "point": c.point.map(complex),
    })
}

fn draw_json(d: &DrawRecord) -> Value {
    let params: Map<String, Value> = d.params.iter().map(|(k, v)| (k.clone(), param(v))).collect();
    let components: Map<String, Value> = d
        .components
        .iter()
        .map(|(k, v)| (k.clone(), json!(num(*v))))
        .collect();
    json!({
        "index": d.index,
        "params": params,
        "components": components,
        "residual": num(d.residual),
        "grid": d.grid,
        "est_rel_err": num(d.est_rel_err),
        "converged": d.converged,
        "error": d.error,
        WALL_TIME_FIELD: num(d.wall_time_s),
    })
}

fn summary_json(s: &Summary) -> Value {
    json!({
        "draws": s.draws,
        "failures": s.failures,
        "max_residual": num(s.max_residual),
        "median_residual": num(s.median_residual),
        "pass": s.pass,
    })
}

pub fn to_json(report: &VerificationReport) -> String {
    let value = json!({
        "config": config_json(&report.config),
        "draws": report.draws.iter().map(draw_json).collect::<Vec<_>>(),
        "summary": summary_json(&report.summary),
    });
    let mut out = serde_json::to_string_pretty(&value).expect("report values are always serializable");
    out.push('\n');
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn flatten(name: &str, v: &ParamValue, out: &mut Vec<(String, String)>) {
    match v {
        ParamValue::Real(x) => out.push((name.to_string(), num(*x))),
        ParamValue::Complex(z) => {
            out.push((format!("{name}_re"), num(z.re)));
            out.push((format!("{name}_im"), num(z.im)));
        }
        ParamValue::Vector(xs) => {
            for (j, x) in xs.iter().enumerate() {
                out.push((format!("{name}_{}", j + 1), num(*x)));
            }
        }
    }
}

fn csv_row(d: &DrawRecord) -> Vec<(String, String)> {
    let mut row = vec![
        ("index".to_string(), d.index.to_string()),
        ("residual".to_string(), num(d.residual)),
        ("grid".to_string(), d.grid.to_string()),
        ("est_rel_err".to_string(), num(d.est_rel_err)),
        ("converged".to_string(), d.converged.to_string()),
        ("error".to_string(), d.error.clone().unwrap_or_default()),
        (WALL_TIME_FIELD.to_string(), num(d.wall_time_s)),
    ];
    for (k, v) in &d.components {
        row.push((k.clone(), num(*v)));
    }
    for (k, v) in &d.params {
        flatten(k, v, &mut row);
    }
    row
}

/// One line per draw. Columns are the union of all draws' fields in
/// first-seen order; a draw that failed leaves its parameter columns empty.
pub fn to_csv(report: &VerificationReport) -> String {
    let rows: Vec<Vec<(String, String)>> = report.draws.iter().map(csv_row).collect();
    let mut header: Vec<String> = Vec::new();
    for row in &rows {
        for (k, _) in row {
            if !header.contains(k) {
                header.push(k.clone());
            }
        }
    }
    let mut out = header.iter().map(|h| csv_field(h)).collect::<Vec<_>>().join(",");
    out.push('\n');
    for row in &rows {
        let line: Vec<String> = header
            .iter()
            .map(|h| {
                row.iter()
                    .find(|(k, _)| k == h)
                    .map(|(_, v)| csv_field(v))
                    .unwrap_or_default()
            })
            .collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
