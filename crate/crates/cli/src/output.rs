//! Report rendering and output files.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use clap::ValueEnum;
use nalgebra::DMatrix;
use serde_json::Value;

use flowloc::localization::{format_number, rows_to_json, ReportRow, VerificationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

const CSV_HEADER: [&str; 18] = [
    "check",
    "family",
    "size",
    "conductance",
    "seed",
    "n",
    "m",
    "value",
    "bound",
    "margin",
    "relation",
    "rel_tol",
    "abs_tol",
    "ln_n",
    "pass",
    "status",
    "details",
    "note",
];

pub fn render_reports(reports: &[VerificationReport], format: Format) -> Result<String> {
    let rows: Vec<ReportRow> = reports.iter().map(VerificationReport::row).collect();
    render_rows(&rows, format)
}

pub fn render_rows(rows: &[ReportRow], format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(rows_to_json(rows)),
        Format::Csv => rows_to_csv(rows),
        Format::Table => Ok(rows_to_table(rows)),
    }
}

fn opt(s: &Option<String>) -> &str {
    s.as_deref().unwrap_or("")
}

fn details_field(row: &ReportRow) -> String {
    row.details
        .iter()
        .map(|(k, v)| format!("{k}={}", opt(v)))
        .collect::<Vec<_>>()
        .join(";")
}

fn rows_to_csv(rows: &[ReportRow]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(CSV_HEADER)?;
    for r in rows {
        writer.write_record([
            r.check.as_str(),
            &r.family,
            &r.size.to_string(),
            &r.conductance,
            &r.seed.to_string(),
            &r.n.to_string(),
            &r.m.to_string(),
            opt(&r.value),
            opt(&r.bound),
            opt(&r.margin),
            &r.relation,
            opt(&r.rel_tol),
            opt(&r.abs_tol),
            opt(&r.ln_n),
            if r.pass { "true" } else { "false" },
            &r.status,
            &details_field(r),
            &r.note,
        ])?;
    }
    let bytes = writer.into_inner().map_err(|e| anyhow!("csv writer: {e}"))?;
    Ok(String::from_utf8(bytes)?)
}

fn short(s: &Option<String>) -> String {
    match s.as_deref().and_then(|v| v.parse::<f64>().ok()) {
        Some(x) => format!("{x:.6e}"),
        None => "-".into(),
    }
}

fn rows_to_table(rows: &[ReportRow]) -> String {
    let mut out = format!(
        "{:<18} {:<16} {:>5} {:<10} {:>5} {:>6} {:>14} {:>14} {:>14}  {}\n",
        "check", "family", "size", "cond", "n", "m", "value", "bound", "margin", "status"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<18} {:<16} {:>5} {:<10} {:>5} {:>6} {:>14} {:>14} {:>14}  {}{}\n",
            r.check,
            r.family,
            r.size,
            r.conductance,
            r.n,
            r.m,
            short(&r.value),
            short(&r.bound),
            short(&r.margin),
            r.status,
            if r.note.is_empty() {
                String::new()
            } else {
                format!(" ({})", r.note)
            },
        ));
    }
    out
}

/// Reads rows back from a JSON report.
pub fn parse_json_report(text: &str) -> Result<Vec<ReportRow>> {
    let value: Value = serde_json::from_str(text)?;
    let items = value.as_array().ok_or_else(|| anyhow!("report must be a JSON array"))?;
    items
        .iter()
        .enumerate()
        .map(|(i, item)| parse_row(item).with_context(|| format!("row {i}")))
        .collect()
}

fn parse_row(v: &Value) -> Result<ReportRow> {
    let obj = v.as_object().ok_or_else(|| anyhow!("row is not an object"))?;
    let field = |k: &str| obj.get(k).ok_or_else(|| anyhow!("missing field `{k}`"));
    let text = |k: &str| -> Result<String> {
        field(k)?
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| anyhow!("field `{k}` is not a string"))
    };
    let count = |k: &str| -> Result<u64> { field(k)?.as_u64().ok_or_else(|| anyhow!("field `{k}` is not an integer")) };
    let number = |v: &Value| -> Result<Option<String>> {
        match v {
            Value::Null => Ok(None),
            Value::Number(x) => Ok(x.as_f64().and_then(format_number)),
            _ => Err(anyhow!("expected a number or null")),
        }
    };
    let num = |k: &str| -> Result<Option<String>> { number(field(k)?).with_context(|| format!("field `{k}`")) };
    let details = match obj.get("details") {
        Some(Value::Object(map)) => map
            .iter()
            .map(|(k, v)| Ok((k.clone(), number(v)?)))
            .collect::<Result<Vec<_>>>()?,
        _ => Vec::new(),
    };
    Ok(ReportRow {
        check: text("check")?,
        family: text("family")?,
        size: count("size")? as usize,
        conductance: text("conductance")?,
        seed: count("seed")?,
        n: count("n")? as usize,
        m: count("m")? as usize,
        value: num("value")?,
        bound: num("bound")?,
        margin: num("margin")?,
        relation: text("relation")?,
        rel_tol: num("rel_tol")?,
        abs_tol: num("abs_tol")?,
        ln_n: num("ln_n")?,
        pass: field("pass")?.as_bool().ok_or_else(|| anyhow!("field `pass` is not a boolean"))?,
        status: text("status")?,
        details,
        note: obj.get("note").and_then(Value::as_str).unwrap_or_default().to_string(),
    })
}

pub fn json_number(x: f64) -> String {
    format_number(x).unwrap_or_else(|| "null".into())
}

pub fn json_array(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|&x| json_number(x)).collect();
    format!("[{}]", items.join(", "))
}

/// Row-major nested arrays.
pub fn json_matrix(a: &DMatrix<f64>) -> String {
    let rows: Vec<String> = a
        .row_iter()
        .map(|row| json_array(&row.iter().copied().collect::<Vec<_>>()))
        .collect();
    format!("[\n    {}\n  ]", rows.join(",\n    "))
}

/// A JSON object from pre-rendered values, in the given key order.
pub fn json_object(fields: &[(String, String)]) -> String {
    let body: Vec<String> = fields
        .iter()
        .map(|(k, v)| format!("  {}: {v}", serde_json::to_string(k).expect("string keys serialize")))
        .collect();
    format!("{{\n{}\n}}\n", body.join(",\n"))
}

/// Writes `content` to `path` atomically (temporary file, then rename), or
/// to stdout when no path is given.
pub fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    let Some(path) = path else {
        let mut stdout = std::io::stdout().lock();
        stdout.write_all(content.as_bytes())?;
        return Ok(stdout.flush()?);
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let file_name = path
        .file_name()
        .ok_or_else(|| anyhow!("output path {} has no file name", path.display()))?;
    let tmp = dir.join(format!(".{}.tmp{}", file_name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, content).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("moving output into {}", path.display()))?;
    Ok(())
}
