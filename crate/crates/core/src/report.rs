//! Text, CSV and JSON renderings. Every number leaving the crate through
//! these functions is rounded to [`SIG_DIGITS`] significant digits, so the
//! three formats agree digit for digit.

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::service::TableResponse;
use crate::sim::OCSummary;

pub const SIG_DIGITS: usize = 10;

/// `x` rounded to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .unwrap_or(x)
}

/// A number as it appears in every rendering.
pub fn format_number(x: f64) -> String {
    round_sig(x, SIG_DIGITS).to_string()
}

/// Rounds every float inside a JSON value.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().unwrap_or(0.0), SIG_DIGITS);
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

pub fn to_json_value<T: Serialize>(value: &T) -> Result<Value> {
    serde_json::to_value(value)
        .map(round_json)
        .map_err(|e| Error::param("output", e.to_string()))
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let v = to_json_value(value)?;
    serde_json::to_string_pretty(&v).map_err(|e| Error::param("output", e.to_string()))
}

fn cell(v: Option<u32>, na: &str) -> String {
    v.map_or_else(|| na.to_string(), |x| x.to_string())
}

/// Table in the three-row layout of a printed boundary table.
pub fn table_text(t: &TableResponse) -> String {
    let (lo, hi) = t.target_key;
    let conditional = t
        .context_n
        .iter()
        .enumerate()
        .any(|(j, &n)| j != t.current && n > 0);
    let mut labels = [
        if conditional {
            format!("Number treated at dose {}", t.current + 1)
        } else {
            "Number treated".to_string()
        },
        "Escalate if #DLT <=".to_string(),
        "De-escalate if #DLT >=".to_string(),
        "Eliminate if #DLT >=".to_string(),
    ];
    let width = labels.iter().map(|l| l.len()).max().unwrap_or(0);
    let rows: [Vec<String>; 4] = [
        t.rows.iter().map(|r| r.n.to_string()).collect(),
        t.rows.iter().map(|r| cell(r.escalate_le, "NA")).collect(),
        t.rows.iter().map(|r| cell(r.deescalate_ge, "NA")).collect(),
        t.rows.iter().map(|r| cell(r.eliminate_ge, "NA")).collect(),
    ];
    let mut out = format!(
        "{}: phi = {}, target key ({}, {}), dose {}\n",
        t.design,
        format_number(t.phi),
        format_number(lo),
        format_number(hi),
        t.current + 1
    );
    let others: Vec<String> = t
        .context_n
        .iter()
        .zip(&t.context_y)
        .enumerate()
        .filter(|&(j, _)| j != t.current)
        .map(|(j, (n, y))| format!("({y},{n}) at dose {}", j + 1))
        .collect();
    if conditional {
        out.push_str(&format!("Other-dose data (y,n): {}\n", others.join(", ")));
    }
    for (label, cells) in labels.iter_mut().zip(rows) {
        out.push_str(&format!("{label:<width$}"));
        for c in cells {
            out.push_str(&format!(" {c:>3}"));
        }
        out.push('\n');
    }
    out
}

fn csv_error(e: impl std::fmt::Display) -> Error {
    Error::param("output", e.to_string())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(csv_error)?;
    String::from_utf8(bytes).map_err(csv_error)
}

/// One row per sample size; missing boundaries are empty cells.
pub fn table_csv(t: &TableResponse) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "escalate_le", "deescalate_ge", "eliminate_ge"])
        .map_err(csv_error)?;
    for r in &t.rows {
        w.write_record([
            r.n.to_string(),
            cell(r.escalate_le, ""),
            cell(r.deescalate_ge, ""),
            cell(r.eliminate_ge, ""),
        ])
        .map_err(csv_error)?;
    }
    finish(w)
}

const OC_COLUMNS: [&str; 16] = [
    "scenario",
    "design",
    "phi",
    "replicates",
    "seed",
    "pcs",
    "pca",
    "above_mtd",
    "rod",
    "no_selection",
    "mean_n",
    "modification_rate",
    "inserted_mean",
    "inserted_sd",
    "inserted_selection",
    "inserted_allocation",
];

/// Operating characteristics, one row per scenario × design, with
/// `sel_k` and `alloc_k` columns for each prespecified dose `k`.
/// `preamble` lines are written first, each prefixed with `# `.
pub fn oc_csv(rows: &[OCSummary], preamble: &[String]) -> Result<String> {
    let levels = rows
        .iter()
        .map(|r| r.per_dose_selection.len())
        .max()
        .unwrap_or(0);
    let mut header: Vec<String> = OC_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((1..=levels).map(|k| format!("sel_{k}")));
    header.extend((1..=levels).map(|k| format!("alloc_{k}")));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).map_err(csv_error)?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, format_number);
    let padded = |v: &[f64]| {
        (0..levels)
            .map(|k| v.get(k).map_or_else(String::new, |&x| format_number(x)))
            .collect::<Vec<_>>()
    };
    for r in rows {
        let mut rec = vec![
            r.scenario.clone(),
            r.design.clone(),
            format_number(r.phi),
            r.replicates.to_string(),
            r.seed.to_string(),
            format_number(r.pcs),
            format_number(r.pca),
            format_number(r.above_mtd),
            format_number(r.rod),
            format_number(r.no_selection),
            format_number(r.mean_n),
            opt(r.modification_rate),
            opt(r.inserted_mean),
            opt(r.inserted_sd),
            opt(r.inserted_selection),
            opt(r.inserted_allocation),
        ];
        rec.extend(padded(&r.per_dose_selection));
        rec.extend(padded(&r.per_dose_allocation));
        w.write_record(&rec).map_err(csv_error)?;
    }
    let mut out: String = preamble.iter().map(|l| format!("# {l}\n")).collect();
    out.push_str(&finish(w)?);
    Ok(out)
}
