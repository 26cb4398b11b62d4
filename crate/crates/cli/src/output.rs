//! Tabular output with a metadata header, as CSV or JSON.

use std::io::{self, Write};

use serde_json::{json, Map, Value};

use crate::config::Format;

/// A numeric table plus everything needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
    /// Results derived from the table (classification, tongue summary).
    pub summary: Vec<(String, String)>,
    /// One entry per failed item; emitted as diagnostic rows.
    pub diagnostics: Vec<String>,
}

/// 17 significant digits; non-finite values as `nan`, `inf`, `-inf`.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn write_csv(table: &Table, w: &mut dyn Write) -> io::Result<()> {
    for (k, v) in &table.metadata {
        write!(w, "# {k} = {v}\n")?;
    }
    write!(w, "{}\n", table.columns.join(","))?;
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|&x| format_number(x)).collect();
        write!(w, "{}\n", cells.join(","))?;
    }
    for (k, v) in &table.summary {
        write!(w, "# {k} = {v}\n")?;
    }
    for d in &table.diagnostics {
        write!(w, "# error = {d}\n")?;
    }
    Ok(())
}

fn scalar(v: &str) -> Value {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => json!(x),
        _ => json!(v),
    }
}

fn object(pairs: &[(String, String)]) -> Value {
    Value::Object(pairs.iter().map(|(k, v)| (k.clone(), scalar(v))).collect::<Map<_, _>>())
}

fn write_json(table: &Table, w: &mut dyn Write) -> io::Result<()> {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| Value::Array(row.iter().map(|&x| if x.is_finite() { json!(x) } else { Value::Null }).collect()))
        .collect();
    let doc = json!({
        "metadata": object(&table.metadata),
        "columns": table.columns,
        "rows": rows,
        "summary": object(&table.summary),
        "errors": table.diagnostics,
    });
    serde_json::to_writer_pretty(&mut *w, &doc)?;
    w.write_all(b"\n")
}

pub fn write_table(table: &Table, format: Format, w: &mut dyn Write) -> io::Result<()> {
    match format {
        Format::Csv => write_csv(table, w),
        Format::Json => write_json(table, w),
    }
}
