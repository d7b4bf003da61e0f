use std::io::Write;

use anyhow::{bail, Result};
use clap::ValueEnum;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// One object prints as itself, several as an array; CSV takes the keys of the first row.
pub fn emit(rows: &[Value], format: Format) -> Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match format {
        Format::Json => {
            let s = match rows {
                [one] => serde_json::to_string_pretty(one)?,
                many => serde_json::to_string_pretty(many)?,
            };
            writeln!(out, "{s}")?;
        }
        Format::Csv => {
            let Some(Value::Object(first)) = rows.first() else {
                bail!("nothing tabular to print");
            };
            let keys: Vec<&String> = first.keys().collect();
            let mut w = csv::Writer::from_writer(out);
            w.write_record(&keys)?;
            for r in rows {
                w.write_record(keys.iter().map(|k| cell(&r[k.as_str()])))?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// One compact JSON object per line.
pub fn emit_lines(rows: &[Value]) -> Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for r in rows {
        writeln!(out, "{}", serde_json::to_string(r)?)?;
    }
    Ok(())
}
