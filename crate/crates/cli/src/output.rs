use std::io::Write;
use std::path::Path;

use ctsfeat::format::NumberFormat;
use serde_json::Value;

use crate::error::CliResult;

/// A number as JSON: rounded to ten significant digits, or a hex-float
/// string in bit-exact mode. Non-finite values become `null`.
pub fn json_number(v: f64, format: NumberFormat) -> Value {
    if !v.is_finite() {
        return Value::Null;
    }
    match format {
        NumberFormat::BitExact => Value::String(format.format(v)),
        NumberFormat::Significant => format
            .format(v)
            .parse::<f64>()
            .ok()
            .and_then(serde_json::Number::from_f64)
            .map_or(Value::Null, Value::Number),
    }
}

pub fn json_numbers(values: &[f64], format: NumberFormat) -> Value {
    Value::Array(values.iter().map(|&v| json_number(v, format)).collect())
}

pub fn json_optional(v: Option<f64>, format: NumberFormat) -> Value {
    v.map_or(Value::Null, |x| json_number(x, format))
}

pub fn render_json(value: &Value) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes to `path`, or to standard output when absent or `-`.
pub fn emit(path: Option<&Path>, content: &str) -> CliResult<()> {
    match path {
        Some(p) if p != Path::new("-") => std::fs::write(p, content)?,
        _ => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}
