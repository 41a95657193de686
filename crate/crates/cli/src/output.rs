//! JSON and CSV writers. Object keys are emitted in sorted order and floats in
//! shortest round-trip form, so identical inputs give identical bytes.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use fock_core::C64;
use serde_json::{json, Value};

pub fn complex(z: C64) -> Value {
    json!([real(z.re), real(z.im)])
}

pub fn complex_list(zs: &[C64]) -> Value {
    Value::Array(zs.iter().map(|z| complex(*z)).collect())
}

/// Non-finite values become `null`.
pub fn real(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

pub struct Meta<'a> {
    pub t: f64,
    pub n: usize,
    pub degree: usize,
    pub command: &'a str,
}

pub fn document(meta: &Meta<'_>, data: Value) -> Value {
    json!({
        "meta": {
            "t": real(meta.t),
            "n": meta.n,
            "degree": meta.degree,
            "command": meta.command,
            "version": env!("CARGO_PKG_VERSION"),
        },
        "data": data,
    })
}

/// Writes `doc` to `out`, or to stdout when `out` is `None`.
pub fn emit(doc: &Value, out: Option<&Path>) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(doc).map_err(io::Error::other)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

/// `radius,value` rows next to `out`, with the `.csv` extension.
pub fn emit_curve_csv(curve: &[(f64, f64)], out: &Path) -> io::Result<()> {
    let mut text = String::from("radius,value\n");
    for (r, v) in curve {
        text.push_str(&format!("{r:?},{v:?}\n"));
    }
    fs::write(out.with_extension("csv"), text)
}
