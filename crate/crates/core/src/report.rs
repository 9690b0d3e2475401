//! Deterministic report emission: an insertion-ordered JSON value with fixed
//! float formatting (17 significant digits) and CSV sweeps with the column
//! contract `k,re,im,err`. Identical inputs produce byte-identical output.

use num_complex::Complex64;

use crate::oscint::{AsymptoticSeries, KSweep};

/// Formats a float with 17 significant digits, stable across runs.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        // Collapse −0 so equal values serialize identically.
        return "0.0000000000000000e0".to_string();
    }
    format!("{:.16e}", x)
}

/// A JSON value whose object fields keep insertion order.
#[derive(Debug, Clone)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(String, Json)>),
}

impl Json {
    pub fn obj() -> Self {
        Json::Obj(Vec::new())
    }

    pub fn push(&mut self, key: &str, value: Json) -> &mut Self {
        match self {
            Json::Obj(fields) => fields.push((key.to_string(), value)),
            _ => panic!("push on non-object"),
        }
        self
    }

    pub fn write(&self, out: &mut String) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(i) => out.push_str(&i.to_string()),
            Json::Num(x) => out.push_str(&fmt_float(*x)),
            Json::Str(s) => {
                out.push('"');
                for ch in s.chars() {
                    match ch {
                        '"' => out.push_str("\\\""),
                        '\\' => out.push_str("\\\\"),
                        '\n' => out.push_str("\\n"),
                        '\r' => out.push_str("\\r"),
                        '\t' => out.push_str("\\t"),
                        c if (c as u32) < 0x20 => {
                            out.push_str(&format!("\\u{:04x}", c as u32));
                        }
                        c => out.push(c),
                    }
                }
                out.push('"');
            }
            Json::Arr(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    item.write(out);
                }
                out.push(']');
            }
            Json::Obj(fields) => {
                out.push('{');
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    Json::Str(k.clone()).write(out);
                    out.push(':');
                    v.write(out);
                }
                out.push('}');
            }
        }
    }

    /// Serializes with a trailing LF.
    pub fn to_string_lf(&self) -> String {
        let mut s = String::new();
        self.write(&mut s);
        s.push('\n');
        s
    }
}

pub fn json_complex(v: Complex64) -> Json {
    let mut o = Json::obj();
    o.push("re", Json::Num(v.re));
    o.push("im", Json::Num(v.im));
    o
}

/// CSV serialization of a sweep: header `k,re,im,err`, LF endings.
pub fn sweep_to_csv(sweep: &KSweep) -> String {
    let mut out = String::from("k,re,im,err\n");
    for i in 0..sweep.ks.len() {
        out.push_str(&fmt_float(sweep.ks[i]));
        out.push(',');
        out.push_str(&fmt_float(sweep.values[i].re));
        out.push(',');
        out.push_str(&fmt_float(sweep.values[i].im));
        out.push(',');
        out.push_str(&fmt_float(sweep.errors[i]));
        out.push('\n');
    }
    out
}

/// Parses a sweep CSV produced by `sweep_to_csv` (used by the warm cache).
pub fn sweep_from_csv(text: &str, phase_value_at_max: Complex64) -> Option<KSweep> {
    let mut ks = Vec::new();
    let mut values = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != "k,re,im,err" {
                return None;
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let k: f64 = parts.next()?.parse().ok()?;
        let re: f64 = parts.next()?.parse().ok()?;
        let im: f64 = parts.next()?.parse().ok()?;
        let err: f64 = parts.next()?.parse().ok()?;
        ks.push(k);
        values.push(Complex64::new(re, im));
        errors.push(err);
    }
    KSweep::new(ks, values, errors, phase_value_at_max).ok()
}

/// The series JSON of the external interface:
/// {"terms": [{"alpha", "beta", "re", "im", "stderr"}...], "residual": ...}.
pub fn series_to_json(series: &AsymptoticSeries) -> Json {
    let mut terms = Vec::new();
    for t in &series.terms {
        let mut o = Json::obj();
        o.push("alpha", Json::Num(t.alpha));
        o.push("beta", Json::Int(t.beta as i64));
        o.push("re", Json::Num(t.coeff.re));
        o.push("im", Json::Num(t.coeff.im));
        o.push("stderr", Json::Num(t.stderr));
        terms.push(o);
    }
    let mut root = Json::obj();
    root.push("terms", Json::Arr(terms));
    root.push("residual", Json::Num(series.residual));
    root
}
