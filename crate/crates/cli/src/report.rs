//! Report structure and deterministic serialization.

use std::collections::BTreeMap;
use std::io;

use serde::ser::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Map, Value};

use crate::error::CliError;

/// A computed quantity labelled with its conformal weight and trivializing scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub weight: f64,
    pub scale: &'static str,
}

impl Quantity {
    pub fn to_json(&self) -> Value {
        json!({ "value": finite_or_null(self.value), "weight": self.weight, "scale": self.scale })
    }
}

/// A residual compared against its tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub residual: f64,
    pub tolerance: f64,
}

impl Residual {
    pub fn passes(&self) -> bool {
        self.residual.is_finite() && self.residual <= self.tolerance
    }

    pub fn to_json(&self) -> Value {
        json!({ "residual": finite_or_null(self.residual), "tolerance": self.tolerance, "pass": self.passes() })
    }
}

/// A task failure reported in place of its output.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskError {
    pub kind: String,
    pub message: String,
}

/// Everything computed at one input point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointReport {
    pub input: Vec<f64>,
    pub point: Option<Vec<f64>>,
    pub label: Option<String>,
    pub values: BTreeMap<String, Quantity>,
    pub residuals: BTreeMap<String, Residual>,
    pub errors: BTreeMap<String, TaskError>,
    pub warnings: Vec<String>,
}

impl PointReport {
    pub fn passes(&self) -> bool {
        self.errors.is_empty() && self.residuals.values().all(Residual::passes)
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("input".into(), json!(self.input));
        obj.insert("point".into(), json!(self.point));
        if let Some(l) = &self.label {
            obj.insert("case".into(), json!(l));
        }
        obj.insert("values".into(), Value::Object(self.values.iter().map(|(k, q)| (k.clone(), q.to_json())).collect()));
        obj.insert(
            "residuals".into(),
            Value::Object(self.residuals.iter().map(|(k, r)| (k.clone(), r.to_json())).collect()),
        );
        obj.insert(
            "errors".into(),
            Value::Object(
                self.errors.iter().map(|(k, e)| (k.clone(), json!({ "kind": e.kind, "message": e.message }))).collect(),
            ),
        );
        obj.insert("warnings".into(), json!(self.warnings));
        obj.insert("pass".into(), json!(self.passes()));
        Value::Object(obj)
    }
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// Full report: `{meta, per_point, pass}`.
pub fn report_json(meta: Value, points: &[PointReport]) -> Value {
    json!({
        "meta": meta,
        "per_point": points.iter().map(PointReport::to_json).collect::<Vec<_>>(),
        "pass": points.iter().all(PointReport::passes),
    })
}

/// Writes every float with 17 significant digits so reports are byte-stable.
struct SignificantDigits<'a>(PrettyFormatter<'a>);

impl Formatter for SignificantDigits<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", format_f64(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// `1.2345678901234567e-3` style: 17 significant digits, always an exponent.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty-printed JSON with fixed float formatting and sorted keys.
pub fn to_json_string(value: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SignificantDigits(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serializing a JSON value into memory cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON output is UTF-8")
}

/// One row per scalar value: `point_index,case,quantity,value,weight,scale`.
pub fn to_csv(points: &[PointReport]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Output(e.to_string());
    w.write_record(["point_index", "case", "quantity", "value", "weight", "scale"]).map_err(err)?;
    for (i, p) in points.iter().enumerate() {
        for (name, q) in &p.values {
            w.write_record([
                i.to_string(),
                p.label.clone().unwrap_or_default(),
                name.clone(),
                format_f64(q.value),
                format_f64(q.weight),
                q.scale.to_string(),
            ])
            .map_err(err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_use_seventeen_digits() {
        assert_eq!(format_f64(-1.0 / 12.0), "-8.3333333333333329e-2");
        assert_eq!(format_f64(4.0), "4.0000000000000000e0");
        let text = to_json_string(&json!({"b": 0.1, "a": [1, 2.5]}));
        assert!(text.contains("\"a\": [\n    1,\n    2.5000000000000000e0\n  ]"), "{text}");
        assert!(text.find("\"a\"").unwrap() < text.find("\"b\"").unwrap());
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["b"].as_f64(), Some(0.1));
    }

    #[test]
    fn point_pass_logic() {
        let mut p = PointReport::default();
        p.residuals.insert("a".into(), Residual { residual: 1e-10, tolerance: 1e-9 });
        assert!(p.passes());
        p.residuals.insert("b".into(), Residual { residual: f64::NAN, tolerance: 1e-9 });
        assert!(!p.passes());
        let json = p.to_json();
        assert_eq!(json["residuals"]["b"]["residual"], Value::Null);
    }

    #[test]
    fn csv_rows() {
        let mut p = PointReport::default();
        p.values.insert("obstruction".into(), Quantity { value: 0.5, weight: -3.0, scale: "g" });
        let text = to_csv(&[p]).unwrap();
        assert_eq!(text.lines().nth(1), Some("0,,obstruction,5.0000000000000000e-1,-3.0000000000000000e0,g"));
    }
}
