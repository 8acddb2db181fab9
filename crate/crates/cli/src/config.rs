//! Problem descriptions: JSON parsing, validation and canonical serialization.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use asc_core::geometry::{Geometry, MAX_DIM};
use asc_jets::{parse, ExprAst};
use serde_json::{json, Map, Value};

use crate::error::CliError;

/// Top-level keys accepted in a config file.
pub const CONFIG_KEYS: [&str; 8] =
    ["dimension", "jet_order", "metric", "defining_function", "true_scale", "points", "tasks", "tolerances"];

/// An expression together with the text it was compiled from.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    pub source: String,
    pub ast: ExprAst,
}

impl Expression {
    pub fn compile(source: &str, path: &str, dim: usize) -> Result<Self, CliError> {
        let ast = parse(source).map_err(|source| CliError::Expression { path: path.into(), source })?;
        if ast.arity() > dim {
            return Err(CliError::schema(path, format!("uses x{} but the dimension is {dim}", ast.arity())));
        }
        Ok(Self { source: source.to_string(), ast })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricPreset {
    Euclidean,
    /// `Ω² δ`.
    ConformallyFlat { omega: Expression },
    /// Row-major component matrix.
    Explicit { components: Vec<Vec<Expression>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    pub preset: MetricPreset,
    /// Optional extra factor: the metric used is `Ω² g_preset`.
    pub conformal_factor: Option<Expression>,
}

impl MetricSpec {
    pub fn build(&self, dim: usize) -> Result<Geometry, CliError> {
        let base = match &self.preset {
            MetricPreset::Euclidean => Geometry::euclidean(dim),
            MetricPreset::ConformallyFlat { omega } => Geometry::conformally_flat(dim, omega.ast.clone()),
            MetricPreset::Explicit { components } => {
                Geometry::explicit(dim, components.iter().flatten().map(|e| e.ast.clone()).collect())
            }
        }
        .map_err(CliError::Geometry)?;
        Ok(match &self.conformal_factor {
            Some(f) => base.conformal_rescale(&f.ast),
            None => base,
        })
    }

    pub fn describe(&self) -> String {
        let base = match &self.preset {
            MetricPreset::Euclidean => "euclidean".to_string(),
            MetricPreset::ConformallyFlat { omega } => format!("conformally_flat({})", omega.source),
            MetricPreset::Explicit { .. } => "explicit".to_string(),
        };
        match &self.conformal_factor {
            Some(f) => format!("({})^2 * {base}", f.source),
            None => base,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Task {
    Invariants,
    Identities,
    Recursion,
    Obstruction,
    ClosedForms,
    Laplacians,
    LogTerm,
    Linearize,
    Holographic,
}

impl Task {
    pub const ALL: [Task; 9] = [
        Task::Invariants,
        Task::Identities,
        Task::Recursion,
        Task::Obstruction,
        Task::ClosedForms,
        Task::Laplacians,
        Task::LogTerm,
        Task::Linearize,
        Task::Holographic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Invariants => "invariants",
            Task::Identities => "identities",
            Task::Recursion => "recursion",
            Task::Obstruction => "obstruction",
            Task::ClosedForms => "closed_forms",
            Task::Laplacians => "laplacians",
            Task::LogTerm => "log_term",
            Task::Linearize => "linearize",
            Task::Holographic => "holographic",
        }
    }

    /// Tolerance applied to the task's residuals when the config gives none.
    pub fn default_tolerance(self) -> f64 {
        match self {
            Task::Identities | Task::Laplacians => 1e-8,
            Task::Recursion => 1e-9,
            Task::ClosedForms => 1e-7,
            Task::LogTerm => 1e-6,
            Task::Linearize => 1e-4,
            Task::Invariants | Task::Obstruction | Task::Holographic => 1e-9,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Task::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| {
            let names: Vec<_> = Task::ALL.iter().map(|t| t.name()).collect();
            format!("unknown task '{s}', expected one of {}", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub dimension: usize,
    pub jet_order: Option<usize>,
    pub metric: MetricSpec,
    pub defining_function: Expression,
    pub true_scale: Option<Expression>,
    pub points: Vec<Vec<f64>>,
    pub tasks: Vec<Task>,
    pub tolerances: BTreeMap<Task, f64>,
}

impl ProblemConfig {
    pub fn default_jet_order(dim: usize) -> usize {
        2 * dim + 4
    }

    pub fn effective_jet_order(&self) -> usize {
        self.jet_order.unwrap_or_else(|| Self::default_jet_order(self.dimension))
    }

    pub fn tolerance(&self, task: Task) -> f64 {
        self.tolerances.get(&task).copied().unwrap_or_else(|| task.default_tolerance())
    }

    pub fn true_scale_source(&self) -> &str {
        self.true_scale.as_ref().map_or("1", |e| e.source.as_str())
    }

    /// Canonical JSON form; `parse_config` of its text reproduces `self`.
    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("dimension".into(), json!(self.dimension));
        if let Some(k) = self.jet_order {
            obj.insert("jet_order".into(), json!(k));
        }
        obj.insert("metric".into(), metric_to_json(&self.metric));
        obj.insert("defining_function".into(), json!(self.defining_function.source));
        if let Some(t) = &self.true_scale {
            obj.insert("true_scale".into(), json!(t.source));
        }
        obj.insert("points".into(), json!(self.points));
        obj.insert("tasks".into(), json!(self.tasks.iter().map(|t| t.name()).collect::<Vec<_>>()));
        if !self.tolerances.is_empty() {
            let tol: Map<String, Value> = self.tolerances.iter().map(|(t, v)| (t.name().to_string(), json!(v))).collect();
            obj.insert("tolerances".into(), Value::Object(tol));
        }
        Value::Object(obj)
    }
}

fn metric_to_json(m: &MetricSpec) -> Value {
    let mut obj = Map::new();
    match &m.preset {
        MetricPreset::Euclidean if m.conformal_factor.is_none() => return json!("euclidean"),
        MetricPreset::Euclidean => {
            obj.insert("preset".into(), json!("euclidean"));
        }
        MetricPreset::ConformallyFlat { omega } => {
            obj.insert("preset".into(), json!("conformally_flat"));
            obj.insert("omega".into(), json!(omega.source));
        }
        MetricPreset::Explicit { components } => {
            obj.insert("preset".into(), json!("explicit"));
            let rows: Vec<Vec<&str>> =
                components.iter().map(|r| r.iter().map(|e| e.source.as_str()).collect()).collect();
            obj.insert("components".into(), json!(rows));
        }
    }
    if let Some(f) = &m.conformal_factor {
        obj.insert("conformal_factor".into(), json!(f.source));
    }
    Value::Object(obj)
}

fn expect_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, CliError> {
    v.as_object().ok_or_else(|| CliError::schema(path, "expected an object"))
}

fn expect_str<'a>(v: &'a Value, path: &str) -> Result<&'a str, CliError> {
    v.as_str().ok_or_else(|| CliError::schema(path, "expected a string"))
}

fn expect_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, CliError> {
    v.as_array().ok_or_else(|| CliError::schema(path, "expected an array"))
}

fn expect_uint(v: &Value, path: &str) -> Result<usize, CliError> {
    v.as_u64()
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| CliError::schema(path, "expected a non-negative integer"))
}

fn expect_f64(v: &Value, path: &str) -> Result<f64, CliError> {
    v.as_f64().filter(|x| x.is_finite()).ok_or_else(|| CliError::schema(path, "expected a finite number"))
}

fn reject_unknown(obj: &Map<String, Value>, allowed: &[&str], path: &str) -> Result<(), CliError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(CliError::schema(format!("{path}.{k}"), format!("unknown key, expected one of {}", allowed.join(", ")))),
        None => Ok(()),
    }
}

fn required<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, CliError> {
    obj.get(key).ok_or_else(|| CliError::schema(format!("{path}.{key}"), "missing required key"))
}

fn parse_metric(v: &Value, dim: usize) -> Result<MetricSpec, CliError> {
    let path = "$.metric";
    if let Some(name) = v.as_str() {
        return match name {
            "euclidean" => Ok(MetricSpec { preset: MetricPreset::Euclidean, conformal_factor: None }),
            "conformally_flat" | "explicit" => {
                Err(CliError::schema(path, format!("preset '{name}' needs an object with its parameters")))
            }
            other => Err(CliError::schema(path, format!("unknown metric preset '{other}'"))),
        };
    }
    let obj = expect_object(v, path)?;
    reject_unknown(obj, &["preset", "omega", "components", "conformal_factor"], path)?;
    let preset_name = expect_str(required(obj, "preset", path)?, &format!("{path}.preset"))?;
    let forbid = |key: &str| match obj.get(key) {
        Some(_) => Err(CliError::schema(format!("{path}.{key}"), format!("not used by preset '{preset_name}'"))),
        None => Ok(()),
    };
    let preset = match preset_name {
        "euclidean" => {
            forbid("omega")?;
            forbid("components")?;
            MetricPreset::Euclidean
        }
        "conformally_flat" => {
            forbid("components")?;
            let p = format!("{path}.omega");
            MetricPreset::ConformallyFlat { omega: Expression::compile(expect_str(required(obj, "omega", path)?, &p)?, &p, dim)? }
        }
        "explicit" => {
            forbid("omega")?;
            let p = format!("{path}.components");
            let rows = expect_array(required(obj, "components", path)?, &p)?;
            if rows.len() != dim {
                return Err(CliError::schema(&p, format!("expected {dim} rows, got {}", rows.len())));
            }
            let mut components = Vec::with_capacity(dim);
            for (i, row) in rows.iter().enumerate() {
                let rp = format!("{p}[{i}]");
                let row = expect_array(row, &rp)?;
                if row.len() != dim {
                    return Err(CliError::schema(&rp, format!("expected {dim} entries, got {}", row.len())));
                }
                let exprs = row
                    .iter()
                    .enumerate()
                    .map(|(j, e)| {
                        let ep = format!("{rp}[{j}]");
                        Expression::compile(expect_str(e, &ep)?, &ep, dim)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                components.push(exprs);
            }
            for i in 0..dim {
                for j in 0..i {
                    if components[i][j].ast != components[j][i].ast {
                        return Err(CliError::schema(format!("{p}[{i}][{j}]"), format!("metric must be symmetric: differs from [{j}][{i}]")));
                    }
                }
            }
            MetricPreset::Explicit { components }
        }
        other => return Err(CliError::schema(format!("{path}.preset"), format!("unknown metric preset '{other}'"))),
    };
    let conformal_factor = match obj.get("conformal_factor") {
        Some(f) => {
            let p = format!("{path}.conformal_factor");
            Some(Expression::compile(expect_str(f, &p)?, &p, dim)?)
        }
        None => None,
    };
    Ok(MetricSpec { preset, conformal_factor })
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<ProblemConfig, CliError> {
    let root: Value = serde_json::from_str(text)?;
    let obj = expect_object(&root, "$")?;
    reject_unknown(obj, &CONFIG_KEYS, "$")?;

    let dimension = expect_uint(required(obj, "dimension", "$")?, "$.dimension")?;
    if dimension < 3 {
        return Err(CliError::schema("$.dimension", format!("dimension d >= 3 is required, got {dimension}")));
    }
    if dimension > MAX_DIM {
        return Err(CliError::schema("$.dimension", format!("dimension is limited to {MAX_DIM}, got {dimension}")));
    }
    let jet_order = obj.get("jet_order").map(|v| expect_uint(v, "$.jet_order")).transpose()?;
    let metric = parse_metric(required(obj, "metric", "$")?, dimension)?;
    let defining_function = Expression::compile(
        expect_str(required(obj, "defining_function", "$")?, "$.defining_function")?,
        "$.defining_function",
        dimension,
    )?;
    let true_scale = obj
        .get("true_scale")
        .map(|v| Expression::compile(expect_str(v, "$.true_scale")?, "$.true_scale", dimension))
        .transpose()?;

    let mut points = Vec::new();
    for (i, p) in expect_array(required(obj, "points", "$")?, "$.points")?.iter().enumerate() {
        let path = format!("$.points[{i}]");
        let coords = expect_array(p, &path)?;
        if coords.len() != dimension {
            return Err(CliError::schema(&path, format!("expected {dimension} coordinates, got {}", coords.len())));
        }
        points.push(coords.iter().enumerate().map(|(j, c)| expect_f64(c, &format!("{path}[{j}]"))).collect::<Result<Vec<_>, _>>()?);
    }
    if points.is_empty() {
        return Err(CliError::schema("$.points", "at least one point is required"));
    }

    let mut tasks = Vec::new();
    for (i, t) in expect_array(required(obj, "tasks", "$")?, "$.tasks")?.iter().enumerate() {
        let path = format!("$.tasks[{i}]");
        let task: Task = expect_str(t, &path)?.parse().map_err(|m| CliError::schema(&path, m))?;
        if tasks.contains(&task) {
            return Err(CliError::schema(&path, format!("task '{task}' listed twice")));
        }
        tasks.push(task);
    }
    if tasks.is_empty() {
        return Err(CliError::schema("$.tasks", "at least one task is required"));
    }

    let mut tolerances = BTreeMap::new();
    if let Some(v) = obj.get("tolerances") {
        for (k, tol) in expect_object(v, "$.tolerances")? {
            let path = format!("$.tolerances.{k}");
            let task: Task = k.parse().map_err(|m| CliError::schema(&path, m))?;
            let tol = expect_f64(tol, &path)?;
            if tol <= 0.0 {
                return Err(CliError::schema(&path, "tolerance must be positive"));
            }
            tolerances.insert(task, tol);
        }
    }

    Ok(ProblemConfig { dimension, jet_order, metric, defining_function, true_scale, points, tasks, tolerances })
}
