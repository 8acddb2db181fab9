//! Built-in battery over the surface catalog and the curved test metrics.

use asc_core::catalog::{catalog, curved_metric, Surface, CURVED_METRICS};
use serde_json::{json, Value};

use crate::config::{Expression, MetricPreset, MetricSpec, ProblemConfig, Task};
use crate::error::CliError;
use crate::report::{PointReport, Residual};
use crate::tasks::{config_hash, run, RunOptions};

/// Relative tolerance for catalog values with a closed form.
pub const KNOWN_VALUE_TOL: f64 = 1e-7;
const POINTS_PER_CASE: usize = 3;

pub struct VerifyOutput {
    pub meta: Value,
    pub points: Vec<PointReport>,
}

struct Case {
    label: String,
    config: ProblemConfig,
    known: Option<f64>,
}

fn expression(source: String, dim: usize) -> Result<Expression, CliError> {
    Expression::compile(&source, "verify", dim)
}

fn case(surface: &Surface, metric: MetricSpec, label: String, tasks: Vec<Task>, seed: u64) -> Result<Case, CliError> {
    let d = surface.dim();
    Ok(Case {
        label,
        known: matches!(metric.preset, MetricPreset::Euclidean).then(|| surface.known_obstruction()).flatten(),
        config: ProblemConfig {
            dimension: d,
            jet_order: None,
            metric,
            defining_function: expression(surface.defining_function().to_string(), d)?,
            true_scale: None,
            points: surface.sample_points(POINTS_PER_CASE, seed),
            tasks,
            tolerances: Default::default(),
        },
    })
}

fn cases(seed: u64) -> Result<Vec<Case>, CliError> {
    let euclid = MetricSpec { preset: MetricPreset::Euclidean, conformal_factor: None };
    let mut out = Vec::new();
    for s in catalog() {
        let tasks = vec![Task::Invariants, Task::Recursion, Task::Obstruction, Task::ClosedForms, Task::Laplacians];
        out.push(case(&s, euclid.clone(), s.name(), tasks, seed)?);
    }
    for name in CURVED_METRICS {
        for d in [3, 4] {
            let g = curved_metric(name, d).map_err(CliError::Geometry)?;
            let components = (0..d)
                .map(|a| (0..d).map(|b| expression(g.component(a, b).to_string(), d)).collect())
                .collect::<Result<Vec<Vec<_>>, _>>()?;
            let metric = MetricSpec { preset: MetricPreset::Explicit { components }, conformal_factor: None };
            let s = Surface::sphere(d, 1.0).map_err(CliError::Geometry)?;
            let tasks = vec![Task::Identities, Task::Recursion, Task::Obstruction, Task::Laplacians];
            out.push(case(&s, metric, format!("{} in {name}(d={d})", s.name()), tasks, seed)?);
        }
    }
    Ok(out)
}

/// Runs the built-in battery. Catalog entries with known values gain a
/// `known_obstruction` residual relative to the local curvature scale.
pub fn verify(opts: &RunOptions) -> Result<VerifyOutput, CliError> {
    let mut points = Vec::new();
    let mut summaries = Vec::new();
    for c in cases(opts.seed)? {
        let out = run(&c.config, opts)?;
        summaries.push(json!({
            "case": c.label,
            "config_sha256": config_hash(&c.config),
            "metric": c.config.metric.describe(),
            "defining_function": c.config.defining_function.source,
            "tasks": c.config.tasks.iter().map(|t| t.name()).collect::<Vec<_>>(),
        }));
        for mut p in out.points {
            p.label = Some(c.label.clone());
            if let (Some(known), Some(b)) = (c.known, p.values.get("obstruction").map(|q| q.value)) {
                let h = p.values.get("mean_curvature").map_or(0.0, |q| q.value.abs());
                let tf = p.values.get("trace_free_second_form_sq").map_or(0.0, |q| q.value.sqrt());
                let floor = h.max(tf).powi(c.config.dimension as i32);
                let denom = known.abs().max(b.abs()).max(floor);
                let gap = if denom > 0.0 { (b - known).abs() / denom } else { (b - known).abs() };
                p.residuals.insert(
                    "known_obstruction".into(),
                    Residual { residual: gap, tolerance: KNOWN_VALUE_TOL * opts.tolerance_scale },
                );
            }
            points.push(p);
        }
    }
    let meta = json!({
        "tool": "asc",
        "version": env!("CARGO_PKG_VERSION"),
        "mode": "verify",
        "seed": opts.seed,
        "jet_order": opts.jet_order,
        "tolerance_scale": opts.tolerance_scale,
        "cases": summaries,
    });
    Ok(VerifyOutput { meta, points })
}

/// The surface presets and metric presets, with known values where they exist.
pub fn catalog_listing() -> Value {
    let surfaces: Vec<Value> = catalog()
        .iter()
        .map(|s| {
            json!({
                "name": s.name(),
                "dimension": s.dim(),
                "defining_function": s.defining_function().to_string(),
                "known_obstruction": s.known_obstruction(),
            })
        })
        .collect();
    json!({
        "surfaces": surfaces,
        "metric_presets": ["euclidean", "conformally_flat", "explicit"],
        "curved_test_metrics": CURVED_METRICS,
        "tasks": Task::ALL.iter().map(|t| t.name()).collect::<Vec<_>>(),
    })
}
