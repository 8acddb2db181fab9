//! Executes the tasks of a config at every point and assembles the report.

use std::collections::BTreeMap;

use asc_core::geometry::Geometry;
use asc_core::hypersurface::HypersurfaceContext;
use asc_core::laplacians::{extrinsic_laplacian, obstruction_holographic, robin_operator, tangentiality_check, OperatorHandle};
use asc_core::tensor::TensorValue;
use asc_core::tractor::identities::{algebraic_suite, thomas_d_covariance, RandomFields};
use asc_core::yamabe::{
    conformal_unit_density, flat_closed_form_d4, linearized_obstruction_probe, log_coefficient_probe, obstruction_density,
    willmore_closed_form_d3, RecursionTrace,
};
use asc_jets::{lift, parse, ExprAst, ExprError, JetError};
use rayon::prelude::*;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{ProblemConfig, Task};
use crate::error::{CliError, ExitStatus};
use crate::project::{project_to_surface, PROJECTION_TOL};
use crate::report::{to_json_string, PointReport, Quantity, Residual, TaskError};

/// Conformal factor used for the covariance check of the Thomas D-operator.
pub const COVARIANCE_FACTOR: &str = "exp(0.3*x1 - 0.2*x2^2)";
/// Steps of the linearization probe, extrapolated to zero.
pub const LINEARIZATION_STEPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
/// Ratio of the linearized obstruction to the bilaplacian of the perturbation.
pub const LINEARIZATION_LIMIT: f64 = -1.0 / 6.0;
/// Log coefficient over the obstruction density in dimension three.
pub const LOG_RATIO_D3: f64 = 3.0 / 8.0;

const G: &str = "g";

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub jet_order: Option<usize>,
    pub tolerance_scale: f64,
    pub seed: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { jet_order: None, tolerance_scale: 1.0, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub meta: Value,
    pub points: Vec<PointReport>,
}

impl RunOutput {
    pub fn status(&self) -> ExitStatus {
        status_of(&self.points)
    }
}

pub fn status_of(points: &[PointReport]) -> ExitStatus {
    if points.iter().any(|p| !p.errors.is_empty()) {
        ExitStatus::NumericError
    } else if points.iter().all(PointReport::passes) {
        ExitStatus::Pass
    } else {
        ExitStatus::ResidualFailure
    }
}

/// Errors that mean "not available here" rather than "went wrong".
fn inapplicable(e: &asc_core::Error) -> bool {
    use asc_core::Error as E;
    matches!(e, E::WrongDimension { .. } | E::UnsupportedDimension { .. } | E::NotFlatScale(_) | E::NotDefined(_))
}

fn error_kind(e: &asc_core::Error) -> String {
    use asc_core::Error as E;
    match e {
        E::Jet(JetError::InsufficientOrder { .. }) | E::Expr(ExprError::Jet(JetError::InsufficientOrder { .. })) => {
            "InsufficientOrder".into()
        }
        other => {
            let dbg = format!("{other:?}");
            dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string()
        }
    }
}

struct PointRun<'a> {
    cfg: &'a ProblemConfig,
    geometry: &'a Geometry,
    order: usize,
    tol_scale: f64,
    report: PointReport,
}

impl PointRun<'_> {
    fn value(&mut self, name: impl Into<String>, value: f64, weight: f64) {
        self.report.values.insert(name.into(), Quantity { value, weight, scale: G });
    }

    fn residual(&mut self, task: Task, name: impl Into<String>, residual: f64) {
        let tolerance = self.cfg.tolerance(task) * self.tol_scale;
        self.report.residuals.insert(name.into(), Residual { residual, tolerance });
    }

    fn record_failure(&mut self, task: &str, e: asc_core::Error) {
        if inapplicable(&e) {
            self.report.warnings.push(format!("{task}: not available: {e}"));
        } else {
            self.report.errors.insert(task.to_string(), TaskError { kind: error_kind(&e), message: e.to_string() });
        }
    }
}

/// `|a − b|` relative to the largest of `|a|`, `|b|` and the curvature scale `κ^d`.
fn relative_gap(a: f64, b: f64, floor: f64) -> f64 {
    let denom = a.abs().max(b.abs()).max(floor);
    if denom > 0.0 {
        (a - b).abs() / denom
    } else {
        (a - b).abs()
    }
}

fn curvature_floor(ctx: &HypersurfaceContext) -> f64 {
    let d = ctx.dim() as i32;
    match ctx.fundamental_forms() {
        Ok(ff) => {
            let kappa = ff.mean.value().abs().max(ff.trace_free_norm_sq(ctx).sqrt()).max(ctx.pack().j().value().abs().sqrt());
            kappa.powi(d)
        }
        Err(_) => 0.0,
    }
}

type TaskResult = asc_core::Result<()>;

fn invariants(run: &mut PointRun, ctx: &HypersurfaceContext) -> TaskResult {
    let ff = ctx.fundamental_forms()?;
    run.value("mean_curvature", ff.mean.value(), -1.0);
    run.value("trace_free_second_form_sq", ff.trace_free_norm_sq(ctx), -2.0);
    run.value("J", ctx.pack().j().value(), -2.0);
    run.value("J_bar", ctx.intrinsic_curvature()?.jbar.value(), -2.0);
    Ok(())
}

fn identities(run: &mut PointRun, ctx: &HypersurfaceContext, fields: &mut RandomFields) -> TaskResult {
    let mut rep = ctx.identity_suite()?;
    rep.extend(algebraic_suite(ctx.pack(), fields)?);
    let omega = parse(COVARIANCE_FACTOR)?;
    let cov = thomas_d_covariance(run.geometry, &omega, ctx.point(), run.order.min(6), fields)?;
    rep.push("thomas_d_covariance", cov);
    for (name, r) in rep.entries {
        run.residual(Task::Identities, format!("identities.{name}"), r);
    }
    Ok(())
}

fn recursion(run: &mut PointRun, trace: &RecursionTrace) -> TaskResult {
    for step in &trace.steps {
        if let Some(a) = step.coefficient {
            run.value(format!("recursion.A_{}", step.k), a, -(step.k as f64));
        }
        run.residual(Task::Recursion, format!("recursion.step_{}", step.k), step.vanishing_residual);
    }
    Ok(())
}

fn closed_forms(run: &mut PointRun, ctx: &HypersurfaceContext, trace: &RecursionTrace) -> TaskResult {
    let d = ctx.dim();
    let cf = match d {
        3 => willmore_closed_form_d3(ctx)?,
        4 => flat_closed_form_d4(ctx)?,
        _ => return Err(asc_core::Error::UnsupportedDimension { got: d, max: 4 }),
    };
    run.value("closed_form", cf, -(d as f64));
    let gap = relative_gap(obstruction_density(trace), cf, curvature_floor(ctx));
    run.residual(Task::ClosedForms, "closed_form_agreement", gap);
    Ok(())
}

fn laplacians(run: &mut PointRun, ctx: &HypersurfaceContext, trace: &RecursionTrace, fields: &mut RandomFields) -> TaskResult {
    let d = ctx.dim();
    let pack = ctx.pack();
    let sample = (1..=d).map(|i| format!("x{i}^2")).collect::<Vec<_>>().join("+");
    let sample = lift(&parse(&sample)?, ctx.point(), pack.order())?;
    for k in 1..d {
        let op = OperatorHandle::new(trace.unit(), pack, k)?;
        let t = TensorValue::density(sample.clone(), op.weight(), pack.scale());
        run.value(format!("P{k}_sample"), extrinsic_laplacian(&op, &t)?.value(), op.weight() - k as f64);
        let value = 0.5 + fields.uniform(0.0, 1.0);
        let u = fields.jet_with_value(d, pack.order(), value);
        let u = TensorValue::density(u, op.weight() - 1.0, pack.scale());
        run.residual(Task::Laplacians, format!("tangentiality_P{k}"), tangentiality_check(&op, &u)?);
    }
    let tau = match &run.cfg.true_scale {
        Some(e) => e.ast.clone(),
        None => ExprAst::constant(1.0),
    };
    let t = TensorValue::density(lift(&tau, ctx.point(), pack.order())?, 1.0, pack.scale());
    let robin = robin_operator(ctx, trace, &t)?;
    run.value("robin_true_scale", robin.value, 0.0);
    run.residual(Task::Laplacians, "robin_consistency", robin.residual);
    Ok(())
}

fn log_term(run: &mut PointRun, ctx: &HypersurfaceContext) -> TaskResult {
    let d = ctx.dim();
    let tau = match &run.cfg.true_scale {
        Some(e) => e.ast.clone(),
        None => ExprAst::constant(1.0),
    };
    let probe = log_coefficient_probe(ctx, &tau)?;
    run.value("log_coefficient", probe.log_coefficient, -(d as f64));
    run.value("log_multiplier", probe.multiplier, 0.0);
    run.residual(Task::LogTerm, "log_part", probe.log_part_residual);
    if d == 3 {
        let gap = relative_gap(probe.log_coefficient, LOG_RATIO_D3 * probe.obstruction, curvature_floor(ctx));
        run.residual(Task::LogTerm, "log_coefficient_ratio", gap);
    }
    Ok(())
}

fn linearize(run: &mut PointRun, ctx: &HypersurfaceContext) -> TaskResult {
    let d = ctx.dim();
    if d != 3 {
        return Err(asc_core::Error::WrongDimension { expected: 3, got: d });
    }
    // The perturbation profile is read off a graph-style s = x3 − f(x1, x2).
    let s = &run.cfg.defining_function.ast;
    let f = ExprAst::constant(0.0) - s.substitute(&[ExprAst::var(0), ExprAst::var(1), ExprAst::constant(0.0)]);
    let p = ctx.point();
    let probe = linearized_obstruction_probe(&f, [p[0], p[1]], &LINEARIZATION_STEPS, run.order)?;
    run.value("linearization_ratio", probe.ratio, 0.0);
    run.value("linearization_bilaplacian", probe.bilaplacian, -4.0);
    run.residual(Task::Linearize, "linearization", (probe.ratio - LINEARIZATION_LIMIT).abs());
    Ok(())
}

fn holographic(run: &mut PointRun, ctx: &HypersurfaceContext, trace: Option<&RecursionTrace>) -> TaskResult {
    let h = obstruction_holographic(ctx)?;
    let d = ctx.dim() as f64;
    run.value("holographic", h.value, -d);
    run.value("holographic_alternate_extension", h.alternate_extension, -d);
    if let Some(t) = trace {
        run.value("holographic_minus_recursion", h.value - obstruction_density(t), -d);
    }
    run.report.warnings.push(format!("holographic: {}", h.warning));
    Ok(())
}

fn evaluate_point(cfg: &ProblemConfig, geometry: &Geometry, opts: &RunOptions, index: usize) -> PointReport {
    let input = cfg.points[index].clone();
    let mut run = PointRun {
        cfg,
        geometry,
        order: opts.jet_order.unwrap_or_else(|| cfg.effective_jet_order()),
        tol_scale: opts.tolerance_scale,
        report: PointReport { input: input.clone(), ..Default::default() },
    };
    let p = match project_to_surface(&input, &cfg.defining_function.ast, PROJECTION_TOL) {
        Ok(p) => p,
        Err(e) => {
            run.report.errors.insert("projection".into(), TaskError { kind: "ProjectionDiverged".into(), message: e.to_string() });
            return run.report;
        }
    };
    run.report.point = Some(p.clone());
    let ctx = match HypersurfaceContext::new(geometry, &cfg.defining_function.ast, &p, run.order) {
        Ok(c) => c,
        Err(e) => {
            run.record_failure("context", e);
            return run.report;
        }
    };
    let mut fields = RandomFields::new(opts.seed.wrapping_add(index as u64));
    let needs_trace = cfg.tasks.iter().any(|t| {
        matches!(t, Task::Recursion | Task::Obstruction | Task::ClosedForms | Task::Laplacians | Task::Holographic)
    });
    let trace = if needs_trace { Some(conformal_unit_density(&ctx)) } else { None };
    let trace_ok = trace.as_ref().and_then(|t| t.as_ref().ok());
    let d = cfg.dimension as f64;

    for &task in &cfg.tasks {
        let with_trace = |f: &mut dyn FnMut(&RecursionTrace) -> TaskResult| match &trace {
            Some(Ok(t)) => f(t),
            Some(Err(e)) => Err(e.clone()),
            None => unreachable!("trace is computed for every task that needs it"),
        };
        let outcome = match task {
            Task::Invariants => invariants(&mut run, &ctx),
            Task::Identities => identities(&mut run, &ctx, &mut fields),
            Task::Recursion => with_trace(&mut |t| recursion(&mut run, t)),
            Task::Obstruction => with_trace(&mut |t| {
                run.value("obstruction", obstruction_density(t), -d);
                Ok(())
            }),
            Task::ClosedForms => with_trace(&mut |t| closed_forms(&mut run, &ctx, t)),
            Task::Laplacians => with_trace(&mut |t| laplacians(&mut run, &ctx, t, &mut fields)),
            Task::LogTerm => log_term(&mut run, &ctx),
            Task::Linearize => linearize(&mut run, &ctx),
            Task::Holographic => holographic(&mut run, &ctx, trace_ok),
        };
        if let Err(e) = outcome {
            run.record_failure(task.name(), e);
        }
    }
    run.report
}

pub fn config_hash(cfg: &ProblemConfig) -> String {
    format!("{:x}", Sha256::digest(to_json_string(&cfg.to_json()).as_bytes()))
}

/// Runs every task of `cfg` at every point. Fails only on an unusable geometry.
pub fn run(cfg: &ProblemConfig, opts: &RunOptions) -> Result<RunOutput, CliError> {
    let geometry = cfg.metric.build(cfg.dimension)?;
    let order = opts.jet_order.unwrap_or_else(|| cfg.effective_jet_order());
    let points: Vec<PointReport> =
        (0..cfg.points.len()).into_par_iter().map(|i| evaluate_point(cfg, &geometry, opts, i)).collect();
    let tolerances: BTreeMap<&str, f64> =
        cfg.tasks.iter().map(|&t| (t.name(), cfg.tolerance(t) * opts.tolerance_scale)).collect();
    let meta = json!({
        "tool": "asc",
        "version": env!("CARGO_PKG_VERSION"),
        "config_sha256": config_hash(cfg),
        "dimension": cfg.dimension,
        "jet_order": order,
        "seed": opts.seed,
        "tolerance_scale": opts.tolerance_scale,
        "tolerances": tolerances,
        "tasks": cfg.tasks.iter().map(|t| t.name()).collect::<Vec<_>>(),
        "defining_function": cfg.defining_function.source,
        "scales": {
            G: { "metric": cfg.metric.describe(), "tag": geometry.scale_tag().to_string() },
            "tau": cfg.true_scale_source(),
        },
        "identity_covariance_factor": COVARIANCE_FACTOR,
    });
    Ok(RunOutput { meta, points })
}
