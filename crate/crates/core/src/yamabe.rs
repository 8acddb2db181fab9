//! Singular Yamabe recursion, the obstruction density and its oracles.

use asc_jets::{lift, ExprAst, Jet, JetError};

use crate::error::{Error, Result};
use crate::geometry::{laplacian, CurvaturePack, Geometry};
use crate::hypersurface::{transverse_remainders, FundamentalForms, HypersurfaceContext};
use crate::tensor::{multi_indices, ScaleTag, TensorValue};

/// Relative tolerance for coefficients that must vanish along `Σ`.
pub const VANISHING_TOL: f64 = 1e-9;

/// `S(σ) = |∇σ|² − (2/d) σ (Δσ + J σ)`, the squared length of the scale tractor.
pub fn s_functional(sigma: &Jet, pack: &CurvaturePack) -> Result<Jet> {
    let df = pack.dim() as f64;
    let grad = pack.gradient(sigma)?;
    let sq = pack.dot_lower(&grad, &grad);
    let lap = laplacian(&TensorValue::density(sigma.clone(), 1.0, pack.scale()), pack)?;
    let inner = lap.jet() + &(pack.j() * sigma);
    Ok(&sq - &(sigma * &inner).scale(2.0 / df))
}

/// Divides by the full jet of `|∇σ|`, so that `I² = 1 + O(σ)`.
pub fn normalize_defining_density(sigma: &Jet, pack: &CurvaturePack) -> Result<Jet> {
    let grad = pack.gradient(sigma)?;
    let sq = pack.dot_lower(&grad, &grad);
    if sq.value() <= 1e-24 {
        return Err(Error::DegenerateNormal);
    }
    Ok(sigma.with_zero_constant().mul_jet(&sq.sqrt()?.recip()?))
}

fn vanishing_scale(f: &Jet) -> f64 {
    VANISHING_TOL * f.max_abs().max(1.0)
}

/// Coefficient `A_k` of `I² − 1 = σ^k A_k`, after checking the lower orders vanish.
fn extract_coefficient(excess: &Jet, sigma: &Jet, k: usize) -> Result<(Jet, f64)> {
    let (rems, quotient) = transverse_remainders(excess, sigma, k)?;
    let worst = rems.iter().fold(0.0f64, |m, r| m.max(*r)) / excess.max_abs().max(1.0);
    if worst > VANISHING_TOL {
        return Err(Error::OrderMismatch(format!(
            "I^2 - 1 does not vanish to order {k}: residual {worst:e}"
        )));
    }
    Ok((quotient, worst))
}

/// One improvement step `σ′ = σ(1 + σ^k f_k)` with `f_k = −d A_k / (2(d − k)(k + 1))`.
pub fn improve_once(sigma: &Jet, k: usize, pack: &CurvaturePack) -> Result<Jet> {
    let d = pack.dim();
    if k == d {
        return Err(Error::CriticalOrder);
    }
    if k == 0 || k > d {
        return Err(Error::OrderMismatch(format!("improvement order {k} outside 1..{}", d - 1)));
    }
    let excess = s_functional(sigma, pack)?.add_scalar(-1.0);
    extract_coefficient(&excess, sigma, k)?;
    Ok(improvement(sigma, &excess, k, d))
}

fn improvement(sigma: &Jet, excess: &Jet, k: usize, d: usize) -> Jet {
    let c = -(d as f64) / (2.0 * (d - k) as f64 * (k + 1) as f64);
    sigma * &excess.scale(c).add_scalar(1.0)
}

/// One stage of the recursion.
#[derive(Debug, Clone)]
pub struct RecursionStep {
    pub k: usize,
    /// `σ̄_k`, weight 1.
    pub sigma: TensorValue,
    /// `I²_{σ̄_k}`, weight 0.
    pub i_squared: TensorValue,
    /// `A_k` at the base point (weight `−k`), the coefficient removed by this step.
    pub coefficient: Option<f64>,
    /// Largest transverse coefficient of `I²_{σ̄_k} − 1` through degree `k`,
    /// relative to the largest coefficient of that jet.
    pub vanishing_residual: f64,
}

/// The conformal unit defining density and the obstruction it leaves behind.
#[derive(Debug, Clone)]
pub struct RecursionTrace {
    pub dim: usize,
    pub scale: ScaleTag,
    pub steps: Vec<RecursionStep>,
    /// `B = (I²_{σ̄} − 1)/σ̄^d`, weight `−d`.
    pub b: TensorValue,
    /// Absolute transverse coefficients of `I²_{σ̄} − 1` below degree `d`; the
    /// last step's `vanishing_residual` is their relative maximum.
    pub unit_residuals: Vec<f64>,
}

impl RecursionTrace {
    pub fn unit(&self) -> &Jet {
        self.steps.last().expect("nonempty trace").sigma.jet()
    }

    pub fn unit_i_squared(&self) -> &Jet {
        self.steps.last().expect("nonempty trace").i_squared.jet()
    }

    pub fn max_unit_residual(&self) -> f64 {
        self.unit_residuals.iter().fold(0.0, |m, r| m.max(*r))
    }
}

/// Minimum jet order for the depth-`d` recursion plus `d` transverse divisions.
pub fn recursion_order(d: usize) -> usize {
    2 * d + 1
}

/// Runs the recursion `σ̄_k = σ̄_{k−1}[1 − (d/2)(I² − 1)/((d − k)(k + 1))]`.
pub fn conformal_unit_density(ctx: &HypersurfaceContext) -> Result<RecursionTrace> {
    conformal_unit_from_jet(ctx.defining(), ctx.pack())
}

/// The recursion started from an arbitrary defining jet in the scale of `pack`.
pub fn conformal_unit_from_jet(s: &Jet, pack: &CurvaturePack) -> Result<RecursionTrace> {
    let d = pack.dim();
    let needed = recursion_order(d);
    if pack.order() < needed {
        return Err(JetError::InsufficientOrder { needed, available: pack.order() }.into());
    }
    let scale = pack.scale();
    let mut sigma = normalize_defining_density(s, pack)?;
    let mut steps = Vec::with_capacity(d);
    let mut coefficient = None;
    for k in 0..d {
        let i2 = s_functional(&sigma, pack)?;
        let excess = i2.add_scalar(-1.0);
        let (quotient, residual) = if k + 1 < d {
            extract_coefficient(&excess, &sigma, k + 1)?
        } else {
            (excess.clone(), 0.0)
        };
        steps.push(RecursionStep {
            k,
            sigma: TensorValue::density(sigma.clone(), 1.0, scale),
            i_squared: TensorValue::density(i2, 0.0, scale),
            coefficient,
            vanishing_residual: residual,
        });
        if k + 1 < d {
            coefficient = Some(quotient.value());
            sigma = improvement(&sigma, &excess, k + 1, d);
        }
    }
    let excess = steps[d - 1].i_squared.jet().add_scalar(-1.0);
    let (unit_residuals, b) = transverse_remainders(&excess, &sigma, d)?;
    let last = steps.last_mut().expect("d >= 1");
    last.vanishing_residual = unit_residuals.iter().fold(0.0f64, |m, r| m.max(*r)) / excess.max_abs().max(1.0);
    Ok(RecursionTrace {
        dim: d,
        scale,
        steps,
        b: TensorValue::density(b, -(d as f64), scale),
        unit_residuals,
    })
}

/// `ℬ` at the base point, weight `−d` in the working scale.
pub fn obstruction_density(trace: &RecursionTrace) -> f64 {
    trace.b.value()
}

fn inverse_values(ctx: &HypersurfaceContext) -> Vec<f64> {
    ctx.induced_inverse().values()
}

/// Full contraction of two covariant tensors of equal rank with `ḡ^{-1}`.
fn contract_values(a: &TensorValue, b: &TensorValue, ginv: &[f64], d: usize) -> f64 {
    let r = a.rank();
    let (av, bv) = (a.values(), b.values());
    let mut acc = 0.0;
    for i in multi_indices(&vec![d; r]) {
        let x = av[a.offset(&i)];
        if x == 0.0 {
            continue;
        }
        for j in multi_indices(&vec![d; r]) {
            let w: f64 = i.iter().zip(&j).map(|(&p, &q)| ginv[p * d + q]).product();
            acc += x * w * bv[b.offset(&j)];
        }
    }
    acc
}

/// The surface formula `ℬ = −(1/3)(∇̄_a∇̄_b + H II̊_ab + P^⊤_ab) II̊^ab`.
pub fn willmore_closed_form_d3(ctx: &HypersurfaceContext) -> Result<f64> {
    let d = ctx.dim();
    if d != 3 {
        return Err(Error::WrongDimension { expected: 3, got: d });
    }
    let ff = ctx.fundamental_forms()?;
    let ginv = inverse_values(ctx);
    let dd = ctx.intrinsic_derivative(&ctx.intrinsic_derivative(&ff.trace_free)?)?;
    let ddv = dd.values();
    let mut div2 = 0.0;
    for i in multi_indices(&[d, d, d, d]) {
        div2 += ginv[i[0] * d + i[2]] * ginv[i[1] * d + i[3]] * ddv[dd.offset(&i)];
    }
    let h = ff.mean.value();
    let norm = ff.trace_free_norm_sq(ctx);
    let pt = contract_values(&ctx.pack().schouten, &ff.trace_free, &ginv, d);
    Ok(-(div2 + h * norm + pt) / 3.0)
}

/// The quartic formula for hypersurfaces in a flat four-dimensional scale.
pub fn flat_closed_form_d4(ctx: &HypersurfaceContext) -> Result<f64> {
    let d = ctx.dim();
    if d != 4 {
        return Err(Error::WrongDimension { expected: 4, got: d });
    }
    let pack = ctx.pack();
    let curv = pack.riemann.comps().iter().fold(0.0f64, |m, c| m.max(c.max_abs()));
    if curv > 1e-12 {
        return Err(Error::NotFlatScale(curv));
    }
    let ff = ctx.fundamental_forms()?;
    let ginv = inverse_values(ctx);
    let t = &ff.trace_free;
    let dt = ctx.intrinsic_derivative(t)?;
    let ddt = ctx.intrinsic_derivative(&dt)?;
    let grad_sq = contract_values(&dt, &dt, &ginv, d);
    let lap = TensorValue::from_fn(d, t.slots().to_vec(), 1.0, t.scale(), |i| {
        let mut acc = pack.constant(0.0);
        for c in 0..d {
            for e in 0..d {
                acc += &ddt.get(&[c, e, i[0], i[1]]).scale(ginv[c * d + e]);
            }
        }
        acc
    });
    let t_lap = contract_values(t, &lap, &ginv, d);
    let div: Vec<f64> = (0..d)
        .map(|a| {
            let mut acc = 0.0;
            for b in 0..d {
                for c in 0..d {
                    acc += ginv[b * d + c] * dt.get(&[c, a, b]).value();
                }
            }
            acc
        })
        .collect();
    let mut div_sq = 0.0;
    for a in 0..d {
        for e in 0..d {
            div_sq += div[a] * ginv[a * d + e] * div[e];
        }
    }
    let norm = ff.trace_free_norm_sq(ctx);
    let jbar = jbar_from_gauss(ctx, &ff);
    Ok((grad_sq + 2.0 * t_lap + 1.5 * div_sq - 2.0 * jbar * norm + norm * norm) / 6.0)
}

/// `J̄ = J − P(n̂, n̂) + ((d − 1)/2) H² − |II̊|²/(2(d − 2))` at the base point.
pub fn jbar_from_gauss(ctx: &HypersurfaceContext, ff: &FundamentalForms) -> f64 {
    let d = ctx.dim();
    let df = d as f64;
    let pack = ctx.pack();
    let n: Vec<f64> = ctx.normal_up().iter().map(Jet::value).collect();
    let mut pnn = 0.0;
    for a in 0..d {
        for b in 0..d {
            pnn += n[a] * n[b] * pack.schouten.get(&[a, b]).value();
        }
    }
    let h = ff.mean.value();
    pack.j().value() - pnn + 0.5 * (df - 1.0) * h * h - ff.trace_free_norm_sq(ctx) / (2.0 * (df - 2.0))
}

/// A finite series `Σ_j c_j u^j` in `u = log(σ/τ)` with jet coefficients.
///
/// Every coefficient with `j ≥ 1` must vanish along `Σ`, which keeps derivatives
/// of `u` (carrying `1/σ`) regular.
#[derive(Debug, Clone)]
struct LogSeries(Vec<Jet>);

struct LogFrame<'a> {
    sigma: &'a Jet,
    dsigma: Vec<Jet>,
    dlog_tau: Vec<Jet>,
}

impl LogSeries {
    fn add(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        let zero = self.0[0].zero_like();
        LogSeries((0..n).map(|j| self.0.get(j).unwrap_or(&zero) + other.0.get(j).unwrap_or(&zero)).collect())
    }

    fn scale(&self, c: f64) -> Self {
        LogSeries(self.0.iter().map(|x| x.scale(c)).collect())
    }

    fn mul(&self, other: &Self) -> Self {
        let zero = self.0[0].zero_like();
        let mut out = vec![zero; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                if !a.is_zero() && !b.is_zero() {
                    out[i + j] += &(a * b);
                }
            }
        }
        LogSeries(out)
    }

    fn mul_jet(&self, j: &Jet) -> Self {
        LogSeries(self.0.iter().map(|x| x * j).collect())
    }

    fn partial(&self, a: usize, frame: &LogFrame<'_>) -> Result<Self> {
        let mut out: Vec<Jet> = self.0.iter().map(|c| c.partial(a)).collect::<Result<_, _>>()?;
        for (j, c) in self.0.iter().enumerate().skip(1) {
            if c.is_zero() {
                continue;
            }
            let (q, rem) = c.div_vanishing(frame.sigma)?;
            if rem > vanishing_scale(c) {
                return Err(Error::OrderMismatch(format!("log coefficient does not vanish on the surface: {rem:e}")));
            }
            let jf = j as f64;
            let term = &(&q * &frame.dsigma[a]) - &(c * &frame.dlog_tau[a]);
            out[j - 1] += &term.scale(jf);
        }
        Ok(LogSeries(out))
    }
}

/// `S(σ)` for a log-series density.
fn s_functional_log(sigma: &LogSeries, frame: &LogFrame<'_>, pack: &CurvaturePack) -> Result<LogSeries> {
    let d = pack.dim();
    let grad: Vec<LogSeries> = (0..d).map(|a| sigma.partial(a, frame)).collect::<Result<_>>()?;
    let mut sq = LogSeries(vec![pack.constant(0.0)]);
    let mut lap = LogSeries(vec![pack.constant(0.0)]);
    for a in 0..d {
        let da = grad[a].partial_all(frame, d)?;
        for b in 0..d {
            let gi = pack.ginv(a, b);
            if gi.is_zero() {
                continue;
            }
            sq = sq.add(&grad[a].mul(&grad[b]).mul_jet(gi));
            let mut hess = da[b].clone();
            for c in 0..d {
                if let Some(gam) = pack.gamma(c, a, b) {
                    hess = hess.add(&grad[c].mul_jet(gam).scale(-1.0));
                }
            }
            lap = lap.add(&hess.mul_jet(gi));
        }
    }
    let inner = lap.add(&sigma.mul_jet(pack.j()));
    Ok(sq.add(&sigma.mul(&inner).scale(-2.0 / d as f64)))
}

impl LogSeries {
    fn partial_all(&self, frame: &LogFrame<'_>, d: usize) -> Result<Vec<Self>> {
        (0..d).map(|b| self.partial(b, frame)).collect()
    }
}

/// Outcome of the first-log-term probe along `Σ`.
#[derive(Debug, Clone)]
pub struct LogCoefficientProbe {
    /// Recursion value of `ℬ`.
    pub obstruction: f64,
    /// Multiplier `c*` making the smooth `σ^d` part of `I² − 1` vanish.
    pub multiplier: f64,
    /// `c*·ℬ`, the coefficient of `σ^{d+1} log(σ/τ)` in the corrected density.
    pub log_coefficient: f64,
    /// Largest transverse coefficient through degree `d` of the `log` part of `I² − 1`.
    pub log_part_residual: f64,
}

/// Evaluates `I²` for `σ′ = σ̄ + c σ̄ log(σ̄/τ)(I²_σ̄ − 1)` as a series in the
/// logarithm, for `c ∈ {0, 1}`, and solves for the `c` that removes the `σ^d`
/// term. The log coefficient of the improved density is then `c·ℬ`.
pub fn log_coefficient_probe(ctx: &HypersurfaceContext, tau: &ExprAst) -> Result<LogCoefficientProbe> {
    let d = ctx.dim();
    let pack = ctx.pack();
    let trace = conformal_unit_density(ctx)?;
    let tau_j = lift(tau, ctx.point(), pack.order())?;
    if tau_j.value() <= 0.0 {
        return Err(Error::NonPositiveFactor(tau_j.value()));
    }
    let sigma = trace.unit().clone();
    let excess = trace.unit_i_squared().add_scalar(-1.0);
    let log_tau = tau_j.ln()?;
    let frame = LogFrame {
        sigma: &sigma,
        dsigma: pack.gradient(&sigma)?,
        dlog_tau: pack.gradient(&log_tau)?,
    };
    let coefficient = &sigma * &excess;
    let mut smooth = Vec::with_capacity(2);
    let mut log_res: f64 = 0.0;
    for c in [0.0, 1.0] {
        let series = LogSeries(vec![sigma.clone(), coefficient.scale(c)]);
        let i2 = s_functional_log(&series, &frame, pack)?;
        let e0 = i2.0[0].add_scalar(-1.0);
        let (_, q) = transverse_remainders(&e0, &sigma, d)?;
        smooth.push(q.value());
        if let Some(e1) = i2.0.get(1) {
            let (rems, _) = transverse_remainders(e1, &sigma, d + 1)?;
            log_res = rems.iter().fold(log_res, |m, r| m.max(*r));
        }
    }
    let slope = smooth[1] - smooth[0];
    if slope.abs() < 1e-300 {
        return Err(Error::DegenerateProbe("log correction does not affect the σ^d term".into()));
    }
    let multiplier = -smooth[0] / slope;
    let obstruction = obstruction_density(&trace);
    Ok(LogCoefficientProbe {
        obstruction,
        multiplier,
        log_coefficient: multiplier * obstruction,
        log_part_residual: log_res,
    })
}

/// The first log-corrected density evaluated at a point off `Σ`.
#[derive(Debug, Clone)]
pub struct LogExtension {
    /// `σ′ = σ̄[1 + (d/2) log(σ̄/τ)(I² − 1)/(d + 1)]`.
    pub sigma_prime: Jet,
    /// `σ̄` at the evaluation point.
    pub sigma: f64,
    /// `I²_σ̄ − 1` at the evaluation point.
    pub unit_excess: f64,
    /// `I²_{σ′} − 1` at the evaluation point.
    pub improved_excess: f64,
}

/// Builds the conformal unit density by running the recursion in a
/// neighbourhood of an off-surface point, then applies the first log correction.
pub fn log_extension_first(
    geometry: &Geometry,
    s: &ExprAst,
    tau: &ExprAst,
    point: &[f64],
    order: usize,
) -> Result<LogExtension> {
    let d = geometry.dim();
    let pack = geometry.curvature_pack(point, order)?;
    let s_jet = lift(s, point, order)?;
    let grad = pack.gradient(&s_jet)?;
    let sq = pack.dot_lower(&grad, &grad);
    if sq.value() <= 1e-24 {
        return Err(Error::DegenerateNormal);
    }
    let mut sigma = s_jet.mul_jet(&sq.sqrt()?.recip()?);
    if sigma.value() <= 0.0 {
        return Err(Error::OffSurfaceRequired(sigma.value()));
    }
    for k in 1..d {
        let excess = s_functional(&sigma, &pack)?.add_scalar(-1.0);
        sigma = improvement(&sigma, &excess, k, d);
    }
    let excess = s_functional(&sigma, &pack)?.add_scalar(-1.0);
    let tau_j = lift(tau, point, order)?;
    if tau_j.value() <= 0.0 {
        return Err(Error::NonPositiveFactor(tau_j.value()));
    }
    let u = sigma.div_jet(&tau_j)?.ln()?;
    let df = d as f64;
    let factor = (&u * &excess).scale(df / (2.0 * (df + 1.0))).add_scalar(1.0);
    let sigma_prime = &sigma * &factor;
    let improved = s_functional(&sigma_prime, &pack)?.add_scalar(-1.0);
    Ok(LogExtension {
        sigma: sigma.value(),
        unit_excess: excess.value(),
        improved_excess: improved.value(),
        sigma_prime,
    })
}

/// Richardson-extrapolated ratio `δℬ / Δ̄²f` for graphs `x_3 = ε f` over the plane.
#[derive(Debug, Clone)]
pub struct LinearizationProbe {
    pub epsilons: Vec<f64>,
    /// `ℬ(ε)/ε`.
    pub quotients: Vec<f64>,
    pub bilaplacian: f64,
    /// Extrapolated `lim ℬ(ε)/ε`.
    pub limit: f64,
    pub ratio: f64,
}

/// Perturbs the plane by `s = ε f(x1, x2) − x3` at `(base, ε f(base))` and
/// extrapolates `ℬ/ε` to `ε → 0`.
pub fn linearized_obstruction_probe(
    f: &ExprAst,
    base: [f64; 2],
    epsilons: &[f64],
    order: usize,
) -> Result<LinearizationProbe> {
    let p0 = [base[0], base[1], 0.0];
    let fj = lift(f, &p0, 4)?;
    let e = |a: u8, b: u8| fj.derivative(&[a, b, 0]);
    let bilaplacian = e(4, 0)? + 2.0 * e(2, 2)? + e(0, 4)?;
    if bilaplacian.abs() < 1e-12 {
        return Err(Error::DegenerateProbe("the bilaplacian of f vanishes at the base point".into()));
    }
    if epsilons.is_empty() {
        return Err(Error::DegenerateProbe("empty step list".into()));
    }
    let geom = Geometry::euclidean(3)?;
    let mut quotients = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let s = ExprAst::constant(eps) * f.clone() - ExprAst::var(2);
        let point = [base[0], base[1], eps * f.eval(&p0)];
        let ctx = HypersurfaceContext::new(&geom, &s, &point, order)?;
        quotients.push(obstruction_density(&conformal_unit_density(&ctx)?) / eps);
    }
    let limit = richardson(&quotients);
    Ok(LinearizationProbe {
        epsilons: epsilons.to_vec(),
        quotients,
        bilaplacian,
        limit,
        ratio: limit / bilaplacian,
    })
}

/// Richardson table for step halving with error terms `ε, ε², …`.
pub fn richardson(values: &[f64]) -> f64 {
    let mut row = values.to_vec();
    let mut j = 1;
    while row.len() > 1 {
        let f = 2f64.powi(j);
        row = row.windows(2).map(|w| (f * w[1] - w[0]) / (f - 1.0)).collect();
        j += 1;
    }
    row[0]
}
