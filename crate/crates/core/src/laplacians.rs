//! Extrinsic conformal Laplacians, the Robin operator and the holographic obstruction.

use asc_jets::Jet;

use crate::error::{Error, Result};
use crate::geometry::CurvaturePack;
use crate::hypersurface::{transverse_remainders, HypersurfaceContext};
use crate::tensor::{Slot, TensorValue};
use crate::tractor::{
    canonical_x, contract_first, hatted_d, hypersurface_tractor_map, laplace_robin, lowered, normal_tractor, scale_tractor,
    Sl2Triple,
};
use crate::yamabe::{conformal_unit_density, conformal_unit_from_jet, jbar_from_gauss, RecursionTrace};

/// Warning attached to every holographic evaluation.
pub const HOLOGRAPHIC_ASSUMPTION: &str =
    "holographic value uses the orthogonal projector h - N h(N, .) for the tractor projection";

/// `𝒫_k = y^k` for the scale tractor of a defining density.
#[derive(Debug, Clone)]
pub struct OperatorHandle<'a> {
    k: usize,
    weight: f64,
    triple: Sl2Triple<'a>,
}

impl<'a> OperatorHandle<'a> {
    /// Valid for `1 ≤ k ≤ d − 1`, acting on weight `(k − d + 1)/2`.
    pub fn new(sigma: &Jet, pack: &'a CurvaturePack, k: usize) -> Result<Self> {
        let d = pack.dim();
        if k == 0 || k >= d {
            return Err(Error::OrderTooHigh { k, max: d - 1 });
        }
        let weight = (k as f64 - d as f64 + 1.0) / 2.0;
        Ok(Self { k, weight, triple: Sl2Triple::new(sigma, pack)? })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Domain weight; the output has weight `weight − k`.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn triple(&self) -> &Sl2Triple<'a> {
        &self.triple
    }

    pub fn pack(&self) -> &CurvaturePack {
        self.triple.pack()
    }

    pub fn apply(&self, t: &TensorValue) -> Result<TensorValue> {
        if (t.weight() - self.weight).abs() > 1e-12 {
            return Err(Error::WrongWeight { expected: self.weight, got: t.weight() });
        }
        self.apply_unchecked(t)
    }

    /// `y^k t` without the weight guard.
    pub fn apply_unchecked(&self, t: &TensorValue) -> Result<TensorValue> {
        let out = self.triple.y_pow(t, self.k)?;
        debug_assert!((out.weight() - (t.weight() - self.k as f64)).abs() < 1e-12);
        Ok(out)
    }
}

/// `𝒫_k t` along `Σ`, at the base point.
pub fn extrinsic_laplacian(op: &OperatorHandle<'_>, t: &TensorValue) -> Result<TensorValue> {
    Ok(op.apply(t)?.at_point())
}

/// Residual `|y^k(σ u)(p)|` relative to the size of `u`.
pub fn tangentiality_check(op: &OperatorHandle<'_>, u: &TensorValue) -> Result<f64> {
    let su = op.triple.x(u);
    let out = op.apply_unchecked(&su)?;
    Ok(out.max_abs_value() / u.comps().iter().fold(1.0f64, |m, c| m.max(c.max_abs())))
}

/// Compares `y^k t` built from the conformal units of `s` and `s(1 + s v)`.
pub fn sigma_independence(pack: &CurvaturePack, s: &Jet, v: &Jet, k: usize, t: &TensorValue) -> Result<f64> {
    let first = conformal_unit_from_jet(s, pack)?;
    let modified = s * &(s * v).add_scalar(1.0);
    let second = conformal_unit_from_jet(&modified, pack)?;
    let a = OperatorHandle::new(first.unit(), pack, k)?.apply(t)?;
    let b = OperatorHandle::new(second.unit(), pack, k)?.apply(t)?;
    Ok(a.values().iter().zip(b.values()).fold(0.0, |m, (x, y)| m.max((x - y).abs())))
}

/// `(−1)^k ((k − 1)!!)²`, the leading coefficient against `(Δ^⊤)^{k/2}`.
pub fn leading_coefficient(k: usize) -> f64 {
    let mut df = 1.0;
    let mut j = k as i64 - 1;
    while j > 1 {
        df *= j as f64;
        j -= 2;
    }
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * df * df
}

/// Ratio of `𝒫_k f(p)` for `f = cos(λ ξ·(x − p))`, `ξ` tangential, to the
/// leading-symbol prediction `c_k (−λ²|ξ|²)^{k/2}`. Tends to 1 as `λ` grows.
pub fn leading_symbol_ratio(op: &OperatorHandle<'_>, ctx: &HypersurfaceContext, xi: &[f64], lambda: f64) -> Result<f64> {
    let k = op.k();
    if !k.is_multiple_of(2) {
        return Err(Error::DegenerateProbe("leading symbol probe needs even k".into()));
    }
    let pack = ctx.pack();
    let d = pack.dim();
    let (order, point) = (pack.order(), ctx.point());
    let tangent: Vec<f64> = (0..d)
        .map(|a| (0..d).map(|b| ctx.projector(b, a).value() * xi[b]).sum())
        .collect();
    let mut norm = 0.0;
    for a in 0..d {
        for b in 0..d {
            norm += pack.ginv(a, b).value() * tangent[a] * tangent[b];
        }
    }
    if norm < 1e-12 {
        return Err(Error::DegenerateProbe("probe direction is normal to the surface".into()));
    }
    let mut phase = Jet::zero(d, order);
    for (a, &ta) in tangent.iter().enumerate() {
        phase += &(&Jet::variable(d, order, a, point[a]).add_scalar(-point[a]) * ta);
    }
    let f = TensorValue::density((&phase * lambda).cos(), op.weight(), pack.scale());
    let value = op.apply(&f)?.value();
    let predicted = leading_coefficient(k) * (-lambda * lambda * norm).powi(k as i32 / 2);
    Ok(value / predicted)
}

/// The Robin operator `δ_n = ∇_n − wH` and its Laplace–Robin cross-check.
#[derive(Debug, Clone, Copy)]
pub struct RobinEvaluation {
    pub value: f64,
    /// `I·D t / (d + 2w − 2)`.
    pub from_laplace_robin: f64,
    pub residual: f64,
}

/// Evaluates `δ_n t` at the base point using the conformal unit of `trace`.
pub fn robin_operator(ctx: &HypersurfaceContext, trace: &RecursionTrace, t: &TensorValue) -> Result<RobinEvaluation> {
    let pack = ctx.pack();
    let d = pack.dim() as f64;
    let w = t.weight();
    let factor = d + 2.0 * w - 2.0;
    if factor.abs() < 1e-12 {
        return Err(Error::YamabeWeight(w));
    }
    let sigma = trace.unit();
    let excess = trace.unit_i_squared().add_scalar(-1.0);
    let (rems, _) = transverse_remainders(&excess, sigma, 2)?;
    let worst = rems.iter().fold(0.0f64, |m, r| m.max(*r));
    if worst > 1e-9 * excess.max_abs().max(1.0) {
        return Err(Error::NotConformalUnit(worst));
    }
    let ff = ctx.fundamental_forms()?;
    let grad = pack.gradient(t.jet())?;
    let dn: f64 = ctx.normal_up().iter().zip(&grad).map(|(n, g)| n.value() * g.value()).sum();
    let value = dn - w * ff.mean.value() * t.value();
    let i = scale_tractor(sigma, pack)?;
    let from_laplace_robin = laplace_robin(&i, t, pack)?.value() / factor;
    Ok(RobinEvaluation { value, from_laplace_robin, residual: (value - from_laplace_robin).abs() })
}

/// Holographic obstruction in dimension three with its extension-stability check.
#[derive(Debug, Clone)]
pub struct HolographicObstruction {
    /// Value with `N` extended as the level-set normal tractor.
    pub value: f64,
    /// Value with `N` extended by the scale tractor of the conformal unit.
    pub alternate_extension: f64,
    pub warning: &'static str,
}

/// `ℬ = (1/6) D̄_A[Σ^A_B(𝖯_2 N^B − Ī·D(X^B K_ext))]` for `d = 3`.
///
/// The projected tractor is carried to the surface by the hypersurface tractor
/// map. For a weight `−2` tractor `(σ, μ, ρ)` on a surface, with `P̄ = J̄ḡ/2`,
/// the divergence `D̄_A V^A` reduces to `−Δ̄σ − 2∇̄·μ − J̄σ + 2ρ`.
pub fn obstruction_holographic(ctx: &HypersurfaceContext) -> Result<HolographicObstruction> {
    let d = ctx.dim();
    if d != 3 {
        return Err(Error::UnsupportedDimension { got: d, max: 3 });
    }
    let trace = conformal_unit_density(ctx)?;
    let pack = ctx.pack();
    let ff = ctx.fundamental_forms()?;
    let triple = Sl2Triple::new(trace.unit(), pack)?;
    let ibar = triple.scale_tractor().clone();

    // K_ext = P_AB P^AB with P^AB = D̂^A Ī^B.
    let p_ab = hatted_d(&ibar, pack)?;
    let r = d + 2;
    let rows: Vec<TensorValue> = (0..r)
        .map(|a| {
            TensorValue::from_comps(d, vec![Slot::Tractor], p_ab.weight(), pack.scale(), (0..r).map(|b| p_ab.get(&[a, b]).clone()).collect())
        })
        .collect();
    let lowered_rows: Vec<Vec<Jet>> = rows.iter().map(|v| lowered(v, pack)).collect::<Result<_>>()?;
    let mut k_ext = pack.constant(0.0);
    let lower_first = |b: usize| -> Vec<Jet> {
        // h_{AC} P^{CB} for fixed B, as a vector over A.
        let col = TensorValue::from_comps(d, vec![Slot::Tractor], 0.0, pack.scale(), (0..r).map(|a| p_ab.get(&[a, b]).clone()).collect());
        lowered(&col, pack).expect("rank-one tractor")
    };
    for b in 0..r {
        let col = lower_first(b);
        for a in 0..r {
            // P_AB P^AB = Σ_{A,B} (h P)_A^B (P h)^A_B.
            k_ext += &(&col[a] * &lowered_rows[a][b]);
        }
    }
    let k_ext = TensorValue::density(k_ext, 2.0 * p_ab.weight(), pack.scale());
    let xk = canonical_x(pack).times_density(&k_ext)?;
    let second = laplace_robin(&ibar, &xk, pack)?;

    let evaluate = |n_ext: &TensorValue| -> Result<f64> {
        let v = triple.y_pow(n_ext, 2)?.try_sub(&second)?;
        let n = normal_tractor(ctx, &ff);
        let hn = contract_first(&n, &v, pack)?;
        let projected = v.try_sub(&n.times_density(&hn)?.with_weight(v.weight()))?;
        let intrinsic = hypersurface_tractor_map(&projected, ctx, &ff)?;
        surface_divergence(ctx, &ff, &intrinsic)
    };
    let value = evaluate(&normal_tractor(ctx, &ff))? / 6.0;
    let alternate_extension = evaluate(&ibar)? / 6.0;
    Ok(HolographicObstruction { value, alternate_extension, warning: HOLOGRAPHIC_ASSUMPTION })
}

/// `−Δ̄σ − 2∇̄·μ − J̄σ + 2ρ` at the base point for a weight `−2` surface tractor.
fn surface_divergence(
    ctx: &HypersurfaceContext,
    ff: &crate::hypersurface::FundamentalForms,
    v: &TensorValue,
) -> Result<f64> {
    let pack = ctx.pack();
    let d = pack.dim();
    let c = v.comps();
    let top = TensorValue::density(c[0].clone(), v.weight(), pack.scale());
    let lap = ctx.intrinsic_laplacian(&top)?.value();
    let mid = TensorValue::from_comps(d, vec![Slot::Lower], v.weight(), pack.scale(), c[1..=d].to_vec());
    let dmid = ctx.intrinsic_derivative(&mid)?;
    let ginv = ctx.induced_inverse();
    let mut div = 0.0;
    for a in 0..d {
        for b in 0..d {
            div += ginv.get(&[a, b]).value() * dmid.get(&[a, b]).value();
        }
    }
    let jbar = jbar_from_gauss(ctx, ff);
    Ok(-lap - 2.0 * div - jbar * c[0].value() + 2.0 * c[d + 1].value())
}
