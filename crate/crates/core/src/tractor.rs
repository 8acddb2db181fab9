//! Standard tractor calculus in a chosen scale.
//!
//! A tractor is a [`TensorValue`] whose first slot is [`Slot::Tractor`]:
//! component `0` is the top (`σ`) slot, `1..=d` the middle 1-form `μ_a`,
//! and `d + 1` the bottom (`ρ`) slot. Extra slots after the first are
//! carried along by the coupled connection.

use asc_jets::Jet;

use crate::error::{Error, Result};
use crate::geometry::{covariant_derivative, trace_first_two, CurvaturePack};
use crate::hypersurface::{FundamentalForms, HypersurfaceContext};
use crate::tensor::{multi_indices, Slot, TensorValue};

pub mod identities;

/// Tolerance used for pointwise orthogonality preconditions.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;

/// Assembles a rank-one tractor from its splitting components.
pub fn tractor_from_parts(
    pack: &CurvaturePack,
    top: Jet,
    middle: Vec<Jet>,
    bottom: Jet,
    weight: f64,
) -> TensorValue {
    let d = pack.dim();
    assert_eq!(middle.len(), d, "middle slot must have d components");
    let mut comps = Vec::with_capacity(d + 2);
    comps.push(top);
    comps.extend(middle);
    comps.push(bottom);
    TensorValue::from_comps(d, vec![Slot::Tractor], weight, pack.scale(), comps)
}

/// The canonical tractor `X^A`, weight 1.
pub fn canonical_x(pack: &CurvaturePack) -> TensorValue {
    let d = pack.dim();
    tractor_from_parts(pack, pack.constant(0.0), vec![pack.constant(0.0); d], pack.constant(1.0), 1.0)
}

/// Components `h_AB V^B` of a rank-one tractor, i.e. `(ρ, μ^a, σ)`.
pub fn lowered(v: &TensorValue, pack: &CurvaturePack) -> Result<Vec<Jet>> {
    if v.slots() != [Slot::Tractor] {
        return Err(Error::SlotMismatch);
    }
    let d = pack.dim();
    let c = v.comps();
    let mut out = Vec::with_capacity(d + 2);
    out.push(c[d + 1].clone());
    out.extend(pack.raise(&c[1..=d]));
    out.push(c[0].clone());
    Ok(out)
}

/// `h(U, V) = σκ + g^ab μ_a ν_b + ρτ` for rank-one tractors.
pub fn tractor_metric(u: &TensorValue, v: &TensorValue, pack: &CurvaturePack) -> Result<TensorValue> {
    if u.scale() != v.scale() || u.scale() != pack.scale() {
        return Err(Error::ScaleMismatch);
    }
    let lu = lowered(u, pack)?;
    if v.slots() != [Slot::Tractor] {
        return Err(Error::SlotMismatch);
    }
    let mut acc = pack.constant(0.0);
    for (a, b) in lu.iter().zip(v.comps()) {
        acc += &(a * b);
    }
    Ok(TensorValue::density(acc, u.weight() + v.weight(), pack.scale()))
}

/// Contracts a rank-one tractor into the first tractor slot of `t`.
pub fn contract_first(v: &TensorValue, t: &TensorValue, pack: &CurvaturePack) -> Result<TensorValue> {
    if t.slots().first() != Some(&Slot::Tractor) {
        return Err(Error::SlotMismatch);
    }
    if v.scale() != t.scale() {
        return Err(Error::ScaleMismatch);
    }
    let out = t.contract_slot(0, &lowered(v, pack)?);
    Ok(out.with_weight(t.weight() + v.weight()))
}

/// Tractor connection coupled to Levi-Civita on any further slots.
pub fn tractor_connection(t: &TensorValue, pack: &CurvaturePack) -> Result<TensorValue> {
    covariant_derivative(t, pack)
}

/// Curvature `Ω_ab^C_E` of the tractor connection, slots `[_, _, T, T]`.
///
/// Acting on `(σ, μ_c, ρ)` it gives `(0, W_abc^e μ_e + C_abc σ, −C_ab^e μ_e)`.
pub fn tractor_curvature(pack: &CurvaturePack) -> TensorValue {
    let d = pack.dim();
    let weyl_mixed = |a: usize, b: usize, c: usize, e: usize| {
        let mut acc = pack.constant(0.0);
        for f in 0..d {
            acc += &(pack.weyl.get(&[a, b, c, f]) * pack.ginv(f, e));
        }
        acc
    };
    let cotton_mixed = |a: usize, b: usize, e: usize| {
        let mut acc = pack.constant(0.0);
        for f in 0..d {
            acc += &(pack.cotton.get(&[a, b, f]) * pack.ginv(f, e));
        }
        acc
    };
    TensorValue::from_fn(d, vec![Slot::Lower, Slot::Lower, Slot::Tractor, Slot::Tractor], 0.0, pack.scale(), |i| {
        let (a, b, row, col) = (i[0], i[1], i[2], i[3]);
        let is_mid = |k: usize| (1..=d).contains(&k);
        if is_mid(row) && col == 0 {
            pack.cotton.get(&[a, b, row - 1]).clone()
        } else if is_mid(row) && is_mid(col) {
            weyl_mixed(a, b, row - 1, col - 1)
        } else if row == d + 1 && is_mid(col) {
            -cotton_mixed(a, b, col - 1)
        } else {
            pack.constant(0.0)
        }
    })
}

fn yamabe_factor(d: usize, w: f64) -> f64 {
    d as f64 + 2.0 * w - 2.0
}

/// Thomas D: `((d+2w−2)w t, (d+2w−2)∇_a t, −(Δ + wJ)t)`, new tractor slot first.
pub fn thomas_d(t: &TensorValue, pack: &CurvaturePack) -> Result<TensorValue> {
    let d = pack.dim();
    let w = t.weight();
    let c = yamabe_factor(d, w);
    let grad = covariant_derivative(t, pack)?;
    let lap = trace_first_two(&covariant_derivative(&grad, pack)?, pack)?;
    let n = t.comps().len();
    let mut comps = Vec::with_capacity((d + 2) * n);
    comps.extend(t.comps().iter().map(|x| x.scale(c * w)));
    comps.extend(grad.comps().iter().map(|x| x.scale(c)));
    let j = pack.j();
    comps.extend(lap.comps().iter().zip(t.comps()).map(|(l, x)| -(l + &(j * x).scale(w))));
    let mut slots = vec![Slot::Tractor];
    slots.extend_from_slice(t.slots());
    Ok(TensorValue::from_comps(d, slots, w - 1.0, t.scale(), comps))
}

/// Derivative of the Thomas D formula with respect to the weight parameter.
///
/// This is the action of D on `t · log σ` beyond the Leibniz term: a log
/// density carries a unit shift under the weight operator.
pub fn thomas_d_weight_derivative(t: &TensorValue, pack: &CurvaturePack) -> Result<TensorValue> {
    let d = pack.dim();
    let w = t.weight();
    let grad = covariant_derivative(t, pack)?;
    let mut comps = Vec::with_capacity((d + 2) * t.comps().len());
    comps.extend(t.comps().iter().map(|x| x.scale(d as f64 + 4.0 * w - 2.0)));
    comps.extend(grad.comps().iter().map(|x| x.scale(2.0)));
    comps.extend(t.comps().iter().map(|x| -(pack.j() * x)));
    let mut slots = vec![Slot::Tractor];
    slots.extend_from_slice(t.slots());
    Ok(TensorValue::from_comps(d, slots, w - 1.0, t.scale(), comps))
}

/// `D̂ t = D t / (d + 2w − 2)`.
pub fn hatted_d(t: &TensorValue, pack: &CurvaturePack) -> Result<TensorValue> {
    let c = yamabe_factor(pack.dim(), t.weight());
    if c.abs() < 1e-12 {
        return Err(Error::YamabeWeight(t.weight()));
    }
    Ok(thomas_d(t, pack)?.scaled(1.0 / c))
}

/// Scale tractor `I_σ = D̂σ = (σ, ∇σ, −(Δσ + Jσ)/d)` of a weight-one density.
pub fn scale_tractor(sigma: &Jet, pack: &CurvaturePack) -> Result<TensorValue> {
    hatted_d(&TensorValue::density(sigma.clone(), 1.0, pack.scale()), pack)
}

/// `V^A D̂_A t` at the Yamabe weight for `X·V = 0`: `(v^a ∇_a + (1 − d/2) v) t`.
pub fn projected_d_at_yamabe(v: &TensorValue, t: &TensorValue, pack: &CurvaturePack) -> Result<TensorValue> {
    let d = pack.dim();
    if v.slots() != [Slot::Tractor] {
        return Err(Error::SlotMismatch);
    }
    let xv = v.comps()[0].value();
    if xv.abs() > 1e-10 {
        return Err(Error::NotXOrthogonal(xv));
    }
    let yw = 1.0 - d as f64 / 2.0;
    if (t.weight() - yw).abs() > 1e-12 {
        return Err(Error::WrongWeight { expected: yw, got: t.weight() });
    }
    let vu = pack.raise(&v.comps()[1..=d]);
    let grad = covariant_derivative(t, pack)?;
    let bottom = &v.comps()[d + 1];
    let out = grad.contract_slot(0, &vu).try_add(&t.map(|x| (bottom * x).scale(yw)))?;
    Ok(out.with_weight(v.weight() + t.weight() - 1.0))
}

/// Normal tractor `N = (0, n̂_a, −H)` on the level-set extension.
pub fn normal_tractor(ctx: &HypersurfaceContext, ff: &FundamentalForms) -> TensorValue {
    let p = ctx.pack();
    tractor_from_parts(p, p.constant(0.0), ctx.normal().to_vec(), -ff.mean.jet(), 0.0)
}

/// Matrix of the map from `N^⊥` to hypersurface tractors, `(d+2)²` row-major.
pub fn hypersurface_map_matrix(ctx: &HypersurfaceContext, ff: &FundamentalForms) -> Vec<Jet> {
    let d = ctx.dim();
    let p = ctx.pack();
    let r = d + 2;
    let h = ff.mean.jet();
    let mut m = vec![p.constant(0.0); r * r];
    m[0] = p.constant(1.0);
    for a in 0..d {
        m[(1 + a) * r] = -(&ctx.normal()[a] * h);
        m[(1 + a) * r + 1 + a] = p.constant(1.0);
        m[(d + 1) * r + 1 + a] = &ctx.normal_up()[a] * h;
    }
    m[(d + 1) * r] = (h * h).scale(-0.5);
    m[(d + 1) * r + d + 1] = p.constant(1.0);
    m
}

/// Applies the hypersurface tractor isomorphism to a tractor orthogonal to `N`.
pub fn hypersurface_tractor_map(
    v: &TensorValue,
    ctx: &HypersurfaceContext,
    ff: &FundamentalForms,
) -> Result<TensorValue> {
    let p = ctx.pack();
    let n = normal_tractor(ctx, ff);
    let hn = contract_first(&n, v, p)?;
    let worst = hn.max_abs_value();
    if worst > ORTHOGONALITY_TOL * v.max_abs_value().max(1.0) {
        return Err(Error::NotNormalOrthogonal(worst));
    }
    Ok(v.transform_slot(0, &hypersurface_map_matrix(ctx, ff)))
}

/// Laplace–Robin operator `I·D t`.
pub fn laplace_robin(i: &TensorValue, t: &TensorValue, pack: &CurvaturePack) -> Result<TensorValue> {
    contract_first(i, &thomas_d(t, pack)?, pack).map(|r| r.with_weight(t.weight() - 1.0))
}

/// The sl(2) triple `x = σ·`, `h = (d + 2w)`, `y = −I·D/I²` of a scale tractor.
#[derive(Debug, Clone)]
pub struct Sl2Triple<'a> {
    pack: &'a CurvaturePack,
    scale: TensorValue,
    sigma: Jet,
    inv_norm_sq: Jet,
}

impl<'a> Sl2Triple<'a> {
    pub fn new(sigma: &Jet, pack: &'a CurvaturePack) -> Result<Self> {
        let scale = scale_tractor(sigma, pack)?;
        Self::from_scale_tractor(scale, pack)
    }

    pub fn from_scale_tractor(scale: TensorValue, pack: &'a CurvaturePack) -> Result<Self> {
        let sq = tractor_metric(&scale, &scale, pack)?;
        if sq.value().abs() < 1e-12 {
            return Err(Error::NullScaleTractor);
        }
        let sigma = scale.comps()[0].clone();
        Ok(Self { pack, inv_norm_sq: sq.jet().recip()?, scale, sigma })
    }

    pub fn scale_tractor(&self) -> &TensorValue {
        &self.scale
    }

    pub fn sigma(&self) -> &Jet {
        &self.sigma
    }

    pub fn pack(&self) -> &CurvaturePack {
        self.pack
    }

    /// `I²` as a weight-0 jet.
    pub fn norm_sq(&self) -> Result<Jet> {
        Ok(self.inv_norm_sq.recip()?)
    }

    pub fn x(&self, t: &TensorValue) -> TensorValue {
        t.map(|c| &self.sigma * c).with_weight(t.weight() + 1.0)
    }

    pub fn h(&self, t: &TensorValue) -> TensorValue {
        t.scaled(self.pack.dim() as f64 + 2.0 * t.weight())
    }

    pub fn laplace_robin(&self, t: &TensorValue) -> Result<TensorValue> {
        laplace_robin(&self.scale, t, self.pack)
    }

    pub fn y(&self, t: &TensorValue) -> Result<TensorValue> {
        Ok(self.laplace_robin(t)?.map(|c| -(&self.inv_norm_sq * c)))
    }

    /// `y^k t`.
    pub fn y_pow(&self, t: &TensorValue, k: usize) -> Result<TensorValue> {
        let mut cur = t.clone();
        for _ in 0..k {
            cur = self.y(&cur)?;
        }
        Ok(cur)
    }

    /// `x^k t`.
    pub fn x_pow(&self, t: &TensorValue, k: usize) -> TensorValue {
        (0..k).fold(t.clone(), |acc, _| self.x(&acc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Geometry;
    use approx::assert_relative_eq;
    use asc_jets::{lift, parse};

    fn flat(p: &[f64], k: usize) -> CurvaturePack {
        Geometry::euclidean(p.len()).unwrap().curvature_pack(p, k).unwrap()
    }

    fn field(pack: &CurvaturePack, src: &str) -> Jet {
        lift(&parse(src).unwrap(), pack.point(), pack.order()).unwrap()
    }

    fn curved3() -> Geometry {
        let c = |s: &str| parse(s).unwrap();
        Geometry::explicit(
            3,
            vec![
                c("1 + 0.3*x2^2"),
                c("0.1*sin(x3)"),
                c("0.05*x1*x2"),
                c("0.1*sin(x3)"),
                c("exp(0.2*x1)"),
                c("0.1*x3 + 0.05*x1^2"),
                c("0.05*x1*x2"),
                c("0.1*x3 + 0.05*x1^2"),
                c("1 + 0.2*cos(x1)*x2"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn x_is_null_and_parallel_scale_tractor() {
        let p = flat(&[0.1, 0.2, 0.3], 4);
        let x = canonical_x(&p);
        assert_eq!(tractor_metric(&x, &x, &p).unwrap().value(), 0.0);
        let i = scale_tractor(&field(&p, "x3"), &p).unwrap();
        assert_relative_eq!(i.comps()[0].value(), 0.3);
        assert_relative_eq!(i.comps()[3].value(), 1.0);
        assert_eq!(i.comps()[4].value(), 0.0);
        let di = tractor_connection(&i, &p).unwrap();
        assert!(di.comps().iter().all(|c| c.max_abs() < 1e-12));
        assert_relative_eq!(tractor_metric(&i, &i, &p).unwrap().value(), 1.0);
    }

    #[test]
    fn connection_on_x() {
        let p = flat(&[0.0; 3], 4);
        let dx = tractor_connection(&canonical_x(&p), &p).unwrap();
        for a in 0..3 {
            for b in 0..5 {
                let expect = if b == a + 1 { 1.0 } else { 0.0 };
                assert_eq!(dx.get(&[a, b]).value(), expect);
            }
        }
    }

    #[test]
    fn thomas_d_examples() {
        let p = flat(&[0.5, -0.5, 0.2], 4);
        let f = TensorValue::density(field(&p, "x1^2 + x2^2"), 0.0, p.scale());
        let df = thomas_d(&f, &p).unwrap();
        assert_eq!(df.values(), vec![0.0, 1.0, -1.0, 0.0, -4.0]);
        let one = TensorValue::density(p.constant(1.0), 1.0, p.scale());
        let d1 = hatted_d(&one, &p).unwrap();
        assert_eq!(d1.values(), vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(d1.weight(), 0.0);
        let p4 = flat(&[0.0; 4], 4);
        let t = TensorValue::density(p4.constant(1.0), -1.0, p4.scale());
        assert!(matches!(hatted_d(&t, &p4), Err(Error::YamabeWeight(_))));
    }

    #[test]
    fn metricity_and_curvature_against_commutator() {
        let g = curved3();
        let p = g.curvature_pack(&[0.2, -0.3, 0.4], 6).unwrap();
        let u = tractor_from_parts(
            &p,
            field(&p, "sin(x1) + x2*x3"),
            vec![field(&p, "x1^2"), field(&p, "cos(x3)"), field(&p, "x1*x2 - x3")],
            field(&p, "exp(0.3*x2)"),
            0.5,
        );
        let v = tractor_from_parts(
            &p,
            field(&p, "x3^2 - x1"),
            vec![field(&p, "0.4 + x2"), field(&p, "x1*x3"), field(&p, "sin(x2)")],
            field(&p, "x1 + x2 + x3"),
            -0.5,
        );
        let huv = tractor_metric(&u, &v, &p).unwrap();
        let du = tractor_connection(&u, &p).unwrap();
        let dv = tractor_connection(&v, &p).unwrap();
        for a in 0..3 {
            let lhs = huv.jet().partial(a).unwrap().value();
            let ua = TensorValue::from_comps(3, vec![Slot::Tractor], 0.5, p.scale(), (0..5).map(|b| du.get(&[a, b]).clone()).collect());
            let va = TensorValue::from_comps(3, vec![Slot::Tractor], -0.5, p.scale(), (0..5).map(|b| dv.get(&[a, b]).clone()).collect());
            let rhs = tractor_metric(&ua, &v, &p).unwrap().value() + tractor_metric(&u, &va, &p).unwrap().value();
            assert!((lhs - rhs).abs() < 1e-10);
        }
        let ddu = tractor_connection(&du, &p).unwrap();
        let curv = tractor_curvature(&p);
        for i in multi_indices(&[3, 3, 5]) {
            let (a, b, c) = (i[0], i[1], i[2]);
            let comm = ddu.get(&[a, b, c]).value() - ddu.get(&[b, a, c]).value();
            let formula: f64 = (0..5).map(|e| curv.get(&[a, b, c, e]).value() * u.get(&[e]).value()).sum();
            assert!((comm - formula).abs() < 1e-9, "{i:?}: {comm} vs {formula}");
        }
    }

    #[test]
    fn normal_tractor_and_map() {
        let g = Geometry::euclidean(3).unwrap();
        let ctx = HypersurfaceContext::new(&g, &parse("sqrt(x1^2+x2^2+x3^2) - 2").unwrap(), &[0.0, 0.0, 2.0], 4).unwrap();
        let ff = ctx.fundamental_forms().unwrap();
        let n = normal_tractor(&ctx, &ff);
        assert_eq!(n.values(), vec![0.0, 0.0, 0.0, 1.0, -0.5]);
        let p = ctx.pack();
        assert_relative_eq!(tractor_metric(&n, &n, p).unwrap().value(), 1.0);
        assert_eq!(tractor_metric(&n, &canonical_x(p), p).unwrap().value(), 0.0);
        assert!(matches!(hypersurface_tractor_map(&n, &ctx, &ff), Err(Error::NotNormalOrthogonal(_))));
        // A tractor orthogonal to N: (1, H n̂, 0) and the image (1, 0, ½H²)
        let h = ff.mean.jet().clone();
        let v = tractor_from_parts(p, p.constant(1.0), ctx.normal().iter().map(|x| x * &h).collect(), p.constant(0.0), 0.0);
        let image = hypersurface_tractor_map(&v, &ctx, &ff).unwrap();
        let vals = image.values();
        assert_relative_eq!(vals[0], 1.0);
        assert!(vals[1..4].iter().all(|x| x.abs() < 1e-15));
        assert_relative_eq!(vals[4], 0.125);
        assert_relative_eq!(tractor_metric(&image, &image, p).unwrap().value(), tractor_metric(&v, &v, p).unwrap().value());
    }

    #[test]
    fn laplace_robin_examples() {
        let p = flat(&[0.2, 0.1, 0.7], 4);
        let i = scale_tractor(&field(&p, "x3"), &p).unwrap();
        let f = TensorValue::density(field(&p, "x3"), 0.0, p.scale());
        assert_relative_eq!(laplace_robin(&i, &f, &p).unwrap().value(), 1.0);

        let p = flat(&[0.0, 0.0, 1.0], 4);
        let sphere = field(&p, "sqrt(x1^2+x2^2+x3^2) - 1").with_zero_constant();
        let i = scale_tractor(&sphere, &p).unwrap();
        let one = TensorValue::density(p.constant(1.0), 1.0, p.scale());
        assert_relative_eq!(laplace_robin(&i, &one, &p).unwrap().value(), -2.0, epsilon = 1e-12);
    }

    #[test]
    fn projected_yamabe_operator() {
        let p = flat(&[0.3, 0.4, 0.0], 4);
        let n = tractor_from_parts(&p, p.constant(0.0), vec![p.constant(0.0), p.constant(0.0), p.constant(1.0)], p.constant(0.0), 0.0);
        let t = TensorValue::density(field(&p, "x1*x3 + x2^2"), -0.5, p.scale());
        assert_relative_eq!(projected_d_at_yamabe(&n, &t, &p).unwrap().value(), 0.3);
        let x = canonical_x(&p);
        assert_relative_eq!(projected_d_at_yamabe(&x, &t, &p).unwrap().value(), -0.5 * 0.16);
        let off = TensorValue::density(field(&p, "x1*x3 + x2^2"), -0.5 + 1e-7, p.scale());
        let lim = contract_first(&n, &hatted_d(&off, &p).unwrap(), &p).unwrap().value();
        assert!((lim - 0.3).abs() < 1e-6);
        let i = scale_tractor(&field(&p, "1 + x3"), &p).unwrap();
        assert!(matches!(projected_d_at_yamabe(&i, &t, &p), Err(Error::NotXOrthogonal(_))));
    }
}
