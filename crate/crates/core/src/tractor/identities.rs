//! Randomized residual checks of the tractor calculus identities.

use asc_jets::{lift, ExprAst, Jet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::geometry::{retrivialize, Geometry};
use crate::hypersurface::IdentityReport;

/// Source of random analytic fields at a base point.
#[derive(Debug, Clone)]
pub struct RandomFields {
    rng: ChaCha8Rng,
}

impl RandomFields {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Taylor coefficients uniform in `[-1, 1]` damped by `2^{-|α|}`.
    pub fn jet(&mut self, dim: usize, order: usize) -> Jet {
        Jet::from_fn(dim, order, |alpha| {
            let deg: u32 = alpha.iter().map(|&e| e as u32).sum();
            self.rng.gen_range(-1.0..1.0) * 0.5f64.powi(deg as i32)
        })
    }

    /// A random jet with prescribed constant term.
    pub fn jet_with_value(&mut self, dim: usize, order: usize, value: f64) -> Jet {
        let mut j = self.jet(dim, order).with_zero_constant();
        j = j.add_scalar(value);
        j
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    /// A weight keeping every listed affine form `d + 2w + c` away from zero.
    pub fn weight(&mut self, d: usize, shifts: &[f64]) -> f64 {
        loop {
            let w = self.uniform(-1.5, 1.5);
            if shifts.iter().all(|c| (d as f64 + 2.0 * w + c).abs() > 0.25) {
                return w;
            }
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// `h_AB t^{AB…}` over the first two tractor slots.
pub fn tractor_trace(t: &TensorValue, pack: &CurvaturePack) -> Result<TensorValue> {
    if t.slots().len() < 2 || t.slots()[0] != Slot::Tractor || t.slots()[1] != Slot::Tractor {
        return Err(Error::SlotMismatch);
    }
    let d = pack.dim();
    let r = d + 2;
    let rest: Vec<Slot> = t.slots()[2..].to_vec();
    let inner: usize = rest.iter().map(|s| s.range(d)).product();
    let at = |a: usize, b: usize, k: usize| &t.comps()[(a * r + b) * inner + k];
    let comps = (0..inner)
        .map(|k| {
            let mut acc = at(0, d + 1, k) + at(d + 1, 0, k);
            for a in 0..d {
                for b in 0..d {
                    acc += &(pack.ginv(a, b) * at(1 + a, 1 + b, k));
                }
            }
            acc
        })
        .collect();
    Ok(TensorValue::from_comps(d, rest, t.weight(), t.scale(), comps))
}

fn density(pack: &CurvaturePack, j: Jet, w: f64) -> TensorValue {
    TensorValue::density(j, w, pack.scale())
}

fn diff_at_point(a: &TensorValue, b: &TensorValue) -> f64 {
    a.values().iter().zip(b.values()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn pow(j: &Jet, k: usize, pack: &CurvaturePack) -> Jet {
    (0..k).fold(pack.constant(1.0), |acc, _| &acc * j)
}

/// Metricity, curvature, `D_A(X^A T)`, Leibniz failure, product rules,
/// commutator algebra and sl(2) relations at the base point of `pack`.
pub fn algebraic_suite(pack: &CurvaturePack, fields: &mut RandomFields) -> Result<IdentityReport> {
    let d = pack.dim();
    let df = d as f64;
    let k_ord = pack.order();
    let mut rep = IdentityReport::default();
    let rand_tractor = |fields: &mut RandomFields, w: f64| {
        let comps = (0..d + 2).map(|_| fields.jet(d, k_ord)).collect::<Vec<_>>();
        TensorValue::from_comps(d, vec![Slot::Tractor], w, pack.scale(), comps)
    };

    // Tractor metricity.
    let u = rand_tractor(fields, 0.3);
    let v = rand_tractor(fields, -0.8);
    let huv = tractor_metric(&u, &v, pack)?;
    let du = tractor_connection(&u, pack)?;
    let dv = tractor_connection(&v, pack)?;
    let mut met: f64 = 0.0;
    for a in 0..d {
        let slice = |t: &TensorValue, w: f64| {
            TensorValue::from_comps(d, vec![Slot::Tractor], w, pack.scale(), (0..d + 2).map(|b| t.get(&[a, b]).clone()).collect())
        };
        let rhs = tractor_metric(&slice(&du, 0.3), &v, pack)?.value() + tractor_metric(&u, &slice(&dv, -0.8), pack)?.value();
        met = met.max((huv.jet().partial(a)?.value() - rhs).abs());
    }
    rep.push("tractor_metricity", met);

    // Curvature formula against the commutator.
    let ddu = tractor_connection(&du, pack)?;
    let curv = tractor_curvature(pack);
    let mut cres: f64 = 0.0;
    for i in multi_indices(&[d, d, d + 2]) {
        let (a, b, c) = (i[0], i[1], i[2]);
        let comm = ddu.get(&[a, b, c]).value() - ddu.get(&[b, a, c]).value();
        let f: f64 = (0..d + 2).map(|e| curv.get(&[a, b, c, e]).value() * u.get(&[e]).value()).sum();
        cres = cres.max((comm - f).abs());
    }
    rep.push("tractor_curvature", cres);

    // D_A(X^A T) = (d + w)(d + 2w + 2) T.
    let w = fields.weight(d, &[0.0, 2.0]);
    let t = density(pack, fields.jet(d, k_ord), w);
    let xt = canonical_x(pack).times_density(&t)?;
    let lhs = tractor_trace(&thomas_d(&xt, pack)?, pack)?;
    rep.push("d_of_x_t", (lhs.value() - (df + w) * (df + 2.0 * w + 2.0) * t.value()).abs());

    // Leibniz failure.
    let w1 = fields.weight(d, &[-2.0]);
    let w2 = loop {
        let w2 = fields.weight(d, &[-2.0]);
        if (df + 2.0 * (w1 + w2) - 2.0).abs() > 0.25 {
            break w2;
        }
    };
    let t1 = density(pack, fields.jet(d, k_ord), w1);
    let t2 = density(pack, fields.jet(d, k_ord), w2);
    let d1 = hatted_d(&t1, pack)?;
    let d2 = hatted_d(&t2, pack)?;
    let prod = hatted_d(&t1.times_density(&t2)?, pack)?;
    let h12 = df + 2.0 * (w1 + w2) - 2.0;
    let cross = tractor_metric(&d1, &d2, pack)?;
    let x = canonical_x(pack);
    let rhs = d1
        .times_density(&t2)?
        .try_add(&d2.times_density(&t1)?)?
        .try_sub(&x.times_density(&cross)?.scaled(2.0 / h12))?;
    rep.push("leibniz_failure", diff_at_point(&prod, &rhs));

    // Product rule for σ^k T and its squared form.
    // y divides by I² once per power, so σ is drawn with I² well away from zero.
    let (sigma, sl2) = loop {
        let sigma = fields.jet(d, k_ord);
        let sl2 = Sl2Triple::new(&sigma, pack)?;
        if sl2.norm_sq()?.value().abs() >= 0.5 {
            break (sigma, sl2);
        }
    };
    let i_sc = sl2.scale_tractor().clone();
    let i2 = sl2.norm_sq()?;
    let w = fields.weight(d, &[-2.0, 0.0, 2.0, 4.0]);
    let t = density(pack, fields.jet(d, k_ord), w);
    let dt = hatted_d(&t, pack)?;
    let idt = laplace_robin(&i_sc, &t, pack)?;
    let hw = df + 2.0 * w - 2.0;
    let mut sip: f64 = 0.0;
    let mut sq: f64 = 0.0;
    for k in 1..=3usize {
        let kf = k as f64;
        let hk = df + 2.0 * kf + 2.0 * w - 2.0;
        let sk = density(pack, pow(&sigma, k, pack), kf);
        let skm1 = density(pack, pow(&sigma, k - 1, pack), kf - 1.0);
        let skt = t.times_density(&sk)?;
        let dskt = hatted_d(&skt, pack)?;
        let lhs = dskt.try_sub(&dt.times_density(&sk)?)?;
        let mut rhs = i_sc.times_density(&skm1)?.times_density(&t)?.scaled(kf);
        let c1 = 2.0 * kf / (hk * hw);
        rhs = rhs.try_sub(&x.times_density(&skm1)?.times_density(&idt)?.scaled(c1).with_weight(rhs.weight()))?;
        if k >= 2 {
            let skm2 = density(pack, pow(&sigma, k - 2, pack), kf - 2.0);
            let term = x.times_density(&skm2)?.times_density(&density(pack, i2.clone(), 0.0))?.times_density(&t)?;
            rhs = rhs.try_sub(&term.scaled(kf * (kf - 1.0) / hk))?;
        }
        sip = sip.max(diff_at_point(&lhs, &rhs));

        let lhs2 = tractor_metric(&dskt, &dskt, pack)?.value();
        let s = sigma.value();
        let tv = t.value();
        let rhs2 = s.powi(2 * k as i32) * tractor_metric(&dt, &dt, pack)?.value()
            + 2.0 * kf * (df - 2.0) / hk
                * tv
                * (s.powi(2 * k as i32 - 1) * idt.value() / hw
                    + (kf * df + 2.0 * w) * s.powi(2 * k as i32 - 2) * i2.value() * tv / (2.0 * (df - 2.0)));
        sq = sq.max((lhs2 - rhs2).abs());
    }
    rep.push("hatted_d_power_product", sip);
    rep.push("hatted_d_power_square", sq);

    // [I·D, σ^{k+1}] t = I² σ^k (k + 1)(d + 2w + k) t.
    let w = fields.weight(d, &[]);
    let t = density(pack, fields.jet(d, k_ord), w);
    let idt = laplace_robin(&i_sc, &t, pack)?;
    let mut alg: f64 = 0.0;
    for k in 0..=2usize {
        let kf = k as f64;
        let sk1 = density(pack, pow(&sigma, k + 1, pack), kf + 1.0);
        let lhs = laplace_robin(&i_sc, &t.times_density(&sk1)?, pack)?.value() - sk1.value() * idt.value();
        let rhs = i2.value() * sigma.value().powi(k as i32) * (kf + 1.0) * (df + 2.0 * w + kf) * t.value();
        alg = alg.max((lhs - rhs).abs());
    }
    rep.push("laplace_robin_power_commutator", alg);

    // sl(2) relations and the power identities. Powers move the weight by up
    // to three in either direction, so every hatted D pole in that range is avoided.
    let w = fields.weight(d, &[-8.0, -6.0, -4.0, -2.0, 0.0, 2.0, 4.0]);
    let t = density(pack, fields.jet(d, k_ord), w);
    let hv = |u: &TensorValue| sl2.h(u);
    let hx = hv(&sl2.x(&t)).try_sub(&sl2.x(&hv(&t)))?;
    let mut s2: f64 = diff_at_point(&hx, &sl2.x(&t).scaled(2.0));
    let xy = sl2.x(&sl2.y(&t)?).try_sub(&sl2.y(&sl2.x(&t))?)?;
    s2 = s2.max(diff_at_point(&xy, &hv(&t)));
    let hy = hv(&sl2.y(&t)?).try_sub(&sl2.y(&hv(&t))?)?;
    s2 = s2.max(diff_at_point(&hy, &sl2.y(&t)?.scaled(-2.0)));
    rep.push("sl2_relations", s2);
    let mut yk: f64 = 0.0;
    for k in 1..=3usize {
        let kf = k as f64;
        let lhs = sl2.x(&sl2.y_pow(&t, k)?).try_sub(&sl2.y_pow(&sl2.x(&t), k)?)?;
        let rhs = sl2.y_pow(&t, k - 1)?.scaled(kf * (df + 2.0 * w - kf + 1.0));
        yk = yk.max(diff_at_point(&lhs, &rhs));
        let lhs = sl2.x_pow(&sl2.y(&t)?, k).try_sub(&sl2.y(&sl2.x_pow(&t, k))?)?;
        let rhs = sl2.x_pow(&t, k - 1).scaled(kf * (df + 2.0 * w + kf - 1.0));
        yk = yk.max(diff_at_point(&lhs, &rhs));
    }
    rep.push("sl2_powers", yk);
    Ok(rep)
}

/// Compares Thomas D computed in `g` and in `Ω²g` after retrivialization.
pub fn thomas_d_covariance(
    geometry: &Geometry,
    omega: &ExprAst,
    point: &[f64],
    order: usize,
    fields: &mut RandomFields,
) -> Result<f64> {
    let d = geometry.dim();
    let pack = geometry.curvature_pack(point, order)?;
    let hat = geometry.conformal_rescale(omega);
    let pack_hat = hat.curvature_pack(point, order)?;
    let om = lift(omega, point, order)?;
    if om.value() <= 0.0 {
        return Err(Error::NonPositiveFactor(om.value()));
    }
    let mut worst: f64 = 0.0;
    for _ in 0..2 {
        let w = fields.weight(d, &[]);
        let f = TensorValue::density(fields.jet(d, order), w, pack.scale());
        let f_hat = retrivialize(&f, &om, &pack, pack_hat.scale())?;
        let mapped = retrivialize(&thomas_d(&f, &pack)?, &om, &pack, pack_hat.scale())?;
        let direct = thomas_d(&f_hat, &pack_hat)?;
        worst = worst.max(diff_at_point(&mapped, &direct));
        // Also on a tractor-valued field, exercising the coupled connection.
        let comps = (0..d + 2).map(|_| fields.jet(d, order)).collect();
        let t = TensorValue::from_comps(d, vec![Slot::Tractor], w, pack.scale(), comps);
        let t_hat = retrivialize(&t, &om, &pack, pack_hat.scale())?;
        let mapped = retrivialize(&thomas_d(&t, &pack)?, &om, &pack, pack_hat.scale())?;
        let direct = thomas_d(&t_hat, &pack_hat)?;
        worst = worst.max(diff_at_point(&mapped, &direct));
    }
    Ok(worst)
}

/// Residual of `[I·D, log σ] f = (I²/σ)(d + 2w − 1) f` at a point with `σ > 0`.
///
/// The log density is trivialized against the true scale `τ`: the computation
/// runs in `τ^{-2} g`, where `log σ` is represented by the function
/// `log(σ/τ)` and the weight operator contributes a unit shift.
pub fn log_commutator_residual(
    geometry: &Geometry,
    sigma: &ExprAst,
    tau: &ExprAst,
    f: &ExprAst,
    w: f64,
    point: &[f64],
    order: usize,
) -> Result<f64> {
    let scale_metric = geometry.conformal_rescale(&(ExprAst::Const(1.0) / tau.clone()));
    let pack = scale_metric.curvature_pack(point, order)?;
    let tau_j = lift(tau, point, order)?;
    if tau_j.value() <= 0.0 {
        return Err(Error::NonPositiveFactor(tau_j.value()));
    }
    let sigma_hat = lift(sigma, point, order)?.div_jet(&tau_j)?;
    if sigma_hat.value() <= 0.0 {
        return Err(Error::OffSurfaceRequired(sigma_hat.value()));
    }
    let f_hat = lift(f, point, order)?.mul_jet(&tau_j.powf(-w)?);
    let log_sigma = sigma_hat.ln()?;
    let i = scale_tractor(&sigma_hat, &pack)?;
    let t = TensorValue::density(f_hat.clone(), w, pack.scale());
    let lt = TensorValue::density(&log_sigma * &f_hat, w, pack.scale());
    let lhs = laplace_robin(&i, &lt, &pack)?.value() - log_sigma.value() * laplace_robin(&i, &t, &pack)?.value()
        + contract_first(&i, &thomas_d_weight_derivative(&t, &pack)?, &pack)?.value();
    let i2 = tractor_metric(&i, &i, &pack)?.value();
    let rhs = i2 / sigma_hat.value() * (pack.dim() as f64 + 2.0 * w - 1.0) * f_hat.value();
    Ok((lhs - rhs).abs())
}
