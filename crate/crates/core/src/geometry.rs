//! Ambient Riemannian data at a base point: metric, Levi-Civita connection,
//! Riemann/Ricci/Schouten/Weyl/Cotton tensors, and conformal rescaling.
//!
//! Curvature convention: `[∇_a, ∇_b] v^c = R_ab^c_d v^d`, so the round sphere
//! has positive Ricci curvature and `R_abcd = W_abcd + 2 g_c[a P_b]d + 2 g_d[b P_a]c`.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use asc_jets::{lift, ExprAst, Jet};

use crate::error::{Error, Result};
use crate::tensor::{multi_indices, ScaleTag, Slot, TensorValue};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 5;

/// A metric given by coordinate expressions on a single chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    dim: usize,
    metric: Vec<ExprAst>,
    label: String,
}

impl Geometry {
    fn check_dim(dim: usize) -> Result<()> {
        if !(3..=MAX_DIM).contains(&dim) {
            return Err(Error::UnsupportedDimension { got: dim, max: MAX_DIM });
        }
        Ok(())
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::check_dim(dim)?;
        let metric = (0..dim * dim)
            .map(|k| ExprAst::Const(if k / dim == k % dim { 1.0 } else { 0.0 }))
            .collect();
        Ok(Self { dim, metric, label: "euclidean".into() })
    }

    /// `Ω² δ`.
    pub fn conformally_flat(dim: usize, omega: ExprAst) -> Result<Self> {
        let g = Self::euclidean(dim)?.conformal_rescale(&omega);
        Ok(Self { label: format!("conformally_flat({omega})"), ..g })
    }

    /// Row-major component matrix; symmetry is checked structurally here and
    /// numerically at every evaluation.
    pub fn explicit(dim: usize, components: Vec<ExprAst>) -> Result<Self> {
        Self::check_dim(dim)?;
        if components.len() != dim * dim {
            return Err(Error::Domain(format!(
                "expected {} metric components, got {}",
                dim * dim,
                components.len()
            )));
        }
        Ok(Self { dim, metric: components, label: "explicit".into() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn component(&self, a: usize, b: usize) -> &ExprAst {
        &self.metric[a * self.dim + b]
    }

    /// `Ω² g`.
    pub fn conformal_rescale(&self, omega: &ExprAst) -> Self {
        let w2 = omega.clone().pow(2, 1);
        let metric = self.metric.iter().map(|c| w2.clone() * c.clone()).collect();
        Self { dim: self.dim, metric, label: format!("({omega})^2 * {}", self.label) }
    }

    /// Pullback under the linear map `x ↦ M x` (row-major `M`).
    pub fn pullback_linear(&self, m: &[f64]) -> Self {
        let d = self.dim;
        let subs: Vec<ExprAst> = (0..d)
            .map(|i| {
                (0..d).fold(ExprAst::Const(0.0), |acc, j| acc + m[i * d + j] * ExprAst::Var(j))
            })
            .collect();
        let moved: Vec<ExprAst> = self.metric.iter().map(|c| c.substitute(&subs)).collect();
        let metric = multi_indices(&[d, d])
            .map(|ab| {
                let mut acc = ExprAst::Const(0.0);
                for c in 0..d {
                    for e in 0..d {
                        let coef = m[c * d + ab[0]] * m[e * d + ab[1]];
                        if coef != 0.0 {
                            acc = acc + coef * moved[c * d + e].clone();
                        }
                    }
                }
                acc
            })
            .collect();
        Self { dim: d, metric, label: format!("pullback({})", self.label) }
    }

    /// Tag identifying this metric as a trivializing scale.
    pub fn scale_tag(&self) -> ScaleTag {
        let mut h = DefaultHasher::new();
        self.dim.hash(&mut h);
        for c in &self.metric {
            c.to_string().hash(&mut h);
        }
        ScaleTag(h.finish())
    }

    /// Lifts the metric at `point` and computes all curvature tensors.
    pub fn curvature_pack(&self, point: &[f64], order: usize) -> Result<CurvaturePack> {
        if order < 4 {
            return Err(asc_jets::JetError::InsufficientOrder { needed: 4, available: order }.into());
        }
        if point.len() != self.dim {
            return Err(Error::WrongDimension { expected: self.dim, got: point.len() });
        }
        let g: Vec<Jet> =
            self.metric.iter().map(|e| lift(e, point, order)).collect::<Result<_, _>>()?;
        CurvaturePack::from_metric(self.dim, g, self.scale_tag(), point.to_vec())
    }
}

/// Inverts a matrix of jets by Gauss–Jordan elimination with pivoting on constant terms.
pub fn invert_jet_matrix(m: &[Jet], n: usize) -> Result<Vec<Jet>> {
    let mut a: Vec<Jet> = m.to_vec();
    let mut inv: Vec<Jet> =
        (0..n * n).map(|k| m[0].constant_like(if k / n == k % n { 1.0 } else { 0.0 })).collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i * n + col].value().abs().total_cmp(&a[j * n + col].value().abs()))
            .expect("nonempty range");
        if a[piv * n + col].value().abs() < 1e-300 {
            return Err(Error::SingularMetric);
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
                inv.swap(piv * n + k, col * n + k);
            }
        }
        let r = a[col * n + col].recip()?;
        for k in 0..n {
            a[col * n + k] = &a[col * n + k] * &r;
            inv[col * n + k] = &inv[col * n + k] * &r;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = a[i * n + col].clone();
            if f.is_zero() {
                continue;
            }
            for k in 0..n {
                let da = &f * &a[col * n + k];
                let di = &f * &inv[col * n + k];
                a[i * n + k] -= &da;
                inv[i * n + k] -= &di;
            }
        }
    }
    Ok(inv)
}

/// Curvature data of a metric at a base point.
#[derive(Debug, Clone)]
pub struct CurvaturePack {
    dim: usize,
    point: Vec<f64>,
    scale: ScaleTag,
    /// `g_ab`, weight 2.
    pub metric: TensorValue,
    /// `g^ab`, weight −2.
    pub inverse_metric: TensorValue,
    /// `Γ^c_ab` stored as `[c][a][b]`.
    pub christoffel: TensorValue,
    /// `R_ab^c_d`.
    pub riemann_mixed: TensorValue,
    /// `R_abcd`.
    pub riemann: TensorValue,
    pub ricci: TensorValue,
    pub scalar_curvature: TensorValue,
    pub schouten: TensorValue,
    /// `P_a^c`.
    pub schouten_mixed: TensorValue,
    /// `J = g^ab P_ab`.
    pub schouten_trace: TensorValue,
    pub weyl: TensorValue,
    /// `C_abc = ∇_a P_bc − ∇_b P_ac`.
    pub cotton: TensorValue,
    christoffel_nz: Vec<bool>,
    schouten_nz: bool,
}

impl CurvaturePack {
    fn from_metric(dim: usize, g: Vec<Jet>, scale: ScaleTag, point: Vec<f64>) -> Result<Self> {
        let d = dim;
        for a in 0..d {
            for b in 0..a {
                if (&g[a * d + b] - &g[b * d + a]).max_abs() > 1e-12 {
                    return Err(Error::AsymmetricMetric(a, b));
                }
            }
        }
        check_positive_definite(&g.iter().map(Jet::value).collect::<Vec<_>>(), d)?;
        let ginv = invert_jet_matrix(&g, d)?;
        let dg: Vec<Vec<Jet>> = (0..d)
            .map(|c| g.iter().map(|x| x.partial(c)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<_, _>>()?;
        // Γ_{e,ab} = ½(∂_a g_eb + ∂_b g_ea − ∂_e g_ab)
        let gamma_low: Vec<Jet> = multi_indices(&[d, d, d])
            .map(|i| {
                let (e, a, b) = (i[0], i[1], i[2]);
                (&(&dg[a][e * d + b] + &dg[b][e * d + a]) - &dg[e][a * d + b]).scale(0.5)
            })
            .collect();
        let gamma: Vec<Jet> = multi_indices(&[d, d, d])
            .map(|i| {
                let (c, a, b) = (i[0], i[1], i[2]);
                let mut acc = g[0].zero_like();
                for e in 0..d {
                    let gl = &gamma_low[(e * d + a) * d + b];
                    if !gl.is_zero() {
                        acc += &(&ginv[c * d + e] * gl);
                    }
                }
                acc
            })
            .collect();
        let gi = |c: usize, a: usize, b: usize| (c * d + a) * d + b;
        let dgamma: Vec<Vec<Jet>> = (0..d)
            .map(|a| gamma.iter().map(|x| x.partial(a)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<_, _>>()?;
        let nz: Vec<bool> = gamma.iter().map(|x| !x.is_zero()).collect();
        // R_ab^c_d = ∂_a Γ^c_bd − ∂_b Γ^c_ad + Γ^c_ae Γ^e_bd − Γ^c_be Γ^e_ad
        let rmixed: Vec<Jet> = multi_indices(&[d, d, d, d])
            .map(|i| {
                let (a, b, c, dd) = (i[0], i[1], i[2], i[3]);
                let mut acc = &dgamma[a][gi(c, b, dd)] - &dgamma[b][gi(c, a, dd)];
                for e in 0..d {
                    if nz[gi(c, a, e)] && nz[gi(e, b, dd)] {
                        acc += &(&gamma[gi(c, a, e)] * &gamma[gi(e, b, dd)]);
                    }
                    if nz[gi(c, b, e)] && nz[gi(e, a, dd)] {
                        acc -= &(&gamma[gi(c, b, e)] * &gamma[gi(e, a, dd)]);
                    }
                }
                acc
            })
            .collect();
        let ri = |a: usize, b: usize, c: usize, e: usize| ((a * d + b) * d + c) * d + e;
        let riemann: Vec<Jet> = multi_indices(&[d, d, d, d])
            .map(|i| {
                let mut acc = g[0].zero_like();
                for e in 0..d {
                    acc += &(&g[i[2] * d + e] * &rmixed[ri(i[0], i[1], e, i[3])]);
                }
                acc
            })
            .collect();
        let ricci: Vec<Jet> = multi_indices(&[d, d])
            .map(|i| {
                let mut acc = g[0].zero_like();
                for a in 0..d {
                    acc += &rmixed[ri(a, i[0], a, i[1])];
                }
                acc
            })
            .collect();
        let mut sc = g[0].zero_like();
        for a in 0..d {
            for b in 0..d {
                sc += &(&ginv[a * d + b] * &ricci[a * d + b]);
            }
        }
        let jj = sc.scale(1.0 / (2.0 * (d as f64 - 1.0)));
        let schouten: Vec<Jet> = multi_indices(&[d, d])
            .map(|i| (&ricci[i[0] * d + i[1]] - &(&jj * &g[i[0] * d + i[1]])).scale(1.0 / (d as f64 - 2.0)))
            .collect();
        let schouten_mixed: Vec<Jet> = multi_indices(&[d, d])
            .map(|i| {
                let mut acc = g[0].zero_like();
                for e in 0..d {
                    acc += &(&schouten[i[0] * d + e] * &ginv[e * d + i[1]]);
                }
                acc
            })
            .collect();
        let weyl: Vec<Jet> = multi_indices(&[d, d, d, d])
            .map(|i| {
                let (a, b, c, e) = (i[0], i[1], i[2], i[3]);
                let p = |x: usize, y: usize| &schouten[x * d + y];
                let gg = |x: usize, y: usize| &g[x * d + y];
                let split = &(&(gg(c, a) * p(b, e)) - &(gg(c, b) * p(a, e)))
                    + &(&(gg(e, b) * p(a, c)) - &(gg(e, a) * p(b, c)));
                &riemann[ri(a, b, c, e)] - &split
            })
            .collect();
        let dp: Vec<Vec<Jet>> = (0..d)
            .map(|a| schouten.iter().map(|x| x.partial(a)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<_, _>>()?;
        // ∇_a P_bc = ∂_a P_bc − Γ^e_ab P_ec − Γ^e_ac P_be
        let nabla_p = |a: usize, b: usize, c: usize| {
            let mut acc = dp[a][b * d + c].clone();
            for e in 0..d {
                if nz[gi(e, a, b)] {
                    acc -= &(&gamma[gi(e, a, b)] * &schouten[e * d + c]);
                }
                if nz[gi(e, a, c)] {
                    acc -= &(&gamma[gi(e, a, c)] * &schouten[b * d + e]);
                }
            }
            acc
        };
        let cotton: Vec<Jet> = multi_indices(&[d, d, d])
            .map(|i| &nabla_p(i[0], i[1], i[2]) - &nabla_p(i[1], i[0], i[2]))
            .collect();
        let schouten_nz = schouten.iter().any(|x| !x.is_zero());

        use Slot::{Lower as L, Upper as U};
        let tv = |slots: Vec<Slot>, w: f64, c: Vec<Jet>| TensorValue::from_comps(d, slots, w, scale, c);
        Ok(Self {
            dim,
            point,
            scale,
            metric: tv(vec![L, L], 2.0, g),
            inverse_metric: tv(vec![U, U], -2.0, ginv),
            christoffel: tv(vec![U, L, L], 0.0, gamma),
            riemann_mixed: tv(vec![L, L, U, L], 0.0, rmixed),
            riemann: tv(vec![L, L, L, L], 2.0, riemann),
            ricci: tv(vec![L, L], 0.0, ricci),
            scalar_curvature: TensorValue::density(sc, -2.0, scale),
            schouten: tv(vec![L, L], 0.0, schouten),
            schouten_mixed: tv(vec![L, U], -2.0, schouten_mixed),
            schouten_trace: TensorValue::density(jj, -2.0, scale),
            weyl: tv(vec![L, L, L, L], 2.0, weyl),
            cotton: tv(vec![L, L, L], 0.0, cotton),
            christoffel_nz: nz,
            schouten_nz,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn scale(&self) -> ScaleTag {
        self.scale
    }

    pub fn order(&self) -> usize {
        self.metric.comps()[0].order()
    }

    #[inline]
    pub fn g(&self, a: usize, b: usize) -> &Jet {
        &self.metric.comps()[a * self.dim + b]
    }

    #[inline]
    pub fn ginv(&self, a: usize, b: usize) -> &Jet {
        &self.inverse_metric.comps()[a * self.dim + b]
    }

    #[inline]
    pub fn gamma(&self, c: usize, a: usize, b: usize) -> Option<&Jet> {
        let k = (c * self.dim + a) * self.dim + b;
        self.christoffel_nz[k].then(|| &self.christoffel.comps()[k])
    }

    #[inline]
    pub fn p(&self, a: usize, b: usize) -> Option<&Jet> {
        self.schouten_nz.then(|| &self.schouten.comps()[a * self.dim + b])
    }

    #[inline]
    pub fn p_mixed(&self, a: usize, c: usize) -> Option<&Jet> {
        self.schouten_nz.then(|| &self.schouten_mixed.comps()[a * self.dim + c])
    }

    pub fn j(&self) -> &Jet {
        self.schouten_trace.jet()
    }

    /// A constant jet of the pack's shape.
    pub fn constant(&self, c: f64) -> Jet {
        self.g(0, 0).constant_like(c)
    }

    /// Contracts `v_a w_b` with `g^ab`.
    pub fn dot_lower(&self, v: &[Jet], w: &[Jet]) -> Jet {
        let d = self.dim;
        let mut acc = self.constant(0.0);
        for a in 0..d {
            for b in 0..d {
                acc += &(&(self.ginv(a, b) * &v[a]) * &w[b]);
            }
        }
        acc
    }

    /// Raises a 1-form.
    pub fn raise(&self, v: &[Jet]) -> Vec<Jet> {
        let d = self.dim;
        (0..d)
            .map(|a| {
                let mut acc = self.constant(0.0);
                for b in 0..d {
                    acc += &(self.ginv(a, b) * &v[b]);
                }
                acc
            })
            .collect()
    }

    /// Lowers a vector.
    pub fn lower(&self, v: &[Jet]) -> Vec<Jet> {
        let d = self.dim;
        (0..d)
            .map(|a| {
                let mut acc = self.constant(0.0);
                for b in 0..d {
                    acc += &(self.g(a, b) * &v[b]);
                }
                acc
            })
            .collect()
    }

    /// Gradient 1-form of a scalar jet.
    pub fn gradient(&self, f: &Jet) -> Result<Vec<Jet>> {
        (0..self.dim).map(|a| f.partial(a).map_err(Into::into)).collect()
    }
}

fn check_positive_definite(m: &[f64], n: usize) -> Result<()> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return Err(Error::SingularMetric);
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(())
}

/// Levi-Civita derivative coupled to the tractor connection on tractor slots.
///
/// The new covariant slot is placed first. Lower and upper tensor slots get
/// the usual Christoffel corrections; a tractor slot `(σ, μ_b, ρ)` picks up
/// `(−μ_a, g_ab ρ + P_ab σ, −P_a^c μ_c)`.
pub fn covariant_derivative(t: &TensorValue, pack: &CurvaturePack) -> Result<TensorValue> {
    if t.scale() != pack.scale() {
        return Err(Error::ScaleMismatch);
    }
    let d = pack.dim();
    let shape = t.shape();
    let n = t.comps().len();
    let partials: Vec<Vec<Jet>> = (0..d)
        .map(|a| t.comps().iter().map(|c| c.partial(a)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()?;
    let strides: Vec<usize> = (0..shape.len()).map(|k| shape[k + 1..].iter().product()).collect();
    let mut slots = vec![Slot::Lower];
    slots.extend_from_slice(t.slots());
    let mut comps = Vec::with_capacity(d * n);
    for a in 0..d {
        for (off, idx) in multi_indices(&shape).enumerate() {
            let mut acc = partials[a][off].clone();
            for (s, slot) in t.slots().iter().enumerate() {
                let i = idx[s];
                let base = off - i * strides[s];
                let at = |e: usize| &t.comps()[base + e * strides[s]];
                match slot {
                    Slot::Lower => {
                        for e in 0..d {
                            if let Some(gm) = pack.gamma(e, a, i) {
                                acc -= &(gm * at(e));
                            }
                        }
                    }
                    Slot::Upper => {
                        for e in 0..d {
                            if let Some(gm) = pack.gamma(i, a, e) {
                                acc += &(gm * at(e));
                            }
                        }
                    }
                    Slot::Tractor => {
                        if i == 0 {
                            acc -= at(1 + a);
                        } else if i == d + 1 {
                            for c in 0..d {
                                if let Some(pm) = pack.p_mixed(a, c) {
                                    acc -= &(pm * at(1 + c));
                                }
                            }
                        } else {
                            let b = i - 1;
                            if let Some(p) = pack.p(a, b) {
                                acc += &(p * at(0));
                            }
                            acc += &(pack.g(a, b) * at(d + 1));
                            for c in 0..d {
                                if let Some(gm) = pack.gamma(c, a, b) {
                                    acc -= &(gm * at(1 + c));
                                }
                            }
                        }
                    }
                }
            }
            comps.push(acc);
        }
    }
    debug_assert_eq!(comps.len(), d * n);
    Ok(TensorValue::from_comps(d, slots, t.weight(), t.scale(), comps))
}

/// `Δ t = g^ab ∇_a ∇_b t` with the coupled connection.
pub fn laplacian(t: &TensorValue, pack: &CurvaturePack) -> Result<TensorValue> {
    let dd = covariant_derivative(&covariant_derivative(t, pack)?, pack)?;
    trace_first_two(&dd, pack)
}

/// Contracts the first two (covariant) slots with the inverse metric.
pub fn trace_first_two(t: &TensorValue, pack: &CurvaturePack) -> Result<TensorValue> {
    let d = pack.dim();
    if t.rank() < 2 || t.slots()[0] != Slot::Lower || t.slots()[1] != Slot::Lower {
        return Err(Error::SlotMismatch);
    }
    let rest: Vec<Slot> = t.slots()[2..].to_vec();
    let inner: usize = rest.iter().map(|s| s.range(d)).product();
    let comps = (0..inner)
        .map(|k| {
            let mut acc = pack.constant(0.0);
            for a in 0..d {
                for b in 0..d {
                    acc += &(pack.ginv(a, b) * &t.comps()[(a * d + b) * inner + k]);
                }
            }
            acc
        })
        .collect();
    Ok(TensorValue::from_comps(d, rest, t.weight(), t.scale(), comps))
}

/// Re-expresses a field trivialized in `g` in the scale `ĝ = Ω² g`.
///
/// Components gain `Ω^w`; each tractor slot is additionally mapped by the
/// change-of-splitting matrix with `Υ = d log Ω`.
pub fn retrivialize(
    t: &TensorValue,
    omega: &Jet,
    pack: &CurvaturePack,
    target: ScaleTag,
) -> Result<TensorValue> {
    if t.scale() != pack.scale() {
        return Err(Error::ScaleMismatch);
    }
    if omega.value() <= 0.0 {
        return Err(Error::NonPositiveFactor(omega.value()));
    }
    let d = pack.dim();
    let log_omega = omega.ln()?;
    let ups: Vec<Jet> = pack.gradient(&log_omega)?;
    let ups_up = pack.raise(&ups);
    let ups_sq = pack.dot_lower(&ups, &ups);
    let inv = omega.recip()?;
    let mut cur = t.map(|c| c * &omega.powf(t.weight()).expect("positive factor"));
    let shape = t.shape();
    let strides: Vec<usize> = (0..shape.len()).map(|k| shape[k + 1..].iter().product()).collect();
    for (s, slot) in t.slots().iter().enumerate() {
        if *slot != Slot::Tractor {
            continue;
        }
        let prev = cur.clone();
        let comps: Vec<Jet> = multi_indices(&shape)
            .enumerate()
            .map(|(off, idx)| {
                let i = idx[s];
                let base = off - i * strides[s];
                let at = |e: usize| &prev.comps()[base + e * strides[s]];
                if i == 0 {
                    omega * at(0)
                } else if i == d + 1 {
                    let mut acc = at(d + 1) - &(&ups_sq * at(0)).scale(0.5);
                    for c in 0..d {
                        acc -= &(&ups_up[c] * at(1 + c));
                    }
                    &inv * &acc
                } else {
                    omega * &(at(i) + &(&ups[i - 1] * at(0)))
                }
            })
            .collect();
        cur = TensorValue::from_comps(d, t.slots().to_vec(), t.weight(), t.scale(), comps);
    }
    Ok(cur.with_scale(target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use asc_jets::parse;

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
    fn euclidean_is_flat() {
        let p = Geometry::euclidean(3).unwrap().curvature_pack(&[0.2, 0.1, -0.4], 5).unwrap();
        for t in [&p.christoffel, &p.riemann, &p.schouten, &p.weyl, &p.cotton] {
            assert_eq!(t.max_abs_value(), 0.0);
        }
    }

    #[test]
    fn stereographic_sphere_scalar_curvature() {
        let omega = parse("2/(1 + x1^2 + x2^2 + x3^2)").unwrap();
        let p = Geometry::conformally_flat(3, omega).unwrap().curvature_pack(&[0.0; 3], 5).unwrap();
        assert_relative_eq!(p.scalar_curvature.value(), 6.0, epsilon = 1e-12);
    }

    #[test]
    fn exponential_conformal_christoffels() {
        let g = Geometry::conformally_flat(3, parse("exp(x3)").unwrap()).unwrap();
        let p = g.curvature_pack(&[0.0; 3], 4).unwrap();
        assert_relative_eq!(p.christoffel.get(&[0, 0, 2]).value(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(p.christoffel.get(&[2, 0, 0]).value(), -1.0, epsilon = 1e-14);
    }

    #[test]
    fn metric_is_parallel() {
        let p = curved3().curvature_pack(&[0.3, -0.2, 0.5], 5).unwrap();
        let ng = covariant_derivative(&p.metric, &p).unwrap();
        assert!(ng.comps().iter().all(|c| c.max_abs() < 1e-12));
    }

    #[test]
    fn ricci_identity() {
        let p = curved3().curvature_pack(&[0.3, -0.2, 0.5], 6).unwrap();
        let v = TensorValue::from_fn(3, vec![Slot::Upper], 0.0, p.scale(), |i| {
            lift(&parse(&format!("sin({}*x1 + x2) + x3^2*{}", i[0] + 1, i[0])).unwrap(), p.point(), 6).unwrap()
        });
        let ddv = covariant_derivative(&covariant_derivative(&v, &p).unwrap(), &p).unwrap();
        for idx in multi_indices(&[3, 3, 3]) {
            let (a, b, c) = (idx[0], idx[1], idx[2]);
            let lhs = ddv.get(&[a, b, c]).value() - ddv.get(&[b, a, c]).value();
            let rhs: f64 = (0..3).map(|e| p.riemann_mixed.get(&[a, b, c, e]).value() * v.get(&[e]).value()).sum();
            assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn curvature_symmetries_and_decomposition() {
        let p = curved3().curvature_pack(&[0.1, 0.4, -0.3], 5).unwrap();
        for i in multi_indices(&[3, 3, 3, 3]) {
            let r = |a, b, c, e| p.riemann.get(&[a, b, c, e]).value();
            let (a, b, c, e) = (i[0], i[1], i[2], i[3]);
            assert!((r(a, b, c, e) + r(b, a, c, e)).abs() < 1e-10);
            assert!((r(a, b, c, e) + r(a, b, e, c)).abs() < 1e-10);
            assert!((r(a, b, c, e) - r(c, e, a, b)).abs() < 1e-10);
            // d = 3 has no Weyl curvature.
            assert!(p.weyl.get(&i).value().abs() < 1e-10);
        }
        for i in multi_indices(&[3, 3]) {
            let lhs = p.ricci.get(&i).value();
            let rhs = p.schouten.get(&i).value() + p.j().value() * p.g(i[0], i[1]).value();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn contracted_bianchi_and_cotton() {
        let p = curved3().curvature_pack(&[0.1, 0.4, -0.3], 6).unwrap();
        let dric = covariant_derivative(&p.ricci, &p).unwrap();
        for b in 0..3 {
            let mut div = 0.0;
            for a in 0..3 {
                for c in 0..3 {
                    div += p.ginv(a, c).value() * dric.get(&[c, a, b]).value();
                }
            }
            let dsc = p.scalar_curvature.jet().partial(b).unwrap().value();
            assert!((div - 0.5 * dsc).abs() < 1e-9);
        }
        for i in multi_indices(&[3, 3, 3]) {
            let c = |a, b, e| p.cotton.get(&[a, b, e]).value();
            let (a, b, e) = (i[0], i[1], i[2]);
            assert!((c(a, b, e) + c(b, e, a) + c(e, a, b)).abs() < 1e-10);
        }
        for b in 0..3 {
            let tr: f64 = multi_indices(&[3, 3]).map(|i| p.ginv(i[0], i[1]).value() * p.cotton.get(&[i[0], b, i[1]]).value()).sum();
            assert!(tr.abs() < 1e-10);
        }
    }

    fn curved4() -> Geometry {
        let mut m = Vec::new();
        for a in 0..4 {
            for b in 0..4 {
                let s = if a == b {
                    format!("1 + 0.2*sin(x{} + 0.5*x{})", (a + 1) % 4 + 1, (a + 2) % 4 + 1)
                } else {
                    format!("0.07*x{}*x{}", a.min(b) + 1, a.max(b) + 1)
                };
                m.push(parse(&s).unwrap());
            }
        }
        Geometry::explicit(4, m).unwrap()
    }

    #[test]
    fn weyl_is_conformally_invariant() {
        let g = curved4();
        let omega = parse("exp(0.3*x1 - 0.2*x2^2)").unwrap();
        let gh = g.conformal_rescale(&omega);
        let x = [0.2, -0.1, 0.3, 0.05];
        let p = g.curvature_pack(&x, 5).unwrap();
        let ph = gh.curvature_pack(&x, 5).unwrap();
        let om = omega.eval(&x);
        for i in multi_indices(&[4, 4, 4, 4]) {
            let w = p.weyl.get(&i).value() * om * om;
            assert!((w - ph.weyl.get(&i).value()).abs() < 1e-8);
        }
        // Trace-freeness of W.
        for i in multi_indices(&[4, 4]) {
            let tr: f64 = multi_indices(&[4, 4]).map(|k| p.ginv(k[0], k[1]).value() * p.weyl.get(&[k[0], i[0], k[1], i[1]]).value()).sum();
            assert!(tr.abs() < 1e-10);
        }
    }

    #[test]
    fn schouten_transformation_law() {
        let g = curved3();
        let omega = parse("exp(0.3*x1 - 0.2*x2^2)").unwrap();
        let x = [0.2, -0.1, 0.3];
        let p = g.curvature_pack(&x, 6).unwrap();
        let ph = g.conformal_rescale(&omega).curvature_pack(&x, 6).unwrap();
        let log_om = lift(&omega, &x, 6).unwrap().ln().unwrap();
        let ups = TensorValue::from_fn(3, vec![Slot::Lower], 0.0, p.scale(), |i| log_om.partial(i[0]).unwrap());
        let dups = covariant_derivative(&ups, &p).unwrap();
        let u: Vec<f64> = ups.values();
        let usq: f64 = multi_indices(&[3, 3]).map(|i| p.ginv(i[0], i[1]).value() * u[i[0]] * u[i[1]]).sum();
        for i in multi_indices(&[3, 3]) {
            let (a, b) = (i[0], i[1]);
            let pred = p.schouten.get(&i).value() - dups.get(&[a, b]).value() + u[a] * u[b] - 0.5 * usq * p.g(a, b).value();
            assert!((pred - ph.schouten.get(&i).value()).abs() < 1e-8);
        }
    }

    #[test]
    fn retrivialize_identity_and_density() {
        let g = curved3();
        let x = [0.2, -0.1, 0.3];
        let p = g.curvature_pack(&x, 4).unwrap();
        let one = p.constant(1.0);
        let b = TensorValue::density(p.constant(0.7), -3.0, p.scale());
        let same = retrivialize(&b, &one, &p, p.scale()).unwrap();
        assert_eq!(same.value(), 0.7);
        let two = p.constant(2.0);
        let scaled = retrivialize(&b, &two, &p, ScaleTag(9)).unwrap();
        assert_relative_eq!(scaled.value(), 0.7 / 8.0);
        assert!(matches!(retrivialize(&b, &p.constant(-1.0), &p, ScaleTag(9)), Err(Error::NonPositiveFactor(_))));
    }

    #[test]
    fn pullback_by_identity() {
        let g = curved3();
        let id = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let x = [0.2, -0.1, 0.3];
        let a = g.curvature_pack(&x, 4).unwrap();
        let b = g.pullback_linear(&id).curvature_pack(&x, 4).unwrap();
        assert_relative_eq!(a.scalar_curvature.value(), b.scalar_curvature.value(), epsilon = 1e-13);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(Geometry::euclidean(2), Err(Error::UnsupportedDimension { .. })));
        let neg = Geometry::conformally_flat(3, parse("1").unwrap()).unwrap();
        assert!(neg.curvature_pack(&[0.0; 3], 3).is_err());
        let bad = Geometry::explicit(3, (0..9).map(|k| ExprAst::Const(if k == 0 { -1.0 } else if k % 4 == 0 { 1.0 } else { 0.0 })).collect()).unwrap();
        assert_eq!(bad.curvature_pack(&[0.0; 3], 4).unwrap_err(), Error::SingularMetric);
    }
}
