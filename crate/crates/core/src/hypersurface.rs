//! Hypersurface data along the zero set of a defining function.
//!
//! Every quantity is computed on the ambient jet through the level-set
//! extension `n̂ = ∇s/|∇s|`. Off the base point the fields describe the
//! level sets of `s`; at the base point they are the data of `Σ = {s = 0}`.

use asc_jets::{lift, ExprAst, Jet};

use crate::error::{Error, Result};
use crate::geometry::{covariant_derivative, CurvaturePack, Geometry};
use crate::tensor::{multi_indices, Slot, TensorValue};

/// Base-point tolerance for `|s(p)|`.
pub const ON_SURFACE_TOL: f64 = 1e-10;

/// Ambient data plus a defining function, evaluated as jets at a point of `Σ`.
#[derive(Debug, Clone)]
pub struct HypersurfaceContext {
    pack: CurvaturePack,
    defining: Jet,
    grad_norm: Jet,
    normal: Vec<Jet>,
    normal_up: Vec<Jet>,
    projector: Vec<Jet>,
}

impl HypersurfaceContext {
    pub fn new(geometry: &Geometry, s: &ExprAst, point: &[f64], order: usize) -> Result<Self> {
        let pack = geometry.curvature_pack(point, order)?;
        let jet = lift(s, point, order)?;
        Self::from_jet(pack, jet)
    }

    /// The constant term of `s` is zeroed after the on-surface check so that
    /// the level set through the base point is exactly `Σ`.
    pub fn from_jet(pack: CurvaturePack, s: Jet) -> Result<Self> {
        if s.value().abs() >= ON_SURFACE_TOL {
            return Err(Error::NotOnSurface(s.value().abs()));
        }
        let d = pack.dim();
        let s = s.with_zero_constant();
        let grad = pack.gradient(&s)?;
        let sq = pack.dot_lower(&grad, &grad);
        if sq.value() <= 1e-24 {
            return Err(Error::DegenerateNormal);
        }
        let grad_norm = sq.sqrt()?;
        let inv = grad_norm.recip()?;
        let normal: Vec<Jet> = grad.iter().map(|g| g * &inv).collect();
        let normal_up = pack.raise(&normal);
        let projector = multi_indices(&[d, d])
            .map(|i| {
                let id = pack.constant(if i[0] == i[1] { 1.0 } else { 0.0 });
                &id - &(&normal[i[0]] * &normal_up[i[1]])
            })
            .collect();
        Ok(Self { pack, defining: s, grad_norm, normal, normal_up, projector })
    }

    pub fn dim(&self) -> usize {
        self.pack.dim()
    }

    pub fn order(&self) -> usize {
        self.pack.order()
    }

    pub fn pack(&self) -> &CurvaturePack {
        &self.pack
    }

    pub fn point(&self) -> &[f64] {
        self.pack.point()
    }

    /// `s` with its constant term set to zero.
    pub fn defining(&self) -> &Jet {
        &self.defining
    }

    /// `|∇s|_g` as a jet.
    pub fn grad_norm(&self) -> &Jet {
        &self.grad_norm
    }

    /// `n̂_a`.
    pub fn normal(&self) -> &[Jet] {
        &self.normal
    }

    /// `n̂^a`.
    pub fn normal_up(&self) -> &[Jet] {
        &self.normal_up
    }

    /// `Π_a^b = δ_a^b − n̂_a n̂^b`.
    pub fn projector(&self, a: usize, b: usize) -> &Jet {
        &self.projector[a * self.dim() + b]
    }

    pub fn normal_field(&self) -> TensorValue {
        TensorValue::from_comps(self.dim(), vec![Slot::Lower], 1.0, self.pack.scale(), self.normal.clone())
    }

    /// `ḡ_ab = g_ab − n̂_a n̂_b`.
    pub fn induced_metric(&self) -> TensorValue {
        let p = &self.pack;
        TensorValue::from_fn(self.dim(), vec![Slot::Lower, Slot::Lower], 2.0, p.scale(), |i| {
            p.g(i[0], i[1]) - &(&self.normal[i[0]] * &self.normal[i[1]])
        })
    }

    /// `ḡ^ab = g^ab − n̂^a n̂^b`.
    pub fn induced_inverse(&self) -> TensorValue {
        let p = &self.pack;
        TensorValue::from_fn(self.dim(), vec![Slot::Upper, Slot::Upper], -2.0, p.scale(), |i| {
            p.ginv(i[0], i[1]) - &(&self.normal_up[i[0]] * &self.normal_up[i[1]])
        })
    }

    /// Projects every tensor slot onto the level-set tangent spaces.
    pub fn project(&self, t: &TensorValue) -> TensorValue {
        let d = self.dim();
        let transposed: Vec<Jet> =
            multi_indices(&[d, d]).map(|i| self.projector(i[1], i[0]).clone()).collect();
        let mut out = t.clone();
        for (s, slot) in t.slots().iter().enumerate() {
            out = match slot {
                Slot::Lower => out.transform_slot(s, &self.projector),
                Slot::Upper => out.transform_slot(s, &transposed),
                Slot::Tractor => out,
            };
        }
        out
    }

    /// Largest normal contraction of any tensor slot at the base point.
    pub fn normal_part(&self, t: &TensorValue) -> f64 {
        let at = t.at_point();
        let nl: Vec<Jet> = self.normal.iter().map(|n| n.truncate(0)).collect();
        let nu: Vec<Jet> = self.normal_up.iter().map(|n| n.truncate(0)).collect();
        let mut worst: f64 = 0.0;
        for (s, slot) in t.slots().iter().enumerate() {
            let c = match slot {
                Slot::Lower => at.contract_slot(s, &nu),
                Slot::Upper => at.contract_slot(s, &nl),
                Slot::Tractor => continue,
            };
            worst = worst.max(c.max_abs_value());
        }
        worst
    }

    /// `Π ∇ t` with every free tensor slot projected.
    pub fn tangential_derivative(&self, t: &TensorValue) -> Result<TensorValue> {
        Ok(self.project(&covariant_derivative(t, &self.pack)?))
    }

    /// Levi-Civita derivative of the induced metric applied to a tangential field.
    ///
    /// For tangential input the projected ambient derivative coincides with the
    /// Gauss-formula corrected one, since the correction is purely normal.
    pub fn intrinsic_derivative(&self, t: &TensorValue) -> Result<TensorValue> {
        let tol = 1e-9 * t.max_abs_value().max(1.0);
        let np = self.normal_part(t);
        if np > tol {
            return Err(Error::NotTangential(np));
        }
        self.tangential_derivative(t)
    }

    /// `ḡ^ab ∇̄_a ∇̄_b t`.
    pub fn intrinsic_laplacian(&self, t: &TensorValue) -> Result<TensorValue> {
        let dd = self.tangential_derivative(&self.intrinsic_derivative(t)?)?;
        Ok(trace_pair(&dd, 0, 1, &self.pack))
    }

    pub fn fundamental_forms(&self) -> Result<FundamentalForms> {
        let d = self.dim();
        let ii = self.tangential_derivative(&self.normal_field())?;
        let mean = trace_pair(&ii, 0, 1, &self.pack).scaled(1.0 / (d as f64 - 1.0)).with_weight(-1.0);
        let gbar = self.induced_metric();
        let h = mean.jet().clone();
        let trace_free = ii.try_sub(&gbar.map(|c| c * &h).with_weight(1.0))?;
        Ok(FundamentalForms { second: ii, mean, trace_free })
    }

    /// Intrinsic curvature from the commutator of intrinsic derivatives
    /// acting on the projected coordinate 1-forms.
    pub fn intrinsic_curvature(&self) -> Result<IntrinsicCurvature> {
        let d = self.dim();
        let p = &self.pack;
        let mut rm = vec![p.constant(0.0); d * d * d * d];
        for k in 0..d {
            let omega = TensorValue::from_fn(d, vec![Slot::Lower], 0.0, p.scale(), |i| {
                self.projector(i[0], k).clone()
            });
            let dd = self.tangential_derivative(&self.tangential_derivative(&omega)?)?;
            for i in multi_indices(&[d, d, d]) {
                let (a, b, c) = (i[0], i[1], i[2]);
                rm[((a * d + b) * d + k) * d + c] = dd.get(&[b, a, c]) - dd.get(&[a, b, c]);
            }
        }
        use Slot::{Lower as L, Upper as U};
        let riemann_mixed = TensorValue::from_comps(d, vec![L, L, U, L], 0.0, p.scale(), rm);
        let ricci = TensorValue::from_fn(d, vec![L, L], 0.0, p.scale(), |i| {
            let mut acc = p.constant(0.0);
            for a in 0..d {
                acc += riemann_mixed.get(&[a, i[0], a, i[1]]);
            }
            acc
        });
        let gbar_inv = self.induced_inverse();
        let mut sc = p.constant(0.0);
        for i in multi_indices(&[d, d]) {
            sc += &(gbar_inv.get(&i) * ricci.get(&i));
        }
        let n = d as f64 - 1.0;
        let jbar = sc.scale(1.0 / (2.0 * (n - 1.0)));
        let schouten = if d >= 4 {
            let gbar = self.induced_metric();
            Some(TensorValue::from_fn(d, vec![L, L], 0.0, p.scale(), |i| {
                (ricci.get(i) - &(&jbar * gbar.get(i))).scale(1.0 / (n - 2.0))
            }))
        } else {
            None
        };
        Ok(IntrinsicCurvature {
            riemann_mixed,
            ricci,
            scalar: TensorValue::density(sc, -2.0, p.scale()),
            jbar: TensorValue::density(jbar, -2.0, p.scale()),
            schouten,
        })
    }

    /// `F̄ = P^⊤ − P̄ + H II̊ + ½ ḡ H²`, defined for `d ≥ 4`.
    pub fn fialkow(&self, ff: &FundamentalForms, intrinsic: &IntrinsicCurvature) -> Result<TensorValue> {
        let pbar = intrinsic.schouten.as_ref().ok_or(Error::NotDefined("the Fialkow tensor"))?;
        let d = self.dim();
        let ptop = self.project(&self.pack.schouten);
        let gbar = self.induced_metric();
        let h = ff.mean.jet();
        let h2 = (h * h).scale(0.5);
        Ok(TensorValue::from_fn(d, vec![Slot::Lower, Slot::Lower], 0.0, self.pack.scale(), |i| {
            &(&(ptop.get(i) - pbar.get(i)) + &(h * ff.trace_free.get(i))) + &(&h2 * gbar.get(i))
        }))
    }

    /// Residuals of the classical hypersurface identities at the base point.
    pub fn identity_suite(&self) -> Result<IdentityReport> {
        let d = self.dim();
        let df = d as f64;
        let p = &self.pack;
        let ff = self.fundamental_forms()?;
        let intr = self.intrinsic_curvature()?;
        let n_up: Vec<Jet> = self.normal_up.clone();
        let gbar = self.induced_metric();
        let gbar_inv = self.induced_inverse();
        let v = |t: &TensorValue, i: &[usize]| t.get(i).value();
        let mut report = IdentityReport::default();

        // Gauss equation, lowering the intrinsic curvature's third slot with g.
        let rproj = self.project(&p.riemann.at_point());
        let ii = &ff.second;
        let mut gauss: f64 = 0.0;
        for i in multi_indices(&[d, d, d, d]) {
            let (a, b, c, e) = (i[0], i[1], i[2], i[3]);
            let rbar: f64 = (0..d).map(|k| p.g(c, k).value() * v(&intr.riemann_mixed, &[a, b, k, e])).sum();
            let rhs = v(&rproj, &i) + v(ii, &[a, c]) * v(ii, &[b, e]) - v(ii, &[a, e]) * v(ii, &[b, c]);
            gauss = gauss.max((rbar - rhs).abs());
        }
        report.push("gauss", gauss);

        // Codazzi–Mainardi: ∇̄_a II_bc − ∇̄_b II_ac = (R_abcd n̂^d)^⊤.
        let dii = self.intrinsic_derivative(ii)?;
        let rn = self.project(&p.riemann.contract_slot(3, &n_up).at_point());
        let mut codazzi: f64 = 0.0;
        for i in multi_indices(&[d, d, d]) {
            let (a, b, c) = (i[0], i[1], i[2]);
            let lhs = v(&dii, &[a, b, c]) - v(&dii, &[b, a, c]);
            codazzi = codazzi.max((lhs - v(&rn, &i)).abs());
        }
        report.push("codazzi_mainardi", codazzi);

        // Traced Codazzi: ∇̄·II̊_b − (d−2)∇̄_b H = (d−2) P(b, n̂)^⊤.
        let dii0 = self.intrinsic_derivative(&ff.trace_free)?;
        let div_ii0 = trace_pair(&dii0, 0, 1, p);
        let dh = self.intrinsic_derivative(&ff.mean)?;
        let pn = self.project(&p.schouten.contract_slot(1, &n_up).at_point());
        let mut traced: f64 = 0.0;
        for b in 0..d {
            let lhs = v(&div_ii0, &[b]) - (df - 2.0) * v(&dh, &[b]);
            traced = traced.max((lhs - (df - 2.0) * v(&pn, &[b])).abs());
        }
        report.push("codazzi_trace", traced);

        // Conformal Codazzi operator on II̊ against the projected Weyl curvature.
        let cod = codazzi_operator(&dii0, &gbar, p);
        let wn = self.project(&p.weyl.contract_slot(3, &n_up).at_point());
        let mut cres: f64 = 0.0;
        for i in multi_indices(&[d, d, d]) {
            cres = cres.max((v(&cod, &i) - v(&wn, &i)).abs());
        }
        report.push("conformal_codazzi", cres);

        // Fialkow–Gauss, d ≥ 4.
        let ii0 = &ff.trace_free;
        let ii0_sq = contract_full(ii0, ii0, &gbar_inv);
        if d >= 4 {
            let fk = self.fialkow(&ff, &intr)?;
            let wnn = p.weyl.contract_slot(3, &n_up).contract_slot(0, &n_up).at_point();
            let mut fres: f64 = 0.0;
            for i in multi_indices(&[d, d]) {
                let (a, b) = (i[0], i[1]);
                let sq: f64 = multi_indices(&[d, d])
                    .map(|k| v(ii0, &[a, k[0]]) * gbar_inv.get(&k).value() * v(ii0, &[k[1], b]))
                    .sum();
                let lhs = sq - 0.5 * v(&gbar, &i) * ii0_sq / (df - 2.0) - v(&wnn, &i);
                fres = fres.max((lhs - (df - 3.0) * v(&fk, &i)).abs());
            }
            report.push("fialkow_gauss", fres);
        }

        // Scalar Gauss equation in Schouten form.
        let h = ff.mean.value();
        let pnn: f64 = multi_indices(&[d, d]).map(|i| v(&p.schouten, &i) * n_up[i[0]].value() * n_up[i[1]].value()).sum();
        let jj = p.j().value() - pnn - intr.jbar.value() + 0.5 * (df - 1.0) * h * h - ii0_sq / (2.0 * (df - 2.0));
        report.push("j_jbar", jj.abs());

        // Laplacian of H against divergences of II and II̊.
        let lap_h = self.intrinsic_laplacian(&ff.mean)?.value();
        let ric_n = self.project(&p.ricci.contract_slot(1, &n_up));
        let div_field = |dt: &TensorValue| -> Result<f64> {
            let w = trace_pair(dt, 0, 1, p).try_sub(&ric_n.clone().with_weight(dt.weight() - 2.0))?;
            let dw = self.tangential_derivative(&w)?;
            Ok(trace_pair(&dw, 0, 1, p).value())
        };
        let via_ii = div_field(&dii)? / (df - 1.0);
        let via_ii0 = div_field(&dii0)? / (df - 2.0);
        report.push("laplacian_mean_curvature", (lap_h - via_ii).abs().max((lap_h - via_ii0).abs()));
        Ok(report)
    }
}

/// `ḡ^ab`-free trace of two covariant slots using `g^ab`; exact on projected tensors.
pub fn trace_pair(t: &TensorValue, s1: usize, s2: usize, pack: &CurvaturePack) -> TensorValue {
    let d = pack.dim();
    let shape = t.shape();
    let mut slots: Vec<Slot> = t.slots().to_vec();
    slots.remove(s2.max(s1));
    slots.remove(s2.min(s1));
    TensorValue::from_fn(d, slots, t.weight() - 2.0, t.scale(), |rest| {
        let mut full = vec![0; shape.len()];
        let mut acc = pack.constant(0.0);
        for a in 0..d {
            for b in 0..d {
                let mut k = 0;
                for (s, slot) in full.iter_mut().enumerate() {
                    *slot = if s == s1 {
                        a
                    } else if s == s2 {
                        b
                    } else {
                        k += 1;
                        rest[k - 1]
                    };
                }
                acc += &(pack.ginv(a, b) * t.get(&full));
            }
        }
        acc
    })
}

/// Full contraction `S_ab T_cd g^ac g^bd` at the base point.
fn contract_full(s: &TensorValue, t: &TensorValue, ginv: &TensorValue) -> f64 {
    let d = s.dim();
    multi_indices(&[d, d, d, d])
        .map(|i| {
            s.get(&[i[0], i[1]]).value()
                * t.get(&[i[2], i[3]]).value()
                * ginv.get(&[i[0], i[2]]).value()
                * ginv.get(&[i[1], i[3]]).value()
        })
        .sum()
}

/// Conformal Codazzi operator applied to `∇̄K̊` (slots `[a, b, c]`).
fn codazzi_operator(dk: &TensorValue, gbar: &TensorValue, pack: &CurvaturePack) -> TensorValue {
    let d = dk.dim();
    let df = d as f64;
    let div = trace_pair(dk, 0, 1, pack).at_point();
    let dk = dk.at_point();
    let gbar = gbar.at_point();
    TensorValue::from_fn(d, vec![Slot::Lower; 3], dk.weight(), dk.scale(), |i| {
        let (a, b, c) = (i[0], i[1], i[2]);
        let curl = dk.get(&[a, b, c]) - dk.get(&[b, a, c]);
        let tr = &(div.get(&[a]) * gbar.get(&[b, c])) - &(div.get(&[b]) * gbar.get(&[a, c]));
        &curl + &tr.scale(1.0 / (df - 2.0))
    })
}

/// Second fundamental form, mean curvature and trace-free part as level-set fields.
#[derive(Debug, Clone)]
pub struct FundamentalForms {
    /// `II_ab`, weight 1.
    pub second: TensorValue,
    /// `H`, weight −1.
    pub mean: TensorValue,
    /// `II̊_ab`, weight 1.
    pub trace_free: TensorValue,
}

impl FundamentalForms {
    /// `II̊_ab II̊^ab` at the base point, weight −2.
    pub fn trace_free_norm_sq(&self, ctx: &HypersurfaceContext) -> f64 {
        contract_full(&self.trace_free, &self.trace_free, &ctx.induced_inverse())
    }
}

/// Curvature of the induced metric, computed by commuting intrinsic derivatives.
#[derive(Debug, Clone)]
pub struct IntrinsicCurvature {
    /// `R̄_ab^c_d`.
    pub riemann_mixed: TensorValue,
    pub ricci: TensorValue,
    pub scalar: TensorValue,
    /// `J̄ = S̄c / (2(d − 2))`.
    pub jbar: TensorValue,
    /// `P̄`, only when the hypersurface has dimension at least 3.
    pub schouten: Option<TensorValue>,
}

/// Named absolute residuals of identities evaluated at one point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IdentityReport {
    pub entries: Vec<(String, f64)>,
}

impl IdentityReport {
    pub fn push(&mut self, name: impl Into<String>, residual: f64) {
        self.entries.push((name.into(), residual));
    }

    pub fn max_residual(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, (_, r)| m.max(if r.is_nan() { f64::INFINITY } else { *r }))
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, r)| *r)
    }

    pub fn extend(&mut self, other: IdentityReport) {
        self.entries.extend(other.entries);
    }
}

/// Residual magnitudes of `f = s·q₁`, `q₁ = s·q₂`, …: entry `j` measures the
/// restriction to `Σ` of the `j`-th quotient. Returns the final quotient too.
pub fn transverse_remainders(f: &Jet, s: &Jet, count: usize) -> Result<(Vec<f64>, Jet)> {
    let mut cur = f.clone();
    let mut rems = Vec::with_capacity(count);
    for _ in 0..count {
        let (q, r) = cur.div_vanishing(s)?;
        rems.push(r);
        cur = q;
    }
    Ok((rems, cur))
}

/// Unit defining functions `s̄_0, …, s̄_ℓ` with `|∇s̄_k|² − 1 = O(s^{k+1})`.
///
/// `s̄_0 = s/|∇s|`; each step multiplies by `1 − ½(|∇s̄|² − 1)/(k + 1)`.
pub fn unit_defining_steps(ctx: &HypersurfaceContext, target: usize) -> Result<Vec<Jet>> {
    if ctx.order() < target + 2 {
        return Err(asc_jets::JetError::InsufficientOrder { needed: target + 2, available: ctx.order() }.into());
    }
    let p = ctx.pack();
    let mut cur = ctx.defining().div_jet(ctx.grad_norm())?;
    let mut out = vec![cur.clone()];
    for k in 1..=target {
        let g = p.gradient(&cur)?;
        let excess = p.dot_lower(&g, &g).add_scalar(-1.0);
        let factor = excess.scale(-0.5 / (k as f64 + 1.0)).add_scalar(1.0);
        cur = &cur * &factor;
        out.push(cur.clone());
    }
    Ok(out)
}

/// Final unit defining function of order `target`.
pub fn unit_defining_function(ctx: &HypersurfaceContext, target: usize) -> Result<Jet> {
    Ok(unit_defining_steps(ctx, target)?.pop().expect("at least one step"))
}
