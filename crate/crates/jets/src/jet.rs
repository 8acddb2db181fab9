use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use crate::error::JetError;
use crate::table::MonomialTable;

/// Truncated Taylor polynomial about a base point.
///
/// Coefficients are stored in graded-lex order up to `valid_order`; the
/// coefficient of `y^α` (with `y = x − p`) is `∂^α f(p) / α!`.
#[derive(Clone)]
pub struct Jet {
    table: Arc<MonomialTable>,
    valid: usize,
    low: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("dim", &self.dim())
            .field("order", &self.order())
            .field("valid_order", &self.valid)
            .field("low_order", &self.low)
            .field("value", &self.value())
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.dim() == other.dim()
            && self.order() == other.order()
            && self.valid == other.valid
            && self.coeffs == other.coeffs
    }
}

impl Jet {
    fn raw(table: Arc<MonomialTable>, valid: usize, low: usize, coeffs: Vec<f64>) -> Self {
        debug_assert_eq!(coeffs.len(), table.count(valid));
        let low = low.min(table.order + 1);
        Self { table, valid, low, coeffs }
    }

    /// Constant jet, exact through the truncation order.
    pub fn constant(dim: usize, order: usize, c: f64) -> Self {
        let table = MonomialTable::shared(dim, order);
        let mut coeffs = vec![0.0; table.count(order)];
        coeffs[0] = c;
        let low = if c == 0.0 { order + 1 } else { 0 };
        Self::raw(table, order, low, coeffs)
    }

    pub fn zero(dim: usize, order: usize) -> Self {
        Self::constant(dim, order, 0.0)
    }

    /// The coordinate function `x_i` expanded about a point whose `i`-th coordinate is `at`.
    pub fn variable(dim: usize, order: usize, i: usize, at: f64) -> Self {
        assert!(i < dim, "variable index {i} out of range for dimension {dim}");
        let mut j = Self::constant(dim, order, at);
        if order >= 1 {
            j.coeffs[1 + i] = 1.0;
        }
        j.low = if at == 0.0 { 1 } else { 0 };
        j
    }

    /// Builds a jet from a coefficient function over exponent vectors.
    pub fn from_fn(dim: usize, order: usize, mut f: impl FnMut(&[u8]) -> f64) -> Self {
        let table = MonomialTable::shared(dim, order);
        let n = table.count(order);
        let coeffs = (0..n).map(|i| f(table.exponents(i))).collect();
        Self::raw(table, order, 0, coeffs)
    }

    /// Same shape as `self`, constant `c`.
    pub fn constant_like(&self, c: f64) -> Self {
        Self::constant(self.dim(), self.order(), c)
    }

    pub fn zero_like(&self) -> Self {
        self.constant_like(0.0)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.table.dim
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.table.order
    }

    #[inline]
    pub fn valid_order(&self) -> usize {
        self.valid
    }

    /// Structural lower bound on the degree of the first nonzero coefficient.
    #[inline]
    pub fn low_order(&self) -> usize {
        self.low
    }

    /// Value at the base point.
    #[inline]
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// All stored coefficients in graded-lex order.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Exponent vector of the `i`-th stored coefficient.
    pub fn exponents(&self, i: usize) -> &[u8] {
        self.table.exponents(i)
    }

    /// Taylor coefficient of `y^α`, or `None` beyond the valid order.
    pub fn coeff(&self, alpha: &[u8]) -> Option<f64> {
        let deg: usize = alpha.iter().map(|&e| e as usize).sum();
        if alpha.len() != self.dim() || deg > self.valid {
            return None;
        }
        self.table.index_of(alpha).map(|i| self.coeffs[i])
    }

    /// Partial derivative `∂^α f(p)`.
    pub fn derivative(&self, alpha: &[u8]) -> Result<f64, JetError> {
        let deg: usize = alpha.iter().map(|&e| e as usize).sum();
        let c = self
            .coeff(alpha)
            .ok_or(JetError::InsufficientOrder { needed: deg, available: self.valid })?;
        let fact: f64 = alpha.iter().map(|&e| (1..=e as u64).product::<u64>() as f64).product();
        Ok(c * fact)
    }

    /// True when every stored coefficient is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    /// Largest coefficient magnitude over the valid range.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Evaluates the truncated polynomial at displacement `y` from the base point.
    pub fn eval_displacement(&self, y: &[f64]) -> f64 {
        (0..self.coeffs.len())
            .map(|i| {
                let e = self.table.exponents(i);
                self.coeffs[i] * e.iter().zip(y).map(|(&k, &v)| v.powi(k as i32)).product::<f64>()
            })
            .sum()
    }

    /// Drops coefficients above degree `v`.
    pub fn truncate(&self, v: usize) -> Self {
        if v >= self.valid {
            return self.clone();
        }
        let n = self.table.count(v);
        Self::raw(self.table.clone(), v, self.low, self.coeffs[..n].to_vec())
    }

    /// Sets the constant term to exactly zero, recording that the jet vanishes at the base point.
    pub fn with_zero_constant(&self) -> Self {
        let mut out = self.clone();
        out.coeffs[0] = 0.0;
        out.low = out.low.max(1);
        out
    }

    fn same_shape(&self, other: &Self) -> Result<(), JetError> {
        if self.dim() != other.dim() || self.order() != other.order() {
            return Err(JetError::ShapeMismatch(self.dim(), self.order(), other.dim(), other.order()));
        }
        Ok(())
    }

    fn assert_shape(&self, other: &Self) {
        if let Err(e) = self.same_shape(other) {
            panic!("{e}");
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        let coeffs = self.coeffs.iter().map(|x| x * c).collect();
        let low = if c == 0.0 { self.order() + 1 } else { self.low };
        Self::raw(self.table.clone(), self.valid, low, coeffs)
    }

    pub fn add_scalar(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += c;
        if c != 0.0 {
            out.low = 0;
        }
        out
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        self.assert_shape(other);
        let valid = self.valid.min(other.valid);
        let n = self.table.count(valid);
        let coeffs = (0..n).map(|i| self.coeffs[i] + sign * other.coeffs[i]).collect();
        Self::raw(self.table.clone(), valid, self.low.min(other.low), coeffs)
    }

    /// Truncated Cauchy product with refined validity tracking.
    pub fn mul_jet(&self, other: &Self) -> Self {
        self.assert_shape(other);
        let order = self.order();
        let valid = (self.valid + other.low).min(other.valid + self.low).min(order);
        let low = self.low + other.low;
        let mut out = vec![0.0; self.table.count(valid)];
        if low <= valid {
            for da in self.low..=self.valid.min(valid) {
                let top_b = other.valid.min(valid - da);
                if other.low > top_b {
                    continue;
                }
                for db in other.low..=top_b {
                    for &(i, j, k) in self.table.products(da, db) {
                        out[k as usize] += self.coeffs[i as usize] * other.coeffs[j as usize];
                    }
                }
            }
        }
        Self::raw(self.table.clone(), valid, low, out)
    }

    /// Formal partial derivative in direction `i`; the valid order drops by one.
    pub fn partial(&self, i: usize) -> Result<Self, JetError> {
        assert!(i < self.dim(), "direction {i} out of range");
        if self.valid == 0 {
            return Err(JetError::InsufficientOrder { needed: 1, available: 0 });
        }
        let valid = self.valid - 1;
        let n = self.table.count(self.valid);
        let mut out = vec![0.0; self.table.count(valid)];
        for &(src, dst, f) in self.table.derivs(i) {
            if src as usize >= n {
                break;
            }
            out[dst as usize] += f * self.coeffs[src as usize];
        }
        Ok(Self::raw(self.table.clone(), valid, self.low.saturating_sub(1), out))
    }

    /// Evaluates `Σ c_n (self − self(p))^n`; `c` holds Taylor coefficients of the outer function.
    fn compose(&self, c: &[f64]) -> Self {
        let hat = self.with_zero_constant();
        let terms = if hat.low > self.valid { 0 } else { self.valid / hat.low };
        let terms = terms.min(c.len() - 1);
        let mut acc = self.constant_like(c[terms]).truncate(self.valid);
        for n in (0..terms).rev() {
            acc = acc.mul_jet(&hat).add_scalar(c[n]);
        }
        if c[0] == 0.0 {
            acc.low = acc.low.max(hat.low);
        }
        acc
    }

    fn series_len(&self) -> usize {
        self.valid + 1
    }

    pub fn recip(&self) -> Result<Self, JetError> {
        let a0 = self.value();
        if a0 == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        let c: Vec<f64> = (0..self.series_len())
            .map(|n| if n % 2 == 0 { 1.0 } else { -1.0 } / a0.powi(n as i32 + 1))
            .collect();
        Ok(self.compose(&c))
    }

    pub fn div_jet(&self, other: &Self) -> Result<Self, JetError> {
        self.same_shape(other)?;
        Ok(self.mul_jet(&other.recip()?))
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        let mut c = Vec::with_capacity(self.series_len());
        let mut f = 1.0;
        for n in 0..self.series_len() {
            if n > 0 {
                f *= n as f64;
            }
            c.push(e / f);
        }
        self.compose(&c)
    }

    pub fn ln(&self) -> Result<Self, JetError> {
        let a0 = self.value();
        if a0 <= 0.0 {
            return Err(JetError::Domain(format!("log of nonpositive value {a0}")));
        }
        let c: Vec<f64> = (0..self.series_len())
            .map(|n| match n {
                0 => a0.ln(),
                _ => {
                    let s = if n % 2 == 1 { 1.0 } else { -1.0 };
                    s / (n as f64 * a0.powi(n as i32))
                }
            })
            .collect();
        Ok(self.compose(&c))
    }

    /// Real power with a generalized binomial series; requires a positive base.
    pub fn powf(&self, r: f64) -> Result<Self, JetError> {
        if r.fract() == 0.0 && r.abs() <= 1024.0 {
            return self.powi(r as i32);
        }
        let a0 = self.value();
        if a0 <= 0.0 {
            return Err(JetError::Domain(format!("non-integer power {r} of nonpositive value {a0}")));
        }
        let mut c = Vec::with_capacity(self.series_len());
        let mut binom = 1.0;
        for n in 0..self.series_len() {
            if n > 0 {
                binom *= (r - (n as f64 - 1.0)) / n as f64;
            }
            c.push(binom * a0.powf(r - n as f64));
        }
        Ok(self.compose(&c))
    }

    pub fn powi(&self, n: i32) -> Result<Self, JetError> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut result = self.constant_like(1.0);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_jet(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_jet(&base);
            }
        }
        Ok(result)
    }

    pub fn sqrt(&self) -> Result<Self, JetError> {
        if self.value() <= 0.0 {
            return Err(JetError::Domain(format!("sqrt of nonpositive value {}", self.value())));
        }
        self.powf(0.5)
    }

    fn trig(&self, phase: usize) -> Self {
        let a0 = self.value();
        let cycle = [a0.sin(), a0.cos(), -a0.sin(), -a0.cos()];
        let mut c = Vec::with_capacity(self.series_len());
        let mut f = 1.0;
        for n in 0..self.series_len() {
            if n > 0 {
                f *= n as f64;
            }
            c.push(cycle[(n + phase) % 4] / f);
        }
        self.compose(&c)
    }

    pub fn sin(&self) -> Self {
        self.trig(0)
    }

    pub fn cos(&self) -> Self {
        self.trig(1)
    }

    pub fn tanh(&self) -> Self {
        // tanh a = 1 − 2 / (e^{2a} + 1); the denominator never vanishes.
        let e = self.scale(2.0).exp().add_scalar(1.0);
        let r = e.recip().expect("e^{2a} + 1 is positive");
        r.scale(-2.0).add_scalar(1.0)
    }

    /// Division by a jet `s` vanishing at the base point with nonzero gradient.
    ///
    /// Writes `self = s·q + r` where `r` is free of the pivot variable (the
    /// one with the largest gradient component of `s`), and returns `q`
    /// together with the largest remainder coefficient. The remainder is zero
    /// exactly when `self` vanishes on the zero set of `s` (to jet order).
    pub fn div_vanishing(&self, s: &Self) -> Result<(Self, f64), JetError> {
        self.same_shape(s)?;
        if s.low < 1 || s.valid < 1 {
            return Err(JetError::NotVanishing);
        }
        let dim = self.dim();
        let lin: Vec<f64> = (0..dim).map(|i| s.coeffs[1 + i]).collect();
        let (pivot, lp) = lin
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |acc, (i, &v)| if v.abs() > acc.1.abs() { (i, v) } else { acc });
        if lp.abs() < 1e-300 {
            return Err(JetError::NotVanishing);
        }
        let top = self.valid.min(s.valid);
        if top == 0 {
            return Err(JetError::InsufficientOrder { needed: 1, available: 0 });
        }
        let qvalid = top - 1;
        let t = &self.table;
        let mut q = vec![0.0; t.count(qvalid)];
        let mut rem: f64 = 0.0;
        let mut work = vec![0.0; t.count(top)];
        for m in 0..=top {
            let range = t.degree_range(m);
            for idx in range.clone() {
                work[idx] = self.coeffs[idx];
            }
            // Subtract higher-degree parts of s times already known quotient pieces.
            for j in 2..=m {
                let dq = m - j;
                for &(a, b, k) in t.products(j, dq) {
                    work[k as usize] -= s.coeffs[a as usize] * q[b as usize];
                }
            }
            if m == 0 {
                rem = rem.max(work[0].abs());
                continue;
            }
            let mut order: Vec<usize> = range.clone().collect();
            order.sort_by_key(|&i| std::cmp::Reverse(t.exponents(i)[pivot]));
            let mut scratch = vec![0u8; dim];
            for &idx in &order {
                let e = t.exponents(idx);
                if e[pivot] == 0 {
                    rem = rem.max(work[idx].abs());
                    continue;
                }
                let c = work[idx];
                if c == 0.0 {
                    continue;
                }
                let qc = c / lp;
                scratch.copy_from_slice(e);
                scratch[pivot] -= 1;
                let qi = t.index_of(&scratch).expect("monomial present");
                q[qi] += qc;
                for (k, &lk) in lin.iter().enumerate() {
                    if lk == 0.0 {
                        continue;
                    }
                    scratch[k] += 1;
                    let ti = t.index_of(&scratch).expect("monomial present");
                    work[ti] -= qc * lk;
                    scratch[k] -= 1;
                }
            }
        }
        let low = self.low.saturating_sub(1);
        Ok((Self::raw(self.table.clone(), qvalid, low, q), rem))
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<&Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                $body(self, rhs)
            }
        }
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                $body(&self, &rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                $body(&self, rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                $body(self, &rhs)
            }
        }
    };
}

binop!(Add, add, |a: &Jet, b: &Jet| a.combine(b, 1.0));
binop!(Sub, sub, |a: &Jet, b: &Jet| a.combine(b, -1.0));
binop!(Mul, mul, |a: &Jet, b: &Jet| a.mul_jet(b));

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        *self = self.combine(rhs, 1.0);
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        *self = self.combine(rhs, -1.0);
    }
}
