//! Weighted tensor and tractor fields stored as component jets.

use std::fmt;

use asc_jets::Jet;

use crate::error::{Error, Result};

/// Identifies the metric in which a weighted field is trivialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ScaleTag(pub u64);

impl fmt::Display for ScaleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// Index slot kinds. Tractor slots range over `d + 2` splitting components
/// `(top, middle_1..middle_d, bottom)` with the middle stored as a 1-form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    Lower,
    Upper,
    Tractor,
}

impl Slot {
    fn symbol(self) -> char {
        match self {
            Slot::Lower => '_',
            Slot::Upper => '^',
            Slot::Tractor => 'T',
        }
    }

    pub fn range(self, dim: usize) -> usize {
        match self {
            Slot::Tractor => dim + 2,
            _ => dim,
        }
    }
}

/// Iterates multi-indices of a shape in row-major order.
pub fn multi_indices(shape: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = shape.iter().product();
    (0..total).map(move |mut n| {
        let mut idx = vec![0; shape.len()];
        for (k, &s) in shape.iter().enumerate().rev() {
            idx[k] = n % s;
            n /= s;
        }
        idx
    })
}

/// A field of jets with declared slots, conformal weight and trivializing scale.
#[derive(Clone, Debug)]
pub struct TensorValue {
    dim: usize,
    slots: Vec<Slot>,
    comps: Vec<Jet>,
    weight: f64,
    scale: ScaleTag,
}

impl TensorValue {
    pub fn from_fn(
        dim: usize,
        slots: Vec<Slot>,
        weight: f64,
        scale: ScaleTag,
        mut f: impl FnMut(&[usize]) -> Jet,
    ) -> Self {
        let shape: Vec<usize> = slots.iter().map(|s| s.range(dim)).collect();
        let comps = multi_indices(&shape).map(|i| f(&i)).collect();
        Self { dim, slots, comps, weight, scale }
    }

    pub fn try_from_fn(
        dim: usize,
        slots: Vec<Slot>,
        weight: f64,
        scale: ScaleTag,
        mut f: impl FnMut(&[usize]) -> Result<Jet>,
    ) -> Result<Self> {
        let shape: Vec<usize> = slots.iter().map(|s| s.range(dim)).collect();
        let comps = multi_indices(&shape).map(|i| f(&i)).collect::<Result<Vec<_>>>()?;
        Ok(Self { dim, slots, comps, weight, scale })
    }

    pub fn from_comps(dim: usize, slots: Vec<Slot>, weight: f64, scale: ScaleTag, comps: Vec<Jet>) -> Self {
        let n: usize = slots.iter().map(|s| s.range(dim)).product();
        assert_eq!(comps.len(), n, "component count does not match slots");
        Self { dim, slots, comps, weight, scale }
    }

    /// A weighted scalar density.
    pub fn density(jet: Jet, weight: f64, scale: ScaleTag) -> Self {
        let dim = jet.dim();
        Self { dim, slots: Vec::new(), comps: vec![jet], weight, scale }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    /// Slot signature such as `"__"` or `"T^"`.
    pub fn valence(&self) -> String {
        self.slots.iter().map(|s| s.symbol()).collect()
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn scale(&self) -> ScaleTag {
        self.scale
    }

    pub fn shape(&self) -> Vec<usize> {
        self.slots.iter().map(|s| s.range(self.dim)).collect()
    }

    pub fn comps(&self) -> &[Jet] {
        &self.comps
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.slots.len());
        let mut off = 0;
        for (s, &i) in self.slots.iter().zip(idx) {
            off = off * s.range(self.dim) + i;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> &Jet {
        &self.comps[self.offset(idx)]
    }

    /// The jet of a rank-0 field.
    pub fn jet(&self) -> &Jet {
        assert!(self.slots.is_empty(), "jet() on a field of rank {}", self.rank());
        &self.comps[0]
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_scale(mut self, scale: ScaleTag) -> Self {
        self.scale = scale;
        self
    }

    /// Constant terms of all components.
    pub fn values(&self) -> Vec<f64> {
        self.comps.iter().map(Jet::value).collect()
    }

    pub fn value(&self) -> f64 {
        self.jet().value()
    }

    /// Largest absolute component value at the base point.
    pub fn max_abs_value(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.value().abs()))
    }

    pub fn min_valid_order(&self) -> usize {
        self.comps.iter().map(Jet::valid_order).min().unwrap_or(usize::MAX)
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if self.scale != other.scale {
            return Err(Error::ScaleMismatch);
        }
        if self.slots != other.slots {
            return Err(Error::SlotMismatch);
        }
        if (self.weight - other.weight).abs() > 1e-12 {
            return Err(Error::WeightMismatch(self.weight, other.weight));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        Ok(self.zip_map(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        Ok(self.zip_map(other, |a, b| a - b))
    }

    fn zip_map(&self, other: &Self, f: impl Fn(&Jet, &Jet) -> Jet) -> Self {
        let comps = self.comps.iter().zip(&other.comps).map(|(a, b)| f(a, b)).collect();
        Self { comps, ..self.shallow() }
    }

    fn shallow(&self) -> Self {
        Self {
            dim: self.dim,
            slots: self.slots.clone(),
            comps: Vec::new(),
            weight: self.weight,
            scale: self.scale,
        }
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> Self {
        Self { comps: self.comps.iter().map(f).collect(), ..self.shallow() }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|j| j.scale(c))
    }

    /// Multiplies by a scalar density, adding its weight.
    pub fn times_density(&self, d: &TensorValue) -> Result<Self> {
        if d.rank() != 0 {
            return Err(Error::SlotMismatch);
        }
        if d.scale != self.scale {
            return Err(Error::ScaleMismatch);
        }
        let j = d.jet();
        let mut out = self.map(|c| c * j);
        out.weight += d.weight;
        Ok(out)
    }

    /// Components truncated to their base-point values; cheap for pointwise algebra.
    pub fn at_point(&self) -> Self {
        self.map(|c| c.truncate(0))
    }

    /// Applies a `range × range` matrix (row-major, `new × old`) to one slot.
    pub fn transform_slot(&self, slot: usize, matrix: &[Jet]) -> Self {
        let shape = self.shape();
        let r = shape[slot];
        assert_eq!(matrix.len(), r * r, "matrix does not match slot range");
        let stride: usize = shape[slot + 1..].iter().product();
        let nz: Vec<bool> = matrix.iter().map(|m| !m.is_zero()).collect();
        let comps = (0..self.comps.len())
            .map(|off| {
                let i = (off / stride) % r;
                let base = off - i * stride;
                let mut acc = self.comps[off].zero_like();
                for e in 0..r {
                    if nz[i * r + e] {
                        acc += &(&matrix[i * r + e] * &self.comps[base + e * stride]);
                    }
                }
                acc
            })
            .collect();
        Self { comps, ..self.shallow() }
    }

    /// Contracts one slot with a vector of jets, removing that slot.
    pub fn contract_slot(&self, slot: usize, v: &[Jet]) -> Self {
        let shape = self.shape();
        let r = shape[slot];
        assert_eq!(v.len(), r, "vector does not match slot range");
        let stride: usize = shape[slot + 1..].iter().product();
        let outer = self.comps.len() / (r * stride);
        let mut comps = Vec::with_capacity(outer * stride);
        for o in 0..outer {
            for k in 0..stride {
                let mut acc = self.comps[0].zero_like();
                for (e, ve) in v.iter().enumerate() {
                    if !ve.is_zero() {
                        acc += &(ve * &self.comps[(o * r + e) * stride + k]);
                    }
                }
                comps.push(acc);
            }
        }
        let mut slots = self.slots.clone();
        slots.remove(slot);
        Self { dim: self.dim, slots, comps, weight: self.weight, scale: self.scale }
    }

    /// Checks symmetry in two slots at the base point and over all valid coefficients.
    pub fn verify_symmetric(&self, s1: usize, s2: usize, tol: f64) -> Result<()> {
        let shape = self.shape();
        let mut worst: f64 = 0.0;
        for idx in multi_indices(&shape) {
            let mut sw = idx.clone();
            sw.swap(s1, s2);
            let d = self.get(&idx) - self.get(&sw);
            worst = worst.max(d.max_abs());
        }
        if worst > tol {
            return Err(Error::SymmetryViolated(worst));
        }
        Ok(())
    }
}
