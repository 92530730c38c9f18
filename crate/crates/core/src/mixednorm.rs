//! Mixed norms `L^q L^r(Y)`: an inner `L^r` norm over each slice `Pi^{-1}(t)`
//! (the hyperplane `y_1 = t`) followed by an outer `L^q` norm in `t`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{CellIndex, Lattice, LatticeSet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MixedNormError {
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid exponents: {0}")]
    InvalidExponents(String),
}

/// `(q, r)` with `f64::INFINITY` standing for `inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedExponents {
    pub q: f64,
    pub r: f64,
}

/// Conjugate exponent, `1 <-> inf`.
pub fn conjugate(e: f64) -> f64 {
    if e == 1.0 {
        f64::INFINITY
    } else if e.is_infinite() {
        1.0
    } else {
        e / (e - 1.0)
    }
}

/// `1/e`, with `1/inf = 0`.
pub fn recip(e: f64) -> f64 {
    if e.is_infinite() {
        0.0
    } else {
        1.0 / e
    }
}

impl MixedExponents {
    pub fn new(q: f64, r: f64) -> Self {
        MixedExponents { q, r }
    }

    pub fn validate(&self) -> Result<(), MixedNormError> {
        if !(self.q >= 1.0 && self.r >= 1.0) {
            return Err(MixedNormError::InvalidExponents(format!("q = {}, r = {} must lie in [1, inf]", self.q, self.r)));
        }
        Ok(())
    }

    pub fn conjugates(&self) -> MixedExponents {
        MixedExponents { q: conjugate(self.q), r: conjugate(self.r) }
    }
}

/// Values on grid cells over `X` or `Y`.
pub type GridFunction = GridFunctionY;

/// Nonnegative values on cells of a lattice over `Y`; axis 0 is the `Pi` direction.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunctionY {
    lattice: Lattice,
    values: BTreeMap<CellIndex, f64>,
}

impl GridFunctionY {
    pub fn new(lattice: Lattice) -> Self {
        GridFunctionY { lattice, values: BTreeMap::new() }
    }

    pub fn indicator(set: &LatticeSet) -> Self {
        GridFunctionY { lattice: set.lattice().clone(), values: set.iter().map(|c| (*c, 1.0)).collect() }
    }

    pub fn from_values(lattice: Lattice, values: impl IntoIterator<Item = (CellIndex, f64)>) -> Self {
        let mut f = GridFunctionY::new(lattice);
        for (c, v) in values {
            f.set(c, v);
        }
        f
    }

    pub fn set(&mut self, c: CellIndex, v: f64) {
        if v == 0.0 {
            self.values.remove(&c);
        } else {
            self.values.insert(c, v);
        }
    }

    pub fn get(&self, c: &CellIndex) -> f64 {
        self.values.get(c).copied().unwrap_or(0.0)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CellIndex, &f64)> + '_ {
        self.values.iter()
    }

    pub fn scaled(&self, s: f64) -> GridFunctionY {
        GridFunctionY::from_values(self.lattice.clone(), self.values.iter().map(|(c, v)| (*c, v * s)))
    }

    /// Plain `L^p` norm over `Y`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let vals = self.values.values().map(|v| v.abs());
        power_norm(vals, p, self.lattice.cell_measure())
    }

    /// Inner slice norms keyed by the first cell index.
    fn slice_norms(&self, r: f64) -> BTreeMap<i32, f64> {
        let slice_measure = self.lattice.h.powi(self.lattice.dim as i32 - 1);
        let mut slices: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
        for (c, v) in &self.values {
            slices.entry(c[0]).or_default().push(v.abs());
        }
        slices.into_iter().map(|(k, vs)| (k, power_norm(vs.into_iter(), r, slice_measure))).collect()
    }
}

/// `(sum |v|^p w)^(1/p)`, or `max |v|` for `p = inf`.
fn power_norm(vals: impl Iterator<Item = f64>, p: f64, weight: f64) -> f64 {
    if p.is_infinite() {
        vals.fold(0.0, f64::max)
    } else {
        (vals.map(|v| v.powf(p)).sum::<f64>() * weight).powf(1.0 / p)
    }
}

/// `||f||_{L^q L^r}`.
pub fn mixed_norm(f: &GridFunctionY, q: f64, r: f64) -> f64 {
    let inner = f.slice_norms(r);
    power_norm(inner.into_values(), q, f.lattice.h)
}

/// `||chi_F||_{L^q L^r}` computed from slice cell counts.
pub fn indicator_norm(set: &LatticeSet, q: f64, r: f64) -> f64 {
    let h = set.h();
    let slice_measure = h.powi(set.dim() as i32 - 1);
    let mut counts: BTreeMap<i32, usize> = BTreeMap::new();
    for c in set.iter() {
        *counts.entry(c[0]).or_default() += 1;
    }
    let inner = counts.into_values().map(|n| {
        let mass = n as f64 * slice_measure;
        if r.is_infinite() {
            1.0
        } else {
            mass.powf(1.0 / r)
        }
    });
    power_norm(inner, q, h)
}

/// Both sides of `||chi_F||_{q',r'} >= |F|^{1/r'} |Pi F|^{1/q' - 1/r'}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderBound {
    pub lhs: f64,
    pub rhs: f64,
    /// `3 h / feature`, where the feature size is the smaller of the `Pi`
    /// extent and the thinnest nonempty slice.
    pub eps_lattice: f64,
}

impl HolderBound {
    pub fn holds(&self) -> bool {
        self.lhs >= self.rhs * (1.0 - self.eps_lattice)
    }
}

pub fn holder_lower_bound(set: &LatticeSet, q: f64, r: f64) -> Result<HolderBound, MixedNormError> {
    MixedExponents::new(q, r).validate()?;
    if r < q {
        return Err(MixedNormError::InvalidExponents(format!("need r >= q, got q = {q}, r = {r}")));
    }
    if set.is_empty() {
        return Err(MixedNormError::Degenerate("F is empty".into()));
    }
    let (qc, rc) = (conjugate(q), conjugate(r));
    let lhs = indicator_norm(set, qc, rc);
    let pi_extent = set.axis_extent(0);
    let rhs = set.measure().powf(recip(rc)) * pi_extent.powf(recip(qc) - recip(rc));

    let h = set.h();
    let mut counts: BTreeMap<i32, usize> = BTreeMap::new();
    for c in set.iter() {
        *counts.entry(c[0]).or_default() += 1;
    }
    let thinnest = counts.values().min().copied().unwrap_or(1) as f64;
    let slice_width = (thinnest).powf(1.0 / (set.dim() as f64 - 1.0).max(1.0)) * h;
    let feature = pi_extent.min(slice_width);
    Ok(HolderBound { lhs, rhs, eps_lattice: 3.0 * h / feature })
}
