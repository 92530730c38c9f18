//! Uniform cubic lattices and sets of occupied cells.
//!
//! Cell `i` along an axis with origin `o` is `[o + i h, o + (i + 1) h)`.
//! `X` and `Y` use origin `0`, so cell boundaries sit on multiples of `h` and
//! dyadic intervals of length `>= h` are unions of cells. The incidence
//! lattice on `Z` offsets the `t` axis by `-h/2`, which puts `t`-cell centres
//! on multiples of `h`; with `gamma_1(t) = t` the `Pi`-coordinate of a `Z`-cell
//! centre, `x_1 + t`, is then a `Y`-cell centre.

use std::collections::BTreeSet;
use std::hash::BuildHasherDefault;

use serde::{Deserialize, Serialize};

use crate::geometry::MAX_DIM;

/// Multi-index of a cell; entries past the lattice dimension are zero.
pub type CellIndex = [i32; MAX_DIM];

/// Hash map with a fixed hasher, so iteration order only depends on insertion order.
pub type DetHashMap<K, V> = std::collections::HashMap<K, V, BuildHasherDefault<std::collections::hash_map::DefaultHasher>>;
pub type DetHashSet<K> = std::collections::HashSet<K, BuildHasherDefault<std::collections::hash_map::DefaultHasher>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub dim: usize,
    pub h: f64,
    pub origin: Vec<f64>,
}

impl Lattice {
    /// Origin at `0` on every axis.
    pub fn standard(dim: usize, h: f64) -> Self {
        assert!(dim <= MAX_DIM, "lattice dimension {dim} exceeds {MAX_DIM}");
        Lattice { dim, h, origin: vec![0.0; dim] }
    }

    /// The lattice on `Z = R^d x R_t` shared by balls, `Omega` and pairings.
    pub fn incidence(d: usize, h: f64) -> Self {
        let mut l = Lattice::standard(d + 1, h);
        l.origin[d] = -0.5 * h;
        l
    }

    #[inline]
    pub fn cell_of(&self, p: &[f64]) -> CellIndex {
        let mut c = [0i32; MAX_DIM];
        for k in 0..self.dim {
            c[k] = ((p[k] - self.origin[k]) / self.h).floor() as i32;
        }
        c
    }

    #[inline]
    pub fn center_coord(&self, axis: usize, i: i32) -> f64 {
        self.origin[axis] + (i as f64 + 0.5) * self.h
    }

    pub fn center(&self, c: &CellIndex) -> Vec<f64> {
        (0..self.dim).map(|k| self.center_coord(k, c[k])).collect()
    }

    pub fn cell_measure(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Same spacing, origin dropped to the first `dim - 1` axes.
    pub fn drop_last(&self) -> Lattice {
        Lattice { dim: self.dim - 1, h: self.h, origin: self.origin[..self.dim - 1].to_vec() }
    }
}

/// Builds a cell index from a slice of axis indices.
pub fn cell(idx: &[i32]) -> CellIndex {
    let mut c = [0i32; MAX_DIM];
    c[..idx.len()].copy_from_slice(idx);
    c
}

/// A finite union of lattice cells; its measure is `len * h^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSet {
    lattice: Lattice,
    cells: BTreeSet<CellIndex>,
}

impl LatticeSet {
    pub fn new(lattice: Lattice) -> Self {
        LatticeSet { lattice, cells: BTreeSet::new() }
    }

    pub fn from_cells(lattice: Lattice, cells: impl IntoIterator<Item = CellIndex>) -> Self {
        LatticeSet { lattice, cells: cells.into_iter().collect() }
    }

    /// Cells whose centres lie in the half-open box `[lo, hi)`.
    pub fn from_box(lattice: Lattice, lo: &[f64], hi: &[f64]) -> Self {
        let mut set = LatticeSet::new(lattice);
        set.insert_box(lo, hi);
        set
    }

    pub fn insert_box(&mut self, lo: &[f64], hi: &[f64]) {
        let l = &self.lattice;
        let range: Vec<(i32, i32)> = (0..l.dim)
            .map(|k| {
                let a = ((lo[k] - l.origin[k]) / l.h - 0.5).ceil() as i32;
                let b = ((hi[k] - l.origin[k]) / l.h - 0.5).ceil() as i32;
                (a, b)
            })
            .collect();
        if range.iter().any(|(a, b)| a >= b) {
            return;
        }
        let mut idx: Vec<i32> = range.iter().map(|r| r.0).collect();
        loop {
            self.cells.insert(cell(&idx));
            let mut k = 0;
            loop {
                if k == l.dim {
                    return;
                }
                idx[k] += 1;
                if idx[k] < range[k].1 {
                    break;
                }
                idx[k] = range[k].0;
                k += 1;
            }
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim
    }

    pub fn h(&self) -> f64 {
        self.lattice.h
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.cells.len() as f64 * self.lattice.cell_measure()
    }

    pub fn insert(&mut self, c: CellIndex) -> bool {
        self.cells.insert(c)
    }

    pub fn contains(&self, c: &CellIndex) -> bool {
        self.cells.contains(c)
    }

    pub fn contains_point(&self, p: &[f64]) -> bool {
        self.cells.contains(&self.lattice.cell_of(p))
    }

    pub fn iter(&self) -> impl Iterator<Item = &CellIndex> + '_ {
        self.cells.iter()
    }

    pub fn cells(&self) -> &BTreeSet<CellIndex> {
        &self.cells
    }

    pub fn is_subset(&self, other: &LatticeSet) -> bool {
        self.cells.is_subset(&other.cells)
    }

    pub fn union_with(&mut self, other: &LatticeSet) {
        self.cells.extend(other.cells.iter().copied());
    }

    pub fn intersection_len(&self, other: &LatticeSet) -> usize {
        let (small, big) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small.cells.iter().filter(|c| big.cells.contains(*c)).count()
    }

    /// Shift every cell by an integer offset.
    pub fn translated(&self, shift: &[i32]) -> LatticeSet {
        let cells = self
            .cells
            .iter()
            .map(|c| {
                let mut out = *c;
                for (k, s) in shift.iter().enumerate() {
                    out[k] += s;
                }
                out
            })
            .collect();
        LatticeSet { lattice: self.lattice.clone(), cells }
    }

    /// Projection that forgets the last axis.
    pub fn project_drop_last(&self) -> LatticeSet {
        let n = self.lattice.dim;
        let cells = self
            .cells
            .iter()
            .map(|c| {
                let mut out = *c;
                out[n - 1] = 0;
                out
            })
            .collect();
        LatticeSet { lattice: self.lattice.drop_last(), cells }
    }

    /// Distinct indices along one axis.
    pub fn axis_indices(&self, axis: usize) -> BTreeSet<i32> {
        self.cells.iter().map(|c| c[axis]).collect()
    }

    /// Measure of the projection onto one axis.
    pub fn axis_extent(&self, axis: usize) -> f64 {
        self.axis_indices(axis).len() as f64 * self.lattice.h
    }

    /// Min and max cell index along an axis.
    pub fn axis_bounds(&self, axis: usize) -> Option<(i32, i32)> {
        let mut it = self.cells.iter().map(|c| c[axis]);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
    }

    /// Cells as plain index vectors (for serialization).
    pub fn index_lists(&self) -> Vec<Vec<i32>> {
        self.cells.iter().map(|c| c[..self.lattice.dim].to_vec()).collect()
    }
}

/// Sorted cells of a one-dimensional lattice with origin `0` and edge `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSet {
    pub dt: f64,
    cells: Vec<i32>,
}

impl LineSet {
    pub fn new(dt: f64, cells: impl IntoIterator<Item = i32>) -> Self {
        let mut cells: Vec<i32> = cells.into_iter().collect();
        cells.sort_unstable();
        cells.dedup();
        LineSet { dt, cells }
    }

    /// Cells whose centres lie in `[a, b)`.
    pub fn interval(dt: f64, a: f64, b: f64) -> Self {
        let lo = (a / dt - 0.5).ceil() as i32;
        let hi = (b / dt - 0.5).ceil() as i32;
        LineSet::new(dt, lo..hi.max(lo))
    }

    pub fn cells(&self) -> &[i32] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.cells.len() as f64 * self.dt
    }

    /// Number of cells with index in `[lo, hi)`.
    pub fn count_cells(&self, lo: i32, hi: i32) -> usize {
        if hi <= lo {
            return 0;
        }
        self.cells.partition_point(|&c| c < hi) - self.cells.partition_point(|&c| c < lo)
    }

    /// Measure of the intersection with `[a, b)`, counting cells by their centres.
    pub fn measure_in(&self, a: f64, b: f64) -> f64 {
        let lo = (a / self.dt - 0.5).ceil() as i32;
        let hi = (b / self.dt - 0.5).ceil() as i32;
        self.count_cells(lo, hi) as f64 * self.dt
    }

    pub fn bounds(&self) -> Option<(i32, i32)> {
        Some((*self.cells.first()?, *self.cells.last()?))
    }
}

#[derive(Serialize, Deserialize)]
struct LatticeSetRepr {
    lattice: Lattice,
    cells: Vec<Vec<i32>>,
}

impl Serialize for LatticeSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        LatticeSetRepr { lattice: self.lattice.clone(), cells: self.index_lists() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LatticeSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = LatticeSetRepr::deserialize(d)?;
        if repr.lattice.dim > MAX_DIM {
            return Err(serde::de::Error::custom("lattice dimension too large"));
        }
        if repr.cells.iter().any(|c| c.len() != repr.lattice.dim) {
            return Err(serde::de::Error::custom("cell index length does not match lattice dimension"));
        }
        Ok(LatticeSet::from_cells(repr.lattice, repr.cells.iter().map(|c| cell(c))))
    }
}
