//! Combinatorics behind the restricted weak-type argument: central sets,
//! minimal dyadic intervals `I(x)`, strata `E_{m,k}`, the partition into
//! `(E_n, F_n)`, statistics of `Omega` and a direct search for dense balls.
//!
//! One-dimensional sets live on the `Pi`-line as [`LineSet`]s with a dyadic
//! edge `dt`, so every dyadic interval of length at least `dt` is a union of
//! whole cells and all interval counts are exact.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ccball::{self, BallError, BallParams};
use crate::geometry::{ModelFamily, ZPoint};
use crate::lattice::{CellIndex, DetHashSet, Lattice, LatticeSet, LineSet};
use crate::mixednorm::{self, conjugate};
use crate::radon::{self, Quadrature, RadonError, SuperLevel};

const REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecompError {
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Radon(#[from] RadonError),
    #[error(transparent)]
    Ball(#[from] BallError),
}

pub type Result<T> = std::result::Result<T, DecompError>;

fn dyadic_level(dt: f64) -> Result<u32> {
    let k = (-dt.log2()).round();
    if !(dt > 0.0) || k < 0.0 || (2f64.powi(-(k as i32)) - dt).abs() > 1e-15 {
        return Err(DecompError::Configuration(format!("cell edge {dt} is not a power of two <= 1")));
    }
    Ok(k as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentralSetSpec {
    pub w: f64,
    pub eps: f64,
    pub c_eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralVerdict {
    pub central: bool,
    /// `S` lies in `[-C w, C w]`.
    pub support_ok: bool,
    /// Largest `|I cap S| / (C (|I|/w)^eps |S|)` over the tested intervals.
    pub worst_ratio: f64,
    /// The interval attaining `worst_ratio`.
    pub witness: Option<(f64, f64)>,
}

/// Tests both conditions of a central set. The decay condition is checked on
/// every interval of dyadic length (at least one cell, at most 2) starting at
/// any cell boundary.
pub fn is_central(s: &LineSet, spec: &CentralSetSpec) -> Result<CentralVerdict> {
    if s.is_empty() {
        return Err(DecompError::Degenerate("S is empty".into()));
    }
    if !(spec.w > 0.0 && spec.eps > 0.0 && spec.eps < 1.0 && spec.c_eps >= 1.0) {
        return Err(DecompError::Configuration(format!("invalid central-set spec {spec:?}")));
    }
    let dt = s.dt;
    let (lo, hi) = s.bounds().expect("nonempty");
    let reach = spec.c_eps * spec.w;
    let support_ok = lo as f64 * dt >= -reach * (1.0 + REL_TOL) && (hi + 1) as f64 * dt <= reach * (1.0 + REL_TOL);
    let total = s.measure();
    let mut worst = (0.0, None);
    let mut len = 1i32;
    while len as f64 * dt <= 2.0 + REL_TOL {
        let l = len as f64 * dt;
        let rhs_scale = spec.c_eps * (l / spec.w).powf(spec.eps) * total;
        for start in (lo - len + 1)..=hi {
            let n = s.count_cells(start, start + len);
            let ratio = n as f64 * dt / rhs_scale;
            if ratio > worst.0 {
                worst = (ratio, Some((start as f64 * dt, (start + len) as f64 * dt)));
            }
        }
        len *= 2;
    }
    Ok(CentralVerdict { central: support_ok && worst.0 <= 1.0 + REL_TOL, support_ok, worst_ratio: worst.0, witness: worst.1 })
}

/// `[j 2^-k, (j + 1) 2^-k)` inside `[-1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DyadicInterval {
    pub level: u32,
    pub index: i64,
}

impl DyadicInterval {
    pub fn new(level: u32, index: i64) -> Self {
        DyadicInterval { level, index }
    }

    pub fn len(&self) -> f64 {
        2f64.powi(-(self.level as i32))
    }

    pub fn lo(&self) -> f64 {
        self.index as f64 * self.len()
    }

    pub fn hi(&self) -> f64 {
        (self.index + 1) as f64 * self.len()
    }

    pub fn contains(&self, other: &DyadicInterval) -> bool {
        other.level >= self.level && other.index >> (other.level - self.level) == self.index
    }

    /// Cell range `[a, b)` on a line of dyadic level `kmax >= level`.
    pub fn cell_range(&self, kmax: u32) -> (i32, i32) {
        let per = 1i64 << (kmax - self.level);
        ((self.index * per) as i32, ((self.index + 1) * per) as i32)
    }

    /// `|I cap S|`.
    pub fn intersect(&self, s: &LineSet) -> Result<f64> {
        let kmax = dyadic_level(s.dt)?;
        if kmax < self.level {
            return Err(DecompError::Configuration(format!("interval level {} is finer than the line", self.level)));
        }
        let (a, b) = self.cell_range(kmax);
        Ok(s.count_cells(a, b) as f64 * s.dt)
    }
}

fn qualifies(count: usize, dt: f64, len: f64, eta: f64, c_eta: f64, total: f64) -> bool {
    count as f64 * dt >= c_eta * len.powf(eta) * total * (1.0 - REL_TOL)
}

/// Distinct interval indices at level `k` that meet `s`, in increasing order.
fn occupied(s: &LineSet, kmax: u32, k: u32) -> Vec<i64> {
    let shift = kmax - k;
    let mut out: Vec<i64> = s.cells().iter().map(|&c| (c as i64) >> shift).collect();
    out.dedup();
    out
}

/// A shortest dyadic `I` with `|I cap F| >= c_eta |I|^eta |F|`, leftmost among
/// equals. Intervals shorter than one cell of `fx` are not considered.
pub fn minimal_dyadic(fx: &LineSet, eta: f64, c_eta: f64) -> Result<DyadicInterval> {
    if fx.is_empty() {
        return Err(DecompError::Degenerate("F(x) is empty".into()));
    }
    if !(eta > 0.0 && eta < 1.0 && c_eta > 0.0) {
        return Err(DecompError::Configuration(format!("need 0 < eta < 1 and c_eta > 0, got {eta}, {c_eta}")));
    }
    let kmax = dyadic_level(fx.dt)?;
    let total = fx.measure();
    for k in (0..=kmax).rev() {
        let len = 2f64.powi(-(k as i32));
        for j in occupied(fx, kmax, k) {
            if j < -(1i64 << k) || j >= (1i64 << k) {
                continue;
            }
            let iv = DyadicInterval::new(k, j);
            let (a, b) = iv.cell_range(kmax);
            if qualifies(fx.count_cells(a, b), fx.dt, len, eta, c_eta, total) {
                return Ok(iv);
            }
        }
    }
    Err(DecompError::Configuration(format!("no interval of [-1, 1] qualifies with c_eta = {c_eta}; lower it")))
}

/// `max_J |J cap F| - (|J|/|I|)^eta |I cap F|` over dyadic `J` inside `I`.
pub fn localization_excess(fx: &LineSet, i: &DyadicInterval, eta: f64) -> Result<f64> {
    let kmax = dyadic_level(fx.dt)?;
    let (a, b) = i.cell_range(kmax);
    let inside = fx.count_cells(a, b) as f64 * fx.dt;
    let mut worst = f64::NEG_INFINITY;
    for k in i.level..=kmax {
        let ratio = 2f64.powi(-((k - i.level) as i32)).powf(eta);
        for j in occupied(fx, kmax, k) {
            let jv = DyadicInterval::new(k, j);
            if !i.contains(&jv) {
                continue;
            }
            let (ja, jb) = jv.cell_range(kmax);
            worst = worst.max(fx.count_cells(ja, jb) as f64 * fx.dt - ratio * inside);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub m: i32,
    pub k: i32,
    /// Indices into the cells of `E`.
    #[serde(skip)]
    pub members: Vec<usize>,
    pub size: usize,
    pub measure: f64,
    /// `<T chi_{E_{m,k}}, chi_F>`.
    pub pairing: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strata {
    pub beta: f64,
    pub eta: f64,
    pub c_eta: f64,
    /// `I(x)` per cell of `E`.
    #[serde(skip)]
    pub intervals: Vec<DyadicInterval>,
    pub strata: Vec<Stratum>,
    pub total_pairing: f64,
    pub selected: Option<(i32, i32)>,
    /// Admissible `m` and `k` ranges implied by `|F(x)| in (beta, 2 beta]`.
    pub m_range: (i32, i32),
    pub k_range: (i32, i32),
    /// Number of admissible `(m, k)` pairs.
    pub pair_bound: usize,
}

impl Strata {
    pub fn selected_stratum(&self) -> Option<&Stratum> {
        self.strata.iter().find(|s| s.selected)
    }

    /// Every stratum lies in the admissible ranges and the selected one
    /// carries at least an average share of the pairing.
    pub fn pigeonhole_holds(&self) -> bool {
        let in_range = self.strata.iter().all(|s| {
            s.m >= self.m_range.0 && s.m <= self.m_range.1 && s.k >= self.k_range.0 && s.k <= self.k_range.1
        });
        let share = match self.selected_stratum() {
            Some(s) => s.pairing * self.strata.len() as f64 >= self.total_pairing * (1.0 - REL_TOL),
            None => self.strata.is_empty(),
        };
        in_range && share && self.strata.len() <= self.pair_bound
    }
}

fn floor_log2(v: f64) -> i32 {
    v.log2().floor() as i32
}

/// Sorts `E` into strata by `|I(x)| ~ 2^m beta` and `|I(x) cap F(x)| ~ 2^k`
/// (floor of `log2`) and selects the stratum with the largest pairing.
pub fn stratify(sl: &SuperLevel, eta: f64, c_eta: f64) -> Result<Strata> {
    let beta = sl.beta;
    let cell_measure = sl.e.lattice().cell_measure();
    let mut intervals = Vec::with_capacity(sl.fibres.len());
    let mut groups: BTreeMap<(i32, i32), Vec<usize>> = BTreeMap::new();
    for (idx, fib) in sl.fibres.iter().enumerate() {
        let iv = minimal_dyadic(fib, eta, c_eta)?;
        let inside = iv.intersect(fib)?;
        groups.entry((floor_log2(iv.len() / beta), floor_log2(inside))).or_default().push(idx);
        intervals.push(iv);
    }
    let mut strata: Vec<Stratum> = groups
        .into_iter()
        .map(|((m, k), members)| {
            let pairing = members.iter().map(|&i| sl.values[i]).sum::<f64>() * cell_measure;
            Stratum { m, k, size: members.len(), measure: members.len() as f64 * cell_measure, members, pairing, selected: false }
        })
        .collect();
    let total_pairing = strata.iter().map(|s| s.pairing).sum();
    let mut selected = None;
    if let Some(best) = strata.iter().enumerate().fold(None::<(usize, f64)>, |acc, (i, s)| match acc {
        Some((_, v)) if v >= s.pairing => acc,
        _ => Some((i, s.pairing)),
    }) {
        strata[best.0].selected = true;
        selected = Some((strata[best.0].m, strata[best.0].k));
    }

    let l_min = (c_eta * beta).powf(1.0 / (1.0 - eta));
    let m_range = (floor_log2(l_min / beta), floor_log2(1.0 / beta));
    let k_range = (floor_log2(c_eta * l_min.powf(eta) * beta), floor_log2(2.0 * beta));
    let pair_bound = ((m_range.1 - m_range.0 + 1).max(0) * (k_range.1 - k_range.0 + 1).max(0)) as usize;
    Ok(Strata { beta, eta, c_eta, intervals, strata, total_pairing, selected, m_range, k_range, pair_bound })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionPiece {
    pub n: i64,
    /// `I_n = [lo, hi)`.
    pub lo: f64,
    pub hi: f64,
    /// Indices into the cells of `E`.
    #[serde(skip)]
    pub e_members: Vec<usize>,
    #[serde(skip)]
    pub f_n: Option<LatticeSet>,
    pub e_measure: f64,
    pub f_measure: f64,
    /// `<T chi_{E_n}, chi_{F_n}>`, which is also the quadrature `|Omega^n|`.
    pub pairing: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionFamily {
    pub m: i32,
    pub k: i32,
    pub beta: f64,
    pub c: f64,
    /// `|I_n|`: `C 2^m beta` rounded up to whole `Y` cells.
    pub length: f64,
    pub pieces: Vec<PartitionPiece>,
    pub e_measure: f64,
    pub e_tilde_measure: f64,
    pub sum_e_n: f64,
    /// Largest number of sets `E_n` holding one `x`.
    pub e_multiplicity: usize,
    /// Largest number of sets `F_n` holding one `y`.
    pub f_multiplicity: usize,
    /// `<T chi_{E~}, chi_F>`.
    pub tilde_pairing: f64,
    pub sum_pairings: f64,
    /// `sum_{x in E~} |I(x) cap F(x)| h^d`, the part of the pairing that the
    /// partition is guaranteed to keep.
    pub localized_floor: f64,
    /// Smallest `C'` with `2^k |E_n| <= C' |Omega^n|` and `|Omega^n| <= C' beta |E_n|` for all `n`.
    pub c_prime: f64,
}

impl PartitionFamily {
    pub fn omega_constant(&self) -> f64 {
        self.c_prime
    }

    pub fn overlap_holds(&self) -> bool {
        self.sum_e_n <= 2.0 * self.e_tilde_measure * (1.0 + REL_TOL) && self.e_multiplicity <= 2 && self.f_multiplicity <= 3
    }

    pub fn localized_holds(&self) -> bool {
        self.sum_pairings >= self.localized_floor * (1.0 - REL_TOL)
    }

    /// `(sum_n ||chi_{F_n}||^{q'}, 3 ||chi_F||^{q'})` in the `(q', r')` mixed norm.
    pub fn f_norm_overlap(&self, f: &LatticeSet, q: f64, r: f64) -> (f64, f64) {
        let (qc, rc) = (conjugate(q), conjugate(r));
        let pow = |v: f64| if qc.is_infinite() { v } else { v.powf(qc) };
        let sum = self.pieces.iter().filter_map(|p| p.f_n.as_ref()).map(|s| pow(mixednorm::indicator_norm(s, qc, rc))).sum();
        (sum, 3.0 * pow(mixednorm::indicator_norm(f, qc, rc)))
    }
}

/// `Pi`-coordinate of a `Y`-cell centre.
fn pi_centre(l: &Lattice, c: &CellIndex) -> f64 {
    l.center_coord(0, c[0])
}

/// Builds `I_n`, `E_n`, `F_n` for the selected stratum (or `(m, k)` if given).
pub fn partition(
    model: &ModelFamily,
    sl: &SuperLevel,
    strata: &Strata,
    f: &LatticeSet,
    mk: Option<(i32, i32)>,
    c: f64,
) -> Result<PartitionFamily> {
    if c < 4.0 {
        return Err(DecompError::Configuration(format!("C must be at least 4, got {c}")));
    }
    let (m, k) = mk.or(strata.selected).ok_or_else(|| DecompError::Degenerate("E is empty".into()))?;
    let stratum = strata
        .strata
        .iter()
        .find(|s| s.m == m && s.k == k)
        .ok_or_else(|| DecompError::Configuration(format!("no stratum ({m}, {k})")))?;
    let beta = sl.beta;
    let yl = f.lattice().clone();
    let h = yl.h;
    if sl.e.h() != h {
        return Err(DecompError::Configuration("E and F use different cell edges".into()));
    }
    let scale = 2f64.powi(m) * beta;
    let length = (c * scale / h).ceil() * h;
    if length > 4.0 {
        return Err(DecompError::Configuration(format!("|I_n| = {length} exceeds the interval budget")));
    }
    let cells: Vec<CellIndex> = sl.e.iter().copied().collect();
    let cell_measure = sl.e.lattice().cell_measure();

    let mut e_sets: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    let mut e_multiplicity = 0;
    for &idx in &stratum.members {
        let iv = strata.intervals[idx];
        let n_lo = (iv.lo() / length).floor() as i64;
        let n_hi = (iv.hi() / length).ceil() as i64 - 1;
        e_multiplicity = e_multiplicity.max((n_hi - n_lo + 1) as usize);
        for n in n_lo..=n_hi {
            e_sets.entry(n).or_default().push(idx);
        }
    }

    let band = |n: i64| ((n - 1) as f64 * length, (n + 2) as f64 * length);
    let in_band = |y: &CellIndex, n: i64| {
        let (a, b) = band(n);
        let s = pi_centre(&yl, y);
        s >= a && s < b
    };
    let f_cells: DetHashSet<CellIndex> = f.iter().copied().collect();
    let quad = Quadrature::new(model, h)?;
    let mut f_count: BTreeMap<CellIndex, usize> = BTreeMap::new();

    let mut pieces = Vec::new();
    let mut c_prime: f64 = 0.0;
    for (n, members) in &e_sets {
        let f_n = LatticeSet::from_cells(yl.clone(), f.iter().filter(|y| in_band(y, *n)).copied());
        for y in f_n.iter() {
            *f_count.entry(*y).or_default() += 1;
        }
        let mut hits = 0usize;
        for &idx in members {
            let x = &cells[idx];
            for s in &quad.shifts {
                let mut y = *x;
                for a in 0..model.d() {
                    y[a] += s[a];
                }
                if f_cells.contains(&y) && in_band(&y, *n) {
                    hits += 1;
                }
            }
        }
        let pairing = hits as f64 * quad.dt * cell_measure;
        let e_n = LatticeSet::from_cells(sl.e.lattice().clone(), members.iter().map(|&i| cells[i]));
        let om = radon::omega(model, &e_n, &f_n)?;
        let (alpha1, alpha2) = if om.is_empty() {
            (0.0, 0.0)
        } else {
            let st = omega_stats(model, &om)?;
            (st.alpha1, st.alpha2)
        };
        let e_measure = e_n.measure();
        c_prime = c_prime.max(2f64.powi(k) * e_measure / pairing).max(pairing / (beta * e_measure));
        pieces.push(PartitionPiece {
            n: *n,
            lo: *n as f64 * length,
            hi: (*n + 1) as f64 * length,
            e_members: members.clone(),
            e_measure,
            f_measure: f_n.measure(),
            f_n: Some(f_n),
            pairing,
            alpha1,
            alpha2,
            alpha: alpha1.min(alpha2),
        });
    }
    let f_multiplicity = f_count.values().copied().max().unwrap_or(0);
    let localized_floor = stratum
        .members
        .iter()
        .map(|&i| strata.intervals[i].intersect(&sl.fibres[i]))
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum::<f64>()
        * cell_measure;
    Ok(PartitionFamily {
        m,
        k,
        beta,
        c,
        length,
        e_measure: sl.e.measure(),
        e_tilde_measure: stratum.measure,
        sum_e_n: pieces.iter().map(|p| p.e_measure).sum(),
        e_multiplicity,
        f_multiplicity,
        tilde_pairing: stratum.pairing,
        sum_pairings: pieces.iter().map(|p| p.pairing).sum(),
        localized_floor,
        c_prime,
        pieces,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthCheck {
    pub checked: usize,
    /// Largest `|J cap F(x)| / (|J|^eta (2^m beta)^-eta 2^k)`.
    pub worst_ratio: f64,
}

/// Samples `x` in the pieces and dyadic `J` shorter than `I(x)` that meet
/// `F(x)`, plus `J = I(x)` itself, and records the width-bound ratio.
pub fn width_bound_check(sl: &SuperLevel, strata: &Strata, family: &PartitionFamily, samples: usize, seed: u64) -> Result<WidthCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let members: Vec<usize> = family.pieces.iter().flat_map(|p| p.e_members.iter().copied()).collect::<BTreeSet<_>>().into_iter().collect();
    if members.is_empty() {
        return Ok(WidthCheck { checked: 0, worst_ratio: 0.0 });
    }
    let scale = (2f64.powi(family.m) * family.beta).powf(-strata.eta) * 2f64.powi(family.k);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..samples {
        let idx = members[rng.gen_range(0..members.len())];
        let fib = &sl.fibres[idx];
        let iv = strata.intervals[idx];
        let kmax = dyadic_level(fib.dt)?;
        let j = if iv.level < kmax && rng.gen_bool(0.75) {
            let level = rng.gen_range(iv.level + 1..=kmax);
            let cell = fib.cells()[rng.gen_range(0..fib.len())];
            DyadicInterval::new(level, (cell as i64) >> (kmax - level))
        } else {
            iv
        };
        let ratio = j.intersect(fib)? / (j.len().powf(strata.eta) * scale);
        worst = worst.max(ratio);
        checked += 1;
    }
    Ok(WidthCheck { checked, worst_ratio: worst })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthImplication {
    pub w: f64,
    /// Largest fraction of `|Omega^n|` whose `x`-fibres fit in windows of length `w`.
    pub lambda: f64,
    /// `(1/2) (lambda / 4)^{1/eta} 2^m beta`.
    pub bound: f64,
    pub holds: bool,
}

/// For each width `w`, keeps in every fibre of `Omega^n` the points in the
/// best window of length `w` and checks `w >= bound(lambda)`.
pub fn delta1_bound_check(
    model: &ModelFamily,
    sl: &SuperLevel,
    f: &LatticeSet,
    family: &PartitionFamily,
    eta: f64,
    widths: &[f64],
) -> Result<Vec<WidthImplication>> {
    let h = f.h();
    let quad = Quadrature::new(model, h)?;
    let yl = f.lattice().clone();
    let f_cells: DetHashSet<CellIndex> = f.iter().copied().collect();
    let cells: Vec<CellIndex> = sl.e.iter().copied().collect();
    let scale = 2f64.powi(family.m) * family.beta;
    let mut out = Vec::new();
    for &w in widths {
        let wc = (w / quad.dt).floor() as i32;
        let (mut kept, mut total) = (0usize, 0usize);
        for piece in &family.pieces {
            let (a, b) = (piece.lo - family.length, piece.hi + family.length);
            for &idx in &piece.e_members {
                let x = cells[idx];
                let mut pts: Vec<i32> = Vec::new();
                for (j, s) in quad.shifts.iter().enumerate() {
                    let mut y = x;
                    for ax in 0..model.d() {
                        y[ax] += s[ax];
                    }
                    let c = pi_centre(&yl, &y);
                    if f_cells.contains(&y) && c >= a && c < b {
                        pts.push(quad.pi_cell(x[0], j));
                    }
                }
                pts.sort_unstable();
                total += pts.len();
                let fib = LineSet::new(quad.dt, pts.iter().copied());
                kept += pts.iter().map(|&p| fib.count_cells(p, p + wc.max(1))).max().unwrap_or(0);
            }
        }
        let lambda = if total == 0 { 0.0 } else { kept as f64 / total as f64 };
        let bound = 0.5 * (lambda / 4.0).powf(1.0 / eta) * scale;
        out.push(WidthImplication { w, lambda, bound, holds: w >= bound * (1.0 - REL_TOL) });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaStats {
    pub measure: f64,
    pub pi1: f64,
    pub pi2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha: f64,
}

/// `alpha_i = |Omega| / |pi_i(Omega)|` with projections taken cellwise.
pub fn omega_stats(model: &ModelFamily, omega: &LatticeSet) -> Result<OmegaStats> {
    if omega.is_empty() {
        return Err(DecompError::Degenerate("Omega is empty".into()));
    }
    let p1 = ccball::project_pi1(omega);
    let p2 = ccball::project_pi2(model, omega);
    let measure = omega.measure();
    let (alpha1, alpha2) = (measure / p1.measure(), measure / p2.measure());
    Ok(OmegaStats { measure, pi1: p1.measure(), pi2: p2.measure(), alpha1, alpha2, alpha: alpha1.min(alpha2) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseBallConfig {
    /// Radius pairs to try.
    pub deltas: Vec<(f64, f64)>,
    /// Slack exponent on `alpha`.
    pub rho: f64,
    /// Constant in front of the density bound.
    pub c: f64,
    /// Centres are every `stride`-th cell of `Omega` up to this many.
    pub max_centers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseBall {
    pub center: ZPoint,
    pub cell: Vec<i32>,
    pub delta1: f64,
    pub delta2: f64,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseBallReport {
    pub stats: OmegaStats,
    pub best: Option<DenseBall>,
    /// Best density per radius pair.
    pub per_radius: Vec<(f64, f64, f64)>,
    /// Pairs skipped because the lattice is too coarse for them.
    pub skipped: Vec<(f64, f64)>,
    /// `c alpha^rho (alpha1/d1)^{floor((d+2)/2)} (alpha2/d2)^{floor((d+1)/2)}` at the best radii.
    pub bound: f64,
    /// The same with the two floor exponents exchanged.
    pub bound_swapped: f64,
    pub meets_bound: bool,
    pub meets_swapped: bool,
}

/// Maximizes `|B cap Omega| / |B|` over subsampled centres in `Omega` and the
/// given radii. Balls only depend on `t` up to translation in `x`, so one
/// ball per `(t`-cell, radius pair) is computed and shifted.
pub fn dense_ball_search(model: &ModelFamily, omega: &LatticeSet, config: &DenseBallConfig) -> Result<DenseBallReport> {
    let stats = omega_stats(model, omega)?;
    let d = model.d();
    let zl = omega.lattice().clone();
    let h = zl.h;
    let all: Vec<CellIndex> = omega.iter().copied().collect();
    let stride = all.len().div_ceil(config.max_centers.max(1)).max(1);
    let centers: Vec<CellIndex> = all.iter().step_by(stride).copied().collect();

    let mut radii = Vec::new();
    let mut skipped = Vec::new();
    for &(d1, d2) in &config.deltas {
        if h <= d1.min(d2) / ccball::RESOLUTION_FACTOR * (1.0 + 1e-12) {
            radii.push((d1, d2));
        } else {
            skipped.push((d1, d2));
        }
    }
    let t_cells: BTreeSet<i32> = centers.iter().map(|c| c[d]).collect();
    let jobs: Vec<(i32, usize)> = t_cells.iter().flat_map(|&t| (0..radii.len()).map(move |r| (t, r))).collect();
    let balls: Vec<ccball::Result<LatticeSet>> = jobs
        .par_iter()
        .map(|&(t, r)| {
            let mut z = ZPoint::origin(d);
            z.x = vec![0.5 * h; d];
            z.t = zl.center_coord(d, t);
            let (d1, d2) = radii[r];
            Ok(ccball::reach_ball(model, &z, &BallParams::new(d1, d2, h))?.cells().clone())
        })
        .collect();
    let mut cache: BTreeMap<(i32, usize), LatticeSet> = BTreeMap::new();
    for (job, b) in jobs.iter().zip(balls) {
        cache.insert(*job, b?);
    }

    let scores: Vec<(usize, usize, f64)> = centers
        .par_iter()
        .enumerate()
        .flat_map_iter(|(ci, c)| {
            let cache = &cache;
            (0..radii.len()).map(move |r| {
                let ball = &cache[&(c[d], r)];
                let hits = ball
                    .iter()
                    .filter(|b| {
                        let mut p = **b;
                        for a in 0..d {
                            p[a] += c[a];
                        }
                        omega.contains(&p)
                    })
                    .count();
                (ci, r, hits as f64 / ball.len() as f64)
            })
        })
        .collect();

    let mut per_radius: Vec<(f64, f64, f64)> = radii.iter().map(|&(a, b)| (a, b, 0.0)).collect();
    let mut best: Option<(usize, usize, f64)> = None;
    for &(ci, r, dens) in &scores {
        per_radius[r].2 = per_radius[r].2.max(dens);
        if best.map_or(true, |b| dens > b.2) {
            best = Some((ci, r, dens));
        }
    }
    let hi_exp = ((d + 2) / 2) as i32;
    let lo_exp = ((d + 1) / 2) as i32;
    let (mut bound, mut bound_swapped) = (f64::NAN, f64::NAN);
    let best = best.map(|(ci, r, density)| {
        let (d1, d2) = radii[r];
        let base = config.c * stats.alpha.powf(config.rho);
        bound = base * (stats.alpha1 / d1).powi(hi_exp) * (stats.alpha2 / d2).powi(lo_exp);
        bound_swapped = base * (stats.alpha1 / d1).powi(lo_exp) * (stats.alpha2 / d2).powi(hi_exp);
        let c = centers[ci];
        DenseBall { center: ZPoint::from_coords(&zl.center(&c)), cell: c[..=d].to_vec(), delta1: d1, delta2: d2, density }
    });
    let density = best.as_ref().map_or(0.0, |b| b.density);
    Ok(DenseBallReport {
        stats,
        per_radius,
        skipped,
        meets_bound: density >= bound,
        meets_swapped: density >= bound_swapped,
        bound,
        bound_swapped,
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_minimal_interval() {
        let fx = LineSet::interval(2f64.powi(-10), 0.0, 0.25);
        let iv = minimal_dyadic(&fx, 0.5, 0.25).unwrap();
        assert_eq!(iv, DyadicInterval::new(8, 0));
        assert!(localization_excess(&fx, &iv, 0.5).unwrap() <= 1e-12);
    }

    #[test]
    fn whole_line_lower_bound() {
        let fx = LineSet::interval(2f64.powi(-8), -1.0, 1.0);
        let iv = minimal_dyadic(&fx, 0.25, 0.25).unwrap();
        assert!(iv.len() >= (0.25f64 * 2.0).powf(1.0 / 0.75));
    }

    #[test]
    fn configuration_error_when_nothing_qualifies() {
        let fx = LineSet::interval(0.125, 0.0, 0.5);
        assert!(matches!(minimal_dyadic(&fx, 0.5, 4.0), Err(DecompError::Configuration(_))));
    }

    #[test]
    fn central_examples() {
        let dt = 2f64.powi(-8);
        let w = 0.125;
        let spec = CentralSetSpec { w, eps: 0.5, c_eps: 2.0 };
        assert!(is_central(&LineSet::interval(dt, -w, w), &spec).unwrap().central);
        let far = LineSet::interval(dt, 4.0 * 2.0 * w, 5.0 * 2.0 * w);
        assert!(!is_central(&far, &spec).unwrap().support_ok);
        let one = LineSet::new(dt, [0]);
        assert!(is_central(&one, &CentralSetSpec { w: dt, eps: 0.5, c_eps: 1.0 }).unwrap().central);
    }

    #[test]
    fn dyadic_containment() {
        let a = DyadicInterval::new(1, -1);
        assert_eq!((a.lo(), a.hi()), (-0.5, 0.0));
        assert!(a.contains(&DyadicInterval::new(3, -3)));
        assert!(!a.contains(&DyadicInterval::new(3, 0)));
        assert_eq!(DyadicInterval::new(2, -1).cell_range(4), (-4, 0));
    }
}
