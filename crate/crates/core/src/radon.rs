//! The curve transform `Tf(y) = int f(y - gamma(t)) dt` over `t in [-1, 1]`,
//! its adjoint, pairings with indicator sets and the union-of-balls
//! construction that rules out triples with `r > p > q`.
//!
//! Quadrature uses the midpoint nodes `t_j = -1 + (j + 1/2) dt` with
//! `dt = h / QUAD_REFINE`, and each node moves a cell by the integer shift
//! nearest to `gamma(t_j) / h`. `T` and `T*` share these shifts, so duality
//! holds up to summation order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ccball::{self, BallError, BallEstimate};
use crate::geometry::{ModelFamily, MAX_DIM};
use crate::lattice::{CellIndex, DetHashMap, DetHashSet, Lattice, LatticeSet, LineSet};
use crate::mixednorm::{self, conjugate, recip, GridFunction};

/// Quadrature nodes per cell edge.
pub const QUAD_REFINE: i32 = 2;

/// Smallest `Omega` (in cells) accepted by [`pairing`].
pub const MIN_OMEGA_CELLS: usize = 10;

/// Two-sided bound recorded for quadrature against lattice pairings.
pub const C_PAIR: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RadonError {
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("domain overflow: {0}")]
    Overflow(String),
    #[error(transparent)]
    Ball(#[from] BallError),
}

pub type Result<T> = std::result::Result<T, RadonError>;

/// Midpoint nodes on `[-1, 1]` and their lattice shifts.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub h: f64,
    pub dt: f64,
    /// `1 / h`.
    pub n: i32,
    pub shifts: Vec<CellIndex>,
}

impl Quadrature {
    pub fn new(model: &ModelFamily, h: f64) -> Result<Self> {
        let n = (1.0 / h).round();
        if !(h > 0.0) || (n * h - 1.0).abs() > 1e-9 {
            return Err(RadonError::InvalidInput(format!("1/h must be an integer, got h = {h}")));
        }
        let n = n as i32;
        let m = 2 * n * QUAD_REFINE;
        let dt = h / QUAD_REFINE as f64;
        let d = model.d();
        let shifts = (0..m)
            .map(|j| {
                let t = -1.0 + (j as f64 + 0.5) * dt;
                let g = model.gamma(t);
                let mut s = [0i32; MAX_DIM];
                for i in 0..d {
                    s[i] = (0.5 + g[i] / h).floor() as i32;
                }
                s
            })
            .collect();
        Ok(Quadrature { h, dt, n, shifts })
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    pub fn node(&self, j: usize) -> f64 {
        -1.0 + (j as f64 + 0.5) * self.dt
    }

    /// Cell of the `Pi`-line (edge `dt`) containing `x_1 + t_j` for the `X`-cell index `i`.
    pub fn pi_cell(&self, i: i32, j: usize) -> i32 {
        QUAD_REFINE * i + j as i32 - QUAD_REFINE * self.n + QUAD_REFINE / 2
    }
}

fn add(a: &CellIndex, b: &CellIndex, sign: i32) -> CellIndex {
    let mut out = *a;
    for k in 0..MAX_DIM {
        out[k] += sign * b[k];
    }
    out
}

fn check_lattice(l: &Lattice, model: &ModelFamily) -> Result<()> {
    if l.dim != model.d() {
        return Err(RadonError::InvalidInput(format!("lattice dimension {} but d = {}", l.dim, model.d())));
    }
    if l.origin.iter().any(|o| *o != 0.0) {
        return Err(RadonError::InvalidInput("X and Y lattices must have origin 0".into()));
    }
    Ok(())
}

fn same_h(a: &Lattice, b: &Lattice) -> Result<f64> {
    if a.h != b.h {
        return Err(RadonError::InvalidInput(format!("cell edges differ: {} vs {}", a.h, b.h)));
    }
    Ok(a.h)
}

fn transport(model: &ModelFamily, f: &GridFunction, sign: i32) -> Result<GridFunction> {
    let l = f.lattice();
    check_lattice(l, model)?;
    let quad = Quadrature::new(model, l.h)?;
    let mut acc: DetHashMap<CellIndex, f64> = DetHashMap::default();
    for (c, v) in f.iter() {
        for s in &quad.shifts {
            *acc.entry(add(c, s, sign)).or_insert(0.0) += v * quad.dt;
        }
    }
    let sorted: BTreeMap<CellIndex, f64> = acc.into_iter().collect();
    Ok(GridFunction::from_values(l.clone(), sorted))
}

/// `Tf(y) = sum_j f(y - gamma(t_j)) dt`.
pub fn apply_t(model: &ModelFamily, f: &GridFunction) -> Result<GridFunction> {
    transport(model, f, 1)
}

/// `T*g(x) = sum_j g(x + gamma(t_j)) dt`.
pub fn apply_tstar(model: &ModelFamily, g: &GridFunction) -> Result<GridFunction> {
    transport(model, g, -1)
}

/// `sum f g h^d` over common cells.
pub fn inner(f: &GridFunction, g: &GridFunction) -> f64 {
    let w = f.lattice().cell_measure();
    f.iter().map(|(c, v)| v * g.get(c)).sum::<f64>() * w
}

fn cell_set(set: &LatticeSet) -> DetHashSet<CellIndex> {
    set.iter().copied().collect()
}

/// `<T chi_E, chi_F>` by quadrature.
pub fn quadrature_pairing(model: &ModelFamily, e: &LatticeSet, f: &LatticeSet) -> Result<f64> {
    check_lattice(e.lattice(), model)?;
    check_lattice(f.lattice(), model)?;
    let h = same_h(e.lattice(), f.lattice())?;
    let quad = Quadrature::new(model, h)?;
    let fs = cell_set(f);
    let hits: usize = e.iter().map(|c| quad.shifts.iter().filter(|s| fs.contains(&add(c, s, 1))).count()).sum();
    Ok(hits as f64 * quad.dt * e.lattice().cell_measure())
}

/// `t`-cells of the incidence lattice lying inside `[-1, 1]`.
fn t_range(h: f64) -> std::ops::RangeInclusive<i32> {
    let n = (1.0 / h).round() as i32;
    -(n - 1)..=(n - 1)
}

/// `Omega = pi1^{-1}(E) cap pi2^{-1}(F)` on the incidence lattice.
pub fn omega(model: &ModelFamily, e: &LatticeSet, f: &LatticeSet) -> Result<LatticeSet> {
    check_lattice(e.lattice(), model)?;
    check_lattice(f.lattice(), model)?;
    let h = same_h(e.lattice(), f.lattice())?;
    let d = model.d();
    let zl = Lattice::incidence(d, h);
    let yl = f.lattice().clone();
    let fs = cell_set(f);
    let mut out = LatticeSet::new(zl.clone());
    for c in e.iter() {
        for k in t_range(h) {
            let mut z = *c;
            z[d] = k;
            if fs.contains(&ccball::pi2_cell(model, &zl, &yl, &z)) {
                out.insert(z);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingResult {
    /// `<T chi_E, chi_F>` by quadrature.
    pub quadrature: f64,
    /// `<chi_E, T* chi_F>` on the same nodes.
    pub adjoint: f64,
    /// `|Omega|` on the incidence lattice.
    pub omega: f64,
    pub omega_cells: usize,
    /// `quadrature / omega`.
    pub ratio: f64,
    pub c_pair: f64,
    pub comparable: bool,
}

pub fn pairing(model: &ModelFamily, e: &LatticeSet, f: &LatticeSet) -> Result<PairingResult> {
    if e.is_empty() || f.is_empty() {
        return Err(RadonError::InvalidInput("E and F must be nonempty".into()));
    }
    let quadrature = quadrature_pairing(model, e, f)?;
    let tstar = apply_tstar(model, &GridFunction::indicator(f))?;
    let adjoint = inner(&GridFunction::indicator(e), &tstar);
    let om = omega(model, e, f)?;
    if om.len() < MIN_OMEGA_CELLS {
        return Err(RadonError::Resolution(format!("Omega has {} cells, need {MIN_OMEGA_CELLS}", om.len())));
    }
    let ratio = quadrature / om.measure();
    Ok(PairingResult {
        quadrature,
        adjoint,
        omega: om.measure(),
        omega_cells: om.len(),
        ratio,
        c_pair: C_PAIR,
        comparable: ratio >= 1.0 / C_PAIR && ratio <= C_PAIR,
    })
}

/// `<T chi_E, chi_F> / (|E|^{1/p} ||chi_F||_{q', r'})`.
pub fn rwt_ratio(model: &ModelFamily, e: &LatticeSet, f: &LatticeSet, p: f64, q: f64, r: f64) -> Result<f64> {
    for (name, v) in [("p", p), ("q", q), ("r", r)] {
        if !(v >= 1.0) {
            return Err(RadonError::InvalidInput(format!("{name} must lie in [1, inf], got {v}")));
        }
    }
    if e.is_empty() || f.is_empty() {
        return Err(RadonError::InvalidInput("E and F must be nonempty".into()));
    }
    let num = quadrature_pairing(model, e, f)?;
    let den = e.measure().powf(recip(p)) * mixednorm::indicator_norm(f, conjugate(q), conjugate(r));
    Ok(num / den)
}

/// `E = {x : beta < T* chi_F(x) <= 2 beta}` with the fibres `F(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperLevel {
    pub beta: f64,
    pub e: LatticeSet,
    /// `T* chi_F` on `E`.
    pub values: Vec<f64>,
    /// `F(x) = {x_1 + t : x + gamma(t) in F}` on the `Pi`-line with edge `dt`,
    /// in the order of `e`.
    pub fibres: Vec<LineSet>,
}

impl SuperLevel {
    pub fn fibre(&self, x: &CellIndex) -> Option<&LineSet> {
        self.e.iter().position(|c| c == x).map(|i| &self.fibres[i])
    }
}

/// Level set of `T* chi_F` over the cells of `X = [-1, 1]^d`.
pub fn superlevel_set(model: &ModelFamily, f: &LatticeSet, beta: f64) -> Result<SuperLevel> {
    if !(beta > 0.0) {
        return Err(RadonError::InvalidInput(format!("beta must be positive, got {beta}")));
    }
    let l = f.lattice();
    check_lattice(l, model)?;
    let quad = Quadrature::new(model, l.h)?;
    let d = model.d();
    let n = quad.n;
    let in_x = |c: &CellIndex| (0..d).all(|k| c[k] >= -n && c[k] < n);
    let mut hits: DetHashMap<CellIndex, Vec<u32>> = DetHashMap::default();
    for y in f.iter() {
        for (j, s) in quad.shifts.iter().enumerate() {
            let x = add(y, s, -1);
            if in_x(&x) {
                hits.entry(x).or_default().push(j as u32);
            }
        }
    }
    let mut rows: Vec<(CellIndex, Vec<u32>)> = hits
        .into_iter()
        .filter(|(_, js)| {
            let v = js.len() as f64 * quad.dt;
            v > beta && v <= 2.0 * beta
        })
        .collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    let e = LatticeSet::from_cells(Lattice::standard(d, l.h), rows.iter().map(|r| r.0));
    let values = rows.iter().map(|r| r.1.len() as f64 * quad.dt).collect();
    let fibres = rows
        .iter()
        .map(|(x, js)| LineSet::new(quad.dt, js.iter().map(|&j| quad.pi_cell(x[0], j as usize))))
        .collect();
    Ok(SuperLevel { beta, e, values, fibres })
}

/// One member of the union-of-balls sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NecessityStep {
    pub delta1: f64,
    pub delta2: f64,
    pub h: f64,
    pub count: usize,
    /// Translation between neighbouring balls, in cells along `x_1`.
    pub spacing_cells: i32,
    pub ball_volume: f64,
    pub union_volume: f64,
    pub pi1_ball: f64,
    pub pi1_union: f64,
    pub pi2_norm: f64,
    /// `Pi pi2` bin ranges of the translates are pairwise disjoint.
    pub disjoint: bool,
    /// `|pi1(U)| <= N |pi1(B)|`, compared in cells.
    pub pi1_subadditive: bool,
    pub ratio: f64,
}

/// Places `count` translates of `ball` along `x_1` with disjoint `Pi pi2`
/// projections and evaluates `|U| / (|pi1 U|^{1/p} ||chi_{pi2 U}||_{q', r'})`.
/// With `count = None` the largest number fitting in the chart, capped at
/// `floor(1 / delta1)`, is used.
pub fn necessity_union(
    model: &ModelFamily,
    ball: &BallEstimate,
    count: Option<usize>,
    p: f64,
    q: f64,
    r: f64,
) -> Result<NecessityStep> {
    let p2 = ball.proj2_cells();
    let p1 = ball.proj1_cells();
    let (lo, hi) = p2.axis_bounds(0).ok_or_else(|| RadonError::InvalidInput("empty ball".into()))?;
    let spacing = hi - lo + 1;
    let h = ball.h;

    // x_1 index range of everything that moves with the translation
    let (x_lo, x_hi) = ball.cells().axis_bounds(0).expect("nonempty ball");
    let (a, b) = (x_lo.min(lo), x_hi.max(hi));
    let dom = model.domain()[0];
    let first_ok = ((dom[0] / h).ceil()) as i32;
    let last_ok = ((dom[1] / h).floor()) as i32 - 1;
    let room = (last_ok - first_ok) - (b - a);
    let fit = if room < 0 { 0 } else { (room / spacing) as usize + 1 };
    let default = fit.min((1.0 / ball.delta1).floor() as usize).max(1);
    let n = count.unwrap_or(default);
    if n == 0 || n > fit {
        return Err(RadonError::Overflow(format!(
            "{n} translates with spacing {spacing} cells do not fit in [{}, {}] (at most {fit})",
            dom[0], dom[1]
        )));
    }
    let start = first_ok - a;
    let offsets: Vec<i32> = (0..n as i32).map(|k| start + k * spacing).collect();

    let mut ranges: Vec<(i32, i32)> = offsets.iter().map(|o| (lo + o, hi + o)).collect();
    ranges.sort();
    let disjoint = ranges.windows(2).all(|w| w[0].1 < w[1].0);

    let mut pi1_union = LatticeSet::new(p1.lattice().clone());
    let mut pi2_union = LatticeSet::new(p2.lattice().clone());
    for o in &offsets {
        pi1_union.union_with(&p1.translated(&[*o]));
        pi2_union.union_with(&p2.translated(&[*o]));
    }
    let pi1_subadditive = pi1_union.len() <= n * p1.len();
    let union_volume = n as f64 * ball.volume;
    let pi2_norm = mixednorm::indicator_norm(&pi2_union, conjugate(q), conjugate(r));
    let ratio = union_volume / (pi1_union.measure().powf(recip(p)) * pi2_norm);
    Ok(NecessityStep {
        delta1: ball.delta1,
        delta2: ball.delta2,
        h,
        count: n,
        spacing_cells: spacing,
        ball_volume: ball.volume,
        union_volume,
        pi1_ball: ball.proj1,
        pi1_union: pi1_union.measure(),
        pi2_norm,
        disjoint,
        pi1_subadditive,
        ratio,
    })
}
