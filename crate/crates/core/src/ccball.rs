//! Two-parameter Carnot-Caratheodory balls on the incidence lattice.
//!
//! [`reach_ball`] computes `B(z0, delta1, delta2)` as the set of lattice cells
//! reachable in total time 1 under controls `|a_i| <= delta_i`. The search is
//! a minimum-time sweep over cells in which every occupied cell keeps the
//! continuous state of the path that reached it first; moves apply one of the
//! eight non-zero extreme controls for the time needed to cross one cell.
//! Keeping continuous states is what lets sub-cell motion (for example the
//! `[V1,V2]` direction, whose extent is `~ delta1 delta2`) accumulate instead
//! of being rounded away at every step.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, ModelFamily, ZPoint, MAX_DIM};
use crate::lattice::{CellIndex, DetHashMap, Lattice, LatticeSet};
use crate::mixednorm::{self, MixedExponents};

/// Largest radius accepted by [`reach_ball`].
pub const MAX_DELTA: f64 = 0.5;

/// Finest cell edge allowed relative to the smaller radius.
pub const RESOLUTION_FACTOR: f64 = 4.0;

/// Default RK4 step inside one lattice move.
pub const DEFAULT_TAU: f64 = 1.0 / 32.0;

/// Minimum number of cells any projection needs before ratios are reported.
pub const MIN_PROJECTED_CELLS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BallError {
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("invalid ball parameters: {0}")]
    InvalidParameters(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub type Result<T> = std::result::Result<T, BallError>;

/// `(theta, A)` for weak comparability: `delta1 <= A delta2^theta` and `delta2 <= A delta1^theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparabilityWindow {
    pub theta: f64,
    pub a: f64,
}

impl ComparabilityWindow {
    pub fn new(theta: f64, a: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(BallError::InvalidParameters(format!("theta must lie in (0, 1], got {theta}")));
        }
        if !(a >= 1.0) {
            return Err(BallError::InvalidParameters(format!("A must be >= 1, got {a}")));
        }
        Ok(ComparabilityWindow { theta, a })
    }

    pub fn comparable(&self, delta1: f64, delta2: f64) -> bool {
        let tol = 1.0 + 1e-12;
        delta1 <= self.a * delta2.powf(self.theta) * tol && delta2 <= self.a * delta1.powf(self.theta) * tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallParams {
    pub delta1: f64,
    pub delta2: f64,
    pub h: f64,
    /// Largest RK4 step used inside one lattice move.
    pub tau: f64,
}

impl BallParams {
    pub fn new(delta1: f64, delta2: f64, h: f64) -> Self {
        BallParams { delta1, delta2, h, tau: DEFAULT_TAU }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("delta1", self.delta1), ("delta2", self.delta2)] {
            if !(v > 0.0 && v <= MAX_DELTA) {
                return Err(BallError::InvalidParameters(format!("{name} must lie in (0, {MAX_DELTA}], got {v}")));
            }
        }
        if !(self.h > 0.0) {
            return Err(BallError::InvalidParameters(format!("h must be positive, got {}", self.h)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(BallError::InvalidParameters(format!("tau must lie in (0, 1], got {}", self.tau)));
        }
        let limit = self.delta1.min(self.delta2) / RESOLUTION_FACTOR;
        if self.h > limit * (1.0 + 1e-12) {
            return Err(BallError::Resolution(format!(
                "h = {} exceeds min(delta1, delta2)/{RESOLUTION_FACTOR} = {limit}",
                self.h
            )));
        }
        Ok(())
    }
}

/// One computed ball with its projections and slab profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallEstimate {
    pub center: ZPoint,
    pub delta1: f64,
    pub delta2: f64,
    pub h: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cells: Option<LatticeSet>,
    pub cell_count: usize,
    pub volume: f64,
    pub proj1: f64,
    pub proj2: f64,
    pub pi_extent: f64,
    /// `pi_extent / delta1`.
    pub c_geom: f64,
    /// Some move left the chart domain and was dropped.
    pub truncated: bool,
    /// `(t, f(t))` with `t` measured from `Pi pi2(z0)`.
    pub slab: Vec<(f64, f64)>,
    #[serde(skip)]
    pub(crate) proj1_cells: Option<LatticeSet>,
    #[serde(skip)]
    pub(crate) proj2_cells: Option<LatticeSet>,
}

impl BallEstimate {
    pub fn cells(&self) -> &LatticeSet {
        self.cells.as_ref().expect("ball cells retained")
    }

    pub fn proj1_cells(&self) -> &LatticeSet {
        self.proj1_cells.as_ref().expect("ball projections retained")
    }

    pub fn proj2_cells(&self) -> &LatticeSet {
        self.proj2_cells.as_ref().expect("ball projections retained")
    }

    /// Drops the cell sets, keeping only the scalar summary.
    pub fn summary(&self) -> BallEstimate {
        BallEstimate { cells: None, proj1_cells: None, proj2_cells: None, ..self.clone() }
    }
}

/// `pi2` of a `Z`-cell: the `Y`-cell containing the image of its centre.
pub fn pi2_cell(model: &ModelFamily, zl: &Lattice, yl: &Lattice, c: &CellIndex) -> CellIndex {
    let d = model.d();
    let t = zl.center_coord(d, c[d]);
    let mut y = [0.0; MAX_DIM];
    for (k, p) in model.curve().iter().enumerate() {
        y[k] = zl.center_coord(k, c[k]) + p.eval(t);
    }
    yl.cell_of(&y[..d])
}

/// `pi2` of a set of `Z`-cells.
pub fn project_pi2(model: &ModelFamily, set: &LatticeSet) -> LatticeSet {
    let zl = set.lattice();
    let yl = Lattice::standard(model.d(), zl.h);
    let cells = set.iter().map(|c| pi2_cell(model, zl, &yl, c)).collect::<Vec<_>>();
    LatticeSet::from_cells(yl, cells)
}

/// `pi1` of a set of `Z`-cells.
pub fn project_pi1(set: &LatticeSet) -> LatticeSet {
    set.project_drop_last()
}

fn controls(delta1: f64, delta2: f64) -> [(f64, f64); 8] {
    [
        (delta1, 0.0),
        (-delta1, 0.0),
        (0.0, delta2),
        (0.0, -delta2),
        (delta1, delta2),
        (delta1, -delta2),
        (-delta1, delta2),
        (-delta1, -delta2),
    ]
}

struct Reached {
    time: f64,
    state: [f64; MAX_DIM],
    settled: bool,
}

/// Cells of `B(z0, delta1, delta2)` on the incidence lattice of edge `h`.
/// Returns the cell set and whether any move left the domain.
pub fn reach_cells(model: &ModelFamily, z0: &ZPoint, params: &BallParams) -> Result<(LatticeSet, bool)> {
    params.validate()?;
    if !model.contains(z0) {
        return Err(GeometryError::OutsideDomain { point: z0.coords() }.into());
    }
    let n = model.dim();
    let d = model.d();
    let lattice = Lattice::incidence(d, params.h);
    let h = params.h;
    let ctrl = controls(params.delta1, params.delta2);

    let mut seed_state = [0.0; MAX_DIM];
    seed_state[..n].copy_from_slice(&z0.coords());
    let seed_cell = lattice.cell_of(&seed_state[..n]);

    let mut reached: DetHashMap<CellIndex, Reached> = DetHashMap::default();
    let mut heap = BinaryHeap::new();
    reached.insert(seed_cell, Reached { time: 0.0, state: seed_state, settled: false });
    heap.push(Reverse((OrderedFloat(0.0), seed_cell)));
    let mut truncated = false;
    let mut vel = [0.0; MAX_DIM];

    while let Some(Reverse((OrderedFloat(time), cell))) = heap.pop() {
        let entry = reached.get_mut(&cell).expect("queued cells are recorded");
        if entry.settled || time > entry.time {
            continue;
        }
        entry.settled = true;
        let state = entry.state;
        let remaining = 1.0 - time;
        if remaining <= 0.0 {
            continue;
        }
        for &(a1, a2) in ctrl.iter() {
            model.velocity(state[d], a1, a2, &mut vel);
            let speed = vel[..n].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if speed == 0.0 {
                continue;
            }
            let dur = (h / speed).min(remaining);
            let steps = (dur / params.tau).ceil().max(1.0) as usize;
            let mut next = state;
            if model.flow_in_place(&mut next[..n], a1, a2, dur, steps).is_err() {
                truncated = true;
                continue;
            }
            let next_cell = lattice.cell_of(&next[..n]);
            if next_cell == cell {
                continue;
            }
            let next_time = time + dur;
            match reached.get_mut(&next_cell) {
                Some(e) if e.settled || e.time <= next_time => {}
                Some(e) => {
                    e.time = next_time;
                    e.state = next;
                    heap.push(Reverse((OrderedFloat(next_time), next_cell)));
                }
                None => {
                    reached.insert(next_cell, Reached { time: next_time, state: next, settled: false });
                    heap.push(Reverse((OrderedFloat(next_time), next_cell)));
                }
            }
        }
    }
    let set = LatticeSet::from_cells(lattice, reached.into_keys());
    Ok((set, truncated))
}

/// Computes `B(z0, delta1, delta2)` and its summary quantities.
pub fn reach_ball(model: &ModelFamily, z0: &ZPoint, params: &BallParams) -> Result<BallEstimate> {
    let (cells, truncated) = reach_cells(model, z0, params)?;
    Ok(estimate_from_cells(model, z0, params.delta1, params.delta2, cells, truncated))
}

/// Fills a [`BallEstimate`] from a cell set on the incidence lattice.
pub fn estimate_from_cells(
    model: &ModelFamily,
    z0: &ZPoint,
    delta1: f64,
    delta2: f64,
    cells: LatticeSet,
    truncated: bool,
) -> BallEstimate {
    let h = cells.h();
    let p1 = project_pi1(&cells);
    let p2 = project_pi2(model, &cells);
    let pi_extent = p2.axis_extent(0);
    let slab = slab_from_cells(model, z0, &cells);
    BallEstimate {
        center: z0.clone(),
        delta1,
        delta2,
        h,
        cell_count: cells.len(),
        volume: cells.measure(),
        proj1: p1.measure(),
        proj2: p2.measure(),
        pi_extent,
        c_geom: pi_extent / delta1,
        truncated,
        slab,
        cells: Some(cells),
        proj1_cells: Some(p1),
        proj2_cells: Some(p2),
    }
}

/// `f(t)`: measure of the ball cells whose `Pi pi2` image falls in the width-`h`
/// bin at `t`, reported relative to `Pi pi2(z0)`. `sum f(t) h = |B|`.
fn slab_from_cells(model: &ModelFamily, z0: &ZPoint, cells: &LatticeSet) -> Vec<(f64, f64)> {
    let l = cells.lattice();
    let d = model.d();
    let h = l.h;
    // x_1 + t at a Z-cell centre lands on a Y-cell centre, so the Y first index is the bin
    let yl = Lattice::standard(d, h);
    let mut counts = std::collections::BTreeMap::<i32, usize>::new();
    for c in cells.iter() {
        let s = l.center_coord(0, c[0]) + l.center_coord(d, c[d]);
        let bin = ((s - yl.origin[0]) / h).floor() as i32;
        *counts.entry(bin).or_default() += 1;
    }
    let s0 = model.pi_pi2(z0);
    let slice_measure = h.powi(d as i32);
    counts
        .into_iter()
        .map(|(bin, n)| (yl.center_coord(0, bin) - s0, n as f64 * slice_measure))
        .collect()
}

/// The slab profile of a computed ball.
pub fn slab_profile(ball: &BallEstimate) -> &[(f64, f64)] {
    &ball.slab
}

/// Result of the random-control oracle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McBall {
    pub paths: usize,
    pub steps: usize,
    pub segments: usize,
    pub seed: u64,
    pub escaped: usize,
    pub cell_count: usize,
    pub volume: f64,
    #[serde(skip)]
    pub cells: Option<LatticeSet>,
    #[serde(skip)]
    pub endpoints: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McParams {
    pub paths: usize,
    /// RK4 steps per unit time.
    pub steps: usize,
    /// Number of constant-control pieces per path.
    pub segments: usize,
    pub seed: u64,
    /// Keep raw endpoints (`paths * dim` floats).
    pub keep_endpoints: bool,
}

impl McParams {
    pub fn new(paths: usize, steps: usize, seed: u64) -> Self {
        McParams { paths, steps, segments: 4, seed, keep_endpoints: false }
    }
}

const MC_CHUNK: usize = 4096;

/// Random piecewise-constant controls, uniform in the box `[-d1,d1] x [-d2,d2]`
/// with uniformly random switching times; endpoints are binned into the
/// incidence lattice of edge `h`.
pub fn mc_ball(model: &ModelFamily, z0: &ZPoint, delta1: f64, delta2: f64, h: f64, params: &McParams) -> Result<McBall> {
    if params.paths < 1000 {
        return Err(BallError::InvalidParameters(format!("mc_ball needs >= 1000 paths, got {}", params.paths)));
    }
    if params.steps == 0 || params.segments == 0 {
        return Err(BallError::InvalidParameters("steps and segments must be >= 1".into()));
    }
    if !model.contains(z0) {
        return Err(GeometryError::OutsideDomain { point: z0.coords() }.into());
    }
    sample_endpoints(model, z0, (delta1, delta2), h, params, |rng, d1, d2| {
        (rng.gen_range(-d1..=d1), rng.gen_range(-d2..=d2))
    })
}

pub(crate) fn sample_endpoints<F>(
    model: &ModelFamily,
    z0: &ZPoint,
    deltas: (f64, f64),
    h: f64,
    params: &McParams,
    draw: F,
) -> Result<McBall>
where
    F: Fn(&mut ChaCha8Rng, f64, f64) -> (f64, f64) + Sync,
{
    let n = model.dim();
    let lattice = Lattice::incidence(model.d(), h);
    let z = z0.coords();
    let chunks = params.paths.div_ceil(MC_CHUNK);
    let per_chunk: Vec<(Vec<CellIndex>, Vec<f64>, usize)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(chunk as u64);
            let count = MC_CHUNK.min(params.paths - chunk * MC_CHUNK);
            let mut cells = Vec::with_capacity(count);
            let mut ends = Vec::new();
            let mut escaped = 0;
            let mut cuts = vec![0.0; params.segments + 1];
            for _ in 0..count {
                cuts[0] = 0.0;
                cuts[params.segments] = 1.0;
                for c in cuts.iter_mut().take(params.segments).skip(1) {
                    *c = rng.gen::<f64>();
                }
                cuts[1..params.segments].sort_by(f64::total_cmp);
                let mut state = [0.0; MAX_DIM];
                state[..n].copy_from_slice(&z);
                let mut ok = true;
                for s in 0..params.segments {
                    let dur = cuts[s + 1] - cuts[s];
                    let (a1, a2) = draw(&mut rng, deltas.0, deltas.1);
                    if dur <= 0.0 {
                        continue;
                    }
                    let steps = (dur * params.steps as f64).ceil().max(1.0) as usize;
                    if model.flow_in_place(&mut state[..n], a1, a2, dur, steps).is_err() {
                        ok = false;
                        break;
                    }
                }
                if !ok {
                    escaped += 1;
                    continue;
                }
                cells.push(lattice.cell_of(&state[..n]));
                if params.keep_endpoints {
                    ends.extend_from_slice(&state[..n]);
                }
            }
            (cells, ends, escaped)
        })
        .collect();
    let mut set = LatticeSet::new(lattice);
    let mut endpoints = Vec::new();
    let mut escaped = 0;
    for (cells, ends, esc) in per_chunk {
        for c in cells {
            set.insert(c);
        }
        endpoints.extend(ends);
        escaped += esc;
    }
    Ok(McBall {
        paths: params.paths,
        steps: params.steps,
        segments: params.segments,
        seed: params.seed,
        escaped,
        cell_count: set.len(),
        volume: set.measure(),
        cells: Some(set),
        endpoints,
    })
}

/// The five comparison ratios of the ball lemma.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaRatios {
    /// `|B(2d1, 2d2)| / |B(d1, d2)|`
    pub doubling: f64,
    /// `|B| / (|pi1 B| d1)`
    pub fibre1: f64,
    /// `|B| / (|pi2 B| d2)`
    pub fibre2: f64,
    /// `|Pi pi2 B| / d1`
    pub pi_extent: f64,
    /// `||chi_{pi2 B}||_{q',r'} / (|B|^(1-1/r) d1^(1/r-1/q) d2^(1/r-1))`
    pub mixed_norm: f64,
    /// left side of the testing quotient over `|B|^(1/r-1/p) d1^(1/p+1/q-1/r) d2^(1-1/r)`
    pub testing_quotient: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaReport {
    pub center: ZPoint,
    pub delta1: f64,
    pub delta2: f64,
    pub h: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub ball: BallEstimate,
    pub doubled: BallEstimate,
    pub ratios: LemmaRatios,
}

fn recip(e: f64) -> f64 {
    if e.is_infinite() {
        0.0
    } else {
        1.0 / e
    }
}

/// Evaluates the five ball-lemma ratios at `(z0, delta1, delta2)`.
pub fn lemma_balls_report(
    model: &ModelFamily,
    z0: &ZPoint,
    params: &BallParams,
    p: f64,
    q: f64,
    r: f64,
) -> Result<LemmaReport> {
    for (name, e) in [("p", p), ("q", q), ("r", r)] {
        if !(e >= 1.0) {
            return Err(BallError::InvalidParameters(format!("{name} must lie in [1, inf], got {e}")));
        }
    }
    let ball = reach_ball(model, z0, params)?;
    let doubled_params = BallParams { delta1: 2.0 * params.delta1, delta2: 2.0 * params.delta2, ..*params };
    let doubled = reach_ball(model, z0, &doubled_params)?;
    lemma_ratios_from(ball, doubled, p, q, r)
}

/// Ratios from precomputed balls `B(d1, d2)` and `B(2 d1, 2 d2)` on the same lattice.
pub fn lemma_ratios_from(ball: BallEstimate, doubled: BallEstimate, p: f64, q: f64, r: f64) -> Result<LemmaReport> {
    let p1 = ball.proj1_cells();
    let p2 = ball.proj2_cells();
    let pi_bins = p2.axis_indices(0).len();
    if p1.len() < MIN_PROJECTED_CELLS || p2.len() < MIN_PROJECTED_CELLS || pi_bins < MIN_PROJECTED_CELLS {
        return Err(BallError::Resolution(format!(
            "projections too small: |pi1 B| = {} cells, |pi2 B| = {} cells, |Pi pi2 B| = {} cells",
            p1.len(),
            p2.len(),
            pi_bins
        )));
    }
    let (d1, d2) = (ball.delta1, ball.delta2);
    let vol = ball.volume;
    let (ip, iq, ir) = (recip(p), recip(q), recip(r));
    let exps = MixedExponents::new(q, r).conjugates();
    let norm = mixednorm::indicator_norm(p2, exps.q, exps.r);
    let iv_scale = vol.powf(1.0 - ir) * d1.powf(ir - iq) * d2.powf(ir - 1.0);
    let quotient = vol / (ball.proj1.powf(ip) * norm);
    let v_scale = vol.powf(ir - ip) * d1.powf(ip + iq - ir) * d2.powf(1.0 - ir);
    let ratios = LemmaRatios {
        doubling: doubled.volume / vol,
        fibre1: vol / (ball.proj1 * d1),
        fibre2: vol / (ball.proj2 * d2),
        pi_extent: ball.pi_extent / d1,
        mixed_norm: norm / iv_scale,
        testing_quotient: quotient / v_scale,
    };
    Ok(LemmaReport {
        center: ball.center.clone(),
        delta1: d1,
        delta2: d2,
        h: ball.h,
        p,
        q,
        r,
        ball,
        doubled,
        ratios,
    })
}

/// Cell edge adapted to the thinnest direction of the ball: the smallest
/// weight among the brackets that complete a basis at `z0`, divided by
/// `cells_across`, capped by the `min(delta)/4` guard.
pub fn bracket_scale_h(model: &ModelFamily, z0: &ZPoint, delta1: f64, delta2: f64, cells_across: f64) -> Result<f64> {
    let basis = crate::geometry::weighted_bracket_basis(model, z0, delta1, delta2, crate::geometry::MAX_DEGREE + 1)?
        .ok_or_else(|| BallError::Resolution("bracket condition fails at the ball centre".into()))?;
    let thinnest = basis.iter().map(|(_, w)| *w).fold(f64::INFINITY, f64::min);
    Ok((thinnest / cells_across).min(delta1.min(delta2) / RESOLUTION_FACTOR))
}

/// [`bracket_scale_h`] rounded down to a power of two.
pub fn adaptive_h(model: &ModelFamily, z0: &ZPoint, delta1: f64, delta2: f64, cells_across: f64) -> Result<f64> {
    let target = bracket_scale_h(model, z0, delta1, delta2, cells_across)?;
    Ok(2f64.powi(target.log2().floor() as i32))
}
