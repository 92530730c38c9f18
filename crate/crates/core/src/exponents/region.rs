//! Empirical exponent region: decay rates of `|B| / (d1^c1 d2^c2)` along
//! weakly comparable radius sequences.
//!
//! Each sequence fixes a window `(theta, A)`, an orientation and a centre, and
//! runs over generator radii `delta`, with `(d1, d2) = (delta, A delta^theta)`
//! or the swapped pair. For a node `(c1, c2)` the decay rate of a sequence is
//! the least-squares slope of `log2(|B| / d1^c1 d2^c2)` against `log2 delta`;
//! a positive rate means the ratio shrinks as the radii shrink. Since `log2 d_i`
//! is affine in `log2 delta`, the rate is affine in `(c1, c2)` and is stored
//! as three slopes per sequence.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{c_from_pqr, BallExponents, ExponentError, ExponentTriple};
use crate::ccball::{self, BallError, BallParams, ComparabilityWindow, MAX_DELTA};
use crate::geometry::{ModelFamily, ZPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionClass {
    Inside,
    Boundary,
    Outside,
    Inconclusive,
}

impl RegionClass {
    pub fn label(&self) -> &'static str {
        match self {
            RegionClass::Inside => "inside",
            RegionClass::Boundary => "boundary",
            RegionClass::Outside => "outside",
            RegionClass::Inconclusive => "inconclusive",
        }
    }
}

/// How the cell edge is chosen for each ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum HRule {
    Fixed { h: f64 },
    /// [`ccball::bracket_scale_h`] without rounding, so the number of cells
    /// across the thinnest direction is the same at every radius.
    BracketScale { cells_across: f64 },
}

impl HRule {
    fn resolve(&self, model: &ModelFamily, z: &ZPoint, d1: f64, d2: f64) -> ccball::Result<f64> {
        match *self {
            HRule::Fixed { h } => Ok(h),
            HRule::BracketScale { cells_across } => ccball::bracket_scale_h(model, z, d1, d2, cells_across),
        }
    }
}

/// A window together with the generator radii sampled in it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionWindow {
    pub theta: f64,
    pub a: f64,
    pub deltas: Vec<f64>,
}

impl RegionWindow {
    pub fn new(theta: f64, a: f64, deltas: Vec<f64>) -> Self {
        RegionWindow { theta, a, deltas }
    }

    /// Radius pairs of one orientation.
    pub fn pairs(&self, swapped: bool) -> Vec<(f64, f64)> {
        self.deltas
            .iter()
            .map(|&d| {
                let other = self.a * d.powf(self.theta);
                if swapped {
                    (other, d)
                } else {
                    (d, other)
                }
            })
            .collect()
    }

    fn orientations(&self) -> Vec<bool> {
        if self.theta == 1.0 && self.a == 1.0 {
            vec![false]
        } else {
            vec![false, true]
        }
    }
}

/// Uniform grid `lo, lo + step, ..., hi` used on both `c` axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl CGrid {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as i64;
        (0..=n).map(|k| self.lo + k as f64 * self.step).collect()
    }
}

impl Default for CGrid {
    fn default() -> Self {
        CGrid { lo: 1.0, hi: 3.0, step: 0.25 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Decay rates within `flat` of zero are a flat trend (the edge of the region).
    pub flat: f64,
    /// Decay rates at least this large count as halving per halving of `delta`.
    pub outside: f64,
    /// Inside nodes need every sampled ratio above this.
    pub rho0: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { flat: 0.15, outside: 0.7, rho0: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionConfig {
    pub windows: Vec<RegionWindow>,
    pub z_samples: Vec<ZPoint>,
    pub h: HRule,
    pub c_grid: CGrid,
    pub tolerances: Tolerances,
}

impl RegionConfig {
    /// Windows `theta = 1, 0.75, 0.5` with `A = 1`, each sampled where its
    /// sequences have settled into their asymptotic slope; centres at the
    /// origin and two interior points; two cells across the thinnest direction.
    pub fn standard(d: usize) -> Self {
        let dyadic = |lo: i32, hi: i32| (lo..=hi).map(|j| 2f64.powi(-j)).collect::<Vec<_>>();
        let mut a = ZPoint::origin(d);
        a.x = vec![0.25; d];
        a.t = -0.25;
        let mut b = ZPoint::origin(d);
        b.x = vec![-0.25; d];
        b.t = 0.25;
        RegionConfig {
            windows: vec![
                RegionWindow::new(1.0, 1.0, dyadic(4, 7)),
                RegionWindow::new(0.75, 1.0, dyadic(6, 9)),
                RegionWindow::new(0.5, 1.0, dyadic(5, 8)),
            ],
            z_samples: vec![ZPoint::origin(d), a, b],
            h: HRule::BracketScale { cells_across: 2.0 },
            c_grid: CGrid::default(),
            tolerances: Tolerances::default(),
        }
    }

    fn validate(&self, model: &ModelFamily) -> ccball::Result<()> {
        if self.windows.is_empty() || self.z_samples.is_empty() {
            return Err(BallError::InvalidParameters("need at least one window and one centre".into()));
        }
        if !(self.c_grid.step > 0.0 && self.c_grid.hi >= self.c_grid.lo) {
            return Err(BallError::InvalidParameters(format!("bad c grid {:?}", self.c_grid)));
        }
        for w in &self.windows {
            let cw = ComparabilityWindow::new(w.theta, w.a)?;
            if w.deltas.len() < 2 {
                return Err(BallError::InvalidParameters(format!("window theta = {} needs two radii", w.theta)));
            }
            for swapped in w.orientations() {
                for (d1, d2) in w.pairs(swapped) {
                    if !cw.comparable(d1, d2) {
                        return Err(BallError::InvalidParameters(format!(
                            "({d1}, {d2}) is not ({}, {})-comparable",
                            w.theta, w.a
                        )));
                    }
                    if d1 > MAX_DELTA || d2 > MAX_DELTA {
                        return Err(BallError::InvalidParameters(format!("radius pair ({d1}, {d2}) exceeds {MAX_DELTA}")));
                    }
                }
            }
        }
        for z in &self.z_samples {
            if z.x.len() != model.d() || !model.contains(z) {
                return Err(BallError::InvalidParameters(format!("centre {z:?} is not in the chart")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSample {
    pub delta1: f64,
    pub delta2: f64,
    pub h: f64,
    pub volume: f64,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sequence {
    pub theta: f64,
    pub a: f64,
    pub swapped: bool,
    pub z: usize,
    pub samples: Vec<RegionSample>,
    /// Slopes of `log2 |B|`, `log2 d1`, `log2 d2` against `log2 delta`.
    pub volume_slope: f64,
    pub slope1: f64,
    pub slope2: f64,
}

impl Sequence {
    pub fn decay(&self, c1: f64, c2: f64) -> f64 {
        self.volume_slope - c1 * self.slope1 - c2 * self.slope2
    }

    pub fn ratios(&self, c1: f64, c2: f64) -> Vec<f64> {
        self.samples.iter().map(|s| s.volume / (s.delta1.powf(c1) * s.delta2.powf(c2))).collect()
    }

    /// The smallest radii give the strictly smallest ratio.
    fn min_at_smallest(&self, c1: f64, c2: f64) -> bool {
        let r = self.ratios(c1, c2);
        let last = *r.last().expect("nonempty sequence");
        r[..r.len() - 1].iter().all(|&v| v > last)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionNode {
    pub c1: f64,
    pub c2: f64,
    pub min_ratio: f64,
    /// Largest decay rate over all sequences.
    pub decay: f64,
    pub class: RegionClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionEstimate {
    pub model: String,
    pub config: RegionConfig,
    pub sequences: Vec<Sequence>,
    /// Largest ratio of volumes at equal radii and different centres.
    pub z_spread: f64,
    pub nodes: Vec<RegionNode>,
}

fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Least-squares slope of `log2 y` against `log2 x`.
pub fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.log2()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.log2()).collect();
    ls_slope(&lx, &ly)
}

struct Job {
    seq: usize,
    z: usize,
    d1: f64,
    d2: f64,
}

pub fn estimate_region(model: &ModelFamily, config: &RegionConfig) -> ccball::Result<RegionEstimate> {
    config.validate(model)?;
    let mut skeleton = Vec::new();
    let mut jobs = Vec::new();
    for w in &config.windows {
        for swapped in w.orientations() {
            for (zi, _) in config.z_samples.iter().enumerate() {
                let seq = skeleton.len();
                skeleton.push((w.clone(), swapped, zi));
                for (d1, d2) in w.pairs(swapped) {
                    jobs.push(Job { seq, z: zi, d1, d2 });
                }
            }
        }
    }
    let results: Vec<ccball::Result<RegionSample>> = jobs
        .par_iter()
        .map(|job| {
            let z = &config.z_samples[job.z];
            let h = config.h.resolve(model, z, job.d1, job.d2)?;
            let ball = ccball::reach_ball(model, z, &BallParams::new(job.d1, job.d2, h))?;
            Ok(RegionSample { delta1: job.d1, delta2: job.d2, h, volume: ball.volume, truncated: ball.truncated })
        })
        .collect();

    let mut per_seq: Vec<Vec<RegionSample>> = vec![Vec::new(); skeleton.len()];
    for (job, res) in jobs.iter().zip(results) {
        per_seq[job.seq].push(res?);
    }
    let sequences: Vec<Sequence> = skeleton
        .into_iter()
        .zip(per_seq)
        .map(|((w, swapped, z), samples)| {
            let gen = &w.deltas;
            let v: Vec<f64> = samples.iter().map(|s| s.volume).collect();
            let d1: Vec<f64> = samples.iter().map(|s| s.delta1).collect();
            let d2: Vec<f64> = samples.iter().map(|s| s.delta2).collect();
            Sequence {
                theta: w.theta,
                a: w.a,
                swapped,
                z,
                volume_slope: log_slope(gen, &v),
                slope1: log_slope(gen, &d1),
                slope2: log_slope(gen, &d2),
                samples,
            }
        })
        .collect();

    let z_spread = z_spread(&sequences);
    let mut est = RegionEstimate { model: model.name().unwrap_or("custom").to_string(), config: config.clone(), sequences, z_spread, nodes: Vec::new() };
    let grid = config.c_grid.values();
    let mut nodes = Vec::with_capacity(grid.len() * grid.len());
    for &c1 in &grid {
        for &c2 in &grid {
            nodes.push(RegionNode { c1, c2, min_ratio: est.min_ratio(c1, c2), decay: est.decay(c1, c2), class: est.classify_c(c1, c2) });
        }
    }
    est.nodes = nodes;
    Ok(est)
}

fn z_spread(sequences: &[Sequence]) -> f64 {
    let mut spread: f64 = 1.0;
    for a in sequences {
        for b in sequences {
            if a.z < b.z && a.theta == b.theta && a.a == b.a && a.swapped == b.swapped {
                for (sa, sb) in a.samples.iter().zip(&b.samples) {
                    spread = spread.max(sa.volume / sb.volume).max(sb.volume / sa.volume);
                }
            }
        }
    }
    spread
}

impl RegionEstimate {
    pub fn decay(&self, c1: f64, c2: f64) -> f64 {
        self.sequences.iter().map(|s| s.decay(c1, c2)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_ratio(&self, c1: f64, c2: f64) -> f64 {
        self.sequences.iter().flat_map(|s| s.ratios(c1, c2)).fold(f64::INFINITY, f64::min)
    }

    /// Classifies any `(c1, c2)`, not only grid nodes.
    pub fn classify_c(&self, c1: f64, c2: f64) -> RegionClass {
        let tol = &self.config.tolerances;
        let e = self.decay(c1, c2);
        if e >= tol.outside {
            RegionClass::Outside
        } else if e <= -tol.flat {
            let floor_ok = self.min_ratio(c1, c2) > tol.rho0;
            let no_trend = self.sequences.iter().all(|s| !s.min_at_smallest(c1, c2));
            if floor_ok && no_trend {
                RegionClass::Inside
            } else {
                RegionClass::Inconclusive
            }
        } else if e.abs() < tol.flat {
            RegionClass::Boundary
        } else {
            RegionClass::Inconclusive
        }
    }

    pub fn node(&self, c1: f64, c2: f64) -> Option<&RegionNode> {
        self.nodes.iter().find(|n| (n.c1 - c1).abs() < 1e-9 && (n.c2 - c2).abs() < 1e-9)
    }

    /// Rows `(c1, c2, min_ratio, decay, class)` for plotting.
    pub fn rows(&self) -> Vec<(f64, f64, f64, f64, &'static str)> {
        self.nodes.iter().map(|n| (n.c1, n.c2, n.min_ratio, n.decay, n.class.label())).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TripleClass {
    Interior,
    Boundary,
    Outside,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleVerdict {
    pub triple: ExponentTriple,
    pub c: BallExponents,
    pub margin: f64,
    pub centre: RegionClass,
    pub centre_decay: f64,
    /// Classes of the eight points at distance `margin` around `c`.
    pub ring: Vec<(f64, f64, RegionClass)>,
    pub class: TripleClass,
}

pub fn classify_triple(triple: &ExponentTriple, region: &RegionEstimate, margin: f64) -> Result<TripleVerdict, ExponentError> {
    triple.check_ordering()?;
    let c = c_from_pqr(triple)?;
    let (c1, c2) = c.as_f64();
    let centre = region.classify_c(c1, c2);
    let ring: Vec<(f64, f64, RegionClass)> = if margin > 0.0 {
        (0..8)
            .map(|k| {
                let a = k as f64 * PI / 4.0;
                let (x, y) = (c1 + margin * a.cos(), c2 + margin * a.sin());
                (x, y, region.classify_c(x, y))
            })
            .collect()
    } else {
        Vec::new()
    };
    let class = match centre {
        RegionClass::Inside if ring.iter().all(|r| r.2 == RegionClass::Inside) => TripleClass::Interior,
        RegionClass::Inside | RegionClass::Boundary => TripleClass::Boundary,
        RegionClass::Outside => TripleClass::Outside,
        RegionClass::Inconclusive => TripleClass::Inconclusive,
    };
    Ok(TripleVerdict { triple: *triple, c, margin, centre, centre_decay: region.decay(c1, c2), ring, class })
}
