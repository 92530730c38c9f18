//! One runner per experiment kind. Each returns the resolved parameters, the
//! result record, its named assertions and an optional CSV series.

use std::collections::BTreeMap;

use radonlab::calibration::{self, Band};
use radonlab::ccball::{self, BallParams, McParams, DEFAULT_TAU};
use radonlab::decomp::{self, DenseBallConfig};
use radonlab::exponents::{
    self, classify_triple, CGrid, ExponentTriple, HRule, RegionClass, RegionConfig, RegionEstimate, RegionWindow,
    Tolerances,
};
use radonlab::geometry::{ModelFamily, ZPoint};
use radonlab::lattice::LatticeSet;
use radonlab::radon;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::scenario::{HSpec, Scenario, SetSpec};
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Assertion {
    Assertion { name: name.into(), passed, detail: detail.into() }
}

#[derive(Debug, Clone, Default)]
pub struct Series {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

pub struct Outcome {
    pub parameters: Value,
    pub result: Value,
    pub assertions: Vec<Assertion>,
    pub series: Option<Series>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn parse_triple(s: &str, path: &str) -> Result<ExponentTriple, CliError> {
    ExponentTriple::parse(s).map_err(|e| CliError::Usage(format!("{path}: {e}")))
}

fn triple_f64(t: &ExponentTriple) -> (f64, f64, f64) {
    t.as_f64()
}

fn center_or_origin(model: &ModelFamily, c: Option<ZPoint>, path: &str) -> Result<ZPoint, CliError> {
    let z = c.unwrap_or_else(|| ZPoint::origin(model.d()));
    if z.x.len() != model.d() {
        return Err(CliError::Usage(format!("{path}: expected {} x coordinates", model.d())));
    }
    Ok(z)
}

fn require_seed(sc: &Scenario) -> Result<u64, CliError> {
    sc.seed.ok_or_else(|| CliError::Usage("seed: this experiment is stochastic and needs a seed".into()))
}

// ---------------------------------------------------------------- ball

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McInput {
    pub paths: usize,
    pub steps: Option<usize>,
    pub segments: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallInput {
    pub center: Option<ZPoint>,
    pub delta1: f64,
    pub delta2: f64,
    pub h: f64,
    pub tau: Option<f64>,
    pub slab_c: Option<f64>,
    pub mc: Option<McInput>,
}

pub fn ball(sc: &Scenario) -> Result<Outcome, CliError> {
    let input: BallInput = sc.params()?;
    let model = &sc.model;
    let center = center_or_origin(model, input.center, "parameters.center")?;
    let params = BallParams { tau: input.tau.unwrap_or(DEFAULT_TAU), ..BallParams::new(input.delta1, input.delta2, input.h) };
    let slab_c = input.slab_c.unwrap_or(calibration::SLAB_C);
    let mc = match &input.mc {
        Some(m) => {
            let mut p = McParams::new(m.paths, m.steps.unwrap_or(32), require_seed(sc)?);
            if let Some(s) = m.segments {
                p.segments = s;
            }
            Some(p)
        }
        None => None,
    };
    let parameters = json!({
        "center": center, "delta1": params.delta1, "delta2": params.delta2, "h": params.h,
        "tau": params.tau, "slab_c": slab_c, "mc": mc,
    });

    let b = ccball::reach_ball(model, &center, &params)?;
    let slab_sum: f64 = b.slab.iter().map(|(_, f)| f * b.h).sum();
    let slab_max = b.slab.iter().map(|(_, f)| *f).fold(0.0, f64::max);
    let cell = b.h.powi(model.dim() as i32);
    let mut assertions = vec![
        check(
            "slab_mass",
            (slab_sum - b.volume).abs() <= 2.0 * cell,
            format!("sum f h = {slab_sum}, |B| = {}", b.volume),
        ),
        check(
            "slab_bound",
            slab_max * b.delta1 <= slab_c * b.volume,
            format!("max f delta1 / |B| = {} (limit {slab_c})", slab_max * b.delta1 / b.volume),
        ),
    ];
    let mut mc_value = Value::Null;
    if let Some(p) = &mc {
        let m = ccball::mc_ball(model, &center, params.delta1, params.delta2, params.h, p)?;
        let ratio = b.volume / m.volume;
        assertions.push(check(
            "mc_agreement",
            (0.25..=4.0).contains(&ratio),
            format!("|B| / |B_mc| = {ratio}"),
        ));
        mc_value = json!({ "volume": m.volume, "cell_count": m.cell_count, "escaped": m.escaped, "ratio": ratio });
    }
    let result = json!({
        "center": b.center, "delta1": b.delta1, "delta2": b.delta2, "h": b.h,
        "volume": b.volume, "cell_count": b.cell_count, "proj1": b.proj1, "proj2": b.proj2,
        "pi_extent": b.pi_extent, "truncated": b.truncated,
        "ratios": {
            "fibre1": b.volume / (b.proj1 * b.delta1),
            "fibre2": b.volume / (b.proj2 * b.delta2),
            "pi_extent": b.c_geom,
            "slab_max": slab_max * b.delta1 / b.volume,
        },
        "mc": mc_value,
    });
    let series = Series {
        header: vec!["t", "f"],
        rows: b.slab.iter().map(|(t, f)| vec![num(*t), num(*f)]).collect(),
    };
    Ok(Outcome { parameters, result, assertions, series: Some(series) })
}

// ---------------------------------------------------------------- lemma

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaInput {
    pub center: Option<ZPoint>,
    /// `[delta1, delta2]` pairs; the calibration grid when absent.
    pub pairs: Option<Vec<[f64; 2]>>,
    pub h: HSpec,
    #[serde(default = "yes")]
    pub refine: bool,
    pub triple: Option<String>,
}

fn yes() -> bool {
    true
}

pub fn lemma(sc: &Scenario) -> Result<Outcome, CliError> {
    let input: LemmaInput = sc.params()?;
    let model = &sc.model;
    let center = center_or_origin(model, input.center, "parameters.center")?;
    let pairs: Vec<[f64; 2]> = input
        .pairs
        .unwrap_or_else(|| calibration::lemma_grid().into_iter().map(|(_, a, b)| [a, b]).collect());
    let triple = match &input.triple {
        Some(s) => parse_triple(s, "parameters.triple")?,
        None => parse_triple("5/3,3,3", "parameters.triple")?,
    };
    let (p, q, r) = triple_f64(&triple);
    let bands: BTreeMap<&str, Band> = [
        ("doubling", calibration::DOUBLING),
        ("fibre", calibration::FIBRE),
        ("pi_extent", calibration::PI_EXTENT),
        ("mixed_norm", calibration::MIXED_NORM),
        ("testing_quotient", calibration::TESTING_QUOTIENT),
    ]
    .into_iter()
    .collect();
    let parameters = json!({
        "center": center, "pairs": pairs, "h": input.h, "refine": input.refine, "triple": triple,
        "bands": bands, "slab_c": calibration::SLAB_C,
    });

    let mut jobs = Vec::new();
    for &[d1, d2] in &pairs {
        let h = input.h.resolve(model, &center, d1, d2)?;
        jobs.push((d1, d2, h));
        if input.refine {
            jobs.push((d1, d2, h / 2.0));
        }
    }
    let reports = jobs
        .iter()
        .map(|&(d1, d2, h)| ccball::lemma_balls_report(model, &center, &BallParams::new(d1, d2, h), p, q, r))
        .collect::<Result<Vec<_>, _>>()?;

    let mut assertions = Vec::new();
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for rep in &reports {
        let slab_max = rep.ball.slab.iter().map(|(_, f)| *f).fold(0.0, f64::max);
        let slab = slab_max * rep.delta1 / rep.ball.volume;
        let tag = format!("d1={} d2={} h={}", rep.delta1, rep.delta2, rep.h);
        for (name, v, band) in calibration::ratio_bands(&rep.ratios) {
            assertions.push(check(format!("{name} [{tag}]"), band.contains(v), format!("{v} in [{}, {}]", band.lo, band.hi)));
        }
        assertions.push(check(format!("slab [{tag}]"), slab <= calibration::SLAB_C, format!("{slab} <= {}", calibration::SLAB_C)));
        let r = &rep.ratios;
        rows.push(vec![
            num(rep.delta1),
            num(rep.delta2),
            num(rep.h),
            num(r.doubling),
            num(r.fibre1),
            num(r.fibre2),
            num(r.pi_extent),
            num(r.mixed_norm),
            num(r.testing_quotient),
            num(slab),
        ]);
        records.push(json!({
            "center": rep.center, "delta1": rep.delta1, "delta2": rep.delta2, "h": rep.h,
            "volume": rep.ball.volume, "proj1": rep.ball.proj1, "proj2": rep.ball.proj2,
            "pi_extent": rep.ball.pi_extent, "doubled_volume": rep.doubled.volume,
            "ratios": rep.ratios, "slab_max": slab,
        }));
    }
    let series = Series {
        header: vec!["delta1", "delta2", "h", "doubling", "fibre1", "fibre2", "pi_extent", "mixed_norm", "testing_quotient", "slab_max"],
        rows,
    };
    Ok(Outcome { parameters, result: json!({ "balls": records }), assertions, series: Some(series) })
}

// ---------------------------------------------------------------- region

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionInput {
    pub windows: Option<Vec<RegionWindow>>,
    pub z_samples: Option<Vec<ZPoint>>,
    pub h: Option<HRule>,
    pub c_grid: Option<CGrid>,
    pub tolerances: Option<Tolerances>,
}

impl RegionInput {
    fn resolve(self, model: &ModelFamily) -> RegionConfig {
        let mut c = RegionConfig::standard(model.d());
        if let Some(w) = self.windows {
            c.windows = w;
        }
        if let Some(z) = self.z_samples {
            c.z_samples = z;
        }
        if let Some(h) = self.h {
            c.h = h;
        }
        if let Some(g) = self.c_grid {
            c.c_grid = g;
        }
        if let Some(t) = self.tolerances {
            c.tolerances = t;
        }
        c
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeExpectation {
    pub c1: f64,
    pub c2: f64,
    /// Any of these classes is accepted.
    pub class: Vec<RegionClass>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionScenario {
    #[serde(default)]
    pub region: RegionInput,
    #[serde(default)]
    pub expect: Vec<NodeExpectation>,
}

fn region_series(est: &RegionEstimate) -> Series {
    Series {
        header: vec!["c1", "c2", "min_ratio", "decay", "class"],
        rows: est
            .rows()
            .into_iter()
            .map(|(c1, c2, m, d, class)| vec![num(c1), num(c2), num(m), num(d), class.to_string()])
            .collect(),
    }
}

fn region_summary(est: &RegionEstimate) -> Value {
    json!({
        "model": est.model,
        "z_spread": est.z_spread,
        "sequences": est.sequences,
        "nodes": est.nodes,
    })
}

pub fn region(sc: &Scenario) -> Result<Outcome, CliError> {
    let input: RegionScenario = sc.params()?;
    let config = input.region.resolve(&sc.model);
    let parameters = json!({ "region": config, "expect": input.expect });
    let est = exponents::estimate_region(&sc.model, &config)?;
    let assertions = input
        .expect
        .iter()
        .map(|e| {
            let got = est.classify_c(e.c1, e.c2);
            check(
                format!("node ({}, {})", e.c1, e.c2),
                e.class.contains(&got),
                format!("{} (decay {:.4})", got.label(), est.decay(e.c1, e.c2)),
            )
        })
        .collect();
    Ok(Outcome { parameters, result: region_summary(&est), assertions, series: Some(region_series(&est)) })
}

// ---------------------------------------------------------------- classify

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyInput {
    #[serde(default)]
    pub region: RegionInput,
    pub triples: Vec<String>,
    pub margin: f64,
    /// Expected class per triple: `interior`, `boundary`, `outside`,
    /// `inconclusive` or `ordering_error`.
    #[serde(default)]
    pub expect: BTreeMap<String, String>,
}

pub fn classify(sc: &Scenario) -> Result<Outcome, CliError> {
    let input: ClassifyInput = sc.params()?;
    let config = input.region.resolve(&sc.model);
    let parameters = json!({
        "region": config, "triples": input.triples, "margin": input.margin, "expect": input.expect,
    });
    let triples = input
        .triples
        .iter()
        .enumerate()
        .map(|(i, s)| parse_triple(s, &format!("parameters.triples[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    for key in input.expect.keys() {
        if !input.triples.contains(key) {
            return Err(CliError::Usage(format!("parameters.expect: `{key}` is not among the triples")));
        }
    }
    let est = exponents::estimate_region(&sc.model, &config)?;
    let mut verdicts = Vec::new();
    let mut assertions = Vec::new();
    for (text, t) in input.triples.iter().zip(&triples) {
        let (label, record) = match classify_triple(t, &est, input.margin) {
            Ok(v) => (to_value(&v.class).as_str().unwrap_or_default().to_string(), to_value(&v)),
            Err(exponents::ExponentError::Ordering(msg)) => {
                ("ordering_error".to_string(), json!({ "triple": t, "class": "ordering_error", "error": msg }))
            }
            Err(e) => return Err(CliError::Usage(format!("parameters.triples: {e}"))),
        };
        if let Some(want) = input.expect.get(text) {
            assertions.push(check(format!("triple ({text})"), *want == label, format!("got {label}, expected {want}")));
        }
        verdicts.push(record);
    }
    Ok(Outcome {
        parameters,
        result: json!({ "verdicts": verdicts, "region": region_summary(&est) }),
        assertions,
        series: Some(region_series(&est)),
    })
}

// ---------------------------------------------------------------- test-inequality

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetPair {
    pub e: SetSpec,
    pub f: SetSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Bounded,
    Unbounded,
    Inconclusive,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestInput {
    pub triple: String,
    pub h: HSpec,
    pub center: Option<ZPoint>,
    /// Ball pairs `E = pi1(B)`, `F = pi2(B)` at `delta2 = delta1^theta`.
    #[serde(default)]
    pub delta_grid: Vec<f64>,
    pub theta: Option<f64>,
    /// Explicit `(E, F)` pairs on the lattice of edge `h`.
    #[serde(default)]
    pub sets: Vec<SetPair>,
    pub bound: Option<f64>,
    /// Smallest mean growth per halving of `delta1` that counts as unbounded.
    pub growth: Option<f64>,
    pub expect: Option<Verdict>,
}

pub fn test_inequality(sc: &Scenario) -> Result<Outcome, CliError> {
    let input: TestInput = sc.params()?;
    let model = &sc.model;
    let triple = parse_triple(&input.triple, "parameters.triple")?;
    let (p, q, r) = triple_f64(&triple);
    let center = center_or_origin(model, input.center, "parameters.center")?;
    let theta = input.theta.unwrap_or(1.0);
    let bound = input.bound.unwrap_or(calibration::RWT_INTERIOR);
    let growth_min = input.growth.unwrap_or(1.5);
    if input.delta_grid.is_empty() && input.sets.is_empty() {
        return Err(CliError::Usage("parameters: give a delta_grid or explicit sets".into()));
    }
    if !input.sets.is_empty() && !matches!(input.h, HSpec::Fixed(_)) {
        return Err(CliError::Usage("parameters.h: explicit sets need a fixed cell edge".into()));
    }
    let parameters = json!({
        "triple": triple, "h": input.h, "center": center, "delta_grid": input.delta_grid, "theta": theta,
        "sets": input.sets, "bound": bound, "growth": growth_min, "expect": input.expect,
    });

    let mut rows = Vec::new();
    let mut ball_ratios = Vec::new();
    for &d1 in &input.delta_grid {
        let d2 = d1.powf(theta);
        let h = input.h.resolve(model, &center, d1, d2)?;
        let b = ccball::reach_ball(model, &center, &BallParams::new(d1, d2, h))?;
        let v = radon::rwt_ratio(model, b.proj1_cells(), b.proj2_cells(), p, q, r)?;
        rows.push(vec![num(d1), num(d2), num(h), num(v)]);
        ball_ratios.push(v);
    }
    let mut set_ratios = Vec::new();
    if let HSpec::Fixed(h) = input.h {
        for (i, pair) in input.sets.iter().enumerate() {
            let e = pair.e.build(model.d(), h, &format!("parameters.sets[{i}].e"))?;
            let f = pair.f.build(model.d(), h, &format!("parameters.sets[{i}].f"))?;
            set_ratios.push(radon::rwt_ratio(model, &e, &f, p, q, r)?);
        }
    }

    let growths: Vec<f64> = ball_ratios.windows(2).map(|w| w[1] / w[0]).collect();
    let mean_growth = if growths.is_empty() {
        None
    } else {
        Some((growths.iter().map(|g| g.ln()).sum::<f64>() / growths.len() as f64).exp())
    };
    let all: Vec<f64> = ball_ratios.iter().chain(&set_ratios).copied().collect();
    let max = all.iter().copied().fold(0.0, f64::max);
    let verdict = match mean_growth {
        Some(g) if g >= growth_min => Verdict::Unbounded,
        _ if max <= bound => Verdict::Bounded,
        _ => Verdict::Inconclusive,
    };
    let mut assertions = Vec::new();
    if let Some(want) = input.expect {
        assertions.push(check("verdict", want == verdict, format!("{verdict:?} (max ratio {max}, mean growth {mean_growth:?})")));
    }
    let result = json!({
        "triple": triple, "delta_grid": input.delta_grid, "ratios": ball_ratios, "set_ratios": set_ratios,
        "growth": growths, "mean_growth": mean_growth, "max_ratio": max, "verdict": verdict,
    });
    Ok(Outcome {
        parameters,
        result,
        assertions,
        series: Some(Series { header: vec!["delta1", "delta2", "h", "ratio"], rows }),
    })
}

// ---------------------------------------------------------------- necessity

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NecessityInput {
    pub triple: String,
    pub center: Option<ZPoint>,
    pub theta: f64,
    pub delta1: Vec<f64>,
    pub h: HSpec,
    pub count: Option<usize>,
    /// Required growth of the ratio from step `n` to `n + 2`.
    pub min_growth: Option<f64>,
}

pub fn necessity(sc: &Scenario) -> Result<Outcome, CliError> {
    let input: NecessityInput = sc.params()?;
    let model = &sc.model;
    let triple = parse_triple(&input.triple, "parameters.triple")?;
    let (p, q, r) = triple_f64(&triple);
    let center = center_or_origin(model, input.center, "parameters.center")?;
    let min_growth = input.min_growth.unwrap_or(2.0);
    let parameters = json!({
        "triple": triple, "center": center, "theta": input.theta, "delta1": input.delta1, "h": input.h,
        "count": input.count, "min_growth": min_growth,
    });
    let mut steps = Vec::new();
    for &d1 in &input.delta1 {
        let d2 = d1.powf(input.theta);
        let h = input.h.resolve(model, &center, d1, d2)?;
        let b = ccball::reach_ball(model, &center, &BallParams::new(d1, d2, h))?;
        steps.push(radon::necessity_union(model, &b, input.count, p, q, r)?);
    }
    let mut assertions = Vec::new();
    for s in &steps {
        let tag = format!("d1={}", s.delta1);
        assertions.push(check(format!("disjoint [{tag}]"), s.disjoint, format!("{} translates", s.count)));
        assertions.push(check(
            format!("pi1_subadditive [{tag}]"),
            s.pi1_subadditive,
            format!("|pi1 U| = {}, N |pi1 B| = {}", s.pi1_union, s.count as f64 * s.pi1_ball),
        ));
    }
    for n in 0..steps.len().saturating_sub(2) {
        let g = steps[n + 2].ratio / steps[n].ratio;
        assertions.push(check(format!("growth [{n} -> {}]", n + 2), g >= min_growth, format!("{g}")));
    }
    let rows = steps
        .iter()
        .map(|s| vec![num(s.delta1), num(s.delta2), num(s.h), s.count.to_string(), num(s.ratio)])
        .collect();
    Ok(Outcome {
        parameters,
        result: json!({ "triple": triple, "steps": steps }),
        assertions,
        series: Some(Series { header: vec!["delta1", "delta2", "h", "count", "ratio"], rows }),
    })
}

// ---------------------------------------------------------------- decompose

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenseInput {
    pub deltas: Vec<[f64; 2]>,
    pub rho: f64,
    pub c: f64,
    pub max_centers: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeInput {
    pub h: f64,
    pub f: SetSpec,
    pub betas: Vec<f64>,
    pub eta: f64,
    pub c_eta: f64,
    pub c: f64,
    pub width_samples: usize,
    #[serde(default)]
    pub widths: Vec<f64>,
    pub c_prime_max: Option<f64>,
    pub width_c: Option<f64>,
    pub q: Option<f64>,
    pub r: Option<f64>,
    pub dense: Option<DenseInput>,
}

pub fn decompose(sc: &Scenario) -> Result<Outcome, CliError> {
    let input: DecomposeInput = sc.params()?;
    let model = &sc.model;
    let seed = require_seed(sc)?;
    let f = input.f.build(model.d(), input.h, "parameters.f")?;
    let c_prime_max = input.c_prime_max.unwrap_or(4.0);
    let width_c = input.width_c.unwrap_or(2.0);
    let (q, r) = (input.q.unwrap_or(3.0), input.r.unwrap_or(3.0));
    let parameters = json!({
        "h": input.h, "f": input.f, "betas": input.betas, "eta": input.eta, "c_eta": input.c_eta, "c": input.c,
        "width_samples": input.width_samples, "widths": input.widths, "c_prime_max": c_prime_max,
        "width_c": width_c, "q": q, "r": r, "seed": seed,
        "dense": input.dense.as_ref().map(|d| json!({ "deltas": d.deltas, "rho": d.rho, "c": d.c, "max_centers": d.max_centers })),
    });

    let mut levels = Vec::new();
    let mut assertions = Vec::new();
    let mut rows = Vec::new();
    for &beta in &input.betas {
        let tag = format!("beta={beta}");
        let sl = radon::superlevel_set(model, &f, beta)?;
        if sl.e.is_empty() {
            levels.push(json!({ "beta": beta, "e_cells": 0 }));
            continue;
        }
        let strata = decomp::stratify(&sl, input.eta, input.c_eta)?;
        let family = decomp::partition(model, &sl, &strata, &f, None, input.c)?;
        let width = decomp::width_bound_check(&sl, &strata, &family, input.width_samples, seed)?;
        let implications = decomp::delta1_bound_check(model, &sl, &f, &family, input.eta, &input.widths)?;
        let (f_sum, f_limit) = family.f_norm_overlap(&f, q, r);

        assertions.push(check(format!("pigeonhole [{tag}]"), strata.pigeonhole_holds(), format!("{} strata, bound {}", strata.strata.len(), strata.pair_bound)));
        assertions.push(check(
            format!("overlap [{tag}]"),
            family.overlap_holds(),
            format!("sum |E_n| = {}, |E~| = {}, F multiplicity {}", family.sum_e_n, family.e_tilde_measure, family.f_multiplicity),
        ));
        assertions.push(check(
            format!("localized [{tag}]"),
            family.localized_holds(),
            format!("{} >= {}", family.sum_pairings, family.localized_floor),
        ));
        assertions.push(check(format!("omega_n [{tag}]"), family.c_prime <= c_prime_max, format!("C' = {}", family.c_prime)));
        assertions.push(check(format!("width [{tag}]"), width.worst_ratio <= width_c, format!("worst {} over {} samples", width.worst_ratio, width.checked)));
        assertions.push(check(format!("f_norm_overlap [{tag}]"), f_sum <= f_limit * (1.0 + 1e-12), format!("{f_sum} <= {f_limit}")));
        for w in &implications {
            assertions.push(check(format!("delta1_bound [{tag} w={}]", w.w), w.holds, format!("lambda {}, bound {}", w.lambda, w.bound)));
        }
        rows.push(vec![
            num(beta),
            sl.e.len().to_string(),
            strata.strata.len().to_string(),
            family.pieces.len().to_string(),
            num(family.c_prime),
            num(width.worst_ratio),
        ]);
        levels.push(json!({
            "beta": beta, "e_cells": sl.e.len(), "e_measure": sl.e.measure(), "strata": strata,
            "family": family, "width": width, "delta1_bounds": implications,
            "f_norm_overlap": [f_sum, f_limit],
        }));
    }

    let mut dense_report = Value::Null;
    if let Some(d) = &input.dense {
        // Omega of the whole pair (E = support of T* chi_F at the smallest beta)
        let beta = input.betas.iter().copied().fold(f64::INFINITY, f64::min);
        let sl = radon::superlevel_set(model, &f, beta)?;
        if !sl.e.is_empty() {
            let om: LatticeSet = radon::omega(model, &sl.e, &f)?;
            let config = DenseBallConfig {
                deltas: d.deltas.iter().map(|&[a, b]| (a, b)).collect(),
                rho: d.rho,
                c: d.c,
                max_centers: d.max_centers,
            };
            let rep = decomp::dense_ball_search(model, &om, &config)?;
            assertions.push(check(
                "dense_ball",
                rep.meets_bound || rep.meets_swapped,
                format!("best density {:?}, bounds {} / {}", rep.best.as_ref().map(|b| b.density), rep.bound, rep.bound_swapped),
            ));
            dense_report = to_value(&rep);
        }
    }

    Ok(Outcome {
        parameters,
        result: json!({ "levels": levels, "dense": dense_report }),
        assertions,
        series: Some(Series { header: vec!["beta", "e_cells", "strata", "pieces", "c_prime", "width_worst"], rows }),
    })
}
