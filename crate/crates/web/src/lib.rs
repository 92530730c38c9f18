//! JSON-in, JSON-out bindings for the demo page in `www/`.

use radonlab::ccball::{self, BallParams};
use radonlab::exponents::{self, ExponentTriple};
use radonlab::geometry::{catalog, ModelFamily, ZPoint};
use radonlab::radon;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Radii below this make the page sluggish.
pub const MIN_DELTA: f64 = 1.0 / 64.0;

fn model(name: &str) -> Result<ModelFamily, String> {
    catalog::by_name(name).ok_or_else(|| format!("unknown model `{name}`"))
}

fn check_radius(v: f64) -> Result<(), String> {
    if !(MIN_DELTA..=ccball::MAX_DELTA).contains(&v) {
        return Err(format!("radius {v} outside [{MIN_DELTA}, {}]", ccball::MAX_DELTA));
    }
    Ok(())
}

pub fn ball_json(model_name: &str, delta1: f64, delta2: f64, cells_across: f64) -> Result<String, String> {
    check_radius(delta1)?;
    check_radius(delta2)?;
    let m = model(model_name)?;
    let z = ZPoint::origin(m.d());
    let h = ccball::adaptive_h(&m, &z, delta1, delta2, cells_across).map_err(|e| e.to_string())?;
    let b = ccball::reach_ball(&m, &z, &BallParams::new(delta1, delta2, h)).map_err(|e| e.to_string())?;
    Ok(json!({
        "h": b.h,
        "cells": b.cell_count,
        "volume": b.volume,
        "proj1": b.proj1,
        "proj2": b.proj2,
        "pi_extent": b.pi_extent,
        "slab": b.slab,
    })
    .to_string())
}

pub fn exponents_json(triple: &str) -> Result<String, String> {
    let t = ExponentTriple::parse(triple).map_err(|e| e.to_string())?;
    let ordering = t.check_ordering().err().map(|e| e.to_string());
    let c = exponents::c_from_pqr(&t).ok();
    let g = exponents::gammas(&t).ok().map(|g| g.map(|r| r.to_string()));
    let window = exponents::interpolation_window(&t).ok();
    Ok(json!({
        "triple": t,
        "ordering_error": ordering,
        "c": c,
        "c_f64": c.map(|c| c.as_f64()),
        "gammas": g,
        "window": window,
    })
    .to_string())
}

/// Restricted weak-type ratios on `(pi1 B, pi2 B)` for `delta1 = 2^-3 .. 2^-j_max`.
pub fn rwt_json(model_name: &str, triple: &str, theta: f64, j_max: i32) -> Result<String, String> {
    let m = model(model_name)?;
    let t = ExponentTriple::parse(triple).map_err(|e| e.to_string())?;
    let (p, q, r) = t.as_f64();
    if !(0.0..=1.0).contains(&theta) || theta == 0.0 {
        return Err(format!("theta must lie in (0, 1], got {theta}"));
    }
    if !(4..=6).contains(&j_max) {
        return Err(format!("j_max must lie in 4..=6, got {j_max}"));
    }
    let z = ZPoint::origin(m.d());
    let mut rows = Vec::new();
    for j in 3..=j_max {
        let d1 = 2f64.powi(-j);
        let d2 = d1.powf(theta);
        let h = ccball::adaptive_h(&m, &z, d1, d2, 2.0).map_err(|e| e.to_string())?;
        let b = ccball::reach_ball(&m, &z, &BallParams::new(d1, d2, h)).map_err(|e| e.to_string())?;
        let v = radon::rwt_ratio(&m, b.proj1_cells(), b.proj2_cells(), p, q, r).map_err(|e| e.to_string())?;
        rows.push(json!({ "delta1": d1, "delta2": d2, "h": h, "ratio": v }));
    }
    Ok(json!({ "triple": t, "theta": theta, "rows": rows }).to_string())
}

#[wasm_bindgen]
pub fn ball(model_name: &str, delta1: f64, delta2: f64, cells_across: f64) -> Result<String, JsValue> {
    ball_json(model_name, delta1, delta2, cells_across).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn exponents(triple: &str) -> Result<String, JsValue> {
    exponents_json(triple).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn rwt(model_name: &str, triple: &str, theta: f64, j_max: i32) -> Result<String, JsValue> {
    rwt_json(model_name, triple, theta, j_max).map_err(|e| JsValue::from_str(&e))
}
