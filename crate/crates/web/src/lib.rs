//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes plain numbers and returns a JSON string. The `*_json`
//! functions hold the logic and run natively too, which is how they are
//! tested.

use carnot::divergence::{self, GeodesicPair};
use carnot::metric::OptimizerConfig;
use carnot::{CcSpace, Error, Group, GroupElement, Result};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn group(name: &str) -> Result<Group> {
    Group::builtin(name)
}

fn element(g: &Group, coords: &[f64]) -> Result<GroupElement> {
    g.element(coords.to_vec())
}

/// Labels, layer sizes and homogeneous dimension of a built-in group.
pub fn group_info_json(name: &str) -> Result<Value> {
    let g = group(name)?;
    let alg = g.algebra();
    Ok(json!({
        "name": alg.name(),
        "labels": alg.labels(),
        "layer_dims": alg.layer_dims(),
        "homogeneous_dimension": alg.homogeneous_dimension(),
    }))
}

/// `x·y` and `h_t(x·y)`.
pub fn product_json(name: &str, x: &[f64], y: &[f64], t: f64) -> Result<Value> {
    let g = group(name)?;
    if !t.is_finite() {
        return Err(Error::Input("t must be finite".into()));
    }
    let p = g.bch(&element(&g, x)?, &element(&g, y)?)?;
    let d = g.dilate(t, &p);
    Ok(json!({ "product": p.as_slice(), "dilated": d.as_slice() }))
}

/// Bounds on `d_cc(e, y)` and the witness path as a list of vertices.
pub fn distance_json(name: &str, y: &[f64], seed: u64) -> Result<Value> {
    let g = group(name)?;
    let y = element(&g, y)?;
    let space = CcSpace::standard(g.clone())?.with_config(OptimizerConfig { seed, ..OptimizerConfig::default() });
    let id = g.identity();
    let est = space.estimate(&id, &y)?;
    let vertices: Vec<Vec<f64>> = est.witness.vertices(&g)?.iter().map(|v| v.as_slice().to_vec()).collect();
    Ok(json!({
        "lower": est.lower,
        "lower_method": est.lower_method,
        "upper": est.upper,
        "upper_method": est.upper_method,
        "endpoint_residual": est.endpoint_residual,
        "vertices": vertices,
    }))
}

/// Divergence profile of `h_t eᵛ` and `eʷ h_t eᵛ` with the verdict against
/// Euclidean pairs.
pub fn divergence_json(name: &str, v: &[f64], w: &[f64], tmax: f64, seed: u64) -> Result<Value> {
    if !(1.0..=1024.0).contains(&tmax) {
        return Err(Error::Input(format!("tmax must be in [1, 1024], got {tmax}")));
    }
    let g = group(name)?;
    let space = CcSpace::standard(g)?.with_config(OptimizerConfig { seed, ..OptimizerConfig::fast() });
    let pair = GeodesicPair { v: v.to_vec(), w: w.to_vec(), t_grid: divergence::default_grid(tmax) };
    let fit = divergence::divergence_profile(&space, &pair)?;
    let models = divergence::euclidean_reference(&pair.t_grid)?;
    let verdict = divergence::obstruction_report(&fit, &models);
    Ok(json!({ "fit": fit, "verdict": verdict }))
}

fn to_js(r: Result<Value>) -> std::result::Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn group_info(name: &str) -> std::result::Result<String, JsError> {
    to_js(group_info_json(name))
}

#[wasm_bindgen]
pub fn product(name: &str, x: &[f64], y: &[f64], t: f64) -> std::result::Result<String, JsError> {
    to_js(product_json(name, x, y, t))
}

#[wasm_bindgen]
pub fn distance(name: &str, y: &[f64], seed: u32) -> std::result::Result<String, JsError> {
    to_js(distance_json(name, y, seed as u64))
}

#[wasm_bindgen]
pub fn divergence(name: &str, v: &[f64], w: &[f64], tmax: f64, seed: u32) -> std::result::Result<String, JsError> {
    to_js(divergence_json(name, v, w, tmax, seed as u64))
}
