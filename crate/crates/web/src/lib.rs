//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes matrix text in the usual grid layout and returns a
//! JSON string.

use irsc_core::cpo::{cpo_optimize, CpoConfig};
use irsc_core::optimizer::evaluate;
use irsc_core::{
    build_pi, degree_distributions, enumerate_ndi, lifted_cycle_count, make_ab_powers, CbMatrix,
    OverlapTable, PartitioningMatrix,
};
use serde_json::json;
use wasm_bindgen::prelude::*;

type Out = Result<String, String>;

fn text<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn parse_pm(pm_text: &str) -> Result<PartitioningMatrix, String> {
    PartitioningMatrix::parse(pm_text, Some(1)).map_err(|e| format!("partitioning matrix: {e}"))
}

fn parse_cm(cm_text: &str, pm: &PartitioningMatrix, z: usize) -> Result<CbMatrix, String> {
    if cm_text.trim().is_empty() {
        return make_ab_powers(pm.gamma(), pm.kappa(), z).map_err(text);
    }
    CbMatrix::parse(cm_text, z).map_err(|e| format!("power matrix: {e}"))
}

pub fn evaluate_json(pm_text: &str, coupling_length: usize) -> Out {
    let pm = parse_pm(pm_text)?;
    let f = evaluate(&pm, coupling_length).map_err(text)?;
    let dd = degree_distributions(&pm.dummy_protograph(), pm.gamma(), pm.kappa()).map_err(text)?;
    let table = OverlapTable::from_stacked(&build_pi(&pm).map_err(text)?);
    let mut overlaps = Vec::new();
    for set in enumerate_ndi(pm.gamma()) {
        overlaps.push(json!([set.to_string(), table.resolve(&set).map_err(text)?]));
    }
    Ok(json!({
        "F": f,
        "lambda": dd.vn,
        "phi": dd.cn,
        "overlaps": overlaps,
    })
    .to_string())
}

pub fn census_json(pm_text: &str, cm_text: &str, z: usize, coupling_length: usize) -> Out {
    let pm = parse_pm(pm_text)?;
    let cm = parse_cm(cm_text, &pm, z)?;
    let six = lifted_cycle_count(&pm, &cm, z, coupling_length, 6).map_err(text)?;
    let four = lifted_cycle_count(&pm, &cm, z, coupling_length, 4).map_err(text)?;
    Ok(json!({
        "cycles6": six.count,
        "cycles4": four.count,
        "heatmap": six.per_circulant,
        "cm": cm.to_text_masked(&pm),
    })
    .to_string())
}

pub fn tune_json(
    pm_text: &str,
    cm_text: &str,
    z: usize,
    coupling_length: usize,
    max_rounds: usize,
) -> Out {
    let pm = parse_pm(pm_text)?;
    let cm = parse_cm(cm_text, &pm, z)?;
    let cfg = CpoConfig {
        max_rounds,
        ..CpoConfig::default()
    };
    let state = cpo_optimize(&pm, &cm, z, coupling_length, &cfg).map_err(text)?;
    Ok(json!({
        "initial": state.initial_cycles6,
        "cycles6": state.census.count,
        "converged": state.converged,
        "history": state.history,
        "heatmap": state.census.per_circulant,
        "cm": state.cm.to_text_masked(&pm),
    })
    .to_string())
}

fn js(r: Out) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Protograph cycles-6, degree fractions and overlap parameters.
#[wasm_bindgen(js_name = evaluatePartitioning)]
pub fn evaluate_partitioning(pm_text: &str, coupling_length: usize) -> Result<String, JsError> {
    js(evaluate_json(pm_text, coupling_length))
}

/// Lifted cycle counts with per-circulant cycles-6 participation. Empty
/// `cm_text` selects array-based powers.
#[wasm_bindgen(js_name = liftedCensus)]
pub fn lifted_census(
    pm_text: &str,
    cm_text: &str,
    z: usize,
    coupling_length: usize,
) -> Result<String, JsError> {
    js(census_json(pm_text, cm_text, z, coupling_length))
}

/// Runs the circulant power optimizer.
#[wasm_bindgen(js_name = tunePowers)]
pub fn tune_powers(
    pm_text: &str,
    cm_text: &str,
    z: usize,
    coupling_length: usize,
    max_rounds: usize,
) -> Result<String, JsError> {
    js(tune_json(pm_text, cm_text, z, coupling_length, max_rounds))
}
