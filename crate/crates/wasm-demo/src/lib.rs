//! Browser bindings for plotting the degree model and its evolution.
//!
//! Every exported function returns a flat `Float64Array`; the page slices it
//! into rows. The `*_rows` functions hold the logic so they can be tested
//! natively without a JS host.

// Negated comparisons are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// The exported API takes flat numeric arguments so JS can call it directly.
#![allow(clippy::too_many_arguments)]

use depnet_core::dynamics::{eval_phi_xt, n_out_limit, n_out_series, EvolutionConfig};
use depnet_core::model::{eval_phi_general, published, ModelParams};
use wasm_bindgen::prelude::*;

/// Largest grid the page may request.
pub const MAX_POINTS: usize = 4096;

fn params(alpha: f64, eta: f64, lambda: f64, c: f64) -> Result<ModelParams, String> {
    let p = ModelParams::new(alpha, -1.0, eta, lambda, c);
    p.validate().map_err(|e| e.to_string())?;
    Ok(p)
}

/// `n` points spaced evenly in log from 1 to `x_max`.
pub fn log_grid(x_max: f64, n: usize) -> Result<Vec<f64>, String> {
    if !(x_max > 1.0) || !(2..=MAX_POINTS).contains(&n) {
        return Err(format!("need x_max > 1 and 2 <= n <= {MAX_POINTS}"));
    }
    let step = x_max.ln() / (n - 1) as f64;
    Ok((0..n).map(|i| (step * i as f64).exp()).collect())
}

/// `[x0, phi0, x1, phi1, ...]`; points outside the positive domain are dropped.
pub fn curve_rows(
    alpha: f64,
    eta: f64,
    lambda: f64,
    c: f64,
    x_max: f64,
    n: usize,
) -> Result<Vec<f64>, String> {
    let p = params(alpha, eta, lambda, c)?;
    let mut out = Vec::with_capacity(2 * n);
    for x in log_grid(x_max, n)? {
        if let Ok(phi) = eval_phi_general(x, &p) {
            out.extend([x, phi]);
        }
    }
    Ok(out)
}

/// For each time in `times`, `n` values of `phi(x, t)` on the log grid up to
/// `x_m`: `[x0..x_{n-1}, phi(t0)..., phi(t1)..., ...]`.
pub fn slice_rows(
    alpha: f64,
    eta: f64,
    lambda: f64,
    c: f64,
    tau: f64,
    x_m: f64,
    times: &[f64],
    n: usize,
) -> Result<Vec<f64>, String> {
    let cfg = EvolutionConfig::new(params(alpha, eta, lambda, c)?, tau, x_m)
        .map_err(|e| e.to_string())?;
    let xs = log_grid(x_m, n)?;
    let mut out = xs.clone();
    for &t in times {
        for &x in &xs {
            out.push(eval_phi_xt(x, t, &cfg).unwrap_or(f64::NAN));
        }
    }
    Ok(out)
}

/// `[t, closed, quadrature]` rows for `n` times in `[0, t_max]`, followed by
/// the long-time limit as a final single value. Only `alpha = -2` has a
/// closed form.
pub fn n_out_rows(
    alpha: f64,
    eta: f64,
    lambda: f64,
    c: f64,
    tau: f64,
    x_m: f64,
    t_max: f64,
    n: usize,
) -> Result<Vec<f64>, String> {
    if !(t_max > 0.0) || !(2..=MAX_POINTS).contains(&n) {
        return Err(format!("need t_max > 0 and 2 <= n <= {MAX_POINTS}"));
    }
    let cfg = EvolutionConfig::new(params(alpha, eta, lambda, c)?, tau, x_m)
        .map_err(|e| e.to_string())?;
    let ts: Vec<f64> = (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect();
    let rows = n_out_series(&ts, &cfg).map_err(|e| e.to_string())?;
    let mut out: Vec<f64> = rows
        .iter()
        .flat_map(|r| [r.t, r.n_out_closed, r.n_out_quadrature])
        .collect();
    out.push(n_out_limit(&cfg).map_err(|e| e.to_string())?);
    Ok(out)
}

/// `[alpha, mu, eta, lambda, c]` of a published fit, or empty if unknown.
pub fn preset_values(name: &str) -> Vec<f64> {
    published::ALL
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, p)| p.as_array().to_vec())
        .unwrap_or_default()
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen]
pub fn preset_names() -> Vec<String> {
    published::ALL.iter().map(|(n, _)| n.to_string()).collect()
}

#[wasm_bindgen]
pub fn preset(name: &str) -> Vec<f64> {
    preset_values(name)
}

#[wasm_bindgen]
pub fn model_curve(
    alpha: f64,
    eta: f64,
    lambda: f64,
    c: f64,
    x_max: f64,
    n: usize,
) -> Result<Vec<f64>, JsError> {
    curve_rows(alpha, eta, lambda, c, x_max, n).map_err(js)
}

#[wasm_bindgen]
pub fn evolution_slices(
    alpha: f64,
    eta: f64,
    lambda: f64,
    c: f64,
    tau: f64,
    x_m: f64,
    times: Vec<f64>,
    n: usize,
) -> Result<Vec<f64>, JsError> {
    slice_rows(alpha, eta, lambda, c, tau, x_m, &times, n).map_err(js)
}

#[wasm_bindgen]
pub fn n_out_curve(
    alpha: f64,
    eta: f64,
    lambda: f64,
    c: f64,
    tau: f64,
    x_m: f64,
    t_max: f64,
    n: usize,
) -> Result<Vec<f64>, JsError> {
    n_out_rows(alpha, eta, lambda, c, tau, x_m, t_max, n).map_err(js)
}
