//! Browser bindings. Every function returns a flat `Float64Array` of rows
//! with a fixed stride so the page needs no serialization layer.

use coopfb::analysis::{comparison_local_error, estimate_sum_rate, expected_local_error};
use coopfb::model::db_to_linear;
use coopfb::montecarlo::{run_sweep, Pipelines};
use coopfb::{Error, Mode, SystemConfig};
use wasm_bindgen::prelude::*;

fn js(e: Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>, JsValue> {
    if step.is_nan() || step <= 0.0 || hi < lo || (hi - lo) / step > 1000.0 {
        return Err(JsValue::from_str("bad SNR grid"));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + step * i as f64).collect())
}

/// Closed-form sum rates and the mode decision over an SNR grid.
///
/// Rows of 4: `rho_db, rate_coop, rate_conv, decision` where decision is
/// 1 for cooperative, 0 for conventional and NaN where either estimate is
/// outside its regime (rates are NaN there too).
#[wasm_bindgen]
pub fn mode_curve(k: usize, m: usize, n: usize, b_cl: u32, lo_db: f64, hi_db: f64, step_db: f64) -> Result<Vec<f64>, JsValue> {
    SystemConfig::new(m, n, k, 1.0, b_cl).validate().map_err(js)?;
    let mut out = Vec::new();
    for db in grid(lo_db, hi_db, step_db)? {
        let rho = db_to_linear(db);
        let coop = estimate_sum_rate(k, m, n, rho, b_cl, Mode::Cooperative).unwrap_or(f64::NAN);
        let conv = estimate_sum_rate(k, m, n, rho, b_cl, Mode::Conventional).unwrap_or(f64::NAN);
        let decision = if coop.is_nan() || conv.is_nan() {
            f64::NAN
        } else {
            f64::from(u8::from(coop > conv))
        };
        out.extend([db, coop, conv, decision]);
    }
    Ok(out)
}

/// Expected local error against the cooperation-link budget.
///
/// Rows of 3: `bcl, closed_form, comparison`.
#[wasm_bindgen]
pub fn local_error_curve(m: usize, n: usize, bcl_max: u32) -> Result<Vec<f64>, JsValue> {
    if bcl_max > 20 {
        return Err(JsValue::from_str("bcl_max must be at most 20"));
    }
    let mut out = Vec::new();
    for b in 1..=bcl_max {
        let q = 1usize << b;
        let w = expected_local_error(m, n, q).map_err(js)?;
        let c = comparison_local_error(m, n, q).map_err(js)?;
        out.extend([f64::from(b), w, c]);
    }
    Ok(out)
}

/// Small Monte Carlo sweep, run serially in the page.
///
/// Rows of 3: `rho_db, rate_conv, rate_coop`.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn simulate_rates(
    k: usize,
    m: usize,
    n: usize,
    b_cl: u32,
    lo_db: f64,
    hi_db: f64,
    step_db: f64,
    trials: u32,
    seed: u32,
) -> Result<Vec<f64>, JsValue> {
    let cfg = SystemConfig::new(m, n, k, 1.0, b_cl)
        .with_trials(u64::from(trials.max(1)))
        .with_seed(u64::from(seed));
    let rho_db = grid(lo_db, hi_db, step_db)?;
    let need = Pipelines { conventional: true, cooperative: true };
    let sw = run_sweep(&cfg, &rho_db, &[k], need, 1).map_err(js)?;
    let conv = &sw.conventional.expect("requested")[0];
    let coop = &sw.cooperative.expect("requested")[0];
    Ok(rho_db
        .iter()
        .zip(conv.iter().zip(coop))
        .flat_map(|(&db, (&a, &b))| [db, a, b])
        .collect())
}
