//! Browser bindings.  Each export returns a JSON string; the plain Rust
//! functions behind them are what the native tests exercise.

use serde_json::json;
use uniest::demos::{run_bfield, FieldSource};
use uniest::fidelity::{estimate_avg_fidelity, n2_fidelity_closed, scan_n2, ReferenceValues};
use uniest::probes::{optimal_n2_meas_weight, optimal_n2_prep_weight};
use uniest::strategies::{bell_strategy, blind_strategy, covariant_n1};
use uniest::AxisAngle;
use wasm_bindgen::prelude::*;

/// Keeps a click in the page under a few seconds without threads.
pub const MAX_SAMPLES: usize = 200_000;

fn check_samples(samples: usize) -> Result<(), String> {
    if (100..=MAX_SAMPLES).contains(&samples) {
        Ok(())
    } else {
        Err(format!("samples must be between 100 and {MAX_SAMPLES}"))
    }
}

/// Average fidelity of `strategy` (`bell`, `covariant` or `blind`) for
/// dimension `d`, with the closed-form references.
pub fn fidelity_json(strategy: &str, d: usize, samples: usize, seed: u64) -> Result<String, String> {
    check_samples(samples)?;
    if !(2..=6).contains(&d) {
        return Err("d must be between 2 and 6".into());
    }
    let s = match strategy {
        "bell" if d == 2 => bell_strategy(),
        "bell" => return Err("the Bell strategy needs d = 2".into()),
        "covariant" => covariant_n1(d).map_err(|e| e.to_string())?,
        "blind" => blind_strategy(d).map_err(|e| e.to_string())?,
        other => return Err(format!("unknown strategy {other:?}")),
    };
    let est = estimate_avg_fidelity(&s, samples, seed).map_err(|e| e.to_string())?;
    Ok(json!({ "estimate": est, "reference": ReferenceValues::new(d) }).to_string())
}

/// Two-copy fidelity against the probe weight on `points` evenly spaced
/// values of `a` in `[0, 1]`, next to the closed-form curve.
pub fn scan_json(points: usize, samples: usize, seed: u64) -> Result<String, String> {
    check_samples(samples)?;
    if !(2..=41).contains(&points) {
        return Err("points must be between 2 and 41".into());
    }
    let grid: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
    let a_meas = optimal_n2_meas_weight();
    let scan = scan_n2(&grid, a_meas, samples, seed).map_err(|e| e.to_string())?;
    let rows: Vec<_> = scan
        .iter()
        .map(|(a, e)| {
            json!({
                "a": a,
                "mean": e.mean,
                "stderr": e.stderr,
                "closed_form": n2_fidelity_closed(*a, a_meas).ok(),
            })
        })
        .collect();
    Ok(json!({ "points": rows, "optimal_a": optimal_n2_prep_weight() }).to_string())
}

/// Field estimation for a fixed axis and angle; summary plus the guessed
/// axes for plotting.
pub fn bfield_json(axis: [f64; 3], angle: f64, samples: usize, seed: u64) -> Result<String, String> {
    check_samples(samples)?;
    let truth = AxisAngle::new(axis, angle).map_err(|e| e.to_string())?;
    let rep = run_bfield(FieldSource::Fixed(truth), samples, seed).map_err(|e| e.to_string())?;
    let guesses: Vec<_> = rep
        .trials
        .iter()
        .take(2000)
        .map(|t| (t.guess.axis(), t.guess.angle()))
        .collect();
    Ok(json!({ "truth": truth, "summary": rep.summary, "guesses": guesses }).to_string())
}

#[wasm_bindgen]
pub fn estimate_fidelity(strategy: &str, d: usize, samples: usize, seed: u32) -> Result<String, JsError> {
    fidelity_json(strategy, d, samples, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn two_copy_scan(points: usize, samples: usize, seed: u32) -> Result<String, JsError> {
    scan_json(points, samples, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn field_demo(x: f64, y: f64, z: f64, angle: f64, samples: usize, seed: u32) -> Result<String, JsError> {
    bfield_json([x, y, z], angle, samples, seed.into()).map_err(|e| JsError::new(&e))
}
