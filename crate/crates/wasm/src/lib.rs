//! Browser bindings for the demo page in `www/`. Every export returns a flat
//! `Float64Array` so the page can plot it without further decoding.

use hyperwalk::geometry::{exp_map, CurvatureModel, LorentzPoint, RadialFrame, TangentVector};
use hyperwalk::increments::{IncrementLaw, RadialProfile};
use hyperwalk::lamperti::{f_value, j_max, j_min};
use hyperwalk::simulator::{run_walk, walk_rng, WalkConfig};
use wasm_bindgen::prelude::*;

/// Longest walk the page may request.
pub const MAX_STEPS: u32 = 100_000;

/// The disk walk stops once `k·R` reaches this. The point is then within
/// `1e-13` of the boundary circle, and ambient coordinates of size `e^{kR}`
/// no longer resolve sideways steps.
const STOP_KR: f64 = 30.0;

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn law(a: f64, b: f64) -> Result<IncrementLaw, JsError> {
    let a = RadialProfile::constant(a).map_err(js)?;
    let b = RadialProfile::constant(b).map_err(js)?;
    IncrementLaw::elliptic(a, b, 2).map_err(js)
}

fn check_steps(steps: u32) -> Result<(), JsError> {
    if steps == 0 || steps > MAX_STEPS {
        return Err(JsError::new(&format!("steps must lie in 1..={MAX_STEPS}")));
    }
    Ok(())
}

/// Planar elliptic walk on the hyperbolic plane of curvature `−k²`, as
/// Poincaré-disk coordinates `[x₀, y₀, x₁, y₁, …]` starting at the centre.
/// Stops early if the walk gets too far out to represent.
#[wasm_bindgen]
pub fn poincare_walk(k: f64, a: f64, b: f64, steps: u32, seed: u64) -> Result<Vec<f64>, JsError> {
    check_steps(steps)?;
    let law = law(a, b)?;
    CurvatureModel::hyperbolic(k, 2).map_err(js)?;
    let mut rng = walk_rng(seed, 0);
    let mut x = LorentzPoint::from_spatial(&[0.0, 0.0], k).map_err(js)?;
    let mut out = Vec::with_capacity(2 * steps as usize + 2);
    out.extend(disk(&x, k));
    for _ in 0..steps {
        let r = x.radius(k);
        if k * r >= STOP_KR {
            break;
        }
        let frame = RadialFrame::hyperbolic(&x, k);
        let inc = law.sample(r, &mut rng);
        let v = TangentVector::new(x.clone(), frame.embed(&inc.coords)).map_err(js)?;
        x = exp_map(&x, &v, k).map_err(js)?;
        x.reproject(k);
        out.extend(disk(&x, k));
    }
    Ok(out)
}

/// `k·x_s / (1 + k·x₀)`: the Poincaré-disk image of a hyperboloid point.
fn disk(x: &LorentzPoint, k: f64) -> [f64; 2] {
    let c = x.coords();
    let s = k / (1.0 + k * c[0]);
    [s * c[1], s * c[2]]
}

/// Distance from the origin after each step of the planar elliptic walk;
/// `k = 0` selects the flat plane. Returns `steps + 1` radii.
#[wasm_bindgen]
pub fn radius_series(k: f64, a: f64, b: f64, steps: u32, seed: u64) -> Result<Vec<f64>, JsError> {
    check_steps(steps)?;
    let model = if k == 0.0 {
        CurvatureModel::euclidean(2)
    } else {
        CurvatureModel::hyperbolic(k, 2)
    }
    .map_err(js)?;
    let mut cfg = WalkConfig::new(model, law(a, b)?, steps as u64, 1, seed);
    cfg.record_stride = 1;
    let rec = run_walk(&cfg, 0).map_err(js)?;
    Ok(rec.radii.into_iter().map(|(_, r)| r).collect())
}

/// The quadratic sandwich around `F` for a step of length `d_tot`: rows
/// `[φ, lower, F, upper]` for `n` values of `φ` spread over `[−1, 1]`.
#[wasm_bindgen]
pub fn sandwich_curves(k: f64, d_tot: f64, n: u32) -> Result<Vec<f64>, JsError> {
    if n < 2 {
        return Err(JsError::new("need at least two points"));
    }
    let lo = j_min(k, d_tot).map_err(js)?;
    let hi = j_max(k, d_tot).map_err(js)?;
    let mut out = Vec::with_capacity(4 * n as usize);
    for i in 0..n {
        let phi = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
        let t = d_tot * d_tot * (1.0 - phi * phi);
        let f = f_value(k, phi * d_tot, d_tot).map_err(js)?;
        out.extend([phi, phi * d_tot + lo * t, f, phi * d_tot + hi * t]);
    }
    Ok(out)
}
