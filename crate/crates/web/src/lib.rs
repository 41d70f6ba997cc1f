//! WebAssembly bindings for the demo page in `www/`.
//!
//! Every export returns a flat `Float64Array` so the page can draw it
//! without a serialization layer. Errors come back as JS exceptions.

use newlyap::dynball::Fan;
use newlyap::exponents::{classical_top_profile, new_directional_exponent, new_top_exponent, Schedule};
use newlyap::geometry::{Domain, Point2, Vec2};
use newlyap::maps::{build_disc_family, disc_standin, DiscFamilySpec, MapObject, MapSpec, StandinParams};
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn lookup(name: &str) -> Result<MapObject, JsError> {
    MapSpec::by_name(name).and_then(|s| s.build()).map_err(js_err)
}

fn schedule_for(name: &str) -> Schedule {
    if name == "example" {
        Schedule::conic()
    } else {
        Schedule::default()
    }
}

/// Names accepted by the other exports, newline separated.
#[wasm_bindgen]
pub fn map_names() -> String {
    newlyap::maps::ZOO_NAMES.join("\n")
}

/// Derivative-free directional exponent at `(x, y)` for `count` directions
/// spread over a half turn. Returns `[angle_0, value_0, angle_1, ...]`;
/// directions whose estimate fails are reported as NaN.
#[wasm_bindgen]
pub fn directional_fan(map: &str, x: f64, y: f64, count: usize) -> Result<Vec<f64>, JsError> {
    let m = lookup(map)?;
    let s = schedule_for(map);
    let p = Point2::new(x, y);
    m.domain().contains(p).then_some(()).ok_or_else(|| js_err("point lies outside the map's domain"))?;
    let count = count.clamp(2, 360);
    let mut out = Vec::with_capacity(2 * count);
    for i in 0..count {
        let angle = std::f64::consts::PI * i as f64 / count as f64;
        let v = new_directional_exponent(&m, p, Vec2::from_angle(angle), &s).map_or(f64::NAN, |e| e.value);
        out.extend([angle, v]);
    }
    Ok(out)
}

/// Growth curves at `(x, y)`: for each horizon `n` of the schedule,
/// `[n, s(n)/n, classical (1/n) log |Df^n|]`. The classical column is NaN
/// for maps without a derivative.
#[wasm_bindgen]
pub fn growth_curves(map: &str, x: f64, y: f64) -> Result<Vec<f64>, JsError> {
    let m = lookup(map)?;
    let s = schedule_for(map);
    let p = Point2::new(x, y);
    let e = new_top_exponent(&m, p, &s).map_err(js_err)?;
    let classical = classical_top_profile(&m, p, &s.n_values).ok();
    let mut out = Vec::with_capacity(3 * e.per_n.len());
    for (i, h) in e.per_n.iter().enumerate() {
        let new = h.s_n.map_or(f64::NAN, |v| v / h.n as f64);
        let cl = classical.as_ref().map_or(f64::NAN, |c| c[i]);
        out.extend([h.n as f64, new, cl]);
    }
    Ok(out)
}

/// Top-exponent field of the disc family `g_n` on a `side x side` grid of
/// cell centres in the unit torus, row-major from `y = 0`. Uses a coarse
/// 16-direction fan to stay interactive. Cells where no candidate survives
/// the full horizon are NaN.
#[wasm_bindgen]
pub fn disc_family_field(n: usize, k: f64, side: usize) -> Result<Vec<f64>, JsError> {
    let base = disc_standin(StandinParams::default()).map_err(js_err)?;
    let fam = build_disc_family(&DiscFamilySpec::new(n, k, base, Domain::unit_torus())).map_err(js_err)?;
    let s = Schedule { fan: Fan::Even(16), ..Schedule::default() };
    let side = side.clamp(4, 128);
    let h = 1.0 / side as f64;
    let mut out = Vec::with_capacity(side * side);
    for j in 0..side {
        for i in 0..side {
            let p = Point2::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            out.push(new_top_exponent(&fam.map, p, &s).map_or(f64::NAN, |e| e.value.max(0.0)));
        }
    }
    Ok(out)
}
