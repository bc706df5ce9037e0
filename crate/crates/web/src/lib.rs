//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export returns a JSON string; errors come back as
//! `{"error": "..."}` so the page can show them inline.

use std::cell::RefCell;
use std::rc::Rc;

use scarquench::quench::{effective_dimension, loschmidt, time_grid};
use scarquench::scan::{scan_grid, PrequenchSolver};
use scarquench::{PostQuench, PrequenchParams, Result, Route, ScanGrid, DEFAULT_ZFIELD_EPS};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest chain the page offers; keeps a browser solve under a few seconds.
pub const MAX_DEMO_LEN: usize = 16;

struct Cached {
    post: Rc<PostQuench>,
    solver: Rc<PrequenchSolver>,
}

thread_local! {
    static CACHE: RefCell<Option<Cached>> = const { RefCell::new(None) };
}

fn setup(len: usize) -> Result<(Rc<PostQuench>, Rc<PrequenchSolver>)> {
    if len > MAX_DEMO_LEN {
        return Err(scarquench::Error::InvalidArgument(format!("demo is limited to L <= {MAX_DEMO_LEN}")));
    }
    CACHE.with(|c| {
        let mut c = c.borrow_mut();
        if let Some(hit) = c.as_ref().filter(|h| h.post.len() == len) {
            return Ok((hit.post.clone(), hit.solver.clone()));
        }
        let post = Rc::new(PostQuench::new(len, DEFAULT_ZFIELD_EPS, Route::Sectors)?);
        let solver = Rc::new(PrequenchSolver::new(&post));
        *c = Some(Cached { post: post.clone(), solver: solver.clone() });
        Ok((post, solver))
    })
}

fn render(r: Result<Value>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

/// Loschmidt echo after quenching the resolved pre-quench ground state.
pub fn quench_curve(len: usize, delta: f64, g2x: f64, g2y: f64, t_max: f64, dt: f64) -> Result<Value> {
    let (post, solver) = setup(len)?;
    let times = time_grid(t_max, dt)?;
    let res = solver.resolve(PrequenchParams::new(g2x, g2y, delta))?;
    let ov = post.overlaps(&res.state)?;
    let echo = loschmidt(&ov, &times);
    Ok(json!({
        "times": echo.times,
        "values": echo.values,
        "deff": effective_dimension(&ov),
        "gap": res.delta,
        "degenerate": res.degenerate,
    }))
}

/// Overlap weights `|c_n|²` against post-quench energies.
pub fn overlap_spectrum(len: usize, delta: f64, g2x: f64, g2y: f64) -> Result<Value> {
    let (post, solver) = setup(len)?;
    let res = solver.resolve(PrequenchParams::new(g2x, g2y, delta))?;
    let ov = post.overlaps(&res.state)?;
    Ok(json!({ "energies": ov.energies, "weights": ov.weights, "deff": effective_dimension(&ov) }))
}

/// `D_eff` over `[−half_width, half_width]²` at `Δ = −1`.
pub fn deff_map(len: usize, half_width: f64, step: f64) -> Result<Value> {
    let (post, solver) = setup(len)?;
    let grid = ScanGrid::square(len, half_width, step);
    let result = scan_grid(&grid, &post, &solver)?;
    Ok(json!({
        "g2x": grid.g2x.values(),
        "g2y": grid.g2y.values(),
        "deff": result.points.iter().map(|p| p.deff).collect::<Vec<_>>(),
        "optimum": result.optimum,
    }))
}

#[wasm_bindgen(js_name = quenchCurve)]
pub fn quench_curve_js(len: usize, delta: f64, g2x: f64, g2y: f64, t_max: f64, dt: f64) -> String {
    render(quench_curve(len, delta, g2x, g2y, t_max, dt))
}

#[wasm_bindgen(js_name = overlapSpectrum)]
pub fn overlap_spectrum_js(len: usize, delta: f64, g2x: f64, g2y: f64) -> String {
    render(overlap_spectrum(len, delta, g2x, g2y))
}

#[wasm_bindgen(js_name = deffMap)]
pub fn deff_map_js(len: usize, half_width: f64, step: f64) -> String {
    render(deff_map(len, half_width, step))
}
