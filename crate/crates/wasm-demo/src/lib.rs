//! Browser bindings for the demo page in `www/`. Each export takes plain
//! numbers and strings and returns a JSON string; the `*_json` functions
//! hold the logic so it can be tested natively.

use flowfire::explore::{explore, ExploreBounds};
use flowfire::render::{ascii, svg};
use flowfire::strategies::{
    classify, flood_escape, quadrant_stabilize, regime2_reach_aztec, stabilize_any, Decomposition,
};
use flowfire::{firing, MarkedConfig};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest n or r the page accepts; bigger pulses take too long in a tab.
pub const MAX_SIZE: u32 = 12;

fn check_size(n: u32, r: u32) -> Result<(), String> {
    if n > MAX_SIZE || r > MAX_SIZE {
        return Err(format!("n and r must be at most {MAX_SIZE}"));
    }
    Ok(())
}

fn picture(c: &MarkedConfig) -> serde_json::Value {
    json!({
        "config": c,
        "ascii": ascii(c),
        "svg": svg(c),
        "stable": firing::is_stable(c),
        "is_aztec": *c == MarkedConfig::aztec(c.n()),
    })
}

pub fn classify_json(n: u32, r: u32) -> String {
    serde_json::to_string(&classify(n, r)).expect("report serializes")
}

/// Runs one schedule from the pulse K(n, r). `policy` is `first`, `flood`,
/// `quadrant:d1`, `quadrant:d2` or `rows` (row firing then completion).
pub fn stabilize_json(n: u32, r: u32, policy: &str) -> Result<String, String> {
    check_size(n, r)?;
    let start = MarkedConfig::pulse(n, r);
    let (end, moves) = match policy {
        "first" => {
            let run = stabilize_any(&start).map_err(|e| e.to_string())?;
            (run.config, run.trace.len())
        }
        "flood" => {
            let flood = flood_escape(&start, n).map_err(|e| e.to_string())?;
            let rest = stabilize_any(&flood.config).map_err(|e| e.to_string())?;
            (rest.config, flood.trace.len() + rest.trace.len())
        }
        "quadrant:d1" | "quadrant:d2" => {
            let d = if policy.ends_with("d1") {
                Decomposition::D1
            } else {
                Decomposition::D2
            };
            let run = quadrant_stabilize(n, r, d).map_err(|e| e.to_string())?;
            (run.config, run.trace.len())
        }
        "rows" => {
            let run = regime2_reach_aztec(n, r).map_err(|e| e.to_string())?;
            (run.config, run.trace.len())
        }
        other => return Err(format!("unknown policy {other:?}")),
    };
    let mut v = picture(&end);
    v["moves"] = json!(moves);
    Ok(v.to_string())
}

/// Exhaustive search from K(n, r), single-threaded, stopping after
/// `max_states` orbits.
pub fn explore_json(n: u32, r: u32, max_states: u32) -> Result<String, String> {
    check_size(n, r)?;
    let start = MarkedConfig::pulse(n, r);
    let b = ExploreBounds::for_config(&start)
        .with_max_states(max_states as usize)
        .with_threads(1);
    let res = explore(&start, &b).map_err(|e| e.to_string())?;
    let terminals: Vec<_> = res
        .terminals
        .iter()
        .map(|t| {
            let mut v = picture(&t.config);
            v["depth"] = json!(t.depth);
            v
        })
        .collect();
    Ok(json!({
        "states_visited": res.states_visited,
        "depth_reached": res.depth_reached,
        "truncated": res.truncated,
        "truncation": res.truncation,
        "terminals": terminals,
    })
    .to_string())
}

#[wasm_bindgen(js_name = classify)]
pub fn classify_js(n: u32, r: u32) -> String {
    classify_json(n, r)
}

#[wasm_bindgen(js_name = stabilize)]
pub fn stabilize_js(n: u32, r: u32, policy: &str) -> Result<String, JsError> {
    stabilize_json(n, r, policy).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = explore)]
pub fn explore_js(n: u32, r: u32, max_states: u32) -> Result<String, JsError> {
    explore_json(n, r, max_states).map_err(|e| JsError::new(&e))
}
