//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export takes plain numbers, returns a JSON string, and reports bad
//! input as a thrown JS error. The same functions are callable natively,
//! which is how the tests exercise them.

use online_bisection::harness::{ExperimentConfig, Simulation};
use online_bisection::learner::{n_crit, stopping_side};
use online_bisection::noise::{NoiseKind, NoiseModel};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Longest horizon the page is allowed to request.
pub const MAX_HORIZON: u64 = 2_000_000;
const MAX_POINTS: u64 = 400;

#[derive(Serialize)]
struct Box2 {
    t: u64,
    phase: u32,
    lo: [f64; 2],
    hi: [f64; 2],
}

#[derive(Serialize)]
struct Trace {
    /// `(t, average error so far)`, thinned to at most a few hundred points.
    curve: Vec<(u64, f64)>,
    /// Query index at which each shrink took effect.
    shrinks: Vec<u64>,
    /// Box after every shrink, first two coefficients only.
    boxes: Vec<Box2>,
    target: Vec<f64>,
    final_side: f64,
    stopping_side: f64,
    oracle_calls: u64,
    contained: bool,
    converged: bool,
}

fn box2(sim: &Simulation, t: u64) -> Box2 {
    let iv = sim.learner().hypercube().intervals();
    let pick = |i: usize| iv.get(i).copied().unwrap_or(iv[0]);
    let (a, b) = (pick(0), pick(1));
    Box2 { t, phase: sim.learner().phase(), lo: [a.lo, b.lo], hi: [a.hi, b.hi] }
}

/// Runs the protocol and returns the error curve and the sequence of boxes.
pub fn simulate_json(ambient: usize, d: usize, horizon: u64, u: f64, mixture: f64, seed: u64) -> Result<String, String> {
    if horizon > MAX_HORIZON {
        return Err(format!("T = {horizon} exceeds the demo limit of {MAX_HORIZON}"));
    }
    let mut cfg = ExperimentConfig { ambient_dim: ambient, subspace_dim: d, horizon, seed, ..ExperimentConfig::default() };
    cfg.noise.u = u;
    cfg.query.mixture_weight = mixture;
    let mut sim = Simulation::new(&cfg).map_err(|e| e.to_string())?;

    let every = (horizon / MAX_POINTS).max(1);
    let mut curve = Vec::new();
    let mut shrinks = Vec::new();
    let mut boxes = vec![box2(&sim, 0)];
    for _ in 0..horizon {
        let (rec, out) = sim.step().map_err(|e| e.to_string())?;
        if out.shrank {
            shrinks.push(rec.t);
            boxes.push(box2(&sim, rec.t));
        }
        if rec.t % every == 0 || rec.t == horizon {
            curve.push((rec.t, rec.avg_error_so_far));
        }
    }
    let s = sim.summary();
    let trace = Trace {
        curve,
        shrinks,
        boxes,
        target: s.target_coeffs,
        final_side: s.final_side,
        stopping_side: stopping_side(horizon, d),
        oracle_calls: s.oracle_calls,
        contained: s.contained,
        converged: s.converged,
    };
    serde_json::to_string(&trace).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct NoiseRow {
    phase: u32,
    side: f64,
    delta_p: f64,
    p1: f64,
    n_crit: Option<f64>,
}

/// `delta_p`, `p1` and `N_crit` along the side-length schedule
/// `2 sqrt(D) (3/4)^k` until the stopping side is reached.
pub fn noise_schedule_json(kind: &str, u: f64, sigma: f64, ambient: usize, d: usize, horizon: u64) -> Result<String, String> {
    let kind: NoiseKind = kind.parse().map_err(|e: online_bisection::Error| e.to_string())?;
    let noise = NoiseModel::new(kind, u, sigma).map_err(|e| e.to_string())?;
    if ambient == 0 || d == 0 || d > ambient || horizon < 2 {
        return Err(format!("need 1 <= d <= D and T >= 2 (got D={ambient}, d={d}, T={horizon})"));
    }
    let stop = stopping_side(horizon, d);
    let mut side = 2.0 * (ambient as f64).sqrt();
    let mut rows = Vec::new();
    for phase in 0..200 {
        let dp = noise.delta_p(side, ambient);
        rows.push(NoiseRow { phase, side, delta_p: dp, p1: noise.p1(side, ambient), n_crit: n_crit(horizon, dp).ok() });
        if side <= stop {
            break;
        }
        side *= 0.75;
    }
    serde_json::to_string(&rows).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn simulate(ambient: usize, d: usize, horizon: u64, u: f64, mixture: f64, seed: u64) -> Result<String, JsError> {
    simulate_json(ambient, d, horizon, u, mixture, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn noise_schedule(kind: &str, u: f64, sigma: f64, ambient: usize, d: usize, horizon: u64) -> Result<String, JsError> {
    noise_schedule_json(kind, u, sigma, ambient, d, horizon).map_err(|e| JsError::new(&e))
}
