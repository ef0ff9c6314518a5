//! WebAssembly bindings for the static demo page. Every function returns a
//! JSON string; errors come back as `{"error": "..."}`.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use fmark::estimators::{Characteristic, EstimationConfig, Estimator, StatisticRequest, Weight};
use fmark::geometry::{PointPattern, Window};
use fmark::inference::EnvelopeOptions;
use fmark::marks::FunctionalMarkSet;
use fmark::simulate::{
    simulate_growth_marks, simulate_pattern, GrowthMode, GrowthParams, Process, SimulationSpec, StraussSize,
};

fn process(name: &str) -> Result<Process, String> {
    Ok(match name {
        "poisson" => Process::Poisson { intensity: 200.0 },
        "thomas" => Process::Thomas {
            parent_intensity: 40.0,
            mean_offspring: 5.0,
            sigma: 0.04,
        },
        "strauss" => Process::Strauss {
            size: StraussSize::TargetCount(200.0),
            q: 0.05,
            r_int: 0.025,
            steps: 50_000,
        },
        other => return Err(format!("unknown process {other:?}")),
    })
}

fn mode(name: &str) -> Result<GrowthMode, String> {
    GrowthMode::from_name(name).ok_or_else(|| format!("unknown growth mode {name:?}"))
}

fn scenario(proc_name: &str, mode_name: &str, seed: u32) -> Result<(PointPattern, FunctionalMarkSet), String> {
    let spec = SimulationSpec {
        process: process(proc_name)?,
        window: Window::unit_torus(),
        seed: seed as u64,
    };
    let pattern = simulate_pattern(&spec).map_err(|e| e.to_string())?;
    let marks = simulate_growth_marks(&pattern, &GrowthParams::scenario(mode(mode_name)?)).map_err(|e| e.to_string())?;
    Ok((pattern, marks))
}

fn characteristic(name: &str) -> Result<Characteristic, String> {
    Ok(match name {
        "gamma_hl" => Characteristic::MarkVariogram,
        "kappa_hl" => Characteristic::MarkCorrelation,
        "tau_hl" => Characteristic::Differentiation,
        "cov_sto" => Characteristic::CovStoyan,
        "g_ground" => Characteristic::GroundPcf,
        "K_ground_centered" => Characteristic::GroundKCentered,
        "K_tf" => Characteristic::MarkWeightedK(Weight::Unit),
        other => return Err(format!("statistic {other:?} is not offered in the demo")),
    })
}

fn finite_or_null(v: &[f64]) -> Value {
    Value::Array(
        v.iter()
            .map(|x| if x.is_finite() { json!(x) } else { Value::Null })
            .collect(),
    )
}

fn respond(r: Result<Value, String>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

/// Points of a simulated scenario and both growth curves of every point.
#[wasm_bindgen]
pub fn simulate(process: &str, mode: &str, seed: u32) -> String {
    respond(scenario(process, mode, seed).map(|(p, m)| {
        let pts: Vec<[f64; 2]> = p.points().iter().map(|q| [q.x, q.y]).collect();
        let h: Vec<Value> = (0..p.len()).map(|i| finite_or_null(m.curve(i, 0))).collect();
        let l: Vec<Value> = (0..p.len()).map(|i| finite_or_null(m.curve(i, 1))).collect();
        json!({ "points": pts, "t": m.grid().values(), "f_h": h, "f_l": l })
    }))
}

/// One estimated curve for the scenario.
#[wasm_bindgen]
pub fn estimate(process: &str, mode: &str, seed: u32, statistic: &str) -> String {
    respond((|| {
        let (p, m) = scenario(process, mode, seed)?;
        let est = Estimator::new(&p, &EstimationConfig::default()).map_err(|e| e.to_string())?;
        let req = StatisticRequest::new(characteristic(statistic)?, 0, 1);
        let prep = est.prepare(&m, &req).map_err(|e| e.to_string())?;
        let c = est.evaluate(&m, &prep, None).map_err(|e| e.to_string())?;
        let theo = est.theoretical(&prep);
        Ok(json!({
            "r": c.r.values(),
            "observed": finite_or_null(&c.values),
            "theoretical": theo.as_deref().map(finite_or_null),
        }))
    })())
}

/// Random-labelling envelope for mark statistics, CSR envelope for point statistics.
#[wasm_bindgen]
pub fn envelope(process: &str, mode: &str, seed: u32, statistic: &str, nsim: u32, k_env: u32) -> String {
    respond((|| {
        let (p, m) = scenario(process, mode, seed)?;
        let est = Estimator::new(&p, &EstimationConfig::default()).map_err(|e| e.to_string())?;
        let ch = characteristic(statistic)?;
        let req = StatisticRequest::new(ch, 0, 1);
        let opts = EnvelopeOptions {
            nsim: nsim as usize,
            k_env: k_env as usize,
            seed: seed as u64 + 1,
        };
        let band = if ch.is_points_only() {
            est.csr_envelope(&req, &opts)
        } else {
            est.random_label_envelope(&m, &req, &opts)
        }
        .map_err(|e| e.to_string())?;
        Ok(json!({
            "r": band.r.values(),
            "observed": finite_or_null(&band.observed),
            "lower": finite_or_null(&band.lower),
            "upper": finite_or_null(&band.upper),
            "theoretical": band.theoretical.as_deref().map(finite_or_null),
            "null": band.null.name(),
            "outside": band.exit_fraction(),
        }))
    })())
}
