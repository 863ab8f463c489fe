//! Browser bindings. Each export takes plain numbers/strings and returns a
//! JSON string; errors come back as `{"error": kind, "message": ...}`.

use serde_json::{json, Value};
use sturm_core::cauchy::{cauchy_from_problem, CauchyOptions};
use sturm_core::config::Config;
use sturm_core::inverse::{invert_report, InverseOptions};
use sturm_core::presets::{preset, PRESETS};
use sturm_core::spectrum::{forward_spectrum, SpectrumOptions};
use sturm_core::sweep::{perturb_spectral, Family};
use sturm_core::{Error, C64};
use wasm_bindgen::prelude::wasm_bindgen;

// coarse enough to keep the page responsive
const DEMO_NX: usize = 129;

fn config(n_max: usize) -> Config {
    let mut c = Config::default();
    c.forward.n_x = DEMO_NX;
    c.spectrum.n_max = n_max.max(1);
    c
}

fn parts(v: &[C64]) -> Value {
    json!({
        "re": v.iter().map(|z| z.re).collect::<Vec<_>>(),
        "im": v.iter().map(|z| z.im).collect::<Vec<_>>(),
    })
}

fn finish(r: Result<Value, Error>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.kind(), "message": e.to_string() }).to_string(),
    }
}

pub fn presets_value() -> Value {
    Value::Array(PRESETS.iter().map(|(n, d)| json!({ "name": n, "about": d })).collect())
}

pub fn spectrum_value(model: &str, n_max: usize) -> Result<Value, Error> {
    let cfg = config(n_max);
    let pr = preset(model, DEMO_NX)?;
    let sd = forward_spectrum(&pr, &SpectrumOptions::from(&cfg))?;
    let mult: Vec<usize> = (0..sd.len()).map(|i| sd.multiplicity_at(i)).collect();
    Ok(json!({
        "p": pr.p(),
        "n_head": sd.n_head,
        "eigenvalues": parts(&sd.eigenvalues),
        "weights": parts(&sd.weights),
        "multiplicity": mult,
        "x": pr.sigma.grid(),
        "sigma": parts(pr.sigma.values()),
    }))
}

/// Perturb the model's own spectral data and reconstruct with the model as
/// the reference problem.
pub fn reconstruct_value(model: &str, family: &str, t: f64, n_max: usize) -> Result<Value, Error> {
    let cfg = config(n_max);
    let fam: Family = family.parse()?;
    let pr = preset(model, DEMO_NX)?;
    let iopts = InverseOptions::from(&cfg);
    let sd = forward_spectrum(&pr, &iopts.spectrum)?;
    let target = perturb_spectral(&sd, fam, t)?;
    let run = invert_report(&pr, &target, &iopts)?;
    let r = &run.result;
    let d = &r.diagnostics;
    Ok(json!({
        "x": r.problem.sigma.grid(),
        "sigma_tilde": parts(pr.sigma.values()),
        "sigma": parts(r.problem.sigma.values()),
        "r1": parts(r.problem.polys.c()),
        "r2": parts(r.problem.polys.d()),
        "n_cut": d.n_cut,
        "delta": d.delta,
        "tail_l2": d.tail_l2,
        "min_condition": d.min_condition,
        "conditions": d.conditions,
        "verified": d.verification.map(|v| v.passed),
        "lambda_err": d.verification.map(|v| v.lambda_err),
        "alpha_rel_err": d.verification.map(|v| v.alpha_rel_err),
    }))
}

pub fn cauchy_value(model: &str, k_f: usize) -> Result<Value, Error> {
    let mut cfg = config(8);
    cfg.cauchy.k_f = k_f;
    let pr = preset(model, DEMO_NX)?;
    let cd = cauchy_from_problem(&pr, &CauchyOptions::from(&cfg))?;
    let n = 201;
    let t: Vec<f64> = (0..n).map(|i| std::f64::consts::PI * i as f64 / (n - 1) as f64).collect();
    Ok(json!({
        "t": t,
        "g": parts(&cd.g_samples(n)),
        "j": parts(&cd.j_samples(n)),
        "c": parts(&cd.c),
        "d": parts(&cd.d),
        "fit": { "residual_0": cd.fit.residual_0, "residual_1": cd.fit.residual_1, "held_out": cd.fit.held_out },
    }))
}

#[wasm_bindgen]
pub fn presets() -> String {
    presets_value().to_string()
}

#[wasm_bindgen]
pub fn spectrum(model: &str, n_max: usize) -> String {
    finish(spectrum_value(model, n_max))
}

#[wasm_bindgen]
pub fn reconstruct(model: &str, family: &str, t: f64, n_max: usize) -> String {
    finish(reconstruct_value(model, family, t, n_max))
}

#[wasm_bindgen]
pub fn cauchy(model: &str, k_f: usize) -> String {
    finish(cauchy_value(model, k_f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_spectrum() {
        let v: Value = serde_json::from_str(&spectrum("zero-p0", 4)).unwrap();
        let re = v["eigenvalues"]["re"].as_array().unwrap();
        assert_eq!(re.len(), 4);
        assert!((re[2].as_f64().unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn errors_are_json() {
        let v: Value = serde_json::from_str(&spectrum("nope", 4)).unwrap();
        assert_eq!(v["error"], "InvalidInput");
        let v: Value = serde_json::from_str(&reconstruct("zero-p0", "bogus", 0.1, 4)).unwrap();
        assert!(v["error"].is_string());
    }

    #[test]
    fn shifted_eigenvalue_reconstructs() {
        let v: Value = serde_json::from_str(&reconstruct("smooth-p0", "shift-eigenvalue:1", 0.01, 6)).unwrap();
        assert_eq!(v["verified"], true, "{v}");
    }
}
