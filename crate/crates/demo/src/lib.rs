//! Browser bindings for the demo page in `www/`.
//!
//! Each exported function takes plain numbers, runs one small experiment on
//! simulated data and returns a JSON string. The `*_json` Rust functions do
//! the work and are what the native tests call.

use causal_cohort::cohort::{discretize, quantile_edges, Cell, CohortTable, Variable};
use causal_cohort::discovery::{Learner, LearnerConfig, StructureLearner};
use causal_cohort::effect::{ate_stratified, EstimateSpec};
use causal_cohort::ensemble::{force_dag, majority_vote};
use causal_cohort::graph::{cpdag_of, structural_hamming_distance, Cpdag};
use causal_cohort::refute::{refute_all, RefuteConfig};
use causal_cohort::scm::{fixtures, interventional_mean, sample, Scm, Value};
use causal_cohort::{Error, Result};
use serde_json::{json, Value as Json};
use wasm_bindgen::prelude::*;

const Z_BINS: usize = 20;
const DOSE_EDGES: [f64; 2] = [-1.0, 1.0];

/// `Z -> T -> Y` with `Z -> Y`; the three coefficients are the knobs.
fn confounded_scm(confounding: f64, effect: f64, z_on_y: f64) -> Result<Scm> {
    if ![confounding, effect, z_on_y].iter().all(|x| x.is_finite()) {
        return Err(Error::Config("coefficients must be finite".into()));
    }
    let text = json!({
        "nodes": [
            {"name": "Z", "mechanism": {"type": "linear_gaussian", "noise_sd": 1.0}},
            {"name": "T", "role": "treatment",
             "mechanism": {"type": "linear_gaussian", "weights": {"Z": confounding}, "noise_sd": 1.0}},
            {"name": "Y", "role": "primary_outcome",
             "mechanism": {"type": "linear_gaussian", "weights": {"T": effect, "Z": z_on_y}, "noise_sd": 1.0}}
        ],
        "edges": [["Z", "T"], ["Z", "Y"], ["T", "Y"]]
    });
    Scm::from_json_str(&text.to_string())
}

/// Bins T at -1 and 1 and Z at its quantiles, keeping the raw dose as a
/// continuous `dose` column so contrasts can be expressed per unit.
fn binned(table: &CohortTable) -> Result<CohortTable> {
    let dose: Vec<Cell> = table.column(table.index_of("T")?).collect();
    let table = table.with_column(Variable::continuous("dose"), dose)?;
    let table = discretize(&table, "T", &DOSE_EDGES)?;
    let z: Vec<f64> = table.numeric("Z")?.into_iter().flatten().collect();
    discretize(&table, "Z", &quantile_edges(&z, Z_BINS))
}

fn per_unit(table: &CohortTable, adjustment: &[&str]) -> Result<(f64, f64)> {
    let y = ate_stratified(table, "T", "Y", adjustment, "bin2", "bin0")?.value;
    let dose = ate_stratified(table, "T", "dose", adjustment, "bin2", "bin0")?.value;
    Ok((y, dose))
}

fn check_n(n: usize) -> Result<()> {
    if n < 100 {
        return Err(Error::TooFewRows { needed: 100, have: n });
    }
    Ok(())
}

/// Naive and backdoor-adjusted effect of T on Y, per unit of T.
pub fn confounding_json(n: usize, seed: u64, confounding: f64, effect: f64, z_on_y: f64) -> Result<Json> {
    check_n(n)?;
    let scm = confounded_scm(confounding, effect, z_on_y)?;
    let table = binned(&sample(&scm, n, seed))?;
    let (naive_y, naive_dose) = per_unit(&table, &[])?;
    let (adj_y, adj_dose) = per_unit(&table, &["Z"])?;
    let truth = effect;
    // Monte Carlo check of the truth: E[Y | do(T = 1)] - E[Y | do(T = 0)]
    let mean = |t: f64| interventional_mean(&scm, "T", &Value::Real(t), "Y", n, seed);
    let interventional = mean(1.0)? - mean(0.0)?;
    Ok(json!({
        "n": n,
        "truth": truth,
        "interventional": interventional,
        "naive": naive_y / naive_dose,
        "adjusted": adj_y / adj_dose,
        "naive_bias": naive_y / naive_dose - truth,
        "adjusted_bias": adj_y / adj_dose - truth,
    }))
}

fn fixture(name: &str) -> Result<Scm> {
    match name {
        "fixture_b" => Ok(fixtures::fixture_b()),
        "chain_3" => Ok(fixtures::chain()),
        "collider_3" => Ok(fixtures::collider()),
        other => fixtures::four_node_suite()
            .into_iter()
            .find(|(n, _)| *n == other)
            .map(|(_, s)| s)
            .ok_or_else(|| Error::Config(format!("unknown model `{other}`"))),
    }
}

/// Names accepted by [`learn_json`].
pub fn model_names() -> Vec<&'static str> {
    let mut names = vec!["fixture_b", "chain_3", "collider_3"];
    names.extend(fixtures::four_node_suite().into_iter().map(|(n, _)| n));
    names
}

/// `shd` is measured on the equivalence class, so a DAG learner that picks
/// another member of the true class scores 0.
fn graph_json(g: &Cpdag, class: &Cpdag, truth: &Cpdag) -> Result<Json> {
    Ok(json!({
        "graph": g.to_json(),
        "shd": structural_hamming_distance(class, truth)?,
    }))
}

/// Runs every built-in learner on a sample of `model`, then votes.
pub fn learn_json(model: &str, n: usize, seed: u64, threshold: f64, alpha: f64) -> Result<Json> {
    check_n(n)?;
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::Config(format!("threshold must lie in [0, 1), got {threshold}")));
    }
    let scm = fixture(model)?;
    let table = sample(&scm, n, seed);
    let truth = cpdag_of(scm.graph());
    let config = LearnerConfig { alpha, ..LearnerConfig::default() };
    config.validate()?;
    let mut learners = Vec::new();
    let mut votes = Vec::new();
    for learner in Learner::ALL {
        let g = learner.learn(&table, &config)?;
        let vote = if learner == Learner::Pc { g.clone() } else { cpdag_of(&g.to_dag()?) };
        learners.push(json!({"name": learner.as_str(), "result": graph_json(&g, &vote, &truth)?}));
        votes.push(vote);
    }
    let consensus = majority_vote(&votes, threshold)?;
    let order: Vec<&str> = scm.variables().iter().map(|v| v.name.as_str()).collect();
    let dag = force_dag(&consensus, &order)?;
    Ok(json!({
        "model": model,
        "truth": truth.to_json(),
        "learners": learners,
        "consensus": graph_json(&consensus, &consensus, &truth)?,
        "consensus_dag": dag.to_json(),
    }))
}

/// The four refuters on the FixtureB contrast, per unit of T.
pub fn refute_json(n: usize, seed: u64, strength_t: f64, strength_y: f64) -> Result<Json> {
    check_n(n)?;
    let table = binned(&sample(&fixtures::fixture_b(), n, seed))?;
    let (_, dose) = per_unit(&table, &["Z"])?;
    let spec = EstimateSpec::new("T", "Y", &["Z"], "bin2", "bin0").with_scale(1.0 / dose);
    let config = RefuteConfig { strength_t, strength_y, ..RefuteConfig::default() };
    let report = refute_all(&table, &spec, &config, seed)?;
    Ok(json!({"report": report, "lines": report.lines(), "passed": report.passed()}))
}

fn to_js(r: Result<Json>) -> std::result::Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&format!("{}: {e}", e.kind())))
}

#[wasm_bindgen]
pub fn confounding(n: usize, seed: u32, confounding: f64, effect: f64, z_on_y: f64) -> std::result::Result<String, JsError> {
    to_js(confounding_json(n, seed as u64, confounding, effect, z_on_y))
}

#[wasm_bindgen]
pub fn learn(model: &str, n: usize, seed: u32, threshold: f64, alpha: f64) -> std::result::Result<String, JsError> {
    to_js(learn_json(model, n, seed as u64, threshold, alpha))
}

#[wasm_bindgen]
pub fn refute(n: usize, seed: u32, strength_t: f64, strength_y: f64) -> std::result::Result<String, JsError> {
    to_js(refute_json(n, seed as u64, strength_t, strength_y))
}

#[wasm_bindgen]
pub fn models() -> String {
    serde_json::to_string(&model_names()).expect("strings serialise")
}
