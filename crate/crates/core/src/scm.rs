//! Structural causal models with known ground truth.
//!
//! An [`Scm`] pairs a [`Dag`] with one [`Mechanism`] per node. Sampling
//! walks the graph in topological order, so every draw is a deterministic
//! function of the seed. Interventions replace a node's mechanism by a
//! constant before sampling.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cohort::{Cell, CohortTable, Role, VarKind, Variable};
use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::rng;

/// Coefficient of one parent: a scalar for a continuous parent, one weight
/// per level (one-hot) for a categorical parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coef {
    Scalar(f64),
    OneHot(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelScore {
    #[serde(default)]
    pub intercept: f64,
    #[serde(default)]
    pub weights: BTreeMap<String, Coef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mechanism {
    /// `intercept + Σ w·parent + noise_sd·ε`, `ε ~ N(0, 1)`.
    LinearGaussian {
        #[serde(default)]
        intercept: f64,
        #[serde(default)]
        weights: BTreeMap<String, Coef>,
        noise_sd: f64,
    },
    /// Softmax over one linear score per level.
    CategoricalLogit { levels: Vec<String>, scores: Vec<LevelScore> },
}

impl Mechanism {
    pub fn linear(intercept: f64, weights: &[(&str, f64)], noise_sd: f64) -> Self {
        Mechanism::LinearGaussian {
            intercept,
            weights: weights.iter().map(|(k, w)| (k.to_string(), Coef::Scalar(*w))).collect(),
            noise_sd,
        }
    }

    fn parent_names(&self) -> BTreeSet<&str> {
        match self {
            Mechanism::LinearGaussian { weights, .. } => weights.keys().map(String::as_str).collect(),
            Mechanism::CategoricalLogit { scores, .. } => scores
                .iter()
                .flat_map(|s| s.weights.keys().map(String::as_str))
                .collect(),
        }
    }
}

/// A value to clamp a node to.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Real(f64),
    Level(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scm {
    graph: Dag,
    /// indexed like `graph.nodes()`
    mechanisms: Vec<Mechanism>,
    /// table columns, in declaration order
    variables: Vec<Variable>,
}

impl Scm {
    /// `nodes` gives the column order of sampled tables; roles default to covariate.
    pub fn new(graph: Dag, nodes: Vec<(String, Mechanism)>) -> Result<Self> {
        let specs = nodes
            .into_iter()
            .map(|(name, mechanism)| NodeSpec {
                name,
                role: Role::Covariate,
                unit: None,
                mechanism,
            })
            .collect();
        Self::build(graph, specs)
    }

    fn build(graph: Dag, nodes: Vec<NodeSpec>) -> Result<Self> {
        if nodes.len() != graph.n() {
            return Err(Error::Schema("every graph node needs exactly one mechanism".into()));
        }
        let mut by_index: Vec<Option<Mechanism>> = vec![None; graph.n()];
        let mut variables = Vec::with_capacity(nodes.len());
        for spec in &nodes {
            let i = graph.index(&spec.name)?;
            if by_index[i].is_some() {
                return Err(Error::Schema(format!("duplicate mechanism for `{}`", spec.name)));
            }
            by_index[i] = Some(spec.mechanism.clone());
            let kind = match &spec.mechanism {
                Mechanism::LinearGaussian { .. } => VarKind::Continuous {
                    unit: spec.unit.clone().unwrap_or_default(),
                },
                Mechanism::CategoricalLogit { levels, .. } => VarKind::Categorical { levels: levels.clone() },
            };
            variables.push(Variable {
                name: spec.name.clone(),
                kind,
                role: spec.role,
            });
        }
        let mechanisms: Vec<Mechanism> = by_index.into_iter().map(|m| m.expect("all assigned")).collect();
        let scm = Scm {
            graph,
            mechanisms,
            variables,
        };
        scm.validate()?;
        Ok(scm)
    }

    fn validate(&self) -> Result<()> {
        for (i, mech) in self.mechanisms.iter().enumerate() {
            let name = self.graph.name(i);
            let declared = mech.parent_names();
            let actual: BTreeSet<&str> = self.graph.parents(i).iter().map(|&p| self.graph.name(p)).collect();
            if declared != actual {
                return Err(Error::Schema(format!(
                    "mechanism parents of `{name}` {declared:?} differ from graph parents {actual:?}"
                )));
            }
            let check_weights = |weights: &BTreeMap<String, Coef>| -> Result<()> {
                for (parent, coef) in weights {
                    let p = self.graph.index(parent)?;
                    match (&self.mechanisms[p], coef) {
                        (Mechanism::LinearGaussian { .. }, Coef::Scalar(w)) if w.is_finite() => {}
                        (Mechanism::CategoricalLogit { levels, .. }, Coef::OneHot(ws))
                            if ws.len() == levels.len() && ws.iter().all(|w| w.is_finite()) => {}
                        _ => {
                            return Err(Error::Schema(format!(
                                "coefficient of `{parent}` in `{name}` must be a scalar for a continuous parent \
                                 and one weight per level for a categorical parent"
                            )))
                        }
                    }
                }
                Ok(())
            };
            match mech {
                Mechanism::LinearGaussian {
                    intercept,
                    weights,
                    noise_sd,
                } => {
                    if !(noise_sd.is_finite() && *noise_sd > 0.0) || !intercept.is_finite() {
                        return Err(Error::Schema(format!("`{name}` needs finite intercept and noise_sd > 0")));
                    }
                    check_weights(weights)?;
                }
                Mechanism::CategoricalLogit { levels, scores } => {
                    if levels.len() < 2 || levels.iter().collect::<BTreeSet<_>>().len() != levels.len() {
                        return Err(Error::Schema(format!("`{name}` needs at least two distinct levels")));
                    }
                    if scores.len() != levels.len() {
                        return Err(Error::Schema(format!("`{name}` needs one score per level")));
                    }
                    for s in scores {
                        if !s.intercept.is_finite() {
                            return Err(Error::Schema(format!("non-finite intercept in `{name}`")));
                        }
                        check_weights(&s.weights)?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn graph(&self) -> &Dag {
        &self.graph
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn mechanism(&self, name: &str) -> Result<&Mechanism> {
        Ok(&self.mechanisms[self.graph.index(name)?])
    }

    pub fn with_role(mut self, name: &str, role: Role) -> Result<Self> {
        let v = self
            .variables
            .iter_mut()
            .find(|v| v.name == name)
            .ok_or_else(|| Error::UnknownNode(name.to_owned()))?;
        v.role = role;
        Ok(self)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ScmFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_file(&self) -> ScmFile {
        ScmFile {
            nodes: self
                .variables
                .iter()
                .map(|v| NodeSpec {
                    name: v.name.clone(),
                    role: v.role,
                    unit: match &v.kind {
                        VarKind::Continuous { unit } if !unit.is_empty() => Some(unit.clone()),
                        _ => None,
                    },
                    mechanism: self.mechanisms[self.graph.index(&v.name).expect("known")].clone(),
                })
                .collect(),
            edges: self.graph.edge_names(),
        }
    }

    fn draw_row(&self, order: &[usize], clamp: Option<(usize, Cell)>, rng: &mut rng::Rng) -> Vec<Cell> {
        let mut row = vec![Cell::Missing; self.graph.n()];
        for &i in order {
            if let Some((c, value)) = clamp {
                if c == i {
                    row[i] = value;
                    continue;
                }
            }
            let contribution = |weights: &BTreeMap<String, Coef>, row: &[Cell]| -> f64 {
                weights
                    .iter()
                    .map(|(parent, coef)| {
                        let p = self.graph.index(parent).expect("validated");
                        match (coef, row[p]) {
                            (Coef::Scalar(w), Cell::Real(x)) => w * x,
                            (Coef::OneHot(ws), Cell::Level(l)) => ws[l as usize],
                            _ => unreachable!("parents are sampled first and kinds are validated"),
                        }
                    })
                    .sum()
            };
            row[i] = match &self.mechanisms[i] {
                Mechanism::LinearGaussian {
                    intercept,
                    weights,
                    noise_sd,
                } => {
                    let eps: f64 = StandardNormal.sample(rng);
                    Cell::Real(intercept + contribution(weights, &row) + noise_sd * eps)
                }
                Mechanism::CategoricalLogit { scores, .. } => {
                    let s: Vec<f64> = scores.iter().map(|ls| ls.intercept + contribution(&ls.weights, &row)).collect();
                    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let w: Vec<f64> = s.iter().map(|x| (x - max).exp()).collect();
                    let total: f64 = w.iter().sum();
                    let u: f64 = rng.random::<f64>() * total;
                    let mut acc = 0.0;
                    let mut pick = w.len() - 1;
                    for (k, wk) in w.iter().enumerate() {
                        acc += wk;
                        if u < acc {
                            pick = k;
                            break;
                        }
                    }
                    Cell::Level(pick as u32)
                }
            };
        }
        row
    }

    fn sample_inner(&self, n: usize, seed: u64, clamp: Option<(usize, Cell)>) -> CohortTable {
        let order = self.graph.topological_order_idx();
        let mut rng = rng::seeded(seed);
        // graph index -> column
        let cols: Vec<usize> = self
            .variables
            .iter()
            .map(|v| self.graph.index(&v.name).expect("known"))
            .collect();
        let rows = (0..n)
            .map(|_| {
                let row = self.draw_row(&order, clamp, &mut rng);
                cols.iter().map(|&i| row[i]).collect()
            })
            .collect();
        CohortTable::new(self.variables.clone(), rows).expect("sampled cells match their variables")
    }

    fn clamp_cell(&self, node: usize, value: &Value) -> Result<Cell> {
        match (&self.mechanisms[node], value) {
            (Mechanism::LinearGaussian { .. }, Value::Real(x)) if x.is_finite() => Ok(Cell::Real(*x)),
            (Mechanism::CategoricalLogit { levels, .. }, Value::Level(l)) => levels
                .iter()
                .position(|x| x == l)
                .map(|i| Cell::Level(i as u32))
                .ok_or_else(|| Error::UnknownTreatmentLevel {
                    variable: self.graph.name(node).to_owned(),
                    level: l.clone(),
                }),
            _ => Err(Error::BadCell(format!(
                "intervention value {value:?} does not match `{}`",
                self.graph.name(node)
            ))),
        }
    }
}

/// `n` observational rows, deterministic in `seed`.
pub fn sample(scm: &Scm, n: usize, seed: u64) -> CohortTable {
    scm.sample_inner(n, seed, None)
}

/// `n` rows from the model with `node` clamped to `value`.
pub fn sample_do(scm: &Scm, node: &str, value: &Value, n: usize, seed: u64) -> Result<CohortTable> {
    let i = scm.graph.index(node)?;
    let cell = scm.clamp_cell(i, value)?;
    Ok(scm.sample_inner(n, seed, Some((i, cell))))
}

/// Monte-Carlo estimate of `E[target | do(node = value)]`. Categorical
/// targets contribute their level index.
pub fn interventional_mean(scm: &Scm, node: &str, value: &Value, target: &str, n: usize, seed: u64) -> Result<f64> {
    scm.graph.index(target)?;
    if node == target {
        return Err(Error::Config("intervention node and target must differ".into()));
    }
    let table = sample_do(scm, node, value, n, seed)?;
    let values: Vec<f64> = table.numeric(target)?.into_iter().flatten().collect();
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// On-disk SCM definition.
///
/// ```json
/// {
///   "nodes": [
///     {"name": "Z", "mechanism": {"type": "linear_gaussian", "noise_sd": 1.0}},
///     {"name": "T", "role": "treatment",
///      "mechanism": {"type": "linear_gaussian", "weights": {"Z": 0.8}, "noise_sd": 1.0}}
///   ],
///   "edges": [["Z", "T"]]
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScmFile {
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub name: String,
    #[serde(default = "covariate")]
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    pub mechanism: Mechanism,
}

fn covariate() -> Role {
    Role::Covariate
}

impl TryFrom<ScmFile> for Scm {
    type Error = Error;

    fn try_from(file: ScmFile) -> Result<Self> {
        let edges: Vec<(&str, &str)> = file.edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let graph = Dag::new(file.nodes.iter().map(|n| n.name.as_str()), &edges)?;
        Scm::build(graph, file.nodes)
    }
}

/// Built-in models used by tests, the demo and the documentation.
pub mod fixtures {
    use super::*;

    fn linear_scm(nodes: &[&str], edges: &[(&str, &str, f64)]) -> Scm {
        let graph = Dag::new(nodes, &edges.iter().map(|&(a, b, _)| (a, b)).collect::<Vec<_>>()).expect("fixture DAG");
        let mechs = nodes
            .iter()
            .map(|&n| {
                let w: Vec<(&str, f64)> = edges.iter().filter(|e| e.1 == n).map(|&(a, _, w)| (a, w)).collect();
                (n.to_owned(), Mechanism::linear(0.0, &w, 1.0))
            })
            .collect();
        Scm::new(graph, mechs).expect("fixture SCM")
    }

    /// Confounded treatment: `Z ~ N(0,1)`, `T = 0.8 Z + ε`, `Y = 1.5 T + Z + ε'`.
    pub fn fixture_b() -> Scm {
        linear_scm(&["Z", "T", "Y"], &[("Z", "T", 0.8), ("Z", "Y", 1.0), ("T", "Y", 1.5)])
            .with_role("T", Role::Treatment)
            .and_then(|s| s.with_role("Y", Role::PrimaryOutcome))
            .expect("known nodes")
    }

    /// `X -> Y -> Z`.
    pub fn chain() -> Scm {
        linear_scm(&["X", "Y", "Z"], &[("X", "Y", 0.8), ("Y", "Z", 0.8)])
    }

    /// `A -> C <- B`.
    pub fn collider() -> Scm {
        linear_scm(&["A", "B", "C"], &[("A", "C", 0.8), ("B", "C", 0.8)])
    }

    /// Two unrelated standard normals.
    pub fn independent_pair() -> Scm {
        linear_scm(&["X", "Y"], &[])
    }

    /// Four-node linear Gaussian models with well-separated effects.
    pub fn four_node_suite() -> Vec<(&'static str, Scm)> {
        let nodes = ["A", "B", "C", "D"];
        vec![
            ("chain", linear_scm(&nodes, &[("A", "B", 0.8), ("B", "C", 0.8), ("C", "D", 0.8)])),
            ("collider_tail", linear_scm(&nodes, &[("A", "C", 0.8), ("B", "C", 0.8), ("C", "D", 0.8)])),
            (
                "diamond",
                linear_scm(&nodes, &[("A", "B", 0.8), ("A", "C", 0.8), ("B", "D", 0.8), ("C", "D", 0.8)]),
            ),
            ("two_roots", linear_scm(&nodes, &[("A", "C", 0.8), ("B", "C", 0.8), ("B", "D", 0.8)])),
            (
                "confounded_chain",
                linear_scm(&nodes, &[("A", "B", 0.8), ("A", "C", 0.8), ("B", "C", 0.8), ("C", "D", 0.8)]),
            ),
        ]
    }

    /// Three-arm treatment that depends on a confounder but has no effect on
    /// either outcome.
    pub fn three_arm_null() -> Scm {
        let text = r#"{
          "nodes": [
            {"name": "age", "mechanism": {"type": "linear_gaussian", "noise_sd": 1.0}},
            {"name": "drug_group", "role": "treatment", "mechanism": {"type": "categorical_logit",
              "levels": ["Haloperidol", "NoDrug", "OtherDrug"],
              "scores": [{"weights": {"age": 0.8}}, {}, {"weights": {"age": -0.4}}]}},
            {"name": "los_days", "role": "secondary_outcome",
             "mechanism": {"type": "linear_gaussian", "intercept": 5.0, "weights": {"age": 1.0}, "noise_sd": 1.0}},
            {"name": "death_in_hosp", "role": "primary_outcome", "mechanism": {"type": "categorical_logit",
              "levels": ["no", "yes"], "scores": [{}, {"intercept": -1.0, "weights": {"age": 0.7}}]}}
          ],
          "edges": [["age", "drug_group"], ["age", "los_days"], ["age", "death_in_hosp"]]
        }"#;
        Scm::from_json_str(text).expect("fixture SCM")
    }

    /// Three-arm treatment with real effects, for demos and end-to-end runs.
    pub fn three_arm_effect() -> Scm {
        let text = r#"{
          "nodes": [
            {"name": "age", "mechanism": {"type": "linear_gaussian", "noise_sd": 1.0}},
            {"name": "drug_group", "role": "treatment", "mechanism": {"type": "categorical_logit",
              "levels": ["Haloperidol", "NoDrug", "OtherDrug"],
              "scores": [{"weights": {"age": 0.8}}, {}, {"weights": {"age": -0.4}}]}},
            {"name": "los_days", "role": "secondary_outcome",
             "mechanism": {"type": "linear_gaussian", "intercept": 5.0,
               "weights": {"age": 1.0, "drug_group": [2.0, 0.0, 1.5]}, "noise_sd": 1.0}}
          ],
          "edges": [["age", "drug_group"], ["age", "los_days"], ["drug_group", "los_days"]]
        }"#;
        Scm::from_json_str(text).expect("fixture SCM")
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn moments(table: &CohortTable, name: &str) -> (f64, f64) {
        let v: Vec<f64> = table.numeric(name).unwrap().into_iter().flatten().collect();
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
    }

    #[test]
    fn empty_sample_keeps_schema() {
        let t = sample(&fixture_b(), 0, 1);
        assert_eq!(t.n_rows(), 0);
        let names: Vec<&str> = t.variables().iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, ["Z", "T", "Y"]);
        assert_eq!(t.variable("T").unwrap().role, Role::Treatment);
    }

    #[test]
    fn sampling_is_seeded() {
        assert_eq!(sample(&fixture_b(), 50, 7), sample(&fixture_b(), 50, 7));
        assert_ne!(sample(&fixture_b(), 50, 7), sample(&fixture_b(), 50, 8));
    }

    #[test]
    fn fixture_b_outcome_variance() {
        // var(Y) = (1.5*0.8 + 1)^2 + 1.5^2 + 1 = 8.09
        let t = sample(&fixture_b(), 100_000, 11);
        let (_, var_y) = moments(&t, "Y");
        assert!((var_y - 8.09).abs() < 0.15, "var(Y) = {var_y}");
    }

    #[test]
    fn root_moments_within_five_standard_errors() {
        let n = 100_000;
        let t = sample(&fixture_b(), n, 3);
        let (m, v) = moments(&t, "Z");
        assert!(m.abs() < 5.0 / (n as f64).sqrt());
        // se of the sample variance of a standard normal is sqrt(2/(n-1))
        assert!((v - 1.0).abs() < 5.0 * (2.0 / (n as f64 - 1.0)).sqrt());
    }

    #[test]
    fn interventions_on_fixture_b() {
        let scm = fixture_b();
        let n = 200_000;
        let hi = interventional_mean(&scm, "T", &Value::Real(1.0), "Y", n, 5).unwrap();
        let lo = interventional_mean(&scm, "T", &Value::Real(0.0), "Y", n, 6).unwrap();
        assert!((hi - lo - 1.5).abs() < 0.03, "{}", hi - lo);
        assert!(lo.abs() < 0.03, "{lo}");
    }

    #[test]
    fn intervening_without_causal_path_changes_nothing() {
        // the collider's root A has no path into B
        let scm = collider();
        let obs = moments(&sample(&scm, 100_000, 1), "B").0;
        let intervened = interventional_mean(&scm, "A", &Value::Real(3.0), "B", 100_000, 1).unwrap();
        assert!((obs - intervened).abs() < 0.03);
    }

    #[test]
    fn no_backdoor_means_observational_equals_interventional() {
        // chain X -> Y -> Z: E[Z | Y = y] = 0.8 y = E[Z | do(Y = y)]
        let scm = chain();
        let t = sample(&scm, 200_000, 2);
        let ys = t.numeric("Y").unwrap();
        let zs = t.numeric("Z").unwrap();
        let (mut sum, mut cnt) = (0.0, 0usize);
        for (y, z) in ys.iter().zip(&zs) {
            if (y.unwrap() - 1.0).abs() < 0.05 {
                sum += z.unwrap();
                cnt += 1;
            }
        }
        let cond = sum / cnt as f64;
        let intervened = interventional_mean(&scm, "Y", &Value::Real(1.0), "Z", 200_000, 4).unwrap();
        let se = (1.0 / cnt as f64).sqrt();
        assert!((cond - intervened).abs() < 4.0 * se + 0.01, "{cond} vs {intervened}");
    }

    #[test]
    fn intervention_errors() {
        let scm = fixture_b();
        assert!(matches!(
            interventional_mean(&scm, "Q", &Value::Real(0.0), "Y", 10, 1),
            Err(Error::UnknownNode(_))
        ));
        assert!(interventional_mean(&scm, "Y", &Value::Real(0.0), "Y", 10, 1).is_err());
        assert!(interventional_mean(&scm, "T", &Value::Level("x".into()), "Y", 10, 1).is_err());
    }

    #[test]
    fn categorical_logit_follows_softmax() {
        let scm = three_arm_null();
        // at age clamped to 0 all drug scores are 0: uniform over three arms
        let t = sample_do(&scm, "age", &Value::Real(0.0), 30_000, 9).unwrap();
        let col = t.index_of("drug_group").unwrap();
        let mut counts = [0usize; 3];
        for c in t.column(col) {
            if let Cell::Level(l) = c {
                counts[l as usize] += 1;
            }
        }
        for c in counts {
            assert!((c as f64 / 30_000.0 - 1.0 / 3.0).abs() < 0.015, "{counts:?}");
        }
    }

    #[test]
    fn mechanism_parents_must_match_graph() {
        let g = Dag::new(["A", "B"], &[("A", "B")]).unwrap();
        let bad = Scm::new(
            g.clone(),
            vec![
                ("A".into(), Mechanism::linear(0.0, &[], 1.0)),
                ("B".into(), Mechanism::linear(0.0, &[], 1.0)),
            ],
        );
        assert!(bad.is_err());
        let bad_sd = Scm::new(
            g,
            vec![
                ("A".into(), Mechanism::linear(0.0, &[], 0.0)),
                ("B".into(), Mechanism::linear(0.0, &[("A", 1.0)], 1.0)),
            ],
        );
        assert!(bad_sd.is_err());
    }

    #[test]
    fn json_definition_round_trips() {
        let scm = three_arm_effect();
        let text = serde_json::to_string_pretty(&scm.to_file()).unwrap();
        assert_eq!(Scm::from_json_str(&text).unwrap(), scm);
        let typo = text.replace("noise_sd", "noise_std");
        assert!(Scm::from_json_str(&typo).is_err());
    }
}
