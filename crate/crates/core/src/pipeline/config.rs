use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cohort::{Role, Variable};
use crate::discovery::{Learner, LearnerConfig};
use crate::effect::Contrast;
use crate::error::{Error, Result};
use crate::graph::GraphJson;
use crate::refute::RefuteConfig;

/// A whole study: where the data lives, its schema, and what to run.
///
/// Relative paths inside the document resolve against the directory of the
/// config file (or the working directory for in-memory configs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub data: DataSection,
    pub variables: Vec<Variable>,
    #[serde(default = "all_stages")]
    pub stages: Vec<Stage>,
    #[serde(default)]
    pub learners: LearnerSection,
    #[serde(default)]
    pub vote: VoteSection,
    #[serde(default)]
    pub estimation: EstimationSection,
    #[serde(default)]
    pub refutation: RefuteConfig,
    #[serde(default)]
    pub analytics: AnalyticsSection,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub csv: PathBuf,
    #[serde(default)]
    pub missing: MissingPolicy,
    /// level added to categorical variables under [`MissingPolicy::Level`]
    #[serde(default = "unknown_level")]
    pub missing_level: String,
}

fn unknown_level() -> String {
    "unknown".into()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    /// missing categorical cells become an explicit level; continuous
    /// missing cells stay missing
    #[default]
    Level,
    /// drop every row with any missing cell
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Explore,
    Analytics,
    Discover,
    Ensemble,
    Identify,
    Estimate,
    Refute,
}

impl Stage {
    /// Execution order, whatever order the config lists them in.
    pub const ORDER: [Stage; 7] = [
        Stage::Explore,
        Stage::Analytics,
        Stage::Discover,
        Stage::Ensemble,
        Stage::Identify,
        Stage::Estimate,
        Stage::Refute,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Explore => "explore",
            Stage::Analytics => "analytics",
            Stage::Discover => "discover",
            Stage::Ensemble => "ensemble",
            Stage::Identify => "identify",
            Stage::Estimate => "estimate",
            Stage::Refute => "refute",
        }
    }

    fn requires(self) -> Option<Stage> {
        match self {
            Stage::Ensemble => Some(Stage::Discover),
            Stage::Identify => Some(Stage::Ensemble),
            Stage::Estimate => Some(Stage::Identify),
            Stage::Refute => Some(Stage::Estimate),
            _ => None,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn all_stages() -> Vec<Stage> {
    Stage::ORDER.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSection {
    #[serde(rename = "use", default = "all_learners")]
    pub use_: Vec<Learner>,
    #[serde(default)]
    pub config: LearnerConfig,
    /// externally produced graphs that join the vote
    #[serde(default)]
    pub supplied: Vec<SuppliedGraph>,
}

fn all_learners() -> Vec<Learner> {
    Learner::ALL.to_vec()
}

impl Default for LearnerSection {
    fn default() -> Self {
        LearnerSection { use_: all_learners(), config: LearnerConfig::default(), supplied: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuppliedGraph {
    pub name: String,
    pub graph: GraphJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoteSection {
    pub threshold: f64,
    /// Order used to orient edges the vote leaves undirected; defaults to
    /// the declaration order of `variables`.
    pub orientation_order: Option<Vec<String>>,
    /// Built-in DAG learners vote with the CPDAG of the DAG they found
    /// instead of its arbitrary orientation within the equivalence class.
    pub equivalence_class: bool,
}

impl Default for VoteSection {
    fn default() -> Self {
        VoteSection { threshold: 0.5, orientation_order: None, equivalence_class: true }
    }
}

/// How to turn a continuous treatment or adjuster into strata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BinSpec {
    Edges(Vec<f64>),
    Quantiles { quantiles: usize },
    Rule(BinRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinRule {
    /// edges at every multiple of ten inside the observed range
    Decade,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationSection {
    pub contrasts: Vec<Contrast>,
    /// defaults to every variable with an outcome role, in declaration order
    pub outcomes: Option<Vec<String>>,
    /// per continuous variable; unlisted ones use decade bins
    pub bins: BTreeMap<String, BinSpec>,
    /// numeric codes for categorical outcomes with more than two levels
    pub ordinal: BTreeMap<String, BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticsSection {
    pub anova: Vec<AnovaSpec>,
    /// `None` skips the post hoc comparisons
    pub tukey_alpha: Option<f64>,
    pub correlation: bool,
    pub logreg: Option<LogregSpec>,
}

impl Default for AnalyticsSection {
    fn default() -> Self {
        AnalyticsSection { anova: Vec::new(), tukey_alpha: Some(0.05), correlation: true, logreg: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnovaSpec {
    pub group: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogregSpec {
    pub label: String,
    /// defaults to every variable except the label and `exclude_roles`
    #[serde(default)]
    pub features: Option<Vec<String>>,
    #[serde(default = "ten")]
    pub folds: usize,
    #[serde(default = "outcome_roles")]
    pub exclude_roles: Vec<Role>,
}

fn ten() -> usize {
    10
}

fn outcome_roles() -> Vec<Role> {
    vec![Role::PrimaryOutcome, Role::SecondaryOutcome]
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub refutation: u64,
    pub cv: u64,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl StudyConfig {
    pub fn from_json_str(json: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut config: StudyConfig = serde_json::from_str(json).map_err(|e| config_err(e.to_string()))?;
        config.base_dir = base_dir.into();
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json_str(&text, base)
    }

    pub fn csv_path(&self) -> PathBuf {
        self.base_dir.join(&self.data.csv)
    }

    pub fn runs(&self, stage: Stage) -> bool {
        self.stages.contains(&stage)
    }

    fn variable(&self, name: &str) -> Result<&Variable> {
        self.variables
            .iter()
            .find(|v| v.name == name)
            .ok_or_else(|| config_err(format!("`{name}` is not a declared variable")))
    }

    pub fn treatment(&self) -> Result<&Variable> {
        let mut it = self.variables.iter().filter(|v| v.role == Role::Treatment);
        match (it.next(), it.next()) {
            (Some(t), None) => Ok(t),
            (None, _) => Err(config_err("no variable has role `treatment`")),
            (Some(_), Some(_)) => Err(config_err("more than one variable has role `treatment`")),
        }
    }

    pub fn outcomes(&self) -> Vec<String> {
        match &self.estimation.outcomes {
            Some(list) => list.clone(),
            None => self.variables.iter().filter(|v| v.role.is_outcome()).map(|v| v.name.clone()).collect(),
        }
    }

    pub fn orientation_order(&self) -> Vec<String> {
        self.vote
            .orientation_order
            .clone()
            .unwrap_or_else(|| self.variables.iter().map(|v| v.name.clone()).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.variables.is_empty() {
            return Err(config_err("`variables` is empty"));
        }
        let mut names = BTreeSet::new();
        for v in &self.variables {
            if !names.insert(v.name.as_str()) {
                return Err(config_err(format!("duplicate variable `{}`", v.name)));
            }
        }
        let treatment = self.treatment()?;

        let mut seen = BTreeSet::new();
        for &s in &self.stages {
            if !seen.insert(s) {
                return Err(config_err(format!("stage `{s}` listed twice")));
            }
        }
        for &s in &self.stages {
            if let Some(req) = s.requires() {
                if !self.runs(req) {
                    return Err(config_err(format!("stage `{s}` needs stage `{req}`")));
                }
            }
        }

        if self.runs(Stage::Discover) {
            self.learners.config.validate().map_err(|e| config_err(e.to_string()))?;
            if self.learners.use_.is_empty() && self.learners.supplied.is_empty() {
                return Err(config_err("no learners and no supplied graphs"));
            }
            let mut learner_names = BTreeSet::new();
            let builtin = self.learners.use_.iter().map(|l| l.as_str().to_owned());
            for name in builtin.chain(self.learners.supplied.iter().map(|s| s.name.clone())) {
                if name.is_empty() || name.contains(['/', '\\']) || name == "consensus" || name == "consensus_dag" {
                    return Err(config_err(format!("`{name}` cannot name a graph")));
                }
                if !learner_names.insert(name.clone()) {
                    return Err(config_err(format!("graph `{name}` listed twice")));
                }
            }
        }
        if !(0.0..1.0).contains(&self.vote.threshold) {
            return Err(config_err(format!("vote threshold must lie in [0, 1), got {}", self.vote.threshold)));
        }
        if let Some(order) = &self.vote.orientation_order {
            let given: BTreeSet<&str> = order.iter().map(String::as_str).collect();
            if given.len() != order.len() || given != names {
                return Err(config_err("`orientation_order` must list every variable exactly once"));
            }
        }

        let outcomes = self.outcomes();
        if self.runs(Stage::Identify) && outcomes.is_empty() {
            return Err(config_err("no outcome variables to identify"));
        }
        for o in &outcomes {
            self.variable(o)?;
            if *o == treatment.name {
                return Err(config_err(format!("`{o}` is both treatment and outcome")));
            }
        }
        if self.runs(Stage::Estimate) && self.estimation.contrasts.is_empty() {
            return Err(config_err("stage `estimate` needs at least one contrast"));
        }
        if let Some(levels) = treatment.levels() {
            for c in &self.estimation.contrasts {
                for level in [&c.hi, &c.lo] {
                    if !levels.contains(level) {
                        return Err(config_err(format!("contrast level `{level}` is not a level of `{}`", treatment.name)));
                    }
                }
            }
        }
        for (name, spec) in &self.estimation.bins {
            if !self.variable(name)?.is_continuous() {
                return Err(config_err(format!("bins given for categorical `{name}`")));
            }
            if let BinSpec::Quantiles { quantiles } = spec {
                if *quantiles < 2 {
                    return Err(config_err(format!("`{name}` needs at least 2 quantile bins")));
                }
            }
        }
        for name in self.estimation.ordinal.keys() {
            if self.variable(name)?.is_continuous() {
                return Err(config_err(format!("ordinal coding given for continuous `{name}`")));
            }
        }

        if self.runs(Stage::Refute) {
            let r = &self.refutation;
            if !(r.subset_fraction > 0.0 && r.subset_fraction < 1.0) {
                return Err(config_err("refutation subset_fraction must lie in (0, 1)"));
            }
            if r.random_cause_bins < 2 {
                return Err(config_err("refutation random_cause_bins must be at least 2"));
            }
        }
        if self.runs(Stage::Analytics) {
            for a in &self.analytics.anova {
                self.variable(&a.group)?;
                self.variable(&a.value)?;
            }
            if let Some(alpha) = self.analytics.tukey_alpha {
                if alpha != 0.05 && alpha != 0.01 {
                    return Err(config_err("tukey_alpha must be 0.05 or 0.01"));
                }
            }
            if let Some(lr) = &self.analytics.logreg {
                self.variable(&lr.label)?;
                for f in lr.features.iter().flatten() {
                    self.variable(f)?;
                }
                if lr.folds < 2 {
                    return Err(config_err("logreg folds must be at least 2"));
                }
            }
        }
        Ok(())
    }
}
