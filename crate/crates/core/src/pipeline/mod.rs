//! End-to-end study runner: load, explore, discover, vote, identify,
//! estimate, refute, and write everything under one output directory.
//!
//! Layout of the output directory:
//!
//! ```text
//! report.json            everything below, plus provenance
//! error.json             only when a stage failed
//! graphs/<name>.dot|json one pair per learner or supplied graph
//! graphs/consensus.*     the majority-vote CPDAG
//! graphs/consensus_dag.* the consensus oriented into a DAG
//! tables/summary.csv
//! tables/correlation.csv
//! tables/ate.csv
//! tables/refutation.csv
//! ```

mod config;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::RngCore;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analytics::{
    anova_oneway, correlation_matrix, logreg_cv, tukey_hsd, AnovaResult, CorrelationMatrix, CvReport, TukeyResult,
};
use crate::cohort::{discretize, load_csv, quantile_edges, summarize, Cell, CohortTable, SummaryStats, Variable};
use crate::discovery::{Learner, StructureLearner, Supplied};
use crate::effect::{backdoor_sets, pairwise_ate, AdjustmentFormula, AteTable, EstimateSpec};
use crate::ensemble::{force_dag, majority_vote, tally, VoteTally};
use crate::error::{Error, Result};
use crate::graph::{cpdag_of, to_dot, Cpdag, GraphJson, NodeRoles};
use crate::refute::{refute_all, RefutationReport};
use crate::rng;

pub use config::{
    AnalyticsSection, AnovaSpec, BinRule, BinSpec, DataSection, EstimationSection, LearnerSection, LogregSpec,
    MissingPolicy, Seeds, Stage, StudyConfig, SuppliedGraph, VoteSection,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// omit wall-clock fields so identical inputs give identical reports
    pub canonical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed { stage: String, kind: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool_version: String,
    pub config_sha256: String,
    pub input_sha256: Option<String>,
    pub seeds: Seeds,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub started_unix: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finished_unix: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataInfo {
    pub rows_read: usize,
    pub rows_used: usize,
    pub missing: MissingPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaEntry {
    pub anova: AnovaResult,
    /// `"<level> (mean: 7.47, deviation: 8.55)"` per group
    pub group_lines: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tukey: Option<TukeyResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogregEntry {
    pub label: String,
    pub features: Vec<String>,
    pub cv: CvReport,
    pub line: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AnalyticsReport {
    pub anova: Vec<AnovaEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlation: Option<CorrelationMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub logreg: Option<LogregEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedGraph {
    pub name: String,
    pub graph: GraphJson,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsensusReport {
    pub threshold: f64,
    pub tally: VoteTally,
    pub graph: GraphJson,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormulaEntry {
    pub outcome: String,
    /// every minimal backdoor set, first one used
    pub adjustment_sets: Vec<Vec<String>>,
    pub adjustment_set: Vec<String>,
    pub formula: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentificationReport {
    pub treatment: String,
    pub orientation_order: Vec<String>,
    pub dag: GraphJson,
    pub formulas: Vec<FormulaEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationReport {
    /// bin edges applied to continuous treatment/adjusters before stratifying
    pub bins: BTreeMap<String, Vec<f64>>,
    pub ate: AteTable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefutationEntry {
    pub report: RefutationReport,
    pub lines: Vec<String>,
}

/// Everything a run produced. Sections of stages that did not run are
/// absent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportBundle {
    #[serde(flatten)]
    pub status: RunStatus,
    pub provenance: Provenance,
    pub stages_completed: Vec<Stage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<DataInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<SummaryStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytics: Option<AnalyticsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graphs: Option<Vec<NamedGraph>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consensus: Option<ConsensusReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identification: Option<IdentificationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimation: Option<EstimationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refutations: Option<Vec<RefutationEntry>>,
    /// paths relative to the output directory, sorted
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ErrorRecord<'a> {
    stage: &'a str,
    kind: &'a str,
    message: &'a str,
    stages_completed: &'a [Stage],
    files: &'a [String],
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

struct Writer {
    root: PathBuf,
    files: BTreeSet<String>,
}

impl Writer {
    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.files.insert(rel.to_owned());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(rel, &bytes)
    }

    fn csv(&mut self, rel: &str, fill: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        self.write(rel, &buf)
    }

    fn graph(&mut self, name: &str, g: &Cpdag, roles: &NodeRoles) -> Result<()> {
        self.write(&format!("graphs/{name}.dot"), to_dot(g, roles).as_bytes())?;
        self.json(&format!("graphs/{name}.json"), &g.to_json())
    }
}

/// Reads the configured CSV and applies the missing-value policy.
pub fn load_study_table(config: &StudyConfig) -> Result<(CohortTable, DataInfo)> {
    let raw = load_csv(config.csv_path(), &config.variables)?;
    let rows_read = raw.n_rows();
    let table = match config.data.missing {
        MissingPolicy::Level => {
            let mut t = raw;
            for v in config.variables.iter().filter(|v| v.is_categorical()) {
                let col = t.index_of(&v.name)?;
                if t.column(col).any(|c| c.is_missing()) {
                    t = t.fill_missing_level(&v.name, &config.data.missing_level)?;
                }
            }
            t
        }
        MissingPolicy::Drop => {
            let keep: Vec<usize> =
                (0..raw.n_rows()).filter(|&i| raw.rows()[i].iter().all(|c| !c.is_missing())).collect();
            raw.select_rows(&keep)
        }
    };
    let info = DataInfo { rows_read, rows_used: table.n_rows(), missing: config.data.missing };
    Ok((table, info))
}

/// Edges implementing `spec` on the non-missing values of `name`.
pub fn bin_edges(table: &CohortTable, name: &str, spec: &BinSpec) -> Result<Vec<f64>> {
    let values: Vec<f64> = table.numeric(name)?.into_iter().flatten().collect();
    let edges = match spec {
        BinSpec::Edges(e) => e.clone(),
        BinSpec::Quantiles { quantiles } => quantile_edges(&values, *quantiles),
        BinSpec::Rule(BinRule::Decade) => {
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if values.is_empty() {
                Vec::new()
            } else {
                let mut e = Vec::new();
                let mut x = (lo / 10.0).floor() * 10.0 + 10.0;
                while x <= hi {
                    e.push(x);
                    x += 10.0;
                }
                e
            }
        }
    };
    if edges.is_empty() {
        return Err(Error::Config(format!(
            "binning `{name}` gives a single stratum; give explicit bin edges"
        )));
    }
    Ok(edges)
}

fn roles(config: &StudyConfig) -> NodeRoles {
    NodeRoles {
        treatment: config.treatment().ok().map(|t| t.name.clone()),
        outcomes: config.variables.iter().filter(|v| v.role.is_outcome()).map(|v| v.name.clone()).collect(),
    }
}

/// Replaces a categorical outcome by its configured ordinal codes.
fn apply_ordinal(table: &CohortTable, name: &str, codes: &BTreeMap<String, f64>) -> Result<CohortTable> {
    let var = table.variable(name)?;
    let levels = var.levels().ok_or_else(|| Error::NotCategorical(name.to_owned()))?;
    let mut by_index = Vec::with_capacity(levels.len());
    for level in levels {
        let code = codes
            .get(level)
            .ok_or_else(|| Error::Config(format!("ordinal coding of `{name}` misses level `{level}`")))?;
        by_index.push(*code);
    }
    let col = table.index_of(name)?;
    let cells = table
        .column(col)
        .map(|c| match c {
            Cell::Level(l) => Cell::Real(by_index[l as usize]),
            other => other,
        })
        .collect();
    table.replace_column(name, Variable::continuous(name).with_role(var.role), cells)
}

struct Run<'a> {
    config: &'a StudyConfig,
    out: Writer,
    bundle: ReportBundle,
    table: Option<CohortTable>,
    learned: Vec<Cpdag>,
    consensus: Option<Cpdag>,
    /// contrast label and spec for each (contrast, outcome) pair
    specs: Vec<(String, EstimateSpec)>,
    estimation_table: Option<CohortTable>,
}

impl Run<'_> {
    fn table(&self) -> &CohortTable {
        self.table.as_ref().expect("data loaded")
    }

    fn stage(&mut self, stage: Stage) -> Result<()> {
        match stage {
            Stage::Explore => self.explore(),
            Stage::Analytics => self.analytics(),
            Stage::Discover => self.discover(),
            Stage::Ensemble => self.ensemble(),
            Stage::Identify => self.identify(),
            Stage::Estimate => self.estimate(),
            Stage::Refute => self.refute(),
        }
    }

    fn explore(&mut self) -> Result<()> {
        let summary = summarize(self.table());
        self.out.csv("tables/summary.csv", |w| summary.write_csv(w))?;
        self.bundle.summary = Some(summary);
        Ok(())
    }

    fn analytics(&mut self) -> Result<()> {
        let section = &self.config.analytics;
        let table = self.table.as_ref().expect("data loaded");
        let mut report = AnalyticsReport::default();
        for spec in &section.anova {
            let anova = anova_oneway(table, &spec.group, &spec.value)?;
            let tukey = match section.tukey_alpha {
                Some(alpha) => Some(tukey_hsd(table, &spec.group, &spec.value, alpha)?),
                None => None,
            };
            let group_lines = anova.groups.iter().map(|g| format!("{} {g}", g.level)).collect();
            report.anova.push(AnovaEntry { anova, group_lines, tukey });
        }
        if section.correlation {
            let m = correlation_matrix(table);
            self.out.csv("tables/correlation.csv", |w| m.write_csv(w))?;
            report.correlation = Some(m);
        }
        if let Some(lr) = &section.logreg {
            let features: Vec<String> = match &lr.features {
                Some(f) => f.clone(),
                None => self
                    .config
                    .variables
                    .iter()
                    .filter(|v| v.name != lr.label && !lr.exclude_roles.contains(&v.role))
                    .map(|v| v.name.clone())
                    .collect(),
            };
            let refs: Vec<&str> = features.iter().map(String::as_str).collect();
            let cv = logreg_cv(table, &refs, &lr.label, lr.folds, self.config.seeds.cv)?;
            let line = cv.line();
            report.logreg = Some(LogregEntry { label: lr.label.clone(), features, cv, line });
        }
        self.bundle.analytics = Some(report);
        Ok(())
    }

    fn discover(&mut self) -> Result<()> {
        let roles = roles(self.config);
        let lc = &self.config.learners.config;
        let mut learners: Vec<Box<dyn StructureLearner>> =
            self.config.learners.use_.iter().map(|&l| Box::new(l) as Box<dyn StructureLearner>).collect();
        for s in &self.config.learners.supplied {
            learners.push(Box::new(Supplied { name: s.name.clone(), graph: Cpdag::from_json(&s.graph)? }));
        }
        let mut named = Vec::new();
        let n_builtin = self.config.learners.use_.len();
        for (i, learner) in learners.iter().enumerate() {
            log::info!("running learner {}", learner.name());
            let g = learner.learn(self.table.as_ref().expect("data loaded"), lc)?;
            self.out.graph(learner.name(), &g, &roles)?;
            named.push(NamedGraph { name: learner.name().to_owned(), graph: g.to_json() });
            let dag_learner = i < n_builtin && self.config.learners.use_[i] != Learner::Pc;
            let vote = if dag_learner && self.config.vote.equivalence_class { cpdag_of(&g.to_dag()?) } else { g };
            self.learned.push(vote);
        }
        self.bundle.graphs = Some(named);
        Ok(())
    }

    fn ensemble(&mut self) -> Result<()> {
        let threshold = self.config.vote.threshold;
        let consensus = majority_vote(&self.learned, threshold)?;
        self.out.graph("consensus", &consensus, &roles(self.config))?;
        self.bundle.consensus = Some(ConsensusReport { threshold, tally: tally(&self.learned)?, graph: consensus.to_json() });
        self.consensus = Some(consensus);
        Ok(())
    }

    fn identify(&mut self) -> Result<()> {
        let consensus = self.consensus.as_ref().expect("ensemble ran");
        let order = self.config.orientation_order();
        let refs: Vec<&str> = order.iter().map(String::as_str).collect();
        let dag = force_dag(consensus, &refs)?;
        let dag_form = dag.to_cpdag_form();
        self.out.graph("consensus_dag", &dag_form, &roles(self.config))?;
        let treatment = self.config.treatment()?.name.clone();
        let mut formulas = Vec::new();
        for outcome in self.config.outcomes() {
            let sets = backdoor_sets(&dag, &treatment, &outcome)?;
            let formula = AdjustmentFormula::new(&treatment, &outcome, &sets[0])?;
            formulas.push(FormulaEntry {
                outcome: outcome.clone(),
                adjustment_sets: sets.iter().map(|s| s.iter().cloned().collect()).collect(),
                adjustment_set: sets[0].iter().cloned().collect(),
                formula: formula.render(),
            });
        }
        self.bundle.identification = Some(IdentificationReport {
            treatment,
            orientation_order: order,
            dag: dag_form.to_json(),
            formulas,
        });
        Ok(())
    }

    fn estimate(&mut self) -> Result<()> {
        let ident = self.bundle.identification.as_ref().expect("identify ran");
        let est = &self.config.estimation;
        let treatment = ident.treatment.clone();

        // discretize continuous treatment and adjusters, code ordinal outcomes
        let mut to_bin: BTreeSet<String> = ident.formulas.iter().flat_map(|f| f.adjustment_set.iter().cloned()).collect();
        to_bin.insert(treatment.clone());
        let mut table = self.table().clone();
        let mut bins = BTreeMap::new();
        for name in to_bin {
            if !table.variable(&name)?.is_continuous() {
                continue;
            }
            let spec = est.bins.get(&name).cloned().unwrap_or(BinSpec::Rule(BinRule::Decade));
            let edges = bin_edges(&table, &name, &spec)?;
            table = discretize(&table, &name, &edges)?;
            bins.insert(name, edges);
        }
        for f in &ident.formulas {
            let levels = table.variable(&f.outcome)?.levels().map(<[String]>::len);
            match (levels, est.ordinal.get(&f.outcome)) {
                (Some(_), Some(codes)) => table = apply_ordinal(&table, &f.outcome, codes)?,
                (Some(n), None) if n > 2 => {
                    return Err(Error::Config(format!(
                        "outcome `{}` has {n} levels; give an ordinal coding under estimation.ordinal",
                        f.outcome
                    )))
                }
                _ => {}
            }
        }

        let outcomes: Vec<(String, Vec<String>)> =
            ident.formulas.iter().map(|f| (f.outcome.clone(), f.adjustment_set.clone())).collect();
        let ate = pairwise_ate(&table, &treatment, &outcomes, &est.contrasts)?;
        self.out.csv("tables/ate.csv", |w| ate.write_csv(w))?;
        self.specs = est
            .contrasts
            .iter()
            .flat_map(|c| {
                outcomes.iter().map(|(o, adj)| {
                    let spec = EstimateSpec {
                        treatment: treatment.clone(),
                        outcome: o.clone(),
                        adjustment: adj.clone(),
                        hi: c.hi.clone(),
                        lo: c.lo.clone(),
                        scale: 1.0,
                    };
                    (c.label(), spec)
                })
            })
            .collect();
        self.bundle.estimation = Some(EstimationReport { bins, ate });
        self.estimation_table = Some(table);
        Ok(())
    }

    fn refute(&mut self) -> Result<()> {
        let table = self.estimation_table.as_ref().expect("estimate ran");
        let mut entries = Vec::with_capacity(self.specs.len());
        for (i, (label, spec)) in self.specs.iter().enumerate() {
            let seed = rng::split(self.config.seeds.refutation, i as u64).next_u64();
            let mut report = refute_all(table, spec, &self.config.refutation, seed)?;
            report.contrast = label.clone();
            let lines = report.lines().to_vec();
            entries.push(RefutationEntry { report, lines });
        }
        self.out.csv("tables/refutation.csv", |w| write_refutation_csv(&entries, w))?;
        self.bundle.refutations = Some(entries);
        Ok(())
    }
}

fn write_refutation_csv(entries: &[RefutationEntry], w: &mut Vec<u8>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "outcome",
        "contrast",
        "original",
        "random_common_cause",
        "unobserved_common_cause",
        "placebo",
        "subset",
        "pass_random_common_cause",
        "pass_placebo",
        "pass_subset",
    ])?;
    for e in entries {
        let r = &e.report;
        out.write_record([
            r.outcome.clone(),
            r.contrast.clone(),
            format!("{:.4}", r.original),
            format!("{:.4}", r.random_common_cause),
            format!("{:.4}", r.unobserved_common_cause),
            format!("{:.4}", r.placebo),
            format!("{:.4}", r.subset),
            r.pass_random_common_cause.to_string(),
            r.pass_placebo.to_string(),
            r.pass_subset.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<refutation table>", e))?;
    Ok(())
}

/// Runs the configured stages in their fixed order and writes the outputs
/// into `out_dir`.
///
/// On failure the partial report (status `failed`) and an `error.json`
/// record are still written before the error is returned.
pub fn run(config: &StudyConfig, out_dir: impl AsRef<Path>, options: RunOptions) -> Result<ReportBundle> {
    let root = out_dir.as_ref().to_path_buf();
    std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
    let started = (!options.canonical).then(unix_now);
    let config_bytes = serde_json::to_vec(config)?;
    let input_sha256 = std::fs::read(config.csv_path()).ok().map(|b| sha256_hex(&b));
    let mut run = Run {
        config,
        out: Writer { root, files: BTreeSet::new() },
        bundle: ReportBundle {
            status: RunStatus::Ok,
            provenance: Provenance {
                tool_version: env!("CARGO_PKG_VERSION").to_owned(),
                config_sha256: sha256_hex(&config_bytes),
                input_sha256,
                seeds: config.seeds.clone(),
                started_unix: started,
                finished_unix: None,
            },
            stages_completed: Vec::new(),
            data: None,
            summary: None,
            analytics: None,
            graphs: None,
            consensus: None,
            identification: None,
            estimation: None,
            refutations: None,
            files: Vec::new(),
        },
        table: None,
        learned: Vec::new(),
        consensus: None,
        specs: Vec::new(),
        estimation_table: None,
    };

    let mut failure: Option<(String, Error)> = None;
    match load_study_table(config) {
        Ok((table, info)) => {
            run.table = Some(table);
            run.bundle.data = Some(info);
            for stage in Stage::ORDER.into_iter().filter(|&s| config.runs(s)) {
                log::info!("stage {stage}");
                if let Err(e) = run.stage(stage) {
                    failure = Some((stage.to_string(), e));
                    break;
                }
                run.bundle.stages_completed.push(stage);
            }
        }
        Err(e) => failure = Some(("load".to_owned(), e)),
    }

    run.bundle.provenance.finished_unix = (!options.canonical).then(unix_now);
    if let Some((stage, e)) = &failure {
        run.bundle.status = RunStatus::Failed { stage: stage.clone(), kind: e.kind().to_owned(), message: e.to_string() };
        let mut files: Vec<String> = run.out.files.iter().cloned().collect();
        files.push("report.json".into());
        files.sort();
        let record = ErrorRecord {
            stage,
            kind: e.kind(),
            message: &e.to_string(),
            stages_completed: &run.bundle.stages_completed,
            files: &files,
        };
        run.out.json("error.json", &record)?;
    }
    run.out.files.insert("report.json".into());
    run.bundle.files = run.out.files.iter().cloned().collect();
    let bundle = run.bundle.clone();
    run.out.json("report.json", &bundle)?;
    match failure {
        Some((_, e)) => Err(e),
        None => Ok(bundle),
    }
}
