//! Structure learners: PC, greedy hill-climbing, tabu search and MMHC.
//!
//! All learners drop incomplete rows across their variables once, up front,
//! and then test or score on that fixed [`DataView`]. They are
//! deterministic: ties are always broken by node name, which is also the
//! node index order.

mod mmhc;
mod pc;
mod search;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cohort::CohortTable;
use crate::error::{Error, Result};
use crate::graph::{Cpdag, Dag};
use crate::stats::{self, DataView};

pub use mmhc::{mmhc, mmpc};
pub use pc::{pc, pc_with_sepsets, SepSetMap};
pub use search::{hill_climb, tabu_search};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub alpha: f64,
    pub max_cond_set: usize,
    pub max_parents: usize,
    pub tabu_length: usize,
    pub max_iterations: usize,
    /// Carried for interface stability; the built-in learners are
    /// deterministic and do not draw random numbers.
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            alpha: 0.01,
            max_cond_set: 3,
            max_parents: 4,
            tabu_length: 10,
            max_iterations: 200,
            seed: 0,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::BadConfig(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.max_iterations < 1 {
            return Err(Error::BadConfig("max_iterations must be at least 1".into()));
        }
        if self.max_parents < 1 {
            return Err(Error::BadConfig("max_parents must be at least 1".into()));
        }
        if self.tabu_length < 1 {
            return Err(Error::BadConfig("tabu_length must be at least 1".into()));
        }
        Ok(())
    }
}

/// The built-in learners, by their config names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Learner {
    Pc,
    HillClimb,
    Tabu,
    Mmhc,
}

impl Learner {
    pub const ALL: [Learner; 4] = [Learner::Pc, Learner::HillClimb, Learner::Tabu, Learner::Mmhc];

    pub fn as_str(self) -> &'static str {
        match self {
            Learner::Pc => "pc",
            Learner::HillClimb => "hill_climb",
            Learner::Tabu => "tabu",
            Learner::Mmhc => "mmhc",
        }
    }
}

impl fmt::Display for Learner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Learner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Learner::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::BadConfig(format!("unknown learner `{s}`")))
    }
}

/// Something that turns a table into a graph. Outputs are compared and
/// merged as [`Cpdag`]s; DAG learners return their DAG with every edge
/// directed.
pub trait StructureLearner {
    fn name(&self) -> &str;
    fn learn(&self, table: &CohortTable, config: &LearnerConfig) -> Result<Cpdag>;
}

impl StructureLearner for Learner {
    fn name(&self) -> &str {
        self.as_str()
    }

    fn learn(&self, table: &CohortTable, config: &LearnerConfig) -> Result<Cpdag> {
        match self {
            Learner::Pc => pc(table, config),
            Learner::HillClimb => hill_climb(table, config).map(|d| d.to_cpdag_form()),
            Learner::Tabu => tabu_search(table, config).map(|d| d.to_cpdag_form()),
            Learner::Mmhc => mmhc(table, config).map(|d| d.to_cpdag_form()),
        }
    }
}

/// A graph produced elsewhere (another tool, a published figure) that takes
/// part in the vote like any learner.
#[derive(Debug, Clone, PartialEq)]
pub struct Supplied {
    pub name: String,
    pub graph: Cpdag,
}

impl StructureLearner for Supplied {
    fn name(&self) -> &str {
        &self.name
    }

    fn learn(&self, table: &CohortTable, _config: &LearnerConfig) -> Result<Cpdag> {
        let mut names: Vec<&str> = table.variables().iter().map(|v| v.name.as_str()).collect();
        names.sort_unstable();
        if names.iter().copied().ne(self.graph.nodes().iter().map(String::as_str)) {
            return Err(Error::NodeSetMismatch);
        }
        Ok(self.graph.clone())
    }
}

/// Sum of per-node BIC scores of `dag` on `table` (rows complete in every
/// variable).
pub fn total_score(table: &CohortTable, dag: &Dag) -> Result<f64> {
    let view = DataView::from_table(table)?;
    check_nodes(&view, dag.nodes())?;
    (0..dag.n())
        .map(|i| stats::bic_idx(&view, i, &dag.parents(i).iter().copied().collect::<Vec<_>>()))
        .sum()
}

fn check_nodes(view: &DataView, nodes: &[String]) -> Result<()> {
    if view.names() != nodes {
        return Err(Error::NodeSetMismatch);
    }
    Ok(())
}

/// Degenerate data makes a test uninformative rather than fatal: the
/// learners treat it as "no independence found".
fn is_degenerate(e: &Error) -> bool {
    matches!(e, Error::SingularCorrelation | Error::AllStrataDegenerate)
}

/// All `k`-subsets of `items`, in lexicographic order of positions.
fn subsets<T: Copy>(items: &[T], k: usize) -> Vec<Vec<T>> {
    fn go<T: Copy>(items: &[T], k: usize, start: usize, cur: &mut Vec<T>, out: &mut Vec<Vec<T>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            go(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(items, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_in_order() {
        assert_eq!(subsets(&[1, 2, 3], 2), vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(subsets(&[1, 2], 0), vec![Vec::<i32>::new()]);
        assert!(subsets(&[1], 2).is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(LearnerConfig::default().validate().is_ok());
        let bad = LearnerConfig {
            alpha: 1.0,
            ..LearnerConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::BadConfig(_))));
    }

    #[test]
    fn learner_names_round_trip() {
        for l in Learner::ALL {
            assert_eq!(l.as_str().parse::<Learner>().unwrap(), l);
        }
        assert!("fci".parse::<Learner>().is_err());
    }
}
