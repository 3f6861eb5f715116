//! Conditional-independence tests and decomposable scores.
//!
//! Every kernel works on a [`DataView`]: a column-major copy of some table
//! columns with incomplete rows removed. The table-level functions
//! ([`fisher_z`], [`g_test`], [`bic_score`]) build a view over just the
//! variables involved, so missing values are dropped per call. Learners
//! build one view over all their variables instead.
//!
//! View columns are ordered by name. Continuous columns also get a
//! quartile coding, which the discrete kernels use when a test or score
//! mixes kinds.

mod ci;
pub mod dist;
mod score;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::cohort::{quantile_edges, Cell, CohortTable};
use crate::error::{Error, Result};

pub use ci::{ci_test, fisher_z, fisher_z_idx, g_test, g_test_idx};
pub use score::{bic_idx, bic_score};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndTestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub independent: bool,
    /// degrees of freedom for the G-test, `n - |z| - 3` for Fisher-z
    pub dof: usize,
}

impl IndTestResult {
    fn new(statistic: f64, p_value: f64, alpha: f64, dof: usize) -> Self {
        IndTestResult {
            statistic,
            p_value,
            independent: p_value > alpha,
            dof,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreValue {
    pub node: String,
    pub parents: Vec<String>,
    /// higher is better
    pub value: f64,
}

#[derive(Debug, Clone)]
struct Column {
    /// raw values for continuous columns
    real: Option<Vec<f64>>,
    /// observed categorical levels renumbered densely in level order, or
    /// quartile bins for continuous columns
    codes: Vec<u32>,
    card: usize,
}

/// Complete-case, column-major snapshot of some table columns.
#[derive(Debug, Clone)]
pub struct DataView {
    names: Vec<String>,
    cols: Vec<Column>,
    n: usize,
    /// correlation matrix over continuous columns (NaN elsewhere)
    corr: DMatrix<f64>,
    /// continuous columns with zero variance
    constant: Vec<bool>,
}

impl DataView {
    /// View over `names`, dropping rows with a missing value in any of them.
    pub fn new(table: &CohortTable, names: &[&str]) -> Result<Self> {
        let mut sorted: Vec<&str> = names.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let idx = sorted
            .iter()
            .map(|n| table.index_of(n))
            .collect::<Result<Vec<_>>>()?;
        let keep: Vec<&Vec<Cell>> = table
            .rows()
            .iter()
            .filter(|row| idx.iter().all(|&c| !row[c].is_missing()))
            .collect();
        let n = keep.len();
        let cols: Vec<Column> = idx
            .iter()
            .map(|&c| {
                let var = &table.variables()[c];
                if var.is_continuous() {
                    let vals: Vec<f64> = keep.iter().map(|r| r[c].as_f64().expect("complete")).collect();
                    let edges = quantile_edges(&vals, 4);
                    let codes = vals
                        .iter()
                        .map(|x| edges.partition_point(|e| e <= x) as u32)
                        .collect();
                    Column {
                        real: Some(vals),
                        codes,
                        card: edges.len() + 1,
                    }
                } else {
                    let raw: Vec<u32> = keep
                        .iter()
                        .map(|r| match r[c] {
                            Cell::Level(l) => l,
                            _ => unreachable!("complete categorical cell"),
                        })
                        .collect();
                    let n_levels = var.levels().map_or(0, <[String]>::len);
                    let mut seen = vec![false; n_levels];
                    for &l in &raw {
                        seen[l as usize] = true;
                    }
                    let mut dense = vec![0u32; n_levels];
                    let mut next = 0u32;
                    for (l, s) in seen.iter().enumerate() {
                        if *s {
                            dense[l] = next;
                            next += 1;
                        }
                    }
                    Column {
                        real: None,
                        codes: raw.iter().map(|&l| dense[l as usize]).collect(),
                        card: next as usize,
                    }
                }
            })
            .collect();
        let (corr, constant) = correlations(&cols, n);
        Ok(DataView {
            names: sorted.into_iter().map(str::to_owned).collect(),
            cols,
            n,
            corr,
            constant,
        })
    }

    /// View over every column of `table`.
    pub fn from_table(table: &CohortTable) -> Result<Self> {
        let names: Vec<&str> = table.variables().iter().map(|v| v.name.as_str()).collect();
        Self::new(table, &names)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.names
            .binary_search_by(|n| n.as_str().cmp(name))
            .map_err(|_| Error::UnknownVariable(name.to_owned()))
    }

    pub fn is_continuous(&self, i: usize) -> bool {
        self.cols[i].real.is_some()
    }

    pub fn real(&self, i: usize) -> Option<&[f64]> {
        self.cols[i].real.as_deref()
    }

    pub fn codes(&self, i: usize) -> &[u32] {
        &self.cols[i].codes
    }

    /// Number of distinct codes (observed levels or quartile bins).
    pub fn card(&self, i: usize) -> usize {
        self.cols[i].card
    }

    fn corr(&self, a: usize, b: usize) -> f64 {
        self.corr[(a, b)]
    }
}

fn correlations(cols: &[Column], n: usize) -> (DMatrix<f64>, Vec<bool>) {
    let p = cols.len();
    let mut corr = DMatrix::from_element(p, p, f64::NAN);
    let mut constant = vec![false; p];
    let centred: Vec<Option<(Vec<f64>, f64)>> = cols
        .iter()
        .map(|c| {
            c.real.as_ref().map(|v| {
                let mean = v.iter().sum::<f64>() / n.max(1) as f64;
                let d: Vec<f64> = v.iter().map(|x| x - mean).collect();
                let ss = d.iter().map(|x| x * x).sum::<f64>();
                (d, ss.sqrt())
            })
        })
        .collect();
    for i in 0..p {
        let Some((di, si)) = &centred[i] else { continue };
        constant[i] = !(*si > 0.0);
        corr[(i, i)] = 1.0;
        for j in i + 1..p {
            let Some((dj, sj)) = &centred[j] else { continue };
            let r = di.iter().zip(dj).map(|(a, b)| a * b).sum::<f64>() / (si * sj);
            corr[(i, j)] = r;
            corr[(j, i)] = r;
        }
    }
    (corr, constant)
}
