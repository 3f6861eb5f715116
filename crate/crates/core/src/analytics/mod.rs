//! Classic, non-causal analyses: one-way ANOVA with Tukey post hoc tests,
//! a Pearson correlation matrix and a cross-validated logistic regression.

mod correlation;
mod logreg;
mod qtable;

use std::fmt;

use serde::Serialize;

use crate::cohort::{Cell, CohortTable};
use crate::error::{Error, Result};
use crate::stats::dist::f_sf;

pub use correlation::{correlation_matrix, CorrelationMatrix};
pub use logreg::{fit_logistic, logreg_cv, CvReport, LogisticFit};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub level: String,
    pub n: usize,
    pub mean: f64,
    /// sample standard deviation, 0 for a single observation
    pub sd: f64,
}

impl fmt::Display for GroupStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(mean: {:.2}, deviation: {:.2})", self.mean, self.sd)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaResult {
    pub group: String,
    pub value: String,
    pub f_statistic: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p_value: f64,
    pub ms_within: f64,
    /// non-empty groups in declared level order
    pub groups: Vec<GroupStats>,
}

fn group_values(table: &CohortTable, group: &str, value: &str) -> Result<Vec<(String, Vec<f64>)>> {
    let gi = table.index_of(group)?;
    let vi = table.index_of(value)?;
    let levels = table.variables()[gi].levels().ok_or_else(|| Error::NotCategorical(group.to_owned()))?;
    if !table.variables()[vi].is_continuous() {
        return Err(Error::NotContinuous(value.to_owned()));
    }
    let mut buckets = vec![Vec::new(); levels.len()];
    for row in table.rows() {
        if let (Cell::Level(l), Cell::Real(x)) = (row[gi], row[vi]) {
            buckets[l as usize].push(x);
        }
    }
    Ok(levels.iter().cloned().zip(buckets).filter(|(_, v)| !v.is_empty()).collect())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sum_sq_dev(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|x| (x - m) * (x - m)).sum()
}

/// One-way between-subjects ANOVA of `value` across the levels of `group`.
/// Rows missing either column are dropped; empty levels are ignored.
pub fn anova_oneway(table: &CohortTable, group: &str, value: &str) -> Result<AnovaResult> {
    let groups = group_values(table, group, value)?;
    let k = groups.len();
    let n: usize = groups.iter().map(|(_, v)| v.len()).sum();
    if k < 2 || n <= k {
        return Err(Error::DegenerateGroups);
    }
    let grand = groups.iter().flat_map(|(_, v)| v).sum::<f64>() / n as f64;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    let mut stats = Vec::with_capacity(k);
    for (level, xs) in &groups {
        let m = mean(xs);
        let ss = sum_sq_dev(xs, m);
        ssb += xs.len() as f64 * (m - grand) * (m - grand);
        ssw += ss;
        let sd = if xs.len() > 1 { (ss / (xs.len() - 1) as f64).sqrt() } else { 0.0 };
        stats.push(GroupStats { level: level.clone(), n: xs.len(), mean: m, sd });
    }
    let df_between = k - 1;
    let df_within = n - k;
    let msw = ssw / df_within as f64;
    if msw <= 0.0 {
        // every group is constant: F is undefined
        return Err(Error::DegenerateGroups);
    }
    let f = (ssb / df_between as f64) / msw;
    Ok(AnovaResult {
        group: group.to_owned(),
        value: value.to_owned(),
        f_statistic: f,
        df_between,
        df_within,
        p_value: f_sf(f, df_between as f64, df_within as f64),
        ms_within: msw,
        groups: stats,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TukeyPair {
    pub a: String,
    pub b: String,
    /// `mean(a) - mean(b)`
    pub mean_diff: f64,
    pub q: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TukeyResult {
    pub alpha: f64,
    pub df_within: usize,
    pub critical_q: f64,
    /// pairs `(i, j)`, `i < j` in group order
    pub pairs: Vec<TukeyPair>,
}

impl TukeyResult {
    pub fn get(&self, a: &str, b: &str) -> Option<&TukeyPair> {
        self.pairs.iter().find(|p| (p.a == a && p.b == b) || (p.a == b && p.b == a))
    }
}

/// Critical value of the studentized range for `k` groups and `df` error
/// degrees of freedom, linearly interpolated in `1/df` between table rows.
/// Only `alpha` 0.05 and 0.01, `k` in 2..=10 and `df >= 5` are tabulated.
pub fn studentized_range_critical(alpha: f64, k: usize, df: usize) -> Result<f64> {
    let table = if alpha == 0.05 {
        &qtable::Q_05
    } else if alpha == 0.01 {
        &qtable::Q_01
    } else {
        return Err(Error::BadConfig(format!("no studentized-range table for alpha = {alpha}")));
    };
    if !(2..=10).contains(&k) {
        return Err(Error::BadConfig(format!("studentized-range table covers 2..=10 groups, got {k}")));
    }
    if df < 5 {
        return Err(Error::BadConfig(format!("studentized-range table starts at 5 error df, got {df}")));
    }
    let col = k - 2;
    let df = df as f64;
    let dfs = &qtable::DFS;
    if let Some(i) = dfs.iter().position(|&d| d == df) {
        return Ok(table[i][col]);
    }
    // bracketing rows; past the last finite row interpolate towards infinity
    let hi = dfs.iter().position(|&d| d > df).unwrap_or(dfs.len());
    let lo = hi - 1;
    let inv = |i: usize| if i == dfs.len() { 0.0 } else { 1.0 / dfs[i] };
    let t = (inv(lo) - 1.0 / df) / (inv(lo) - inv(hi));
    Ok(table[lo][col] + t * (table[hi][col] - table[lo][col]))
}

/// Tukey's honestly-significant-difference comparisons of every pair of
/// non-empty groups, using the Tukey–Kramer standard error for unequal sizes.
pub fn tukey_hsd(table: &CohortTable, group: &str, value: &str, alpha: f64) -> Result<TukeyResult> {
    let anova = anova_oneway(table, group, value)?;
    let critical_q = studentized_range_critical(alpha, anova.groups.len(), anova.df_within)?;
    let g = &anova.groups;
    let mut pairs = Vec::new();
    for i in 0..g.len() {
        for j in i + 1..g.len() {
            let se = (anova.ms_within / 2.0 * (1.0 / g[i].n as f64 + 1.0 / g[j].n as f64)).sqrt();
            let diff = g[i].mean - g[j].mean;
            let q = diff.abs() / se;
            pairs.push(TukeyPair {
                a: g[i].level.clone(),
                b: g[j].level.clone(),
                mean_diff: diff,
                q,
                significant: q > critical_q,
            });
        }
    }
    Ok(TukeyResult { alpha, df_within: anova.df_within, critical_q, pairs })
}
