//! Perturb-and-re-estimate checks on a fitted estimate.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng as _, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cohort::{discretize, quantile_edges, subset_rows, Cell, CohortTable, Variable};
use crate::effect::EstimateSpec;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefuteConfig {
    /// largest accepted |new - original| for the random-cause and subset checks
    pub tol_same: f64,
    /// largest accepted |placebo| estimate
    pub tol_zero: f64,
    pub strength_t: f64,
    pub strength_y: f64,
    pub subset_fraction: f64,
    /// quantile bins for the random common cause
    pub random_cause_bins: usize,
}

impl Default for RefuteConfig {
    fn default() -> Self {
        RefuteConfig {
            tol_same: 0.05,
            tol_zero: 0.02,
            strength_t: 0.2,
            strength_y: 0.2,
            subset_fraction: 0.8,
            random_cause_bins: 4,
        }
    }
}

fn fresh_name(table: &CohortTable, base: &str) -> String {
    let mut name = base.to_owned();
    let mut k = 1;
    while table.index_of(&name).is_ok() {
        name = format!("{base}_{k}");
        k += 1;
    }
    name
}

/// Adds an independent standard-normal column, binned into quantiles, to
/// the adjustment set and re-estimates.
pub fn refute_random_common_cause(table: &CohortTable, spec: &EstimateSpec, bins: usize, seed: u64) -> Result<f64> {
    let mut rng = rng::seeded(seed);
    let name = fresh_name(table, "random_common_cause");
    let draws: Vec<f64> = (0..table.n_rows()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let cells = draws.iter().map(|&x| Cell::Real(x)).collect();
    let with = table.with_column(Variable::continuous(&name), cells)?;
    let edges = quantile_edges(&draws, bins.max(2));
    let with = if edges.is_empty() { with } else { discretize(&with, &name, &edges)? };
    let with = if with.variable(&name)?.is_continuous() {
        // a single-row table has nothing to bin; one level then
        with.replace_column(&name, Variable::categorical(&name, ["bin0"]), vec![Cell::Level(0); with.n_rows()])?
    } else {
        with
    };
    let mut spec = spec.clone();
    spec.adjustment.push(name);
    spec.value(&with)
}

/// Simulates a latent `U ~ N(0, 1)` acting on both treatment and outcome and
/// re-estimates without it.
///
/// With probability `min(|strength_t·U|, 1)` a row's treatment moves one
/// level up (for positive `U`) or down, in declared level order; the outcome
/// is shifted by `strength_y·U`. A categorical outcome is first replaced by
/// its level index.
pub fn refute_unobserved_common_cause(
    table: &CohortTable,
    spec: &EstimateSpec,
    strength_t: f64,
    strength_y: f64,
    seed: u64,
) -> Result<f64> {
    if !strength_t.is_finite() || !strength_y.is_finite() {
        return Err(Error::BadConfig("confounder strengths must be finite".into()));
    }
    let t_var = table.variable(&spec.treatment)?;
    let n_levels = t_var.levels().ok_or_else(|| Error::NotCategorical(spec.treatment.clone()))?.len() as u32;
    let ti = table.index_of(&spec.treatment)?;
    let yi = table.index_of(&spec.outcome)?;
    let mut rng = rng::seeded(seed);
    let mut t_cells = Vec::with_capacity(table.n_rows());
    let mut y_cells = Vec::with_capacity(table.n_rows());
    for row in table.rows() {
        let u: f64 = StandardNormal.sample(&mut rng);
        let v: f64 = rng.random();
        let tilt = strength_t * u;
        t_cells.push(match row[ti] {
            Cell::Level(l) if v < tilt.abs().min(1.0) => {
                if tilt > 0.0 {
                    Cell::Level((l + 1).min(n_levels - 1))
                } else {
                    Cell::Level(l.saturating_sub(1))
                }
            }
            c => c,
        });
        y_cells.push(match row[yi].as_f64() {
            Some(y) => Cell::Real(y + strength_y * u),
            None => Cell::Missing,
        });
    }
    let y_var = Variable::continuous(&spec.outcome).with_role(table.variable(&spec.outcome)?.role);
    let perturbed = table
        .replace_column(&spec.treatment, t_var.clone(), t_cells)?
        .replace_column(&spec.outcome, y_var, y_cells)?;
    spec.value(&perturbed)
}

/// Re-estimates with the treatment column randomly permuted.
pub fn refute_placebo(table: &CohortTable, spec: &EstimateSpec, seed: u64) -> Result<f64> {
    let ti = table.index_of(&spec.treatment)?;
    let mut cells: Vec<Cell> = table.column(ti).collect();
    cells.shuffle(&mut rng::seeded(seed));
    let var = table.variables()[ti].clone();
    spec.value(&table.replace_column(&spec.treatment, var, cells)?)
}

/// Re-estimates on a random `fraction` of the rows.
pub fn refute_subset(table: &CohortTable, spec: &EstimateSpec, fraction: f64, seed: u64) -> Result<f64> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::BadFraction(fraction));
    }
    spec.value(&subset_rows(table, fraction, seed)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefutationReport {
    pub outcome: String,
    pub contrast: String,
    pub original: f64,
    pub random_common_cause: f64,
    pub unobserved_common_cause: f64,
    pub placebo: f64,
    pub subset: f64,
    pub tol_same: f64,
    pub tol_zero: f64,
    pub pass_random_common_cause: bool,
    pub pass_placebo: bool,
    pub pass_subset: bool,
}

impl RefutationReport {
    pub fn passed(&self) -> bool {
        self.pass_random_common_cause && self.pass_placebo && self.pass_subset
    }

    pub fn lines(&self) -> [String; 5] {
        [
            format!("Estimated effect: {:.4}", self.original),
            format!("Add a random common cause: {:.4}", self.random_common_cause),
            format!("Add an Unobserved Common Cause: {:.4}", self.unobserved_common_cause),
            format!("Use a Placebo Treatment: {:.4}", self.placebo),
            format!("Use a subset of data: {:.4}", self.subset),
        ]
    }
}

impl fmt::Display for RefutationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in self.lines() {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// All four refuters. Each gets its own seed, drawn from stream `k` of the
/// generator keyed by `seed`.
pub fn refute_all(table: &CohortTable, spec: &EstimateSpec, config: &RefuteConfig, seed: u64) -> Result<RefutationReport> {
    let sub_seed = |k: u64| rng::split(seed, k).next_u64();
    let original = spec.value(table)?;
    let random_common_cause = refute_random_common_cause(table, spec, config.random_cause_bins, sub_seed(0))?;
    let unobserved_common_cause =
        refute_unobserved_common_cause(table, spec, config.strength_t, config.strength_y, sub_seed(1))?;
    let placebo = refute_placebo(table, spec, sub_seed(2))?;
    let subset = refute_subset(table, spec, config.subset_fraction, sub_seed(3))?;
    Ok(RefutationReport {
        outcome: spec.outcome.clone(),
        contrast: format!("{} vs. {}", spec.hi, spec.lo),
        original,
        random_common_cause,
        unobserved_common_cause,
        placebo,
        subset,
        tol_same: config.tol_same,
        tol_zero: config.tol_zero,
        pass_random_common_cause: (random_common_cause - original).abs() <= config.tol_same,
        pass_placebo: placebo.abs() <= config.tol_zero,
        pass_subset: (subset - original).abs() <= config.tol_same,
    })
}
