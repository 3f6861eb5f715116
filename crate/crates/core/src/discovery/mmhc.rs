use std::collections::BTreeSet;

use super::search::climb;
use super::{is_degenerate, subsets, LearnerConfig};
use crate::cohort::CohortTable;
use crate::error::Result;
use crate::graph::Dag;
use crate::stats::{ci_test, DataView};

/// Weakest association of `x` with `target` over conditioning subsets of
/// `cpc`: the largest p-value seen and the statistic that produced it.
fn min_assoc(view: &DataView, target: usize, x: usize, cpc: &[usize], config: &LearnerConfig) -> Result<(f64, f64)> {
    let mut worst = (0.0, f64::INFINITY);
    for k in 0..=cpc.len().min(config.max_cond_set) {
        for s in subsets(cpc, k) {
            match ci_test(view, x, target, &s, config.alpha) {
                Ok(r) => {
                    let stat = r.statistic.abs();
                    if r.p_value > worst.0 || (r.p_value == worst.0 && stat < worst.1) {
                        worst = (r.p_value, stat);
                    }
                }
                Err(e) if is_degenerate(&e) => {}
                Err(e) => return Err(e),
            }
        }
    }
    if worst.1 == f64::INFINITY {
        worst.1 = 0.0;
    }
    Ok(worst)
}

fn mmpc_idx(view: &DataView, target: usize, config: &LearnerConfig) -> Result<Vec<usize>> {
    let mut cpc: Vec<usize> = Vec::new();
    let mut open: Vec<usize> = (0..view.n_vars()).filter(|&v| v != target).collect();

    // forward: admit the candidate whose weakest association is strongest
    while !open.is_empty() {
        let mut best: Option<(f64, f64, usize)> = None;
        let mut still_open = Vec::with_capacity(open.len());
        for &x in &open {
            let (p, stat) = min_assoc(view, target, x, &cpc, config)?;
            if p > config.alpha {
                continue;
            }
            still_open.push(x);
            let better = match best {
                None => true,
                Some((bp, bs, _)) => p < bp || (p == bp && stat > bs),
            };
            if better {
                best = Some((p, stat, x));
            }
        }
        match best {
            Some((_, _, x)) => {
                cpc.push(x);
                cpc.sort_unstable();
                open = still_open.into_iter().filter(|&v| v != x).collect();
            }
            None => break,
        }
    }

    // backward: drop members made independent by the others
    let mut i = 0;
    while i < cpc.len() {
        let x = cpc[i];
        let rest: Vec<usize> = cpc.iter().copied().filter(|&v| v != x).collect();
        let (p, _) = min_assoc(view, target, x, &rest, config)?;
        if p > config.alpha {
            cpc.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(cpc)
}

/// Candidate parents and children of `target` by max-min parents and
/// children (before the symmetry correction applied inside [`mmhc`]).
pub fn mmpc(table: &CohortTable, target: &str, config: &LearnerConfig) -> Result<BTreeSet<String>> {
    config.validate()?;
    let view = DataView::from_table(table)?;
    let t = view.index(target)?;
    Ok(mmpc_idx(&view, t, config)?
        .into_iter()
        .map(|v| view.name(v).to_owned())
        .collect())
}

/// Max-min hill-climbing: MMPC neighbourhoods, kept only where both
/// endpoints agree, then BIC hill-climbing with additions restricted to
/// that skeleton.
pub fn mmhc(table: &CohortTable, config: &LearnerConfig) -> Result<Dag> {
    config.validate()?;
    let view = DataView::from_table(table)?;
    let n = view.n_vars();
    let pcs = (0..n).map(|t| mmpc_idx(&view, t, config)).collect::<Result<Vec<_>>>()?;
    let mut allowed = vec![vec![false; n]; n];
    for a in 0..n {
        for &b in &pcs[a] {
            if pcs[b].contains(&a) {
                allowed[a][b] = true;
                allowed[b][a] = true;
            }
        }
    }
    climb(&view, config, Some(&allowed))
}
