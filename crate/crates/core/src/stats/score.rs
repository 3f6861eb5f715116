use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::{DataView, ScoreValue};
use crate::cohort::CohortTable;
use crate::error::{Error, Result};

/// BIC of `node` given `parents`, computed on the rows complete in all of them.
pub fn bic_score(table: &CohortTable, node: &str, parents: &[&str]) -> Result<ScoreValue> {
    if parents.contains(&node) {
        return Err(Error::BadConfig(format!("`{node}` cannot be its own parent")));
    }
    let mut names = vec![node];
    names.extend_from_slice(parents);
    let view = DataView::new(table, &names)?;
    let ni = view.index(node)?;
    let mut pi = parents.iter().map(|p| view.index(p)).collect::<Result<Vec<_>>>()?;
    pi.sort_unstable();
    pi.dedup();
    let value = bic_idx(&view, ni, &pi)?;
    Ok(ScoreValue {
        node: node.to_owned(),
        parents: pi.iter().map(|&p| view.name(p).to_owned()).collect(),
        value,
    })
}

/// Per-node BIC on view indices; higher is better.
///
/// Continuous node: Gaussian linear regression on the parents, with
/// categorical parents one-hot coded (first observed level dropped).
/// Categorical node: multinomial likelihood per parent configuration, with
/// continuous parents entering as quartile bins.
pub fn bic_idx(view: &DataView, node: usize, parents: &[usize]) -> Result<f64> {
    if view.is_continuous(node) {
        gaussian_bic(view, node, parents)
    } else {
        multinomial_bic(view, node, parents)
    }
}

fn gaussian_bic(view: &DataView, node: usize, parents: &[usize]) -> Result<f64> {
    let n = view.n();
    // design columns after the intercept, centred for conditioning
    let mut design: Vec<Vec<f64>> = Vec::new();
    for &p in parents {
        match view.real(p) {
            Some(v) => {
                let mean = v.iter().sum::<f64>() / n.max(1) as f64;
                design.push(v.iter().map(|x| x - mean).collect());
            }
            None => {
                let codes = view.codes(p);
                for level in 1..view.card(p) as u32 {
                    design.push(codes.iter().map(|&c| f64::from(u8::from(c == level))).collect());
                }
            }
        }
    }
    let cols = design.len() + 1;
    let k = cols + 1;
    if n < k + 2 {
        return Err(Error::TooFewRows { needed: k + 2, have: n });
    }
    let y = view.real(node).expect("continuous node");
    let column = |j: usize, r: usize| if j == 0 { 1.0 } else { design[j - 1][r] };

    let mut xtx = DMatrix::<f64>::zeros(cols, cols);
    let mut xty = DVector::<f64>::zeros(cols);
    for r in 0..n {
        for i in 0..cols {
            let xi = column(i, r);
            xty[i] += xi * y[r];
            for j in i..cols {
                xtx[(i, j)] += xi * column(j, r);
            }
        }
    }
    for i in 0..cols {
        for j in 0..i {
            xtx[(i, j)] = xtx[(j, i)];
        }
    }
    let beta = xtx.cholesky().ok_or(Error::SingularDesign)?.solve(&xty);

    let mean_y = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean_y).powi(2)).sum();
    let rss: f64 = (0..n)
        .map(|r| {
            let fit: f64 = (0..cols).map(|j| beta[j] * column(j, r)).sum();
            (y[r] - fit).powi(2)
        })
        .sum();
    if !(tss > 0.0) || !rss.is_finite() || rss <= 1e-10 * tss {
        return Err(Error::SingularDesign);
    }
    let nf = n as f64;
    Ok(-0.5 * nf * (rss / nf).ln() - 0.5 * k as f64 * nf.ln())
}

fn multinomial_bic(view: &DataView, node: usize, parents: &[usize]) -> Result<f64> {
    let n = view.n();
    let r = view.card(node);
    let q: usize = parents.iter().map(|&p| view.card(p)).product();
    let params = (r.saturating_sub(1)) * q;
    if n < params + 2 {
        return Err(Error::TooFewRows { needed: params + 2, have: n });
    }
    let codes = view.codes(node);
    let mut counts: HashMap<u64, Vec<u64>> = HashMap::new();
    for row in 0..n {
        let mut key = 0u64;
        for &p in parents {
            key = key * view.card(p) as u64 + u64::from(view.codes(p)[row]);
        }
        counts.entry(key).or_insert_with(|| vec![0; r])[codes[row] as usize] += 1;
    }
    let mut keys: Vec<u64> = counts.keys().copied().collect();
    keys.sort_unstable();
    let mut ll = 0.0;
    for key in keys {
        let c = &counts[&key];
        let total: u64 = c.iter().sum();
        for &njk in c.iter().filter(|&&x| x > 0) {
            ll += njk as f64 * (njk as f64 / total as f64).ln();
        }
    }
    Ok(ll - 0.5 * params as f64 * (n as f64).ln())
}
