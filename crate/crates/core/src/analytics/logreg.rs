use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::Serialize;

use crate::cohort::{Cell, CohortTable};
use crate::error::{Error, Result};
use crate::rng;

const LAMBDA: f64 = 1e-4;
const GRAD_TOL: f64 = 1e-6;
const MAX_ITER: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogisticFit {
    pub intercept: f64,
    pub weights: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl LogisticFit {
    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.intercept + x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub folds: usize,
    /// in partition order
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
}

impl CvReport {
    pub fn line(&self) -> String {
        format!("Mean accuracy with Logistic Regression is {:.2}%", 100.0 * self.mean_accuracy)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn objective(x: &DMatrix<f64>, y: &[bool], beta: &DVector<f64>, penalty: &DVector<f64>) -> f64 {
    let eta = x * beta;
    let ll: f64 = eta.iter().zip(y).map(|(&z, &yi)| if yi { z } else { 0.0 } - softplus(z)).sum();
    ll - 0.5 * beta.dot(&penalty.component_mul(beta))
}

/// Ridge-penalised logistic regression by Newton–Raphson (IRLS) with step
/// halving, stopping once the gradient norm drops below 1e-6 or after 500
/// iterations.
pub fn fit_logistic(rows: &[Vec<f64>], y: &[bool], lambda: f64) -> Result<LogisticFit> {
    if rows.len() != y.len() {
        return Err(Error::BadConfig("feature rows and labels differ in length".into()));
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let p = rows[0].len();
    if rows.iter().any(|r| r.len() != p) {
        return Err(Error::BadConfig("ragged feature rows".into()));
    }
    let n = rows.len();
    let x = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { rows[i][j - 1] });
    let mut penalty = DVector::from_element(p + 1, lambda);
    // a whisker of ridge on the intercept keeps one-class folds solvable
    penalty[0] = 1e-10;

    let mut beta = DVector::zeros(p + 1);
    let mut current = objective(&x, y, &beta, &penalty);
    for it in 0..MAX_ITER {
        let eta = &x * &beta;
        let mu: Vec<f64> = eta.iter().map(|&z| sigmoid(z)).collect();
        let resid = DVector::from_fn(n, |i, _| f64::from(u8::from(y[i])) - mu[i]);
        let grad = x.transpose() * resid - penalty.component_mul(&beta);
        if grad.norm() < GRAD_TOL {
            return Ok(finish(beta, it, true));
        }
        let mut hess = DMatrix::<f64>::from_diagonal(&penalty);
        for i in 0..n {
            let w = mu[i] * (1.0 - mu[i]);
            let row = x.row(i);
            hess += w * row.transpose() * row;
        }
        let step = hess.cholesky().ok_or(Error::SingularDesign)?.solve(&grad);
        let mut t = 1.0;
        loop {
            let cand = &beta + t * &step;
            let value = objective(&x, y, &cand, &penalty);
            if value >= current || t < 1e-10 {
                beta = cand;
                current = value;
                break;
            }
            t *= 0.5;
        }
    }
    Ok(finish(beta, MAX_ITER, false))
}

fn finish(beta: DVector<f64>, iterations: usize, converged: bool) -> LogisticFit {
    LogisticFit { intercept: beta[0], weights: beta.iter().skip(1).copied().collect(), iterations, converged }
}

/// Complete-case design rows (continuous as is, categorical one-hot without
/// the first declared level) and binary labels.
fn design(table: &CohortTable, features: &[&str], label: &str) -> Result<(Vec<Vec<f64>>, Vec<bool>)> {
    let li = table.index_of(label)?;
    let lvar = &table.variables()[li];
    if let Some(levels) = lvar.levels() {
        if levels.len() != 2 {
            return Err(Error::NonBinaryLabel(label.to_owned()));
        }
    }
    let cols: Vec<usize> = features.iter().map(|f| table.index_of(f)).collect::<Result<_>>()?;
    if cols.contains(&li) {
        return Err(Error::BadConfig(format!("label `{label}` is also a feature")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    'rows: for row in table.rows() {
        let y = match row[li] {
            Cell::Level(l) => l == 1,
            Cell::Real(v) if v == 0.0 || v == 1.0 => v == 1.0,
            Cell::Real(_) => return Err(Error::NonBinaryLabel(label.to_owned())),
            Cell::Missing => continue,
        };
        let mut x = Vec::new();
        for &c in &cols {
            match (row[c], table.variables()[c].levels()) {
                (Cell::Missing, _) => continue 'rows,
                (Cell::Real(v), _) => x.push(v),
                (Cell::Level(l), Some(levels)) => x.extend((1..levels.len()).map(|k| f64::from(u8::from(k == l as usize)))),
                (Cell::Level(_), None) => unreachable!("level cell in a continuous column"),
            }
        }
        xs.push(x);
        ys.push(y);
    }
    Ok((xs, ys))
}

/// Seeded stratified partition: each class is shuffled and dealt round-robin
/// into the folds, continuing where the previous class stopped.
fn stratified_folds(y: &[bool], folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = rng::seeded(seed);
    let mut out = vec![Vec::new(); folds];
    let mut next = 0;
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            out[next % folds].push(i);
            next += 1;
        }
    }
    for f in &mut out {
        f.sort_unstable();
    }
    out
}

/// `folds`-fold cross-validated accuracy of a logistic regression of `label`
/// on `features`, thresholding predicted probability at 0.5.
pub fn logreg_cv(table: &CohortTable, features: &[&str], label: &str, folds: usize, seed: u64) -> Result<CvReport> {
    if folds < 2 {
        return Err(Error::BadConfig(format!("need at least 2 folds, got {folds}")));
    }
    let (xs, ys) = design(table, features, label)?;
    if xs.len() < folds {
        return Err(Error::TooFewRows { needed: folds, have: xs.len() });
    }
    let parts = stratified_folds(&ys, folds, seed);
    let mut accuracies = Vec::with_capacity(folds);
    for test in &parts {
        let mut in_test = vec![false; xs.len()];
        for &i in test {
            in_test[i] = true;
        }
        let (train_x, train_y): (Vec<Vec<f64>>, Vec<bool>) =
            (0..xs.len()).filter(|&i| !in_test[i]).map(|i| (xs[i].clone(), ys[i])).unzip();
        let fit = fit_logistic(&train_x, &train_y, LAMBDA)?;
        let correct = test.iter().filter(|&&i| (fit.probability(&xs[i]) >= 0.5) == ys[i]).count();
        accuracies.push(correct as f64 / test.len() as f64);
    }
    let mean_accuracy = accuracies.iter().sum::<f64>() / folds as f64;
    Ok(CvReport { folds, fold_accuracies: accuracies, mean_accuracy })
}
