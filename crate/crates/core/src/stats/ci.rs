use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::dist::{chi2_sf, two_sided_normal_p};
use super::{DataView, IndTestResult};
use crate::cohort::CohortTable;
use crate::error::{Error, Result};

const R_CLAMP: f64 = 1.0 - 1e-12;

fn check_query(x: &str, y: &str, z: &[&str]) -> Result<()> {
    if x == y || z.contains(&x) || z.contains(&y) {
        return Err(Error::BadConfig(
            "independence test needs distinct x and y outside the conditioning set".into(),
        ));
    }
    Ok(())
}

fn view_for(table: &CohortTable, x: &str, y: &str, z: &[&str]) -> Result<(DataView, usize, usize, Vec<usize>)> {
    let mut names = vec![x, y];
    names.extend_from_slice(z);
    let view = DataView::new(table, &names)?;
    let xi = view.index(x)?;
    let yi = view.index(y)?;
    let zi = z.iter().map(|n| view.index(n)).collect::<Result<Vec<_>>>()?;
    Ok((view, xi, yi, zi))
}

/// Fisher-z partial-correlation test on continuous variables.
pub fn fisher_z(table: &CohortTable, x: &str, y: &str, z: &[&str], alpha: f64) -> Result<IndTestResult> {
    check_query(x, y, z)?;
    for name in [x, y].iter().chain(z) {
        if !table.variable(name)?.is_continuous() {
            return Err(Error::NotContinuous((*name).to_owned()));
        }
    }
    let (view, xi, yi, zi) = view_for(table, x, y, z)?;
    fisher_z_idx(&view, xi, yi, &zi, alpha)
}

/// [`fisher_z`] on view indices. The pair is put in index order first, so
/// swapping `x` and `y` gives bit-identical results.
pub fn fisher_z_idx(view: &DataView, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<IndTestResult> {
    let n = view.n();
    let needed = z.len() + 4;
    if n < needed {
        return Err(Error::TooFewRows { needed, have: n });
    }
    let (a, b) = (x.min(y), x.max(y));
    let mut zs = z.to_vec();
    zs.sort_unstable();
    if [a, b].iter().chain(&zs).any(|&i| view.constant[i]) {
        return Err(Error::SingularCorrelation);
    }
    let r = if zs.is_empty() {
        view.corr(a, b)
    } else {
        let k = zs.len();
        let rzz = DMatrix::from_fn(k, k, |i, j| view.corr(zs[i], zs[j]));
        let chol = rzz.cholesky().ok_or(Error::SingularCorrelation)?;
        if chol.l_dirty().diagonal().iter().any(|d| d * d < 1e-12) {
            return Err(Error::SingularCorrelation);
        }
        let rza = DVector::from_fn(k, |i, _| view.corr(zs[i], a));
        let rzb = DVector::from_fn(k, |i, _| view.corr(zs[i], b));
        let u = chol.solve(&rza);
        let v = chol.solve(&rzb);
        let num = view.corr(a, b) - rza.dot(&v);
        let da = 1.0 - rza.dot(&u);
        let db = 1.0 - rzb.dot(&v);
        if da <= 1e-12 || db <= 1e-12 {
            return Err(Error::SingularCorrelation);
        }
        num / (da * db).sqrt()
    };
    if !r.is_finite() {
        return Err(Error::SingularCorrelation);
    }
    let r = r.clamp(-R_CLAMP, R_CLAMP);
    let dof = n - zs.len() - 3;
    let statistic = (dof as f64).sqrt() * r.atanh();
    Ok(IndTestResult::new(statistic, two_sided_normal_p(statistic), alpha, dof))
}

/// G-test of independence on categorical variables, summed over the strata
/// of `z`.
pub fn g_test(table: &CohortTable, x: &str, y: &str, z: &[&str], alpha: f64) -> Result<IndTestResult> {
    check_query(x, y, z)?;
    for name in [x, y].iter().chain(z) {
        if !table.variable(name)?.is_categorical() {
            return Err(Error::NotCategorical((*name).to_owned()));
        }
    }
    let (view, xi, yi, zi) = view_for(table, x, y, z)?;
    g_test_idx(&view, xi, yi, &zi, alpha)
}

/// [`g_test`] on view indices, using each column's discrete coding.
///
/// A stratum in which some level of `x` or `y` never occurs adds nothing
/// to either the statistic or the degrees of freedom.
pub fn g_test_idx(view: &DataView, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<IndTestResult> {
    let n = view.n();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, have: n });
    }
    let (a, b) = (x.min(y), x.max(y));
    let mut zs = z.to_vec();
    zs.sort_unstable();
    let (ca, cb) = (view.card(a), view.card(b));
    let (codes_a, codes_b) = (view.codes(a), view.codes(b));

    let mut strata: HashMap<u64, Vec<u64>> = HashMap::new();
    for row in 0..n {
        let mut key = 0u64;
        for &v in &zs {
            key = key * view.card(v) as u64 + u64::from(view.codes(v)[row]);
        }
        let cell = codes_a[row] as usize * cb + codes_b[row] as usize;
        strata.entry(key).or_insert_with(|| vec![0; ca * cb])[cell] += 1;
    }

    let mut keys: Vec<u64> = strata.keys().copied().collect();
    keys.sort_unstable();
    let mut g = 0.0;
    let mut dof = 0usize;
    for key in keys {
        let counts = &strata[&key];
        let rows: Vec<u64> = (0..ca).map(|i| counts[i * cb..(i + 1) * cb].iter().sum()).collect();
        let cols: Vec<u64> = (0..cb).map(|j| (0..ca).map(|i| counts[i * cb + j]).sum()).collect();
        if rows.contains(&0) || cols.contains(&0) {
            continue;
        }
        let total: u64 = rows.iter().sum();
        for i in 0..ca {
            for j in 0..cb {
                let o = counts[i * cb + j];
                if o > 0 {
                    let e = rows[i] as f64 * cols[j] as f64 / total as f64;
                    g += 2.0 * o as f64 * (o as f64 / e).ln();
                }
            }
        }
        dof += (ca - 1) * (cb - 1);
    }
    if dof == 0 {
        return Err(Error::AllStrataDegenerate);
    }
    let g = g.max(0.0);
    Ok(IndTestResult::new(g, chi2_sf(g, dof as f64), alpha, dof))
}

/// Fisher-z when every variable is continuous, otherwise the G-test on
/// the discrete coding (continuous columns enter as quartile bins).
pub fn ci_test(view: &DataView, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<IndTestResult> {
    if [x, y].iter().chain(z).all(|&i| view.is_continuous(i)) {
        fisher_z_idx(view, x, y, z, alpha)
    } else {
        g_test_idx(view, x, y, z, alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::{Cell, Variable};
    use crate::scm::{fixtures, sample};

    fn continuous(cols: &[(&str, Vec<f64>)]) -> CohortTable {
        let vars = cols.iter().map(|(n, _)| Variable::continuous(n)).collect();
        let n = cols[0].1.len();
        let rows = (0..n).map(|r| cols.iter().map(|(_, v)| Cell::Real(v[r])).collect()).collect();
        CohortTable::new(vars, rows).unwrap()
    }

    fn binary(cols: &[(&str, Vec<u32>)]) -> CohortTable {
        let vars = cols.iter().map(|(n, _)| Variable::categorical(n, ["0", "1"])).collect();
        let n = cols[0].1.len();
        let rows = (0..n).map(|r| cols.iter().map(|(_, v)| Cell::Level(v[r])).collect()).collect();
        CohortTable::new(vars, rows).unwrap()
    }

    #[test]
    fn orthogonal_columns_are_independent() {
        let t = continuous(&[("x", vec![1.0, -1.0, 1.0, -1.0]), ("y", vec![1.0, 1.0, -1.0, -1.0])]);
        let r = fisher_z(&t, "x", "y", &[], 0.05).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(r.independent);
    }

    #[test]
    fn identical_columns_are_dependent() {
        let v: Vec<f64> = (0..20).map(f64::from).collect();
        let t = continuous(&[("x", v.clone()), ("y", v)]);
        let r = fisher_z(&t, "x", "y", &[], 0.05).unwrap();
        assert!(!r.independent);
        assert!(r.p_value < 1e-12);
        assert!(r.statistic.is_finite());
    }

    #[test]
    fn fixture_b_partial_correlation() {
        // given Z: T = e, Y = 1.5 e + e'  =>  r = 1.5 / sqrt(3.25)
        let t = sample(&fixtures::fixture_b(), 100_000, 21);
        let r = fisher_z(&t, "T", "Y", &["Z"], 0.01).unwrap();
        let partial = (r.statistic / (r.dof as f64).sqrt()).tanh();
        assert!((partial - 1.5 / 3.25f64.sqrt()).abs() < 0.01, "{partial}");
        assert!(!r.independent);
        assert_eq!(r.dof, 100_000 - 1 - 3);
    }

    #[test]
    fn swapping_arguments_is_exact() {
        let t = sample(&fixtures::fixture_b(), 500, 2);
        let a = fisher_z(&t, "T", "Z", &["Y"], 0.05).unwrap();
        let b = fisher_z(&t, "Z", "T", &["Y"], 0.05).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn collinear_conditioning_set() {
        let x: Vec<f64> = (0..30).map(|i| f64::from(i).sin()).collect();
        let y: Vec<f64> = (0..30).map(|i| f64::from(i).cos()).collect();
        let z: Vec<f64> = (0..30).map(|i| f64::from(i * 7 % 11)).collect();
        let z2: Vec<f64> = z.iter().map(|v| 2.0 * v + 1.0).collect();
        let t = continuous(&[("x", x), ("y", y), ("z", z), ("z2", z2)]);
        assert!(matches!(
            fisher_z(&t, "x", "y", &["z", "z2"], 0.05),
            Err(Error::SingularCorrelation)
        ));
        // z2 is fully explained by z
        assert!(matches!(
            fisher_z(&t, "z2", "x", &["z"], 0.05),
            Err(Error::SingularCorrelation)
        ));
    }

    #[test]
    fn too_few_rows() {
        let t = continuous(&[("x", vec![1.0, 2.0, 3.0]), ("y", vec![1.0, 3.0, 2.0])]);
        assert!(matches!(
            fisher_z(&t, "x", "y", &[], 0.05),
            Err(Error::TooFewRows { needed: 4, have: 3 })
        ));
    }

    #[test]
    fn g_test_identical_rows_give_zero() {
        let t = binary(&[("x", vec![0, 0, 1, 1, 0, 0, 1, 1]), ("y", vec![0, 1, 0, 1, 0, 1, 0, 1])]);
        let r = g_test(&t, "x", "y", &[], 0.05).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.dof, 1);
        assert!(r.independent);
    }

    #[test]
    fn g_test_perfect_dependence() {
        let x: Vec<u32> = (0..100).map(|i| i % 2).collect();
        let t = binary(&[("x", x.clone()), ("y", x)]);
        let r = g_test(&t, "x", "y", &[], 0.05).unwrap();
        // 2 * 100 * ln 2 by hand
        assert!((r.statistic - 200.0 * 2f64.ln()).abs() < 1e-9);
        assert!(r.p_value < 1e-6);
        assert!(!r.independent);
    }

    #[test]
    fn g_test_skips_degenerate_strata() {
        // in stratum z=1, x is constant
        let t = binary(&[
            ("x", vec![0, 1, 0, 1, 0, 0, 0, 0]),
            ("y", vec![0, 0, 1, 1, 0, 1, 0, 1]),
            ("z", vec![0, 0, 0, 0, 1, 1, 1, 1]),
        ]);
        let r = g_test(&t, "x", "y", &["z"], 0.05).unwrap();
        assert_eq!(r.dof, 1);
        let all_constant = binary(&[("x", vec![0, 0, 0, 0]), ("y", vec![0, 1, 0, 1])]);
        assert!(matches!(
            g_test(&all_constant, "x", "y", &[], 0.05),
            Err(Error::AllStrataDegenerate)
        ));
    }

    #[test]
    fn kind_checks() {
        let t = continuous(&[("x", vec![1.0; 5]), ("y", vec![2.0; 5])]);
        assert!(matches!(g_test(&t, "x", "y", &[], 0.05), Err(Error::NotCategorical(_))));
        assert!(fisher_z(&t, "x", "x", &[], 0.05).is_err());
    }
}
