use std::io::Write;

use serde::Serialize;

use crate::cohort::CohortTable;
use crate::error::Result;

/// Pearson correlations over every column, categorical columns taken as
/// their level index. `None` marks a pair with no variance on the
/// pairwise-complete rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        self.values[i][j]
    }

    /// Square CSV with a leading `variable` column; undefined entries are `NA`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(std::iter::once("variable").chain(self.names.iter().map(String::as_str)))?;
        for (name, row) in self.names.iter().zip(&self.values) {
            let cells = row.iter().map(|v| v.map_or_else(|| "NA".to_owned(), |x| x.to_string()));
            w.write_record(std::iter::once(name.clone()).chain(cells))?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn pearson(xs: &[Option<f64>], ys: &[Option<f64>]) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = xs.iter().zip(ys).filter_map(|(x, y)| Some(((*x)?, (*y)?))).collect();
    if pairs.len() < 2 {
        return None;
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn correlation_matrix(table: &CohortTable) -> CorrelationMatrix {
    let names: Vec<String> = table.variables().iter().map(|v| v.name.clone()).collect();
    let cols: Vec<Vec<Option<f64>>> = (0..names.len()).map(|c| table.column(c).map(|x| x.as_f64()).collect()).collect();
    let p = names.len();
    let mut values = vec![vec![None; p]; p];
    for i in 0..p {
        let self_r = pearson(&cols[i], &cols[i]);
        values[i][i] = self_r.map(|_| 1.0);
        for j in i + 1..p {
            let r = pearson(&cols[i], &cols[j]);
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    CorrelationMatrix { names, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::{Cell, Variable};

    #[test]
    fn basic_values() {
        let vars = vec![
            Variable::continuous("x"),
            Variable::continuous("neg"),
            Variable::continuous("flat"),
            Variable::categorical("c", ["a", "b"]),
        ];
        let rows = (0..6)
            .map(|i| {
                let x = i as f64;
                vec![Cell::Real(x), Cell::Real(-x), Cell::Real(2.0), Cell::Level((i % 2) as u32)]
            })
            .collect();
        let m = correlation_matrix(&CohortTable::new(vars, rows).unwrap());
        assert_eq!(m.get("x", "x"), Some(1.0));
        assert!((m.get("x", "neg").unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(m.get("flat", "x"), None);
        assert_eq!(m.get("flat", "flat"), None);
        assert!(m.get("x", "c").unwrap() > 0.0);

        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("variable,x,neg,flat,c\nx,1,-1,NA,"));
    }
}
