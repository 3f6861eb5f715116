//! Typed observational cohort tables.
//!
//! A [`CohortTable`] is a rectangular, row-major grid of [`Cell`]s whose
//! columns are described by [`Variable`]s. Tables are immutable once built;
//! every transformation returns a new table.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Literal written for, and accepted as, a missing cell (besides the empty string).
pub const MISSING_LITERAL: &str = "NA";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Treatment,
    PrimaryOutcome,
    SecondaryOutcome,
    Covariate,
}

impl Role {
    pub fn is_outcome(self) -> bool {
        matches!(self, Role::PrimaryOutcome | Role::SecondaryOutcome)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VarKind {
    Categorical { levels: Vec<String> },
    Continuous { unit: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VariableSpec", into = "VariableSpec")]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub role: Role,
}

impl Variable {
    pub fn categorical<S: Into<String>>(name: &str, levels: impl IntoIterator<Item = S>) -> Self {
        Variable {
            name: name.to_owned(),
            kind: VarKind::Categorical {
                levels: levels.into_iter().map(Into::into).collect(),
            },
            role: Role::Covariate,
        }
    }

    pub fn continuous(name: &str) -> Self {
        Variable {
            name: name.to_owned(),
            kind: VarKind::Continuous {
                unit: String::new(),
            },
            role: Role::Covariate,
        }
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn with_unit(mut self, unit: &str) -> Self {
        if let VarKind::Continuous { unit: u } = &mut self.kind {
            *u = unit.to_owned();
        }
        self
    }

    pub fn levels(&self) -> Option<&[String]> {
        match &self.kind {
            VarKind::Categorical { levels } => Some(levels),
            VarKind::Continuous { .. } => None,
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.kind, VarKind::Continuous { .. })
    }

    pub fn is_categorical(&self) -> bool {
        !self.is_continuous()
    }

    pub fn level_index(&self, level: &str) -> Option<u32> {
        self.levels()?
            .iter()
            .position(|l| l == level)
            .map(|i| i as u32)
    }

    fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Schema("variable name is empty".into()));
        }
        if let VarKind::Categorical { levels } = &self.kind {
            if levels.len() < 2 {
                return Err(Error::Schema(format!(
                    "categorical `{}` needs at least two levels",
                    self.name
                )));
            }
            let mut seen = HashSet::new();
            for level in levels {
                if !seen.insert(level) {
                    return Err(Error::Schema(format!(
                        "duplicate level `{level}` in `{}`",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Serialized form of a [`Variable`]:
/// `{"name": "age", "kind": "continuous", "unit": "years", "role": "covariate"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableSpec {
    name: String,
    kind: KindTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    levels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unit: Option<String>,
    #[serde(default = "default_role")]
    role: Role,
}

fn default_role() -> Role {
    Role::Covariate
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum KindTag {
    Categorical,
    Continuous,
}

impl TryFrom<VariableSpec> for Variable {
    type Error = Error;

    fn try_from(spec: VariableSpec) -> Result<Self> {
        let kind = match spec.kind {
            KindTag::Categorical => VarKind::Categorical {
                levels: spec.levels.ok_or_else(|| {
                    Error::Schema(format!("categorical `{}` has no levels", spec.name))
                })?,
            },
            KindTag::Continuous => {
                if spec.levels.is_some() {
                    return Err(Error::Schema(format!(
                        "continuous `{}` must not declare levels",
                        spec.name
                    )));
                }
                VarKind::Continuous {
                    unit: spec.unit.unwrap_or_default(),
                }
            }
        };
        let var = Variable {
            name: spec.name,
            kind,
            role: spec.role,
        };
        var.validate()?;
        Ok(var)
    }
}

impl From<Variable> for VariableSpec {
    fn from(v: Variable) -> Self {
        let (kind, levels, unit) = match v.kind {
            VarKind::Categorical { levels } => (KindTag::Categorical, Some(levels), None),
            VarKind::Continuous { unit } => (KindTag::Continuous, None, Some(unit)),
        };
        VariableSpec {
            name: v.name,
            kind,
            levels,
            unit,
            role: v.role,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Level(u32),
    Real(f64),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    /// Numeric reading: reals as-is, levels as their index.
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Level(i) => Some(i as f64),
            Cell::Real(x) => Some(x),
            Cell::Missing => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortTable {
    variables: Vec<Variable>,
    rows: Vec<Vec<Cell>>,
}

impl CohortTable {
    pub fn new(variables: Vec<Variable>, rows: Vec<Vec<Cell>>) -> Result<Self> {
        check_schema(&variables)?;
        for (r, row) in rows.iter().enumerate() {
            if row.len() != variables.len() {
                return Err(Error::BadCell(format!(
                    "row {} has {} cells, expected {}",
                    r + 1,
                    row.len(),
                    variables.len()
                )));
            }
            for (cell, var) in row.iter().zip(&variables) {
                check_cell(cell, var).map_err(|msg| {
                    Error::BadCell(format!("row {}, `{}`: {msg}", r + 1, var.name))
                })?;
            }
        }
        Ok(CohortTable { variables, rows })
    }

    pub fn empty(variables: Vec<Variable>) -> Result<Self> {
        Self::new(variables, Vec::new())
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.variables.len()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_owned()))
    }

    pub fn variable(&self, name: &str) -> Result<&Variable> {
        Ok(&self.variables[self.index_of(name)?])
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = Cell> + '_ {
        self.rows.iter().map(move |r| r[col])
    }

    /// Numeric view of a column; levels become their index.
    pub fn numeric(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let col = self.index_of(name)?;
        Ok(self.column(col).map(|c| c.as_f64()).collect())
    }

    /// The variables playing `role`, in column order.
    pub fn with_role(&self, role: Role) -> impl Iterator<Item = &Variable> {
        self.variables.iter().filter(move |v| v.role == role)
    }

    /// A new table with `var` appended as the last column.
    pub fn with_column(&self, var: Variable, cells: Vec<Cell>) -> Result<Self> {
        if cells.len() != self.rows.len() {
            return Err(Error::BadCell(format!(
                "new column `{}` has {} cells for {} rows",
                var.name,
                cells.len(),
                self.rows.len()
            )));
        }
        let mut variables = self.variables.clone();
        variables.push(var);
        let rows = self
            .rows
            .iter()
            .zip(cells)
            .map(|(r, c)| {
                let mut r = r.clone();
                r.push(c);
                r
            })
            .collect();
        Self::new(variables, rows)
    }

    /// A new table where column `name` is replaced by `var` / `cells`.
    pub fn replace_column(&self, name: &str, var: Variable, cells: Vec<Cell>) -> Result<Self> {
        let col = self.index_of(name)?;
        if cells.len() != self.rows.len() {
            return Err(Error::BadCell(format!(
                "replacement for `{name}` has {} cells for {} rows",
                cells.len(),
                self.rows.len()
            )));
        }
        let mut variables = self.variables.clone();
        variables[col] = var;
        let rows = self
            .rows
            .iter()
            .zip(cells)
            .map(|(r, c)| {
                let mut r = r.clone();
                r[col] = c;
                r
            })
            .collect();
        Self::new(variables, rows)
    }

    /// Rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        CohortTable {
            variables: self.variables.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Restrict to the named columns, in the given order.
    pub fn select_columns(&self, names: &[&str]) -> Result<Self> {
        let cols = names
            .iter()
            .map(|n| self.index_of(n))
            .collect::<Result<Vec<_>>>()?;
        let variables = cols.iter().map(|&c| self.variables[c].clone()).collect();
        let rows = self
            .rows
            .iter()
            .map(|r| cols.iter().map(|&c| r[c]).collect())
            .collect();
        Self::new(variables, rows)
    }

    /// Change a variable's role.
    pub fn with_role_of(&self, name: &str, role: Role) -> Result<Self> {
        let col = self.index_of(name)?;
        let mut out = self.clone();
        out.variables[col].role = role;
        Ok(out)
    }

    /// Map missing cells of a categorical variable to an explicit level,
    /// appending the level if it is not declared yet.
    pub fn fill_missing_level(&self, name: &str, level: &str) -> Result<Self> {
        let col = self.index_of(name)?;
        let mut var = self.variables[col].clone();
        let VarKind::Categorical { levels } = &mut var.kind else {
            return Err(Error::NotCategorical(name.to_owned()));
        };
        let idx = match levels.iter().position(|l| l == level) {
            Some(i) => i,
            None => {
                levels.push(level.to_owned());
                levels.len() - 1
            }
        } as u32;
        let cells = self
            .column(col)
            .map(|c| if c.is_missing() { Cell::Level(idx) } else { c })
            .collect();
        self.replace_column(name, var, cells)
    }

    pub fn render_cell(&self, col: usize, cell: Cell) -> String {
        match cell {
            Cell::Missing => MISSING_LITERAL.to_owned(),
            Cell::Real(x) => format!("{x}"),
            Cell::Level(i) => self.variables[col].levels().expect("categorical")[i as usize].clone(),
        }
    }
}

fn check_schema(variables: &[Variable]) -> Result<()> {
    let mut names = HashSet::new();
    for v in variables {
        v.validate()?;
        if !names.insert(v.name.as_str()) {
            return Err(Error::Schema(format!("duplicate variable `{}`", v.name)));
        }
    }
    Ok(())
}

fn check_cell(cell: &Cell, var: &Variable) -> std::result::Result<(), String> {
    match (cell, &var.kind) {
        (Cell::Missing, _) => Ok(()),
        (Cell::Level(i), VarKind::Categorical { levels }) if (*i as usize) < levels.len() => Ok(()),
        (Cell::Level(i), VarKind::Categorical { .. }) => Err(format!("level index {i} out of range")),
        (Cell::Real(x), VarKind::Continuous { .. }) if x.is_finite() => Ok(()),
        (Cell::Real(x), VarKind::Continuous { .. }) => Err(format!("non-finite value {x}")),
        _ => Err("cell kind does not match variable kind".into()),
    }
}

/// Reads a cohort from a CSV file; see [`read_csv`].
pub fn load_csv(path: impl AsRef<Path>, schema: &[Variable]) -> Result<CohortTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

/// Parses RFC 4180 CSV with a header row. Columns are matched to `schema`
/// by name in any order; columns absent from the schema are ignored. The
/// result has the schema's column order.
pub fn read_csv<R: Read>(reader: R, schema: &[Variable]) -> Result<CohortTable> {
    check_schema(schema)?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    let positions = schema
        .iter()
        .map(|v| {
            header
                .iter()
                .position(|h| h == v.name)
                .ok_or_else(|| Error::MissingColumn(v.name.clone()))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row_no = r + 1;
        let row = schema
            .iter()
            .zip(&positions)
            .map(|(var, &p)| parse_cell(record.get(p).unwrap_or(""), var, row_no))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(CohortTable {
        variables: schema.to_vec(),
        rows,
    })
}

fn parse_cell(raw: &str, var: &Variable, row: usize) -> Result<Cell> {
    if raw.is_empty() || raw == MISSING_LITERAL {
        return Ok(Cell::Missing);
    }
    match &var.kind {
        VarKind::Categorical { levels } => levels
            .iter()
            .position(|l| l == raw)
            .map(|i| Cell::Level(i as u32))
            .ok_or_else(|| Error::UnknownLevel {
                row,
                column: var.name.clone(),
                value: raw.to_owned(),
            }),
        VarKind::Continuous { .. } => match raw.trim().parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(Cell::Real(x)),
            _ => Err(Error::MalformedNumber {
                row,
                column: var.name.clone(),
                value: raw.to_owned(),
            }),
        },
    }
}

/// Writes the table as CSV; missing cells become `NA` and reals use the
/// shortest representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(table: &CohortTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(table.variables.iter().map(|v| v.name.as_str()))?;
    for row in &table.rows {
        w.write_record(
            row.iter()
                .enumerate()
                .map(|(c, &cell)| table.render_cell(c, cell)),
        )?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_csv(table: &CohortTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(table, std::io::BufWriter::new(file))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCount {
    pub level: String,
    pub count: usize,
    /// Share of non-missing cells, in percent; `None` when all are missing.
    pub percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VariableSummary {
    Categorical {
        name: String,
        counts: Vec<LevelCount>,
        missing: usize,
    },
    Continuous {
        name: String,
        n: usize,
        mean: Option<f64>,
        sd: Option<f64>,
        min: Option<f64>,
        max: Option<f64>,
        missing: usize,
    },
}

impl VariableSummary {
    pub fn name(&self) -> &str {
        match self {
            VariableSummary::Categorical { name, .. } | VariableSummary::Continuous { name, .. } => {
                name
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n_rows: usize,
    pub variables: Vec<VariableSummary>,
}

impl SummaryStats {
    pub fn get(&self, name: &str) -> Option<&VariableSummary> {
        self.variables.iter().find(|v| v.name() == name)
    }

    /// Flat CSV: one line per categorical level and one per continuous variable.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["variable", "level", "count", "percent", "mean", "sd", "min", "max", "missing"])?;
        let fmt = |x: Option<f64>| x.map(|v| format!("{v}")).unwrap_or_default();
        for v in &self.variables {
            match v {
                VariableSummary::Categorical { name, counts, missing } => {
                    for c in counts {
                        w.write_record([
                            name.clone(),
                            c.level.clone(),
                            c.count.to_string(),
                            fmt(c.percent),
                            String::new(),
                            String::new(),
                            String::new(),
                            String::new(),
                            missing.to_string(),
                        ])?;
                    }
                }
                VariableSummary::Continuous { name, n, mean, sd, min, max, missing } => {
                    w.write_record([
                        name.clone(),
                        String::new(),
                        n.to_string(),
                        String::new(),
                        fmt(*mean),
                        fmt(*sd),
                        fmt(*min),
                        fmt(*max),
                        missing.to_string(),
                    ])?;
                }
            }
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Report lines in the style `681 (40.75%) Haloperidol`.
impl fmt::Display for SummaryStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rows: {}", self.n_rows)?;
        for v in &self.variables {
            match v {
                VariableSummary::Categorical { name, counts, missing } => {
                    let parts: Vec<String> = counts
                        .iter()
                        .map(|c| match c.percent {
                            Some(p) => format!("{} ({p:.2}%) {}", c.count, c.level),
                            None => format!("{} {}", c.count, c.level),
                        })
                        .collect();
                    write!(f, "{name}: {}", parts.join(", "))?;
                    if *missing > 0 {
                        write!(f, "; missing {missing}")?;
                    }
                    writeln!(f)?;
                }
                VariableSummary::Continuous { name, n, mean, sd, min, max, missing } => {
                    let show = |x: &Option<f64>| x.map_or("undefined".to_owned(), |v| format!("{v:.2}"));
                    writeln!(
                        f,
                        "{name}: n {n}, mean {}, sd {}, min {}, max {}, missing {missing}",
                        show(mean),
                        show(sd),
                        show(min),
                        show(max)
                    )?;
                }
            }
        }
        Ok(())
    }
}

pub fn summarize(table: &CohortTable) -> SummaryStats {
    let variables = table
        .variables
        .iter()
        .enumerate()
        .map(|(col, var)| match &var.kind {
            VarKind::Categorical { levels } => {
                let mut counts = vec![0usize; levels.len()];
                let mut missing = 0;
                for cell in table.column(col) {
                    match cell {
                        Cell::Level(i) => counts[i as usize] += 1,
                        _ => missing += 1,
                    }
                }
                let present: usize = counts.iter().sum();
                VariableSummary::Categorical {
                    name: var.name.clone(),
                    counts: levels
                        .iter()
                        .zip(counts)
                        .map(|(level, count)| LevelCount {
                            level: level.clone(),
                            count,
                            percent: (present > 0).then(|| 100.0 * count as f64 / present as f64),
                        })
                        .collect(),
                    missing,
                }
            }
            VarKind::Continuous { .. } => {
                let values: Vec<f64> = table.column(col).filter_map(|c| c.as_f64()).collect();
                let n = values.len();
                let mean = (n > 0).then(|| values.iter().sum::<f64>() / n as f64);
                let sd = mean.filter(|_| n > 1).map(|m| {
                    (values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
                });
                VariableSummary::Continuous {
                    name: var.name.clone(),
                    n,
                    mean,
                    sd,
                    min: values.iter().copied().reduce(f64::min),
                    max: values.iter().copied().reduce(f64::max),
                    missing: table.n_rows() - n,
                }
            }
        })
        .collect();
    SummaryStats {
        n_rows: table.n_rows(),
        variables,
    }
}

/// Bin label for half-open bin `i`.
pub fn bin_label(i: usize) -> String {
    format!("bin{i}")
}

/// Replace a continuous variable by a categorical one with `edges.len() + 1`
/// half-open bins `[-inf, e1), [e1, e2), ..., [ek, inf)`.
pub fn discretize(table: &CohortTable, variable: &str, edges: &[f64]) -> Result<CohortTable> {
    let col = table.index_of(variable)?;
    let var = &table.variables[col];
    if !var.is_continuous() {
        return Err(Error::NotContinuous(variable.to_owned()));
    }
    if edges.is_empty()
        || edges.iter().any(|e| !e.is_finite())
        || edges.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::UnsortedEdges);
    }
    let new_var = Variable {
        name: var.name.clone(),
        kind: VarKind::Categorical {
            levels: (0..=edges.len()).map(bin_label).collect(),
        },
        role: var.role,
    };
    let cells = table
        .column(col)
        .map(|c| match c {
            Cell::Real(x) => Cell::Level(edges.partition_point(|&e| e <= x) as u32),
            other => other,
        })
        .collect();
    table.replace_column(variable, new_var, cells)
}

/// Edges splitting the non-missing values of a column into `bins`
/// roughly equal-frequency half-open bins. Duplicate edges are dropped, so
/// heavily tied data can yield fewer bins.
pub fn quantile_edges(values: &[f64], bins: usize) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if sorted.is_empty() || bins < 2 {
        return Vec::new();
    }
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut edges: Vec<f64> = (1..bins).map(|i| sorted[(i * n / bins).min(n - 1)]).collect();
    edges.dedup();
    // An edge at the minimum would leave the first bin empty.
    edges.retain(|&e| e > sorted[0]);
    edges
}

/// Uniform sample of `floor(fraction * n)` rows without replacement,
/// returned in their original order.
pub fn subset_rows(table: &CohortTable, fraction: f64, seed: u64) -> Result<CohortTable> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::BadFraction(fraction));
    }
    let n = table.n_rows();
    let m = (fraction * n as f64).floor() as usize;
    let mut rng = rng::seeded(seed);
    let mut picked = index::sample(&mut rng, n, m).into_vec();
    picked.sort_unstable();
    Ok(table.select_rows(&picked))
}
