//! Backdoor identification, adjustment formulas and stratified ATEs.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cohort::{Cell, CohortTable};
use crate::error::{Error, Result};
use crate::graph::{d_separated_idx, Dag};

/// All inclusion-minimal backdoor adjustment sets for `treatment -> outcome`,
/// sorted by size and then lexicographically.
///
/// A set is valid when it holds no descendant of the treatment and
/// d-separates treatment and outcome once the treatment's outgoing edges
/// are removed. Minimal such sets lie inside the ancestors of the pair, so
/// they are exactly the minimal treatment/outcome separators of the moral
/// graph of that ancestral set, after the treatment's descendants have been
/// eliminated (their neighbourhoods joined into cliques, since they can
/// never be conditioned on).
pub fn backdoor_sets(g: &Dag, treatment: &str, outcome: &str) -> Result<Vec<BTreeSet<String>>> {
    let t = g.index(treatment)?;
    let y = g.index(outcome)?;
    if t == y {
        return Err(Error::BadGraph("treatment and outcome must differ".into()));
    }
    let n = g.n();
    let forbidden = g.descendants([t]);
    let no_valid = || Error::NoValidSet {
        treatment: treatment.to_owned(),
        outcome: outcome.to_owned(),
    };

    // G' = G without the treatment's outgoing edges
    let parents: Vec<BTreeSet<usize>> = (0..n)
        .map(|v| g.parents(v).iter().copied().filter(|&p| p != t).collect())
        .collect();
    let mut anc = vec![false; n];
    let mut stack = vec![t, y];
    while let Some(v) = stack.pop() {
        if !std::mem::replace(&mut anc[v], true) {
            stack.extend(parents[v].iter().copied());
        }
    }

    // moral graph of G'[anc]
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for v in (0..n).filter(|&v| anc[v]) {
        let ps: Vec<usize> = parents[v].iter().copied().collect();
        for (i, &p) in ps.iter().enumerate() {
            adj[v].insert(p);
            adj[p].insert(v);
            for &q in &ps[i + 1..] {
                adj[p].insert(q);
                adj[q].insert(p);
            }
        }
    }
    let mut alive: Vec<bool> = anc.clone();
    for f in forbidden.iter().copied().filter(|&f| anc[f] && f != t && f != y) {
        let nb: Vec<usize> = adj[f].iter().copied().filter(|&v| alive[v]).collect();
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        alive[f] = false;
        for &v in &nb {
            adj[v].remove(&f);
        }
        adj[f].clear();
    }
    if adj[t].contains(&y) {
        return Err(no_valid());
    }
    let h = Graph { adj, alive };
    if !h.connected(t, y, &BTreeSet::new()) {
        return Ok(vec![BTreeSet::new()]);
    }

    let mut named: Vec<Vec<String>> = h
        .minimal_separators()
        .into_iter()
        .filter(|s| h.separates_fully(t, y, s))
        .map(|s| {
            let mut v: Vec<String> = s.into_iter().map(|i| g.name(i).to_owned()).collect();
            v.sort();
            v
        })
        .collect();
    if named.is_empty() {
        return Err(no_valid());
    }
    named.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(named.into_iter().map(|v| v.into_iter().collect()).collect())
}

/// Whether `z` satisfies the backdoor criterion for `treatment -> outcome`.
pub fn satisfies_backdoor(g: &Dag, treatment: &str, outcome: &str, z: &[&str]) -> Result<bool> {
    let t = g.index(treatment)?;
    let y = g.index(outcome)?;
    let zs = z.iter().map(|v| g.index(v)).collect::<Result<BTreeSet<_>>>()?;
    if t == y || zs.contains(&t) || zs.contains(&y) {
        return Err(Error::BadGraph("treatment, outcome and adjusters must be distinct".into()));
    }
    if zs.iter().any(|v| g.descendants([t]).contains(v)) {
        return Ok(false);
    }
    let edges = g.edges().into_iter().filter(|&(a, _)| a != t);
    let cut = Dag::from_indices(g.nodes().to_vec(), edges)?;
    Ok(d_separated_idx(&cut, t, y, &zs))
}

/// Undirected graph over the surviving vertices.
struct Graph {
    adj: Vec<BTreeSet<usize>>,
    alive: Vec<bool>,
}

impl Graph {
    /// Components of the live graph minus `removed`.
    fn components(&self, removed: &BTreeSet<usize>) -> Vec<BTreeSet<usize>> {
        let n = self.adj.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if !self.alive[s] || removed.contains(&s) || seen[s] {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut queue = VecDeque::from([s]);
            seen[s] = true;
            while let Some(v) = queue.pop_front() {
                comp.insert(v);
                for &w in &self.adj[v] {
                    if !seen[w] && !removed.contains(&w) {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    fn neighbourhood(&self, comp: &BTreeSet<usize>) -> BTreeSet<usize> {
        comp.iter()
            .flat_map(|&v| self.adj[v].iter().copied())
            .filter(|w| !comp.contains(w))
            .collect()
    }

    fn connected(&self, a: usize, b: usize, removed: &BTreeSet<usize>) -> bool {
        self.components(removed).iter().any(|c| c.contains(&a) && c.contains(&b))
    }

    /// `s` separates `a` from `b` and both components are full (every
    /// vertex of `s` has a neighbour in each), i.e. `s` is a minimal
    /// `a`-`b` separator.
    fn separates_fully(&self, a: usize, b: usize, s: &BTreeSet<usize>) -> bool {
        if s.contains(&a) || s.contains(&b) {
            return false;
        }
        let comps = self.components(s);
        let ca = comps.iter().find(|c| c.contains(&a));
        let cb = comps.iter().find(|c| c.contains(&b));
        match (ca, cb) {
            (Some(ca), Some(cb)) if !ca.contains(&b) => {
                self.neighbourhood(ca) == *s && self.neighbourhood(cb) == *s
            }
            _ => false,
        }
    }

    /// Every minimal separator of the graph (Berry, Bordat and Cogis).
    fn minimal_separators(&self) -> Vec<BTreeSet<usize>> {
        let n = self.adj.len();
        let mut seen: HashSet<BTreeSet<usize>> = HashSet::new();
        let mut queue: VecDeque<BTreeSet<usize>> = VecDeque::new();
        let push = |s: BTreeSet<usize>, seen: &mut HashSet<BTreeSet<usize>>, queue: &mut VecDeque<_>| {
            if !s.is_empty() && seen.insert(s.clone()) {
                queue.push_back(s);
            }
        };
        for v in (0..n).filter(|&v| self.alive[v]) {
            let mut closed: BTreeSet<usize> = self.adj[v].clone();
            closed.insert(v);
            for c in self.components(&closed) {
                push(self.neighbourhood(&c), &mut seen, &mut queue);
            }
        }
        let mut out = Vec::new();
        while let Some(s) = queue.pop_front() {
            for &x in &s {
                let mut removed = s.clone();
                removed.extend(self.adj[x].iter().copied());
                for c in self.components(&removed) {
                    push(self.neighbourhood(&c), &mut seen, &mut queue);
                }
            }
            out.push(s);
        }
        out
    }
}

/// `P(outcome | do(treatment))` by adjustment over `adjustment_set`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjustmentFormula {
    pub treatment: String,
    pub outcome: String,
    pub adjustment_set: BTreeSet<String>,
}

impl AdjustmentFormula {
    pub fn new<S: AsRef<str>>(treatment: &str, outcome: &str, adjustment_set: impl IntoIterator<Item = S>) -> Result<Self> {
        let set: BTreeSet<String> = adjustment_set.into_iter().map(|s| s.as_ref().to_owned()).collect();
        if treatment == outcome || set.contains(treatment) || set.contains(outcome) {
            return Err(Error::BadGraph("treatment, outcome and adjusters must be distinct".into()));
        }
        Ok(AdjustmentFormula {
            treatment: treatment.to_owned(),
            outcome: outcome.to_owned(),
            adjustment_set: set,
        })
    }

    /// Formula using the first minimal backdoor set of `g`.
    pub fn identify(g: &Dag, treatment: &str, outcome: &str) -> Result<Self> {
        let sets = backdoor_sets(g, treatment, outcome)?;
        Self::new(treatment, outcome, &sets[0])
    }

    pub fn render(&self) -> String {
        render_formula(self)
    }
}

/// `P(y | do(t)) = Σ_{z1, z2} P(y | t, z1, z2) P(z1, z2)`, or
/// `P(y | do(t)) = P(y | t)` with nothing to adjust for.
pub fn render_formula(f: &AdjustmentFormula) -> String {
    let (t, y) = (&f.treatment, &f.outcome);
    if f.adjustment_set.is_empty() {
        return format!("P({y} | do({t})) = P({y} | {t})");
    }
    let zs = f.adjustment_set.iter().map(String::as_str).collect::<Vec<_>>().join(", ");
    format!("P({y} | do({t})) = Σ_{{{zs}}} P({y} | {t}, {zs}) P({zs})")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AteEstimate {
    pub treatment_level_hi: String,
    pub treatment_level_lo: String,
    pub value: f64,
    /// complete rows per treatment level
    pub arm_sizes: BTreeMap<String, usize>,
    pub strata_used: usize,
    pub strata_skipped: usize,
}

fn categorical_levels<'a>(table: &'a CohortTable, name: &str) -> Result<&'a [String]> {
    table
        .variable(name)?
        .levels()
        .ok_or_else(|| Error::NotCategorical(name.to_owned()))
}

/// Stratified contrast `Σ_z (ȳ_hi,z − ȳ_lo,z)·P(z)`.
///
/// Strata are the observed combinations of the (categorical) adjusters.
/// `P(z)` counts every complete row in the stratum, whatever its arm, and is
/// renormalised over the strata that contain both contrasted arms. A
/// categorical outcome enters as its level index, so a binary outcome is a
/// 0/1 indicator of its second level.
pub fn ate_stratified(
    table: &CohortTable,
    treatment: &str,
    outcome: &str,
    adjustment: &[&str],
    hi: &str,
    lo: &str,
) -> Result<AteEstimate> {
    let levels = categorical_levels(table, treatment)?;
    let level = |l: &str| -> Result<u32> {
        levels
            .iter()
            .position(|x| x == l)
            .map(|i| i as u32)
            .ok_or_else(|| Error::UnknownTreatmentLevel {
                variable: treatment.to_owned(),
                level: l.to_owned(),
            })
    };
    let (hi_i, lo_i) = (level(hi)?, level(lo)?);
    if let Some(out_levels) = table.variable(outcome)?.levels() {
        if out_levels.len() > 2 {
            return Err(Error::NotContinuous(outcome.to_owned()));
        }
    }
    for z in adjustment {
        categorical_levels(table, z)?;
        if *z == treatment || *z == outcome {
            return Err(Error::BadGraph("adjusters must differ from treatment and outcome".into()));
        }
    }
    let ti = table.index_of(treatment)?;
    let yi = table.index_of(outcome)?;
    let zi = adjustment.iter().map(|z| table.index_of(z)).collect::<Result<Vec<_>>>()?;

    #[derive(Default)]
    struct Stratum {
        total: usize,
        sum_hi: f64,
        n_hi: usize,
        sum_lo: f64,
        n_lo: usize,
    }
    let mut strata: BTreeMap<Vec<u32>, Stratum> = BTreeMap::new();
    let mut arms = vec![0usize; levels.len()];
    'rows: for row in table.rows() {
        let Cell::Level(t) = row[ti] else { continue };
        let Some(y) = row[yi].as_f64() else { continue };
        let mut key = Vec::with_capacity(zi.len());
        for &c in &zi {
            match row[c] {
                Cell::Level(l) => key.push(l),
                _ => continue 'rows,
            }
        }
        arms[t as usize] += 1;
        let s = strata.entry(key).or_default();
        s.total += 1;
        if t == hi_i {
            s.sum_hi += y;
            s.n_hi += 1;
        } else if t == lo_i {
            s.sum_lo += y;
            s.n_lo += 1;
        }
    }

    let mut weighted = 0.0;
    let mut used_rows = 0usize;
    let (mut used, mut skipped) = (0usize, 0usize);
    for s in strata.values() {
        if s.n_hi == 0 || s.n_lo == 0 {
            skipped += 1;
            continue;
        }
        used += 1;
        used_rows += s.total;
        let diff = s.sum_hi / s.n_hi as f64 - s.sum_lo / s.n_lo as f64;
        weighted += diff * s.total as f64;
    }
    if used == 0 {
        return Err(Error::NoUsableStrata);
    }
    Ok(AteEstimate {
        treatment_level_hi: hi.to_owned(),
        treatment_level_lo: lo.to_owned(),
        value: weighted / used_rows as f64,
        arm_sizes: levels.iter().cloned().zip(arms).collect(),
        strata_used: used,
        strata_skipped: skipped,
    })
}

/// Everything needed to recompute one estimate; what the refuters perturb.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSpec {
    pub treatment: String,
    pub outcome: String,
    #[serde(default)]
    pub adjustment: Vec<String>,
    pub hi: String,
    pub lo: String,
    /// Multiplies the raw contrast, e.g. to express it per unit of a
    /// binned dose.
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl EstimateSpec {
    pub fn new(treatment: &str, outcome: &str, adjustment: &[&str], hi: &str, lo: &str) -> Self {
        EstimateSpec {
            treatment: treatment.to_owned(),
            outcome: outcome.to_owned(),
            adjustment: adjustment.iter().map(|s| s.to_string()).collect(),
            hi: hi.to_owned(),
            lo: lo.to_owned(),
            scale: 1.0,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn estimate(&self, table: &CohortTable) -> Result<AteEstimate> {
        let adj: Vec<&str> = self.adjustment.iter().map(String::as_str).collect();
        let mut est = ate_stratified(table, &self.treatment, &self.outcome, &adj, &self.hi, &self.lo)?;
        est.value *= self.scale;
        Ok(est)
    }

    pub fn value(&self, table: &CohortTable) -> Result<f64> {
        self.estimate(table).map(|e| e.value)
    }
}

/// A pair of treatment levels with its report label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Contrast {
    pub hi: String,
    pub lo: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Contrast {
    pub fn new(hi: &str, lo: &str) -> Self {
        Contrast {
            hi: hi.to_owned(),
            lo: lo.to_owned(),
            label: None,
        }
    }

    pub fn labelled(mut self, label: &str) -> Self {
        self.label = Some(label.to_owned());
        self
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| format!("{} vs. {}", self.hi, self.lo))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AteCell {
    pub contrast: String,
    pub outcome: String,
    pub adjustment: Vec<String>,
    pub estimate: AteEstimate,
}

/// Contrasts × outcomes, in configuration order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AteTable {
    pub treatment: String,
    pub contrasts: Vec<String>,
    pub outcomes: Vec<String>,
    /// row-major: all outcomes of the first contrast, then the next
    pub cells: Vec<AteCell>,
}

impl AteTable {
    pub fn get(&self, contrast: &str, outcome: &str) -> Option<&AteEstimate> {
        self.cells
            .iter()
            .find(|c| c.contrast == contrast && c.outcome == outcome)
            .map(|c| &c.estimate)
    }

    /// One row per contrast, one column per outcome, values to 4 decimals.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["contrast".to_string()];
        header.extend(self.outcomes.iter().cloned());
        w.write_record(&header)?;
        for (i, label) in self.contrasts.iter().enumerate() {
            let mut rec = vec![label.clone()];
            for j in 0..self.outcomes.len() {
                rec.push(format!("{:.4}", self.cells[i * self.outcomes.len() + j].estimate.value));
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<ate table>", e))?;
        Ok(())
    }
}

/// `ate_stratified` for every contrast and every `(outcome, adjustment set)`.
pub fn pairwise_ate(
    table: &CohortTable,
    treatment: &str,
    outcomes: &[(String, Vec<String>)],
    contrasts: &[Contrast],
) -> Result<AteTable> {
    let mut cells = Vec::with_capacity(outcomes.len() * contrasts.len());
    for c in contrasts {
        for (outcome, adjustment) in outcomes {
            let adj: Vec<&str> = adjustment.iter().map(String::as_str).collect();
            let estimate = ate_stratified(table, treatment, outcome, &adj, &c.hi, &c.lo)?;
            cells.push(AteCell {
                contrast: c.label(),
                outcome: outcome.clone(),
                adjustment: adjustment.clone(),
                estimate,
            });
        }
    }
    Ok(AteTable {
        treatment: treatment.to_owned(),
        contrasts: contrasts.iter().map(Contrast::label).collect(),
        outcomes: outcomes.iter().map(|(o, _)| o.clone()).collect(),
        cells,
    })
}
