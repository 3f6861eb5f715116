use std::collections::{BTreeSet, HashMap, VecDeque};

use super::LearnerConfig;
use crate::cohort::CohortTable;
use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::stats::{bic_idx, DataView};

/// Ordered by (kind, from, to), which is the tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Move {
    Add(usize, usize),
    Delete(usize, usize),
    Reverse(usize, usize),
}

impl Move {
    fn inverse(self) -> Move {
        match self {
            Move::Add(a, b) => Move::Delete(a, b),
            Move::Delete(a, b) => Move::Add(a, b),
            Move::Reverse(a, b) => Move::Reverse(b, a),
        }
    }
}

/// Memoised per-node BIC. `None` marks a parent set the data cannot
/// support (singular design or too few rows); moves leading there are
/// illegal.
struct Scorer<'a> {
    view: &'a DataView,
    cache: HashMap<(usize, Vec<usize>), Option<f64>>,
}

impl<'a> Scorer<'a> {
    fn new(view: &'a DataView) -> Self {
        Scorer {
            view,
            cache: HashMap::new(),
        }
    }

    fn score(&mut self, node: usize, parents: &BTreeSet<usize>) -> Result<Option<f64>> {
        let key = (node, parents.iter().copied().collect::<Vec<_>>());
        if let Some(&v) = self.cache.get(&key) {
            return Ok(v);
        }
        let v = match bic_idx(self.view, node, &key.1) {
            Ok(v) => Some(v),
            Err(Error::SingularDesign | Error::TooFewRows { .. }) => None,
            Err(e) => return Err(e),
        };
        self.cache.insert(key, v);
        Ok(v)
    }
}

#[derive(Debug, Clone)]
struct State {
    parents: Vec<BTreeSet<usize>>,
    children: Vec<BTreeSet<usize>>,
    scores: Vec<f64>,
}

impl State {
    fn empty(scorer: &mut Scorer) -> Result<Self> {
        let n = scorer.view.n_vars();
        let mut scores = Vec::with_capacity(n);
        for i in 0..n {
            match scorer.score(i, &BTreeSet::new())? {
                Some(s) => scores.push(s),
                // an unscorable empty family means the column itself is degenerate
                None => return Err(bic_idx(scorer.view, i, &[]).expect_err("cached as unscorable")),
            }
        }
        Ok(State {
            parents: vec![BTreeSet::new(); n],
            children: vec![BTreeSet::new(); n],
            scores,
        })
    }

    fn n(&self) -> usize {
        self.parents.len()
    }

    fn total(&self) -> f64 {
        self.scores.iter().sum()
    }

    fn has_edge(&self, a: usize, b: usize) -> bool {
        self.parents[b].contains(&a)
    }

    /// Directed path `from ~> to`, optionally ignoring the edge `skip`.
    fn reaches(&self, from: usize, to: usize, skip: Option<(usize, usize)>) -> bool {
        let mut seen = vec![false; self.n()];
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            for &c in &self.children[v] {
                if Some((v, c)) != skip && !seen[c] {
                    stack.push(c);
                }
            }
        }
        false
    }

    fn legal_moves(&self, max_parents: usize, allowed: Option<&[Vec<bool>]>) -> Vec<Move> {
        let n = self.n();
        let mut out = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if a != b
                    && !self.has_edge(a, b)
                    && !self.has_edge(b, a)
                    && allowed.is_none_or(|m| m[a][b])
                    && self.parents[b].len() < max_parents
                    && !self.reaches(b, a, None)
                {
                    out.push(Move::Add(a, b));
                }
            }
        }
        for b in 0..n {
            for &a in &self.parents[b] {
                out.push(Move::Delete(a, b));
                if self.parents[a].len() < max_parents && !self.reaches(a, b, Some((a, b))) {
                    out.push(Move::Reverse(a, b));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Score change and the new family scores, or `None` if a new family
    /// cannot be scored.
    fn evaluate(&self, scorer: &mut Scorer, mv: Move) -> Result<Option<(f64, FamilyScores)>> {
        let mut changes = Vec::with_capacity(2);
        let mut family = |node: usize, add: Option<usize>, remove: Option<usize>| -> Result<Option<f64>> {
            let mut ps = self.parents[node].clone();
            if let Some(p) = add {
                ps.insert(p);
            }
            if let Some(p) = remove {
                ps.remove(&p);
            }
            let s = scorer.score(node, &ps)?;
            if let Some(v) = s {
                changes.push((node, v));
            }
            Ok(s)
        };
        let ok = match mv {
            Move::Add(a, b) => family(b, Some(a), None)?.is_some(),
            Move::Delete(a, b) => family(b, None, Some(a))?.is_some(),
            Move::Reverse(a, b) => family(b, None, Some(a))?.is_some() && family(a, Some(b), None)?.is_some(),
        };
        if !ok {
            return Ok(None);
        }
        let delta = changes.iter().map(|&(node, v)| v - self.scores[node]).sum();
        Ok(Some((delta, changes)))
    }

    fn apply(&mut self, mv: Move, changes: &[(usize, f64)]) {
        let (add, remove) = match mv {
            Move::Add(a, b) => (Some((a, b)), None),
            Move::Delete(a, b) => (None, Some((a, b))),
            Move::Reverse(a, b) => (Some((b, a)), Some((a, b))),
        };
        if let Some((a, b)) = remove {
            self.parents[b].remove(&a);
            self.children[a].remove(&b);
        }
        if let Some((a, b)) = add {
            self.parents[b].insert(a);
            self.children[a].insert(b);
        }
        for &(node, v) in changes {
            self.scores[node] = v;
        }
    }

    fn to_dag(&self, view: &DataView) -> Result<Dag> {
        let edges = (0..self.n()).flat_map(|b| self.parents[b].iter().map(move |&a| (a, b)));
        Dag::from_indices(view.names().to_vec(), edges)
    }
}

fn tolerance(total: f64) -> f64 {
    1e-9 * (1.0 + total.abs())
}

/// (node, new family score) for each family a move changes.
type FamilyScores = Vec<(usize, f64)>;

/// Best legal move by score change; ties keep the earliest move. Gains
/// within the search tolerance count as ties, otherwise score-equivalent
/// moves such as `Add(a, b)` and `Add(b, a)` are split by rounding noise.
fn best_move(
    state: &State,
    scorer: &mut Scorer,
    config: &LearnerConfig,
    allowed: Option<&[Vec<bool>]>,
    tabu: &VecDeque<Move>,
) -> Result<Option<(Move, f64, FamilyScores)>> {
    let mut best: Option<(Move, f64, FamilyScores)> = None;
    let tol = tolerance(state.total());
    for mv in state.legal_moves(config.max_parents, allowed) {
        if tabu.contains(&mv) {
            continue;
        }
        if let Some((delta, changes)) = state.evaluate(scorer, mv)? {
            if best.as_ref().is_none_or(|b| delta > b.1 + tol) {
                best = Some((mv, delta, changes));
            }
        }
    }
    Ok(best)
}

/// Greedy BIC hill-climbing from the empty graph.
pub fn hill_climb(table: &CohortTable, config: &LearnerConfig) -> Result<Dag> {
    config.validate()?;
    let view = DataView::from_table(table)?;
    climb(&view, config, None)
}

/// Hill-climbing on `view`; `allowed[a][b]` restricts which edges may be added.
pub(super) fn climb(view: &DataView, config: &LearnerConfig, allowed: Option<&[Vec<bool>]>) -> Result<Dag> {
    let mut scorer = Scorer::new(view);
    let mut state = State::empty(&mut scorer)?;
    let no_tabu = VecDeque::new();
    while let Some((mv, delta, changes)) = best_move(&state, &mut scorer, config, allowed, &no_tabu)? {
        if delta <= tolerance(state.total()) {
            break;
        }
        state.apply(mv, &changes);
    }
    state.to_dag(view)
}

/// Tabu search from the empty graph: always takes the best move that is not
/// tabu, even a worsening one, and returns the best graph visited.
pub fn tabu_search(table: &CohortTable, config: &LearnerConfig) -> Result<Dag> {
    config.validate()?;
    let view = DataView::from_table(table)?;
    let mut scorer = Scorer::new(&view);
    let mut state = State::empty(&mut scorer)?;
    let mut best = state.clone();
    let mut best_total = best.total();
    let mut tabu = VecDeque::with_capacity(config.tabu_length + 1);
    for _ in 0..config.max_iterations {
        let Some((mv, _, changes)) = best_move(&state, &mut scorer, config, None, &tabu)? else {
            break;
        };
        state.apply(mv, &changes);
        tabu.push_back(mv.inverse());
        if tabu.len() > config.tabu_length {
            tabu.pop_front();
        }
        let total = state.total();
        if total > best_total + tolerance(best_total) {
            best = state.clone();
            best_total = total;
        }
    }
    best.to_dag(&view)
}
