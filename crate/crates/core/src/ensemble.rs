//! Majority-vote merging of learned graphs.
//!
//! A pair of nodes is adjacent in the consensus when it is adjacent in
//! strictly more than `threshold` of the inputs. Its orientation is the
//! strict plurality among the graphs that contain it (forward, backward or
//! undirected), undirected on a tie. Directed cycles in the result are
//! broken by demoting the least supported edge on a cycle to undirected.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Cpdag, Dag};

/// Votes for one unordered pair `a < b` (by name).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PairVotes {
    pub a: String,
    pub b: String,
    pub presence: usize,
    /// `a -> b`
    pub forward: usize,
    /// `b -> a`
    pub backward: usize,
    pub undirected: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VoteTally {
    pub total_graphs: usize,
    /// only pairs present in at least one graph
    pub pairs: Vec<PairVotes>,
}

impl VoteTally {
    pub fn get(&self, a: &str, b: &str) -> Option<&PairVotes> {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        self.pairs.iter().find(|p| p.a == a && p.b == b)
    }
}

fn counts(graphs: &[Cpdag]) -> Result<BTreeMap<(usize, usize), [usize; 3]>> {
    let first = graphs.first().ok_or(Error::EmptyInput)?;
    if graphs.iter().any(|g| g.nodes() != first.nodes()) {
        return Err(Error::NodeSetMismatch);
    }
    let mut out: BTreeMap<(usize, usize), [usize; 3]> = BTreeMap::new();
    for g in graphs {
        for &(a, b) in g.directed() {
            let (key, slot) = if a < b { ((a, b), 0) } else { ((b, a), 1) };
            out.entry(key).or_default()[slot] += 1;
        }
        for &(a, b) in g.undirected() {
            out.entry((a, b)).or_default()[2] += 1;
        }
    }
    Ok(out)
}

/// Per-pair vote counts across `graphs`.
pub fn tally(graphs: &[Cpdag]) -> Result<VoteTally> {
    let c = counts(graphs)?;
    let nodes = graphs[0].nodes();
    Ok(VoteTally {
        total_graphs: graphs.len(),
        pairs: c
            .into_iter()
            .map(|((a, b), [f, bk, u])| PairVotes {
                a: nodes[a].clone(),
                b: nodes[b].clone(),
                presence: f + bk + u,
                forward: f,
                backward: bk,
                undirected: u,
            })
            .collect(),
    })
}

pub fn majority_vote(graphs: &[Cpdag], threshold: f64) -> Result<Cpdag> {
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::BadConfig(format!("vote threshold must lie in [0, 1), got {threshold}")));
    }
    let c = counts(graphs)?;
    let total = graphs.len() as f64;
    let nodes = graphs[0].nodes().to_vec();
    let n = nodes.len();

    let mut directed: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut undirected: BTreeSet<(usize, usize)> = BTreeSet::new();
    for ((a, b), [f, bk, u]) in c {
        let presence = f + bk + u;
        if presence as f64 / total <= threshold {
            continue;
        }
        if f > bk && f > u {
            directed.insert((a, b), presence);
        } else if bk > f && bk > u {
            directed.insert((b, a), presence);
        } else {
            undirected.insert((a, b));
        }
    }

    // demote the weakest edge on a directed cycle until none remain
    loop {
        let on_cycle = directed
            .iter()
            .filter(|(&(a, b), _)| reaches(n, &directed, b, a))
            .min_by_key(|(&edge, &presence)| (presence, edge));
        match on_cycle {
            Some((&(a, b), _)) => {
                directed.remove(&(a, b));
                undirected.insert((a.min(b), a.max(b)));
            }
            None => break,
        }
    }
    Cpdag::from_indices(nodes, directed.into_keys(), undirected)
}

fn reaches(n: usize, edges: &BTreeMap<(usize, usize), usize>, from: usize, to: usize) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        if v == to {
            return true;
        }
        if std::mem::replace(&mut seen[v], true) {
            continue;
        }
        stack.extend(edges.range((v, 0)..(v + 1, 0)).map(|(&(_, c), _)| c));
    }
    false
}

/// Orient every undirected edge of `g` from earlier to later in `order`,
/// keeping directed edges as they are.
///
/// If that ordering closes a cycle through the directed edges, undirected
/// edges follow a topological order of the directed part instead (ties by
/// position in `order`). Fails only when the directed part is itself
/// cyclic.
pub fn force_dag(g: &Cpdag, order: &[&str]) -> Result<Dag> {
    let n = g.n();
    let mut rank = vec![usize::MAX; n];
    for (pos, name) in order.iter().enumerate() {
        let i = g.index(name)?;
        if rank[i] != usize::MAX {
            return Err(Error::BadConfig(format!("`{name}` appears twice in the orientation order")));
        }
        rank[i] = pos;
    }
    if order.len() != n {
        return Err(Error::NodeSetMismatch);
    }

    let nodes = g.nodes().to_vec();
    let directed: Vec<(usize, usize)> = g.directed().iter().copied().collect();
    let by_rank = |(a, b): (usize, usize)| if rank[a] < rank[b] { (a, b) } else { (b, a) };
    let simple: Vec<(usize, usize)> = directed
        .iter()
        .copied()
        .chain(g.undirected().iter().map(|&e| by_rank(e)))
        .collect();
    if let Ok(dag) = Dag::from_indices(nodes.clone(), simple) {
        return Ok(dag);
    }

    // Kahn's algorithm on the directed part, smallest rank first
    let mut indeg = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    for &(a, b) in &directed {
        indeg[b] += 1;
        children[a].push(b);
    }
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
        (0..n).filter(|&v| indeg[v] == 0).map(|v| Reverse((rank[v], v))).collect();
    let mut topo = vec![usize::MAX; n];
    let mut next = 0;
    while let Some(Reverse((_, v))) = heap.pop() {
        topo[v] = next;
        next += 1;
        for &c in &children[v] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                heap.push(Reverse((rank[c], c)));
            }
        }
    }
    if next < n {
        return Err(Error::UnorientableCycle);
    }
    let edges = directed.into_iter().chain(
        g.undirected()
            .iter()
            .map(|&(a, b)| if topo[a] < topo[b] { (a, b) } else { (b, a) }),
    );
    Dag::from_indices(nodes, edges)
}

/// Adjacent pairs of `g`, smaller index first.
pub fn adjacencies(g: &Cpdag) -> BTreeSet<(usize, usize)> {
    g.directed()
        .iter()
        .map(|&(a, b)| (a.min(b), a.max(b)))
        .chain(g.undirected().iter().copied())
        .collect()
}
