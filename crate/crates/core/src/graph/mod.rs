//! Causal graph values.
//!
//! Nodes are identified by name and always stored in lexicographic order, so
//! a node's index doubles as its rank in every deterministic tie-break.

mod dot;
mod dsep;
mod meek;

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dot::{to_dot, NodeRoles};
pub use dsep::{d_separated, d_separated_idx};
pub use meek::{apply_meek_rules, apply_meek_rules_in_order, cpdag_of, Pdag};

fn sorted_nodes<S: AsRef<str>>(nodes: impl IntoIterator<Item = S>) -> Result<Vec<String>> {
    let mut out: Vec<String> = nodes.into_iter().map(|s| s.as_ref().to_owned()).collect();
    out.sort();
    if out.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::BadGraph("duplicate node name".into()));
    }
    if out.iter().any(String::is_empty) {
        return Err(Error::BadGraph("empty node name".into()));
    }
    Ok(out)
}

fn lookup(nodes: &[String], name: &str) -> Result<usize> {
    nodes
        .binary_search_by(|n| n.as_str().cmp(name))
        .map_err(|_| Error::UnknownNode(name.to_owned()))
}

/// A directed acyclic graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    nodes: Vec<String>,
    parents: Vec<BTreeSet<usize>>,
    children: Vec<BTreeSet<usize>>,
}

impl Dag {
    pub fn new<S: AsRef<str>>(nodes: impl IntoIterator<Item = S>, edges: &[(&str, &str)]) -> Result<Self> {
        let nodes = sorted_nodes(nodes)?;
        let idx = edges
            .iter()
            .map(|(a, b)| Ok((lookup(&nodes, a)?, lookup(&nodes, b)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(nodes, idx)
    }

    /// Build from already-sorted node names and index pairs.
    pub fn from_indices(nodes: Vec<String>, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::BadGraph("nodes must be sorted and unique".into()));
        }
        let n = nodes.len();
        let mut dag = Dag {
            nodes,
            parents: vec![BTreeSet::new(); n],
            children: vec![BTreeSet::new(); n],
        };
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::BadGraph(format!("edge index ({a}, {b}) out of range")));
            }
            if a == b {
                return Err(Error::BadGraph(format!("self-loop on `{}`", dag.nodes[a])));
            }
            if dag.adjacent(a, b) {
                return Err(Error::BadGraph(format!(
                    "more than one edge between `{}` and `{}`",
                    dag.nodes[a], dag.nodes[b]
                )));
            }
            dag.parents[b].insert(a);
            dag.children[a].insert(b);
        }
        if dag.topological_indices().is_none() {
            return Err(Error::CycleDetected);
        }
        Ok(dag)
    }

    pub fn empty<S: AsRef<str>>(nodes: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::new(nodes, &[])
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        lookup(&self.nodes, name)
    }

    pub fn name(&self, i: usize) -> &str {
        &self.nodes[i]
    }

    pub fn parents(&self, i: usize) -> &BTreeSet<usize> {
        &self.parents[i]
    }

    pub fn children(&self, i: usize) -> &BTreeSet<usize> {
        &self.children[i]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.children[a].contains(&b)
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    /// Edges as index pairs in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n())
            .flat_map(|a| self.children[a].iter().map(move |&b| (a, b)))
            .collect()
    }

    pub fn edge_names(&self) -> Vec<(String, String)> {
        self.edges()
            .into_iter()
            .map(|(a, b)| (self.nodes[a].clone(), self.nodes[b].clone()))
            .collect()
    }

    pub fn n_edges(&self) -> usize {
        self.children.iter().map(BTreeSet::len).sum()
    }

    /// `seeds` and every node with a directed path into them.
    pub fn ancestors(&self, seeds: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        self.closure(seeds, &self.parents)
    }

    /// `seeds` and every node reachable from them.
    pub fn descendants(&self, seeds: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        self.closure(seeds, &self.children)
    }

    fn closure(&self, seeds: impl IntoIterator<Item = usize>, step: &[BTreeSet<usize>]) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<usize> = seeds.into_iter().collect();
        while let Some(v) = stack.pop() {
            if seen.insert(v) {
                stack.extend(step[v].iter().copied());
            }
        }
        seen
    }

    /// Whether a directed path `from ~> to` exists (length ≥ 1).
    pub fn has_path(&self, from: usize, to: usize) -> bool {
        self.children[from].iter().any(|&c| self.descendants([c]).contains(&to))
    }

    /// Kahn's algorithm, smallest index first among ready nodes.
    fn topological_indices(&self) -> Option<Vec<usize>> {
        let mut indegree: Vec<usize> = self.parents.iter().map(BTreeSet::len).collect();
        let mut ready: BinaryHeap<Reverse<usize>> = indegree
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0)
            .map(|(i, _)| Reverse(i))
            .collect();
        let mut order = Vec::with_capacity(self.n());
        while let Some(Reverse(v)) = ready.pop() {
            order.push(v);
            for &c in &self.children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(Reverse(c));
                }
            }
        }
        (order.len() == self.n()).then_some(order)
    }

    pub fn topological_order_idx(&self) -> Vec<usize> {
        self.topological_indices().expect("Dag invariant: acyclic")
    }

    /// Colliders `a -> c <- b` with `a`, `b` non-adjacent, as `(a, c, b)` with `a < b`.
    pub fn v_structures(&self) -> BTreeSet<(usize, usize, usize)> {
        let mut out = BTreeSet::new();
        for c in 0..self.n() {
            let ps: Vec<usize> = self.parents[c].iter().copied().collect();
            for (i, &a) in ps.iter().enumerate() {
                for &b in &ps[i + 1..] {
                    if !self.adjacent(a, b) {
                        out.insert((a, c, b));
                    }
                }
            }
        }
        out
    }

    /// Unordered adjacent pairs `(a, b)` with `a < b`.
    pub fn skeleton(&self) -> BTreeSet<(usize, usize)> {
        self.edges().into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect()
    }

    pub fn to_cpdag_form(&self) -> Cpdag {
        Cpdag {
            nodes: self.nodes.clone(),
            directed: self.edges().into_iter().collect(),
            undirected: BTreeSet::new(),
        }
    }

    pub fn to_json(&self) -> GraphJson {
        self.to_cpdag_form().to_json()
    }
}

/// Deterministic topological order; ties broken by node name.
pub fn topological_order(g: &Dag) -> Result<Vec<String>> {
    let order = g.topological_indices().ok_or(Error::CycleDetected)?;
    Ok(order.into_iter().map(|i| g.nodes[i].clone()).collect())
}

/// Status of an unordered pair `(a, b)`, `a < b`, in a partially directed graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeStatus {
    Absent,
    Undirected,
    /// `a -> b` for the lower-index node `a`.
    Forward,
    /// `b -> a`.
    Backward,
}

/// A partially directed graph over sorted node names: a CPDAG when it is
/// produced by [`cpdag_of`] or a learner, or any mix of marks otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cpdag {
    nodes: Vec<String>,
    directed: BTreeSet<(usize, usize)>,
    /// stored with the smaller index first
    undirected: BTreeSet<(usize, usize)>,
}

impl Cpdag {
    pub fn new<S: AsRef<str>>(
        nodes: impl IntoIterator<Item = S>,
        directed: &[(&str, &str)],
        undirected: &[(&str, &str)],
    ) -> Result<Self> {
        let nodes = sorted_nodes(nodes)?;
        let d = directed
            .iter()
            .map(|(a, b)| Ok((lookup(&nodes, a)?, lookup(&nodes, b)?)))
            .collect::<Result<Vec<_>>>()?;
        let u = undirected
            .iter()
            .map(|(a, b)| Ok((lookup(&nodes, a)?, lookup(&nodes, b)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(nodes, d, u)
    }

    pub fn from_indices(
        nodes: Vec<String>,
        directed: impl IntoIterator<Item = (usize, usize)>,
        undirected: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::BadGraph("nodes must be sorted and unique".into()));
        }
        let n = nodes.len();
        let mut pairs = BTreeSet::new();
        let mut check = |a: usize, b: usize| -> Result<(usize, usize)> {
            if a >= n || b >= n {
                return Err(Error::BadGraph(format!("edge index ({a}, {b}) out of range")));
            }
            if a == b {
                return Err(Error::BadGraph(format!("self-loop on `{}`", nodes[a])));
            }
            let key = (a.min(b), a.max(b));
            if !pairs.insert(key) {
                return Err(Error::BadGraph(format!(
                    "more than one edge between `{}` and `{}`",
                    nodes[key.0], nodes[key.1]
                )));
            }
            Ok(key)
        };
        let mut d = BTreeSet::new();
        for (a, b) in directed {
            check(a, b)?;
            d.insert((a, b));
        }
        let mut u = BTreeSet::new();
        for (a, b) in undirected {
            u.insert(check(a, b)?);
        }
        Ok(Cpdag {
            nodes,
            directed: d,
            undirected: u,
        })
    }

    pub fn empty<S: AsRef<str>>(nodes: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::new(nodes, &[], &[])
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        lookup(&self.nodes, name)
    }

    pub fn directed(&self) -> &BTreeSet<(usize, usize)> {
        &self.directed
    }

    pub fn undirected(&self) -> &BTreeSet<(usize, usize)> {
        &self.undirected
    }

    pub fn status(&self, a: usize, b: usize) -> EdgeStatus {
        let (lo, hi) = (a.min(b), a.max(b));
        let s = if self.undirected.contains(&(lo, hi)) {
            EdgeStatus::Undirected
        } else if self.directed.contains(&(lo, hi)) {
            EdgeStatus::Forward
        } else if self.directed.contains(&(hi, lo)) {
            EdgeStatus::Backward
        } else {
            EdgeStatus::Absent
        };
        match (s, a > b) {
            (EdgeStatus::Forward, true) => EdgeStatus::Backward,
            (EdgeStatus::Backward, true) => EdgeStatus::Forward,
            (s, _) => s,
        }
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.status(a, b) != EdgeStatus::Absent
    }

    pub fn n_edges(&self) -> usize {
        self.directed.len() + self.undirected.len()
    }

    /// The graph as a DAG, if it has no undirected edges and no directed cycle.
    pub fn to_dag(&self) -> Result<Dag> {
        if !self.undirected.is_empty() {
            return Err(Error::BadGraph("graph has undirected edges".into()));
        }
        Dag::from_indices(self.nodes.clone(), self.directed.iter().copied())
    }

    pub fn to_json(&self) -> GraphJson {
        let name = |i: usize| self.nodes[i].clone();
        GraphJson {
            nodes: self.nodes.clone(),
            directed: self.directed.iter().map(|&(a, b)| (name(a), name(b))).collect(),
            undirected: self.undirected.iter().map(|&(a, b)| (name(a), name(b))).collect(),
        }
    }

    pub fn from_json(json: &GraphJson) -> Result<Self> {
        fn pairs(v: &[(String, String)]) -> Vec<(&str, &str)> {
            v.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect()
        }
        Self::new(&json.nodes, &pairs(&json.directed), &pairs(&json.undirected))
    }
}

impl From<&Dag> for Cpdag {
    fn from(d: &Dag) -> Self {
        d.to_cpdag_form()
    }
}

/// `{"nodes":[...],"directed":[["a","b"],...],"undirected":[...]}`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphJson {
    pub nodes: Vec<String>,
    #[serde(default)]
    pub directed: Vec<(String, String)>,
    #[serde(default)]
    pub undirected: Vec<(String, String)>,
}

/// Number of unordered pairs whose status (absent, undirected, or either
/// orientation) differs.
pub fn structural_hamming_distance(a: &Cpdag, b: &Cpdag) -> Result<usize> {
    if a.nodes != b.nodes {
        return Err(Error::NodeSetMismatch);
    }
    let n = a.n();
    let mut d = 0;
    for i in 0..n {
        for j in i + 1..n {
            if a.status(i, j) != b.status(i, j) {
                d += 1;
            }
        }
    }
    Ok(d)
}
