use std::collections::BTreeSet;

use super::{Cpdag, Dag};

/// Mutable partially directed graph used while orienting edges.
///
/// `mark[a][b]` means an arrowhead may point from `a` towards `b`: both marks
/// set is an undirected edge, one mark is a directed edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pdag {
    nodes: Vec<String>,
    mark: Vec<Vec<bool>>,
}

impl Pdag {
    /// All pairs in `skeleton` as undirected edges.
    pub fn from_skeleton(nodes: Vec<String>, skeleton: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let n = nodes.len();
        let mut mark = vec![vec![false; n]; n];
        for (a, b) in skeleton {
            mark[a][b] = true;
            mark[b][a] = true;
        }
        Pdag { nodes, mark }
    }

    pub fn from_cpdag(g: &Cpdag) -> Self {
        let mut p = Self::from_skeleton(g.nodes().to_vec(), g.undirected().iter().copied());
        for &(a, b) in g.directed() {
            p.mark[a][b] = true;
        }
        p
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.mark[a][b] || self.mark[b][a]
    }

    pub fn is_directed(&self, a: usize, b: usize) -> bool {
        self.mark[a][b] && !self.mark[b][a]
    }

    pub fn is_undirected(&self, a: usize, b: usize) -> bool {
        self.mark[a][b] && self.mark[b][a]
    }

    /// Turn `a - b` into `a -> b`. No effect unless the edge is undirected.
    pub fn orient(&mut self, a: usize, b: usize) -> bool {
        if self.is_undirected(a, b) {
            self.mark[b][a] = false;
            true
        } else {
            false
        }
    }

    pub fn to_cpdag(&self) -> Cpdag {
        let n = self.n();
        let mut directed = Vec::new();
        let mut undirected = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if self.is_undirected(a, b) {
                    undirected.push((a, b));
                } else if self.is_directed(a, b) {
                    directed.push((a, b));
                } else if self.is_directed(b, a) {
                    directed.push((b, a));
                }
            }
        }
        Cpdag::from_indices(self.nodes.clone(), directed, undirected).expect("Pdag marks are well-formed")
    }

    fn rule1(&self, a: usize, b: usize) -> bool {
        // c -> a - b, c and b non-adjacent
        (0..self.n()).any(|c| c != b && self.is_directed(c, a) && !self.adjacent(c, b))
    }

    fn rule2(&self, a: usize, b: usize) -> bool {
        // a -> c -> b
        (0..self.n()).any(|c| self.is_directed(a, c) && self.is_directed(c, b))
    }

    fn rule3(&self, a: usize, b: usize) -> bool {
        // a - c -> b, a - d -> b, c and d non-adjacent
        let n = self.n();
        let mids: Vec<usize> = (0..n)
            .filter(|&c| self.is_undirected(a, c) && self.is_directed(c, b))
            .collect();
        mids.iter()
            .enumerate()
            .any(|(i, &c)| mids[i + 1..].iter().any(|&d| !self.adjacent(c, d)))
    }

    fn rule4(&self, a: usize, b: usize) -> bool {
        // a - c -> d -> b, a adjacent to d, c and b non-adjacent
        let n = self.n();
        (0..n).any(|c| {
            c != b
                && self.is_undirected(a, c)
                && !self.adjacent(c, b)
                && (0..n).any(|d| self.is_directed(c, d) && self.is_directed(d, b) && self.adjacent(a, d))
        })
    }

    fn orientable(&self, a: usize, b: usize) -> bool {
        self.rule1(a, b) || self.rule2(a, b) || self.rule3(a, b) || self.rule4(a, b)
    }
}

/// Apply Meek's rules R1–R4 until nothing changes.
pub fn apply_meek_rules(p: &mut Pdag) {
    let order: Vec<usize> = (0..p.n()).collect();
    apply_meek_rules_in_order(p, &order);
}

/// Same fixpoint as [`apply_meek_rules`], visiting candidate edges in the
/// order induced by `node_order` (a permutation of node indices).
pub fn apply_meek_rules_in_order(p: &mut Pdag, node_order: &[usize]) {
    loop {
        let mut changed = false;
        for &a in node_order {
            for &b in node_order {
                if a != b && p.is_undirected(a, b) && p.orientable(a, b) {
                    p.orient(a, b);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

/// The completed partially directed graph representing `g`'s Markov
/// equivalence class.
pub fn cpdag_of(g: &Dag) -> Cpdag {
    let mut p = Pdag::from_skeleton(g.nodes().to_vec(), g.skeleton());
    let colliders: BTreeSet<(usize, usize, usize)> = g.v_structures();
    for (a, c, b) in colliders {
        p.orient(a, c);
        p.orient(b, c);
    }
    apply_meek_rules(&mut p);
    p.to_cpdag()
}
