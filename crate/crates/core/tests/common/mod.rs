//! Brute-force oracles shared by the integration tests. Nothing here calls
//! the library's own graph algorithms beyond constructing graphs.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use causal_cohort::cohort::{quantile_edges, CohortTable};
use causal_cohort::graph::{Cpdag, Dag};

pub const NAMES: [&str; 6] = ["A", "B", "C", "D", "E", "F"];

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
}

fn acyclic(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut indeg = vec![0; n];
    for &(_, b) in edges {
        indeg[b] += 1;
    }
    let mut ready: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut done = 0;
    while let Some(v) = ready.pop() {
        done += 1;
        for &(a, b) in edges {
            if a == v {
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    ready.push(b);
                }
            }
        }
    }
    done == n
}

/// Every labelled DAG on `n` nodes (each pair absent, forward or backward).
pub fn all_dags(n: usize) -> Vec<Dag> {
    let ps = pairs(n);
    let total = 3usize.pow(ps.len() as u32);
    let mut out = Vec::new();
    for mut code in 0..total {
        let mut edges = Vec::new();
        for &(a, b) in &ps {
            match code % 3 {
                1 => edges.push((a, b)),
                2 => edges.push((b, a)),
                _ => {}
            }
            code /= 3;
        }
        if acyclic(n, &edges) {
            out.push(Dag::from_indices(NAMES[..n].iter().map(|s| s.to_string()).collect(), edges).unwrap());
        }
    }
    out
}

/// Every DAG on `n` nodes whose edges all point from lower to higher index.
/// Up to relabelling this covers every DAG.
pub fn upper_triangular_dags(n: usize) -> impl Iterator<Item = Dag> {
    let ps = pairs(n);
    (0u64..1 << ps.len()).map(move |mask| {
        let edges: Vec<(usize, usize)> = ps
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        Dag::from_indices(NAMES[..n].iter().map(|s| s.to_string()).collect(), edges).unwrap()
    })
}

/// Every simple path between `x` and `y` in the skeleton.
pub fn simple_paths(g: &Dag, x: usize, y: usize) -> Vec<Vec<usize>> {
    fn go(g: &Dag, y: usize, path: &mut Vec<usize>, on: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        let v = *path.last().unwrap();
        if v == y {
            out.push(path.clone());
            return;
        }
        for w in 0..g.n() {
            if !on[w] && (g.has_edge(v, w) || g.has_edge(w, v)) {
                on[w] = true;
                path.push(w);
                go(g, y, path, on, out);
                path.pop();
                on[w] = false;
            }
        }
    }
    let mut on = vec![false; g.n()];
    on[x] = true;
    let mut out = Vec::new();
    go(g, y, &mut vec![x], &mut on, &mut out);
    out
}

/// Descendants of `v` including itself, by plain DFS over edges.
pub fn descendants_of(g: &Dag, v: usize) -> Vec<bool> {
    let mut seen = vec![false; g.n()];
    let mut stack = vec![v];
    while let Some(u) = stack.pop() {
        if !seen[u] {
            seen[u] = true;
            stack.extend((0..g.n()).filter(|&w| g.has_edge(u, w)));
        }
    }
    seen
}

/// Textbook blocking rule for one path.
pub fn path_blocked(g: &Dag, path: &[usize], in_z: &[bool], desc: &[Vec<bool>]) -> bool {
    (1..path.len() - 1).any(|i| {
        let (a, v, b) = (path[i - 1], path[i], path[i + 1]);
        let collider = g.has_edge(a, v) && g.has_edge(b, v);
        if collider {
            !(0..g.n()).any(|w| in_z[w] && desc[v][w])
        } else {
            in_z[v]
        }
    })
}

pub fn all_descendants(g: &Dag) -> Vec<Vec<bool>> {
    (0..g.n()).map(|v| descendants_of(g, v)).collect()
}

/// d-separation by enumerating every path.
pub fn dsep_oracle(g: &Dag, paths: &[Vec<usize>], z: &[usize], desc: &[Vec<bool>]) -> bool {
    let mut in_z = vec![false; g.n()];
    for &v in z {
        in_z[v] = true;
    }
    paths.iter().all(|p| path_blocked(g, p, &in_z, desc))
}

/// Classic backdoor criterion: no descendant of `t` in `z`, and every path
/// that starts with an edge into `t` is blocked.
pub fn backdoor_valid(g: &Dag, t: usize, backdoor_paths: &[Vec<usize>], z: &[usize], desc: &[Vec<bool>]) -> bool {
    if z.iter().any(|&v| desc[t][v]) {
        return false;
    }
    dsep_oracle(g, backdoor_paths, z, desc)
}

pub fn backdoor_paths(g: &Dag, t: usize, y: usize) -> Vec<Vec<usize>> {
    simple_paths(g, t, y)
        .into_iter()
        .filter(|p| g.has_edge(p[1], t))
        .collect()
}

/// Inclusion-minimal valid backdoor sets, sorted by size then
/// lexicographically. `None` when no set is valid.
pub fn minimal_backdoor_oracle(g: &Dag, t: usize, y: usize) -> Option<Vec<BTreeSet<String>>> {
    let desc = all_descendants(g);
    let paths = backdoor_paths(g, t, y);
    let others: Vec<usize> = (0..g.n()).filter(|&v| v != t && v != y).collect();
    let mut valid: Vec<u32> = Vec::new();
    for mask in 0u32..1 << others.len() {
        let z: Vec<usize> = others.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v).collect();
        if backdoor_valid(g, t, &paths, &z, &desc) {
            valid.push(mask);
        }
    }
    if valid.is_empty() {
        return None;
    }
    let minimal: Vec<u32> = valid
        .iter()
        .copied()
        .filter(|&m| !valid.iter().any(|&o| o != m && o & m == o))
        .collect();
    let mut sets: Vec<Vec<String>> = minimal
        .into_iter()
        .map(|m| {
            others
                .iter()
                .enumerate()
                .filter(|(i, _)| m >> i & 1 == 1)
                .map(|(_, &v)| g.name(v).to_string())
                .collect()
        })
        .collect();
    sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Some(sets.into_iter().map(|s| s.into_iter().collect()).collect())
}

/// CPDAG by brute force: the DAGs sharing skeleton and v-structures with
/// `g`, and an edge is directed iff all of them agree on it.
pub fn cpdag_oracle(g: &Dag, pool: &[Dag]) -> Cpdag {
    let same_class: Vec<&Dag> = pool
        .iter()
        .filter(|h| h.skeleton() == g.skeleton() && h.v_structures() == g.v_structures())
        .collect();
    let mut directed = Vec::new();
    let mut undirected = Vec::new();
    for (a, b) in g.skeleton() {
        let fwd = same_class.iter().all(|h| h.has_edge(a, b));
        let bwd = same_class.iter().all(|h| h.has_edge(b, a));
        if fwd {
            directed.push((a, b));
        } else if bwd {
            directed.push((b, a));
        } else {
            undirected.push((a, b));
        }
    }
    Cpdag::from_indices(g.nodes().to_vec(), directed, undirected).unwrap()
}

/// Replace continuous `name` by equal-frequency bins (test fixtures only).
pub fn bin_equal_frequency(table: &CohortTable, name: &str, bins: usize) -> CohortTable {
    let values: Vec<f64> = table.numeric(name).unwrap().into_iter().flatten().collect();
    let edges = quantile_edges(&values, bins);
    causal_cohort::cohort::discretize(table, name, &edges).unwrap()
}

/// FixtureB sample with T cut at -1 and 1 (`bin0`, `bin1`, `bin2`), Z in 20
/// equal-frequency bins and the raw dose kept as a continuous `dose` column.
pub fn fixture_b_binned(n: usize, seed: u64) -> CohortTable {
    use causal_cohort::cohort::{discretize, Cell, Variable};
    let t = causal_cohort::scm::sample(&causal_cohort::scm::fixtures::fixture_b(), n, seed);
    let dose: Vec<Cell> = t.column(t.index_of("T").unwrap()).collect();
    let t = t.with_column(Variable::continuous("dose"), dose).unwrap();
    let t = discretize(&t, "T", &[-1.0, 1.0]).unwrap();
    bin_equal_frequency(&t, "Z", 20)
}

/// Per-unit FixtureB estimate: Y contrast scaled by the dose contrast, both
/// with the same adjustment.
pub fn fixture_b_spec(table: &CohortTable, adjustment: &[&str]) -> causal_cohort::effect::EstimateSpec {
    use causal_cohort::effect::{ate_stratified, EstimateSpec};
    let dose = ate_stratified(table, "T", "dose", adjustment, "bin2", "bin0").unwrap().value;
    EstimateSpec::new("T", "Y", adjustment, "bin2", "bin0").with_scale(1.0 / dose)
}

/// Every Cpdag-shaped object on `n` nodes: each pair absent, a->b, b->a or
/// undirected. Directed cycles are allowed; the vote has to cope with them.
pub fn all_marked(n: usize) -> Vec<Cpdag> {
    let names: Vec<String> = NAMES[..n].iter().map(|s| s.to_string()).collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    (0..4usize.pow(pairs.len() as u32))
        .map(|mut code| {
            let (mut d, mut u) = (Vec::new(), Vec::new());
            for &(a, b) in &pairs {
                match code % 4 {
                    1 => d.push((a, b)),
                    2 => d.push((b, a)),
                    3 => u.push((a, b)),
                    _ => {}
                }
                code /= 4;
            }
            Cpdag::from_indices(names.clone(), d, u).unwrap()
        })
        .collect()
}

pub fn closure(n: usize, edges: &BTreeSet<(usize, usize)>) -> Vec<Vec<bool>> {
    // transitive closure; reach[a][b] means a ~> b
    let mut reach = vec![vec![false; n]; n];
    for &(a, b) in edges {
        reach[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    reach
}

/// The vote written out from its definition.
pub fn vote_oracle(graphs: &[&Cpdag], threshold: f64) -> (BTreeSet<(usize, usize)>, BTreeSet<(usize, usize)>) {
    let n = graphs[0].n();
    let mut votes: BTreeMap<(usize, usize), [usize; 3]> = BTreeMap::new();
    for g in graphs {
        for a in 0..n {
            for b in a + 1..n {
                let slot = if g.directed().contains(&(a, b)) {
                    0
                } else if g.directed().contains(&(b, a)) {
                    1
                } else if g.undirected().contains(&(a, b)) {
                    2
                } else {
                    continue;
                };
                votes.entry((a, b)).or_default()[slot] += 1;
            }
        }
    }
    let mut directed = BTreeSet::new();
    let mut presence = BTreeMap::new();
    let mut undirected = BTreeSet::new();
    for (&(a, b), v) in &votes {
        let p: usize = v.iter().sum();
        if p as f64 <= threshold * graphs.len() as f64 {
            continue;
        }
        let e = if v[0] > v[1] && v[0] > v[2] {
            Some((a, b))
        } else if v[1] > v[0] && v[1] > v[2] {
            Some((b, a))
        } else {
            None
        };
        match e {
            Some(e) => {
                directed.insert(e);
                presence.insert(e, p);
            }
            None => {
                undirected.insert((a, b));
            }
        }
    }
    loop {
        let reach = closure(n, &directed);
        let weakest = directed.iter().filter(|&&(a, b)| reach[b][a]).min_by_key(|&&e| (presence[&e], e)).copied();
        let Some((a, b)) = weakest else { break };
        directed.remove(&(a, b));
        undirected.insert((a.min(b), a.max(b)));
    }
    (directed, undirected)
}
