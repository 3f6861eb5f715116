use std::collections::{BTreeMap, BTreeSet};

use super::{is_degenerate, subsets, LearnerConfig};
use crate::cohort::CohortTable;
use crate::error::{Error, Result};
use crate::graph::{apply_meek_rules, Cpdag, Pdag};
use crate::stats::{ci_test, DataView};

/// Separating sets found while thinning the skeleton, keyed by the
/// unordered pair (smaller name first).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SepSetMap(BTreeMap<(String, String), BTreeSet<String>>);

impl SepSetMap {
    pub fn get(&self, a: &str, b: &str) -> Option<&BTreeSet<String>> {
        let key = if a <= b { (a.to_owned(), b.to_owned()) } else { (b.to_owned(), a.to_owned()) };
        self.0.get(&key)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(String, String), &BTreeSet<String>)> {
        self.0.iter()
    }
}

pub fn pc(table: &CohortTable, config: &LearnerConfig) -> Result<Cpdag> {
    pc_with_sepsets(table, config).map(|(g, _)| g)
}

/// Classic (order-dependent) PC: pairs and conditioning sets are visited in
/// name order and an edge is removed as soon as one test accepts
/// independence.
pub fn pc_with_sepsets(table: &CohortTable, config: &LearnerConfig) -> Result<(Cpdag, SepSetMap)> {
    config.validate()?;
    let view = DataView::from_table(table)?;
    let n = view.n_vars();
    if n < 2 {
        return Err(Error::BadConfig("PC needs at least two variables".into()));
    }

    let mut adj = vec![vec![true; n]; n];
    for (i, row) in adj.iter_mut().enumerate() {
        row[i] = false;
    }
    let mut sepsets: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();

    for level in 0..=config.max_cond_set {
        let mut any_large_enough = false;
        for x in 0..n {
            for y in x + 1..n {
                if !adj[x][y] {
                    continue;
                }
                'sides: for (a, b) in [(x, y), (y, x)] {
                    let nbrs: Vec<usize> = (0..n).filter(|&v| adj[a][v] && v != b).collect();
                    if nbrs.len() < level {
                        continue;
                    }
                    any_large_enough = true;
                    for s in subsets(&nbrs, level) {
                        match ci_test(&view, x, y, &s, config.alpha) {
                            Ok(r) if r.independent => {
                                adj[x][y] = false;
                                adj[y][x] = false;
                                sepsets.insert((x, y), s);
                                break 'sides;
                            }
                            Ok(_) => {}
                            Err(e) if is_degenerate(&e) => {}
                            Err(e) => return Err(e),
                        }
                    }
                }
            }
        }
        if !any_large_enough {
            break;
        }
    }

    let skeleton: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|&(a, b)| adj[a][b])
        .collect();
    let mut pdag = Pdag::from_skeleton(view.names().to_vec(), skeleton);

    // unshielded triples x - z - y, first orientation wins on conflict
    for z in 0..n {
        for x in 0..n {
            for y in x + 1..n {
                if x == z || y == z || !adj[x][z] || !adj[y][z] || adj[x][y] {
                    continue;
                }
                let sep = sepsets.get(&(x, y)).expect("removed pairs have a sepset");
                if !sep.contains(&z) {
                    pdag.orient(x, z);
                    pdag.orient(y, z);
                }
            }
        }
    }
    apply_meek_rules(&mut pdag);

    let names = view.names();
    let map = sepsets
        .into_iter()
        .map(|((a, b), s)| {
            (
                (names[a].clone(), names[b].clone()),
                s.into_iter().map(|v| names[v].clone()).collect(),
            )
        })
        .collect();
    Ok((pdag.to_cpdag(), SepSetMap(map)))
}
