use std::collections::BTreeSet;

use super::Dag;
use crate::error::{Error, Result};

/// Whether `z` d-separates `x` and `y` in `g`.
pub fn d_separated(g: &Dag, x: &str, y: &str, z: &[&str]) -> Result<bool> {
    let xi = g.index(x)?;
    let yi = g.index(y)?;
    let zs = z.iter().map(|n| g.index(n)).collect::<Result<BTreeSet<_>>>()?;
    if xi == yi || zs.contains(&xi) || zs.contains(&yi) {
        return Err(Error::BadGraph(
            "d-separation needs distinct x and y outside the conditioning set".into(),
        ));
    }
    Ok(d_separated_idx(g, xi, yi, &zs))
}

/// Index form of [`d_separated`]; no precondition checks.
///
/// Reachability over (node, direction) states: a trail may leave a node
/// upwards or downwards depending on how it arrived, colliders pass only
/// when they have a descendant in `z`.
pub fn d_separated_idx(g: &Dag, x: usize, y: usize, z: &BTreeSet<usize>) -> bool {
    let n = g.n();
    let mut in_z = vec![false; n];
    for &v in z {
        in_z[v] = true;
    }
    let mut anc_z = vec![false; n];
    for v in g.ancestors(z.iter().copied()) {
        anc_z[v] = true;
    }

    // visited[v][0]: arrived from a child (moving up), [1]: from a parent (moving down)
    let mut visited = vec![[false; 2]; n];
    let mut stack = vec![(x, 0usize)];
    while let Some((v, dir)) = stack.pop() {
        if visited[v][dir] {
            continue;
        }
        visited[v][dir] = true;
        if v == y && !in_z[v] {
            return false;
        }
        if dir == 0 {
            if !in_z[v] {
                stack.extend(g.parents(v).iter().map(|&p| (p, 0)));
                stack.extend(g.children(v).iter().map(|&c| (c, 1)));
            }
        } else {
            if !in_z[v] {
                stack.extend(g.children(v).iter().map(|&c| (c, 1)));
            }
            if anc_z[v] {
                stack.extend(g.parents(v).iter().map(|&p| (p, 0)));
            }
        }
    }
    true
}
