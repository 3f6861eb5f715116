use std::collections::BTreeSet;
use std::fmt::Write;

use super::Cpdag;

/// Which nodes to highlight: treatment in blue, outcomes in red.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeRoles {
    pub treatment: Option<String>,
    pub outcomes: BTreeSet<String>,
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz rendering. Undirected edges are drawn as `a -> b [dir=none]`.
pub fn to_dot(g: &Cpdag, roles: &NodeRoles) -> String {
    let mut out = String::from("digraph causal {\n");
    for name in g.nodes() {
        let attrs = if roles.treatment.as_deref() == Some(name.as_str()) {
            " [style=filled, fillcolor=blue, fontcolor=white]"
        } else if roles.outcomes.contains(name) {
            " [style=filled, fillcolor=red, fontcolor=white]"
        } else {
            ""
        };
        writeln!(out, "  {}{attrs};", quote(name)).unwrap();
    }
    let nodes = g.nodes();
    for &(a, b) in g.directed() {
        writeln!(out, "  {} -> {};", quote(&nodes[a]), quote(&nodes[b])).unwrap();
    }
    for &(a, b) in g.undirected() {
        writeln!(out, "  {} -> {} [dir=none];", quote(&nodes[a]), quote(&nodes[b])).unwrap();
    }
    out.push_str("}\n");
    out
}
