//! Depth-limited dump of the trace tree around the root vertex.

use std::fmt::Write;

use primstab::markoff::Direction;
use primstab::{Trace, TraceTriple, Vertex};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct TreeNode {
    pub regions: [String; 3],
    pub traces: [Trace; 3],
    /// Which regions lie in Ω(m).
    pub omega: [bool; 3],
    /// The edge back to the parent; `None` at the root.
    pub edge: Option<EdgeInfo>,
    pub children: Vec<TreeNode>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EdgeInfo {
    pub toward_parent: bool,
    pub decisive: bool,
}

fn in_omega(t: &Trace, m: f64) -> bool {
    !t.is_escaped() && t.norm() <= m
}

fn node(v: &Vertex, edge: Option<EdgeInfo>, skip: Option<usize>, depth: usize, m: f64) -> TreeNode {
    let children = if depth == 0 {
        Vec::new()
    } else {
        (0..3)
            .filter(|s| Some(*s) != skip)
            .map(|s| {
                let e = v.edge(s);
                let info = EdgeInfo {
                    toward_parent: e.direction == Direction::TowardW,
                    decisive: e.decisive,
                };
                node(&v.flip(s), Some(info), Some(s), depth - 1, m)
            })
            .collect()
    };
    TreeNode {
        regions: v.regions.map(|r| r.to_string()),
        traces: v.traces,
        omega: v.traces.map(|t| in_omega(&t, m)),
        edge,
        children,
    }
}

pub fn build(base: &TraceTriple, depth: usize, m: f64) -> TreeNode {
    node(&Vertex::root(base), None, None, depth, m)
}

pub fn render_text(root: &TreeNode) -> String {
    let mut out = String::new();
    write_node(&mut out, root, 0);
    out
}

fn write_node(out: &mut String, n: &TreeNode, indent: usize) {
    let pad = "  ".repeat(indent);
    let arrow = match n.edge {
        None => String::new(),
        Some(e) => format!(
            "{} {}",
            if e.toward_parent { "<-" } else { "->" },
            if e.decisive { "" } else { "(tie) " }
        ),
    };
    let cells: Vec<String> = (0..3)
        .map(|i| {
            let mark = if n.omega[i] { "*" } else { "" };
            format!("{}={}{}", n.regions[i], n.traces[i], mark)
        })
        .collect();
    let _ = writeln!(out, "{pad}{arrow}[{}]", cells.join(", "));
    for c in &n.children {
        write_node(out, c, indent + 1);
    }
}
