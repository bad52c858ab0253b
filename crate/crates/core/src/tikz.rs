//! Tikz picture export.
//!
//! ```text
//! \begin{tikzpicture}
//!   \tikzstyle{every node}=[draw,circle,inner sep=2]
//!   \path (2.48,9.34) node (v0) {};
//!   \path (3.28,9.34) node (v1) {};
//!   \draw (v0)--(v1);
//! \end{tikzpicture}
//! ```

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::corpus::COLOR;
use crate::property::PropertyValue;
use crate::topology::{NodeId, Topology};

#[derive(Debug, Clone, PartialEq)]
pub struct TikzOptions {
    /// Topology coordinates are divided by this.
    pub scale: f64,
    pub node_style: String,
    pub decimal_places: usize,
    /// Emit `[fill=<color>]` for nodes with a string `"color"` property.
    pub fill_from_color: bool,
}

impl Default for TikzOptions {
    fn default() -> Self {
        TikzOptions {
            scale: 50.0,
            node_style: "draw,circle,inner sep=2".to_owned(),
            decimal_places: 2,
            fill_from_color: false,
        }
    }
}

fn coord(v: f64, places: usize) -> String {
    let s = format!("{v:.places$}");
    // "-0.00" would compare unequal to "0.00" for the same point
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_owned()
    } else {
        s
    }
}

/// Renders the topology as a standalone `tikzpicture`.
///
/// Nodes are emitted by ascending id, edges by ascending `(a, b)`. A pair
/// joined by both a wired and a wireless link is drawn once.
pub fn to_tikz(topology: &Topology, options: &TikzOptions) -> String {
    assert!(options.scale > 0.0, "tikz scale must be positive");
    let places = options.decimal_places;
    let mut out = String::new();
    out.push_str("\\begin{tikzpicture}\n");
    let _ = writeln!(out, "  \\tikzstyle{{every node}}=[{}]", options.node_style);
    for node in topology.nodes() {
        let p = node.position();
        let fill = match node.property(COLOR) {
            Some(PropertyValue::Str(c)) if options.fill_from_color => format!("[fill={c}]"),
            _ => String::new(),
        };
        let _ = writeln!(
            out,
            "  \\path ({},{}) node{fill} (v{}) {{}};",
            coord(p.x / options.scale, places),
            coord(p.y / options.scale, places),
            node.id()
        );
    }
    let edges: BTreeSet<(NodeId, NodeId)> = topology.links().map(|l| (l.a(), l.b())).collect();
    for (a, b) in edges {
        let _ = writeln!(out, "  \\draw (v{a})--(v{b});");
    }
    out.push_str("\\end{tikzpicture}\n");
    out
}
