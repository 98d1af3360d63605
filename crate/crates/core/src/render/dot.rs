use std::collections::BTreeMap;
use std::fmt::Write;

use super::{children, RenderError, RenderSpec};
use crate::model::ConnStatus;
use crate::scalar::Scalar;

fn quoted(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

fn write_block<S: Scalar>(
    spec: &RenderSpec<'_, S>,
    id: &str,
    depth: usize,
    tree: &BTreeMap<&str, Vec<&str>>,
    out: &mut String,
) {
    let indent = "  ".repeat(depth);
    let block = spec.model.block(id).expect("block ids come from the model");
    let mut attrs = format!(
        "label={}, fillcolor={}",
        quoted(&block.name),
        quoted(spec.palette.color(block.discipline))
    );
    if spec.is_target(id) {
        attrs.push_str(", penwidth=3");
    }
    match tree.get(id) {
        Some(kids) => {
            let _ = writeln!(out, "{indent}subgraph {} {{", quoted(&format!("cluster_{id}")));
            let _ = writeln!(out, "{indent}  label={};", quoted(&block.name));
            let _ = writeln!(out, "{indent}  style=dashed;");
            let _ = writeln!(out, "{indent}  {} [{attrs}];", quoted(id));
            for kid in kids {
                write_block(spec, kid, depth + 1, tree, out);
            }
            let _ = writeln!(out, "{indent}}}");
        }
        None => {
            let _ = writeln!(out, "{indent}{} [{attrs}];", quoted(id));
        }
    }
}

/// Undirected DOT graph; containment becomes nested cluster subgraphs.
pub fn render_dot<S: Scalar>(spec: &RenderSpec<'_, S>) -> Result<String, RenderError> {
    spec.check()?;
    let model = spec.model;
    let tree = children(model);
    let mut out = String::new();
    let _ = writeln!(out, "graph {} {{", quoted(&model.id));
    out.push_str("  node [shape=box, style=filled];\n");

    let mut roots: Vec<&str> = model
        .blocks
        .iter()
        .filter(|b| b.parent.is_none())
        .map(|b| b.id.as_str())
        .collect();
    roots.sort_unstable();
    for root in roots {
        write_block(spec, root, 1, &tree, &mut out);
    }

    let mut connections: Vec<_> = model.connections.iter().collect();
    connections.sort_by(|a, b| a.id.cmp(&b.id));
    for conn in connections {
        let (Some(pa), Some(pb)) = (model.port(&conn.a), model.port(&conn.b)) else {
            continue;
        };
        let mut attrs = format!(
            "id={}, taillabel={}, headlabel={}",
            quoted(&conn.id),
            quoted(pa.local_name()),
            quoted(pb.local_name())
        );
        if spec.state.status.get(&conn.id) == Some(&ConnStatus::Disconnected) {
            attrs.push_str(", style=dashed");
        }
        if let Some(kind) = spec.highlight(&conn.id) {
            let _ = write!(attrs, ", penwidth=3, label={}", quoted(kind.keyword()));
        }
        let _ = writeln!(out, "  {} -- {} [{attrs}];", quoted(&pa.owner), quoted(&pb.owner));
    }
    out.push_str("}\n");
    Ok(out)
}
