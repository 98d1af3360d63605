use std::collections::BTreeMap;
use std::fmt::Write;

use super::{children, RenderError, RenderSpec};
use crate::model::ConnStatus;
use crate::scalar::Scalar;

pub const CELL_WIDTH: i64 = 160;
pub const CELL_HEIGHT: i64 = 80;
const BLOCK_WIDTH: i64 = 120;
const BLOCK_HEIGHT: i64 = 50;
const GROUP_INSET: i64 = 6;

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

struct Grid {
    columns: i64,
    rows: i64,
    cells: BTreeMap<String, (i64, i64)>,
}

impl Grid {
    /// Row-major placement of blocks in sorted id order.
    fn layout(ids: &[&str]) -> Grid {
        let n = ids.len() as i64;
        let mut columns = 1;
        while columns * columns < n {
            columns += 1;
        }
        let rows = ((n + columns - 1) / columns).max(1);
        let cells = ids
            .iter()
            .enumerate()
            .map(|(i, id)| ((*id).to_owned(), (i as i64 % columns, i as i64 / columns)))
            .collect();
        Grid { columns, rows, cells }
    }

    fn center(&self, id: &str) -> (i64, i64) {
        let (col, row) = self.cells[id];
        (col * CELL_WIDTH + CELL_WIDTH / 2, row * CELL_HEIGHT + CELL_HEIGHT / 2)
    }
}

fn descendants<'m>(tree: &BTreeMap<&'m str, Vec<&'m str>>, id: &'m str, out: &mut Vec<&'m str>) {
    if let Some(kids) = tree.get(id) {
        for kid in kids {
            if !out.contains(kid) {
                out.push(kid);
                descendants(tree, kid, out);
            }
        }
    }
}

/// Standalone SVG 1.1 document on a fixed grid with orthogonal connection
/// polylines.
pub fn render_svg<S: Scalar>(spec: &RenderSpec<'_, S>) -> Result<String, RenderError> {
    spec.check()?;
    let model = spec.model;
    let mut ids: Vec<&str> = model.blocks.iter().map(|b| b.id.as_str()).collect();
    ids.sort_unstable();
    let grid = Grid::layout(&ids);
    let width = grid.columns * CELL_WIDTH;
    let height = grid.rows * CELL_HEIGHT;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        out,
        r##"<rect class="background" x="0" y="0" width="{width}" height="{height}" fill="#FFFFFF"/>"##
    );

    let tree = children(model);
    for parent in tree.keys() {
        if !grid.cells.contains_key(*parent) {
            continue;
        }
        let mut members = vec![*parent];
        descendants(&tree, parent, &mut members);
        let cells: Vec<(i64, i64)> = members.iter().filter_map(|m| grid.cells.get(*m).copied()).collect();
        let min_col = cells.iter().map(|c| c.0).min().unwrap_or(0);
        let max_col = cells.iter().map(|c| c.0).max().unwrap_or(0);
        let min_row = cells.iter().map(|c| c.1).min().unwrap_or(0);
        let max_row = cells.iter().map(|c| c.1).max().unwrap_or(0);
        let x = min_col * CELL_WIDTH + GROUP_INSET;
        let y = min_row * CELL_HEIGHT + GROUP_INSET;
        let w = (max_col - min_col + 1) * CELL_WIDTH - 2 * GROUP_INSET;
        let h = (max_row - min_row + 1) * CELL_HEIGHT - 2 * GROUP_INSET;
        let _ = writeln!(
            out,
            r##"<rect class="group" data-id="{}" x="{x}" y="{y}" width="{w}" height="{h}" fill="none" stroke="#808080" stroke-width="1" stroke-dasharray="4 3"/>"##,
            escape(parent)
        );
    }

    let mut connections: Vec<_> = model.connections.iter().collect();
    connections.sort_by(|a, b| a.id.cmp(&b.id));
    let mut labels = String::new();
    for conn in connections {
        let Some((a, b)) = model.connection_blocks(conn) else {
            continue;
        };
        let (x1, y1) = grid.center(a);
        let (x2, y2) = grid.center(b);
        let points = if a == b {
            let right = x1 + BLOCK_WIDTH / 2;
            format!("{right},{} {},{} {},{} {right},{}", y1 - 10, right + 12, y1 - 10, right + 12, y1 + 10, y1 + 10)
        } else {
            let mid = (y1 + y2) / 2;
            format!("{x1},{y1} {x1},{mid} {x2},{mid} {x2},{y2}")
        };
        let highlight = spec.highlight(&conn.id);
        let mut style = format!(
            r##"fill="none" stroke="#333333" stroke-width="{}""##,
            if highlight.is_some() { 3 } else { 1 }
        );
        if spec.state.status.get(&conn.id) == Some(&ConnStatus::Disconnected) {
            style.push_str(r#" stroke-dasharray="6 4""#);
        }
        let _ = writeln!(
            out,
            r#"<polyline class="connection" data-id="{}" data-kind="{}" points="{points}" {style}/>"#,
            escape(&conn.id),
            conn.kind
        );
        if let Some(kind) = highlight {
            let (lx, ly) = if a == b { (x1 + BLOCK_WIDTH / 2 + 14, y1) } else { ((x1 + x2) / 2, (y1 + y2) / 2 - 4) };
            let _ = writeln!(
                labels,
                r##"<text class="highlight" data-id="{}" x="{lx}" y="{ly}" font-family="sans-serif" font-size="11" font-weight="bold" fill="#000000">{}</text>"##,
                escape(&conn.id),
                kind
            );
        }
    }

    for id in &ids {
        let block = model.block(id).expect("ids come from the model");
        let (cx, cy) = grid.center(id);
        let stroke = if spec.is_target(id) { 3 } else { 1 };
        let _ = writeln!(
            out,
            r##"<rect class="block" data-id="{}" x="{}" y="{}" width="{BLOCK_WIDTH}" height="{BLOCK_HEIGHT}" fill="{}" stroke="#000000" stroke-width="{stroke}"/>"##,
            escape(id),
            cx - BLOCK_WIDTH / 2,
            cy - BLOCK_HEIGHT / 2,
            escape(spec.palette.color(block.discipline))
        );
        let _ = writeln!(
            out,
            r##"<text class="label" x="{cx}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" fill="#000000">{}</text>"##,
            cy + 4,
            escape(&block.name)
        );
    }
    out.push_str(&labels);
    out.push_str("</svg>\n");
    Ok(out)
}
