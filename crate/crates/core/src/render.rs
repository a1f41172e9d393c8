//! Text and SVG pictures of a configuration.

use crate::grid::{FaceCoord, MarkedConfig};
use serde::{Deserialize, Serialize};
use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderStyle {
    Ascii,
    Svg,
    Json,
}

impl std::str::FromStr for RenderStyle {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ascii" => Ok(RenderStyle::Ascii),
            "svg" => Ok(RenderStyle::Svg),
            "json" => Ok(RenderStyle::Json),
            other => Err(format!("unknown render style {other:?}")),
        }
    }
}

pub fn render(c: &MarkedConfig, style: RenderStyle) -> String {
    match style {
        RenderStyle::Ascii => ascii(c),
        RenderStyle::Svg => svg(c),
        RenderStyle::Json => c.to_json_pretty(),
    }
}

/// Smallest box `(xmin, xmax, ymin, ymax)` holding the support and the marked face.
fn bounds(c: &MarkedConfig) -> (i32, i32, i32, i32) {
    c.faces().fold((0, 0, 0, 0), |(a, b, d, e), (f, _)| {
        (a.min(f.x), b.max(f.x), d.min(f.y), e.max(f.y))
    })
}

/// One fixed-width cell per face, rows from the top down. Zero faces are
/// blank and the marked face shows `n` in brackets.
pub fn ascii(c: &MarkedConfig) -> String {
    let (x0, x1, y0, y1) = bounds(c);
    let digits = c.max_weight().max(c.n()).to_string().len();
    let width = digits + 2;
    let mut out = String::new();
    for y in (y0..=y1).rev() {
        let mut line = String::new();
        for x in x0..=x1 {
            let f = FaceCoord::new(x, y);
            if f.is_marked() {
                let _ = write!(line, "[{:>digits$}]", c.n());
            } else {
                match c.weight(f) {
                    0 => line.push_str(&" ".repeat(width)),
                    w => {
                        let _ = write!(line, " {w:>digits$} ");
                    }
                }
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

const CELL: i32 = 28;

pub fn svg(c: &MarkedConfig) -> String {
    let (x0, x1, y0, y1) = bounds(c);
    let (w, h) = ((x1 - x0 + 1) * CELL, (y1 - y0 + 1) * CELL);
    let mut out = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="monospace" font-size="12">"#
    );
    out.push('\n');
    for y in (y0..=y1).rev() {
        for x in x0..=x1 {
            let f = FaceCoord::new(x, y);
            let weight = if f.is_marked() { c.n() } else { c.weight(f) };
            if weight == 0 && !f.is_marked() {
                continue;
            }
            let (px, py) = ((x - x0) * CELL, (y1 - y) * CELL);
            let fill = if f.is_marked() { "#5aa9a0" } else { "#a9b8f0" };
            let _ = writeln!(
                out,
                r##"<rect x="{px}" y="{py}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="#333"/><text x="{}" y="{}" text-anchor="middle">{weight}</text>"##,
                px + CELL / 2,
                py + CELL / 2 + 4
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
