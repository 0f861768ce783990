//! SVG pictures of a plan: one per segment plus an overview.
//!
//! Segment `k` covering timesteps `a..=b` is written as
//! `segment_<k>_t<a>-<b>.svg`; the overview is `full_plan.svg`. Starts are
//! circles, goals are stars, and a wait is drawn as a small loop on its cell.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plan::{Path, Plan};
use crate::segmentation::{window_disjoint, Decomposition, SegmentationError};
use crate::world::{Cell, GridWorld};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error(transparent)]
    Mismatch(#[from] SegmentationError),
    #[error("segment {segment} (t={from}..={to}) is not vertex-disjoint")]
    NotDisjoint {
        segment: usize,
        from: usize,
        to: usize,
    },
    #[error("path of agent {agent} leaves the grid at {cell}")]
    OffGrid { agent: usize, cell: Cell },
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderSpec {
    /// Side of one grid cell in pixels.
    pub cell_size: u32,
    pub margin: u32,
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self {
            cell_size: 32,
            margin: 24,
        }
    }
}

impl RenderSpec {
    /// Stable color for an agent: hues spaced by the golden angle.
    pub fn color(&self, agent_id: usize) -> String {
        let hue = (agent_id as f64 * 137.507_764) % 360.0;
        let (r, g, b) = hsl_to_rgb(hue, 0.65, 0.45);
        format!("#{r:02x}{g:02x}{b:02x}")
    }
}

fn hsl_to_rgb(h: f64, s: f64, l: f64) -> (u8, u8, u8) {
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    let to = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    (to(r), to(g), to(b))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SvgDocument {
    pub file_name: String,
    pub contents: String,
}

/// One document per segment followed by the full-plan overview.
pub fn render_explanation(
    plan: &Plan,
    decomposition: &Decomposition,
    world: &GridWorld,
    spec: &RenderSpec,
) -> Result<Vec<SvgDocument>, RenderError> {
    decomposition.check_covers(plan.paths())?;
    for p in plan.paths() {
        if let Some(&cell) = p.vertices.iter().find(|c| !world.is_passable(**c)) {
            return Err(RenderError::OffGrid {
                agent: p.agent_id,
                cell,
            });
        }
    }
    let mut docs = Vec::with_capacity(decomposition.index() + 1);
    for (k, (a, b)) in decomposition.windows().enumerate() {
        let k = k + 1;
        if b - a > 1 && !window_disjoint(plan.paths(), a, b) {
            return Err(RenderError::NotDisjoint {
                segment: k,
                from: a,
                to: b - 1,
            });
        }
        let mut canvas = Canvas::new(world, spec);
        canvas.title(&format!("k={k} [{a},{}]", b - 1));
        for p in plan.paths() {
            canvas.sub_path(p, a, b);
        }
        docs.push(SvgDocument {
            file_name: format!("segment_{k}_t{a}-{}.svg", b - 1),
            contents: canvas.finish(),
        });
    }
    let mut canvas = Canvas::new(world, spec);
    canvas.title(&format!(
        "full plan, index {}, cost {}",
        decomposition.index(),
        plan.sum_of_costs()
    ));
    for p in plan.paths() {
        canvas.sub_path(p, 0, p.len());
    }
    docs.push(SvgDocument {
        file_name: "full_plan.svg".into(),
        contents: canvas.finish(),
    });
    Ok(docs)
}

/// Writes documents into `dir`, creating it if needed.
pub fn write_documents(dir: &FsPath, docs: &[SvgDocument]) -> Result<(), RenderError> {
    let io = |path: &FsPath, source| RenderError::Io {
        path: path.display().to_string(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    for d in docs {
        let path = dir.join(&d.file_name);
        std::fs::write(&path, &d.contents).map_err(|e| io(&path, e))?;
    }
    Ok(())
}

struct Canvas<'a> {
    spec: &'a RenderSpec,
    out: String,
}

impl<'a> Canvas<'a> {
    const HEADER: u32 = 20;

    fn new(world: &GridWorld, spec: &'a RenderSpec) -> Self {
        let cs = spec.cell_size;
        let w = world.width() * cs + 2 * spec.margin;
        let h = world.height() * cs + 2 * spec.margin + Self::HEADER;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" width="{w}" height="{h}">"#
        );
        let _ = writeln!(
            out,
            r##"<rect x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>"##
        );
        let (ox, oy) = (spec.margin, spec.margin + Self::HEADER);
        let _ = writeln!(out, r##"<g stroke="#d0d0d0" stroke-width="1">"##);
        for x in 0..=world.width() {
            let px = ox + x * cs;
            let _ = writeln!(
                out,
                r#"<line x1="{px}" y1="{oy}" x2="{px}" y2="{}"/>"#,
                oy + world.height() * cs
            );
        }
        for y in 0..=world.height() {
            let py = oy + y * cs;
            let _ = writeln!(
                out,
                r#"<line x1="{ox}" y1="{py}" x2="{}" y2="{py}"/>"#,
                ox + world.width() * cs
            );
        }
        out.push_str("</g>\n");
        let _ = writeln!(out, r##"<g fill="#404040">"##);
        for c in world.blocked() {
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{cs}" height="{cs}"/>"#,
                ox + c.x * cs,
                oy + c.y * cs
            );
        }
        out.push_str("</g>\n");
        Self { spec, out }
    }

    fn center(&self, c: Cell) -> (f64, f64) {
        let cs = self.spec.cell_size as f64;
        (
            self.spec.margin as f64 + (c.x as f64 + 0.5) * cs,
            (self.spec.margin + Self::HEADER) as f64 + (c.y as f64 + 0.5) * cs,
        )
    }

    fn title(&mut self, text: &str) {
        let _ = writeln!(
            self.out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14">{}</text>"#,
            self.spec.margin,
            self.spec.margin + 10,
            escape(text)
        );
    }

    /// Draws `p` over timesteps `a..b`; nothing if the agent is gone by `a`.
    fn sub_path(&mut self, p: &Path, a: usize, b: usize) {
        let end = b.min(p.len());
        if a >= end {
            return;
        }
        let cells = &p.vertices[a..end];
        let color = self.spec.color(p.agent_id);
        let r = self.spec.cell_size as f64;
        let _ = writeln!(
            self.out,
            r#"<g stroke="{color}" fill="none" stroke-width="{:.1}" data-agent="{}">"#,
            r * 0.12,
            p.agent_id
        );
        let pts: Vec<String> = cells
            .iter()
            .map(|&c| {
                let (x, y) = self.center(c);
                format!("{x:.1},{y:.1}")
            })
            .collect();
        let _ = writeln!(self.out, r#"<polyline points="{}"/>"#, pts.join(" "));
        let mut waited = HashSet::new();
        for w in cells.windows(2) {
            if w[0] == w[1] && waited.insert(w[0]) {
                let (x, y) = self.center(w[0]);
                let _ = writeln!(
                    self.out,
                    r#"<circle cx="{:.1}" cy="{:.1}" r="{:.1}"/>"#,
                    x + r * 0.2,
                    y - r * 0.2,
                    r * 0.15
                );
            }
        }
        self.out.push_str("</g>\n");

        let first = cells[0];
        let (x, y) = self.center(first);
        let fill = if a == 0 { color.as_str() } else { "#ffffff" };
        let _ = writeln!(
            self.out,
            r#"<circle cx="{x:.1}" cy="{y:.1}" r="{:.1}" fill="{fill}" stroke="{color}" stroke-width="2"/>"#,
            r * 0.28
        );
        if end == p.len() {
            let (x, y) = self.center(p.end());
            let _ = writeln!(
                self.out,
                r#"<polygon points="{}" fill="{color}"/>"#,
                star(x, y, r * 0.4, r * 0.17)
            );
        }
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn star(cx: f64, cy: f64, outer: f64, inner: f64) -> String {
    (0..10)
        .map(|i| {
            let rad = if i % 2 == 0 { outer } else { inner };
            let ang = std::f64::consts::PI * (i as f64 / 5.0) - std::f64::consts::FRAC_PI_2;
            format!("{:.1},{:.1}", cx + rad * ang.cos(), cy + rad * ang.sin())
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Elements a rendered document may contain.
pub const KNOWN_ELEMENTS: &[&str] = &[
    "svg", "g", "rect", "line", "polyline", "circle", "polygon", "text",
];

/// Minimal structural check: a single `svg` root with a `viewBox`, balanced
/// tags, and only [`KNOWN_ELEMENTS`].
pub fn check_svg_structure(doc: &str) -> Result<(), String> {
    let mut stack: Vec<String> = Vec::new();
    let mut roots = 0;
    let mut rest = doc;
    while let Some(open) = rest.find('<') {
        let after = &rest[open + 1..];
        let close = after.find('>').ok_or("unterminated tag")?;
        let tag = &after[..close];
        rest = &after[close + 1..];
        if let Some(name) = tag.strip_prefix('/') {
            let name = name.trim();
            match stack.pop() {
                Some(top) if top == name => {}
                other => return Err(format!("closing </{name}> does not match {other:?}")),
            }
            continue;
        }
        let self_closing = tag.ends_with('/');
        let body = tag.trim_end_matches('/');
        let name = body.split_whitespace().next().ok_or("empty tag")?;
        if !KNOWN_ELEMENTS.contains(&name) {
            return Err(format!("unexpected element <{name}>"));
        }
        if stack.is_empty() {
            if name != "svg" {
                return Err(format!("root element is <{name}>, expected <svg>"));
            }
            roots += 1;
            if !body.contains("viewBox=") {
                return Err("root <svg> has no viewBox".into());
            }
        } else if name == "svg" {
            return Err("nested <svg>".into());
        }
        if !self_closing {
            stack.push(name.to_string());
        }
    }
    if !stack.is_empty() {
        return Err(format!("unclosed elements {stack:?}"));
    }
    if roots != 1 {
        return Err(format!("expected one root element, found {roots}"));
    }
    Ok(())
}
