//! Deterministic SVG 1.1 rendering of a scene and paths over it.
//!
//! The world y axis points up, so it is flipped into SVG's downward y. Arcs
//! are emitted as true SVG arc segments.

use std::f64::consts::PI;
use std::fmt::Write;

use crate::geometry::{Point, Pose};
use crate::path::{CarPath, Direction, Trace};
use crate::scene::Scene;

/// Longest side of the drawing in SVG user units.
const CANVAS: f64 = 800.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathStyle {
    /// Thick dark stroke, drawn on top.
    Emphasized,
    /// Thin stroke from the palette.
    Input(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendered {
    pub svg: String,
    pub warnings: Vec<String>,
}

fn num(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_owned()
    } else {
        s
    }
}

struct Frame {
    xmin: f64,
    ymax: f64,
    scale: f64,
}

impl Frame {
    fn x(&self, p: Point) -> String {
        num((p.x - self.xmin) * self.scale)
    }

    fn y(&self, p: Point) -> String {
        num((self.ymax - p.y) * self.scale)
    }

    fn xy(&self, p: Point) -> String {
        format!("{} {}", self.x(p), self.y(p))
    }
}

fn path_data(frame: &Frame, path: &CarPath, prims: std::ops::Range<usize>) -> String {
    let mut d = String::new();
    let first = &path.primitives[prims.start];
    let _ = write!(d, "M {}", frame.xy(first.start_point()));
    for p in &path.primitives[prims] {
        match p.trace {
            Trace::Straight { .. } => {
                let _ = write!(d, " L {}", frame.xy(p.end_point()));
            }
            Trace::Arc(a) => {
                let pieces = (a.sweep.abs() / PI).ceil().max(1.0) as usize;
                let r = num(a.radius * frame.scale);
                // counter-clockwise in the world is clockwise on screen
                let flag = if a.sweep > 0.0 { 0 } else { 1 };
                for i in 1..=pieces {
                    let angle = a.start_angle + a.sweep * i as f64 / pieces as f64;
                    let end = a.center + Point::from_angle(angle) * a.radius;
                    let _ = write!(d, " A {r} {r} 0 0 {flag} {}", frame.xy(end));
                }
            }
        }
    }
    d
}

fn glyph(out: &mut String, frame: &Frame, pose: &Pose, color: &str, size: f64) {
    let tip = pose.position + pose.direction() * size;
    let _ = writeln!(
        out,
        r#"  <circle cx="{}" cy="{}" r="{}" fill="{color}"/>"#,
        frame.x(pose.position),
        frame.y(pose.position),
        num(0.35 * size * frame.scale),
    );
    let _ = writeln!(
        out,
        r#"  <line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/>"#,
        frame.x(pose.position),
        frame.y(pose.position),
        frame.x(tip),
        frame.y(tip),
    );
}

/// Draws the scene's bounds and obstacles, then each path. Reverse
/// primitives are dashed. Geometry outside the bounds is drawn anyway and
/// reported in `warnings`.
pub fn render_svg(
    scene: &Scene,
    paths: &[(&CarPath, PathStyle)],
    start: Option<&Pose>,
    goal: Option<&Pose>,
) -> Rendered {
    let b = scene.bounds;
    let scale = CANVAS / b.width().max(b.height());
    let frame = Frame {
        xmin: b.xmin,
        ymax: b.ymax,
        scale,
    };
    let (w, h) = (num(b.width() * scale), num(b.height() * scale));
    let mut out = String::new();
    let mut warnings = Vec::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(
        out,
        r##"  <rect x="0.000000" y="0.000000" width="{w}" height="{h}" fill="#ffffff" stroke="#000000" stroke-width="2"/>"##
    );
    for poly in &scene.obstacles {
        let pts: Vec<String> = poly
            .vertices()
            .iter()
            .map(|&p| format!("{},{}", frame.x(p), frame.y(p)))
            .collect();
        let _ = writeln!(
            out,
            r##"  <polygon points="{}" fill="#7f7f7f" stroke="#404040"/>"##,
            pts.join(" ")
        );
    }

    let mut order: Vec<usize> = (0..paths.len()).collect();
    // emphasized paths last so they sit on top
    order.sort_by_key(|&i| matches!(paths[i].1, PathStyle::Emphasized));
    for i in order {
        let (path, style) = paths[i];
        let (color, width) = match style {
            PathStyle::Emphasized => ("#d62728", 4.0),
            PathStyle::Input(k) => (PALETTE[k % PALETTE.len()], 1.5),
        };
        let leaves = path.primitives.iter().any(|p| {
            p.sample_poses(scene.car.min_turn_radius * 0.1)
                .iter()
                .any(|(_, q)| !b.contains(q.position))
        });
        if leaves || !b.contains(path.start.position) {
            warnings.push(format!("path {i} leaves the scene bounds"));
        }
        let mut run = 0;
        while run < path.primitives.len() {
            let dir = path.primitives[run].direction;
            let end = (run..path.primitives.len())
                .find(|&j| path.primitives[j].direction != dir)
                .unwrap_or(path.primitives.len());
            let dash = if dir == Direction::Reverse {
                r#" stroke-dasharray="8 5""#
            } else {
                ""
            };
            let _ = writeln!(
                out,
                r#"  <path d="{}" fill="none" stroke="{color}" stroke-width="{}"{dash}/>"#,
                path_data(&frame, path, run..end),
                num(width),
            );
            run = end;
        }
    }

    let size = 0.5 * scene.car.length.max(scene.car.min_turn_radius * 0.5);
    if let Some(p) = start {
        glyph(&mut out, &frame, p, "#2ca02c", size);
    }
    if let Some(p) = goal {
        glyph(&mut out, &frame, p, "#1f3fbf", size);
    }
    out.push_str("</svg>\n");
    Rendered { svg: out, warnings }
}
