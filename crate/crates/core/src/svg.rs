//! Static SVG diagnostics of the decomposition in the normalized frame.
//!
//! Each square is a `<rect id="q{id}">`; sites are `<circle id="s{k}">`
//! with `k` the input index.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::pipeline::Model;

/// Drawing options.
#[derive(Clone, Debug)]
pub struct RenderOptions {
    /// `[x0, y0, x1, y1]` in the normalized frame.
    pub view: [f64; 4],
    pub size_px: f64,
    pub towers: bool,
    pub gangs: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        let w = 1.0 / 512.0;
        RenderOptions { view: [-w, -w, w, w], size_px: 1000.0, towers: true, gangs: true }
    }
}

const EASY: &str = "#9ecae1";
const HARD: &str = "#fdae6b";
const IRRELEVANT: &str = "#f0f0f0";
const TOWER: &str = "#d62728";
const GANG: &str = "#2ca02c";

pub fn render(m: &Model, opts: &RenderOptions) -> String {
    let [vx0, vy0, vx1, vy1] = opts.view;
    let sx = opts.size_px / (vx1 - vx0);
    let sy = opts.size_px / (vy1 - vy0);
    let px = |x: f64| (x - vx0) * sx;
    let py = |y: f64| (vy1 - y) * sy;
    let towers: BTreeSet<usize> = if opts.towers { m.groups.groups.values().flat_map(|g| g.tower.iter().copied()).collect() } else { BTreeSet::new() };
    let gangs: BTreeSet<usize> = if opts.gangs {
        m.groups.groups.values().flat_map(|g| g.gangs.iter().flatten().copied()).collect()
    } else {
        BTreeSet::new()
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{w}" viewBox="0 0 {w} {w}">"#,
        w = opts.size_px
    );
    let _ = writeln!(out, r##"<g stroke="#555" stroke-width="0.5">"##);
    for (id, q) in m.cz.squares().iter().enumerate() {
        let (x0, y0, s) = q.bounds;
        if x0 > vx1 || x0 + s < vx0 || y0 > vy1 || y0 + s < vy0 {
            continue;
        }
        let fill = if !q.relevant {
            IRRELEVANT
        } else if m.groups.easy(id) {
            EASY
        } else {
            HARD
        };
        let mut extra = String::new();
        if towers.contains(&id) {
            let _ = write!(extra, r#" stroke="{TOWER}" stroke-width="2""#);
        } else if gangs.contains(&id) {
            let _ = write!(extra, r#" stroke="{GANG}" stroke-dasharray="3,2""#);
        }
        let _ = writeln!(
            out,
            r#"<rect id="q{id}" x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{fill}"{extra}/>"#,
            px(x0),
            py(y0 + s),
            s * sx,
            s * sy
        );
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r##"<g fill="#000">"##);
    let order = m.sites.order();
    for k in 0..m.sites.len() {
        let x = m.sites.x_f64(k);
        if x < vx0 || x > vx1 {
            continue;
        }
        let _ = writeln!(out, r#"<circle id="s{}" cx="{:.3}" cy="{:.3}" r="2"/>"#, order[k], px(x), py(0.0));
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    out
}

/// Square ids drawn in an SVG produced by [`render`].
pub fn square_ids(svg: &str) -> Vec<usize> {
    svg.split(r#"id="q"#).skip(1).filter_map(|rest| rest.split('"').next()?.parse().ok()).collect()
}
