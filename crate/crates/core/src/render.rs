//! Text renderings: SVG drawings of dimers on the unit torus square and DOT
//! mutation graphs. Output depends only on the input, so files are diffable.

use std::fmt::Write;

use num_rational::Ratio;

use crate::dimer::DimerModel;
use crate::mutation::MutationGraph;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 24.0;

fn to_f64(r: &Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Canvas coordinates, with y pointing up on the torus.
fn canvas(p: [f64; 2]) -> (f64, f64) {
    (MARGIN + p[0] * SIZE, MARGIN + (1.0 - p[1]) * SIZE)
}

/// Integer translates `t` for which the box `[lo, hi]` shifted by `t` meets the unit square.
fn translates(lo: [f64; 2], hi: [f64; 2]) -> Vec<[f64; 2]> {
    let range = |i: usize| ((-hi[i]).floor() as i64)..=((1.0 - lo[i]).ceil() as i64);
    let mut out = Vec::new();
    for tx in range(0) {
        for ty in range(1) {
            let t = [tx as f64, ty as f64];
            if lo[0] + t[0] < 1.0 && hi[0] + t[0] > 0.0 && lo[1] + t[1] < 1.0 && hi[1] + t[1] > 0.0
            {
                out.push(t);
            }
        }
    }
    out
}

fn bounds(points: &[[f64; 2]]) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for i in 0..2 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    (lo, hi)
}

/// SVG of the dimer in the fundamental square `[0,1)²`: positive faces
/// shaded, negative faces white, arrows drawn in every translate that meets
/// the square, vertices labelled by index.
pub fn dimer_svg(dimer: &DimerModel) -> String {
    let q = dimer.quiver();
    let points: Vec<[f64; 2]> = dimer
        .projected_points()
        .iter()
        .map(|p| [to_f64(&p[0]), to_f64(&p[1])])
        .collect();
    let moves: Vec<[f64; 2]> = dimer
        .projected_displacements()
        .iter()
        .map(|u| [to_f64(&u[0]), to_f64(&u[1])])
        .collect();
    let total = SIZE + 2.0 * MARGIN;
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" viewBox="0 0 {total} {total}">"#).unwrap();
    writeln!(s, "<defs>").unwrap();
    writeln!(
        s,
        r#"<clipPath id="torus"><rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}"/></clipPath>"#
    )
    .unwrap();
    writeln!(
        s,
        r##"<marker id="head" viewBox="0 0 10 10" refX="5" refY="5" markerWidth="7" markerHeight="7" orient="auto"><path d="M0,0 L10,5 L0,10 z" fill="#333"/></marker>"##
    )
    .unwrap();
    writeln!(s, "</defs>").unwrap();
    writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="white"/>"#
    )
    .unwrap();
    writeln!(s, r#"<g clip-path="url(#torus)">"#).unwrap();
    for (sign, faces) in [(true, dimer.faces_pos()), (false, dimer.faces_neg())] {
        let fill = if sign { "#d9e6f5" } else { "white" };
        for f in faces {
            let mut poly = vec![points[q.arrows()[f[0]].tail]];
            for &a in &f[..f.len() - 1] {
                let last = poly[poly.len() - 1];
                poly.push([last[0] + moves[a][0], last[1] + moves[a][1]]);
            }
            let (lo, hi) = bounds(&poly);
            for t in translates(lo, hi) {
                let coords: Vec<String> = poly
                    .iter()
                    .map(|p| {
                        let (x, y) = canvas([p[0] + t[0], p[1] + t[1]]);
                        format!("{x:.2},{y:.2}")
                    })
                    .collect();
                writeln!(
                    s,
                    r#"<polygon points="{}" fill="{fill}" stroke="none"/>"#,
                    coords.join(" ")
                )
                .unwrap();
            }
        }
    }
    for (a, arrow) in q.arrows().iter().enumerate() {
        let p = points[arrow.tail];
        let e = [p[0] + moves[a][0], p[1] + moves[a][1]];
        let (lo, hi) = bounds(&[p, e]);
        for t in translates(lo, hi) {
            let (x1, y1) = canvas([p[0] + t[0], p[1] + t[1]]);
            let (x2, y2) = canvas([e[0] + t[0], e[1] + t[1]]);
            let (xm, ym) = ((x1 + x2) / 2.0, (y1 + y2) / 2.0);
            writeln!(
                s,
                r##"<path d="M{x1:.2},{y1:.2} L{xm:.2},{ym:.2} L{x2:.2},{y2:.2}" stroke="#333" stroke-width="1.5" fill="none" marker-mid="url(#head)"/>"##
            )
            .unwrap();
        }
    }
    writeln!(s, "</g>").unwrap();
    writeln!(s, r##"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="#999" stroke-dasharray="4 3"/>"##).unwrap();
    for (v, p) in points.iter().enumerate() {
        let (x, y) = canvas(*p);
        writeln!(
            s,
            r##"<circle cx="{x:.2}" cy="{y:.2}" r="9" fill="white" stroke="#333"/>"##
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="middle">{v}</text>"#,
            y + 3.5
        )
        .unwrap();
    }
    writeln!(s, "</svg>").unwrap();
    s
}

/// DOT graph with one node per class; `labels[i]` is appended to node `i`.
pub fn mutation_dot(graph: &MutationGraph, labels: &[String]) -> String {
    let mut s = String::from("digraph mutation {\n  node [shape=box];\n");
    for (i, &class) in graph.nodes.iter().enumerate() {
        let star = if graph.asterisk[i] { "*" } else { "" };
        let extra = labels
            .get(i)
            .filter(|l| !l.is_empty())
            .map(|l| format!("\\n{l}"))
            .unwrap_or_default();
        writeln!(s, "  n{i} [label=\"class {class}{star}{extra}\"];").unwrap();
    }
    for e in &graph.edges {
        writeln!(s, "  n{} -> n{} [label=\"v{}\"];", e.from, e.to, e.vertex).unwrap();
    }
    s.push_str("}\n");
    s
}
