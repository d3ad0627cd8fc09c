//! SVG rendering of a tessellation with an optional highlighted polyomino.

use std::fmt::Write as _;

use super::Tessellation;

/// Renders cells (thin gray outlines), Delaunay edges, generators, and
/// fills the cells listed in `highlight`.
pub fn render(tess: &Tessellation, highlight: &[usize], width_px: f64) -> String {
    let w = tess.window();
    let (lo, hi) = (w.lo(), w.hi());
    let scale = width_px / (hi[0] - lo[0]);
    let height_px = (hi[1] - lo[1]) * scale;
    let tx = |x: f64| (x - lo[0]) * scale;
    let ty = |y: f64| (hi[1] - y) * scale;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width_px:.0}" height="{height_px:.0}" viewBox="0 0 {width_px:.3} {height_px:.3}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let mut marked = vec![false; tess.len()];
    for &v in highlight {
        if v < marked.len() {
            marked[v] = true;
        }
    }
    for v in 0..tess.len() {
        let cell = tess.cell(v);
        let pts: Vec<String> = cell.polygon.iter().map(|p| format!("{:.3},{:.3}", tx(p[0]), ty(p[1]))).collect();
        let fill = if marked[v] { "#b0b0b0" } else { "none" };
        let _ = writeln!(
            s,
            r##"<polygon points="{}" fill="{fill}" stroke="#606060" stroke-width="0.6" stroke-dasharray="2,1"/>"##,
            pts.join(" ")
        );
    }
    for &(u, v) in tess.triangulation().edges() {
        let (a, b) = (tess.triangulation().point(u), tess.triangulation().point(v));
        let _ = writeln!(
            s,
            r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="black" stroke-width="0.4"/>"#,
            tx(a[0]),
            ty(a[1]),
            tx(b[0]),
            ty(b[1])
        );
    }
    for p in tess.triangulation().points() {
        let _ = writeln!(s, r#"<circle cx="{:.3}" cy="{:.3}" r="1.5" fill="black"/>"#, tx(p[0]), ty(p[1]));
    }
    s.push_str("</svg>\n");
    s
}
