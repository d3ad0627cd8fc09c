//! Voronoi cells clipped to the simulation window.

use super::delaunay::Triangulation;
use super::polygon;
use super::predicates::Point2;
use crate::ppp::Window;

/// A Voronoi tile intersected with the window.
#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiCell {
    pub generator: usize,
    /// Convex, counterclockwise.
    pub polygon: Vec<Point2>,
    /// Set when the clipped polygon reaches the window boundary, i.e. the
    /// true tile may extend past what was simulated.
    pub touches_window_boundary: bool,
}

impl VoronoiCell {
    pub fn area(&self) -> f64 {
        polygon::area(&self.polygon)
    }

    pub fn bbox(&self) -> (Point2, Point2) {
        polygon::bbox(&self.polygon).expect("a cell contains its generator")
    }

    pub fn contains(&self, x: Point2, eps: f64) -> bool {
        polygon::contains_closed(&self.polygon, x, eps)
    }
}

/// Builds the cell of `v` by clipping the window with the bisector
/// half-planes of its Delaunay neighbours.
pub fn voronoi_cell(tri: &Triangulation, window: &Window, v: usize) -> VoronoiCell {
    let (lo, hi) = (window.lo(), window.hi());
    let g = tri.point(v);
    // work relative to the generator to keep the bisector offsets small
    let mut poly: Vec<Point2> = vec![
        [lo[0] - g[0], lo[1] - g[1]],
        [hi[0] - g[0], lo[1] - g[1]],
        [hi[0] - g[0], hi[1] - g[1]],
        [lo[0] - g[0], hi[1] - g[1]],
    ];
    for w in tri.neighbors(v) {
        let p = tri.point(w);
        let a = [p[0] - g[0], p[1] - g[1]];
        let b = 0.5 * (a[0] * a[0] + a[1] * a[1]);
        poly = polygon::clip_halfplane(&poly, a, b);
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let eps = 1e-12 * span;
    let touches = poly.iter().any(|p| {
        let x = p[0] + g[0];
        let y = p[1] + g[1];
        (x - lo[0]).abs() <= eps || (hi[0] - x).abs() <= eps || (y - lo[1]).abs() <= eps || (hi[1] - y).abs() <= eps
    });
    let polygon = poly.into_iter().map(|p| [p[0] + g[0], p[1] + g[1]]).collect();
    VoronoiCell { generator: v, polygon, touches_window_boundary: touches }
}

/// All cells, in generator order.
pub fn voronoi_cells(tri: &Triangulation, window: &Window) -> Vec<VoronoiCell> {
    (0..tri.num_vertices()).map(|v| voronoi_cell(tri, window, v)).collect()
}

/// Lattice boxes `B_z = side·z + [-side/2, side/2)^2` met by the closed
/// cell polygon, sorted.
pub fn boxes_hit_by_cell(cell: &VoronoiCell, side: f64) -> Vec<[i32; 2]> {
    let (lo, hi) = cell.bbox();
    let idx = |x: f64| ((x + 0.5 * side) / side).floor() as i32;
    let mut out = Vec::new();
    for zx in idx(lo[0])..=idx(hi[0]) {
        for zy in idx(lo[1])..=idx(hi[1]) {
            let blo = [side * (f64::from(zx) - 0.5), side * (f64::from(zy) - 0.5)];
            let bhi = [side * (f64::from(zx) + 0.5), side * (f64::from(zy) + 0.5)];
            if polygon::meets_half_open_box(&cell.polygon, blo, bhi) {
                out.push([zx, zy]);
            }
        }
    }
    out
}
