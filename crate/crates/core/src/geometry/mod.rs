//! Planar Delaunay/Voronoi geometry.
//!
//! Everything here is two-dimensional. Orientation and in-circle tests are
//! exact; cell polygons and box tests use floating point.

mod delaunay;
pub mod polygon;
pub mod predicates;
pub mod svg;
mod voronoi;

use std::sync::OnceLock;

pub use delaunay::Triangulation;
pub use predicates::Point2;
pub use voronoi::{boxes_hit_by_cell, voronoi_cell, voronoi_cells, VoronoiCell};

use crate::ppp::{lex_cmp, PointSet, Window};
use crate::{Error, Result};

fn dist2(a: Point2, b: Point2) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// `true` if `a` is strictly preferred over `b` as the generator nearest
/// to `x`: closer, or equally close and lexicographically smaller.
fn nearer(x: Point2, a: Point2, b: Point2) -> bool {
    match dist2(x, a).total_cmp(&dist2(x, b)) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => lex_cmp(&a, &b).is_lt(),
    }
}

/// Index of the point nearest to `x` by linear scan; ties go to the
/// lexicographically smaller point.
pub fn nearest_generator(points: &PointSet, x: Point2) -> Result<usize> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let mut best = 0;
    for i in 1..points.len() {
        if nearer(x, points.xy(i), points.xy(best)) {
            best = i;
        }
    }
    Ok(best)
}

/// A point set together with its Delaunay triangulation and lazily built
/// Voronoi cells.
#[derive(Debug)]
pub struct Tessellation {
    points: PointSet,
    tri: Triangulation,
    cells: Vec<OnceLock<VoronoiCell>>,
}

impl Tessellation {
    pub fn new(points: PointSet) -> Result<Self> {
        if points.dim() != 2 {
            return Err(Error::InvalidArgument(format!("geometry is planar, got d = {}", points.dim())));
        }
        let tri = Triangulation::new(&points.to_xy())?;
        let cells = (0..points.len()).map(|_| OnceLock::new()).collect();
        Ok(Tessellation { points, tri, cells })
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn window(&self) -> &Window {
        self.points.window()
    }

    pub fn triangulation(&self) -> &Triangulation {
        &self.tri
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, v: usize) -> Point2 {
        self.tri.point(v)
    }

    pub fn cell(&self, v: usize) -> &VoronoiCell {
        self.cells[v].get_or_init(|| voronoi_cell(&self.tri, self.points.window(), v))
    }

    pub fn cells(&self) -> Vec<&VoronoiCell> {
        (0..self.len()).map(|v| self.cell(v)).collect()
    }

    /// Cell of `v`, or a censoring error if it reaches the window boundary.
    pub fn interior_cell(&self, v: usize) -> Result<&VoronoiCell> {
        let c = self.cell(v);
        if c.touches_window_boundary {
            Err(Error::Censored(format!("cell of generator {v} reaches the window boundary")))
        } else {
            Ok(c)
        }
    }

    /// Unit-box cover of a cell, censored at the window boundary.
    pub fn boxes_of_cell(&self, v: usize, side: f64) -> Result<Vec<[i32; 2]>> {
        Ok(boxes_hit_by_cell(self.interior_cell(v)?, side))
    }

    /// Nearest generator to `x` by a greedy walk on the Delaunay graph from
    /// `start`. Delaunay graphs have no false local minima for this walk;
    /// ties are resolved as in [`nearest_generator`].
    pub fn nearest_from(&self, x: Point2, start: usize) -> usize {
        let mut v = start;
        loop {
            let mut next = v;
            for w in self.tri.neighbors(v) {
                if dist2(x, self.point(w)) < dist2(x, self.point(next)) {
                    next = w;
                }
            }
            if next == v {
                break;
            }
            v = next;
        }
        // all generators at the minimal distance lie on an empty circle and
        // are connected through Delaunay edges among themselves
        let d = dist2(x, self.point(v));
        let mut best = v;
        let mut stack = vec![v];
        let mut seen = vec![v];
        while let Some(u) = stack.pop() {
            for w in self.tri.neighbors(u) {
                if !seen.contains(&w) && dist2(x, self.point(w)) == d {
                    seen.push(w);
                    stack.push(w);
                    if lex_cmp(&self.point(w), &self.point(best)).is_lt() {
                        best = w;
                    }
                }
            }
        }
        best
    }

    pub fn nearest(&self, x: Point2) -> usize {
        self.nearest_from(x, 0)
    }

    /// Generators whose closed cells meet the union of the half-open boxes
    /// `[lo, hi)`. The boxes must form a connected set; the cells meeting it
    /// are then connected in the Delaunay graph and a breadth-first search
    /// from the generator nearest to the first box finds all of them.
    pub fn cells_meeting_boxes(&self, boxes: &[(Point2, Point2)]) -> Vec<usize> {
        let Some(&(lo, hi)) = boxes.first() else {
            return Vec::new();
        };
        let meets = |v: usize| {
            let poly = &self.cell(v).polygon;
            boxes.iter().any(|(lo, hi)| polygon::meets_half_open_box(poly, *lo, *hi))
        };
        let start = self.nearest([0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])]);
        let mut seen = std::collections::HashSet::from([start]);
        let mut queue = std::collections::VecDeque::from([start]);
        let mut out = Vec::new();
        while let Some(v) = queue.pop_front() {
            out.push(v);
            for w in self.tri.neighbors(v) {
                if !seen.contains(&w) && meets(w) {
                    seen.insert(w);
                    queue.push_back(w);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppp::{sample, IntensityModel};

    #[test]
    fn nearest_tie_goes_to_lexicographically_smaller() {
        let w = Window::rect(-5.0, -5.0, 5.0, 5.0).unwrap();
        let ps = PointSet::from_xy(w, &[[2.0, 0.0], [-2.0, 0.0], [0.0, 3.0]]).unwrap();
        assert_eq!(nearest_generator(&ps, [0.0, 0.0]).unwrap(), 1);
        assert_eq!(nearest_generator(&ps, [2.0, 0.0]).unwrap(), 0);
        let t = Tessellation::new(ps).unwrap();
        assert_eq!(t.nearest([0.0, 0.0]), 1);
        assert_eq!(t.nearest_from([0.0, 0.0], 0), 1);
    }

    #[test]
    fn empty_set_has_no_nearest() {
        let w = Window::rect(0.0, 0.0, 1.0, 1.0).unwrap();
        assert!(matches!(nearest_generator(&PointSet::empty(w), [0.5, 0.5]), Err(Error::EmptyPointSet)));
    }

    #[test]
    fn walk_matches_scan() {
        let w = Window::rect(0.0, 0.0, 10.0, 10.0).unwrap();
        let ps = sample(&w, &IntensityModel::homogeneous(2.0), 11, 0).unwrap();
        let t = Tessellation::new(ps.clone()).unwrap();
        for i in 0..200 {
            let x = [0.05 * i as f64, 10.0 - 0.049 * i as f64];
            assert_eq!(t.nearest(x), nearest_generator(&ps, x).unwrap());
        }
    }

    #[test]
    fn three_dimensional_points_are_rejected() {
        let w = Window::new(vec![0.0; 3], vec![1.0; 3]).unwrap();
        assert!(Tessellation::new(PointSet::empty(w)).is_err());
    }
}
