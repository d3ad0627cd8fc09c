//! Incremental (Bowyer–Watson) Delaunay triangulation with ghost triangles.
//!
//! The hull is closed off by "ghost" triangles that share a vertex at
//! infinity, so inserting outside the current hull is the same cavity
//! update as inserting inside. Cocircular configurations are resolved by
//! [`incircle_perturbed`], which makes the triangulation unique and
//! independent of the insertion order.

use std::cmp::Ordering;

use super::predicates::{incircle_perturbed, orient2d, Point2};
use crate::{Error, Result};

const GHOST: u32 = u32::MAX;
const NIL: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Tri {
    /// Counterclockwise. A ghost triangle keeps the ghost vertex at index 2
    /// and its finite edge `v[0] -> v[1]` has the exterior on its left.
    v: [u32; 3],
    /// `n[i]` is the triangle across the edge opposite `v[i]`.
    n: [u32; 3],
}

impl Tri {
    fn is_ghost(&self) -> bool {
        self.v[2] == GHOST
    }
}

struct Builder<'a> {
    pts: &'a [Point2],
    tris: Vec<Tri>,
    alive: Vec<bool>,
    mark: Vec<u32>,
    epoch: u32,
    free: Vec<u32>,
    last: u32,
}

impl<'a> Builder<'a> {
    fn p(&self, v: u32) -> Point2 {
        self.pts[v as usize]
    }

    fn alloc(&mut self, tri: Tri) -> u32 {
        if let Some(id) = self.free.pop() {
            self.tris[id as usize] = tri;
            self.alive[id as usize] = true;
            id
        } else {
            self.tris.push(tri);
            self.alive.push(true);
            self.mark.push(0);
            (self.tris.len() - 1) as u32
        }
    }

    fn in_circle(&self, t: u32, p: Point2) -> bool {
        let v = self.tris[t as usize].v;
        incircle_perturbed(self.p(v[0]), self.p(v[1]), self.p(v[2]), p) == Ordering::Greater
    }

    fn conflicts(&self, t: u32, p: Point2) -> bool {
        let tri = self.tris[t as usize];
        if tri.is_ghost() {
            match orient2d(self.p(tri.v[0]), self.p(tri.v[1]), p) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => self.in_circle(tri.n[2], p),
            }
        } else {
            self.in_circle(t, p)
        }
    }

    fn init(&mut self, a: u32, b: u32, c: u32) {
        let (b, c) = if orient2d(self.p(a), self.p(b), self.p(c)) == Ordering::Greater { (b, c) } else { (c, b) };
        let t0 = self.alloc(Tri { v: [a, b, c], n: [NIL; 3] });
        let ga = self.alloc(Tri { v: [c, b, GHOST], n: [NIL; 3] });
        let gb = self.alloc(Tri { v: [a, c, GHOST], n: [NIL; 3] });
        let gc = self.alloc(Tri { v: [b, a, GHOST], n: [NIL; 3] });
        let ids = [t0, ga, gb, gc];
        for &t in &ids {
            for i in 0..3 {
                let v = self.tris[t as usize].v;
                let (x, y) = (v[(i + 1) % 3], v[(i + 2) % 3]);
                // neighbor carries the reversed directed edge y -> x
                for &u in &ids {
                    let w = self.tris[u as usize].v;
                    if (0..3).any(|j| w[(j + 1) % 3] == y && w[(j + 2) % 3] == x) {
                        self.tris[t as usize].n[i] = u;
                    }
                }
            }
        }
        self.last = t0;
    }

    fn locate(&self, p: Point2) -> u32 {
        let mut t = self.last;
        if self.tris[t as usize].is_ghost() {
            t = self.tris[t as usize].n[2];
        }
        let limit = 4 * self.tris.len() + 64;
        let mut steps = 0usize;
        'walk: loop {
            steps += 1;
            if steps > limit {
                break;
            }
            let tri = self.tris[t as usize];
            if tri.is_ghost() {
                return t;
            }
            let start = steps % 3;
            for k in 0..3 {
                let i = (start + k) % 3;
                let a = self.p(tri.v[(i + 1) % 3]);
                let b = self.p(tri.v[(i + 2) % 3]);
                if orient2d(a, b, p) == Ordering::Less {
                    t = tri.n[i];
                    continue 'walk;
                }
            }
            return t;
        }
        // The visibility walk terminates on Delaunay triangulations; this is
        // a fallback against predicate bugs rather than an expected path.
        (0..self.tris.len() as u32)
            .find(|&t| self.alive[t as usize] && self.conflicts(t, p))
            .expect("some triangle conflicts with a new point")
    }

    fn insert(&mut self, pv: u32) {
        let p = self.p(pv);
        let t0 = self.locate(p);
        debug_assert!(self.conflicts(t0, p));
        self.epoch += 1;
        let epoch = self.epoch;
        let mut cavity = vec![t0];
        self.mark[t0 as usize] = epoch;
        // (x, y, outside, old) with x -> y the cavity-side directed edge
        let mut boundary: Vec<(u32, u32, u32, u32)> = Vec::new();
        let mut i = 0;
        while i < cavity.len() {
            let t = cavity[i];
            i += 1;
            let tri = self.tris[t as usize];
            for j in 0..3 {
                let nb = tri.n[j];
                if self.mark[nb as usize] == epoch {
                    continue;
                }
                if self.conflicts(nb, p) {
                    self.mark[nb as usize] = epoch;
                    cavity.push(nb);
                } else {
                    boundary.push((tri.v[(j + 1) % 3], tri.v[(j + 2) % 3], nb, t));
                }
            }
        }

        let mut created: Vec<u32> = Vec::with_capacity(boundary.len());
        for &(x, y, out, _) in &boundary {
            let id = self.alloc(Tri { v: [x, y, pv], n: [NIL, NIL, out] });
            let o = &mut self.tris[out as usize];
            for k in 0..3 {
                if o.v[(k + 1) % 3] == y && o.v[(k + 2) % 3] == x {
                    o.n[k] = id;
                }
            }
            created.push(id);
        }
        for (k, &id) in created.iter().enumerate() {
            let (x, y, _, _) = boundary[k];
            let after = boundary.iter().position(|b| b.0 == y).expect("closed cavity boundary");
            let before = boundary.iter().position(|b| b.1 == x).expect("closed cavity boundary");
            let tri = &mut self.tris[id as usize];
            tri.n[0] = created[after];
            tri.n[1] = created[before];
        }
        for &id in &created {
            let tri = &mut self.tris[id as usize];
            if tri.v[0] == GHOST {
                tri.v = [tri.v[1], tri.v[2], tri.v[0]];
                tri.n = [tri.n[1], tri.n[2], tri.n[0]];
            } else if tri.v[1] == GHOST {
                tri.v = [tri.v[2], tri.v[0], tri.v[1]];
                tri.n = [tri.n[2], tri.n[0], tri.n[1]];
            }
        }
        for &t in &cavity {
            self.alive[t as usize] = false;
            self.free.push(t);
        }
        self.last = created[0];
    }
}

/// Position of `(x, y)` along a Hilbert curve on a `2^16` grid.
fn hilbert_index(mut x: u32, mut y: u32) -> u64 {
    let n: u32 = 1 << 16;
    let mut d: u64 = 0;
    let mut s = n / 2;
    while s > 0 {
        let rx = u32::from(x & s > 0);
        let ry = u32::from(y & s > 0);
        d += u64::from(s) * u64::from(s) * u64::from((3 * rx) ^ ry);
        if ry == 0 {
            if rx == 1 {
                x = n - 1 - x;
                y = n - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        s /= 2;
    }
    d
}

fn spatial_order(pts: &[Point2]) -> Vec<u32> {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in pts {
        x0 = x0.min(p[0]);
        y0 = y0.min(p[1]);
        x1 = x1.max(p[0]);
        y1 = y1.max(p[1]);
    }
    let span = (x1 - x0).max(y1 - y0).max(f64::MIN_POSITIVE);
    let scale = 65535.0 / span;
    let mut keyed: Vec<(u64, u32)> = pts
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let gx = ((p[0] - x0) * scale) as u32;
            let gy = ((p[1] - y0) * scale) as u32;
            (hilbert_index(gx.min(65535), gy.min(65535)), i as u32)
        })
        .collect();
    keyed.sort_unstable();
    keyed.into_iter().map(|(_, i)| i).collect()
}

/// Delaunay triangulation of a planar point set.
#[derive(Debug, Clone)]
pub struct Triangulation {
    points: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    neighbors: Vec<[Option<usize>; 3]>,
    edges: Vec<(usize, usize)>,
    edge_triangles: Vec<[Option<usize>; 2]>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl Triangulation {
    /// Triangulates distinct points. Needs at least three points, not all
    /// collinear.
    pub fn new(points: &[Point2]) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::Degenerate(format!("need at least 3 points, got {}", points.len())));
        }
        if points.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(Error::InvalidArgument("non-finite coordinate".into()));
        }
        let order = spatial_order(points);
        {
            let mut sorted: Vec<Point2> = points.to_vec();
            sorted.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidArgument("duplicate points".into()));
            }
        }
        let a = order[0];
        let b = order[1];
        let c = order[2..]
            .iter()
            .copied()
            .find(|&c| orient2d(points[a as usize], points[b as usize], points[c as usize]) != Ordering::Equal)
            .ok_or_else(|| Error::Degenerate("all points are collinear".into()))?;

        let mut builder = Builder {
            pts: points,
            tris: Vec::with_capacity(2 * points.len() + 8),
            alive: Vec::new(),
            mark: Vec::new(),
            epoch: 0,
            free: Vec::new(),
            last: 0,
        };
        builder.init(a, b, c);
        for &v in &order[2..] {
            if v != c {
                builder.insert(v);
            }
        }
        Ok(Self::finish(points, &builder))
    }

    fn finish(points: &[Point2], b: &Builder<'_>) -> Self {
        let mut remap = vec![usize::MAX; b.tris.len()];
        let mut triangles = Vec::new();
        for (id, tri) in b.tris.iter().enumerate() {
            if b.alive[id] && !tri.is_ghost() {
                remap[id] = triangles.len();
                triangles.push([tri.v[0] as usize, tri.v[1] as usize, tri.v[2] as usize]);
            }
        }
        let mut neighbors = Vec::with_capacity(triangles.len());
        for (id, tri) in b.tris.iter().enumerate() {
            if remap[id] == usize::MAX {
                continue;
            }
            let mut n = [None; 3];
            for i in 0..3 {
                let r = remap[tri.n[i] as usize];
                n[i] = (r != usize::MAX).then_some(r);
            }
            neighbors.push(n);
        }

        let mut raw: Vec<(usize, usize, usize)> = Vec::with_capacity(3 * triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                let (u, v) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
                raw.push((u.min(v), u.max(v), t));
            }
        }
        raw.sort_unstable();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        let mut edge_triangles: Vec<[Option<usize>; 2]> = Vec::new();
        for (u, v, t) in raw {
            if edges.last() == Some(&(u, v)) {
                edge_triangles.last_mut().expect("parallel vectors")[1] = Some(t);
            } else {
                edges.push((u, v));
                edge_triangles.push([Some(t), None]);
            }
        }
        let mut adjacency = vec![Vec::new(); points.len()];
        for (e, &(u, v)) in edges.iter().enumerate() {
            adjacency[u].push((v, e));
            adjacency[v].push((u, e));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Triangulation { points: points.to_vec(), triangles, neighbors, edges, edge_triangles, adjacency }
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn point(&self, v: usize) -> Point2 {
        self.points[v]
    }

    pub fn num_vertices(&self) -> usize {
        self.points.len()
    }

    /// Counterclockwise triangles.
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Triangle across the edge opposite corner `i` of triangle `t`.
    pub fn triangle_neighbor(&self, t: usize, i: usize) -> Option<usize> {
        self.neighbors[t][i]
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_id(&self, u: usize, v: usize) -> Option<usize> {
        let list = &self.adjacency[u];
        list.binary_search_by(|&(w, _)| w.cmp(&v)).ok().map(|k| list[k].1)
    }

    /// The one or two triangles on edge `{u, v}`.
    pub fn edge_triangles(&self, u: usize, v: usize) -> Option<[Option<usize>; 2]> {
        self.edge_id(u, v).map(|e| self.edge_triangles[e])
    }

    pub fn is_hull_edge(&self, e: usize) -> bool {
        self.edge_triangles[e][1].is_none()
    }

    /// Delaunay neighbours of `v` with the connecting edge ids, sorted by
    /// neighbour index.
    pub fn adjacent(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[v].iter().map(|&(w, _)| w)
    }

    pub fn are_adjacent(&self, u: usize, v: usize) -> bool {
        self.edge_id(u, v).is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge_set(t: &Triangulation) -> Vec<(usize, usize)> {
        t.edges().to_vec()
    }

    #[test]
    fn three_points_one_triangle() {
        let t = Triangulation::new(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(t.triangles().len(), 1);
        assert_eq!(t.edges().len(), 3);
        let [a, b, c] = t.triangles()[0];
        assert_eq!(orient2d(t.point(a), t.point(b), t.point(c)), Ordering::Greater);
    }

    #[test]
    fn collinear_input_is_rejected() {
        let pts: Vec<Point2> = (0..5).map(|i| [i as f64, 2.0 * i as f64]).collect();
        assert!(matches!(Triangulation::new(&pts), Err(Error::Degenerate(_))));
        assert!(matches!(Triangulation::new(&pts[..2]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn unit_square_diagonal_follows_perturbation() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let t = Triangulation::new(&pts).unwrap();
        assert_eq!(t.triangles().len(), 2);
        // the largest point (1,1) is pushed outside: diagonal (1,0)-(0,1)
        assert!(t.are_adjacent(1, 3));
        assert!(!t.are_adjacent(0, 2));
    }

    #[test]
    fn insertion_order_does_not_matter_on_cocircular_grid() {
        let mut pts = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                pts.push([i as f64, j as f64]);
            }
        }
        let t1 = Triangulation::new(&pts).unwrap();
        let mut rev = pts.clone();
        rev.reverse();
        let t2 = Triangulation::new(&rev).unwrap();
        let n = pts.len();
        let mapped: Vec<(usize, usize)> = {
            let mut e: Vec<(usize, usize)> = edge_set(&t2)
                .into_iter()
                .map(|(u, v)| {
                    let (a, b) = (n - 1 - u, n - 1 - v);
                    (a.min(b), a.max(b))
                })
                .collect();
            e.sort_unstable();
            e
        };
        assert_eq!(edge_set(&t1), mapped);
        assert_eq!(t1.triangles().len(), 32);
    }

    #[test]
    fn collinear_points_on_hull_edge() {
        let pts = [[0.0, 0.0], [2.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.5, 0.0]];
        let t = Triangulation::new(&pts).unwrap();
        // Euler: 5 vertices, hull has 5 vertices (4 collinear on the bottom)
        assert_eq!(t.triangles().len(), 3);
    }

    #[test]
    fn neighbor_links_are_symmetric() {
        let pts: Vec<Point2> = (0..60)
            .map(|i| {
                let a = i as f64 * 2.399_963;
                let r = (i as f64).sqrt();
                [r * a.cos(), r * a.sin()]
            })
            .collect();
        let t = Triangulation::new(&pts).unwrap();
        for ti in 0..t.triangles().len() {
            for i in 0..3 {
                if let Some(nb) = t.triangle_neighbor(ti, i) {
                    assert!((0..3).any(|j| t.triangle_neighbor(nb, j) == Some(ti)));
                }
            }
        }
        // Euler for a triangulated point set: T = 2n - 2 - h
        let hull = (0..t.edges().len()).filter(|&e| t.is_hull_edge(e)).count();
        assert_eq!(t.triangles().len(), 2 * pts.len() - 2 - hull);
    }
}
