//! Voronoi polyominoes, their lattice covers, extremal covers at fixed size,
//! inverse covers of lattice animals, and paths along segments.
//!
//! A polyomino is stored as the sorted generator indices of its tiles. The
//! lattice cover `A_L(P)` is the set of `z` with `Lz + [-L/2, L/2)^2`
//! meeting some tile; `A(P) = A_1(P)`.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::connected::{enumerate_connected, Graph, Visitor};
use crate::geometry::{Point2, Tessellation};
use crate::lattice::{Extremum, LatticeAnimal, LatticeGraph, Site};
use crate::{Error, Result};

pub const DEFAULT_EXACT_GUARD: usize = 8;
pub const BEAM_WIDTH: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VoronoiPolyomino {
    generators: Vec<usize>,
}

impl VoronoiPolyomino {
    /// Checks that the generators exist, are distinct, and induce a
    /// connected Delaunay subgraph.
    pub fn new(tess: &Tessellation, generators: &[usize]) -> Result<Self> {
        let mut g = generators.to_vec();
        g.sort_unstable();
        g.dedup();
        if g.is_empty() {
            return Err(Error::InvalidArgument("empty polyomino".into()));
        }
        if g.len() != generators.len() {
            return Err(Error::InvalidArgument("repeated generator".into()));
        }
        if let Some(&v) = g.iter().find(|&&v| v >= tess.len()) {
            return Err(Error::InvalidArgument(format!("generator {v} out of range")));
        }
        if !is_connected(tess, &g) {
            return Err(Error::InvalidArgument("generators are not Delaunay-connected".into()));
        }
        Ok(VoronoiPolyomino { generators: g })
    }

    pub(crate) fn from_sorted_unchecked(generators: Vec<usize>) -> Self {
        debug_assert!(generators.windows(2).all(|w| w[0] < w[1]));
        VoronoiPolyomino { generators }
    }

    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.generators.binary_search(&v).is_ok()
    }

    /// Space-separated generator indices.
    pub fn to_line(&self) -> String {
        join(&self.generators)
    }

    pub fn parse_line(tess: &Tessellation, line: &str) -> Result<Self> {
        Self::new(tess, &parse_indices(line)?)
    }
}

/// A self-avoiding path in the Delaunay graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SAPath {
    vertices: Vec<usize>,
}

impl SAPath {
    pub fn new(tess: &Tessellation, vertices: &[usize]) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidArgument("empty path".into()));
        }
        let mut seen = HashSet::new();
        for &v in vertices {
            if v >= tess.len() {
                return Err(Error::InvalidArgument(format!("vertex {v} out of range")));
            }
            if !seen.insert(v) {
                return Err(Error::InvalidArgument(format!("path revisits {v}")));
            }
        }
        let tri = tess.triangulation();
        if let Some(w) = vertices.windows(2).find(|w| !tri.are_adjacent(w[0], w[1])) {
            return Err(Error::InvalidArgument(format!("{} and {} are not adjacent", w[0], w[1])));
        }
        Ok(SAPath { vertices: vertices.to_vec() })
    }

    pub(crate) fn from_unchecked(vertices: Vec<usize>) -> Self {
        SAPath { vertices }
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn start(&self) -> usize {
        self.vertices[0]
    }

    pub fn end(&self) -> usize {
        self.vertices[self.vertices.len() - 1]
    }

    /// Edge ids of consecutive pairs.
    pub fn edges(&self, tess: &Tessellation) -> Vec<usize> {
        let tri = tess.triangulation();
        self.vertices
            .windows(2)
            .map(|w| tri.edge_id(w[0], w[1]).expect("consecutive vertices are adjacent"))
            .collect()
    }

    /// The polyomino made of the path's tiles.
    pub fn polyomino(&self) -> VoronoiPolyomino {
        let mut g = self.vertices.clone();
        g.sort_unstable();
        VoronoiPolyomino::from_sorted_unchecked(g)
    }

    pub fn to_line(&self) -> String {
        join(&self.vertices)
    }

    pub fn parse_line(tess: &Tessellation, line: &str) -> Result<Self> {
        Self::new(tess, &parse_indices(line)?)
    }
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn parse_indices(line: &str) -> Result<Vec<usize>> {
    line.split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
        .collect()
}

fn is_connected(tess: &Tessellation, sorted: &[usize]) -> bool {
    let tri = tess.triangulation();
    let mut seen = HashSet::from([sorted[0]]);
    let mut stack = vec![sorted[0]];
    while let Some(v) = stack.pop() {
        for w in tri.neighbors(v) {
            if sorted.binary_search(&w).is_ok() && seen.insert(w) {
                stack.push(w);
            }
        }
    }
    seen.len() == sorted.len()
}

/// `A_L` of a set of tiles, sorted. Fails if a tile is cut by the window.
pub fn boxes_of_side(tess: &Tessellation, generators: &[usize], side: f64) -> Result<Vec<[i32; 2]>> {
    let mut all = Vec::new();
    for &v in generators {
        all.extend(tess.boxes_of_cell(v, side)?);
    }
    all.sort_unstable();
    all.dedup();
    Ok(all)
}

/// `A(P)`.
pub fn boxes_of(tess: &Tessellation, poly: &VoronoiPolyomino) -> Result<Vec<[i32; 2]>> {
    boxes_of_side(tess, poly.generators(), 1.0)
}

/// Number of points in each unit box `B_z` for the listed `z`.
pub fn box_counts(tess: &Tessellation, boxes: &[[i32; 2]]) -> Vec<usize> {
    let mut counts: HashMap<[i32; 2], usize> = boxes.iter().map(|&z| (z, 0)).collect();
    for p in tess.points().iter() {
        let z = [(p[0] + 0.5).floor() as i32, (p[1] + 0.5).floor() as i32];
        if let Some(c) = counts.get_mut(&z) {
            *c += 1;
        }
    }
    boxes.iter().map(|z| counts[z]).collect()
}

/// `r <= sum over z in A(P) of N_z`.
pub fn sandwich_holds(tess: &Tessellation, poly: &VoronoiPolyomino) -> Result<bool> {
    let a = boxes_of(tess, poly)?;
    Ok(poly.len() <= box_counts(tess, &a).iter().sum())
}

/// `(#A_L(P), #A_1(P))`.
pub fn scaling_pair(tess: &Tessellation, poly: &VoronoiPolyomino, l: f64) -> Result<(usize, usize)> {
    Ok((boxes_of_side(tess, poly.generators(), l)?.len(), boxes_of(tess, poly)?.len()))
}

/// Options shared by the extremal searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Largest size searched exactly; above it a beam search is used.
    pub exact_guard: usize,
    /// Search over polyominoes whose union meets `B_0` instead of those
    /// containing the origin.
    pub touching_b0: bool,
    pub beam_width: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { exact_guard: DEFAULT_EXACT_GUARD, touching_b0: false, beam_width: BEAM_WIDTH }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Goal {
    Min,
    Max,
}

impl Goal {
    fn better(self, a: usize, b: usize) -> bool {
        match self {
            Goal::Min => a < b,
            Goal::Max => a > b,
        }
    }
}

/// Generators the searches start from: `v_0`, or every tile meeting `B_0`.
pub fn roots(tess: &Tessellation, touching_b0: bool) -> Vec<usize> {
    if touching_b0 {
        tess.cells_meeting_boxes(&[([-0.5, -0.5], [0.5, 0.5])])
    } else {
        vec![tess.nearest([0.0, 0.0])]
    }
}

/// Unit-box sets of every tile within graph distance `depth` of the roots.
/// Fails if any of those tiles is cut by the window.
fn reachable_boxes(tess: &Tessellation, roots: &[usize], depth: usize) -> Result<HashMap<usize, Vec<[i32; 2]>>> {
    let tri = tess.triangulation();
    let mut out = HashMap::new();
    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    for &r in roots {
        if !out.contains_key(&r) {
            out.insert(r, tess.boxes_of_cell(r, 1.0)?);
            queue.push_back((r, 0));
        }
    }
    while let Some((v, k)) = queue.pop_front() {
        if k == depth {
            continue;
        }
        for w in tri.neighbors(v) {
            if let std::collections::hash_map::Entry::Vacant(e) = out.entry(w) {
                e.insert(tess.boxes_of_cell(w, 1.0)?);
                queue.push_back((w, k + 1));
            }
        }
    }
    Ok(out)
}

/// Multiset of boxes with a running count of distinct entries.
#[derive(Default)]
struct BoxTally {
    counts: HashMap<[i32; 2], u32>,
}

impl BoxTally {
    fn add(&mut self, boxes: &[[i32; 2]]) {
        for z in boxes {
            *self.counts.entry(*z).or_insert(0) += 1;
        }
    }
    fn remove(&mut self, boxes: &[[i32; 2]]) {
        for z in boxes {
            let c = self.counts.get_mut(z).expect("box was added");
            *c -= 1;
            if *c == 0 {
                self.counts.remove(z);
            }
        }
    }
    fn distinct(&self) -> usize {
        self.counts.len()
    }
}

struct DelaunayGraph<'t> {
    tess: &'t Tessellation,
}

impl Graph for DelaunayGraph<'_> {
    type Node = usize;
    fn neighbors(&self, v: usize, out: &mut Vec<usize>) {
        out.extend(self.tess.triangulation().neighbors(v));
    }
}

struct Best {
    value: Option<usize>,
    set: Vec<usize>,
}

impl Best {
    fn offer(&mut self, goal: Goal, value: usize, set: &[usize]) {
        let mut sorted = set.to_vec();
        sorted.sort_unstable();
        let take = match self.value {
            None => true,
            Some(b) => goal.better(value, b) || (value == b && sorted < self.set),
        };
        if take {
            self.value = Some(value);
            self.set = sorted;
        }
    }

    /// Whether a partial set with `distinct` boxes and `missing` tiles still
    /// to add can still beat or tie the incumbent.
    fn viable(&self, goal: Goal, distinct: usize, missing: usize, k_max: usize) -> bool {
        match (self.value, goal) {
            (None, _) => true,
            // adding tiles never removes boxes
            (Some(b), Goal::Min) => distinct <= b,
            (Some(b), Goal::Max) => distinct + missing * k_max >= b,
        }
    }
}

struct PolyominoSearch<'a> {
    goal: Goal,
    r: usize,
    boxes: &'a HashMap<usize, Vec<[i32; 2]>>,
    k_max: usize,
    tally: BoxTally,
    best: Best,
}

impl Visitor<usize> for PolyominoSearch<'_> {
    fn enter(&mut self, v: usize, set: &[usize]) -> bool {
        self.tally.add(&self.boxes[&v]);
        let distinct = self.tally.distinct();
        if set.len() == self.r {
            self.best.offer(self.goal, distinct, set);
            return false;
        }
        self.best.viable(self.goal, distinct, self.r - set.len(), self.k_max)
    }
    fn leave(&mut self, v: usize) {
        self.tally.remove(&self.boxes[&v]);
    }
}

fn extremal_polyomino(tess: &Tessellation, r: usize, opts: &SearchOptions, goal: Goal) -> Result<Extremum<VoronoiPolyomino>> {
    if r == 0 {
        return Err(Error::InvalidArgument("polyomino size must be at least 1".into()));
    }
    let roots = roots(tess, opts.touching_b0);
    let boxes = reachable_boxes(tess, &roots, r - 1)?;
    if r > opts.exact_guard {
        return Ok(beam_polyomino(tess, r, &roots, &boxes, goal, opts.beam_width));
    }
    let k_max = boxes.values().map(Vec::len).max().unwrap_or(0);
    let mut search = PolyominoSearch {
        goal,
        r,
        boxes: &boxes,
        k_max,
        tally: BoxTally::default(),
        best: Best { value: None, set: Vec::new() },
    };
    let graph = DelaunayGraph { tess };
    for (i, &root) in roots.iter().enumerate() {
        enumerate_connected(&graph, root, r, &roots[..i], &mut search);
    }
    match search.best.value {
        Some(value) => Ok(Extremum {
            value: value as u64,
            witness: VoronoiPolyomino::from_sorted_unchecked(search.best.set),
            heuristic: false,
        }),
        None => Err(Error::Degenerate(format!("no connected set of {r} tiles around the origin"))),
    }
}

fn beam_polyomino(
    tess: &Tessellation,
    r: usize,
    roots: &[usize],
    boxes: &HashMap<usize, Vec<[i32; 2]>>,
    goal: Goal,
    width: usize,
) -> Extremum<VoronoiPolyomino> {
    let tri = tess.triangulation();
    let cover = |set: &[usize]| {
        let mut all: Vec<[i32; 2]> = set.iter().flat_map(|v| boxes[v].iter().copied()).collect();
        all.sort_unstable();
        all.dedup();
        all.len()
    };
    let mut beam: Vec<(usize, Vec<usize>)> = roots.iter().map(|&v| (boxes[&v].len(), vec![v])).collect();
    for _ in 1..r {
        let mut next: HashSet<Vec<usize>> = HashSet::new();
        for (_, set) in &beam {
            for &v in set {
                for w in tri.neighbors(v) {
                    if let Err(pos) = set.binary_search(&w) {
                        let mut grown = set.clone();
                        grown.insert(pos, w);
                        next.insert(grown);
                    }
                }
            }
        }
        let mut ranked: Vec<(usize, Vec<usize>)> = next.into_iter().map(|s| (cover(&s), s)).collect();
        ranked.sort_by(|a, b| match goal {
            Goal::Min => a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)),
            Goal::Max => b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)),
        });
        ranked.truncate(width);
        beam = ranked;
    }
    let (value, set) = beam.swap_remove(0);
    Extremum { value: value as u64, witness: VoronoiPolyomino::from_sorted_unchecked(set), heuristic: true }
}

/// Smallest `#A(P)` over polyominoes of exactly `r` tiles containing the
/// origin (or meeting `B_0`). Above the exact guard the value is an upper
/// bound on the minimum and is flagged heuristic.
pub fn min_boxes_at_size(tess: &Tessellation, r: usize, opts: &SearchOptions) -> Result<Extremum<VoronoiPolyomino>> {
    extremal_polyomino(tess, r, opts, Goal::Min)
}

/// Largest `#A(P)` over polyominoes of exactly `r` tiles containing the
/// origin (or meeting `B_0`).
pub fn max_boxes_at_size(tess: &Tessellation, r: usize, opts: &SearchOptions) -> Result<Extremum<VoronoiPolyomino>> {
    extremal_polyomino(tess, r, opts, Goal::Max)
}

struct PathSearch<'a> {
    tess: &'a Tessellation,
    goal: Goal,
    r: usize,
    boxes: &'a HashMap<usize, Vec<[i32; 2]>>,
    k_max: usize,
    tally: BoxTally,
    path: Vec<usize>,
    on_path: HashSet<usize>,
    best: Option<(usize, Vec<usize>)>,
}

impl PathSearch<'_> {
    fn push(&mut self, v: usize) {
        self.tally.add(&self.boxes[&v]);
        self.path.push(v);
        self.on_path.insert(v);
        let distinct = self.tally.distinct();
        if self.path.len() == self.r {
            let take = match &self.best {
                None => true,
                Some((b, p)) => self.goal.better(distinct, *b) || (distinct == *b && self.path < *p),
            };
            if take {
                self.best = Some((distinct, self.path.clone()));
            }
        } else {
            let viable = match (&self.best, self.goal) {
                (None, _) => true,
                (Some((b, _)), Goal::Min) => distinct <= *b,
                (Some((b, _)), Goal::Max) => distinct + (self.r - self.path.len()) * self.k_max >= *b,
            };
            if viable {
                let next: Vec<usize> = self.tess.triangulation().neighbors(v).collect();
                for w in next {
                    if !self.on_path.contains(&w) {
                        self.push(w);
                    }
                }
            }
        }
        self.on_path.remove(&v);
        self.path.pop();
        self.tally.remove(&self.boxes[&v]);
    }
}

fn extremal_path(tess: &Tessellation, r: usize, goal: Goal) -> Result<Extremum<SAPath>> {
    if r == 0 {
        return Err(Error::InvalidArgument("path size must be at least 1".into()));
    }
    let v0 = tess.nearest([0.0, 0.0]);
    let boxes = reachable_boxes(tess, &[v0], r - 1)?;
    let k_max = boxes.values().map(Vec::len).max().unwrap_or(0);
    let mut search = PathSearch {
        tess,
        goal,
        r,
        boxes: &boxes,
        k_max,
        tally: BoxTally::default(),
        path: Vec::new(),
        on_path: HashSet::new(),
        best: None,
    };
    search.push(v0);
    match search.best {
        Some((value, path)) => Ok(Extremum { value: value as u64, witness: SAPath::from_unchecked(path), heuristic: false }),
        None => Err(Error::Degenerate(format!("no self-avoiding path of {r} vertices from v_0"))),
    }
}

/// Smallest `#A(gamma)` over self-avoiding paths of exactly `r` vertices
/// from `v_0`. Exhaustive; callers keep `r` small.
pub fn min_path_boxes(tess: &Tessellation, r: usize) -> Result<Extremum<SAPath>> {
    extremal_path(tess, r, Goal::Min)
}

/// Largest `#A(gamma)` over self-avoiding paths of exactly `r` vertices
/// from `v_0`.
pub fn max_path_boxes(tess: &Tessellation, r: usize) -> Result<Extremum<SAPath>> {
    extremal_path(tess, r, Goal::Max)
}

/// `P(A)`: every tile meeting `B_A`. Fails if one of them is cut by the
/// window.
pub fn inverse_cover(tess: &Tessellation, a: &LatticeAnimal) -> Result<VoronoiPolyomino> {
    if a.dim() != 2 {
        return Err(Error::InvalidArgument("inverse cover needs a planar animal".into()));
    }
    let boxes: Vec<(Point2, Point2)> = a
        .cells()
        .iter()
        .map(|z| {
            let (x, y) = (f64::from(z.0[0]), f64::from(z.0[1]));
            ([x - 0.5, y - 0.5], [x + 0.5, y + 0.5])
        })
        .collect();
    let gens = tess.cells_meeting_boxes(&boxes);
    for &v in &gens {
        tess.interior_cell(v)?;
    }
    debug_assert!(is_connected(tess, &gens));
    Ok(VoronoiPolyomino::from_sorted_unchecked(gens))
}

/// Largest `#_N P(A)` over lattice animals `A` containing the origin with
/// at most `s` boxes. Adding boxes never removes tiles, so the maximum is
/// reached at size `s`; every animal of that size is visited.
pub fn max_inverse_cover(tess: &Tessellation, s: usize) -> Result<Extremum<LatticeAnimal>> {
    if s == 0 {
        return Err(Error::InvalidArgument("animal size must be at least 1".into()));
    }
    // animals of size s through the origin stay within l1 distance s - 1
    let reach = s as i32 - 1;
    let mut tiles: HashMap<Site, Vec<usize>> = HashMap::new();
    for x in -reach..=reach {
        let rest = reach - x.abs();
        for y in -rest..=rest {
            let (fx, fy) = (f64::from(x), f64::from(y));
            let t = tess.cells_meeting_boxes(&[([fx - 0.5, fy - 0.5], [fx + 0.5, fy + 0.5])]);
            for &v in &t {
                tess.interior_cell(v)?;
            }
            tiles.insert(Site::new2(x, y), t);
        }
    }
    struct Search<'a> {
        s: usize,
        tiles: &'a HashMap<Site, Vec<usize>>,
        counts: HashMap<usize, u32>,
        best: usize,
        best_set: Vec<Site>,
    }
    impl Visitor<Site> for Search<'_> {
        fn enter(&mut self, z: Site, set: &[Site]) -> bool {
            for &v in &self.tiles[&z] {
                *self.counts.entry(v).or_insert(0) += 1;
            }
            if set.len() == self.s {
                let mut sorted = set.to_vec();
                sorted.sort_unstable();
                let k = self.counts.len();
                if k > self.best || (k == self.best && sorted < self.best_set) {
                    self.best = k;
                    self.best_set = sorted;
                }
            }
            true
        }
        fn leave(&mut self, z: Site) {
            for v in &self.tiles[&z] {
                let c = self.counts.get_mut(v).expect("tile was added");
                *c -= 1;
                if *c == 0 {
                    self.counts.remove(v);
                }
            }
        }
    }
    let mut search = Search { s, tiles: &tiles, counts: HashMap::new(), best: 0, best_set: Vec::new() };
    enumerate_connected(&LatticeGraph { d: 2 }, Site::ORIGIN, s, &[], &mut search);
    Ok(Extremum {
        value: search.best as u64,
        witness: LatticeAnimal::new(2, search.best_set)?,
        heuristic: false,
    })
}

/// Generators of the tiles crossed by the segment `[x, y]`, in order of
/// first crossing. Each tile is convex, so none repeats.
pub fn segment_crossings(tess: &Tessellation, x: Point2, y: Point2) -> Result<Vec<usize>> {
    let x = off_boundary(tess, x, y);
    let tri = tess.triangulation();
    let dir = [y[0] - x[0], y[1] - x[1]];
    let mut v = tess.nearest(x);
    let mut out = vec![v];
    tess.interior_cell(v)?;
    if dir == [0.0, 0.0] {
        return Ok(out);
    }
    let mut t = 0.0;
    for _ in 0..tess.len() {
        let pv = tess.point(v);
        let rv = [pv[0] - x[0], pv[1] - x[1]];
        let nv = rv[0] * rv[0] + rv[1] * rv[1];
        // leave C_v when |p(t) - w| < |p(t) - v| for some neighbour w:
        // (|v|^2 - |w|^2) + 2 t dir.(w - v) > 0 in coordinates relative to x
        let mut exit: Option<(f64, f64, usize)> = None;
        for w in tri.neighbors(v) {
            let pw = tess.point(w);
            let rw = [pw[0] - x[0], pw[1] - x[1]];
            let b = 2.0 * (dir[0] * (rw[0] - rv[0]) + dir[1] * (rw[1] - rv[1]));
            if b <= 0.0 {
                continue;
            }
            let a = nv - (rw[0] * rw[0] + rw[1] * rw[1]);
            let tw = (-a / b).max(t);
            let better = match exit {
                None => true,
                Some((te, be, we)) => {
                    let tol = 1e-12 * te.abs().max(1.0);
                    tw < te - tol
                        || (tw <= te + tol && (b > be || (b == be && crate::ppp::lex_cmp(&pw, &tess.point(we)).is_lt())))
                }
            };
            if better {
                exit = Some((tw, b, w));
            }
        }
        match exit {
            Some((te, _, w)) if te < 1.0 => {
                t = te;
                v = w;
                tess.interior_cell(v)?;
                out.push(v);
            }
            _ => return Ok(out),
        }
    }
    Err(Error::Degenerate("segment walk did not terminate".into()))
}

/// Moves `x` by 1e-9 towards `y` (or along the first axis) while it is
/// equidistant from two generators.
fn off_boundary(tess: &Tessellation, mut x: Point2, y: Point2) -> Point2 {
    let tri = tess.triangulation();
    for _ in 0..8 {
        let v = tess.nearest(x);
        let dv = dist2(tess.point(v), x);
        let tie = tri.neighbors(v).any(|w| (dist2(tess.point(w), x) - dv).abs() <= 1e-14 * dv.max(1.0));
        if !tie {
            break;
        }
        let dir = [y[0] - x[0], y[1] - x[1]];
        let n = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
        let step = if n > 0.0 { [dir[0] / n, dir[1] / n] } else { [1.0, 0.0] };
        log::debug!("segment endpoint {x:?} on a cell boundary, perturbing");
        x = [x[0] + 1e-9 * step[0], x[1] + 1e-9 * step[1]];
    }
    x
}

fn dist2(a: Point2, b: Point2) -> f64 {
    let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
    dx * dx + dy * dy
}

/// Chronological loop erasure.
pub fn loop_erase(seq: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    let mut pos: HashMap<usize, usize> = HashMap::new();
    for &v in seq {
        if let Some(&i) = pos.get(&v) {
            for u in out.drain(i + 1..) {
                pos.remove(&u);
            }
        } else {
            pos.insert(v, out.len());
            out.push(v);
        }
    }
    out
}

/// `gamma(x, y)`: the loop-erased crossing sequence of `[x, y]`, from `v_x`
/// to `v_y`.
pub fn segment_path(tess: &Tessellation, x: Point2, y: Point2) -> Result<SAPath> {
    let mut seq = segment_crossings(tess, x, y)?;
    let vy = tess.nearest(off_boundary(tess, y, x));
    if seq.last() != Some(&vy) && tess.triangulation().are_adjacent(*seq.last().expect("nonempty"), vy) {
        seq.push(vy);
    }
    Ok(SAPath::from_unchecked(loop_erase(&seq)))
}

/// `#_N P([x, y])`.
pub fn segment_tile_count(tess: &Tessellation, x: Point2, y: Point2) -> Result<usize> {
    let mut s = segment_crossings(tess, x, y)?;
    s.sort_unstable();
    s.dedup();
    Ok(s.len())
}

/// `max over |x| <= s of #gamma(0, x)` and a maximiser.
///
/// Along a ray from the origin the crossed tiles form a growing prefix, so
/// the maximum is attained on the circle `|x| = s`. The crossing sequence
/// only changes at directions through a Voronoi vertex inside the disc or
/// through a point where a Voronoi edge meets the circle; evaluating one
/// direction strictly between each pair of consecutive critical angles
/// covers every case.
pub fn max_segment_path(tess: &Tessellation, s: f64) -> Result<(usize, Point2)> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius must be nonnegative, got {s}")));
    }
    if s == 0.0 {
        return Ok((1, [0.0, 0.0]));
    }
    let tri = tess.triangulation();
    let meets_disc = |v: usize| {
        let (lo, hi) = tess.cell(v).bbox();
        let dx = 0f64.max(lo[0]).max(-hi[0]);
        let dy = 0f64.max(lo[1]).max(-hi[1]);
        dx * dx + dy * dy <= s * s
    };
    let v0 = tess.nearest([0.0, 0.0]);
    let mut seen = HashSet::from([v0]);
    let mut stack = vec![v0];
    let mut angles = Vec::new();
    while let Some(v) = stack.pop() {
        let poly = &tess.interior_cell(v)?.polygon;
        for (i, a) in poly.iter().enumerate() {
            let b = poly[(i + 1) % poly.len()];
            if a[0] * a[0] + a[1] * a[1] <= s * s {
                angles.push(a[1].atan2(a[0]));
            }
            // |a + t (b - a)| = s
            let d = [b[0] - a[0], b[1] - a[1]];
            let qa = d[0] * d[0] + d[1] * d[1];
            let qb = 2.0 * (a[0] * d[0] + a[1] * d[1]);
            let qc = a[0] * a[0] + a[1] * a[1] - s * s;
            let disc = qb * qb - 4.0 * qa * qc;
            if qa > 0.0 && disc >= 0.0 {
                for t in [(-qb - disc.sqrt()) / (2.0 * qa), (-qb + disc.sqrt()) / (2.0 * qa)] {
                    if (0.0..=1.0).contains(&t) {
                        angles.push((a[1] + t * d[1]).atan2(a[0] + t * d[0]));
                    }
                }
            }
        }
        for w in tri.neighbors(v) {
            if !seen.contains(&w) && meets_disc(w) {
                seen.insert(w);
                stack.push(w);
            }
        }
    }
    angles.sort_by(f64::total_cmp);
    angles.dedup();
    let mut probes: Vec<f64> = angles.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    match (angles.first(), angles.last()) {
        (Some(&first), Some(&last)) => probes.push(0.5 * (last + first + 2.0 * std::f64::consts::PI)),
        _ => probes.push(0.0),
    }
    let mut best = (0, [0.0, 0.0]);
    for theta in probes {
        let x = [s * theta.cos(), s * theta.sin()];
        let k = segment_path(tess, [0.0, 0.0], x)?.len();
        if k > best.0 {
            best = (k, x);
        }
    }
    Ok(best)
}
