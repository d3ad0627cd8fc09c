//! Bernoulli rewards on Delaunay edges, minimal path rewards, and good
//! boxes for the reward argument.
//!
//! `tau_e = 1` with probability `p`. A block `z` of side `L` is good when
//! the 5 x 5 blocks around it are full and no path of zero-reward edges
//! crosses the annulus `B^{3/2,L}_z \ B^{1/2,L}_z`.

use std::collections::{HashSet, VecDeque};

use rand::Rng;

use crate::blocks::{BlockConfig, FullnessMap};
use crate::geometry::{polygon, Point2, Tessellation, Triangulation};
use crate::lattice::{Extremum, Site};
use crate::percolation::{LatticeRegion, SiteField};
use crate::polyomino::{boxes_of_side, SAPath};
use crate::ppp::PointSet;
use crate::rng::{stream, TAG_EDGES};
use crate::{Error, Result};

pub const DEFAULT_EXACT_GUARD: usize = 10;
pub const BEAM_WIDTH: usize = 512;

/// One reward per Delaunay edge, indexed like [`Triangulation::edges`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeField {
    tau: Vec<u8>,
}

impl EdgeField {
    pub fn constant(tri: &Triangulation, value: u8) -> Self {
        EdgeField { tau: vec![value.min(1); tri.edges().len()] }
    }

    pub fn from_values(tri: &Triangulation, tau: Vec<u8>) -> Result<Self> {
        if tau.len() != tri.edges().len() {
            return Err(Error::InvalidArgument(format!("{} rewards for {} edges", tau.len(), tri.edges().len())));
        }
        if tau.iter().any(|&t| t > 1) {
            return Err(Error::InvalidArgument("rewards must be 0 or 1".into()));
        }
        Ok(EdgeField { tau })
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn get(&self, e: usize) -> u8 {
        self.tau[e]
    }

    pub fn set(&mut self, e: usize, value: u8) {
        self.tau[e] = value.min(1);
    }

    pub fn values(&self) -> &[u8] {
        &self.tau
    }

    pub fn mean(&self) -> f64 {
        self.tau.iter().map(|&t| f64::from(t)).sum::<f64>() / self.tau.len().max(1) as f64
    }

    /// Reward of a path: sum over its edges.
    pub fn path_reward(&self, tess: &Tessellation, path: &SAPath) -> u64 {
        path.edges(tess).iter().map(|&e| u64::from(self.tau[e])).sum()
    }

    /// `u v tau` lines.
    pub fn to_text(&self, tri: &Triangulation) -> String {
        let mut s = String::new();
        for (&(u, v), &t) in tri.edges().iter().zip(&self.tau) {
            s.push_str(&format!("{u} {v} {t}\n"));
        }
        s
    }

    pub fn parse_text(tri: &Triangulation, text: &str) -> Result<Self> {
        let mut tau = vec![None; tri.edges().len()];
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::Parse(format!("expected `u v tau`, got {line:?}")));
            }
            let num = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
            let (u, v, t) = (num(f[0])?, num(f[1])?, num(f[2])?);
            let e = tri.edge_id(u, v).ok_or_else(|| Error::Parse(format!("{u} {v} is not a Delaunay edge")))?;
            if t > 1 {
                return Err(Error::Parse(format!("reward {t} is not 0 or 1")));
            }
            tau[e] = Some(t as u8);
        }
        let tau: Option<Vec<u8>> = tau.into_iter().collect();
        tau.map(|tau| EdgeField { tau }).ok_or_else(|| Error::Parse("some edges have no reward".into()))
    }
}

/// I.i.d. Bernoulli(p) rewards.
pub fn sample_edges(tri: &Triangulation, p: f64, seed: u64, replicate: u64) -> Result<EdgeField> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p must lie in [0, 1], got {p}")));
    }
    let mut rng = stream(seed, replicate, TAG_EDGES);
    let tau = (0..tri.edges().len()).map(|_| u8::from(rng.random::<f64>() < p)).collect();
    Ok(EdgeField { tau })
}

/// Checks that no tile within graph distance `depth` of `root` is cut by
/// the window.
fn check_reach(tess: &Tessellation, root: usize, depth: usize) -> Result<()> {
    let tri = tess.triangulation();
    let mut seen = HashSet::from([root]);
    let mut queue = VecDeque::from([(root, 0)]);
    while let Some((v, k)) = queue.pop_front() {
        tess.interior_cell(v)?;
        if k < depth {
            for w in tri.neighbors(v) {
                if seen.insert(w) {
                    queue.push_back((w, k + 1));
                }
            }
        }
    }
    Ok(())
}

struct RewardSearch<'a> {
    tri: &'a Triangulation,
    field: &'a EdgeField,
    r: usize,
    path: Vec<usize>,
    on_path: HashSet<usize>,
    sum: u64,
    best: Option<(u64, Vec<usize>)>,
}

impl RewardSearch<'_> {
    fn extend(&mut self) {
        if self.path.len() == self.r {
            if self.best.as_ref().is_none_or(|(b, p)| self.sum < *b || (self.sum == *b && self.path < *p)) {
                self.best = Some((self.sum, self.path.clone()));
            }
            return;
        }
        let v = *self.path.last().expect("path starts at v_0");
        for &(w, e) in self.tri.adjacent(v) {
            if self.on_path.contains(&w) {
                continue;
            }
            let t = u64::from(self.field.get(e));
            // rewards are nonnegative: a partial sum above the incumbent
            // cannot improve
            if self.best.as_ref().is_some_and(|(b, _)| self.sum + t > *b) {
                continue;
            }
            self.sum += t;
            self.path.push(w);
            self.on_path.insert(w);
            self.extend();
            self.on_path.remove(&w);
            self.path.pop();
            self.sum -= t;
            if self.best.as_ref().is_some_and(|(b, _)| *b == 0) {
                return;
            }
        }
    }
}

/// Smallest reward over self-avoiding paths of exactly `r` vertices from
/// `v_0`. Exact up to `exact_guard`, otherwise a beam search whose value is
/// an upper bound on the minimum.
pub fn min_path_reward(tess: &Tessellation, field: &EdgeField, r: usize, exact_guard: usize) -> Result<Extremum<SAPath>> {
    if r < 2 {
        return Err(Error::InvalidArgument("paths need at least 2 vertices".into()));
    }
    let tri = tess.triangulation();
    if field.len() != tri.edges().len() {
        return Err(Error::InvalidArgument("edge field does not match the triangulation".into()));
    }
    let v0 = tess.nearest([0.0, 0.0]);
    check_reach(tess, v0, r - 1)?;
    if r > exact_guard {
        return beam_path_reward(tess, field, v0, r, BEAM_WIDTH);
    }
    let mut s = RewardSearch { tri, field, r, path: vec![v0], on_path: HashSet::from([v0]), sum: 0, best: None };
    s.extend();
    match s.best {
        Some((value, path)) => Ok(Extremum { value, witness: SAPath::from_unchecked(path), heuristic: false }),
        None => Err(Error::Degenerate(format!("no self-avoiding path of {r} vertices from v_0"))),
    }
}

fn beam_path_reward(tess: &Tessellation, field: &EdgeField, v0: usize, r: usize, width: usize) -> Result<Extremum<SAPath>> {
    let tri = tess.triangulation();
    let mut beam: Vec<(u64, Vec<usize>)> = vec![(0, vec![v0])];
    for _ in 1..r {
        let mut next = Vec::new();
        for (sum, path) in &beam {
            let v = *path.last().expect("nonempty");
            for &(w, e) in tri.adjacent(v) {
                if !path.contains(&w) {
                    let mut p = path.clone();
                    p.push(w);
                    next.push((sum + u64::from(field.get(e)), p));
                }
            }
        }
        next.sort();
        next.dedup();
        next.truncate(width);
        if next.is_empty() {
            return Err(Error::Degenerate(format!("beam search found no path of {r} vertices")));
        }
        beam = next;
    }
    let (value, path) = beam.swap_remove(0);
    Ok(Extremum { value, witness: SAPath::from_unchecked(path), heuristic: true })
}

/// Closed square `c + [-h, h]^2`.
#[derive(Debug, Clone, Copy)]
struct Square {
    lo: Point2,
    hi: Point2,
}

impl Square {
    fn around(z: &Site, l: f64, s: f64) -> Self {
        let c = [l * f64::from(z.0[0]), l * f64::from(z.0[1])];
        Square { lo: [c[0] - s * l, c[1] - s * l], hi: [c[0] + s * l, c[1] + s * l] }
    }

    fn meets(&self, poly: &[Point2]) -> bool {
        !polygon::clip_box(poly, self.lo, self.hi).is_empty()
    }

    fn inside_open(&self, poly: &[Point2]) -> bool {
        poly.iter().all(|p| p[0] > self.lo[0] && p[0] < self.hi[0] && p[1] > self.lo[1] && p[1] < self.hi[1])
    }

    /// A closed convex polygon meets the boundary iff it meets the closed
    /// square without lying in its interior.
    fn meets_boundary(&self, poly: &[Point2]) -> bool {
        self.meets(poly) && !self.inside_open(poly)
    }
}

/// Tiles meeting the closed outer square of block `z`, split by how they
/// meet the annulus.
struct Annulus {
    /// Generators whose tiles meet the closed annulus.
    members: HashSet<usize>,
    starts: Vec<usize>,
    targets: HashSet<usize>,
}

fn annulus(tess: &Tessellation, z: &Site, l: f64) -> Result<Annulus> {
    let inner = Square::around(z, l, 0.5);
    let outer = Square::around(z, l, 1.5);
    let tri = tess.triangulation();
    let centre = [l * f64::from(z.0[0]), l * f64::from(z.0[1])];
    let start = tess.nearest(centre);
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    let mut members = HashSet::new();
    let mut starts = Vec::new();
    let mut targets = HashSet::new();
    while let Some(v) = queue.pop_front() {
        let poly = &tess.interior_cell(v)?.polygon;
        if !inner.inside_open(poly) {
            members.insert(v);
            if inner.meets_boundary(poly) {
                starts.push(v);
            }
            if outer.meets_boundary(poly) {
                targets.insert(v);
            }
        }
        for w in tri.neighbors(v) {
            if !seen.contains(&w) && outer.meets(&tess.cell(w).polygon) {
                seen.insert(w);
                queue.push_back(w);
            }
        }
    }
    starts.sort_unstable();
    Ok(Annulus { members, starts, targets })
}

/// Condition (2): no zero-reward path through annulus tiles joins a tile
/// meeting the inner boundary to one meeting the outer boundary.
pub fn annulus_blocked(tess: &Tessellation, field: &EdgeField, z: &Site, l: f64) -> Result<bool> {
    Ok(!zero_crossing(tess, &annulus(tess, z, l)?, field))
}

fn zero_crossing(tess: &Tessellation, an: &Annulus, field: &EdgeField) -> bool {
    let tri = tess.triangulation();
    let mut seen: HashSet<usize> = an.starts.iter().copied().collect();
    let mut queue: VecDeque<usize> = an.starts.iter().copied().collect();
    while let Some(v) = queue.pop_front() {
        if an.targets.contains(&v) {
            return true;
        }
        for &(w, e) in tri.adjacent(v) {
            if field.get(e) == 0 && an.members.contains(&w) && seen.insert(w) {
                queue.push_back(w);
            }
        }
    }
    false
}

/// Good-box verdict using a precomputed fullness map that covers the 5 x 5
/// blocks around `z`.
pub fn is_good_box_with(tess: &Tessellation, fullness: &FullnessMap, field: &EdgeField, z: &Site, l: f64) -> Result<bool> {
    let mut all_full = true;
    for dx in -2..=2 {
        for dy in -2..=2 {
            let n = z.offset([dx, dy, 0]);
            match fullness.is_full(&n) {
                Some(f) => all_full &= f,
                None => return Err(Error::BlockOutsideWindow(n.0[..2].to_vec())),
            }
        }
    }
    if !all_full {
        return Ok(false);
    }
    annulus_blocked(tess, field, z, l)
}

/// Whether block `z` of side `l` is good for `(points, field)`.
pub fn is_good_box(tess: &Tessellation, points: &PointSet, field: &EdgeField, z: &Site, l: f64) -> Result<bool> {
    let cfg = BlockConfig::new(l, 2)?;
    let region = LatticeRegion::new(2, z.offset([-2, -2, 0]), z.offset([2, 2, 0]))?;
    let fullness = FullnessMap::new(points, &cfg, region)?;
    is_good_box_with(tess, &fullness, field, z, l)
}

/// The good-box field `Z^L` on `region` (dependence range 5).
pub fn good_box_field_z(tess: &Tessellation, points: &PointSet, field: &EdgeField, l: f64, region: LatticeRegion) -> Result<SiteField> {
    let cfg = BlockConfig::new(l, 2)?;
    let grown = LatticeRegion::new(2, region.lo.offset([-2, -2, 0]), region.hi.offset([2, 2, 0]))?;
    let fullness = FullnessMap::new(points, &cfg, grown)?;
    let mut values = Vec::with_capacity(region.len());
    for z in region.sites() {
        values.push(is_good_box_with(tess, &fullness, field, &z, l)?);
    }
    let mut f = SiteField::from_fn(region, 5, |z| values[region.index(z).expect("site of the region")]);
    f.rho_floor = None;
    Ok(f)
}

/// Both sides of the disjoint-pieces inequality for one path.
#[derive(Debug, Clone, PartialEq)]
pub struct DisjointPieces {
    pub reward: u64,
    /// Good blocks in `A_L(gamma)`.
    pub good: usize,
    /// Good blocks in `A_L(gamma)` whose annulus the path crosses.
    pub crossed_good: usize,
}

impl DisjointPieces {
    /// `reward >= good / 4^2`, as stated.
    pub fn literal_holds(&self) -> bool {
        16 * self.reward >= self.good as u64
    }

    /// `reward >= crossed_good / 4^2`, the form the argument proves.
    pub fn crossed_holds(&self) -> bool {
        16 * self.reward >= self.crossed_good as u64
    }
}

/// Evaluates the disjoint-pieces inequality on `path` against the good-box
/// field `z_field`, which must cover `A_L(path)`.
pub fn disjoint_pieces(tess: &Tessellation, field: &EdgeField, path: &SAPath, z_field: &SiteField, l: f64) -> Result<DisjointPieces> {
    let blocks = boxes_of_side(tess, path.vertices(), l)?;
    let mut good = 0;
    let mut crossed_good = 0;
    for b in blocks {
        let z = Site::new2(b[0], b[1]);
        let open = z_field.get(&z).ok_or_else(|| Error::BlockOutsideWindow(vec![b[0], b[1]]))?;
        if !open {
            continue;
        }
        good += 1;
        let inner = Square::around(&z, l, 0.5);
        let outer = Square::around(&z, l, 1.5);
        let polys: Vec<&[Point2]> = path.vertices().iter().map(|&v| tess.cell(v).polygon.as_slice()).collect();
        if polys.iter().any(|p| inner.meets_boundary(p)) && polys.iter().any(|p| outer.meets_boundary(p)) {
            crossed_good += 1;
        }
    }
    Ok(DisjointPieces { reward: field.path_reward(tess, path), good, crossed_good })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppp::{sample, IntensityModel, Window};

    fn poisson(lambda: f64, half: f64, seed: u64) -> Tessellation {
        let w = Window::centered_square(half).unwrap();
        Tessellation::new(sample(&w, &IntensityModel::homogeneous(lambda), seed, 0).unwrap()).unwrap()
    }

    /// All self-avoiding paths of `r` vertices from `v`.
    fn all_paths(tri: &Triangulation, path: &mut Vec<usize>, r: usize, out: &mut Vec<Vec<usize>>) {
        if path.len() == r {
            out.push(path.clone());
            return;
        }
        let v = *path.last().unwrap();
        for w in tri.neighbors(v).collect::<Vec<_>>() {
            if !path.contains(&w) {
                path.push(w);
                all_paths(tri, path, r, out);
                path.pop();
            }
        }
    }

    #[test]
    fn constant_fields() {
        let t = poisson(1.0, 10.0, 1);
        let ones = EdgeField::constant(t.triangulation(), 1);
        let zeros = EdgeField::constant(t.triangulation(), 0);
        for r in [2, 4, 6] {
            assert_eq!(min_path_reward(&t, &ones, r, 10).unwrap().value, r as u64 - 1);
            assert_eq!(min_path_reward(&t, &zeros, r, 10).unwrap().value, 0);
        }
        assert_eq!(sample_edges(t.triangulation(), 1.0, 1, 0).unwrap(), ones);
        assert_eq!(sample_edges(t.triangulation(), 0.0, 1, 0).unwrap(), zeros);
    }

    #[test]
    fn exact_matches_exhaustive_paths() {
        for seed in 0..10 {
            let t = poisson(1.0, 12.0, seed);
            let f = sample_edges(t.triangulation(), 0.6, seed, 0).unwrap();
            let v0 = t.nearest([0.0, 0.0]);
            let mut paths = Vec::new();
            all_paths(t.triangulation(), &mut vec![v0], 5, &mut paths);
            let oracle = paths
                .iter()
                .map(|p| f.path_reward(&t, &SAPath::from_unchecked(p.clone())))
                .min()
                .unwrap();
            assert_eq!(min_path_reward(&t, &f, 5, 10).unwrap().value, oracle);
        }
    }

    #[test]
    fn reward_is_monotone_in_r_and_tau() {
        let t = poisson(1.0, 12.0, 4);
        let f = sample_edges(t.triangulation(), 0.7, 4, 0).unwrap();
        let vals: Vec<u64> = (2..=8).map(|r| min_path_reward(&t, &f, r, 10).unwrap().value).collect();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]), "{vals:?}");
        let mut g = f.clone();
        for e in 0..g.len() {
            if e % 3 == 0 {
                g.set(e, 1);
            }
        }
        assert!(min_path_reward(&t, &g, 6, 10).unwrap().value >= min_path_reward(&t, &f, 6, 10).unwrap().value);
    }

    #[test]
    fn beam_bounds_exact_from_above() {
        let t = poisson(1.0, 12.0, 6);
        let f = sample_edges(t.triangulation(), 0.8, 6, 0).unwrap();
        let exact = min_path_reward(&t, &f, 7, 10).unwrap();
        let beam = min_path_reward(&t, &f, 7, 3).unwrap();
        assert!(beam.heuristic && beam.value >= exact.value);
    }

    #[test]
    fn good_box_extremes() {
        let l = 2.0;
        let t = poisson(400.0, 5.5, 2);
        let ones = EdgeField::constant(t.triangulation(), 1);
        let zeros = EdgeField::constant(t.triangulation(), 0);
        let z = Site::new2(0, 0);
        assert!(is_good_box(&t, t.points(), &ones, &z, l).unwrap());
        assert!(!is_good_box(&t, t.points(), &zeros, &z, l).unwrap());
    }

    #[test]
    fn disjoint_pieces_count_only_crossed_boxes() {
        let l = 2.0;
        let t = poisson(400.0, 5.5, 2);
        let ones = EdgeField::constant(t.triangulation(), 1);
        let z0 = Site::new2(0, 0);
        let good0 = is_good_box(&t, t.points(), &ones, &z0, l).unwrap();
        assert!(good0);
        let region = LatticeRegion::new(2, Site::new2(-1, -1), Site::new2(2, 1)).unwrap();
        let z_field = SiteField::from_fn(region, 5, |z| *z == z0);

        // a single tile inside the good block: no reward, nothing crossed
        let stay = SAPath::new(&t, &[t.nearest([0.0, 0.0])]).unwrap();
        let d = disjoint_pieces(&t, &ones, &stay, &z_field, l).unwrap();
        assert_eq!((d.reward, d.good, d.crossed_good), (0, 1, 0));
        assert!(d.crossed_holds() && !d.literal_holds());

        // a path leaving through the annulus pays for it
        let out = crate::polyomino::segment_path(&t, [0.0, 0.0], [3.2, 0.0]).unwrap();
        let d = disjoint_pieces(&t, &ones, &out, &z_field, l).unwrap();
        assert_eq!((d.good, d.crossed_good), (1, 1));
        assert!(d.reward > 0 && d.crossed_holds() && d.literal_holds());
    }

    #[test]
    fn flipping_zero_to_one_keeps_good_boxes_good() {
        let l = 2.0;
        let t = poisson(40.0, 8.0, 3);
        let an = annulus(&t, &Site::new2(0, 0), l).unwrap();
        let tri = t.triangulation();
        let mut f = sample_edges(tri, 0.6, 3, 0).unwrap();
        let mut inside: Vec<usize> = an.members.iter().flat_map(|&v| tri.adjacent(v).iter().map(|&(_, e)| e)).collect();
        inside.sort_unstable();
        inside.dedup();
        let mut was_good = !zero_crossing(&t, &an, &f);
        let mut flips = 0;
        for e in inside {
            if f.get(e) == 0 {
                f.set(e, 1);
                flips += 1;
                let now = !zero_crossing(&t, &an, &f);
                assert!(!was_good || now);
                was_good = now;
            }
        }
        assert!(flips > 0 && was_good);
    }

    #[test]
    fn edge_text_roundtrip() {
        let t = poisson(1.0, 6.0, 8);
        let f = sample_edges(t.triangulation(), 0.5, 8, 0).unwrap();
        assert_eq!(EdgeField::parse_text(t.triangulation(), &f.to_text(t.triangulation())).unwrap(), f);
    }

    #[test]
    fn censored_near_the_window() {
        let t = poisson(1.0, 2.0, 8);
        let f = sample_edges(t.triangulation(), 0.5, 8, 0).unwrap();
        assert!(matches!(min_path_reward(&t, &f, 8, 10), Err(Error::Censored(_))));
    }
}
