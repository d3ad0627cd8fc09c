//! Full boxes, the block field `X^L`, tile confinement around lattice
//! animals, and the probability that a block is not full.
//!
//! Block `z` is `Lz + [-L/2, L/2)^d`; it is cut into `m^d` half-open
//! sub-boxes with `m = 4 ceil(sqrt d) + 1`, and it is *full* when every
//! sub-box holds a point.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::estimate::{Params, TailEstimate, Tally};
use crate::geometry::{Point2, Tessellation};
use crate::lattice::{box_union, enlarged_union, linf_boundary, EnlargedUnion, LatticeAnimal, Site};
use crate::percolation::{LatticeRegion, SiteField};
use crate::ppp::{sample, uniform_in, IntensityModel, PointSet, Window};
use crate::rng::{mix, stream, unit_at, TAG_AUX, TAG_SITES};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockConfig {
    pub l: f64,
    pub d: usize,
    pub m: usize,
}

impl BlockConfig {
    pub fn new(l: f64, d: usize) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidArgument(format!("block side must be positive, got {l}")));
        }
        if !(2..=3).contains(&d) {
            return Err(Error::InvalidArgument(format!("blocks support d = 2 or 3, got {d}")));
        }
        let m = 4 * (d as f64).sqrt().ceil() as usize + 1;
        Ok(BlockConfig { l, d, m })
    }

    pub fn sub_boxes(&self) -> usize {
        self.m.pow(self.d as u32)
    }

    pub fn sub_side(&self) -> f64 {
        self.l / self.m as f64
    }

    /// `(lo, hi)` of block `z`.
    pub fn block_bounds(&self, z: &Site) -> (Vec<f64>, Vec<f64>) {
        let lo = (0..self.d).map(|i| self.l * f64::from(z.0[i]) - 0.5 * self.l).collect();
        let hi = (0..self.d).map(|i| self.l * f64::from(z.0[i]) + 0.5 * self.l).collect();
        (lo, hi)
    }

    /// Block index of a point.
    pub fn block_of(&self, x: &[f64]) -> Site {
        let mut c = [0; 3];
        for i in 0..self.d {
            c[i] = (x[i] / self.l + 0.5).floor() as i32;
        }
        Site(c)
    }

    /// Flat sub-box index of a point inside block `z`.
    pub fn sub_box_of(&self, z: &Site, x: &[f64]) -> usize {
        let h = self.sub_side();
        let mut idx = 0;
        for i in 0..self.d {
            let lo = self.l * f64::from(z.0[i]) - 0.5 * self.l;
            let j = (((x[i] - lo) / h).floor() as isize).clamp(0, self.m as isize - 1) as usize;
            idx = idx * self.m + j;
        }
        idx
    }

    /// Half-open bounds of sub-box `idx` of block `z`.
    pub fn sub_box_bounds(&self, z: &Site, mut idx: usize) -> Window {
        let h = self.sub_side();
        let mut lo = vec![0.0; self.d];
        let mut hi = vec![0.0; self.d];
        for i in (0..self.d).rev() {
            let j = idx % self.m;
            idx /= self.m;
            let base = self.l * f64::from(z.0[i]) - 0.5 * self.l;
            lo[i] = base + j as f64 * h;
            hi[i] = if j + 1 == self.m { base + self.l } else { base + (j + 1) as f64 * h };
        }
        Window::new(lo, hi).expect("sub-box has positive extent")
    }

    fn check_inside(&self, window: &Window, z: &Site) -> Result<()> {
        let (lo, hi) = self.block_bounds(z);
        if window.contains_box(&lo, &hi) {
            Ok(())
        } else {
            Err(Error::BlockOutsideWindow(z.0[..self.d].to_vec()))
        }
    }
}

/// Whether block `z` is full.
pub fn is_full_box(points: &PointSet, z: &Site, cfg: &BlockConfig) -> Result<bool> {
    cfg.check_inside(points.window(), z)?;
    let (lo, hi) = cfg.block_bounds(z);
    let block = Window::new(lo, hi)?;
    let mut hit = vec![false; cfg.sub_boxes()];
    for p in points.iter() {
        if block.contains(p) {
            hit[cfg.sub_box_of(z, p)] = true;
        }
    }
    Ok(hit.iter().all(|&h| h))
}

/// Fullness of every block in a lattice region, from one pass over the
/// points.
#[derive(Debug, Clone)]
pub struct FullnessMap {
    region: LatticeRegion,
    full: Vec<bool>,
}

impl FullnessMap {
    pub fn new(points: &PointSet, cfg: &BlockConfig, region: LatticeRegion) -> Result<Self> {
        for corner in [region.lo, region.hi] {
            cfg.check_inside(points.window(), &corner)?;
        }
        let subs = cfg.sub_boxes();
        let mut hit = vec![false; region.len() * subs];
        for p in points.iter() {
            let z = cfg.block_of(p);
            if let Some(b) = region.index(&z) {
                hit[b * subs + cfg.sub_box_of(&z, p)] = true;
            }
        }
        let full = hit.chunks(subs).map(|c| c.iter().all(|&h| h)).collect();
        Ok(FullnessMap { region, full })
    }

    /// Fullness drawn directly from independent sub-box emptiness events
    /// (probability `e^{-lambda a}` each, `a` the sub-box volume), evaluated
    /// by hashing. Same law as [`FullnessMap::new`] on a homogeneous
    /// process, without generating points.
    pub fn sample_homogeneous(cfg: &BlockConfig, lambda: f64, region: LatticeRegion, seed: u64, replicate: u64) -> Self {
        let p_empty = (-lambda * cfg.sub_side().powi(cfg.d as i32)).exp();
        let key = mix(&[seed, replicate, TAG_SITES, 0xB10C]);
        let subs = cfg.sub_boxes();
        let full = region
            .sites()
            .map(|z| (0..subs).all(|j| unit_at(key, &[z.0[0], z.0[1], z.0[2], j as i32]) >= p_empty))
            .collect();
        FullnessMap { region, full }
    }

    pub fn region(&self) -> &LatticeRegion {
        &self.region
    }

    pub fn is_full(&self, z: &Site) -> Option<bool> {
        self.region.index(z).map(|i| self.full[i])
    }

    /// `X_z = 1` iff all blocks within l-infinity distance 1 are full, for
    /// `z` in the region shrunk by one.
    pub fn block_field(&self) -> Result<SiteField> {
        let d = self.region.d;
        let mut lo = self.region.lo;
        let mut hi = self.region.hi;
        for i in 0..d {
            lo.0[i] += 1;
            hi.0[i] -= 1;
        }
        let inner = LatticeRegion::new(d, lo, hi)?;
        let mut f = SiteField::from_fn(inner, 3, |z| {
            self.is_full(z).unwrap_or(false) && z.moore(d).iter().all(|n| self.is_full(n).unwrap_or(false))
        });
        f.rho_floor = None;
        Ok(f)
    }
}

/// The block field `X^L` on `region` (dependence range 3).
pub fn block_field_x(points: &PointSet, cfg: &BlockConfig, region: LatticeRegion) -> Result<SiteField> {
    let d = region.d;
    let mut lo = region.lo;
    let mut hi = region.hi;
    for i in 0..d {
        lo.0[i] -= 1;
        hi.0[i] += 1;
    }
    FullnessMap::new(points, cfg, LatticeRegion::new(d, lo, hi)?)?.block_field()
}

/// Outcome of a confinement check.
#[derive(Debug, Clone, PartialEq)]
pub enum Confinement {
    /// Every cell meeting `B(A)` lies in the enlarged region.
    Confined { cells_checked: usize },
    /// A cell meeting `B(A)` leaves the enlarged region; `witness` is a
    /// boundary point of the cell outside it by `excess`.
    Counterexample { generator: usize, witness: Point2, excess: f64 },
}

impl Confinement {
    pub fn is_confined(&self) -> bool {
        matches!(self, Confinement::Confined { .. })
    }
}

const CONFINEMENT_TOL: f64 = 1e-9;

fn block_box(cfg: &BlockConfig, z: &Site) -> (Point2, Point2) {
    let (lo, hi) = cfg.block_bounds(z);
    ([lo[0], lo[1]], [hi[0], hi[1]])
}

/// Generators whose cells meet `B(A)`.
pub fn cells_meeting_union(tess: &Tessellation, a: &LatticeAnimal, cfg: &BlockConfig) -> Vec<usize> {
    let boxes: Vec<(Point2, Point2)> = a.cells().iter().map(|z| block_box(cfg, z)).collect();
    tess.cells_meeting_boxes(&boxes)
}

/// Certifies that the segment `[p, q]` lies in the enlarged union: either
/// both ends lie in the same rounded box (which is convex), or the halves
/// are certified recursively down to length `CONFINEMENT_TOL`. Returns a
/// violating point otherwise.
fn certify_segment(region: &EnlargedUnion, p: Point2, q: Point2, depth: u32) -> Option<(Point2, f64)> {
    let base = &region.base;
    let within = |c: &Site, x: Point2| base.distance_to_box(c, &x) <= region.radius + CONFINEMENT_TOL;
    if base.cells().iter().any(|c| within(c, p) && within(c, q)) {
        return None;
    }
    let len = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
    let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
    let excess = region.excess(&mid);
    if excess > CONFINEMENT_TOL {
        return Some((mid, excess));
    }
    if len <= CONFINEMENT_TOL || depth > 60 {
        return None;
    }
    certify_segment(region, p, mid, depth + 1).or_else(|| certify_segment(region, mid, q, depth + 1))
}

/// Checks that every Voronoi cell meeting `B(A)` lies within distance
/// `L/2` of `B(A)`, given that all blocks on the l-infinity boundary of `A`
/// are full.
///
/// Errors: [`Error::HypothesisViolated`] when a boundary block is not full,
/// [`Error::Censored`] when a relevant cell reaches the window boundary.
pub fn verify_confinement(tess: &Tessellation, a: &LatticeAnimal, cfg: &BlockConfig) -> Result<Confinement> {
    if cfg.d != 2 || a.dim() != 2 {
        return Err(Error::InvalidArgument("confinement is checked in the plane only".into()));
    }
    for z in linf_boundary(a) {
        if !is_full_box(tess.points(), &z, cfg)? {
            return Err(Error::HypothesisViolated(format!("boundary block {:?} is not full", z.xy())));
        }
    }
    let region = enlarged_union(a, cfg.l)?;
    let cells = cells_meeting_union(tess, a, cfg);
    for &v in &cells {
        let cell = tess.interior_cell(v)?;
        let poly = &cell.polygon;
        for (i, &p) in poly.iter().enumerate() {
            let excess = region.excess(&p);
            if excess > CONFINEMENT_TOL {
                return Ok(Confinement::Counterexample { generator: v, witness: p, excess });
            }
            if let Some((witness, excess)) = certify_segment(&region, p, poly[(i + 1) % poly.len()], 0) {
                return Ok(Confinement::Counterexample { generator: v, witness, excess });
            }
        }
    }
    Ok(Confinement::Confined { cells_checked: cells.len() })
}

/// Zero-truncated Poisson variate (mean parameter `mu > 0`).
fn zero_truncated_poisson<R: Rng>(rng: &mut R, mu: f64) -> u64 {
    // inversion on the conditional law for small means, rejection otherwise
    if mu < 1.0 {
        let u: f64 = rng.random();
        let mut k = 1u64;
        let mut p = mu / mu.exp_m1();
        let mut cdf = p;
        while u > cdf && k < 1000 {
            k += 1;
            p *= mu / k as f64;
            cdf += p;
        }
        k
    } else {
        let dist = Poisson::new(mu).expect("positive mean");
        loop {
            let k = dist.sample(rng) as u64;
            if k > 0 {
                return k;
            }
        }
    }
}

/// Conditions a homogeneous sample on the blocks `zs` being full: every
/// empty sub-box of those blocks receives a zero-truncated Poisson number of
/// uniform points. Sub-boxes are independent under the Poisson law, so the
/// result has exactly the conditional distribution.
pub fn condition_full(points: &PointSet, cfg: &BlockConfig, lambda: f64, zs: &[Site], replicate: u64) -> Result<PointSet> {
    let window = points.window().clone();
    let mut occupied: HashMap<(Site, usize), bool> = HashMap::new();
    let wanted: HashSet<Site> = zs.iter().copied().collect();
    for z in zs {
        cfg.check_inside(&window, z)?;
    }
    for p in points.iter() {
        let z = cfg.block_of(p);
        if wanted.contains(&z) {
            occupied.insert((z, cfg.sub_box_of(&z, p)), true);
        }
    }
    let mu = lambda * cfg.sub_side().powi(cfg.d as i32);
    let mut rng = stream(points.seed, replicate, TAG_AUX);
    let mut coords = points.coords().to_vec();
    let mut sorted: Vec<Site> = wanted.into_iter().collect();
    sorted.sort_unstable();
    for z in &sorted {
        for j in 0..cfg.sub_boxes() {
            if occupied.contains_key(&(*z, j)) {
                continue;
            }
            let sub = cfg.sub_box_bounds(z, j);
            for _ in 0..zero_truncated_poisson(&mut rng, mu) {
                uniform_in(&mut rng, &sub, &mut coords);
            }
        }
    }
    let mut out = PointSet::from_raw(window, coords, points.seed, points.replicate);
    out.modified = points.modified;
    Ok(out)
}

/// Not-full probability for a homogeneous block: Monte Carlo estimate, the
/// closed form for independent sub-boxes, and the union bound.
#[derive(Debug, Clone, PartialEq)]
pub struct FullBoxReport {
    pub estimate: TailEstimate,
    /// `1 - (1 - e^{-lambda a})^{m^d}` with `a = (L/m)^d`.
    pub exact: f64,
    /// `m^d e^{-a / c_mu}` with `c_mu = max(lambda, 1/lambda)`.
    pub proof_bound: f64,
    /// `m^d e^{-lambda a}`.
    pub union_bound: f64,
    pub ci_contains_exact: bool,
}

pub fn full_box_exact(cfg: &BlockConfig, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let e = (-lambda * cfg.sub_side().powi(cfg.d as i32)).exp();
    -((cfg.sub_boxes() as f64) * (-e).ln_1p()).exp_m1()
}

pub fn full_box_union_bound(cfg: &BlockConfig, lambda: f64) -> f64 {
    cfg.sub_boxes() as f64 * (-lambda * cfg.sub_side().powi(cfg.d as i32)).exp()
}

pub fn full_box_proof_bound(cfg: &BlockConfig, c_mu: f64) -> f64 {
    cfg.sub_boxes() as f64 * (-cfg.sub_side().powi(cfg.d as i32) / c_mu).exp()
}

/// Estimates `P(block 0 is not full)` for a homogeneous process by sampling
/// points in the block.
pub fn full_box_probability(l: f64, d: usize, lambda: f64, replicates: u64, seed: u64) -> Result<FullBoxReport> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("intensity must be nonnegative, got {lambda}")));
    }
    let cfg = BlockConfig::new(l, d)?;
    let (lo, hi) = cfg.block_bounds(&Site::ORIGIN);
    let window = Window::new(lo, hi)?;
    let model = IntensityModel::homogeneous(lambda);
    let tally = (0..replicates)
        .into_par_iter()
        .map(|rep| -> Result<Tally> {
            let mut t = Tally::default();
            let full = if lambda == 0.0 {
                false
            } else {
                is_full_box(&sample(&window, &model, seed, rep)?, &Site::ORIGIN, &cfg)?
            };
            t.record(!full);
            Ok(t)
        })
        .try_reduce(Tally::default, |mut a, b| {
            a.merge(&b);
            Ok(a)
        })?;
    let exact = full_box_exact(&cfg, lambda);
    let c_mu = if lambda > 0.0 { lambda.max(1.0 / lambda) } else { f64::INFINITY };
    let proof_bound = full_box_proof_bound(&cfg, c_mu);
    let params = Params { d: Some(d as u32), lambda: Some(lambda), l: Some(l), ..Params::default() };
    let estimate = TailEstimate::from_tally("lemma7", params, tally, Some(proof_bound));
    let ci_contains_exact = estimate.ci_lo <= exact && exact <= estimate.ci_hi;
    Ok(FullBoxReport { estimate, exact, proof_bound, union_bound: full_box_union_bound(&cfg, lambda), ci_contains_exact })
}

/// Block field on `region` for a homogeneous process of intensity
/// `lambda`, drawn through [`FullnessMap::sample_homogeneous`].
pub fn sample_block_field(cfg: &BlockConfig, lambda: f64, region: LatticeRegion, seed: u64, replicate: u64) -> Result<SiteField> {
    let d = region.d;
    let mut lo = region.lo;
    let mut hi = region.hi;
    for i in 0..d {
        lo.0[i] -= 1;
        hi.0[i] += 1;
    }
    FullnessMap::sample_homogeneous(cfg, lambda, LatticeRegion::new(d, lo, hi)?, seed, replicate).block_field()
}

/// Window holding all blocks of `closure(A)` plus `margin` on each side.
pub fn window_around(a: &LatticeAnimal, cfg: &BlockConfig, margin: f64) -> Result<Window> {
    let u = box_union(a, cfg.l)?;
    let (lo, hi) = u.bounds();
    Window::new(lo.iter().map(|x| x - cfg.l - margin).collect(), hi.iter().map(|x| x + cfg.l + margin).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::percolation::SiteValues;

    fn cfg(l: f64) -> BlockConfig {
        BlockConfig::new(l, 2).unwrap()
    }

    fn centers(c: &BlockConfig, skip: Option<usize>) -> Vec<[f64; 2]> {
        let h = c.sub_side();
        let mut out = Vec::new();
        for i in 0..c.m {
            for j in 0..c.m {
                if skip == Some(i * c.m + j) {
                    continue;
                }
                out.push([-0.5 * c.l + (i as f64 + 0.5) * h, -0.5 * c.l + (j as f64 + 0.5) * h]);
            }
        }
        out
    }

    #[test]
    fn grid_side_is_nine() {
        assert_eq!(cfg(1.0).m, 9);
        assert_eq!(BlockConfig::new(1.0, 3).unwrap().m, 9);
        assert_eq!(cfg(1.0).sub_boxes(), 81);
    }

    #[test]
    fn centers_make_a_full_box() {
        let c = cfg(4.5);
        let w = Window::centered_square(5.0).unwrap();
        let ps = PointSet::from_xy(w.clone(), &centers(&c, None)).unwrap();
        assert!(is_full_box(&ps, &Site::ORIGIN, &c).unwrap());
        let ps = PointSet::from_xy(w.clone(), &centers(&c, Some(40))).unwrap();
        assert!(!is_full_box(&ps, &Site::ORIGIN, &c).unwrap());
        assert!(!is_full_box(&PointSet::empty(w.clone()), &Site::ORIGIN, &c).unwrap());
        assert!(matches!(is_full_box(&ps, &Site::new2(3, 0), &c), Err(Error::BlockOutsideWindow(_))));
    }

    #[test]
    fn sub_box_bounds_tile_the_block() {
        let c = cfg(2.0);
        let z = Site::new2(1, -2);
        let total: f64 = (0..c.sub_boxes()).map(|j| c.sub_box_bounds(&z, j).volume()).sum();
        assert!((total - 4.0).abs() < 1e-12);
        for j in [0, 17, 80] {
            let b = c.sub_box_bounds(&z, j);
            let mid: Vec<f64> = (0..2).map(|i| 0.5 * (b.lo()[i] + b.hi()[i])).collect();
            assert_eq!(c.sub_box_of(&z, &mid), j);
            assert_eq!(c.block_of(&mid), z);
        }
    }

    #[test]
    fn closed_form_and_bounds() {
        let c = cfg(20.0);
        let exact = full_box_exact(&c, 1.0);
        assert!((exact - 0.441_564_008_798_634).abs() < 1e-12);
        assert!((full_box_proof_bound(&c, 1.0) - 0.580_524_978_046_605).abs() < 1e-12);
        assert_eq!(full_box_exact(&c, 0.0), 1.0);
        for l in [2.0, 5.0, 10.0, 20.0, 40.0] {
            for lambda in [0.5, 1.0, 5.0] {
                let c = cfg(l);
                assert!(full_box_union_bound(&c, lambda) >= full_box_exact(&c, lambda));
            }
        }
    }

    #[test]
    fn zero_intensity_is_never_full() {
        let r = full_box_probability(3.0, 2, 0.0, 50, 1).unwrap();
        assert_eq!(r.estimate.hits, 50);
        assert_eq!(r.exact, 1.0);
    }

    #[test]
    fn one_empty_block_zeroes_its_neighbourhood() {
        let region = LatticeRegion::centered(2, 4);
        let full = FullnessMap { region, full: region.sites().map(|z| z != Site::new2(1, 0)).collect() };
        let x = full.block_field().unwrap();
        for z in x.region().sites() {
            let expect = z.linf(&Site::new2(1, 0)) > 1;
            assert_eq!(x.get(&z), Some(expect), "{z:?}");
        }
    }

    #[test]
    fn conditioning_fills_requested_blocks() {
        let c = cfg(2.0);
        let w = Window::centered_square(4.0).unwrap();
        let ps = sample(&w, &IntensityModel::homogeneous(5.0), 3, 0).unwrap();
        let zs = [Site::new2(0, 0), Site::new2(1, 0)];
        let filled = condition_full(&ps, &c, 5.0, &zs, 0).unwrap();
        for z in &zs {
            assert!(is_full_box(&filled, z, &c).unwrap());
        }
        // original points are kept, in order
        assert_eq!(&filled.coords()[..ps.coords().len()], ps.coords());
    }

    #[test]
    fn hashed_fullness_matches_closed_form() {
        let c = cfg(6.0);
        let region = LatticeRegion::centered(2, 10);
        let mut not_full = 0usize;
        let mut total = 0usize;
        for rep in 0..20 {
            let f = FullnessMap::sample_homogeneous(&c, 10.0, region, 5, rep);
            for z in region.sites() {
                total += 1;
                not_full += usize::from(!f.is_full(&z).unwrap());
            }
        }
        let p = not_full as f64 / total as f64;
        let exact = full_box_exact(&c, 10.0);
        let se = (exact * (1.0 - exact) / total as f64).sqrt();
        assert!((p - exact).abs() < 4.0 * se, "{p} vs {exact}");
    }
}
