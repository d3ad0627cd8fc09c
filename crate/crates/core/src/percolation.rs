//! Site fields on `Z^d`, closed clusters and their hulls, open-density
//! minima over lattice animals, and Monte Carlo checks of the cluster
//! product inequality and of open-density tails.
//!
//! A site is *open* when its value is 1 and *closed* when it is 0.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use rayon::prelude::*;

use crate::connected::{enumerate_connected, Visitor};
use crate::estimate::{Params, TailEstimate, Tally};
use crate::lattice::{alpha_bound, closure, count_animals_by_size, Extremum, LatticeAnimal, LatticeGraph, Site, BEAM_WIDTH};
use crate::rng::{mix, stream, unit_at, TAG_AUX, TAG_SITES};
use crate::stats::binomial_coefficient;
use crate::unionfind::UnionFind;
use crate::{Error, Result};

/// Closed box of lattice sites `lo..=hi` (coordinates past `d` are 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeRegion {
    pub d: usize,
    pub lo: Site,
    pub hi: Site,
}

impl LatticeRegion {
    pub fn new(d: usize, lo: Site, hi: Site) -> Result<Self> {
        if !(1..=3).contains(&d) || (0..d).any(|i| lo.0[i] > hi.0[i]) || (d..3).any(|i| lo.0[i] != 0 || hi.0[i] != 0) {
            return Err(Error::InvalidArgument(format!("bad lattice region {lo:?}..={hi:?} in d = {d}")));
        }
        Ok(LatticeRegion { d, lo, hi })
    }

    /// Bounding box of `a` padded by `pad` sites on every side.
    pub fn around(a: &LatticeAnimal, pad: i32) -> Self {
        let d = a.dim();
        let mut lo = a.cells()[0].0;
        let mut hi = lo;
        for c in a.cells() {
            for i in 0..d {
                lo[i] = lo[i].min(c.0[i]);
                hi[i] = hi[i].max(c.0[i]);
            }
        }
        for i in 0..d {
            lo[i] -= pad;
            hi[i] += pad;
        }
        LatticeRegion { d, lo: Site(lo), hi: Site(hi) }
    }

    pub fn centered(d: usize, radius: i32) -> Self {
        let mut lo = [0; 3];
        let mut hi = [0; 3];
        for i in 0..d {
            lo[i] = -radius;
            hi[i] = radius;
        }
        LatticeRegion { d, lo: Site(lo), hi: Site(hi) }
    }

    pub fn contains(&self, s: &Site) -> bool {
        (0..3).all(|i| self.lo.0[i] <= s.0[i] && s.0[i] <= self.hi.0[i])
    }

    pub fn on_boundary(&self, s: &Site) -> bool {
        (0..self.d).any(|i| s.0[i] == self.lo.0[i] || s.0[i] == self.hi.0[i])
    }

    fn extent(&self, i: usize) -> usize {
        (self.hi.0[i] - self.lo.0[i] + 1) as usize
    }

    pub fn len(&self) -> usize {
        (0..3).map(|i| self.extent(i)).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, s: &Site) -> Option<usize> {
        if !self.contains(s) {
            return None;
        }
        let mut idx = 0;
        for i in 0..3 {
            idx = idx * self.extent(i) + (s.0[i] - self.lo.0[i]) as usize;
        }
        Some(idx)
    }

    pub fn site(&self, mut idx: usize) -> Site {
        let mut c = [0; 3];
        for i in (0..3).rev() {
            let e = self.extent(i);
            c[i] = self.lo.0[i] + (idx % e) as i32;
            idx /= e;
        }
        Site(c)
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.len()).map(|i| self.site(i))
    }
}

/// Read access to a 0/1 field on a lattice region.
pub trait SiteValues {
    fn region(&self) -> &LatticeRegion;
    /// Value at a site of the region.
    fn open(&self, s: &Site) -> bool;
}

/// Materialized 0/1 field with its declared dependence radius.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteField {
    region: LatticeRegion,
    values: Vec<u8>,
    /// Declared dependence range (0 for i.i.d. fields).
    pub k: u32,
    /// Lower bound on `P(open)` known from the construction, if any.
    pub rho_floor: Option<f64>,
}

impl SiteField {
    pub fn constant(region: LatticeRegion, open: bool) -> Self {
        SiteField { region, values: vec![u8::from(open); region.len()], k: 0, rho_floor: None }
    }

    pub fn from_fn(region: LatticeRegion, k: u32, f: impl Fn(&Site) -> bool) -> Self {
        let values = region.sites().map(|s| u8::from(f(&s))).collect();
        SiteField { region, values, k, rho_floor: None }
    }

    pub fn get(&self, s: &Site) -> Option<bool> {
        self.region.index(s).map(|i| self.values[i] == 1)
    }

    pub fn set(&mut self, s: &Site, open: bool) {
        let i = self.region.index(s).expect("site inside the field region");
        self.values[i] = u8::from(open);
    }

    pub fn open_fraction(&self) -> f64 {
        self.values.iter().map(|&v| f64::from(v)).sum::<f64>() / self.values.len() as f64
    }
}

impl SiteValues for SiteField {
    fn region(&self) -> &LatticeRegion {
        &self.region
    }
    fn open(&self, s: &Site) -> bool {
        self.get(s).expect("site inside the field region")
    }
}

/// I.i.d. Bernoulli(`rho`) field over `region`, one draw per site in region
/// order from the `(seed, replicate)` stream.
pub fn sample_iid(region: LatticeRegion, rho: f64, seed: u64, replicate: u64) -> Result<SiteField> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!("rho must lie in (0, 1), got {rho}")));
    }
    let mut rng = stream(seed, replicate, TAG_SITES);
    let values = (0..region.len()).map(|_| u8::from(rng.random::<f64>() < rho)).collect();
    Ok(SiteField { region, values, k: 0, rho_floor: Some(rho) })
}

/// I.i.d. Bernoulli(`rho`) field evaluated on demand from a hash of the site,
/// so a large region costs nothing until it is explored.
#[derive(Debug, Clone, Copy)]
pub struct HashedIid {
    region: LatticeRegion,
    key: u64,
    rho: f64,
}

impl HashedIid {
    pub fn new(region: LatticeRegion, rho: f64, seed: u64, replicate: u64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidArgument(format!("rho must lie in (0, 1), got {rho}")));
        }
        Ok(HashedIid { region, key: mix(&[seed, replicate, TAG_SITES]), rho })
    }

    pub fn materialize(&self) -> SiteField {
        let mut f = SiteField::from_fn(self.region, 0, |s| self.open(s));
        f.rho_floor = Some(self.rho);
        f
    }
}

impl SiteValues for HashedIid {
    fn region(&self) -> &LatticeRegion {
        &self.region
    }
    fn open(&self, s: &Site) -> bool {
        unit_at(self.key, &s.0) < self.rho
    }
}

/// Closed clusters meeting an animal.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    /// Sorted by smallest cell.
    pub clusters: Vec<LatticeAnimal>,
    pub site_to_cluster: HashMap<Site, usize>,
}

impl ClusterSet {
    pub fn sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(LatticeAnimal::len).collect()
    }

    fn from_cell_lists(d: usize, mut lists: Vec<Vec<Site>>) -> Self {
        for l in &mut lists {
            l.sort_unstable();
        }
        lists.sort();
        let mut site_to_cluster = HashMap::new();
        let clusters = lists
            .into_iter()
            .enumerate()
            .map(|(i, cells)| {
                for c in &cells {
                    site_to_cluster.insert(*c, i);
                }
                LatticeAnimal::from_sorted_unchecked(d, cells)
            })
            .collect();
        ClusterSet { clusters, site_to_cluster }
    }
}

fn check_inside<F: SiteValues + ?Sized>(field: &F, a: &LatticeAnimal) -> Result<()> {
    match a.cells().iter().find(|c| !field.region().contains(c)) {
        Some(c) => Err(Error::InvalidArgument(format!("site {c:?} of the animal lies outside the field region"))),
        None => Ok(()),
    }
}

/// Closed clusters of a materialized field that meet `a`, by union-find
/// over the whole region.
pub fn closed_clusters(field: &SiteField, a: &LatticeAnimal) -> Result<ClusterSet> {
    check_inside(field, a)?;
    let region = field.region;
    let d = region.d;
    let mut uf = UnionFind::new(region.len());
    for (i, s) in region.sites().enumerate() {
        if field.values[i] != 0 {
            continue;
        }
        for k in 0..d {
            let mut n = s;
            n.0[k] += 1;
            if let Some(j) = region.index(&n) {
                if field.values[j] == 0 {
                    uf.union(i, j);
                }
            }
        }
    }
    let mut roots: Vec<usize> = Vec::new();
    for c in a.cells() {
        let i = region.index(c).expect("checked above");
        if field.values[i] == 0 {
            let r = uf.find(i);
            if !roots.contains(&r) {
                roots.push(r);
            }
        }
    }
    let mut lists: Vec<Vec<Site>> = vec![Vec::new(); roots.len()];
    for (i, s) in region.sites().enumerate() {
        if field.values[i] == 0 {
            let r = uf.find(i);
            if let Some(k) = roots.iter().position(|&x| x == r) {
                if region.on_boundary(&s) {
                    return Err(Error::TruncatedCluster);
                }
                lists[k].push(s);
            }
        }
    }
    Ok(ClusterSet::from_cell_lists(d, lists))
}

/// Same clusters as [`closed_clusters`], found by flood fill from the sites
/// of `a`; works on lazily evaluated fields.
pub fn closed_clusters_flood<F: SiteValues + ?Sized>(field: &F, a: &LatticeAnimal) -> Result<ClusterSet> {
    check_inside(field, a)?;
    let region = *field.region();
    let mut seen: HashSet<Site> = HashSet::new();
    let mut lists = Vec::new();
    for &start in a.cells() {
        if seen.contains(&start) || field.open(&start) {
            continue;
        }
        seen.insert(start);
        let mut stack = vec![start];
        let mut cells = Vec::new();
        while let Some(s) = stack.pop() {
            if region.on_boundary(&s) {
                return Err(Error::TruncatedCluster);
            }
            cells.push(s);
            for n in s.neighbors(region.d) {
                if !seen.contains(&n) && !field.open(&n) {
                    seen.insert(n);
                    stack.push(n);
                }
            }
        }
        lists.push(cells);
    }
    Ok(ClusterSet::from_cell_lists(region.d, lists))
}

/// `closure(A)` together with the closures of all closed clusters meeting
/// `A`, sorted.
pub fn cluster_hull<F: SiteValues + ?Sized>(field: &F, a: &LatticeAnimal) -> Result<Vec<Site>> {
    let clusters = closed_clusters_flood(field, a)?;
    let mut out = closure(a);
    for cl in &clusters.clusters {
        out.extend(closure(cl));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Minimum number of open sites over animals containing the origin with at
/// least `s` sites (attained at exactly `s`). Exact branch and bound for
/// `s <= exact_guard`, beam search (an upper bound) above.
pub fn min_open_density<F: SiteValues + ?Sized>(field: &F, s: usize, exact_guard: usize) -> Result<Extremum<LatticeAnimal>> {
    if s == 0 {
        return Err(Error::InvalidArgument("s must be at least 1".into()));
    }
    let region = field.region();
    let reach = LatticeRegion::around(&LatticeAnimal::single(region.d, Site::ORIGIN), s as i32 - 1);
    if !(region.contains(&reach.lo) && region.contains(&reach.hi)) {
        return Err(Error::InvalidArgument(format!("field region does not cover all animals of size {s}")));
    }
    if s <= exact_guard {
        Ok(min_open_exact(field, s))
    } else {
        Ok(min_open_beam(field, s, BEAM_WIDTH))
    }
}

struct MinOpen<'f, F: ?Sized> {
    field: &'f F,
    s: usize,
    sum: usize,
    best: usize,
    best_set: Vec<Site>,
    /// Stop as soon as some animal reaches `sum <= target`.
    target: Option<usize>,
    found: bool,
}

impl<F: SiteValues + ?Sized> Visitor<Site> for MinOpen<'_, F> {
    fn enter(&mut self, v: Site, set: &[Site]) -> bool {
        self.sum += usize::from(self.field.open(&v));
        if self.found || self.sum >= self.best {
            return false;
        }
        if set.len() == self.s {
            self.best = self.sum;
            self.best_set = set.to_vec();
            if self.target.is_some_and(|t| self.sum <= t) {
                self.found = true;
            }
            return false;
        }
        true
    }
    fn leave(&mut self, v: Site) {
        self.sum -= usize::from(self.field.open(&v));
    }
}

fn min_open_exact<F: SiteValues + ?Sized>(field: &F, s: usize) -> Extremum<LatticeAnimal> {
    let d = field.region().d;
    let mut m = MinOpen { field, s, sum: 0, best: s + 1, best_set: Vec::new(), target: None, found: false };
    enumerate_connected(&LatticeGraph { d }, Site::ORIGIN, s, &[], &mut m);
    let mut cells = m.best_set;
    cells.sort_unstable();
    Extremum { value: m.best as u64, witness: LatticeAnimal::from_sorted_unchecked(d, cells), heuristic: false }
}

fn min_open_beam<F: SiteValues + ?Sized>(field: &F, s: usize, width: usize) -> Extremum<LatticeAnimal> {
    let d = field.region().d;
    let cost = |c: &Site| u64::from(field.open(c));
    let mut beam: Vec<(u64, Vec<Site>)> = vec![(cost(&Site::ORIGIN), vec![Site::ORIGIN])];
    for _ in 1..s {
        let mut next: HashMap<Vec<Site>, u64> = HashMap::new();
        for (value, cells) in &beam {
            for c in cells {
                for n in c.neighbors(d) {
                    if let Err(pos) = cells.binary_search(&n) {
                        let mut grown = cells.clone();
                        grown.insert(pos, n);
                        next.insert(grown, value + cost(&n));
                    }
                }
            }
        }
        let mut ranked: Vec<(u64, Vec<Site>)> = next.into_iter().map(|(c, v)| (v, c)).collect();
        ranked.sort();
        ranked.truncate(width);
        beam = ranked;
    }
    let (value, cells) = beam.swap_remove(0);
    Extremum { value, witness: LatticeAnimal::from_sorted_unchecked(d, cells), heuristic: true }
}

/// Whether some animal containing the origin with exactly `s` sites has at
/// most `r` open sites, i.e. whether the minimum over animals of size at
/// least `s` is at most `r`. Exact, with early exit.
pub fn low_density_animal_exists<F: SiteValues + ?Sized>(field: &F, s: usize, r: usize) -> bool {
    let d = field.region().d;
    let mut m = MinOpen { field, s, sum: 0, best: r + 1, best_set: Vec::new(), target: Some(r), found: false };
    enumerate_connected(&LatticeGraph { d }, Site::ORIGIN, s, &[], &mut m);
    m.found
}

/// Outcome of a Monte Carlo comparison of the two sides of the cluster
/// product inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterProductReport {
    pub rho: f64,
    pub animal_size: usize,
    pub cap: u32,
    /// Estimate of `E prod_{Cl meeting A} f(#Cl)` and its standard error.
    pub lhs: f64,
    pub lhs_se: f64,
    /// Estimate of `(E f(#Cl_0))^{#A}` and its delta-method standard error.
    pub rhs: f64,
    pub rhs_se: f64,
    pub sigma: f64,
    pub replicates: u64,
    /// Replicates dropped because a cluster reached the padding boundary.
    pub discarded: u64,
    /// Largest cluster seen on either side.
    pub max_cluster: usize,
    pub pass: bool,
}

/// Region padding around the animal for cluster computations.
pub const CLUSTER_PAD: i32 = 50;

#[derive(Default, Clone, Copy)]
struct Moments {
    n: u64,
    sum: f64,
    sum_sq: f64,
    discarded: u64,
    max_cluster: usize,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }
    fn merge(mut self, o: Moments) -> Moments {
        self.n += o.n;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
        self.discarded += o.discarded;
        self.max_cluster = self.max_cluster.max(o.max_cluster);
        self
    }
    fn mean(&self) -> f64 {
        self.sum / self.n.max(1) as f64
    }
    fn se(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let var = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

fn capped_exp(size: usize, cap: u32) -> f64 {
    (size.min(cap as usize) as f64).exp()
}

/// Estimates both sides of the cluster product inequality for
/// `f(k) = e^{min(k, cap)}` using independent replicate streams for the two
/// sides. Passes when `lhs <= rhs + 3 sigma`.
pub fn verify_cluster_product(rho: f64, a: &LatticeAnimal, cap: u32, replicates: u64, seed: u64) -> Result<ClusterProductReport> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!("rho must lie in (0, 1), got {rho}")));
    }
    let lhs_region = LatticeRegion::around(a, CLUSTER_PAD);
    let origin = LatticeAnimal::single(a.dim(), Site::ORIGIN);
    let rhs_region = LatticeRegion::around(&origin, CLUSTER_PAD);
    let rhs_seed = mix(&[seed, TAG_AUX]);
    let side = |region: LatticeRegion, target: &LatticeAnimal, seed: u64| -> Result<Moments> {
        (0..replicates)
            .into_par_iter()
            .map(|rep| -> Result<Moments> {
                let field = HashedIid::new(region, rho, seed, rep)?;
                let mut m = Moments::default();
                match closed_clusters_flood(&field, target) {
                    Ok(cs) => {
                        let sizes = cs.sizes();
                        m.max_cluster = sizes.iter().copied().max().unwrap_or(0);
                        m.push(sizes.iter().map(|&k| capped_exp(k, cap)).product());
                    }
                    Err(Error::TruncatedCluster) => m.discarded += 1,
                    Err(e) => return Err(e),
                }
                Ok(m)
            })
            .try_reduce(Moments::default, |x, y| Ok(x.merge(y)))
    };
    let lhs = side(lhs_region, a, seed)?;
    let rhs = side(rhs_region, &origin, rhs_seed)?;
    let k = a.len() as i32;
    let m = rhs.mean();
    let rhs_value = m.powi(k);
    let rhs_se = f64::from(k) * m.powi(k - 1) * rhs.se();
    let sigma = (lhs.se().powi(2) + rhs_se.powi(2)).sqrt();
    let lhs_value = lhs.mean();
    Ok(ClusterProductReport {
        rho,
        animal_size: a.len(),
        cap,
        lhs: lhs_value,
        lhs_se: lhs.se(),
        rhs: rhs_value,
        rhs_se,
        sigma,
        replicates,
        discarded: lhs.discarded + rhs.discarded,
        max_cluster: lhs.max_cluster.max(rhs.max_cluster),
        pass: lhs_value <= rhs_value + 3.0 * sigma,
    })
}

/// Bounds on `P(min over animals of size >= s of open count <= r)` for an
/// i.i.d. field with closed probability `1 - rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpenDensityBounds {
    /// `alpha^s C(s, r) (1-rho)^{s-r}`.
    pub counting: f64,
    /// `(2 alpha sqrt(1-rho))^s`, valid for `s >= 2r`.
    pub intermediate: f64,
    /// Union bound with the exact number of size-`s` animals in place of
    /// `alpha^s`.
    pub exact_count: Option<f64>,
}

pub fn open_density_bounds(rho: f64, s: usize, r: usize, d: usize) -> Result<OpenDensityBounds> {
    let alpha = alpha_bound(d as u32)? as f64;
    let q = 1.0 - rho;
    let choose = binomial_coefficient(s as u64, r as u64);
    let tail = q.powi((s - r.min(s)) as i32);
    let counting = alpha.powi(s as i32) * choose * tail;
    let intermediate = (2.0 * alpha * q.sqrt()).powi(s as i32);
    let exact_count = count_animals_by_size(s, d).ok().map(|c| c[s - 1] as f64 * choose * tail);
    Ok(OpenDensityBounds { counting, intermediate, exact_count })
}

/// Monte Carlo tail of the open-density minimum on i.i.d. fields, compared
/// with the intermediate bound `(2 alpha sqrt(1-rho))^s` (capped at 1).
pub fn open_density_tail(rho: f64, s: usize, r: usize, replicates: u64, seed: u64) -> Result<(TailEstimate, OpenDensityBounds)> {
    if s < 2 * r {
        return Err(Error::InvalidArgument(format!("the bound needs s >= 2r, got s = {s}, r = {r}")));
    }
    let region = LatticeRegion::centered(2, s as i32);
    let tally = (0..replicates)
        .into_par_iter()
        .map(|rep| -> Result<Tally> {
            let field = HashedIid::new(region, rho, seed, rep)?;
            let mut t = Tally::default();
            t.record(low_density_animal_exists(&field, s, r));
            Ok(t)
        })
        .try_reduce(Tally::default, |mut a, b| {
            a.merge(&b);
            Ok(a)
        })?;
    let bounds = open_density_bounds(rho, s, r, 2)?;
    let params = Params { d: Some(2), p: Some(rho), s: Some(s as f64), r: Some(r as f64), ..Params::default() };
    Ok((TailEstimate::from_tally("lemma2", params, tally, Some(bounds.intermediate.min(1.0))), bounds))
}

/// Default marginal threshold `p-bar` above which dependent fields are
/// expected to satisfy the open-density tail bound.
pub const DEFAULT_P_BAR: f64 = 0.99;

/// Monte Carlo estimate of `P(min over animals of size >= s of sum X <= r)`
/// for a dependent field produced per replicate by `sample`, compared with
/// `e^{-s}`.
///
/// The empirical open fraction over all sampled sites is the marginal
/// estimate; if it falls below `p_bar` the hypothesis is reported as
/// violated instead of a bound failure.
pub fn block_density_check<F, S>(s: usize, r: usize, replicates: u64, p_bar: f64, params: Params, sample: S) -> Result<(TailEstimate, f64)>
where
    F: SiteValues,
    S: Fn(u64) -> Result<F> + Sync,
{
    #[derive(Default)]
    struct Acc {
        tally: Tally,
        open: u64,
        sites: u64,
    }
    let acc = (0..replicates)
        .into_par_iter()
        .map(|rep| -> Result<Acc> {
            let field = sample(rep)?;
            let mut a = Acc::default();
            let reach = LatticeRegion::centered(field.region().d, s as i32 - 1);
            for site in reach.sites() {
                a.sites += 1;
                a.open += u64::from(field.open(&site));
            }
            a.tally.record(low_density_animal_exists(&field, s, r));
            Ok(a)
        })
        .try_reduce(Acc::default, |mut x, y| {
            x.tally.merge(&y.tally);
            x.open += y.open;
            x.sites += y.sites;
            Ok(x)
        })?;
    let marginal = acc.open as f64 / acc.sites.max(1) as f64;
    if marginal < p_bar {
        return Err(Error::HypothesisViolated(format!("estimated marginal {marginal:.4} is below p-bar = {p_bar}")));
    }
    let bound = (-(s as f64)).exp();
    Ok((TailEstimate::from_tally("lemma5", params, acc.tally, Some(bound)), marginal))
}
