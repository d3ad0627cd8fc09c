//! Lattice animals on `Z^d` (d = 2 or 3), their boundaries and box unions,
//! and greedy-animal weight maximization.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::connected::{enumerate_connected, Graph, Visitor};
use crate::ppp::PointSet;
use crate::{Error, Result};

/// A lattice site. Unused trailing coordinates are zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site(pub [i32; 3]);

impl Site {
    pub const ORIGIN: Site = Site([0, 0, 0]);

    pub fn new2(x: i32, y: i32) -> Site {
        Site([x, y, 0])
    }

    pub fn from_slice(c: &[i32]) -> Site {
        let mut s = [0; 3];
        s[..c.len()].copy_from_slice(c);
        Site(s)
    }

    pub fn x(&self) -> i32 {
        self.0[0]
    }

    pub fn y(&self) -> i32 {
        self.0[1]
    }

    pub fn xy(&self) -> [i32; 2] {
        [self.0[0], self.0[1]]
    }

    pub fn offset(&self, d: [i32; 3]) -> Site {
        Site([self.0[0] + d[0], self.0[1] + d[1], self.0[2] + d[2]])
    }

    pub fn linf(&self, other: &Site) -> i32 {
        (0..3).map(|i| (self.0[i] - other.0[i]).abs()).max().unwrap_or(0)
    }

    pub fn l1(&self, other: &Site) -> i32 {
        (0..3).map(|i| (self.0[i] - other.0[i]).abs()).sum()
    }

    /// The `2d` nearest neighbours.
    pub fn neighbors(&self, d: usize) -> impl Iterator<Item = Site> + '_ {
        (0..2 * d).map(move |k| {
            let mut s = self.0;
            s[k / 2] += if k % 2 == 0 { 1 } else { -1 };
            Site(s)
        })
    }

    /// The `3^d - 1` sites at l-infinity distance 1.
    pub fn moore(&self, d: usize) -> Vec<Site> {
        let r = |i: usize| if i < d { -1..=1 } else { 0..=0 };
        let mut out = Vec::with_capacity(26);
        for a in r(0) {
            for b in r(1) {
                for c in r(2) {
                    if (a, b, c) != (0, 0, 0) {
                        out.push(self.offset([a, b, c]));
                    }
                }
            }
        }
        out
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.0[0], self.0[1], self.0[2])
    }
}

/// The nearest-neighbour lattice `Z^d` as a graph for the enumerator.
#[derive(Debug, Clone, Copy)]
pub struct LatticeGraph {
    pub d: usize,
}

impl Graph for LatticeGraph {
    type Node = Site;
    fn neighbors(&self, v: Site, out: &mut Vec<Site>) {
        out.extend(v.neighbors(self.d));
    }
}

/// A finite, nonempty, nearest-neighbour connected subset of `Z^d`, stored
/// as a sorted cell list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeAnimal {
    d: usize,
    cells: Vec<Site>,
}

impl LatticeAnimal {
    pub fn new(d: usize, mut cells: Vec<Site>) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidArgument(format!("dimension {d} is not supported")));
        }
        cells.sort_unstable();
        cells.dedup();
        if cells.is_empty() {
            return Err(Error::InvalidArgument("lattice animal must be nonempty".into()));
        }
        if cells.iter().any(|c| c.0[d..].iter().any(|&x| x != 0)) {
            return Err(Error::InvalidArgument(format!("cell outside Z^{d}")));
        }
        let a = LatticeAnimal { d, cells };
        if !a.is_connected() {
            return Err(Error::InvalidArgument("lattice animal must be connected".into()));
        }
        Ok(a)
    }

    pub fn from_xy(cells: &[[i32; 2]]) -> Result<Self> {
        LatticeAnimal::new(2, cells.iter().map(|c| Site::new2(c[0], c[1])).collect())
    }

    pub fn single(d: usize, s: Site) -> Self {
        LatticeAnimal { d, cells: vec![s] }
    }

    /// `w x h` rectangle with lower-left corner at the origin.
    pub fn rectangle(w: i32, h: i32) -> Result<Self> {
        let mut cells = Vec::new();
        for x in 0..w {
            for y in 0..h {
                cells.push(Site::new2(x, y));
            }
        }
        LatticeAnimal::new(2, cells)
    }

    pub(crate) fn from_sorted_unchecked(d: usize, cells: Vec<Site>) -> Self {
        LatticeAnimal { d, cells }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn cells(&self) -> &[Site] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, s: &Site) -> bool {
        self.cells.binary_search(s).is_ok()
    }

    pub fn translate(&self, by: Site) -> LatticeAnimal {
        let mut cells: Vec<Site> = self.cells.iter().map(|c| c.offset(by.0)).collect();
        cells.sort_unstable();
        LatticeAnimal { d: self.d, cells }
    }

    /// Flood fill from the first cell.
    pub fn is_connected(&self) -> bool {
        let set: HashSet<Site> = self.cells.iter().copied().collect();
        let mut seen = HashSet::new();
        let mut stack = vec![self.cells[0]];
        seen.insert(self.cells[0]);
        while let Some(c) = stack.pop() {
            for n in c.neighbors(self.d) {
                if set.contains(&n) && seen.insert(n) {
                    stack.push(n);
                }
            }
        }
        seen.len() == set.len()
    }

    /// `x,y;x,y;...` with cells in sorted order (all `d` coordinates).
    pub fn to_line(&self) -> String {
        let mut s = String::new();
        for c in &self.cells {
            let parts: Vec<String> = c.0[..self.d].iter().map(i32::to_string).collect();
            s.push_str(&parts.join(","));
            s.push(';');
        }
        s
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let mut cells = Vec::new();
        let mut d = None;
        for part in line.trim().split(';').filter(|p| !p.is_empty()) {
            let coords: Vec<i32> = part
                .split(',')
                .map(|t| t.trim().parse::<i32>().map_err(|e| Error::Parse(format!("{part:?}: {e}"))))
                .collect::<Result<_>>()?;
            if *d.get_or_insert(coords.len()) != coords.len() || coords.len() > 3 {
                return Err(Error::Parse(format!("inconsistent cell {part:?}")));
            }
            cells.push(Site::from_slice(&coords));
        }
        LatticeAnimal::new(d.unwrap_or(2), cells)
    }
}

fn enumeration_guard(d: usize) -> Result<usize> {
    match d {
        2 => Ok(8),
        3 => Ok(5),
        _ => Err(Error::InvalidArgument(format!("animal enumeration supports d = 2 or 3, got {d}"))),
    }
}

fn check_guard(s_max: usize, d: usize) -> Result<()> {
    let guard = enumeration_guard(d)?;
    if s_max > guard {
        return Err(Error::Capacity(format!("animal enumeration in d = {d} is limited to s <= {guard}, asked for {s_max}")));
    }
    Ok(())
}

/// All lattice animals containing the origin with at most `s_max` cells,
/// each once, sorted by size and then by cell list.
pub fn enumerate_animals_containing_origin(s_max: usize, d: usize) -> Result<Vec<LatticeAnimal>> {
    check_guard(s_max, d)?;
    struct Gather {
        d: usize,
        out: Vec<LatticeAnimal>,
    }
    impl Visitor<Site> for Gather {
        fn enter(&mut self, _v: Site, set: &[Site]) -> bool {
            let mut cells = set.to_vec();
            cells.sort_unstable();
            self.out.push(LatticeAnimal::from_sorted_unchecked(self.d, cells));
            true
        }
        fn leave(&mut self, _v: Site) {}
    }
    let mut g = Gather { d, out: Vec::new() };
    enumerate_connected(&LatticeGraph { d }, Site::ORIGIN, s_max, &[], &mut g);
    g.out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cells.cmp(&b.cells)));
    Ok(g.out)
}

/// Number of animals containing the origin of each exact size `1..=s_max`
/// (entry `k` is size `k + 1`), without materializing them.
pub fn count_animals_by_size(s_max: usize, d: usize) -> Result<Vec<u64>> {
    check_guard(s_max, d)?;
    struct Count(Vec<u64>);
    impl Visitor<Site> for Count {
        fn enter(&mut self, _v: Site, set: &[Site]) -> bool {
            self.0[set.len() - 1] += 1;
            true
        }
        fn leave(&mut self, _v: Site) {}
    }
    let mut c = Count(vec![0; s_max]);
    enumerate_connected(&LatticeGraph { d }, Site::ORIGIN, s_max, &[], &mut c);
    Ok(c.0)
}

/// The counting constant `(2d)^{2d}` with `#Phi_{<=s} <= alpha^s`.
pub fn alpha_bound(d: u32) -> Result<u64> {
    if d == 0 {
        return Err(Error::InvalidArgument("d must be at least 1".into()));
    }
    (2 * u64::from(d))
        .checked_pow(2 * d)
        .ok_or_else(|| Error::Capacity(format!("(2d)^(2d) overflows for d = {d}")))
}

/// Sites outside `a` at l-infinity distance 1 from it, sorted.
pub fn linf_boundary(a: &LatticeAnimal) -> Vec<Site> {
    let mut out: Vec<Site> = a.cells.iter().flat_map(|c| c.moore(a.d)).filter(|s| !a.contains(s)).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// `a` together with its l-infinity boundary.
pub fn closure(a: &LatticeAnimal) -> Vec<Site> {
    let mut out = linf_boundary(a);
    out.extend_from_slice(&a.cells);
    out.sort_unstable();
    out
}

/// Union of the side-`L` boxes `Lz + [-L/2, L/2)^d` over `z` in an animal.
#[derive(Debug, Clone)]
pub struct BoxUnion {
    d: usize,
    l: f64,
    cells: Vec<Site>,
}

impl BoxUnion {
    pub fn side(&self) -> f64 {
        self.l
    }

    pub fn cells(&self) -> &[Site] {
        &self.cells
    }

    fn lattice_index(&self, x: f64) -> i32 {
        (x / self.l + 0.5).floor() as i32
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let mut c = [0; 3];
        for i in 0..self.d {
            c[i] = self.lattice_index(x[i]);
        }
        self.cells.binary_search(&Site(c)).is_ok()
    }

    /// Euclidean distance from `x` to the closure of the union.
    pub fn distance(&self, x: &[f64]) -> f64 {
        self.cells.iter().map(|c| self.distance_to_box(c, x)).fold(f64::INFINITY, f64::min)
    }

    pub fn distance_to_box(&self, c: &Site, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.d {
            let center = self.l * f64::from(c.0[i]);
            let gap = ((x[i] - center).abs() - 0.5 * self.l).max(0.0);
            s += gap * gap;
        }
        s.sqrt()
    }

    /// Bounding box of the union, `(lo, hi)`.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.d];
        let mut hi = vec![f64::NEG_INFINITY; self.d];
        for c in &self.cells {
            for i in 0..self.d {
                let center = self.l * f64::from(c.0[i]);
                lo[i] = lo[i].min(center - 0.5 * self.l);
                hi[i] = hi[i].max(center + 0.5 * self.l);
            }
        }
        (lo, hi)
    }
}

/// Closed `L/2`-neighbourhood of a [`BoxUnion`].
#[derive(Debug, Clone)]
pub struct EnlargedUnion {
    pub base: BoxUnion,
    pub radius: f64,
}

impl EnlargedUnion {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.base.distance(x) <= self.radius
    }

    /// How far `x` lies outside the enlarged region (0 when inside).
    pub fn excess(&self, x: &[f64]) -> f64 {
        (self.base.distance(x) - self.radius).max(0.0)
    }
}

pub fn box_union(a: &LatticeAnimal, l: f64) -> Result<BoxUnion> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidArgument(format!("box side must be positive, got {l}")));
    }
    Ok(BoxUnion { d: a.d, l, cells: a.cells.clone() })
}

pub fn enlarged_union(a: &LatticeAnimal, l: f64) -> Result<EnlargedUnion> {
    Ok(EnlargedUnion { base: box_union(a, l)?, radius: 0.5 * l })
}

/// Nonnegative integer weights on sites; unlisted sites weigh 0.
#[derive(Debug, Clone, Default)]
pub struct WeightField {
    values: HashMap<Site, u64>,
}

impl WeightField {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, s: Site, w: u64) {
        if w == 0 {
            self.values.remove(&s);
        } else {
            self.values.insert(s, w);
        }
    }

    pub fn get(&self, s: &Site) -> u64 {
        self.values.get(s).copied().unwrap_or(0)
    }

    pub fn total(&self, cells: &[Site]) -> u64 {
        cells.iter().map(|c| self.get(c)).sum()
    }

    /// Box counts `N_z` of a planar point set for unit boxes
    /// `z + [-1/2, 1/2)^2`.
    pub fn from_box_counts(points: &PointSet, side: f64) -> Self {
        let mut f = WeightField::new();
        for p in points.iter() {
            let z = Site::new2((p[0] / side + 0.5).floor() as i32, (p[1] / side + 0.5).floor() as i32);
            *f.values.entry(z).or_insert(0) += 1;
        }
        f
    }
}

/// Result of an extremal search over animals or polyominoes.
#[derive(Debug, Clone, PartialEq)]
pub struct Extremum<T> {
    pub value: u64,
    pub witness: T,
    /// `true` when the value comes from a heuristic rather than an exact
    /// search.
    pub heuristic: bool,
}

pub const DEFAULT_EXACT_GUARD: usize = 7;
pub const BEAM_WIDTH: usize = 64;

/// Maximum of `sum_{z in A} w_z` over animals `A` containing the origin with
/// `#A <= s`. Exact for `s <= exact_guard`, beam search otherwise.
pub fn max_weight_animal(weights: &WeightField, s: usize, exact_guard: usize, d: usize) -> Result<Extremum<LatticeAnimal>> {
    if s == 0 {
        return Err(Error::InvalidArgument("s must be at least 1".into()));
    }
    enumeration_guard(d)?;
    if s <= exact_guard {
        Ok(max_weight_exact(weights, s, d))
    } else {
        Ok(max_weight_beam(weights, s, d, BEAM_WIDTH))
    }
}

fn max_weight_exact(weights: &WeightField, s: usize, d: usize) -> Extremum<LatticeAnimal> {
    struct Best<'w> {
        weights: &'w WeightField,
        sum: u64,
        best: u64,
        best_set: Vec<Site>,
    }
    impl Visitor<Site> for Best<'_> {
        fn enter(&mut self, v: Site, set: &[Site]) -> bool {
            self.sum += self.weights.get(&v);
            let mut sorted = set.to_vec();
            sorted.sort_unstable();
            if self.sum > self.best || (self.sum == self.best && sorted < self.best_set) {
                self.best = self.sum;
                self.best_set = sorted;
            }
            true
        }
        fn leave(&mut self, v: Site) {
            self.sum -= self.weights.get(&v);
        }
    }
    let mut b = Best { weights, sum: 0, best: weights.get(&Site::ORIGIN), best_set: vec![Site::ORIGIN] };
    enumerate_connected(&LatticeGraph { d }, Site::ORIGIN, s, &[], &mut b);
    Extremum { value: b.best, witness: LatticeAnimal::from_sorted_unchecked(d, b.best_set), heuristic: false }
}

fn max_weight_beam(weights: &WeightField, s: usize, d: usize, width: usize) -> Extremum<LatticeAnimal> {
    let mut beam: Vec<(u64, Vec<Site>)> = vec![(weights.get(&Site::ORIGIN), vec![Site::ORIGIN])];
    let mut best = beam[0].clone();
    for _ in 1..s {
        let mut next: HashMap<Vec<Site>, u64> = HashMap::new();
        for (value, cells) in &beam {
            for c in cells {
                for n in c.neighbors(d) {
                    if let Err(pos) = cells.binary_search(&n) {
                        let mut grown = cells.clone();
                        grown.insert(pos, n);
                        next.insert(grown, value + weights.get(&n));
                    }
                }
            }
        }
        let mut ranked: Vec<(u64, Vec<Site>)> = next.into_iter().map(|(c, v)| (v, c)).collect();
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        ranked.truncate(width);
        if let Some(top) = ranked.first() {
            if top.0 > best.0 {
                best = top.clone();
            }
        }
        beam = ranked;
    }
    Extremum { value: best.0, witness: LatticeAnimal::from_sorted_unchecked(d, best.1), heuristic: true }
}
