//! Homogeneous and bounded-density Poisson point processes on boxes.

use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::rng::{stream, TAG_POINTS};
use crate::{Error, Result};

/// Axis-aligned box `[lo, hi)`. Used both as the simulation window and as a
/// counting region.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Window {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || !(2..=3).contains(&lo.len()) {
            return Err(Error::InvalidWindow(format!(
                "dimension must be 2 or 3 (lo has {}, hi has {})",
                lo.len(),
                hi.len()
            )));
        }
        for (a, b) in lo.iter().zip(&hi) {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidWindow(format!("need lo < hi, got {a} and {b}")));
            }
        }
        Ok(Window { lo, hi })
    }

    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Window::new(vec![x0, y0], vec![x1, y1])
    }

    /// Square `[-half, half)^2`.
    pub fn centered_square(half: f64) -> Result<Self> {
        Window::rect(-half, -half, half, half)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    /// Half-open membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().enumerate().all(|(i, &v)| self.lo[i] <= v && v < self.hi[i])
    }

    /// Closed-box containment of another box.
    pub fn contains_box(&self, lo: &[f64], hi: &[f64]) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= lo[i] && hi[i] <= self.hi[i])
    }

    pub fn intersects(&self, other: &Window) -> bool {
        self.dim() == other.dim() && (0..self.dim()).all(|i| self.lo[i] < other.hi[i] && other.lo[i] < self.hi[i])
    }
}

pub type DensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Intensity measure comparable to Lebesgue measure:
/// `c_mu^{-1} vol(A) <= mu(A) <= c_mu vol(A)`.
#[derive(Clone)]
pub enum IntensityModel {
    Homogeneous { lambda: f64 },
    BoundedDensity { density: DensityFn, c_mu: f64 },
}

impl fmt::Debug for IntensityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntensityModel::Homogeneous { lambda } => write!(f, "Homogeneous {{ lambda: {lambda} }}"),
            IntensityModel::BoundedDensity { c_mu, .. } => write!(f, "BoundedDensity {{ c_mu: {c_mu} }}"),
        }
    }
}

impl IntensityModel {
    pub fn homogeneous(lambda: f64) -> Self {
        IntensityModel::Homogeneous { lambda }
    }

    pub fn bounded_density<F>(density: F, c_mu: f64) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        IntensityModel::BoundedDensity { density: Arc::new(density), c_mu }
    }

    /// Smallest `c_mu >= 1` for which the comparison with Lebesgue measure
    /// holds. For a homogeneous process this is `max(lambda, 1/lambda)`.
    pub fn c_mu(&self) -> f64 {
        match self {
            IntensityModel::Homogeneous { lambda } => lambda.max(1.0 / lambda),
            IntensityModel::BoundedDensity { c_mu, .. } => *c_mu,
        }
    }

    /// Checks parameters and spot-checks a bounded density on a grid.
    pub fn validate(&self, window: &Window) -> Result<()> {
        match self {
            IntensityModel::Homogeneous { lambda } => {
                if !(lambda.is_finite() && *lambda > 0.0) {
                    return Err(Error::InvalidModel(format!("lambda must be positive, got {lambda}")));
                }
            }
            IntensityModel::BoundedDensity { density, c_mu } => {
                if !(c_mu.is_finite() && *c_mu >= 1.0) {
                    return Err(Error::InvalidModel(format!("c_mu must be >= 1, got {c_mu}")));
                }
                let d = window.dim();
                let steps: usize = if d == 2 { 16 } else { 8 };
                let total = steps.pow(d as u32);
                let mut x = vec![0.0; d];
                for idx in 0..total {
                    let mut rest = idx;
                    for (i, xi) in x.iter_mut().enumerate() {
                        let k = rest % steps;
                        rest /= steps;
                        let t = (k as f64 + 0.5) / steps as f64;
                        *xi = window.lo[i] + t * (window.hi[i] - window.lo[i]);
                    }
                    check_density(density(&x), &x, *c_mu)?;
                }
            }
        }
        Ok(())
    }
}

fn check_density(value: f64, at: &[f64], c_mu: f64) -> Result<()> {
    // tiny slack so that a density equal to c_mu^{-1} computed as 1/c_mu passes
    let slack = 1e-12;
    if !(value.is_finite() && value >= 1.0 / c_mu - slack && value <= c_mu + slack) {
        return Err(Error::DensityOutOfBounds { value, at: at.to_vec(), c_mu });
    }
    Ok(())
}

/// Marker for point sets produced by the capped/padded construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModifiedTag {
    pub n: u64,
    pub delta: f64,
}

/// A finite point configuration in a window.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    window: Window,
    pub seed: u64,
    pub replicate: u64,
    pub modified: Option<ModifiedTag>,
}

impl PointSet {
    /// Builds a point set from explicit points, checking the invariants
    /// (every point in the window, no exact duplicates).
    pub fn from_points(window: Window, points: &[Vec<f64>], seed: u64, replicate: u64) -> Result<Self> {
        let dim = window.dim();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if !window.contains(p) {
                return Err(Error::InvalidArgument(format!("point {p:?} lies outside the window")));
            }
            coords.extend_from_slice(p);
        }
        let ps = PointSet { dim, coords, window, seed, replicate, modified: None };
        if let Some((i, j)) = ps.find_duplicate() {
            return Err(Error::InvalidArgument(format!("points {i} and {j} coincide")));
        }
        Ok(ps)
    }

    pub fn from_xy(window: Window, points: &[[f64; 2]]) -> Result<Self> {
        let pts: Vec<Vec<f64>> = points.iter().map(|p| p.to_vec()).collect();
        PointSet::from_points(window, &pts, 0, 0)
    }

    pub fn empty(window: Window) -> Self {
        PointSet { dim: window.dim(), coords: Vec::new(), window, seed: 0, replicate: 0, modified: None }
    }

    pub(crate) fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub(crate) fn from_raw(window: Window, coords: Vec<f64>, seed: u64, replicate: u64) -> Self {
        PointSet { dim: window.dim(), coords, window, seed, replicate, modified: None }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// First two coordinates of point `i`.
    pub fn xy(&self, i: usize) -> [f64; 2] {
        [self.coords[i * self.dim], self.coords[i * self.dim + 1]]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn to_xy(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|i| self.xy(i)).collect()
    }

    fn find_duplicate(&self) -> Option<(usize, usize)> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| lex_cmp(self.point(a), self.point(b)));
        idx.windows(2).find(|w| self.point(w[0]) == self.point(w[1])).map(|w| (w[0], w[1]))
    }

    /// Writes the text format: a header `# d=<d> seed=<seed> replicate=<r>`
    /// (plus ` modified n=<n> delta=<delta>` for modified sets) followed by
    /// one point per line.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "# d={} seed={} replicate={}", self.dim, self.seed, self.replicate)?;
        if let Some(m) = self.modified {
            write!(out, " modified n={} delta={}", m.n, m.delta)?;
        }
        writeln!(out)?;
        for p in self.iter() {
            let cols: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{}", cols.join(" "))?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Reads the text format back. The window is not part of the format and
    /// must be supplied.
    pub fn read_text<R: BufRead>(input: R, window: Window) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("missing header".into()))??;
        let rest = header
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse(format!("header must start with '#': {header:?}")))?;
        let mut dim = None;
        let mut seed = 0;
        let mut replicate = 0;
        let mut n = None;
        let mut delta = None;
        for tok in rest.split_whitespace() {
            let Some((k, v)) = tok.split_once('=') else { continue };
            let bad = || Error::Parse(format!("bad header field {tok:?}"));
            match k {
                "d" => dim = Some(v.parse::<usize>().map_err(|_| bad())?),
                "seed" => seed = v.parse().map_err(|_| bad())?,
                "replicate" => replicate = v.parse().map_err(|_| bad())?,
                "n" => n = Some(v.parse().map_err(|_| bad())?),
                "delta" => delta = Some(v.parse().map_err(|_| bad())?),
                _ => {}
            }
        }
        let dim = dim.ok_or_else(|| Error::Parse("header lacks d=".into()))?;
        if dim != window.dim() {
            return Err(Error::Parse(format!("header d={dim} but window has dimension {}", window.dim())));
        }
        let mut points = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let p: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("bad coordinate {t:?}"))))
                .collect::<Result<_>>()?;
            if p.len() != dim {
                return Err(Error::Parse(format!("expected {dim} columns, got {}", p.len())));
            }
            points.push(p);
        }
        let mut ps = PointSet::from_points(window, &points, seed, replicate)?;
        if let (Some(n), Some(delta)) = (n, delta) {
            ps.modified = Some(ModifiedTag { n, delta });
        }
        Ok(ps)
    }
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

pub(crate) fn uniform_in<R: Rng>(rng: &mut R, window: &Window, out: &mut Vec<f64>) {
    for i in 0..window.dim() {
        let (a, b) = (window.lo[i], window.hi[i]);
        loop {
            let x = a + rng.random::<f64>() * (b - a);
            if x < b {
                out.push(x);
                break;
            }
        }
    }
}

/// Poisson variate; rand_distr rejects a zero mean.
pub(crate) fn poisson_count<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
}

/// Samples a Poisson point process in `window`. Deterministic in
/// `(seed, replicate)`.
pub fn sample(window: &Window, model: &IntensityModel, seed: u64, replicate: u64) -> Result<PointSet> {
    model.validate(window)?;
    let d = window.dim();
    let mut rng = stream(seed, replicate, TAG_POINTS);
    let mut coords = Vec::new();
    match model {
        IntensityModel::Homogeneous { lambda } => {
            let count = poisson_count(&mut rng, lambda * window.volume());
            coords.reserve(count as usize * d);
            for _ in 0..count {
                uniform_in(&mut rng, window, &mut coords);
            }
        }
        IntensityModel::BoundedDensity { density, c_mu } => {
            // thinning of a homogeneous process at the density's upper bound
            let count = poisson_count(&mut rng, c_mu * window.volume());
            let mut x = Vec::with_capacity(d);
            for _ in 0..count {
                x.clear();
                uniform_in(&mut rng, window, &mut x);
                let value = density(&x);
                check_density(value, &x, *c_mu)?;
                if rng.random::<f64>() < value / c_mu {
                    coords.extend_from_slice(&x);
                }
            }
        }
    }
    let mut ps = PointSet::from_raw(window.clone(), coords, seed, replicate);
    while let Some((_, j)) = ps.find_duplicate() {
        log::warn!("duplicate point {:?} in replicate {replicate}; resampling it", ps.point(j));
        let mut fresh = Vec::with_capacity(d);
        uniform_in(&mut rng, window, &mut fresh);
        ps.coords[j * d..(j + 1) * d].copy_from_slice(&fresh);
    }
    Ok(ps)
}

/// Number of points in the half-open box `region`.
pub fn count_in(points: &PointSet, region: &Window) -> usize {
    points.iter().filter(|p| region.contains(p)).count()
}
