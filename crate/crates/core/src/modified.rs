//! The capped and padded point process `N(n)`.
//!
//! The plane is tiled by boxes of side `n^delta` centred on `n^delta Z^2`,
//! each cut into 6 x 6 sub-boxes. A sub-box keeps its points when it has
//! between 1 and `cap` of them, keeps a uniform `cap`-subset when it has
//! more, and receives one uniform point when it is empty.

use rand::seq::index;
use rand::SeedableRng;
use rayon::prelude::*;

use crate::ppp::{uniform_in, ModifiedTag, PointSet, Window};
use crate::rng::{mix, TAG_MODIFIED};
use crate::stats::{poisson_pmf, poisson_tail_gt};
use crate::{Error, Result};

pub const SUB_GRID: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModifiedConfig {
    pub n: u64,
    pub delta: f64,
    /// Points kept per sub-box; `None` keeps all.
    pub cap: Option<usize>,
    /// Whether empty sub-boxes receive a point.
    pub pad: bool,
}

impl ModifiedConfig {
    /// `cap = ceil(n^{2 delta})`.
    pub fn new(n: u64, delta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
        }
        let raw = (n as f64).powf(2.0 * delta);
        let cap = if (raw - raw.round()).abs() < 1e-9 { raw.round() } else { raw.ceil() };
        Ok(ModifiedConfig { n, delta, cap: Some(cap as usize), pad: true })
    }

    /// `N(infinity) = N`: no cap and no padding, on the tiling of `n`.
    pub fn unbounded(n: u64, delta: f64) -> Result<Self> {
        Ok(ModifiedConfig { cap: None, pad: false, ..Self::new(n, delta)? })
    }

    pub fn tile_side(&self) -> f64 {
        (self.n as f64).powf(self.delta)
    }

    pub fn sub_side(&self) -> f64 {
        self.tile_side() / SUB_GRID as f64
    }

    /// Tile index of a point.
    pub fn tile_of(&self, x: [f64; 2]) -> [i32; 2] {
        let t = self.tile_side();
        [(x[0] / t + 0.5).floor() as i32, (x[1] / t + 0.5).floor() as i32]
    }

    /// Row-major sub-box index of a point inside tile `k`.
    pub fn sub_of(&self, k: [i32; 2], x: [f64; 2]) -> usize {
        let t = self.tile_side();
        let h = self.sub_side();
        let mut idx = [0usize; 2];
        for i in 0..2 {
            let lo = t * f64::from(k[i]) - 0.5 * t;
            idx[i] = (((x[i] - lo) / h).floor() as isize).clamp(0, SUB_GRID as isize - 1) as usize;
        }
        idx[1] * SUB_GRID + idx[0]
    }

    pub fn sub_bounds(&self, k: [i32; 2], j: usize) -> Window {
        let t = self.tile_side();
        let h = self.sub_side();
        let (ix, iy) = (j % SUB_GRID, j / SUB_GRID);
        let bx = t * f64::from(k[0]) - 0.5 * t;
        let by = t * f64::from(k[1]) - 0.5 * t;
        let hi = |base: f64, i: usize| if i + 1 == SUB_GRID { base + t } else { base + (i + 1) as f64 * h };
        Window::rect(bx + ix as f64 * h, by + iy as f64 * h, hi(bx, ix), hi(by, iy)).expect("sub-box has positive extent")
    }

    /// Tile index range `[lo, hi]` covering an aligned window.
    pub fn tiles_of_window(&self, window: &Window) -> Result<([i32; 2], [i32; 2])> {
        if window.dim() != 2 {
            return Err(Error::InvalidArgument("the modified model is planar".into()));
        }
        let t = self.tile_side();
        let mut lo = [0; 2];
        let mut hi = [0; 2];
        for i in 0..2 {
            let a = window.lo()[i] / t + 0.5;
            let b = window.hi()[i] / t + 0.5;
            if (a - a.round()).abs() > 1e-9 || (b - b.round()).abs() > 1e-9 {
                return Err(Error::MisalignedWindow(format!(
                    "window edges {} and {} are not tile boundaries for side {t}",
                    window.lo()[i],
                    window.hi()[i]
                )));
            }
            lo[i] = a.round() as i32;
            hi[i] = b.round() as i32 - 1;
        }
        Ok((lo, hi))
    }

    /// Smallest aligned square window centred at the origin with half-side
    /// at least `min_half`.
    pub fn aligned_window(&self, min_half: f64) -> Window {
        let t = self.tile_side();
        let k = ((min_half / t) - 0.5).max(0.0).ceil();
        Window::centered_square((k + 0.5) * t).expect("positive half-side")
    }
}

/// Order in which tiles are visited. The output does not depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TileOrder {
    #[default]
    RowMajor,
    ColumnMajor,
}

/// Per-tile outcome: indices of kept points and added points.
struct TileResult {
    kept: Vec<usize>,
    added: Vec<f64>,
}

/// Groups point indices by tile and sub-box.
fn bucket(points: &PointSet, cfg: &ModifiedConfig, lo: [i32; 2], hi: [i32; 2]) -> Vec<Vec<Vec<usize>>> {
    let nx = (hi[0] - lo[0] + 1) as usize;
    let ny = (hi[1] - lo[1] + 1) as usize;
    let mut b = vec![vec![Vec::new(); SUB_GRID * SUB_GRID]; nx * ny];
    for i in 0..points.len() {
        let x = points.xy(i);
        let k = cfg.tile_of(x);
        let (kx, ky) = ((k[0] - lo[0]).clamp(0, nx as i32 - 1), (k[1] - lo[1]).clamp(0, ny as i32 - 1));
        let k = [kx + lo[0], ky + lo[1]];
        b[ky as usize * nx + kx as usize][cfg.sub_of(k, x)].push(i);
    }
    b
}

fn modify_tile(cfg: &ModifiedConfig, seed: u64, k: [i32; 2], subs: &[Vec<usize>]) -> TileResult {
    let mut kept = Vec::new();
    let mut added = Vec::new();
    for (j, idx) in subs.iter().enumerate() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(mix(&[
            seed,
            TAG_MODIFIED,
            k[0] as i64 as u64,
            k[1] as i64 as u64,
            j as u64,
        ]));
        match cfg.cap {
            _ if idx.is_empty() => {
                if cfg.pad {
                    uniform_in(&mut rng, &cfg.sub_bounds(k, j), &mut added);
                }
            }
            Some(cap) if idx.len() > cap => {
                let mut pick: Vec<usize> = index::sample(&mut rng, idx.len(), cap).into_iter().map(|i| idx[i]).collect();
                pick.sort_unstable();
                kept.extend(pick);
            }
            _ => kept.extend_from_slice(idx),
        }
    }
    TileResult { kept, added }
}

/// Builds `N(n)` from `points`. The original points that survive come
/// first, in their original order, followed by the added points in
/// row-major tile order. Deterministic given `seed`.
pub fn build_modified(points: &PointSet, cfg: &ModifiedConfig, seed: u64) -> Result<PointSet> {
    build_modified_ordered(points, cfg, seed, TileOrder::RowMajor)
}

/// As [`build_modified`], visiting tiles in the given order.
pub fn build_modified_ordered(points: &PointSet, cfg: &ModifiedConfig, seed: u64, order: TileOrder) -> Result<PointSet> {
    if points.dim() != 2 {
        return Err(Error::InvalidArgument("the modified model is planar".into()));
    }
    let (lo, hi) = cfg.tiles_of_window(points.window())?;
    let nx = (hi[0] - lo[0] + 1) as usize;
    let ny = (hi[1] - lo[1] + 1) as usize;
    let buckets = bucket(points, cfg, lo, hi);
    let visit: Vec<usize> = match order {
        TileOrder::RowMajor => (0..nx * ny).collect(),
        TileOrder::ColumnMajor => (0..nx).flat_map(|x| (0..ny).map(move |y| y * nx + x)).collect(),
    };
    let mut results: Vec<(usize, TileResult)> = visit
        .par_iter()
        .map(|&t| {
            let k = [lo[0] + (t % nx) as i32, lo[1] + (t / nx) as i32];
            (t, modify_tile(cfg, seed, k, &buckets[t]))
        })
        .collect();
    results.sort_by_key(|(t, _)| *t);
    let mut keep = vec![false; points.len()];
    let mut added = Vec::new();
    for (_, r) in &results {
        for &i in &r.kept {
            keep[i] = true;
        }
        added.extend_from_slice(&r.added);
    }
    let mut coords: Vec<f64> = Vec::with_capacity(2 * points.len() + added.len());
    for i in (0..points.len()).filter(|&i| keep[i]) {
        coords.extend_from_slice(points.point(i));
    }
    coords.extend(added);
    let mut out = PointSet::from_raw(points.window().clone(), coords, points.seed, points.replicate);
    out.modified = match cfg.cap {
        Some(_) => Some(ModifiedTag { n: cfg.n, delta: cfg.delta }),
        None => points.modified,
    };
    Ok(out)
}

/// Sub-box statistics of a point set on the tiling of `cfg`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedReport {
    pub tiles: usize,
    pub sub_boxes: usize,
    pub min_count: usize,
    pub max_count: usize,
    pub max_tile_total: usize,
    /// Sub-boxes whose count lies outside `[1, cap]`.
    pub violations: usize,
    /// Tiles with an empty sub-box.
    pub non_full_tiles: usize,
}

impl ModifiedReport {
    pub fn ok(&self, cfg: &ModifiedConfig) -> bool {
        let cap = cfg.cap.unwrap_or(usize::MAX);
        self.violations == 0
            && self.non_full_tiles == 0
            && self.max_tile_total <= cap.saturating_mul(SUB_GRID * SUB_GRID)
    }
}

/// Counts per sub-box and per tile; see [`ModifiedReport::ok`].
pub fn verify_modified_invariants(points: &PointSet, cfg: &ModifiedConfig) -> Result<ModifiedReport> {
    let (lo, hi) = cfg.tiles_of_window(points.window())?;
    let buckets = bucket(points, cfg, lo, hi);
    let cap = cfg.cap.unwrap_or(usize::MAX);
    let mut r = ModifiedReport {
        tiles: buckets.len(),
        sub_boxes: buckets.len() * SUB_GRID * SUB_GRID,
        min_count: usize::MAX,
        max_count: 0,
        max_tile_total: 0,
        violations: 0,
        non_full_tiles: 0,
    };
    for tile in &buckets {
        let mut total = 0;
        let mut full = true;
        for sub in tile {
            let c = sub.len();
            total += c;
            r.min_count = r.min_count.min(c);
            r.max_count = r.max_count.max(c);
            if c == 0 || c > cap {
                r.violations += 1;
            }
            full &= c > 0;
        }
        r.max_tile_total = r.max_tile_total.max(total);
        if !full {
            r.non_full_tiles += 1;
        }
    }
    Ok(r)
}

/// `(altered, total)` sub-boxes: those the construction would change.
pub fn altered_sub_boxes(original: &PointSet, cfg: &ModifiedConfig) -> Result<(usize, usize)> {
    let (lo, hi) = cfg.tiles_of_window(original.window())?;
    let cap = cfg.cap.unwrap_or(usize::MAX);
    let buckets = bucket(original, cfg, lo, hi);
    let altered = buckets.iter().flatten().filter(|s| s.is_empty() || s.len() > cap).count();
    Ok((altered, buckets.len() * SUB_GRID * SUB_GRID))
}

/// `P(Poisson(m) = 0) + P(Poisson(m) > cap)` with `m = lambda * sub-box area`.
pub fn altered_probability(cfg: &ModifiedConfig, lambda: f64) -> f64 {
    let m = lambda * cfg.sub_side() * cfg.sub_side();
    let over = cfg.cap.map_or(0.0, |c| poisson_tail_gt(c as u64, m));
    let empty = if cfg.pad { poisson_pmf(0, m) } else { 0.0 };
    empty + over
}
