//! Monte Carlo runs over parameter grids, decay fits and verification
//! suites.
//!
//! A run samples one environment per replicate, evaluates the extremal
//! statistic of the chosen experiment at every grid point on that
//! environment, and tallies the event. Replicates run in parallel; tallies
//! are integer sums, so the result does not depend on scheduling.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::atomic::{AtomicBool, Ordering};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blocks::{condition_full, full_box_probability, verify_confinement, window_around, BlockConfig, Confinement};
use crate::bondperc::{min_path_reward, sample_edges};
use crate::estimate::{Params, TailEstimate, Tally, CSV_HEADER};
use crate::lattice::{linf_boundary, max_weight_animal, LatticeAnimal, Site, WeightField};
use crate::modified::{altered_sub_boxes, altered_probability, build_modified, verify_modified_invariants, ModifiedConfig};
use crate::percolation::{open_density_tail, verify_cluster_product};
use crate::polyomino::{
    max_boxes_at_size, max_inverse_cover, max_path_boxes, max_segment_path, min_boxes_at_size, min_path_boxes,
    sandwich_holds, scaling_pair, SearchOptions, VoronoiPolyomino,
};
use crate::ppp::{sample, IntensityModel, PointSet, Window};
use crate::rng::{mix, stream, TAG_ANIMAL, TAG_SITES};
use crate::stats::{linear_fit, wilson};
use crate::{Error, Result, Tessellation};

pub const CONFIG_VERSION: u32 = 1;
pub const MIN_REPLICATES: u64 = 100;
/// Runs with a larger censored fraction fail.
pub const MAX_CENSORED_FRACTION: f64 = 0.05;

static INTERRUPTED: AtomicBool = AtomicBool::new(false);

/// Asks running experiments to stop after the replicates in flight.
pub fn request_stop() {
    INTERRUPTED.store(true, Ordering::SeqCst);
}

pub fn interrupted() -> bool {
    INTERRUPTED.load(Ordering::SeqCst)
}

pub fn clear_interrupt() {
    INTERRUPTED.store(false, Ordering::SeqCst);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    /// `max over Phi_{<=s} of sum N_z >= r`.
    Lemma1,
    /// Open-density minimum on i.i.d. fields.
    Lemma2,
    /// A block of side `L` is not full.
    Lemma7,
    /// `min over Pi_{>=r} of #A(P) <= s`.
    T1Min,
    /// `max over Pi_{<=r} of #A(P) >= s`.
    T1Max,
    /// Paths from `v_0`; `goal` selects the min or max form.
    C1Paths,
    /// `max over Phi_{<=s} of #P(A) >= r`.
    T2Inverse,
    /// `max over |x| <= s of #gamma(0, x) >= r`.
    C2Segment,
    /// `min over Gamma_{>=r} of path reward <= s`.
    Thm4Reward,
}

impl ExperimentId {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Lemma1 => "lemma1",
            ExperimentId::Lemma2 => "lemma2",
            ExperimentId::Lemma7 => "lemma7",
            ExperimentId::T1Min => "t1-min",
            ExperimentId::T1Max => "t1-max",
            ExperimentId::C1Paths => "c1-paths",
            ExperimentId::T2Inverse => "t2-inverse",
            ExperimentId::C2Segment => "c2-segment",
            ExperimentId::Thm4Reward => "thm4-reward",
        }
    }

    fn geometric(self) -> bool {
        !matches!(self, ExperimentId::Lemma1 | ExperimentId::Lemma2 | ExperimentId::Lemma7)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Goal {
    #[default]
    Min,
    Max,
}

fn default_d() -> u32 {
    2
}

fn default_lambda() -> f64 {
    1.0
}

// Odd sides only: for even L the blocks are not unions of unit boxes and the
// scaling inequality fails on ordinary polyominoes.
fn default_scaling() -> Vec<f64> {
    vec![3.0]
}

/// JSON run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub experiment: ExperimentId,
    #[serde(default = "default_d")]
    pub d: u32,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Density comparison constant; defaults to `lambda`, which is what
    /// `E e^{N_z} <= e^{c (e - 1)}` gives for a homogeneous process.
    #[serde(default)]
    pub c_mu: Option<f64>,
    #[serde(rename = "L", default)]
    pub l: Option<f64>,
    #[serde(default)]
    pub n: Option<u64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub r: Vec<u64>,
    #[serde(default)]
    pub s: Vec<u64>,
    #[serde(default)]
    pub p: Vec<f64>,
    /// Pair every `r` with `s = ceil(s_per_r * r)` instead of crossing the
    /// `r` and `s` grids.
    #[serde(default)]
    pub s_per_r: Option<f64>,
    pub replicates: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub exact_guard: Option<usize>,
    #[serde(default)]
    pub touching_b0: bool,
    #[serde(default)]
    pub goal: Goal,
    /// Window margin around the core region; default `6 max(L, 3)`.
    #[serde(default)]
    pub margin: Option<f64>,
    /// Block sides for the scaling check on sampled witnesses.
    #[serde(default = "default_scaling")]
    pub scaling_l: Vec<f64>,
}

impl ExperimentConfig {
    /// A config with empty grids; callers fill what the experiment needs.
    pub fn new(experiment: ExperimentId, replicates: u64, seed: u64) -> Self {
        ExperimentConfig {
            version: CONFIG_VERSION,
            experiment,
            d: 2,
            lambda: 1.0,
            c_mu: None,
            l: None,
            n: None,
            delta: None,
            r: Vec::new(),
            s: Vec::new(),
            p: Vec::new(),
            s_per_r: None,
            replicates,
            seed,
            exact_guard: None,
            touching_b0: false,
            goal: Goal::Min,
            margin: None,
            scaling_l: default_scaling(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn c_mu(&self) -> f64 {
        self.c_mu.unwrap_or(self.lambda)
    }

    pub fn margin(&self) -> f64 {
        self.margin.unwrap_or(6.0 * self.l.unwrap_or(1.0).max(3.0))
    }

    fn modified(&self) -> Result<Option<ModifiedConfig>> {
        match (self.n, self.delta) {
            (Some(n), Some(delta)) => Ok(Some(ModifiedConfig::new(n, delta)?)),
            (None, None) => Ok(None),
            _ => Err(Error::InvalidArgument("n and delta must be given together".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        use ExperimentId::*;
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.version != CONFIG_VERSION {
            return bad(format!("config version {} is not supported (expected {CONFIG_VERSION})", self.version));
        }
        if self.replicates < MIN_REPLICATES {
            return bad(format!("replicates must be at least {MIN_REPLICATES}"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        let e = self.experiment;
        if e != Lemma1 && e != Lemma7 && self.d != 2 {
            return bad(format!("{} is planar", e.name()));
        }
        if !(2..=3).contains(&self.d) {
            return bad(format!("d must be 2 or 3, got {}", self.d));
        }
        let needs_r = !matches!(e, Lemma7);
        let needs_s = !matches!(e, Lemma7) && self.s_per_r.is_none();
        if needs_r && self.r.is_empty() {
            return bad(format!("{} needs a nonempty r grid", e.name()));
        }
        if needs_s && self.s.is_empty() {
            return bad(format!("{} needs a nonempty s grid", e.name()));
        }
        if matches!(e, Lemma2 | Thm4Reward) && self.p.is_empty() {
            return bad(format!("{} needs a nonempty p grid", e.name()));
        }
        if self.p.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("p values must lie in [0, 1]".into());
        }
        if e == Lemma7 && self.l.is_none() {
            return bad("lemma7 needs L".into());
        }
        if self.modified()?.is_some() && !e.geometric() {
            return bad(format!("{} does not use the modified process", e.name()));
        }
        if matches!(e, T1Min | T1Max | C1Paths | C2Segment) && self.r.contains(&0) {
            return bad("r must be at least 1".into());
        }
        if e == Thm4Reward && self.r.iter().any(|&r| r < 2) {
            return bad("thm4-reward needs r >= 2".into());
        }
        if self.scaling_l.iter().any(|l| !(*l >= 1.0)) {
            return bad("scaling block sides must be at least 1".into());
        }
        Ok(())
    }

    fn grid(&self) -> Vec<GridPoint> {
        let ps: Vec<Option<f64>> = if self.p.is_empty() { vec![None] } else { self.p.iter().map(|&p| Some(p)).collect() };
        let mut out = Vec::new();
        for &p in &ps {
            match self.s_per_r {
                Some(k) => {
                    for &r in &self.r {
                        out.push(GridPoint { r, s: (k * r as f64 - 1e-9).ceil().max(0.0) as u64, p });
                    }
                }
                None => {
                    for &s in &self.s {
                        for &r in &self.r {
                            out.push(GridPoint { r, s, p });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct GridPoint {
    r: u64,
    s: u64,
    p: Option<f64>,
}

/// `b_1 = 2 (log alpha + c_mu (e - 1))` with `alpha = (2d)^{2d}`.
pub fn b1(d: u32, c_mu: f64) -> f64 {
    let alpha_ln = (2 * d) as f64 * ((2 * d) as f64).ln();
    2.0 * (alpha_ln + c_mu * (std::f64::consts::E - 1.0))
}

/// Checks on every polyomino a run sampled.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InvariantTally {
    pub polyominoes: u64,
    pub sandwich_failures: u64,
    /// `(L, failures)` of `#A_L <= #A_1 <= L^2 #A_L`.
    pub scaling_failures: Vec<(f64, u64)>,
}

impl InvariantTally {
    fn with_sides(sides: &[f64]) -> Self {
        InvariantTally { scaling_failures: sides.iter().map(|&l| (l, 0)).collect(), ..Default::default() }
    }

    fn merge(&mut self, o: &InvariantTally) {
        self.polyominoes += o.polyominoes;
        self.sandwich_failures += o.sandwich_failures;
        for (a, b) in self.scaling_failures.iter_mut().zip(&o.scaling_failures) {
            a.1 += b.1;
        }
    }

    pub fn sandwich_ok(&self) -> bool {
        self.sandwich_failures == 0
    }

    pub fn scaling_ok(&self) -> bool {
        self.scaling_failures.iter().all(|(_, f)| *f == 0)
    }

    fn check(&mut self, tess: &Tessellation, poly: &VoronoiPolyomino) -> Result<()> {
        self.polyominoes += 1;
        if !sandwich_holds(tess, poly)? {
            self.sandwich_failures += 1;
        }
        for (l, fails) in &mut self.scaling_failures {
            let (al, a1) = scaling_pair(tess, poly, *l)?;
            let ld = (*l * *l).round() as usize;
            if !(al <= a1 && a1 <= ld * al) {
                *fails += 1;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub estimates: Vec<TailEstimate>,
    /// Replicates started (censored ones included).
    pub attempted: u64,
    pub censored: u64,
    pub interrupted: bool,
    pub invariants: InvariantTally,
    pub heuristic_values: u64,
}

impl RunReport {
    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / self.attempted.max(1) as f64
    }

    /// Every explicit bound holds, censoring stays under the limit and no
    /// invariant failed on a witness.
    pub fn passed(&self) -> bool {
        self.estimates.iter().all(|e| e.pass)
            && self.censored_fraction() <= MAX_CENSORED_FRACTION
            && self.invariants.sandwich_ok()
            && self.invariants.scaling_ok()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for e in &self.estimates {
            writeln!(out, "{}", e.csv_row())?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut v = Vec::new();
        self.write_csv(&mut v).expect("writing to memory");
        String::from_utf8(v).expect("ascii")
    }

    /// One JSON object per estimate.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for e in &self.estimates {
            writeln!(out, "{}", serde_json::to_string(e)?)?;
        }
        Ok(())
    }
}

/// What one replicate contributes.
#[derive(Debug, Clone)]
struct Shard {
    hits: Vec<u64>,
    counted: u64,
    attempted: u64,
    censored: u64,
    invariants: InvariantTally,
    heuristic: u64,
}

impl Shard {
    fn empty(points: usize, sides: &[f64]) -> Self {
        Shard {
            hits: vec![0; points],
            counted: 0,
            attempted: 0,
            censored: 0,
            invariants: InvariantTally::with_sides(sides),
            heuristic: 0,
        }
    }

    fn merge(mut self, o: Shard) -> Shard {
        for (a, b) in self.hits.iter_mut().zip(&o.hits) {
            *a += b;
        }
        self.counted += o.counted;
        self.attempted += o.attempted;
        self.censored += o.censored;
        self.invariants.merge(&o.invariants);
        self.heuristic += o.heuristic;
        self
    }
}

/// Runs an experiment.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    match config.experiment {
        ExperimentId::Lemma2 => return run_lemma2(config),
        ExperimentId::Lemma7 => return run_lemma7(config),
        _ => {}
    }
    let grid = config.grid();
    let sides = if matches!(config.experiment, ExperimentId::T1Min | ExperimentId::T1Max | ExperimentId::C1Paths) {
        config.scaling_l.clone()
    } else {
        Vec::new()
    };
    let shard = (0..config.replicates)
        .into_par_iter()
        .map(|rep| -> Result<Shard> {
            let mut shard = Shard::empty(grid.len(), &sides);
            if interrupted() {
                return Ok(shard);
            }
            shard.attempted = 1;
            let outcome = match config.experiment {
                ExperimentId::Lemma1 => lemma1_replicate(config, &grid, rep).map(|h| (h, InvariantTally::with_sides(&sides), 0)),
                _ => geometric_replicate(config, &grid, &sides, rep),
            };
            match outcome {
                Ok((hits, inv, heuristic)) => {
                    shard.counted = 1;
                    for (a, h) in shard.hits.iter_mut().zip(hits) {
                        *a += u64::from(h);
                    }
                    shard.invariants = inv;
                    shard.heuristic = heuristic;
                }
                Err(e) if e.is_censored() => shard.censored = 1,
                Err(e) => return Err(e),
            }
            Ok(shard)
        })
        .try_reduce(|| Shard::empty(grid.len(), &sides), |a, b| Ok(a.merge(b)))?;
    let estimates = grid
        .iter()
        .zip(&shard.hits)
        .map(|(g, &hits)| {
            let tally = Tally { hits, n: shard.counted, censored: shard.censored };
            TailEstimate::from_tally(config.experiment.name(), params_of(config, g), tally, bound_of(config, g))
        })
        .collect();
    Ok(RunReport {
        config: config.clone(),
        estimates,
        attempted: shard.attempted,
        censored: shard.censored,
        interrupted: interrupted(),
        invariants: shard.invariants,
        heuristic_values: shard.heuristic,
    })
}

fn params_of(c: &ExperimentConfig, g: &GridPoint) -> Params {
    Params {
        d: Some(c.d),
        lambda: Some(c.lambda),
        l: c.l,
        n: c.n,
        delta: c.delta,
        r: Some(g.r as f64),
        s: Some(g.s as f64),
        p: g.p,
    }
}

fn bound_of(c: &ExperimentConfig, g: &GridPoint) -> Option<f64> {
    let explicit = match c.experiment {
        ExperimentId::Lemma1 | ExperimentId::T1Min => true,
        ExperimentId::C1Paths => c.goal == Goal::Min,
        _ => false,
    };
    // the modified process adds up to 2^d points per unit box, which the
    // explicit constant does not cover
    (explicit && c.n.is_none() && g.r as f64 >= b1(c.d, c.c_mu()) * g.s as f64).then(|| (-(g.r as f64) / 2.0).exp())
}

fn lemma1_replicate(c: &ExperimentConfig, grid: &[GridPoint], rep: u64) -> Result<Vec<bool>> {
    let d = c.d as usize;
    let s_max = grid.iter().map(|g| g.s).max().unwrap_or(1).max(1) as i32;
    let mut rng = stream(c.seed, rep, TAG_SITES);
    let pois = Poisson::new(c.lambda).map_err(|e| Error::InvalidModel(e.to_string()))?;
    let mut w = WeightField::new();
    // animals of size <= s through the origin stay within l1 distance s - 1
    let reach = s_max - 1;
    let zr = if d == 3 { reach } else { 0 };
    for x in -reach..=reach {
        for y in -reach..=reach {
            for z in -zr..=zr {
                if x.abs() + y.abs() + z.abs() <= reach {
                    w.set(Site([x, y, z]), pois.sample(&mut rng) as u64);
                }
            }
        }
    }
    let guard = c.exact_guard.unwrap_or(crate::lattice::DEFAULT_EXACT_GUARD);
    let mut cache: BTreeMap<u64, u64> = BTreeMap::new();
    grid.iter()
        .map(|g| {
            if !cache.contains_key(&g.s) {
                let m = if g.s == 0 { 0 } else { max_weight_animal(&w, g.s as usize, guard, d)?.value };
                cache.insert(g.s, m);
            }
            Ok(cache[&g.s] >= g.r)
        })
        .collect()
}

/// Half-side of the square core region the statistics of a run can reach.
fn core_half(c: &ExperimentConfig) -> f64 {
    let r_max = c.r.iter().copied().max().unwrap_or(1) as f64;
    let s_max = c.grid().iter().map(|g| g.s).max().unwrap_or(1) as f64;
    let spacing = 1.0 / c.lambda.sqrt();
    match c.experiment {
        ExperimentId::T2Inverse | ExperimentId::C2Segment => s_max + 2.0 * spacing + 1.0,
        _ => 1.5 * r_max * spacing + 1.0,
    }
}

/// The environment of replicate `rep`: a Poisson sample, or its modified
/// version when `n` and `delta` are set.
pub fn environment(c: &ExperimentConfig, rep: u64) -> Result<Tessellation> {
    let half = core_half(c) + c.margin();
    let model = IntensityModel::homogeneous(c.lambda);
    let points = match c.modified()? {
        Some(m) => {
            let w = m.aligned_window(half);
            build_modified(&sample(&w, &model, c.seed, rep)?, &m, mix(&[c.seed, rep]))?
        }
        None => sample(&Window::centered_square(half)?, &model, c.seed, rep)?,
    };
    Tessellation::new(points)
}

type ReplicateOutcome = (Vec<bool>, InvariantTally, u64);

fn geometric_replicate(c: &ExperimentConfig, grid: &[GridPoint], sides: &[f64], rep: u64) -> Result<ReplicateOutcome> {
    let tess = environment(c, rep)?;
    let mut inv = InvariantTally::with_sides(sides);
    let mut heuristic = 0;
    let opts = SearchOptions {
        exact_guard: c.exact_guard.unwrap_or(crate::polyomino::DEFAULT_EXACT_GUARD),
        touching_b0: c.touching_b0,
        ..SearchOptions::default()
    };
    let mut by_r: BTreeMap<u64, u64> = BTreeMap::new();
    let mut by_s: BTreeMap<u64, u64> = BTreeMap::new();
    let mut by_p: BTreeMap<(u64, u64), u64> = BTreeMap::new();
    let mut hits = Vec::with_capacity(grid.len());
    for g in grid {
        let hit = match c.experiment {
            ExperimentId::T1Min | ExperimentId::T1Max => {
                if !by_r.contains_key(&g.r) {
                    let e = if c.experiment == ExperimentId::T1Min {
                        min_boxes_at_size(&tess, g.r as usize, &opts)?
                    } else {
                        max_boxes_at_size(&tess, g.r as usize, &opts)?
                    };
                    heuristic += u64::from(e.heuristic);
                    inv.check(&tess, &e.witness)?;
                    by_r.insert(g.r, e.value);
                }
                if c.experiment == ExperimentId::T1Min {
                    by_r[&g.r] <= g.s
                } else {
                    by_r[&g.r] >= g.s
                }
            }
            ExperimentId::C1Paths => {
                if !by_r.contains_key(&g.r) {
                    let e = match c.goal {
                        Goal::Min => min_path_boxes(&tess, g.r as usize)?,
                        Goal::Max => max_path_boxes(&tess, g.r as usize)?,
                    };
                    inv.check(&tess, &e.witness.polyomino())?;
                    by_r.insert(g.r, e.value);
                }
                match c.goal {
                    Goal::Min => by_r[&g.r] <= g.s,
                    Goal::Max => by_r[&g.r] >= g.s,
                }
            }
            ExperimentId::T2Inverse => {
                if !by_s.contains_key(&g.s) {
                    by_s.insert(g.s, if g.s == 0 { 0 } else { max_inverse_cover(&tess, g.s as usize)?.value });
                }
                by_s[&g.s] >= g.r
            }
            ExperimentId::C2Segment => {
                if !by_s.contains_key(&g.s) {
                    by_s.insert(g.s, max_segment_path(&tess, g.s as f64)?.0 as u64);
                }
                by_s[&g.s] >= g.r
            }
            ExperimentId::Thm4Reward => {
                let p = g.p.expect("validated p grid");
                let key = (p.to_bits(), g.r);
                if !by_p.contains_key(&key) {
                    let pi = c.p.iter().position(|&q| q == p).expect("grid value") as u64;
                    let field = sample_edges(tess.triangulation(), p, mix(&[c.seed, pi]), rep)?;
                    let guard = c.exact_guard.unwrap_or(crate::bondperc::DEFAULT_EXACT_GUARD);
                    let e = min_path_reward(&tess, &field, g.r as usize, guard)?;
                    heuristic += u64::from(e.heuristic);
                    by_p.insert(key, e.value);
                }
                by_p[&key] <= g.s
            }
            ExperimentId::Lemma1 | ExperimentId::Lemma2 | ExperimentId::Lemma7 => unreachable!("handled elsewhere"),
        };
        hits.push(hit);
    }
    Ok((hits, inv, heuristic))
}

fn run_lemma2(c: &ExperimentConfig) -> Result<RunReport> {
    let mut estimates = Vec::new();
    for &rho in &c.p {
        for &s in &c.s {
            for &r in &c.r {
                let (mut e, _) = open_density_tail(rho, s as usize, r as usize, c.replicates, c.seed)?;
                e.params.lambda = None;
                estimates.push(e);
            }
        }
    }
    Ok(simple_report(c, estimates))
}

fn run_lemma7(c: &ExperimentConfig) -> Result<RunReport> {
    let l = c.l.expect("validated");
    let rep = full_box_probability(l, c.d as usize, c.lambda, c.replicates, c.seed)?;
    Ok(simple_report(c, vec![rep.estimate]))
}

fn simple_report(c: &ExperimentConfig, estimates: Vec<TailEstimate>) -> RunReport {
    RunReport {
        config: c.clone(),
        attempted: c.replicates,
        censored: 0,
        interrupted: interrupted(),
        invariants: InvariantTally::default(),
        heuristic_values: 0,
        estimates,
    }
}

/// Least-squares fit of `log p_hat` against `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Fits `log p_hat = slope * r + intercept` over the estimates with at
/// least one hit; needs three of them.
pub fn fit_decay(estimates: &[TailEstimate]) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = estimates
        .iter()
        .filter(|e| e.hits > 0)
        .filter_map(|e| e.params.r.map(|r| (r, e.p_hat.ln())))
        .collect();
    if pts.len() < 3 {
        return Err(Error::BelowResolution(format!("{} grid points with hits, need 3", pts.len())));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let fit = linear_fit(&xs, &ys).ok_or_else(|| Error::BelowResolution("all points share one r".into()))?;
    Ok(DecayFit { slope: fit.slope, intercept: fit.intercept, r_squared: fit.r_squared, points: xs.len() })
}

/// Groups estimates into series along `r`: same experiment and parameters
/// other than `r` (and other than `s` when `pair_s` is set, for runs that
/// tie `s` to `r`).
pub fn series(estimates: &[TailEstimate], pair_s: bool) -> BTreeMap<String, Vec<TailEstimate>> {
    let mut out: BTreeMap<String, Vec<TailEstimate>> = BTreeMap::new();
    for e in estimates {
        let p = &e.params;
        let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let key = format!(
            "{} d={} lambda={} L={} n={} delta={} s={} p={}",
            e.experiment,
            p.d.map(|x| x.to_string()).unwrap_or_default(),
            f(p.lambda),
            f(p.l),
            p.n.map(|x| x.to_string()).unwrap_or_default(),
            f(p.delta),
            if pair_s { "*".to_string() } else { f(p.s) },
            f(p.p)
        );
        out.entry(key).or_default().push(e.clone());
    }
    out
}

/// Reads a CSV written by [`RunReport::write_csv`].
pub fn read_csv(text: &str) -> Result<Vec<TailEstimate>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::Parse("missing or unexpected CSV header".into())),
    }
    lines.map(TailEstimate::from_csv_row).collect()
}

/// Outcome of a verification suite: one line per check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub lines: Vec<String>,
    pub passed: bool,
}

impl SuiteReport {
    fn new(suite: &str) -> Self {
        SuiteReport { suite: suite.to_string(), lines: Vec::new(), passed: true }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.lines.push(format!("[{}] {line}", if ok { "PASS" } else { "FAIL" }));
    }
}

/// Uniformly random growth of an animal of `size` cells from the origin.
pub fn random_animal<R: Rng>(rng: &mut R, size: usize, d: usize) -> LatticeAnimal {
    let mut cells = vec![Site::ORIGIN];
    while cells.len() < size {
        let c = cells[rng.random_range(0..cells.len())];
        let nbrs: Vec<Site> = c.neighbors(d).collect();
        let n = nbrs[rng.random_range(0..nbrs.len())];
        if !cells.contains(&n) {
            cells.push(n);
        }
    }
    LatticeAnimal::new(d, cells).expect("grown animals are connected")
}

/// One confinement configuration: a random animal, a sample conditioned on
/// full boundary blocks, and the confinement verdict.
pub fn confinement_case(lambda: f64, l: f64, seed: u64, rep: u64) -> Result<(LatticeAnimal, Confinement)> {
    let cfg = BlockConfig::new(l, 2)?;
    let mut rng = stream(seed, rep, TAG_ANIMAL);
    let size = rng.random_range(1..=5);
    let a = random_animal(&mut rng, size, 2);
    let window = window_around(&a, &cfg, l)?;
    let raw = sample(&window, &IntensityModel::homogeneous(lambda), seed, rep)?;
    let points = condition_full(&raw, &cfg, lambda, &linf_boundary(&a), rep)?;
    let tess = Tessellation::new(points)?;
    Ok((a.clone(), verify_confinement(&tess, &a, &cfg)?))
}

/// Confinement of tiles meeting `B(A)` under full boundary blocks, split
/// evenly over `lambda in {5, 20}` and `L in {2, 4}`.
pub fn verify_confinement_suite(replicates: u64, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("confinement");
    let combos = [(5.0, 2.0), (5.0, 4.0), (20.0, 2.0), (20.0, 4.0)];
    let per = replicates.div_ceil(combos.len() as u64);
    for (i, &(lambda, l)) in combos.iter().enumerate() {
        let cseed = mix(&[seed, i as u64]);
        let (ok, cells, fails) = (0..per)
            .into_par_iter()
            .map(|rep| match confinement_case(lambda, l, cseed, rep) {
                Ok((_, Confinement::Confined { cells_checked })) => (1u64, cells_checked as u64, Vec::new()),
                Ok((a, Confinement::Counterexample { excess, .. })) => {
                    (0, 0, vec![format!("rep {rep}: animal {} leaves by {excess:e}", a.to_line())])
                }
                Err(e) => (0, 0, vec![format!("rep {rep}: {e}")]),
            })
            .reduce(
                || (0, 0, Vec::new()),
                |mut a, b| {
                    a.0 += b.0;
                    a.1 += b.1;
                    a.2.extend(b.2);
                    a
                },
            );
        report.check(ok == per, format!("lambda={lambda} L={l}: confined {ok}/{per} ({cells} tiles checked)"));
        for f in fails.iter().take(5) {
            report.lines.push(format!("    {f}"));
        }
    }
    Ok(report)
}

/// The cluster product inequality on `rho in {0.7, 0.8, 0.9}` and animals
/// `1x1`, `2x2`, `1x4`, with `f(k) = e^{min(k, 4)}`.
pub fn verify_cluster_product_suite(replicates: u64, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("cluster-product");
    for (i, rho) in [0.7, 0.8, 0.9].into_iter().enumerate() {
        for (j, (w, h)) in [(1, 1), (2, 2), (1, 4)].into_iter().enumerate() {
            let a = LatticeAnimal::rectangle(w, h)?;
            let r = verify_cluster_product(rho, &a, 4, replicates, mix(&[seed, i as u64, j as u64]))?;
            report.check(
                r.pass,
                format!(
                    "rho={rho} A={w}x{h}: lhs {:.6} <= rhs {:.6} + 3 sigma ({:.2e}); discarded {}",
                    r.lhs, r.rhs, r.sigma, r.discarded
                ),
            );
        }
    }
    Ok(report)
}

/// Not-full probability of a block with `L = 20`, `lambda = 1`.
pub fn verify_full_box_suite(replicates: u64, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("full-box");
    let r = full_box_probability(20.0, 2, 1.0, replicates, seed)?;
    report.check(r.exact <= r.proof_bound, format!("exact {:.12} <= bound {:.12}", r.exact, r.proof_bound));
    report.check(
        r.ci_contains_exact,
        format!("95% CI [{:.5}, {:.5}] contains exact (p_hat {:.5})", r.estimate.ci_lo, r.estimate.ci_hi, r.estimate.p_hat),
    );
    report.check(r.estimate.pass, format!("p_hat - 3 sigma <= bound ({} replicates)", r.estimate.replicates));
    Ok(report)
}

/// Normal quantile for the two-sided 99.9% interval used by the altered
/// fraction check.
const Z999: f64 = 3.290_526_731_491_926;

/// Sub-box counts of `N(n)` for `n in {8, 16, 32}`, `delta = 1/2`,
/// `lambda = 1`, and the fraction of sub-boxes the construction alters.
pub fn verify_modified_suite(replicates: u64, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("modified-invariants");
    for n in [8u64, 16, 32] {
        let cfg = ModifiedConfig::new(n, 0.5)?;
        let window = cfg.aligned_window(12.0);
        let model = IntensityModel::homogeneous(1.0);
        let (bad, altered, total) = (0..replicates)
            .into_par_iter()
            .map(|rep| -> Result<(u64, u64, u64)> {
                let p = sample(&window, &model, mix(&[seed, n]), rep)?;
                let m = build_modified(&p, &cfg, mix(&[seed, n, rep]))?;
                let ok = verify_modified_invariants(&m, &cfg)?.ok(&cfg);
                let (a, t) = altered_sub_boxes(&p, &cfg)?;
                Ok((u64::from(!ok), a as u64, t as u64))
            })
            .try_reduce(|| (0, 0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1, a.2 + b.2)))?;
        let cap = cfg.cap.expect("finite cap");
        report.check(bad == 0, format!("n={n}: counts in [1, {cap}] and tiles full in {}/{replicates}", replicates - bad));
        let oracle = altered_probability(&cfg, 1.0);
        let (lo, hi) = wilson(altered, total, Z999);
        report.check(
            lo <= oracle && oracle <= hi,
            format!("n={n}: altered {altered}/{total}, 99.9% CI [{lo:.5}, {hi:.5}] vs oracle {oracle:.5}"),
        );
    }
    Ok(report)
}

/// Runs a named suite.
pub fn verify_suite(name: &str, replicates: u64, seed: u64) -> Result<SuiteReport> {
    match name {
        "confinement" => verify_confinement_suite(replicates, seed),
        "cluster-product" => verify_cluster_product_suite(replicates, seed),
        "full-box" => verify_full_box_suite(replicates, seed),
        "modified-invariants" => verify_modified_suite(replicates, seed),
        other => Err(Error::InvalidArgument(format!(
            "unknown suite {other:?}; expected confinement, cluster-product, full-box or modified-invariants"
        ))),
    }
}

/// Samples the point set a CLI `sample` call writes.
pub fn sample_points(lambda: f64, half: f64, modified: Option<(u64, f64)>, seed: u64) -> Result<PointSet> {
    let model = IntensityModel::homogeneous(lambda);
    match modified {
        Some((n, delta)) => {
            let cfg = ModifiedConfig::new(n, delta)?;
            let w = cfg.aligned_window(half);
            build_modified(&sample(&w, &model, seed, 0)?, &cfg, mix(&[seed, 0]))
        }
        None => sample(&Window::centered_square(half)?, &model, seed, 0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t1(reps: u64) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(ExperimentId::T1Min, reps, 5);
        c.r = vec![1, 2, 3];
        c.s = vec![2, 4];
        c
    }

    #[test]
    fn b1_value() {
        assert!((b1(2, 1.0) - 2.0 * (256f64.ln() + std::f64::consts::E - 1.0)).abs() < 1e-12);
        assert!((b1(2, 1.0) - 14.5267).abs() < 1e-3);
    }

    #[test]
    fn config_json_roundtrip_and_validation() {
        let c = t1(100);
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"t1-min\""));
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
        let mut bad = c.clone();
        bad.replicates = 10;
        assert!(bad.validate().is_err());
        let mut bad = c.clone();
        bad.version = 2;
        assert!(bad.validate().is_err());
        let mut bad = c.clone();
        bad.r.clear();
        assert!(bad.validate().is_err());
        assert!(ExperimentConfig::from_json(r#"{"version":1,"experiment":"t1-min","replicates":100,"r":[1],"s":[1],"bogus":1}"#).is_err());
    }

    #[test]
    fn s_per_r_pairs_grids() {
        let mut c = ExperimentConfig::new(ExperimentId::T1Max, 100, 1);
        c.r = vec![2, 3];
        c.s_per_r = Some(2.5);
        let g = c.grid();
        assert_eq!(g.iter().map(|g| (g.r, g.s)).collect::<Vec<_>>(), vec![(2, 5), (3, 8)]);
    }

    #[test]
    fn trivial_event_has_probability_one() {
        let mut c = t1(100);
        c.r = vec![1];
        c.s = vec![1000];
        let rep = run(&c).unwrap();
        assert_eq!(rep.estimates[0].hits, 100);
        assert!(rep.passed());
    }

    #[test]
    fn runs_are_deterministic() {
        let c = t1(100);
        let a = run(&c).unwrap();
        let b = run(&c).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.censored, 0);
        assert_eq!(read_csv(&a.to_csv()).unwrap(), a.estimates);
    }

    #[test]
    fn lemma1_small_s_matches_poisson_tail() {
        let mut c = ExperimentConfig::new(ExperimentId::Lemma1, 20_000, 3);
        c.r = vec![3];
        c.s = vec![1];
        let rep = run(&c).unwrap();
        let e = &rep.estimates[0];
        let exact = crate::stats::poisson_tail_ge(3, 1.0);
        assert!((e.p_hat - exact).abs() < 4.0 * e.sigma(), "{} vs {exact}", e.p_hat);
    }

    #[test]
    fn fit_recovers_slope() {
        let est: Vec<TailEstimate> = (1..=5)
            .map(|r| {
                let mut e = TailEstimate::from_tally("x", Params::default(), Tally { hits: 1, n: 1, censored: 0 }, None);
                e.params.r = Some(r as f64);
                e.p_hat = (-(r as f64)).exp();
                e
            })
            .collect();
        let f = fit_decay(&est).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-9 && f.r_squared > 0.999_999);
        let flat: Vec<TailEstimate> = est
            .iter()
            .map(|e| {
                let mut e = e.clone();
                e.p_hat = 0.3;
                e
            })
            .collect();
        assert!(fit_decay(&flat).unwrap().slope.abs() < 1e-12);
        let zero: Vec<TailEstimate> = est
            .iter()
            .map(|e| {
                let mut e = e.clone();
                e.hits = 0;
                e
            })
            .collect();
        assert!(matches!(fit_decay(&zero), Err(Error::BelowResolution(_))));
    }

    #[test]
    fn random_animals_are_connected() {
        let mut rng = stream(1, 0, TAG_ANIMAL);
        for size in 1..8 {
            let a = random_animal(&mut rng, size, 2);
            assert_eq!(a.len(), size);
            assert!(a.is_connected());
        }
    }

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(verify_suite("nope", 10, 1).is_err());
    }
}
