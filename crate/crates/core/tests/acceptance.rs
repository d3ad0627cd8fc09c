//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach the output.
//! Exits nonzero when any criterion fails.

use std::collections::{BTreeMap, HashSet};
use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vorpoly::blocks::full_box_probability;
use vorpoly::experiments::{
    fit_decay, run, verify_cluster_product_suite, verify_confinement_suite, verify_modified_suite, ExperimentConfig,
    ExperimentId, Goal, RunReport,
};
use vorpoly::geometry::{Point2, Tessellation, Triangulation};
use vorpoly::lattice::{alpha_bound, count_animals_by_size};
use vorpoly::stats::{poisson_pmf, poisson_tail_ge};
use vorpoly::{PointSet, Site, TailEstimate, Window};

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
    notes: Vec<String>,
}

fn report(n: usize, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let o = f();
    let took = t.elapsed();
    let in_time = took <= limit;
    let pass = o.pass && in_time;
    println!(
        "criterion {n} {name}: {} ({}; {:.1}s of {}s)",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        took.as_secs_f64(),
        limit.as_secs()
    );
    for note in o.notes {
        println!("    {note}");
    }
    pass
}

fn minutes(m: u64) -> Duration {
    Duration::from_secs(60 * m)
}

// ---- 1. geometry ----

fn q(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

fn incircle_exact(a: Point2, b: Point2, c: Point2, d: Point2) -> i32 {
    let row = |p: Point2| {
        let x = q(p[0]) - q(d[0]);
        let y = q(p[1]) - q(d[1]);
        let w = &x * &x + &y * &y;
        (x, y, w)
    };
    let (ax, ay, aw) = row(a);
    let (bx, by, bw) = row(b);
    let (cx, cy, cw) = row(c);
    let det = &ax * (&by * &cw - &bw * &cy) - &ay * (&bx * &cw - &bw * &cx) + &aw * (&bx * &cy - &by * &cx);
    if det.is_zero() {
        0
    } else if det.is_positive() {
        1
    } else {
        -1
    }
}

fn incircle_sign(a: Point2, b: Point2, c: Point2, d: Point2) -> i32 {
    let r = |p: Point2| {
        let (x, y) = (p[0] - d[0], p[1] - d[1]);
        (x, y, x * x + y * y)
    };
    let ((ax, ay, aw), (bx, by, bw), (cx, cy, cw)) = (r(a), r(b), r(c));
    let det = ax * (by * cw - bw * cy) - ay * (bx * cw - bw * cx) + aw * (bx * cy - by * cx);
    let perm = ax.abs() * ((by * cw).abs() + (bw * cy).abs())
        + ay.abs() * ((bx * cw).abs() + (bw * cx).abs())
        + aw * ((bx * cy).abs() + (by * cx).abs());
    if det.abs() > 1e-12 * perm {
        return if det > 0.0 { 1 } else { -1 };
    }
    incircle_exact(a, b, c, d)
}

fn shares_edge(a: &[Point2], b: &[Point2]) -> bool {
    a.iter().filter(|p| b.iter().any(|r| (p[0] - r[0]).abs() <= 1e-7 && (p[1] - r[1]).abs() <= 1e-7)).count() >= 2
}

fn geometry() -> Outcome {
    let (mut bad_circles, mut worst_area, mut dual_mismatch) = (0usize, 0.0f64, 0usize);
    for rep in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + rep);
        let pts: Vec<Point2> = (0..200).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
        let tri = Triangulation::new(&pts).unwrap();
        for t in tri.triangles() {
            let [a, b, c] = t.map(|v| pts[v]);
            bad_circles += pts.iter().enumerate().filter(|(v, &p)| !t.contains(v) && incircle_sign(a, b, c, p) >= 0).count();
        }
        let unit = Tessellation::new(PointSet::from_xy(Window::rect(0.0, 0.0, 1.0, 1.0).unwrap(), &pts).unwrap()).unwrap();
        let total: f64 = (0..unit.len()).map(|v| unit.cell(v).area()).sum();
        worst_area = worst_area.max((total - 1.0).abs());
        let wide = Tessellation::new(PointSet::from_xy(Window::rect(-1e4, -1e4, 1e4, 1e4).unwrap(), &pts).unwrap()).unwrap();
        for u in 0..pts.len() {
            for v in u + 1..pts.len() {
                if shares_edge(&wide.cell(u).polygon, &wide.cell(v).polygon) != wide.triangulation().are_adjacent(u, v) {
                    dual_mismatch += 1;
                }
            }
        }
    }
    Outcome {
        pass: bad_circles == 0 && worst_area <= 1e-9 && dual_mismatch == 0,
        detail: format!(
            "100 x 200 points: {bad_circles} circumcircle violations, max area error {worst_area:.1e}, {dual_mismatch} duality mismatches"
        ),
        notes: vec![],
    }
}

// ---- 2. animal counts ----

fn brute_force_counts(s_max: usize) -> Vec<u64> {
    let mut level: HashSet<Vec<Site>> = HashSet::from([vec![Site::ORIGIN]]);
    let mut counts = vec![1u64];
    for _ in 1..s_max {
        let mut next = HashSet::new();
        for set in &level {
            for c in set {
                for n in c.neighbors(2) {
                    if !set.contains(&n) {
                        let mut s = set.clone();
                        s.push(n);
                        s.sort_unstable();
                        next.insert(s);
                    }
                }
            }
        }
        counts.push(next.len() as u64);
        level = next;
    }
    counts
}

fn combinatorics() -> Outcome {
    let fast = count_animals_by_size(8, 2).unwrap();
    let brute = brute_force_counts(8);
    let alpha = alpha_bound(2).unwrap() as f64;
    let mut cumulative = 0u64;
    let mut under = true;
    for (k, c) in fast.iter().enumerate() {
        cumulative += c;
        under &= (cumulative as f64) <= alpha.powi(k as i32 + 1);
    }
    Outcome {
        pass: fast == brute && under,
        detail: format!("sizes 1..8 {fast:?} vs oracle {brute:?}; #Phi_<=8 = {cumulative} <= 256^s at every s: {under}"),
        notes: vec![],
    }
}

// ---- 3. explicit tail bound, s = 1 ----

fn lemma1() -> Outcome {
    let mut c = ExperimentConfig::new(ExperimentId::Lemma1, 1_000_000, SEED);
    c.r = vec![15];
    c.s = vec![1];
    c.c_mu = Some(1.0);
    let rep = run(&c).unwrap();
    let e = &rep.estimates[0];
    let b1 = vorpoly::experiments::b1(2, 1.0);
    let exact = poisson_tail_ge(15, 1.0);
    let by_pmf: f64 = (15..60).map(|k| poisson_pmf(k, 1.0)).sum();
    let bound = (-7.5f64).exp();
    let pass = e.pass && e.bound == Some(bound) && 15.0 >= b1 && (exact - by_pmf).abs() <= 1e-6 * exact && exact <= bound;
    Outcome {
        pass,
        detail: format!(
            "b1 = {b1:.4}; {} hits in {} replicates, p_hat - 3 sigma = {:.2e} <= e^-7.5 = {bound:.3e}; exact P(N_0 >= 15) = {exact:.4e}",
            e.hits,
            e.replicates,
            e.p_hat - 3.0 * e.sigma()
        ),
        notes: vec![format!(
            "the quoted reference 2.3e-13 for the exact tail differs from the pmf sum {by_pmf:.4e}; the pmf value is used"
        )],
    }
}

// ---- 4. full-box probability ----

fn lemma7() -> Outcome {
    let r = full_box_probability(20.0, 2, 1.0, 100_000, SEED).unwrap();
    let pass = r.exact <= r.proof_bound && r.ci_contains_exact && (r.exact - 0.4414).abs() < 5e-4;
    Outcome {
        pass,
        detail: format!(
            "exact {:.6} <= bound {:.6}; 95% CI [{:.5}, {:.5}] over {} replicates contains exact: {}",
            r.exact, r.proof_bound, r.estimate.ci_lo, r.estimate.ci_hi, r.estimate.replicates, r.ci_contains_exact
        ),
        notes: vec![format!("81 e^-(20/9)^2 evaluates to {:.6}; the quoted reference is 0.5829", r.proof_bound)],
    }
}

// ---- 5, 6: suites ----

fn confinement() -> Outcome {
    let r = verify_confinement_suite(1000, SEED).unwrap();
    Outcome { pass: r.passed, detail: "1000 configurations, lambda in {5, 20}, L in {2, 4}".into(), notes: r.lines }
}

fn cluster_product() -> Outcome {
    let r = verify_cluster_product_suite(100_000, SEED).unwrap();
    Outcome { pass: r.passed, detail: "9 cells, 10^5 replicates each".into(), notes: r.lines }
}

// ---- 7, 8: decay direction and invariants ----
//
// Each experiment runs once on a broad crossed grid. Series are read off
// along r: at fixed s for min-type events and reward/inverse/segment
// events, along rays s = ceil(k r) for max-type events. A pilot run on a
// separate seed picks, per series, the r values on the tail side of the
// distribution (0 < p_hat <= 0.9); the fit uses the main run there only.
// Max-type bounds only hold for s >= b2 r, and b2 must exceed the growth
// rate of max #A / r, below which the event becomes certain; rays are kept
// when k >= 1.25 times that rate as read off the pilot at the largest r.

const RAYS: [f64; 7] = [1.5, 2.0, 2.5, 3.0, 4.0, 6.0, 8.0];
const PILOT_REPLICATES: u64 = 200;
const SATURATED: f64 = 0.9;
const RAY_FACTOR: f64 = 1.25;

/// Median of the statistic at the largest size divided by that size.
fn growth_rate(pilot: &[TailEstimate]) -> f64 {
    let r_max = pilot.iter().filter_map(|e| e.params.r).fold(0.0, f64::max);
    let median = pilot
        .iter()
        .filter(|e| e.params.r == Some(r_max) && e.p_hat <= 0.5)
        .filter_map(|e| e.params.s)
        .fold(f64::INFINITY, f64::min);
    median / r_max
}

fn config(e: ExperimentId, r: Vec<u64>, s: Vec<u64>, reps: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(e, reps, SEED);
    c.r = r;
    c.s = s;
    c.scaling_l = vec![2.0, 3.0, 4.0];
    c
}

/// The runs whose decay in `r` is checked, with whether their series lie
/// along rays.
fn decay_configs(reps: u64) -> Vec<(&'static str, ExperimentConfig, bool)> {
    let sizes: Vec<u64> = (1..=8).collect();
    let thresholds: Vec<u64> = (1..=20).collect();
    let mut out = vec![
        ("min #A over size >= r", config(ExperimentId::T1Min, sizes.clone(), (1..=12).collect(), reps), false),
        ("max #A over size <= r", config(ExperimentId::T1Max, sizes.clone(), (1..=64).collect(), reps), true),
    ];
    let mut c = config(ExperimentId::C1Paths, sizes.clone(), (1..=12).collect(), reps);
    c.goal = Goal::Min;
    out.push(("paths: min #A", c, false));
    let mut c = config(ExperimentId::C1Paths, sizes.clone(), (1..=64).collect(), reps);
    c.goal = Goal::Max;
    out.push(("paths: max #A", c, true));
    out.push(("#P(A) over #A <= s", config(ExperimentId::T2Inverse, thresholds.clone(), vec![1, 2], reps), false));
    out.push(("segment tiles over |x| <= s", config(ExperimentId::C2Segment, thresholds, vec![1, 2, 3], reps), false));
    let mut c = config(ExperimentId::Thm4Reward, (2..=8).collect(), vec![0, 1, 2], reps);
    c.p = vec![0.9];
    out.push(("path reward, P(tau = 1) = 0.9", c, false));
    out
}

fn series_of(est: &[TailEstimate], ray: bool) -> BTreeMap<String, Vec<TailEstimate>> {
    let mut out: BTreeMap<String, Vec<TailEstimate>> = BTreeMap::new();
    for e in est {
        let (r, s) = (e.params.r.unwrap(), e.params.s.unwrap());
        if ray {
            for k in RAYS {
                if s == (k * r - 1e-9).ceil() {
                    out.entry(format!("s=ceil({k}r)")).or_default().push(e.clone());
                }
            }
        } else {
            let p = e.params.p.map(|p| format!(" p={p}")).unwrap_or_default();
            out.entry(format!("s={s}{p}")).or_default().push(e.clone());
        }
    }
    out
}

fn ray_k(key: &str) -> f64 {
    key.trim_start_matches("s=ceil(").trim_end_matches("r)").parse().unwrap()
}

#[derive(Default)]
struct DecaySummary {
    fits: usize,
    bad_fits: usize,
    skipped: usize,
    polyominoes: u64,
    sandwich_failures: u64,
    scaling: Vec<(f64, u64)>,
    censored: u64,
    attempted: u64,
    bounds_ok: bool,
    heuristic: u64,
    notes: Vec<String>,
}

fn decay_suite(modified: Option<(u64, f64)>, reps: u64) -> DecaySummary {
    let mut sum = DecaySummary { bounds_ok: true, scaling: vec![(2.0, 0), (3.0, 0), (4.0, 0)], ..Default::default() };
    for (name, mut c, ray) in decay_configs(reps) {
        if let Some((n, delta)) = modified {
            c.n = Some(n);
            c.delta = Some(delta);
        }
        let mut pilot_cfg = c.clone();
        pilot_cfg.seed = SEED + 1;
        pilot_cfg.replicates = PILOT_REPLICATES;
        let pilot_est = run(&pilot_cfg).unwrap().estimates;
        let pilot = series_of(&pilot_est, ray);
        let min_ray = if ray {
            let g = growth_rate(&pilot_est);
            sum.notes.push(format!("{name}: pilot growth rate of the max {g:.2} per tile; rays need k >= {:.2}", RAY_FACTOR * g));
            RAY_FACTOR * g
        } else {
            0.0
        };
        let rep: RunReport = run(&c).unwrap();
        sum.censored += rep.censored;
        sum.attempted += rep.attempted;
        sum.heuristic += rep.heuristic_values;
        sum.bounds_ok &= rep.estimates.iter().all(|e| e.pass);
        sum.polyominoes += rep.invariants.polyominoes;
        sum.sandwich_failures += rep.invariants.sandwich_failures;
        for (acc, (_, f)) in sum.scaling.iter_mut().zip(&rep.invariants.scaling_failures) {
            acc.1 += f;
        }
        let mut informative = 0;
        for (key, rows) in series_of(&rep.estimates, ray) {
            if ray && ray_k(&key) < min_ray {
                sum.notes.push(format!("skip {name} [{key}]: below the growth rate"));
                continue;
            }
            let window: Vec<f64> = pilot[&key]
                .iter()
                .filter(|e| e.hits > 0 && e.p_hat <= SATURATED)
                .map(|e| e.params.r.unwrap())
                .collect();
            if window.len() < 3 {
                continue;
            }
            informative += 1;
            let rows: Vec<TailEstimate> = rows.into_iter().filter(|e| window.contains(&e.params.r.unwrap())).collect();
            let label = format!("{name} [{key}] r in {:?}", window.iter().map(|r| *r as u64).collect::<Vec<_>>());
            match fit_decay(&rows) {
                Ok(f) => {
                    sum.fits += 1;
                    let ok = f.slope < 0.0 && f.r_squared >= 0.8;
                    if !ok {
                        sum.bad_fits += 1;
                    }
                    sum.notes.push(format!(
                        "{} {label}: slope {:.3}, R^2 {:.3} over {} points",
                        if ok { "ok  " } else { "BAD " },
                        f.slope,
                        f.r_squared,
                        f.points
                    ));
                }
                Err(e) => {
                    sum.skipped += 1;
                    sum.notes.push(format!("skip {label}: {e}"));
                }
            }
        }
        if informative == 0 {
            sum.notes.push(format!("skip {name}: no series has 3 informative grid points"));
        }
    }
    sum
}

fn decay_outcome(sum: DecaySummary, what: &str) -> Outcome {
    let scaling_ok = sum.scaling.iter().all(|(_, f)| *f == 0);
    let mut notes = sum.notes;
    notes.push(format!(
        "scaling #A_L <= #A_1 <= L^2 #A_L failures: {}",
        sum.scaling.iter().map(|(l, f)| format!("L={l}: {f}/{}", sum.polyominoes)).collect::<Vec<_>>().join(", ")
    ));
    notes.push(format!("censored {}/{} replicates; {} beam-search values", sum.censored, sum.attempted, sum.heuristic));
    Outcome {
        pass: sum.bad_fits == 0 && sum.fits > 0 && sum.sandwich_failures == 0 && scaling_ok && sum.bounds_ok,
        detail: format!(
            "{what}: {}/{} fits negative with R^2 >= 0.8 ({} series below resolution); sandwich {}/{}; scaling holds for all L: {scaling_ok}",
            sum.fits - sum.bad_fits,
            sum.fits,
            sum.skipped,
            sum.polyominoes - sum.sandwich_failures,
            sum.polyominoes
        ),
        notes,
    }
}

fn modified_model() -> Outcome {
    let suite = verify_modified_suite(200, SEED).unwrap();
    let mut notes = suite.lines.clone();
    let mut pass = suite.passed;
    for n in [8u64, 16, 32] {
        let o = decay_outcome(decay_suite(Some((n, 0.5)), 400), &format!("N({n})"));
        pass &= o.pass;
        notes.push(format!("{} {}", if o.pass { "[PASS]" } else { "[FAIL]" }, o.detail));
        notes.extend(o.notes.into_iter().map(|l| format!("    {l}")));
    }
    Outcome { pass, detail: "counts, altered fraction and rerun decay suites on N(n), n in {8, 16, 32}".into(), notes }
}

// ---- 9. determinism and censoring ----

fn determinism() -> Outcome {
    let (_, c, _) = decay_configs(200).into_iter().next().unwrap();
    let a = run(&c).unwrap().to_csv();
    let b = run(&c).unwrap().to_csv();
    let mut censored = 0;
    let mut attempted = 0;
    for (_, c, _) in decay_configs(200) {
        let r = run(&c).unwrap();
        censored += r.censored;
        attempted += r.attempted;
    }
    let rate = censored as f64 / attempted as f64;
    Outcome {
        pass: a == b && rate < 0.01,
        detail: format!("repeat run byte-identical: {}; censored {censored}/{attempted} = {:.3}%", a == b, 100.0 * rate),
        notes: vec![],
    }
}

fn main() {
    let _ = env_logger::builder().is_test(true).try_init();
    let results = [
        report(1, "geometry", minutes(1), geometry),
        report(2, "animal counts", minutes(1), combinatorics),
        report(3, "explicit tail bound", minutes(2), lemma1),
        report(4, "full-box probability", minutes(5), lemma7),
        report(5, "confinement", minutes(10), confinement),
        report(6, "cluster product", minutes(10), cluster_product),
        report(7, "decay direction and invariants", minutes(30), || decay_outcome(decay_suite(None, 1000), "Poisson")),
        report(8, "modified model", minutes(30), modified_model),
        report(9, "determinism and censoring", minutes(10), determinism),
    ];
    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
