//! Property tests and brute-force oracles for the combinatorial layers.

use std::collections::{BTreeSet, HashSet};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vorpoly::estimate::{Params, TailEstimate, Tally};
use vorpoly::experiments::random_animal;
use vorpoly::geometry::{Point2, Tessellation, Triangulation};
use vorpoly::lattice::{max_weight_animal, WeightField};
use vorpoly::modified::{build_modified, verify_modified_invariants, ModifiedConfig};
use vorpoly::polyomino::{
    boxes_of, boxes_of_side, inverse_cover, max_boxes_at_size, min_boxes_at_size, sandwich_holds, segment_crossings,
    segment_tile_count, SearchOptions, VoronoiPolyomino,
};
use vorpoly::ppp::sample;
use vorpoly::{IntensityModel, Site, Window};

fn poisson_tess(lambda: f64, half: f64, seed: u64) -> Tessellation {
    let w = Window::centered_square(half).unwrap();
    Tessellation::new(sample(&w, &IntensityModel::homogeneous(lambda), seed, 0).unwrap()).unwrap()
}

/// Random connected set of `size` tiles grown from the tile of the origin.
fn grow(tess: &Tessellation, size: usize, rng: &mut ChaCha8Rng) -> VoronoiPolyomino {
    let tri = tess.triangulation();
    let mut set = vec![tess.nearest([0.0, 0.0])];
    while set.len() < size {
        let v = set[rng.random_range(0..set.len())];
        let nb: Vec<usize> = tri.neighbors(v).collect();
        let w = nb[rng.random_range(0..nb.len())];
        if !set.contains(&w) {
            set.push(w);
        }
    }
    VoronoiPolyomino::new(tess, &set).unwrap()
}

/// Unit boxes met by a tile, found by sampling a fine grid over its
/// bounding box and by the vertices of its polygon.
fn raster_boxes(tess: &Tessellation, v: usize, step: f64) -> BTreeSet<[i32; 2]> {
    let cell = tess.cell(v);
    let (lo, hi) = cell.bbox();
    let mut out = BTreeSet::new();
    let nx = ((hi[0] - lo[0]) / step).ceil() as usize;
    let ny = ((hi[1] - lo[1]) / step).ceil() as usize;
    for i in 0..=nx {
        for j in 0..=ny {
            let x = [lo[0] + i as f64 * step, lo[1] + j as f64 * step];
            if cell.contains(x, 0.0) {
                out.insert([(x[0] + 0.5).floor() as i32, (x[1] + 0.5).floor() as i32]);
            }
        }
    }
    out
}

fn dist_to_box(poly: &[Point2], z: [i32; 2]) -> f64 {
    // distance from the box to the polygon's boundary, sampled
    let c = [z[0] as f64, z[1] as f64];
    let mut best = f64::INFINITY;
    for k in 0..poly.len() {
        let (a, b) = (poly[k], poly[(k + 1) % poly.len()]);
        for t in 0..=200 {
            let t = t as f64 / 200.0;
            let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            let dx = ((p[0] - c[0]).abs() - 0.5).max(0.0);
            let dy = ((p[1] - c[1]).abs() - 0.5).max(0.0);
            best = best.min(dx.hypot(dy));
        }
    }
    best
}

#[test]
fn boxes_agree_with_rasterization() {
    let tess = poisson_tess(1.5, 9.0, 11);
    let mut checked = 0;
    for v in 0..tess.len() {
        let Ok(boxes) = tess.boxes_of_cell(v, 1.0) else { continue };
        if tess.cell(v).touches_window_boundary {
            continue;
        }
        let boxes: BTreeSet<[i32; 2]> = boxes.into_iter().collect();
        let raster = raster_boxes(&tess, v, 0.01);
        assert!(raster.is_subset(&boxes), "tile {v}: raster {raster:?} vs {boxes:?}");
        for z in boxes.difference(&raster) {
            assert!(dist_to_box(&tess.cell(v).polygon, *z) < 0.02, "tile {v} does not come near box {z:?}");
        }
        checked += 1;
    }
    assert!(checked > 100);
}

/// All connected tile sets of exactly `r` tiles containing `root`, grown one
/// tile at a time with a hash set removing repeats.
fn brute_force_sets(tri: &Triangulation, root: usize, r: usize) -> Vec<Vec<usize>> {
    let mut level: HashSet<Vec<usize>> = HashSet::from([vec![root]]);
    for _ in 1..r {
        let mut next = HashSet::new();
        for set in &level {
            for &v in set {
                for w in tri.neighbors(v) {
                    if !set.contains(&w) {
                        let mut s = set.clone();
                        s.push(w);
                        s.sort_unstable();
                        next.insert(s);
                    }
                }
            }
        }
        level = next;
    }
    level.into_iter().collect()
}

#[test]
fn extremal_box_counts_match_brute_force() {
    for seed in 0..4 {
        let tess = poisson_tess(1.0, 12.0, 40 + seed);
        let root = tess.nearest([0.0, 0.0]);
        let sets = brute_force_sets(tess.triangulation(), root, 5);
        let counts: Vec<usize> = sets.iter().map(|s| boxes_of_side(&tess, s, 1.0).unwrap().len()).collect();
        let opts = SearchOptions::default();
        let min = min_boxes_at_size(&tess, 5, &opts).unwrap();
        let max = max_boxes_at_size(&tess, 5, &opts).unwrap();
        assert!(!min.heuristic && !max.heuristic);
        assert_eq!(min.value as usize, *counts.iter().min().unwrap(), "seed {seed}");
        assert_eq!(max.value as usize, *counts.iter().max().unwrap(), "seed {seed}");
        assert_eq!(boxes_of(&tess, &min.witness).unwrap().len() as u64, min.value);
        assert_eq!(min.witness.len(), 5);
    }
}

#[test]
fn inverse_cover_is_the_overlap_set() {
    let tess = poisson_tess(2.0, 8.0, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for size in 1..=6 {
        let a = random_animal(&mut rng, size, 2);
        let cover = inverse_cover(&tess, &a).unwrap();
        let want: Vec<usize> = (0..tess.len())
            .filter(|&v| {
                let boxes = boxes_of_side(&tess, &[v], 1.0).unwrap_or_default();
                boxes.iter().any(|z| a.contains(&Site::new2(z[0], z[1])))
            })
            .collect();
        assert_eq!(cover.generators(), &want[..], "animal {}", a.to_line());
    }
}

/// Tiles crossed by `[x, y]`, by refining the nearest-generator labels of
/// sample points until neighbouring samples agree or lie 1e-12 apart.
fn crossings_by_refinement(tess: &Tessellation, x: Point2, y: Point2) -> Vec<usize> {
    let at = |t: f64| tess.nearest([x[0] + t * (y[0] - x[0]), x[1] + t * (y[1] - x[1])]);
    fn refine(at: &dyn Fn(f64) -> usize, a: f64, b: f64, va: usize, vb: usize, out: &mut Vec<usize>) {
        if va == vb {
            return;
        }
        if b - a < 1e-12 {
            out.push(vb);
            return;
        }
        let m = 0.5 * (a + b);
        let vm = at(m);
        refine(at, a, m, va, vm, out);
        refine(at, m, b, vm, vb, out);
    }
    let n = 400;
    let mut out = vec![at(0.0)];
    let mut prev = out[0];
    for i in 1..=n {
        let t = i as f64 / n as f64;
        let v = at(t);
        refine(&at, (i - 1) as f64 / n as f64, t, prev, v, &mut out);
        prev = v;
    }
    out
}

#[test]
fn segment_crossings_match_refinement() {
    let tess = poisson_tess(3.0, 8.0, 21);
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..60 {
        let x = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let y = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        assert_eq!(segment_crossings(&tess, x, y).unwrap(), crossings_by_refinement(&tess, x, y), "{x:?} -> {y:?}");
    }
}

fn tally_strategy() -> impl Strategy<Value = Tally> {
    (0u64..50, 0u64..50, 0u64..5).prop_map(|(h, extra, c)| Tally { hits: h, n: h + extra, censored: c })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tally_merge_is_order_free(ts in prop::collection::vec(tally_strategy(), 1..8), rot in 0usize..8) {
        let fold = |v: &[Tally]| v.iter().fold(Tally::default(), |mut a, t| { a.merge(t); a });
        let mut rotated = ts.clone();
        let k = rot % ts.len();
        rotated.rotate_left(k);
        let (mut left, right) = (fold(&ts[..ts.len() / 2]), fold(&ts[ts.len() / 2..]));
        left.merge(&right);
        let a = TailEstimate::from_tally("x", Params::default(), fold(&ts), Some(0.5));
        let b = TailEstimate::from_tally("x", Params::default(), fold(&rotated), Some(0.5));
        let c = TailEstimate::from_tally("x", Params::default(), left, Some(0.5));
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&a, &c);
    }

    #[test]
    fn max_weight_is_monotone_in_size(ws in prop::collection::vec(0u64..6, 81), s in 1usize..6) {
        let mut w = WeightField::new();
        for (i, &x) in ws.iter().enumerate() {
            w.set(Site::new2(i as i32 % 9 - 4, i as i32 / 9 - 4), x);
        }
        let a = max_weight_animal(&w, s, 7, 2).unwrap();
        let b = max_weight_animal(&w, s + 1, 7, 2).unwrap();
        prop_assert!(a.value <= b.value);
        prop_assert_eq!(w.total(a.witness.cells()), a.value);
    }

    #[test]
    fn delaunay_ignores_insertion_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Point2> = (0..60).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
        let mut perm: Vec<usize> = (0..pts.len()).collect();
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let shuffled: Vec<Point2> = perm.iter().map(|&i| pts[i]).collect();
        let edges = |t: &Triangulation, map: &dyn Fn(usize) -> usize| {
            let mut e: Vec<(usize, usize)> = t.edges().iter().map(|&(u, v)| (map(u).min(map(v)), map(u).max(map(v)))).collect();
            e.sort_unstable();
            e
        };
        let a = Triangulation::new(&pts).unwrap();
        let b = Triangulation::new(&shuffled).unwrap();
        prop_assert_eq!(edges(&a, &|u| u), edges(&b, &|u| perm[u]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sampled_polyominoes_satisfy_the_sandwich(seed in 0u64..1000, size in 1usize..12) {
        let tess = poisson_tess(1.0, 10.0, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = grow(&tess, size, &mut rng);
        prop_assert!(sandwich_holds(&tess, &p).unwrap());
    }

    #[test]
    fn odd_block_sides_scale_between_bounds(seed in 0u64..1000, size in 1usize..12, k in 0usize..3) {
        let l = [1.0, 3.0, 5.0][k];
        let tess = poisson_tess(1.0, 12.0, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let p = grow(&tess, size, &mut rng);
        let al = boxes_of_side(&tess, p.generators(), l).unwrap().len();
        let a1 = boxes_of(&tess, &p).unwrap().len();
        prop_assert!(al <= a1 && a1 <= (l * l) as usize * al, "L={} #A_L={} #A_1={}", l, al, a1);
    }

    #[test]
    fn any_block_side_scales_within_corrected_bounds(seed in 0u64..1000, size in 1usize..12, k in 0usize..3) {
        // blocks of even side straddle unit boxes; each block meets at most
        // (L + 1)^d unit boxes and each unit box meets at most 2^d blocks
        let l = [2.0, 4.0, 6.0][k];
        let tess = poisson_tess(1.0, 12.0, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let p = grow(&tess, size, &mut rng);
        let al = boxes_of_side(&tess, p.generators(), l).unwrap().len();
        let a1 = boxes_of(&tess, &p).unwrap().len();
        prop_assert!(al <= 4 * a1 && a1 <= ((l + 1.0) * (l + 1.0)) as usize * al);
    }

    #[test]
    fn segment_count_grows_along_a_ray(seed in 0u64..1000, angle in 0.0f64..std::f64::consts::TAU) {
        let tess = poisson_tess(2.0, 8.0, seed);
        let dir = [angle.cos(), angle.sin()];
        let mut prev = 0;
        for i in 1..=10 {
            let t = 0.4 * i as f64;
            let c = segment_tile_count(&tess, [0.0, 0.0], [t * dir[0], t * dir[1]]).unwrap();
            prop_assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn modified_process_keeps_counts_in_range(seed in 0u64..1000, k in 0usize..3, delta in 0.3f64..0.7) {
        let n = [8u64, 16, 32][k];
        let cfg = ModifiedConfig::new(n, delta).unwrap();
        let w = cfg.aligned_window(6.0);
        let p = sample(&w, &IntensityModel::homogeneous(1.0), seed, 0).unwrap();
        let m = build_modified(&p, &cfg, seed).unwrap();
        prop_assert!(verify_modified_invariants(&m, &cfg).unwrap().ok(&cfg));
        let again = build_modified(&p, &cfg, seed).unwrap();
        prop_assert_eq!(m.to_xy(), again.to_xy());
    }
}
