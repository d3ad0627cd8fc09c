//! Convex polygon helpers used by the Voronoi construction.

use super::predicates::Point2;

/// Keeps the part of a convex polygon where `a·x <= b`.
pub fn clip_halfplane(poly: &[Point2], a: [f64; 2], b: f64) -> Vec<Point2> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    if n == 0 {
        return out;
    }
    let eval = |p: Point2| a[0] * p[0] + a[1] * p[1] - b;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let (fp, fq) = (eval(p), eval(q));
        if fp <= 0.0 {
            out.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            let t = fp / (fp - fq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// Keeps the part of a polygon with `sign * x[axis] <= sign * c`. Crossing
/// points get their `axis` coordinate set to `c` exactly, so touching
/// contacts with box sides survive rounding.
fn clip_axis(poly: &[Point2], axis: usize, c: f64, sign: f64) -> Vec<Point2> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let (fp, fq) = (sign * (p[axis] - c), sign * (q[axis] - c));
        if fp <= 0.0 {
            out.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            let t = fp / (fp - fq);
            let mut x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
            x[axis] = c;
            out.push(x);
        }
    }
    out
}

/// Intersection of a convex polygon with the closed box `[lo, hi]`.
pub fn clip_box(poly: &[Point2], lo: Point2, hi: Point2) -> Vec<Point2> {
    let q = clip_axis(poly, 0, hi[0], 1.0);
    let q = clip_axis(&q, 0, lo[0], -1.0);
    let q = clip_axis(&q, 1, hi[1], 1.0);
    clip_axis(&q, 1, lo[1], -1.0)
}

/// Whether a closed convex polygon meets the half-open box `[lo, hi)`.
///
/// The closed intersection `Q` is convex, so it meets the half-open box iff
/// some point of `Q` has `x < hi.x` and some (possibly other) point has
/// `y < hi.y`: the midpoint of two such points then has both.
pub fn meets_half_open_box(poly: &[Point2], lo: Point2, hi: Point2) -> bool {
    let q = clip_box(poly, lo, hi);
    !q.is_empty() && q.iter().any(|p| p[0] < hi[0]) && q.iter().any(|p| p[1] < hi[1])
}

/// Signed area, positive for counterclockwise order.
pub fn signed_area(poly: &[Point2]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        s += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * s
}

pub fn area(poly: &[Point2]) -> f64 {
    signed_area(poly).abs()
}

pub fn centroid(poly: &[Point2]) -> Option<Point2> {
    let a = signed_area(poly);
    if a == 0.0 {
        return None;
    }
    let n = poly.len();
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let w = p[0] * q[1] - q[0] * p[1];
        cx += (p[0] + q[0]) * w;
        cy += (p[1] + q[1]) * w;
    }
    Some([cx / (6.0 * a), cy / (6.0 * a)])
}

pub fn bbox(poly: &[Point2]) -> Option<(Point2, Point2)> {
    let first = *poly.first()?;
    let mut lo = first;
    let mut hi = first;
    for p in &poly[1..] {
        lo = [lo[0].min(p[0]), lo[1].min(p[1])];
        hi = [hi[0].max(p[0]), hi[1].max(p[1])];
    }
    Some((lo, hi))
}

/// Whether `p` lies in the closed convex polygon (counterclockwise), with
/// slack `eps` on each edge.
pub fn contains_closed(poly: &[Point2], p: Point2, eps: f64) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    (0..n).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        cross >= -eps * len
    })
}
