//! Orientation and in-circle predicates with exact fallback.
//!
//! Each predicate first evaluates the determinant in floating point and
//! accepts the sign when it clears a forward error bound. Otherwise the
//! determinant is recomputed exactly on big integers obtained by scaling
//! every input coordinate by a common power of two.

use std::cmp::Ordering;

use num_bigint::BigInt;

pub type Point2 = [f64; 2];

const EPS: f64 = f64::EPSILON * 0.5;
const CCW_ERR_BOUND: f64 = (3.0 + 16.0 * EPS) * EPS;
const ICC_ERR_BOUND: f64 = (10.0 + 96.0 * EPS) * EPS;

/// Sign of the determinant: `Greater` means positive.
pub type Sign = Ordering;

/// `Greater` if `a, b, c` turn counterclockwise, `Less` if clockwise,
/// `Equal` if collinear.
pub fn orient2d(a: Point2, b: Point2, c: Point2) -> Sign {
    let detleft = (a[0] - c[0]) * (b[1] - c[1]);
    let detright = (a[1] - c[1]) * (b[0] - c[0]);
    let det = detleft - detright;
    let bound = CCW_ERR_BOUND * (detleft.abs() + detright.abs());
    if det > bound {
        return Ordering::Greater;
    }
    if -det > bound {
        return Ordering::Less;
    }
    orient2d_exact(a, b, c)
}

/// `Greater` if `d` lies strictly inside the circle through the
/// counterclockwise triangle `a, b, c`, `Less` if strictly outside, `Equal`
/// if cocircular.
pub fn incircle(a: Point2, b: Point2, c: Point2, d: Point2) -> Sign {
    let adx = a[0] - d[0];
    let bdx = b[0] - d[0];
    let cdx = c[0] - d[0];
    let ady = a[1] - d[1];
    let bdy = b[1] - d[1];
    let cdy = c[1] - d[1];

    let bdxcdy = bdx * cdy;
    let cdxbdy = cdx * bdy;
    let alift = adx * adx + ady * ady;
    let cdxady = cdx * ady;
    let adxcdy = adx * cdy;
    let blift = bdx * bdx + bdy * bdy;
    let adxbdy = adx * bdy;
    let bdxady = bdx * ady;
    let clift = cdx * cdx + cdy * cdy;

    let det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady);
    let permanent = (bdxcdy.abs() + cdxbdy.abs()) * alift
        + (cdxady.abs() + adxcdy.abs()) * blift
        + (adxbdy.abs() + bdxady.abs()) * clift;
    let bound = ICC_ERR_BOUND * permanent;
    if det > bound {
        return Ordering::Greater;
    }
    if -det > bound {
        return Ordering::Less;
    }
    incircle_exact(a, b, c, d)
}

/// Lexicographic order on coordinates, the order used by the symbolic
/// perturbation.
pub fn lex_less(a: Point2, b: Point2) -> bool {
    (a[0], a[1]) < (b[0], b[1])
}

/// In-circle test under a symbolic perturbation that never returns
/// `Equal` for four distinct points with `a, b, c` counterclockwise.
///
/// When the four points are cocircular, the lexicographically largest of
/// them is treated as lying outside the circle through the other three;
/// if that point belongs to the triangle, the decision falls to an
/// orientation test against the query (and, if that is degenerate too, to
/// the next largest point).
pub fn incircle_perturbed(a: Point2, b: Point2, c: Point2, d: Point2) -> Sign {
    let s = incircle(a, b, c, d);
    if s != Ordering::Equal {
        return s;
    }
    // 0 = a, 1 = b, 2 = c, 3 = d
    let pts = [a, b, c, d];
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&i, &j| {
        let (p, q) = (pts[i], pts[j]);
        p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1]))
    });
    for &k in order[2..].iter().rev() {
        let o = match k {
            3 => return Ordering::Less,
            2 => orient2d(a, b, d),
            1 => orient2d(a, d, c),
            _ => orient2d(d, b, c),
        };
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Less
}

fn decompose(x: f64) -> (i64, i32) {
    let bits = x.to_bits();
    let sign = if bits >> 63 == 0 { 1 } else { -1 };
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i64;
    if exp == 0 {
        (sign * frac, -1074)
    } else {
        (sign * (frac | (1i64 << 52)), exp - 1075)
    }
}

/// Converts coordinates to integers sharing one power-of-two scale.
fn to_integers(values: &[f64]) -> Vec<BigInt> {
    let parts: Vec<(i64, i32)> = values.iter().map(|&v| decompose(v)).collect();
    let e_min = parts.iter().filter(|(m, _)| *m != 0).map(|&(_, e)| e).min().unwrap_or(0);
    parts
        .iter()
        .map(|&(m, e)| {
            if m == 0 {
                BigInt::from(0)
            } else {
                BigInt::from(m) << ((e - e_min) as usize)
            }
        })
        .collect()
}

fn sign_of(v: &BigInt) -> Sign {
    match v.sign() {
        num_bigint::Sign::Minus => Ordering::Less,
        num_bigint::Sign::NoSign => Ordering::Equal,
        num_bigint::Sign::Plus => Ordering::Greater,
    }
}

fn orient2d_exact(a: Point2, b: Point2, c: Point2) -> Sign {
    let v = to_integers(&[a[0], a[1], b[0], b[1], c[0], c[1]]);
    let (ax, ay, bx, by, cx, cy) = (&v[0], &v[1], &v[2], &v[3], &v[4], &v[5]);
    let det = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx);
    sign_of(&det)
}

fn incircle_exact(a: Point2, b: Point2, c: Point2, d: Point2) -> Sign {
    let v = to_integers(&[a[0], a[1], b[0], b[1], c[0], c[1], d[0], d[1]]);
    let adx = &v[0] - &v[6];
    let ady = &v[1] - &v[7];
    let bdx = &v[2] - &v[6];
    let bdy = &v[3] - &v[7];
    let cdx = &v[4] - &v[6];
    let cdy = &v[5] - &v[7];
    let alift = &adx * &adx + &ady * &ady;
    let blift = &bdx * &bdx + &bdy * &bdy;
    let clift = &cdx * &cdx + &cdy * &cdy;
    let det = alift * (&bdx * &cdy - &cdx * &bdy) + blift * (&cdx * &ady - &adx * &cdy)
        + clift * (&adx * &bdy - &bdx * &ady);
    sign_of(&det)
}
