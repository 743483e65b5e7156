//! Exact planar geometry over the rationals.
//!
//! Everything downstream (slit placement, gluing checks, trajectory
//! development) is decided with exact `BigRational` arithmetic; floats only
//! appear at rendering time. Rationals serialize as `"p/q"` strings.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    BigRational::from_integer(BigInt::from(n))
}

pub fn qr(num: i64, den: i64) -> Q {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn q_to_string(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn q_from_str(s: &str) -> Result<Q, String> {
    let s = s.trim();
    match s.split_once('/') {
        None => BigInt::from_str(s)
            .map(BigRational::from_integer)
            .map_err(|e| format!("bad rational {s:?}: {e}")),
        Some((p, qd)) => {
            let p = BigInt::from_str(p.trim()).map_err(|e| format!("bad rational {s:?}: {e}"))?;
            let qd = BigInt::from_str(qd.trim()).map_err(|e| format!("bad rational {s:?}: {e}"))?;
            if qd.is_zero() {
                return Err(format!("bad rational {s:?}: zero denominator"));
            }
            Ok(BigRational::new(p, qd))
        }
    }
}

pub mod rat_serde {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&q_to_string(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        q_from_str(&s).map_err(D::Error::custom)
    }
}

/// A point or vector in the plane with rational coordinates.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Vec2 {
    pub x: Q,
    pub y: Q,
}

impl Vec2 {
    pub fn new(x: Q, y: Q) -> Self {
        Vec2 { x, y }
    }

    pub fn zero() -> Self {
        Vec2 { x: Q::zero(), y: Q::zero() }
    }

    pub fn of(x: i64, y: i64) -> Self {
        Vec2 { x: q(x), y: q(y) }
    }

    pub fn add(&self, o: &Vec2) -> Vec2 {
        Vec2 { x: &self.x + &o.x, y: &self.y + &o.y }
    }

    pub fn sub(&self, o: &Vec2) -> Vec2 {
        Vec2 { x: &self.x - &o.x, y: &self.y - &o.y }
    }

    pub fn scale(&self, k: &Q) -> Vec2 {
        Vec2 { x: &self.x * k, y: &self.y * k }
    }

    pub fn neg(&self) -> Vec2 {
        Vec2 { x: -&self.x, y: -&self.y }
    }

    pub fn dot(&self, o: &Vec2) -> Q {
        &self.x * &o.x + &self.y * &o.y
    }

    pub fn cross(&self, o: &Vec2) -> Q {
        &self.x * &o.y - &self.y * &o.x
    }

    pub fn norm2(&self) -> Q {
        self.dot(self)
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    /// Parallel with the same orientation (both nonzero).
    pub fn same_direction(&self, o: &Vec2) -> bool {
        !self.is_zero() && !o.is_zero() && self.cross(o).is_zero() && self.dot(o).is_positive()
    }
}

impl fmt::Debug for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", q_to_string(&self.x), q_to_string(&self.y))
    }
}

impl Serialize for Vec2 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [q_to_string(&self.x), q_to_string(&self.y)].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vec2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x, y] = <[String; 2]>::deserialize(d)?;
        Ok(Vec2 {
            x: q_from_str(&x).map_err(D::Error::custom)?,
            y: q_from_str(&y).map_err(D::Error::custom)?,
        })
    }
}

/// A 2x2 rational matrix, row major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Mat2 {
    pub a: Q,
    pub b: Q,
    pub c: Q,
    pub d: Q,
}

impl Mat2 {
    pub fn new(a: Q, b: Q, c: Q, d: Q) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn of(a: i64, b: i64, c: i64, d: i64) -> Self {
        Mat2 { a: q(a), b: q(b), c: q(c), d: q(d) }
    }

    pub fn identity() -> Self {
        Mat2::of(1, 0, 0, 1)
    }

    pub fn det(&self) -> Q {
        &self.a * &self.d - &self.b * &self.c
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: &self.a * &o.a + &self.b * &o.c,
            b: &self.a * &o.b + &self.b * &o.d,
            c: &self.c * &o.a + &self.d * &o.c,
            d: &self.c * &o.b + &self.d * &o.d,
        }
    }

    pub fn apply(&self, v: &Vec2) -> Vec2 {
        Vec2 {
            x: &self.a * &v.x + &self.b * &v.y,
            y: &self.c * &v.x + &self.d * &v.y,
        }
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let det = self.det();
        if det.is_zero() {
            return None;
        }
        Some(Mat2 {
            a: &self.d / &det,
            b: -&self.b / &det,
            c: -&self.c / &det,
            d: &self.a / &det,
        })
    }

    pub fn is_identity(&self) -> bool {
        self.a.is_one() && self.b.is_zero() && self.c.is_zero() && self.d.is_one()
    }

    /// Orthogonal check: A^T A = I.
    pub fn is_orthogonal(&self) -> bool {
        let ata = Mat2 {
            a: self.a.clone(),
            b: self.c.clone(),
            c: self.b.clone(),
            d: self.d.clone(),
        }
        .mul(self);
        ata.is_identity()
    }
}

impl fmt::Debug for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            q_to_string(&self.a),
            q_to_string(&self.b),
            q_to_string(&self.c),
            q_to_string(&self.d)
        )
    }
}

impl Serialize for Mat2 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [
            [q_to_string(&self.a), q_to_string(&self.b)],
            [q_to_string(&self.c), q_to_string(&self.d)],
        ]
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mat2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [[a, b], [c, dd]] = <[[String; 2]; 2]>::deserialize(d)?;
        let p = |s: &str| q_from_str(s).map_err(D::Error::custom);
        Ok(Mat2 { a: p(&a)?, b: p(&b)?, c: p(&c)?, d: p(&dd)? })
    }
}

/// Closed segment from `a` to `b` (`a != b`).
#[derive(Clone, Debug)]
pub struct Seg {
    pub a: Vec2,
    pub b: Vec2,
}

impl Seg {
    pub fn new(a: Vec2, b: Vec2) -> Self {
        Seg { a, b }
    }

    pub fn dir(&self) -> Vec2 {
        self.b.sub(&self.a)
    }

    pub fn at(&self, t: &Q) -> Vec2 {
        self.a.add(&self.dir().scale(t))
    }
}

fn between(lo: &Q, x: &Q, hi: &Q) -> bool {
    let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    lo <= x && x <= hi
}

/// Does the closed segment contain the point?
pub fn seg_contains(s: &Seg, p: &Vec2) -> bool {
    let d = s.dir();
    let ap = p.sub(&s.a);
    d.cross(&ap).is_zero() && between(&s.a.x, &p.x, &s.b.x) && between(&s.a.y, &p.y, &s.b.y)
}

/// Does the open segment (endpoints excluded) contain the point?
pub fn seg_interior_contains(s: &Seg, p: &Vec2) -> bool {
    seg_contains(s, p) && *p != s.a && *p != s.b
}

/// Do two closed segments intersect (including touching and overlap)?
pub fn segs_intersect(s1: &Seg, s2: &Seg) -> bool {
    let d1 = s1.dir();
    let d2 = s2.dir();
    let r = s2.a.sub(&s1.a);
    let denom = d1.cross(&d2);
    if denom.is_zero() {
        if !d1.cross(&r).is_zero() {
            return false; // parallel, distinct lines
        }
        // collinear: compare 1-d projections onto d1
        let t0 = r.dot(&d1);
        let t1 = &t0 + d2.dot(&d1);
        let len = d1.norm2();
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        return !(hi.is_negative() || lo > len);
    }
    let t = r.cross(&d2) / &denom;
    let u = r.cross(&d1) / &denom;
    (Q::zero()..=Q::one()).contains(&t) && (Q::zero()..=Q::one()).contains(&u)
}

/// Transversal crossing of the *open* interior of `portal` by segment `s`:
/// returns the parameter t on `s` (0 <= t <= 1) if the segment meets the open
/// portal off the portal's endpoints and off the portal's line direction.
pub fn seg_crosses_portal(s: &Seg, portal: &Seg) -> Option<Q> {
    let d1 = s.dir();
    let d2 = portal.dir();
    let denom = d1.cross(&d2);
    if denom.is_zero() {
        return None;
    }
    let r = portal.a.sub(&s.a);
    let t = r.cross(&d2) / &denom;
    let u = r.cross(&d1) / &denom;
    if (Q::zero()..=Q::one()).contains(&t) && u.is_positive() && u < Q::one() {
        Some(t)
    } else {
        None
    }
}

/// Squared distance from a point to a closed segment.
pub fn dist2_point_seg(p: &Vec2, s: &Seg) -> Q {
    let d = s.dir();
    let len2 = d.norm2();
    let t = p.sub(&s.a).dot(&d) / &len2;
    let t = t.max(Q::zero()).min(Q::one());
    p.sub(&s.at(&t)).norm2()
}

/// Squared distance between two closed segments.
pub fn dist2_segs(s1: &Seg, s2: &Seg) -> Q {
    if segs_intersect(s1, s2) {
        return Q::zero();
    }
    [
        dist2_point_seg(&s1.a, s2),
        dist2_point_seg(&s1.b, s2),
        dist2_point_seg(&s2.a, s1),
        dist2_point_seg(&s2.b, s1),
    ]
    .into_iter()
    .min()
    .unwrap()
}

/// Convex polygon given by vertices in counterclockwise order.
#[derive(Clone, Debug)]
pub struct ConvexPoly {
    pub verts: Vec<Vec2>,
}

impl ConvexPoly {
    pub fn edges(&self) -> impl Iterator<Item = Seg> + '_ {
        let n = self.verts.len();
        (0..n).map(move |i| Seg::new(self.verts[i].clone(), self.verts[(i + 1) % n].clone()))
    }

    /// Strict interior containment.
    pub fn contains_interior(&self, p: &Vec2) -> bool {
        let n = self.verts.len();
        (0..n).all(|i| {
            let a = &self.verts[i];
            let b = &self.verts[(i + 1) % n];
            b.sub(a).cross(&p.sub(a)).is_positive()
        })
    }

    /// Does the closed segment meet the open interior of the polygon?
    pub fn seg_meets_interior(&self, s: &Seg) -> bool {
        if self.contains_interior(&s.a) || self.contains_interior(&s.b) {
            return true;
        }
        // Clip the segment parameter interval against every half-plane; a
        // nonempty open intersection means the segment passes through.
        let d = s.dir();
        let mut lo = Q::zero();
        let mut hi = Q::one();
        let n = self.verts.len();
        for i in 0..n {
            let a = &self.verts[i];
            let e = self.verts[(i + 1) % n].sub(a);
            // interior: e x (p - a) > 0
            let f0 = e.cross(&s.a.sub(a));
            let fd = e.cross(&d);
            if fd.is_zero() {
                if !f0.is_positive() {
                    return false;
                }
            } else if fd.is_positive() {
                let t = -f0 / fd;
                if t > lo {
                    lo = t;
                }
            } else {
                let t = -f0 / fd;
                if t < hi {
                    hi = t;
                }
            }
            if lo >= hi {
                return false;
            }
        }
        true
    }

    pub fn translate(&self, v: &Vec2) -> ConvexPoly {
        ConvexPoly { verts: self.verts.iter().map(|p| p.add(v)).collect() }
    }

    pub fn map(&self, m: &Mat2, off: &Vec2) -> ConvexPoly {
        ConvexPoly { verts: self.verts.iter().map(|p| m.apply(p).add(off)).collect() }
    }
}

/// An integer upper bound for sqrt(x), x >= 0.
pub fn sqrt_upper_bound(x: &Q) -> BigInt {
    let mut b = BigInt::one();
    while BigRational::from_integer(&b * &b) < *x {
        b *= 2;
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: i64, y: i64) -> Vec2 {
        Vec2::of(x, y)
    }

    #[test]
    fn rational_strings_round_trip() {
        for s in ["3", "-4", "1/2", "-7/3", "0"] {
            assert_eq!(q_to_string(&q_from_str(s).unwrap()), s);
        }
        assert_eq!(q_to_string(&q_from_str("2/4").unwrap()), "1/2");
        assert!(q_from_str("1/0").is_err());
        assert!(q_from_str("x").is_err());
    }

    #[test]
    fn segment_intersection_cases() {
        let s1 = Seg::new(v(0, 0), v(4, 0));
        assert!(segs_intersect(&s1, &Seg::new(v(2, -1), v(2, 1))));
        assert!(segs_intersect(&s1, &Seg::new(v(4, 0), v(6, 0)))); // touching
        assert!(segs_intersect(&s1, &Seg::new(v(3, 0), v(9, 0)))); // overlap
        assert!(!segs_intersect(&s1, &Seg::new(v(5, 0), v(6, 0))));
        assert!(!segs_intersect(&s1, &Seg::new(v(0, 1), v(4, 1))));
    }

    #[test]
    fn portal_crossing_is_transversal_and_interior() {
        let portal = Seg::new(v(0, 0), v(1, 0));
        let t = seg_crosses_portal(&Seg::new(v(0, -1), v(1, 1)), &portal).unwrap();
        assert_eq!(t, qr(1, 2));
        // through an endpoint: not a crossing
        assert!(seg_crosses_portal(&Seg::new(v(0, -1), v(0, 1)), &portal).is_none());
        // collinear: not a crossing
        assert!(seg_crosses_portal(&Seg::new(v(-1, 0), v(2, 0)), &portal).is_none());
    }

    #[test]
    fn convex_polygon_queries() {
        let sq = ConvexPoly { verts: vec![v(0, 0), v(2, 0), v(2, 2), v(0, 2)] };
        assert!(sq.contains_interior(&v(1, 1)));
        assert!(!sq.contains_interior(&v(0, 1))); // boundary
        assert!(sq.seg_meets_interior(&Seg::new(v(-1, 1), v(3, 1))));
        assert!(!sq.seg_meets_interior(&Seg::new(v(-1, 0), v(3, 0)))); // runs along edge
        assert!(!sq.seg_meets_interior(&Seg::new(v(3, 0), v(3, 2))));
    }

    #[test]
    fn distances() {
        let s = Seg::new(v(0, 0), v(2, 0));
        assert_eq!(dist2_point_seg(&v(1, 3), &s), q(9));
        assert_eq!(dist2_point_seg(&v(5, 0), &s), q(9));
        assert_eq!(dist2_segs(&s, &Seg::new(v(0, 2), v(2, 2))), q(4));
    }

    #[test]
    fn matrix_algebra() {
        let a = Mat2::of(2, 1, 0, 1);
        let b = Mat2::of(1, 0, 3, 1);
        assert_eq!(a.mul(&b).apply(&v(1, 1)), a.apply(&b.apply(&v(1, 1))));
        let inv = a.inverse().unwrap();
        assert!(a.mul(&inv).is_identity());
        assert!(Mat2::of(0, -1, 1, 0).is_orthogonal());
        assert!(!a.is_orthogonal());
    }
}
