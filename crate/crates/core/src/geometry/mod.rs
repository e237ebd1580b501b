//! Exact planar geometry: points, samples, symbolic regions, triangulations
//! and nested convex scenes.

mod region;
mod scene;
mod triangulation;

pub use region::{BBox, Region};
pub use scene::{CellularScene, ConvexDisk, SpaceModel};
pub use triangulation::{star_region, triangulate_disk, Triangulation};

use std::collections::BTreeSet;
use std::cmp::Ordering;
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{format_q, to_f64, Q};

/// A point with exact coordinates and a cached floating-point copy used to
/// filter predicates.
#[derive(Clone)]
pub struct Point {
    coords: Vec<Q>,
    approx: Vec<f64>,
}

impl PartialEq for Point {
    fn eq(&self, o: &Self) -> bool {
        self.coords == o.coords
    }
}

impl Eq for Point {}

impl PartialOrd for Point {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Point {
    fn cmp(&self, o: &Self) -> Ordering {
        self.coords.cmp(&o.coords)
    }
}

impl std::hash::Hash for Point {
    fn hash<H: std::hash::Hasher>(&self, h: &mut H) {
        self.coords.hash(h)
    }
}

impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        crate::rational::serde_q_vec::serialize(&self.coords, s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        crate::rational::serde_q_vec::deserialize(d).map(Point::new)
    }
}

impl Point {
    pub fn new(coords: Vec<Q>) -> Self {
        let approx = coords.iter().map(to_f64).collect();
        Point { coords, approx }
    }

    pub fn xy(x: Q, y: Q) -> Self {
        Point::new(vec![x, y])
    }

    pub fn coords(&self) -> &[Q] {
        &self.coords
    }

    /// Coordinates rounded to the nearest doubles.
    pub fn approx(&self) -> &[f64] {
        &self.approx
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn x(&self) -> &Q {
        &self.coords[0]
    }

    pub fn y(&self) -> &Q {
        &self.coords[1]
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.approx.clone()
    }

    /// `self + t * (other - self)`
    pub fn lerp(&self, other: &Point, t: &Q) -> Point {
        Point::new(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + t * (b - a))
                .collect(),
        )
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(format_q).collect();
        write!(f, "({})", parts.join(", "))
    }
}

fn approx_dist2(a: &Point, b: &Point) -> f64 {
    a.approx.iter().zip(&b.approx).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist2(a: &Point, b: &Point) -> Q {
    debug_assert_eq!(a.dim(), b.dim());
    a.coords
        .iter()
        .zip(&b.coords)
        .map(|(x, y)| {
            let d = x - y;
            &d * &d
        })
        .fold(Q::zero(), |acc, v| acc + v)
}

/// Twice the signed area of `(a, b, c)`; positive for counter-clockwise turns.
pub fn orient(a: &Point, b: &Point, c: &Point) -> Q {
    (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x())
}

/// Relative slack of the floating-point filters, far above the rounding
/// error of the few operations they perform.
const FILTER: f64 = 1e-9;

fn max_abs(pts: &[&Point]) -> f64 {
    pts.iter().flat_map(|p| p.approx.iter()).fold(0.0, |m, v| m.max(v.abs()))
}

/// Sign of [`orient`], decided in floating point when the filter allows.
pub fn orient_sign(a: &Point, b: &Point, c: &Point) -> Ordering {
    let (pa, pb, pc) = (&a.approx, &b.approx, &c.approx);
    let (d1x, d1y, d2x, d2y) = (pb[0] - pa[0], pb[1] - pa[1], pc[0] - pa[0], pc[1] - pa[1]);
    let (l, r) = (d1x * d2y, d1y * d2x);
    let det = l - r;
    let m = max_abs(&[a, b, c]);
    let bound = FILTER * (m * (d1x.abs() + d1y.abs() + d2x.abs() + d2y.abs()) + l.abs() + r.abs());
    if det.is_finite() && bound.is_finite() && det.abs() > bound {
        return if det > 0.0 { Ordering::Greater } else { Ordering::Less };
    }
    orient(a, b, c).cmp(&Q::zero())
}

/// Compares `|a - b|` with `r >= 0`.
pub fn cmp_dist(a: &Point, b: &Point, r: &Q) -> Ordering {
    let mut d2 = 0.0;
    let mut spread = 0.0;
    for (x, y) in a.approx.iter().zip(&b.approx) {
        let d = x - y;
        d2 += d * d;
        spread += d.abs();
    }
    let rf = to_f64(r);
    let r2 = rf * rf;
    let bound = FILTER * (max_abs(&[a, b]) * spread + d2 + r2);
    if d2.is_finite() && bound.is_finite() && (d2 - r2).abs() > bound && r2 > 0.0 {
        return if d2 > r2 { Ordering::Greater } else { Ordering::Less };
    }
    dist2(a, b).cmp(&(r * r))
}

/// Squared distance from `p` to the closed segment `[a, b]`, with the
/// parameter of the nearest point.
pub fn segment_dist2(a: &Point, b: &Point, p: &Point) -> (Q, Q) {
    let ab = dist2(a, b);
    if ab.is_zero() {
        return (dist2(a, p), Q::zero());
    }
    let dot = (p.x() - a.x()) * (b.x() - a.x()) + (p.y() - a.y()) * (b.y() - a.y());
    let mut t = dot / ab;
    if t.is_negative() {
        t = Q::zero();
    } else if t > Q::from_integer(1.into()) {
        t = Q::from_integer(1.into());
    }
    let foot = a.lerp(b, &t);
    (dist2(&foot, p), t)
}

/// A finite sample standing in for a metric space: distinct points and a pitch.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawSample", into = "RawSample")]
pub struct PointSample {
    points: Vec<Point>,
    pitch: Q,
    order: Vec<(f64, usize)>,
    span: f64,
    lo: [f64; 2],
    hi: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct RawSample {
    points: Vec<Point>,
    #[serde(with = "crate::rational::serde_q")]
    pitch: Q,
}

impl TryFrom<RawSample> for PointSample {
    type Error = Error;
    fn try_from(raw: RawSample) -> Result<Self> {
        PointSample::new(raw.points, raw.pitch)
    }
}

impl From<PointSample> for RawSample {
    fn from(s: PointSample) -> Self {
        RawSample { points: s.points, pitch: s.pitch }
    }
}

impl PartialEq for PointSample {
    fn eq(&self, o: &Self) -> bool {
        self.points == o.points && self.pitch == o.pitch
    }
}

impl PointSample {
    pub fn new(points: Vec<Point>, pitch: Q) -> Result<Self> {
        if !pitch.is_positive() {
            return Err(Error::Invalid("sample pitch must be positive".into()));
        }
        let mut seen = BTreeSet::new();
        for p in &points {
            if !seen.insert(p) {
                return Err(Error::Invalid(format!("duplicate sample point {p:?}")));
            }
        }
        if let Some(p) = points.first() {
            let d = p.dim();
            if points.iter().any(|q| q.dim() != d) {
                return Err(Error::Invalid("mixed point dimensions".into()));
            }
        }
        let mut s = PointSample { points, pitch, order: Vec::new(), span: 0.0, lo: [f64::INFINITY; 2], hi: [f64::NEG_INFINITY; 2] };
        s.reindex();
        Ok(s)
    }

    fn reindex(&mut self) {
        self.order = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.approx[0], i))
            .collect();
        self.order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for i in 0..self.points.len() {
            self.grow(i);
        }
    }

    fn grow(&mut self, i: usize) {
        for (k, &v) in self.points[i].approx.iter().take(2).enumerate() {
            self.lo[k] = self.lo[k].min(v);
            self.hi[k] = self.hi[k].max(v);
        }
        self.span = (0..2).map(|k| self.hi[k] - self.lo[k]).filter(|d| d.is_finite()).fold(0.0, f64::max);
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn pitch(&self) -> &Q {
        &self.pitch
    }

    /// Nearest point (squared distance, index) among those satisfying `keep`;
    /// ties go to the lowest index.
    pub fn nearest_where(&self, p: &Point, keep: impl Fn(usize) -> bool) -> Option<(Q, usize)> {
        let (_, near) = self.nearest_candidates(p, keep)?;
        near.into_iter().map(|i| (dist2(p, &self.points[i]), i)).min()
    }

    /// Approximate least squared distance and every point within rounding of it.
    fn nearest_candidates(&self, p: &Point, keep: impl Fn(usize) -> bool) -> Option<(f64, Vec<usize>)> {
        let span = self.span.max(1e-300);
        let scale = p.approx.iter().map(|v| v.abs()).fold(span, f64::max);
        let mut r = (to_f64(&self.pitch) * 2.0).min(span).max(span * 1e-12);
        loop {
            let near: Vec<(f64, usize)> = self
                .query(&BBox::around(p, r))
                .into_iter()
                .filter(|&i| keep(i))
                .map(|i| (approx_dist2(p, &self.points[i]), i))
                .collect();
            let least = near.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
            let covers_all = r >= 2.0 * span + p.approx.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if near.is_empty() {
                if covers_all {
                    return None;
                }
            } else if least.sqrt() <= r * (1.0 - 1e-6) || covers_all {
                let slack = least * 1e-9 + least.sqrt() * scale * 1e-12 + 1e-300;
                return Some((least, near.into_iter().filter(|e| e.0 <= least + slack).map(|e| e.1).collect()));
            }
            r *= 2.0;
        }
    }

    pub fn index_of(&self, p: &Point) -> Option<usize> {
        let x = p.approx[0];
        let start = self.order.partition_point(|e| e.0 < x - x.abs() * 1e-12 - 1e-300);
        self.order[start..]
            .iter()
            .take_while(|e| e.0 <= x + x.abs() * 1e-12 + 1e-300)
            .map(|e| e.1)
            .find(|&i| self.points[i].approx == p.approx && &self.points[i] == p)
    }

    /// Appends points not already present and returns the indices of all
    /// given points (existing or new). Existing indices never move.
    pub fn extend(&mut self, pts: impl IntoIterator<Item = Point>) -> Vec<usize> {
        let mut out = Vec::new();
        for p in pts {
            if let Some(i) = self.index_of(&p) {
                out.push(i);
                continue;
            }
            let i = self.points.len();
            let x = p.approx[0];
            self.points.push(p);
            let at = self.order.partition_point(|e| e.0 < x || (e.0 == x && e.1 < i));
            self.order.insert(at, (x, i));
            self.grow(i);
            out.push(i);
        }
        out
    }

    /// Indices of points whose first two coordinates fall in `b`, ascending.
    pub fn query(&self, b: &BBox) -> Vec<usize> {
        let start = self.order.partition_point(|e| e.0 < b.min[0]);
        let mut out: Vec<usize> = self.order[start..]
            .iter()
            .take_while(|e| e.0 <= b.max[0])
            .map(|e| e.1)
            .filter(|&i| {
                let p = &self.points[i];
                (1..p.dim()).all(|k| {
                    let v = p.approx[k];
                    v >= b.min[k] && v <= b.max[k]
                })
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Every point of `subset` has another point of `subset` within `radius`.
    pub fn isolated_points(&self, subset: &BTreeSet<usize>, radius: &Q) -> Vec<usize> {
        let r2 = radius * radius;
        let rf = to_f64(radius) * (1.0 + 1e-9) + 1e-300;
        subset
            .iter()
            .copied()
            .filter(|&i| {
                let p = &self.points[i];
                let b = BBox::around(p, rf);
                !self
                    .query(&b)
                    .into_iter()
                    .any(|j| j != i && subset.contains(&j) && dist2(p, &self.points[j]) <= r2)
            })
            .collect()
    }
}
