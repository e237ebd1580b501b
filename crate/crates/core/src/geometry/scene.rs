use std::cmp::Ordering;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{cmp_dist, dist2, orient, orient_sign, segment_dist2, Point};
use crate::error::{Error, Result};
use crate::rational::{qi, simple_between, sqrt_ceil, sqrt_floor, to_f64, Q};

/// A compact convex disk: a convex polygon, or a round disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ConvexDisk {
    Polygon { vertices: Vec<Point> },
    Round {
        center: Point,
        #[serde(with = "crate::rational::serde_q")]
        radius: Q,
    },
}

fn rat_from_f64(v: f64) -> Q {
    let lo = BigRational::from_float(v - v.abs() * 1e-12 - 1e-15).expect("finite");
    let hi = BigRational::from_float(v + v.abs() * 1e-12 + 1e-15).expect("finite");
    simple_between(&lo, &hi)
}

impl ConvexDisk {
    /// Counter-clockwise corners. Round disks are replaced by an inscribed
    /// polygon whose corners lie exactly on the circle.
    pub fn polygon(&self, max_diam: &Q) -> Result<Vec<Point>> {
        match self {
            ConvexDisk::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::NonConvex);
                }
                let n = vertices.len();
                let turns: Vec<Q> = (0..n)
                    .map(|i| orient(&vertices[i], &vertices[(i + 1) % n], &vertices[(i + 2) % n]))
                    .collect();
                if turns.iter().all(|t| t.is_positive()) {
                    Ok(vertices.clone())
                } else if turns.iter().all(|t| t.is_negative()) {
                    Ok(vertices.iter().rev().cloned().collect())
                } else {
                    Err(Error::NonConvex)
                }
            }
            ConvexDisk::Round { center, radius } => {
                let r = to_f64(radius);
                let step = to_f64(max_diam).min(r);
                let mut n = ((2.0 * std::f64::consts::PI * r / step).ceil() as usize).max(8);
                n += n % 2;
                let one = Q::one();
                let mut pts = Vec::with_capacity(n);
                for j in 0..n {
                    // angles in (-pi, pi], increasing
                    let theta = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * (j + 1) as f64 / n as f64;
                    let p = if j + 1 == n {
                        Point::xy(center.x() - radius, center.y().clone())
                    } else {
                        let t = rat_from_f64((theta / 2.0).tan());
                        let den = &one + &t * &t;
                        let cx = (&one - &t * &t) / &den;
                        let cy = (qi(2) * &t) / &den;
                        Point::xy(center.x() + radius * cx, center.y() + radius * cy)
                    };
                    pts.push(p);
                }
                Ok(pts)
            }
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match self {
            ConvexDisk::Polygon { .. } => {
                let poly = self.polygon(&Q::one()).expect("validated polygon");
                let n = poly.len();
                (0..n).all(|i| orient_sign(&poly[i], &poly[(i + 1) % n], p) != Ordering::Less)
            }
            ConvexDisk::Round { center, radius } => cmp_dist(center, p, radius) != Ordering::Greater,
        }
    }

    pub fn contains_strictly(&self, p: &Point) -> bool {
        match self {
            ConvexDisk::Polygon { .. } => {
                let poly = self.polygon(&Q::one()).expect("validated polygon");
                let n = poly.len();
                (0..n).all(|i| orient_sign(&poly[i], &poly[(i + 1) % n], p) == Ordering::Greater)
            }
            ConvexDisk::Round { center, radius } => cmp_dist(center, p, radius) == Ordering::Less,
        }
    }

    /// Closed ball `B(c, r)` lies in this disk (strictly inside when `strict`).
    pub fn contains_ball(&self, c: &Point, r: &Q, strict: bool) -> bool {
        match self {
            ConvexDisk::Polygon { .. } => {
                let poly = self.polygon(&Q::one()).expect("validated polygon");
                let n = poly.len();
                let r2 = r * r;
                (0..n).all(|i| {
                    let (a, b) = (&poly[i], &poly[(i + 1) % n]);
                    let o = orient(a, b, c);
                    if !o.is_positive() {
                        return false;
                    }
                    // squared distance from c to the edge line
                    let d2 = &o * &o / dist2(a, b);
                    if strict {
                        d2 > r2
                    } else {
                        d2 >= r2
                    }
                })
            }
            ConvexDisk::Round { center, radius } => {
                if r >= radius {
                    return false;
                }
                let gap = radius - r;
                let d2 = dist2(center, c);
                if strict {
                    d2 < &gap * &gap
                } else {
                    d2 <= &gap * &gap
                }
            }
        }
    }

    /// Closure of `inner` lies in the interior of `self`.
    pub fn strictly_contains_disk(&self, inner: &ConvexDisk) -> bool {
        match inner {
            ConvexDisk::Polygon { vertices } => vertices.iter().all(|v| self.contains_strictly(v)),
            ConvexDisk::Round { center, radius } => self.contains_ball(center, radius, true),
        }
    }

    /// Nearest point of the disk to `p`. Exact for polygons; for round disks
    /// exact when `|p - c|` is rational, otherwise rounded onto the disk.
    pub fn nearest_point(&self, p: &Point) -> Point {
        if self.contains(p) {
            return p.clone();
        }
        match self {
            ConvexDisk::Polygon { .. } => {
                let poly = self.polygon(&Q::one()).expect("validated polygon");
                let n = poly.len();
                let (mut best, mut best_d) = (poly[0].clone(), dist2(&poly[0], p));
                for i in 0..n {
                    let (a, b) = (&poly[i], &poly[(i + 1) % n]);
                    let (d, t) = segment_dist2(a, b, p);
                    if d < best_d {
                        best_d = d;
                        best = a.lerp(b, &t);
                    }
                }
                best
            }
            ConvexDisk::Round { center, radius } => {
                let d2 = dist2(center, p);
                let lo = sqrt_floor(&d2);
                let len = if &lo * &lo == d2 { lo } else { sqrt_ceil(&d2) };
                let s = radius / len;
                Point::xy(
                    center.x() + (p.x() - center.x()) * &s,
                    center.y() + (p.y() - center.y()) * &s,
                )
            }
        }
    }
}

/// The compact space `X` of a scene: a closed round disk (the thickening
/// of a point) or a finite union of polylines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SpaceModel {
    Disk {
        center: Point,
        #[serde(with = "crate::rational::serde_q")]
        radius: Q,
    },
    Polylines { paths: Vec<Vec<Point>> },
}

impl SpaceModel {
    pub fn contains(&self, p: &Point) -> bool {
        match self {
            SpaceModel::Disk { center, radius } => cmp_dist(center, p, radius) != Ordering::Greater,
            SpaceModel::Polylines { paths } => paths.iter().any(|path| {
                path.windows(2).any(|w| segment_dist2(&w[0], &w[1], p).0.is_zero())
                    || path.len() == 1 && &path[0] == p
            }),
        }
    }

    /// Points of the space on a grid of the given pitch (polyline vertices are always included).
    pub fn sample(&self, pitch: &Q) -> Vec<Point> {
        let mut out = Vec::new();
        match self {
            SpaceModel::Disk { center, radius } => {
                let k = (radius / pitch).floor().to_integer();
                let k: i64 = k.try_into().expect("grid too large");
                let r2 = radius * radius;
                for i in -k..=k {
                    for j in -k..=k {
                        let p = Point::xy(center.x() + pitch * qi(i), center.y() + pitch * qi(j));
                        if dist2(center, &p) <= r2 {
                            out.push(p);
                        }
                    }
                }
            }
            SpaceModel::Polylines { paths } => {
                for path in paths {
                    if let Some(first) = path.first() {
                        out.push(first.clone());
                    }
                    for w in path.windows(2) {
                        let len = to_f64(&dist2(&w[0], &w[1])).sqrt();
                        let parts = ((len / to_f64(pitch)).ceil() as i64).max(1);
                        for s in 1..=parts {
                            out.push(w[0].lerp(&w[1], &(qi(s) / qi(parts))));
                        }
                    }
                }
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        out.retain(|p| seen.insert(p.clone()));
        out
    }

    /// Points of the space at distance strictly between `lo` and `hi` from `z`:
    /// up to two per polyline segment (one on each side of the foot of `z`),
    /// one per axis direction for disks.
    pub fn points_in_band(&self, z: &Point, lo: &Q, hi: &Q) -> Vec<Point> {
        let mid = (lo + hi) / qi(2);
        let mut out = Vec::new();
        match self {
            SpaceModel::Disk { .. } => {
                for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    let p = Point::xy(z.x() + &mid * qi(dx), z.y() + &mid * qi(dy));
                    if self.contains(&p) {
                        out.push(p);
                    }
                }
            }
            SpaceModel::Polylines { paths } => {
                // the middle half of the band, away from both circles
                let quarter = (hi - lo) / qi(4);
                let (inner, outer) = (lo + &quarter, hi - &quarter);
                let (in2, out2) = (&inner * &inner, &outer * &outer);
                let reach = to_f64(&outer) * (1.0 + 1e-6);
                let (zx, zy) = (z.approx()[0], z.approx()[1]);
                for path in paths {
                    for w in path.windows(2) {
                        let (a, b) = (w[0].approx(), w[1].approx());
                        let gap_x = (a[0].min(b[0]) - zx).max(zx - a[0].max(b[0])).max(0.0);
                        let gap_y = (a[1].min(b[1]) - zy).max(zy - a[1].max(b[1])).max(0.0);
                        if gap_x > reach || gap_y > reach {
                            continue;
                        }
                        out.extend(band_points_on_segment(&w[0], &w[1], z, &in2, &out2));
                    }
                }
            }
        }
        out
    }

    pub fn vertices(&self) -> Vec<Point> {
        match self {
            SpaceModel::Disk { center, radius } => vec![
                Point::xy(center.x() + radius, center.y().clone()),
                Point::xy(center.x() - radius, center.y().clone()),
                Point::xy(center.x().clone(), center.y() + radius),
                Point::xy(center.x().clone(), center.y() - radius),
            ],
            SpaceModel::Polylines { paths } => paths.iter().flatten().cloned().collect(),
        }
    }
}

fn band_points_on_segment(a: &Point, b: &Point, z: &Point, lo2: &Q, hi2: &Q) -> Vec<Point> {
    let f = |t: &Q| dist2(&a.lerp(b, t), z);
    let (pa, pb, pz) = (a.approx(), b.approx(), z.approx());
    let g = |t: f64| -> f64 { (0..2).map(|k| pa[k] + t * (pb[k] - pa[k]) - pz[k]).map(|v| v * v).sum() };
    let (d, t_star) = segment_dist2(a, b, z);
    if &d >= hi2 {
        return Vec::new();
    }
    if &d > lo2 {
        return vec![a.lerp(b, &t_star)];
    }
    let (l2, h2) = (to_f64(lo2), to_f64(hi2));
    let tol = 1e-6 * h2;
    let mut out = Vec::new();
    for end in [Q::one(), Q::zero()] {
        if &f(&end) <= lo2 {
            continue;
        }
        // bisection; the floating-point value decides unless it is near a circle
        let (mut inside, mut outside) = (t_star.clone(), end.clone());
        let (mut fin, mut fout) = (to_f64(&t_star), to_f64(&end));
        for _ in 0..200 {
            let m = (&inside + &outside) / qi(2);
            let fm = (fin + fout) / 2.0;
            let gm = g(fm);
            let near = (gm - l2).abs() <= tol || (gm - h2).abs() <= tol || !gm.is_finite();
            let (below, above) = if near {
                let e = f(&m);
                (&e <= lo2, &e >= hi2)
            } else {
                (gm < l2, gm > h2)
            };
            if below {
                inside = m;
                fin = fm;
            } else if above {
                outside = m;
                fout = fm;
            } else {
                let e = f(&m);
                if lo2 < &e && &e < hi2 {
                    out.push(a.lerp(b, &m));
                }
                break;
            }
        }
    }
    out
}

/// Nested convex disks `D_1 ⊃ D_2 ⊃ ...` around a compact space `X`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellularScene {
    pub disks: Vec<ConvexDisk>,
    pub space: SpaceModel,
    #[serde(with = "crate::rational::serde_q")]
    pub pitch: Q,
}

impl CellularScene {
    pub fn validate(&self) -> Result<()> {
        if self.disks.is_empty() {
            return Err(Error::Invalid("scene needs at least one disk".into()));
        }
        if !self.pitch.is_positive() {
            return Err(Error::Invalid("pitch must be positive".into()));
        }
        for d in &self.disks {
            d.polygon(&Q::one())?;
        }
        for w in self.disks.windows(2) {
            if !w[0].strictly_contains_disk(&w[1]) {
                return Err(Error::Invalid("disks are not strictly nested".into()));
            }
        }
        let inner = self.disks.last().expect("nonempty");
        let inside = match &self.space {
            SpaceModel::Disk { center, radius } => inner.contains_ball(center, radius, false),
            SpaceModel::Polylines { paths } => paths.iter().flatten().all(|v| inner.contains(v)),
        };
        if !inside {
            return Err(Error::Invalid("space is not inside the innermost disk".into()));
        }
        Ok(())
    }

    pub fn sample(&self) -> Vec<Point> {
        self.space.sample(&self.pitch)
    }

    pub fn nearest_point_retraction(&self, i: usize, p: &Point) -> Result<Point> {
        let d = self
            .disks
            .get(i)
            .ok_or(Error::OutOfRange { index: i, len: self.disks.len() })?;
        if !self.disks[0].contains(p) {
            return Err(Error::OutsideDisk);
        }
        Ok(d.nearest_point(p))
    }
}
