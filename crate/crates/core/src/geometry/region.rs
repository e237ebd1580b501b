use std::cmp::Ordering;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{cmp_dist, dist2, orient_sign, Point};
use crate::rational::{to_f64, Q};

/// Symbolic subset of the plane with an exact membership predicate.
///
/// `Star` is the open star of `vertex` in the complex spanned by `cells`
/// (edges or triangles incident to the vertex). `Arc` is a polyline with
/// optionally excluded endpoints; it describes relatively open pieces of
/// one-dimensional spaces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape")]
pub enum Region {
    OpenBall {
        center: Point,
        #[serde(with = "crate::rational::serde_q")]
        radius: Q,
    },
    ClosedBall {
        center: Point,
        #[serde(with = "crate::rational::serde_q")]
        radius: Q,
    },
    Star {
        vertex: Point,
        cells: Vec<Vec<Point>>,
    },
    Arc {
        points: Vec<Point>,
        open_start: bool,
        open_end: bool,
    },
    Union {
        parts: Vec<Region>,
    },
    Difference {
        base: Box<Region>,
        minus: Box<Region>,
    },
    Intersection {
        left: Box<Region>,
        right: Box<Region>,
    },
}

/// Axis-aligned box in `f64`, padded outward so that exact members never fall outside.
#[derive(Clone, Debug, PartialEq)]
pub struct BBox {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl BBox {
    pub fn around(p: &Point, r: f64) -> BBox {
        let c = p.approx();
        BBox {
            min: c.iter().map(|v| pad_down(v - r)).collect(),
            max: c.iter().map(|v| pad_up(v + r)).collect(),
        }
    }

    fn of_points<'a>(pts: impl IntoIterator<Item = &'a Point>) -> Option<BBox> {
        let mut it = pts.into_iter();
        let first = it.next()?.approx().to_vec();
        let mut b = BBox { min: first.clone(), max: first };
        for p in it {
            for (k, v) in p.approx().iter().copied().enumerate() {
                b.min[k] = b.min[k].min(v);
                b.max[k] = b.max[k].max(v);
            }
        }
        b.min.iter_mut().for_each(|v| *v = pad_down(*v));
        b.max.iter_mut().for_each(|v| *v = pad_up(*v));
        Some(b)
    }

    pub fn holds(&self, p: &Point) -> bool {
        let c = p.approx();
        (0..self.min.len()).all(|k| c[k] >= self.min[k] && c[k] <= self.max[k])
    }

    pub fn union(&self, o: &BBox) -> BBox {
        BBox {
            min: self.min.iter().zip(&o.min).map(|(a, b)| a.min(*b)).collect(),
            max: self.max.iter().zip(&o.max).map(|(a, b)| a.max(*b)).collect(),
        }
    }

    pub fn intersect(&self, o: &BBox) -> Option<BBox> {
        let b = BBox {
            min: self.min.iter().zip(&o.min).map(|(a, b)| a.max(*b)).collect(),
            max: self.max.iter().zip(&o.max).map(|(a, b)| a.min(*b)).collect(),
        };
        b.min.iter().zip(&b.max).all(|(a, c)| a <= c).then_some(b)
    }

    pub fn overlaps(&self, o: &BBox) -> bool {
        (0..self.min.len()).all(|k| self.min[k].max(o.min[k]) <= self.max[k].min(o.max[k]))
    }
}

fn pad_down(v: f64) -> f64 {
    v - v.abs() * 1e-9 - 1e-300
}

fn pad_up(v: f64) -> f64 {
    v + v.abs() * 1e-9 + 1e-300
}

/// Cheap rejection: `p` is outside the padded bounding box of `[a, b]`.
fn off_segment_box(a: &Point, b: &Point, p: &Point) -> bool {
    (0..p.dim()).any(|k| {
        let (x, y, v) = (a.approx()[k], b.approx()[k], p.approx()[k]);
        v < pad_down(x.min(y)) || v > pad_up(x.max(y))
    })
}

fn on_segment(a: &Point, b: &Point, p: &Point) -> Option<Q> {
    if off_segment_box(a, b, p) || orient_sign(a, b, p) != Ordering::Equal {
        return None;
    }
    let ab = dist2(a, b);
    if ab.is_zero() {
        return (a == p).then(Q::zero);
    }
    let dot = (p.x() - a.x()) * (b.x() - a.x()) + (p.y() - a.y()) * (b.y() - a.y());
    let t = dot / ab;
    (!t.is_negative() && t <= Q::from_integer(1.into())).then_some(t)
}

fn in_star_cell(v: &Point, cell: &[Point], p: &Point) -> bool {
    match cell {
        [a, b] => {
            let (w, v0) = if a == v { (b, a) } else { (a, b) };
            debug_assert!(v0 == v);
            // p = v + t (w - v) with 0 <= t < 1
            matches!(on_segment(v, w, p), Some(t) if t < Q::from_integer(1.into()))
        }
        [a, b, c] => {
            let (o1, o2) = match (a == v, b == v) {
                (true, _) => (b, c),
                (_, true) => (c, a),
                _ => (a, b),
            };
            let s = orient_sign(o1, o2, v);
            if s == Ordering::Equal {
                return false;
            }
            let flip = |o: Ordering| if s == Ordering::Less { o.reverse() } else { o };
            flip(orient_sign(o1, o2, p)) == Ordering::Greater
                && flip(orient_sign(o2, v, p)) != Ordering::Less
                && flip(orient_sign(v, o1, p)) != Ordering::Less
        }
        [single] => single == p && single == v,
        _ => false,
    }
}

impl Region {
    pub fn open_ball(center: Point, radius: Q) -> Region {
        assert!(radius.is_positive(), "radius must be positive");
        Region::OpenBall { center, radius }
    }

    pub fn closed_ball(center: Point, radius: Q) -> Region {
        assert!(radius.is_positive(), "radius must be positive");
        Region::ClosedBall { center, radius }
    }

    /// `(A - B) - C` is stored as `A - (B u C)` so that repeated removals stay shallow.
    pub fn difference(base: Region, minus: Region) -> Region {
        match base {
            Region::Difference { base, minus: old } => {
                let mut parts = match *old {
                    Region::Union { parts } => parts,
                    r => vec![r],
                };
                match minus {
                    Region::Union { parts: more } => parts.extend(more),
                    r => parts.push(r),
                }
                Region::Difference { base, minus: Box::new(Region::Union { parts }) }
            }
            base => Region::Difference { base: Box::new(base), minus: Box::new(minus) },
        }
    }

    pub fn intersection(left: Region, right: Region) -> Region {
        Region::Intersection { left: Box::new(left), right: Box::new(right) }
    }

    pub fn union(parts: Vec<Region>) -> Region {
        Region::Union { parts }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match self {
            Region::OpenBall { center, radius } => cmp_dist(center, p, radius) == Ordering::Less,
            Region::ClosedBall { center, radius } => cmp_dist(center, p, radius) != Ordering::Greater,
            Region::Star { vertex, cells } => {
                p == vertex || cells.iter().any(|c| in_star_cell(vertex, c, p))
            }
            Region::Arc { points, open_start, open_end } => {
                if points.is_empty() {
                    return false;
                }
                let last = points.len() - 1;
                if *open_start && p == &points[0] || *open_end && p == &points[last] {
                    // a closed polyline may revisit its endpoint in the middle
                    return points[1..last].iter().any(|q| q == p);
                }
                if points.len() == 1 {
                    return &points[0] == p;
                }
                points.windows(2).any(|w| on_segment(&w[0], &w[1], p).is_some())
            }
            Region::Union { parts } => parts.iter().any(|r| r.contains(p)),
            Region::Difference { base, minus } => base.contains(p) && !minus.contains(p),
            Region::Intersection { left, right } => left.contains(p) && right.contains(p),
        }
    }

    /// Conservative bounding box; `None` for regions known to be empty.
    pub fn bbox(&self) -> Option<BBox> {
        match self {
            Region::OpenBall { center, radius } | Region::ClosedBall { center, radius } => {
                Some(BBox::around(center, to_f64(radius)))
            }
            Region::Star { vertex, cells } => {
                BBox::of_points(std::iter::once(vertex).chain(cells.iter().flatten()))
            }
            Region::Arc { points, .. } => BBox::of_points(points),
            Region::Union { parts } => parts
                .iter()
                .filter_map(Region::bbox)
                .reduce(|a, b| a.union(&b)),
            Region::Difference { base, .. } => base.bbox(),
            Region::Intersection { left, right } => left.bbox()?.intersect(&right.bbox()?),
        }
    }

    /// Radius when the region is a single ball.
    pub fn ball_radius(&self) -> Option<&Q> {
        match self {
            Region::OpenBall { radius, .. } | Region::ClosedBall { radius, .. } => Some(radius),
            _ => None,
        }
    }

    /// Symbolic upper bound on the squared diameter, where one is cheap:
    /// balls, and unions/differences built from balls.
    pub fn diameter2_bound(&self) -> Option<Q> {
        match self {
            Region::OpenBall { radius, .. } | Region::ClosedBall { radius, .. } => {
                let d = radius * Q::from_integer(2.into());
                Some(&d * &d)
            }
            Region::Difference { base, .. } => base.diameter2_bound(),
            Region::Intersection { left, right } => {
                match (left.diameter2_bound(), right.diameter2_bound()) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                }
            }
            _ => None,
        }
    }

    /// Drops subtracted parts whose bounding box misses the base; the point set is unchanged.
    pub fn simplified(self) -> Region {
        match self {
            Region::Difference { base, minus } => {
                let base = base.simplified();
                let Some(bb) = base.bbox() else {
                    return base;
                };
                let minus = match *minus {
                    Region::Union { parts } => {
                        let kept: Vec<Region> = parts
                            .into_iter()
                            .filter(|r| r.bbox().is_some_and(|b| b.overlaps(&bb)))
                            .collect();
                        if kept.is_empty() {
                            return base;
                        }
                        Region::Union { parts: kept }
                    }
                    other => {
                        if !other.bbox().is_some_and(|b| b.overlaps(&bb)) {
                            return base;
                        }
                        other
                    }
                };
                Region::difference(base, minus)
            }
            other => other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn p(x: Q, y: Q) -> Point {
        Point::xy(x, y)
    }

    fn origin() -> Point {
        p(qi(0), qi(0))
    }

    #[test]
    fn ball_membership() {
        let b = Region::open_ball(origin(), qi(1));
        assert!(b.contains(&origin()));
        assert!(!b.contains(&p(qi(1), qi(0))));
        let c = Region::closed_ball(origin(), qi(1));
        assert!(c.contains(&p(qi(1), qi(0))));
    }

    #[test]
    fn annulus_membership() {
        // 1/2 < 3/4 < 1
        let a = Region::difference(
            Region::open_ball(origin(), qi(1)),
            Region::closed_ball(origin(), q(1, 2)),
        );
        assert!(a.contains(&p(q(3, 4), qi(0))));
        assert!(!a.contains(&p(q(1, 2), qi(0))));
        assert!(!a.contains(&p(q(1, 4), qi(0))));
    }

    #[test]
    fn star_of_triangle_vertex() {
        let v = origin();
        let a = p(qi(1), qi(0));
        let b = p(qi(0), qi(1));
        let s = Region::Star { vertex: v.clone(), cells: vec![vec![v.clone(), a.clone(), b.clone()]] };
        assert!(s.contains(&v));
        assert!(s.contains(&p(q(1, 4), q(1, 4))));
        assert!(s.contains(&p(q(1, 2), qi(0))));
        assert!(!s.contains(&a));
        assert!(!s.contains(&p(q(1, 2), q(1, 2))));
        assert!(!s.contains(&p(qi(1), qi(1))));
    }

    #[test]
    fn arc_open_ends() {
        let pts = vec![origin(), p(qi(1), qi(0)), p(qi(1), qi(1))];
        let a = Region::Arc { points: pts, open_start: true, open_end: false };
        assert!(!a.contains(&origin()));
        assert!(a.contains(&p(q(1, 2), qi(0))));
        assert!(a.contains(&p(qi(1), qi(1))));
        assert!(!a.contains(&p(q(1, 2), q(1, 2))));
    }

    #[test]
    fn simplify_drops_far_parts() {
        let r = Region::difference(
            Region::open_ball(origin(), qi(1)),
            Region::union(vec![
                Region::closed_ball(p(qi(10), qi(0)), qi(1)),
                Region::closed_ball(p(q(1, 2), qi(0)), q(1, 10)),
            ]),
        );
        let s = r.clone().simplified();
        match &s {
            Region::Difference { minus, .. } => match minus.as_ref() {
                Region::Union { parts } => assert_eq!(parts.len(), 1),
                _ => panic!(),
            },
            _ => panic!(),
        }
        for x in [q(1, 2), q(9, 10), q(0, 1)] {
            assert_eq!(r.contains(&p(x.clone(), qi(0))), s.contains(&p(x, qi(0))));
        }
    }

    #[test]
    fn json_tagged_union() {
        let r = Region::difference(
            Region::open_ball(origin(), qi(1)),
            Region::closed_ball(origin(), q(1, 2)),
        );
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"shape\":\"Difference\""));
        assert!(s.contains("\"1/2\""));
        let back: Region = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
