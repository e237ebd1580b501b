use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::scene::ConvexDisk;
use super::{dist2, orient, Point, Region};
use crate::error::{Error, Result};
use crate::rational::{qi, Q};

/// Triangulation of a planar disk. Triangles are counter-clockwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triangulation {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<[usize; 2]>,
    #[serde(with = "crate::rational::serde_q")]
    pub max_diam2: Q,
}

fn tri_diam2(a: &Point, b: &Point, c: &Point) -> Q {
    let ab = dist2(a, b);
    let bc = dist2(b, c);
    let ca = dist2(c, a);
    ab.max(bc).max(ca)
}

impl Triangulation {
    pub fn from_triangles(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mut edges: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        let mut max_diam2 = Q::zero();
        for t in &triangles {
            if t.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::Invalid("triangle references missing vertex".into()));
            }
            let [a, b, c] = t.map(|i| &vertices[i]);
            max_diam2 = max_diam2.max(tri_diam2(a, b, c));
            for e in [[t[0], t[1]], [t[1], t[2]], [t[2], t[0]]] {
                *edges.entry(sorted2(e)).or_default() += 1;
            }
        }
        let boundary = edges
            .iter()
            .filter(|(_, &n)| n == 1)
            .map(|(e, _)| *e)
            .collect();
        let t = Triangulation { vertices, triangles, boundary, max_diam2 };
        t.validate()?;
        Ok(t)
    }

    pub fn edges(&self) -> BTreeSet<[usize; 2]> {
        self.triangles
            .iter()
            .flat_map(|t| [[t[0], t[1]], [t[1], t[2]], [t[2], t[0]]])
            .map(sorted2)
            .collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges().len() as i64 + self.triangles.len() as i64
    }

    pub fn incident_triangles(&self, v: usize) -> Vec<usize> {
        (0..self.triangles.len())
            .filter(|&i| self.triangles[i].contains(&v))
            .collect()
    }

    /// Combinatorial manifold-with-boundary check for a disk.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Invalid(format!("invalid triangulation: {m}")));
        let mut edge_count: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        for t in &self.triangles {
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return bad(format!("degenerate triangle {t:?}"));
            }
            let [a, b, c] = t.map(|i| &self.vertices[i]);
            if !orient(a, b, c).is_positive() {
                return bad(format!("triangle {t:?} not counter-clockwise"));
            }
            for e in [[t[0], t[1]], [t[1], t[2]], [t[2], t[0]]] {
                *edge_count.entry(sorted2(e)).or_default() += 1;
            }
        }
        if let Some((e, n)) = edge_count.iter().find(|(_, &n)| n > 2) {
            return bad(format!("edge {e:?} in {n} triangles"));
        }
        let boundary: BTreeSet<[usize; 2]> = edge_count
            .iter()
            .filter(|(_, &n)| n == 1)
            .map(|(e, _)| *e)
            .collect();
        let recorded: BTreeSet<[usize; 2]> = self.boundary.iter().map(|e| sorted2(*e)).collect();
        if boundary != recorded {
            return bad("boundary edges do not match".into());
        }
        // boundary must be one cycle
        let mut deg: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for [a, b] in &boundary {
            deg.entry(*a).or_default().push(*b);
            deg.entry(*b).or_default().push(*a);
        }
        if deg.values().any(|n| n.len() != 2) {
            return bad("boundary is not a simple cycle".into());
        }
        if let Some((&start, _)) = deg.iter().next() {
            let mut seen = BTreeSet::from([start]);
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &w in &deg[&v] {
                    if seen.insert(w) {
                        stack.push(w);
                    }
                }
            }
            if seen.len() != deg.len() {
                return bad("boundary has several components".into());
            }
        }
        // vertex links: a path (boundary vertex) or a cycle (interior vertex)
        let mut links: BTreeMap<usize, Vec<[usize; 2]>> = BTreeMap::new();
        for t in &self.triangles {
            links.entry(t[0]).or_default().push([t[1], t[2]]);
            links.entry(t[1]).or_default().push([t[2], t[0]]);
            links.entry(t[2]).or_default().push([t[0], t[1]]);
        }
        for v in 0..self.vertices.len() {
            let Some(link) = links.get(&v) else {
                return bad(format!("vertex {v} in no triangle"));
            };
            let mut nbr: BTreeMap<usize, usize> = BTreeMap::new();
            for [a, b] in link {
                *nbr.entry(*a).or_default() += 1;
                *nbr.entry(*b).or_default() += 1;
            }
            let ends = nbr.values().filter(|&&d| d == 1).count();
            if nbr.values().any(|&d| d > 2) || !(ends == 0 || ends == 2) {
                return bad(format!("link of vertex {v} is not a path or cycle"));
            }
            if (ends == 2) != deg.contains_key(&v) {
                return bad(format!("vertex {v} boundary status inconsistent"));
            }
        }
        if self.euler_characteristic() != 1 {
            return bad(format!("Euler characteristic {}", self.euler_characteristic()));
        }
        Ok(())
    }
}

fn sorted2(e: [usize; 2]) -> [usize; 2] {
    if e[0] <= e[1] {
        e
    } else {
        [e[1], e[0]]
    }
}

/// Fan-triangulates the (polygonal) disk from its first corner and
/// subdivides every fan triangle into `k * k` similar copies, with `k` the
/// least integer giving simplex diameters below `max_diam`.
pub fn triangulate_disk(d: &ConvexDisk, max_diam: &Q) -> Result<Triangulation> {
    if !max_diam.is_positive() {
        return Err(Error::Invalid("max diameter must be positive".into()));
    }
    let poly = d.polygon(max_diam)?;
    let n = poly.len();
    let fan: Vec<[&Point; 3]> = (1..n - 1).map(|i| [&poly[0], &poly[i], &poly[i + 1]]).collect();
    let worst = fan
        .iter()
        .map(|t| tri_diam2(t[0], t[1], t[2]))
        .max()
        .expect("polygon has at least three corners");
    let bound = max_diam * max_diam;
    let mut k: i64 = 1;
    while &worst / qi(k * k) >= bound {
        k += 1;
    }
    let mut index: BTreeMap<Point, usize> = BTreeMap::new();
    let mut vertices = Vec::new();
    let mut id = |p: Point, vertices: &mut Vec<Point>| -> usize {
        *index.entry(p.clone()).or_insert_with(|| {
            vertices.push(p);
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::new();
    let kq = qi(k);
    for [a, b, c] in fan {
        let lattice = |i: i64, j: i64| -> Point {
            let (s, t) = (qi(i) / &kq, qi(j) / &kq);
            Point::new(
                (0..2)
                    .map(|m| &a.coords()[m] + &s * (&b.coords()[m] - &a.coords()[m]) + &t * (&c.coords()[m] - &a.coords()[m]))
                    .collect(),
            )
        };
        for i in 0..k {
            for j in 0..k - i {
                let p00 = id(lattice(i, j), &mut vertices);
                let p10 = id(lattice(i + 1, j), &mut vertices);
                let p01 = id(lattice(i, j + 1), &mut vertices);
                triangles.push([p00, p10, p01]);
                if i + j + 1 < k {
                    let p11 = id(lattice(i + 1, j + 1), &mut vertices);
                    triangles.push([p10, p11, p01]);
                }
            }
        }
    }
    Triangulation::from_triangles(vertices, triangles)
}

/// Open star of vertex `v`: all open simplices whose closure contains `v`.
pub fn star_region(t: &Triangulation, v: usize) -> Result<Region> {
    if v >= t.vertices.len() {
        return Err(Error::UnknownVertex(v));
    }
    let cells = t
        .incident_triangles(v)
        .into_iter()
        .map(|i| t.triangles[i].iter().map(|&j| t.vertices[j].clone()).collect())
        .collect();
    Ok(Region::Star { vertex: t.vertices[v].clone(), cells })
}
