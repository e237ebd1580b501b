//! Finite covers over a point sample and the rewriting operations on them:
//! kernel, canonization, grating, chains, extension and mesh.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::OnceLock;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist2, BBox, Point, PointSample, Region};
use crate::rational::{qi, sqrt_floor, to_f64, Q};

#[derive(Clone, Debug)]
pub struct CoverElement {
    pub id: String,
    pub region: Region,
    realized: BTreeSet<usize>,
    bbox: Option<BBox>,
}

impl CoverElement {
    fn new(id: String, region: Region, realized: BTreeSet<usize>) -> Self {
        let bbox = region.bbox();
        CoverElement { id, region, realized, bbox }
    }

    /// Bounding box of the region (`None` when empty).
    pub fn bbox(&self) -> Option<&BBox> {
        self.bbox.as_ref()
    }

    /// Sample indices inside the region.
    pub fn realized(&self) -> &BTreeSet<usize> {
        &self.realized
    }
}

/// A finite family of named regions over an ambient sample, with a target subset `A`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawCover", into = "RawCover")]
pub struct Cover {
    sample: PointSample,
    target_a: BTreeSet<usize>,
    elements: Vec<CoverElement>,
    member: OnceLock<Vec<Vec<usize>>>,
}

#[derive(Serialize, Deserialize)]
struct RawElement {
    id: String,
    region: Region,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawCover {
    sample: PointSample,
    target_a: Vec<usize>,
    elements: Vec<RawElement>,
}

impl TryFrom<RawCover> for Cover {
    type Error = Error;
    fn try_from(raw: RawCover) -> Result<Self> {
        Cover::new(
            raw.sample,
            raw.target_a.into_iter().collect(),
            raw.elements.into_iter().map(|e| (e.id, e.region)).collect(),
        )
    }
}

impl From<Cover> for RawCover {
    fn from(c: Cover) -> Self {
        RawCover {
            sample: c.sample,
            target_a: c.target_a.into_iter().collect(),
            elements: c
                .elements
                .into_iter()
                .map(|e| RawElement { id: e.id, region: e.region })
                .collect(),
        }
    }
}

/// Sample indices of the points of `s` inside `r`.
pub fn realize(s: &PointSample, r: &Region) -> BTreeSet<usize> {
    match r.bbox() {
        None => BTreeSet::new(),
        Some(b) => s
            .query(&b)
            .into_iter()
            .filter(|&i| r.contains(s.point(i)))
            .collect(),
    }
}

/// The 4-tuple `{U, x, epsilon, m}` describing a grating.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GratingSpec {
    pub element_id: String,
    pub center: Point,
    #[serde(with = "crate::rational::serde_q")]
    pub epsilon: Q,
    pub m: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementMesh {
    pub id: String,
    #[serde(with = "crate::rational::serde_q")]
    pub diam2: Q,
    pub diam: f64,
    /// Symbolic upper bound on the squared diameter, for ball-like regions.
    pub bound2: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshReport {
    #[serde(with = "crate::rational::serde_q")]
    pub diam2: Q,
    pub diam: f64,
    pub elements: Vec<ElementMesh>,
}

impl Cover {
    pub fn new(sample: PointSample, target_a: BTreeSet<usize>, elements: Vec<(String, Region)>) -> Result<Cover> {
        if let Some(&i) = target_a.iter().find(|&&i| i >= sample.len()) {
            return Err(Error::OutOfRange { index: i, len: sample.len() });
        }
        let mut ids = BTreeSet::new();
        for (id, _) in &elements {
            if !ids.insert(id.as_str()) {
                return Err(Error::Invalid(format!("duplicate element id {id:?}")));
            }
        }
        let elements = elements
            .into_iter()
            .map(|(id, region)| {
                let realized = realize(&sample, &region);
                CoverElement::new(id, region, realized)
            })
            .collect();
        Ok(Cover { sample, target_a, elements, member: OnceLock::new() })
    }

    /// Cover on the same sample whose elements are the unions of the given
    /// groups of element positions, with target `target_a`.
    pub fn merged(&self, target_a: BTreeSet<usize>, groups: Vec<(String, Vec<usize>)>) -> Result<Cover> {
        let mut ids = BTreeSet::new();
        let mut elements = Vec::new();
        for (id, parts) in groups {
            if !ids.insert(id.clone()) {
                return Err(Error::Invalid(format!("duplicate element id {id:?}")));
            }
            if let Some(&k) = parts.iter().find(|&&k| k >= self.elements.len()) {
                return Err(Error::OutOfRange { index: k, len: self.elements.len() });
            }
            let region = match parts.as_slice() {
                [k] => self.elements[*k].region.clone(),
                _ => Region::union(parts.iter().map(|&k| self.elements[k].region.clone()).collect()),
            };
            let realized = parts.iter().flat_map(|&k| self.elements[k].realized.iter().copied()).collect();
            elements.push(CoverElement::new(id, region, realized));
        }
        Cover::new(self.sample.clone(), target_a, Vec::new())
            .map(|c| Cover { elements, ..c })
    }

    pub fn sample(&self) -> &PointSample {
        &self.sample
    }

    pub fn target_a(&self) -> &BTreeSet<usize> {
        &self.target_a
    }

    pub fn elements(&self) -> &[CoverElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.elements.iter().map(|e| e.id.clone()).collect()
    }

    pub fn position(&self, id: &str) -> Result<usize> {
        self.elements
            .iter()
            .position(|e| e.id == id)
            .ok_or_else(|| Error::UnknownId(id.to_string()))
    }

    pub fn element(&self, id: &str) -> Result<&CoverElement> {
        Ok(&self.elements[self.position(id)?])
    }

    /// Adds points to the sample (optionally to `A`) and returns their indices.
    pub fn add_points(&mut self, pts: Vec<Point>, in_a: bool) -> Vec<usize> {
        let before = self.sample.len();
        let idx = self.sample.extend(pts);
        let fresh: Vec<usize> = (before..self.sample.len()).collect();
        if !fresh.is_empty() {
            self.member = OnceLock::new();
            for e in &mut self.elements {
                let Some(b) = &e.bbox else { continue };
                for &i in &fresh {
                    let p = self.sample.point(i);
                    let pf = p.approx();
                    let inside_box = (0..pf.len()).all(|k| pf[k] >= b.min[k] && pf[k] <= b.max[k]);
                    if inside_box && e.region.contains(p) {
                        e.realized.insert(i);
                    }
                }
            }
        }
        if in_a {
            self.target_a.extend(idx.iter().copied());
        }
        idx
    }

    /// Replaces the target subset.
    pub fn with_target(mut self, target_a: BTreeSet<usize>) -> Result<Cover> {
        if let Some(&i) = target_a.iter().find(|&&i| i >= self.sample.len()) {
            return Err(Error::OutOfRange { index: i, len: self.sample.len() });
        }
        self.target_a = target_a;
        Ok(self)
    }

    pub(crate) fn set_region(&mut self, k: usize, region: Region) {
        self.member = OnceLock::new();
        self.elements[k].realized = realize(&self.sample, &region);
        self.elements[k].bbox = region.bbox();
        self.elements[k].region = region;
    }

    /// For every sample point, the positions of the elements containing it.
    pub fn memberships(&self) -> &[Vec<usize>] {
        self.member.get_or_init(|| {
            let mut m = vec![Vec::new(); self.sample.len()];
            for (k, e) in self.elements.iter().enumerate() {
                for &i in &e.realized {
                    m[i].push(k);
                }
            }
            m
        })
    }

    /// Points of `subset` lying in no element.
    pub fn uncovered(&self, subset: &BTreeSet<usize>) -> Vec<usize> {
        let m = self.memberships();
        subset.iter().copied().filter(|&i| m[i].is_empty()).collect()
    }

    pub fn meets_a(&self, k: usize) -> bool {
        self.elements[k].realized.iter().any(|i| self.target_a.contains(i))
    }

    fn kernel_at(&self, k: usize, member: &[Vec<usize>]) -> BTreeSet<usize> {
        self.elements[k]
            .realized
            .iter()
            .copied()
            .filter(|&i| member[i].len() == 1)
            .collect()
    }

    fn kernel_region_at(&self, k: usize) -> Region {
        let base = &self.elements[k].region;
        let Some(bb) = self.elements[k].bbox.clone() else {
            return base.clone();
        };
        let others: Vec<Region> = self
            .elements
            .iter()
            .enumerate()
            .filter(|&(j, e)| j != k && e.bbox.as_ref().is_some_and(|b| b.overlaps(&bb)))
            .map(|(_, e)| e.region.clone())
            .collect();
        if others.is_empty() {
            return base.clone();
        }
        Region::difference(base.clone(), Region::union(others)).simplified()
    }

    /// Realized kernel of the element and its symbolic form.
    pub fn kernel(&self, id: &str) -> Result<(BTreeSet<usize>, Region)> {
        let k = self.position(id)?;
        Ok((self.kernel_at(k, self.memberships()), self.kernel_region_at(k)))
    }

    /// Ids of elements meeting `A` whose kernel misses `A`.
    pub fn canonical_violations(&self) -> Vec<String> {
        let member = self.memberships();
        (0..self.elements.len())
            .filter(|&k| {
                let e = &self.elements[k];
                let meets = e.realized.iter().any(|i| self.target_a.contains(i));
                meets
                    && !e
                        .realized
                        .iter()
                        .any(|&i| member[i].len() == 1 && self.target_a.contains(&i))
            })
            .map(|k| self.elements[k].id.clone())
            .collect()
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical_violations().is_empty()
    }

    /// Squared distance from `p` to the nearest sample point outside `inside`;
    /// `None` when every sample point is inside.
    fn clearance2(&self, p: &Point, inside: &BTreeSet<usize>) -> Option<Q> {
        self.sample
            .nearest_where(p, |j| !inside.contains(&j))
            .map(|(d2, _)| d2)
    }

    /// Realized kernel only, without the symbolic form.
    pub fn kernel_points(&self, id: &str) -> Result<BTreeSet<usize>> {
        let k = self.position(id)?;
        Ok(self.kernel_at(k, self.memberships()))
    }

    /// Up to `limit` kernel points, from the farthest to the nearest to the
    /// sample points outside the kernel (ranked in floating point), with the
    /// exact squared clearance (`None` for unbounded); ties go to the lowest index.
    pub fn kernel_by_depth(&self, id: &str, limit: usize) -> Result<Vec<(usize, Option<Q>)>> {
        let k = self.position(id)?;
        let kernel = self.kernel_at(k, self.memberships());
        let outside: Vec<&[f64]> = (0..self.sample.len())
            .filter(|i| !kernel.contains(i))
            .map(|i| self.sample.point(i).approx())
            .collect();
        let grid = Grid::new(&outside);
        // best `limit` so far, deepest first; a point that cannot beat the
        // last of them is dropped as soon as that is certain
        let mut ranked: Vec<(f64, usize)> = Vec::new();
        for &i in &kernel {
            let floor = if ranked.len() < limit { -1.0 } else { ranked[limit - 1].0 };
            let Some(d) = grid.nearest_above(self.sample.point(i).approx(), floor) else { continue };
            let at = ranked.partition_point(|e| e.0 >= d);
            ranked.insert(at, (d, i));
            ranked.truncate(limit);
        }
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        Ok(ranked
            .into_iter()
            .take(limit)
            .map(|(_, i)| (i, self.clearance2(self.sample.point(i), &kernel)))
            .collect())
    }
}

/// Uniform bucket grid over points, keyed by their first two coordinates.
struct Grid<'a> {
    pts: &'a [&'a [f64]],
    lo: [f64; 2],
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    reach: i64,
}

impl<'a> Grid<'a> {
    fn new(pts: &'a [&'a [f64]]) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in pts {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let side = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let cell = if side > 0.0 { side / (pts.len() as f64).sqrt().max(1.0) } else { 1.0 };
        let mut g = Grid { pts, lo, cell, buckets: HashMap::new(), reach: 0 };
        for (j, p) in pts.iter().enumerate() {
            let key = g.key(p);
            g.reach = g.reach.max(key.0).max(key.1);
            g.buckets.entry(key).or_default().push(j);
        }
        g
    }

    fn key(&self, p: &[f64]) -> (i64, i64) {
        (((p[0] - self.lo[0]) / self.cell).floor() as i64, ((p[1] - self.lo[1]) / self.cell).floor() as i64)
    }

    fn scan(&self, cell: (i64, i64), p: &[f64], best: &mut f64) {
        for &j in self.buckets.get(&cell).map_or(&[][..], Vec::as_slice) {
            let d: f64 = self.pts[j].iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
            *best = best.min(d);
        }
    }

    /// Squared distance from `p` to the nearest point, or `None` once it is
    /// certain to be at most `floor`; infinite when there are no points.
    fn nearest_above(&self, p: &[f64], floor: f64) -> Option<f64> {
        if self.pts.is_empty() {
            return Some(f64::INFINITY);
        }
        let (cx, cy) = self.key(p);
        let mut best = f64::INFINITY;
        let last = [cx, cy, self.reach - cx, self.reach - cy].into_iter().map(i64::abs).max().unwrap_or(0) + 1;
        for ring in 0..=last {
            for x in cx - ring..=cx + ring {
                self.scan((x, cy - ring), p, &mut best);
                if ring > 0 {
                    self.scan((x, cy + ring), p, &mut best);
                }
            }
            for y in cy - ring + 1..cy + ring {
                self.scan((cx - ring, y), p, &mut best);
                self.scan((cx + ring, y), p, &mut best);
            }
            if best <= floor {
                return None;
            }
            let cleared = ring as f64 * self.cell;
            if best <= cleared * cleared {
                break;
            }
        }
        Some(best)
    }
}

/// `a > b` where `None` stands for infinity.
fn greater(a: &Option<Q>, b: &Option<Q>) -> bool {
    match (a, b) {
        (None, None) => false,
        (None, Some(_)) => true,
        (Some(_), None) => false,
        (Some(x), Some(y)) => x > y,
    }
}

fn min_opt(a: Option<Q>, b: Option<Q>) -> Option<Q> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    }
}

impl Cover {
    /// Shrinks the elements so that the cover becomes canonical on `A`
    /// while every intersection pattern seen on the sample survives.
    pub fn canonize(&self) -> Result<Cover> {
        let two_h = self.sample.pitch() * qi(2);
        let isolated = self.sample.isolated_points(&self.target_a, &two_h);
        if !isolated.is_empty() {
            return Err(Error::Precondition(format!(
                "A has isolated sample points at scale 2h: {:?}",
                &isolated[..isolated.len().min(8)]
            )));
        }
        let missed = self.uncovered(&self.target_a);
        if !missed.is_empty() {
            return Err(Error::Precondition(format!(
                "cover misses {} points of A",
                missed.len()
            )));
        }
        let member = self.memberships();
        let n = self.elements.len();

        // one anchor per element meeting A, as deep inside it as the sample allows
        let mut anchor: Vec<Option<usize>> = vec![None; n];
        let mut anchor_clear: Vec<Option<Q>> = vec![None; n];
        let mut anchors: BTreeSet<usize> = BTreeSet::new();
        // points still free to witness each intersection pattern
        let mut free: BTreeMap<&[usize], usize> = BTreeMap::new();
        for m in member.iter().filter(|m| !m.is_empty()) {
            *free.entry(m.as_slice()).or_default() += 1;
        }
        for (k, e) in self.elements.iter().enumerate() {
            let mut best: Option<(Option<Q>, usize)> = None;
            for &i in e.realized.iter().filter(|i| self.target_a.contains(i)) {
                let pat = member[i].as_slice();
                if anchors.contains(&i) || (pat != [k] && free[pat] == 1) {
                    continue;
                }
                let c = self.clearance2(self.sample.point(i), &e.realized);
                if best.as_ref().is_none_or(|(bc, _)| greater(&c, bc)) {
                    best = Some((c, i));
                }
            }
            let has_a = e.realized.iter().any(|i| self.target_a.contains(i));
            match best {
                Some((c, i)) => {
                    anchor[k] = Some(i);
                    anchor_clear[k] = c;
                    anchors.insert(i);
                    *free.get_mut(member[i].as_slice()).unwrap() -= 1;
                }
                None if has_a => {
                    return Err(Error::SampleTooCoarse(format!(
                        "no distinct anchor point for element {:?}",
                        e.id
                    )))
                }
                None => {}
            }
        }

        // one witness per intersection pattern, kept away from the anchors
        let mut patterns: BTreeMap<&[usize], Vec<usize>> = BTreeMap::new();
        for (i, m) in member.iter().enumerate() {
            if !m.is_empty() {
                patterns.entry(m.as_slice()).or_default().push(i);
            }
        }
        let mut witnesses: Vec<(usize, Vec<usize>)> = Vec::new();
        for (pat, pts) in &patterns {
            if pat.len() == 1 && anchor[pat[0]].is_some() {
                // the anchor ends up alone in its element
                continue;
            }
            let mut best: Option<(Option<Q>, usize)> = None;
            for &i in pts.iter().filter(|i| !anchors.contains(i)) {
                let c = self
                    .sample
                    .nearest_where(self.sample.point(i), |j| anchors.contains(&j))
                    .map(|(d2, _)| d2);
                if best.as_ref().is_none_or(|(bc, _)| greater(&c, bc)) {
                    best = Some((c, i));
                }
            }
            let Some((_, w)) = best else {
                return Err(Error::SampleTooCoarse(format!(
                    "no witness for the intersection of {:?}",
                    pat.iter().map(|&k| &self.elements[k].id).collect::<Vec<_>>()
                )));
            };
            witnesses.push((w, pat.to_vec()));
        }

        // d below every anchor-to-chosen-point distance and every anchor clearance
        let chosen: BTreeSet<usize> = anchors.iter().copied().chain(witnesses.iter().map(|w| w.0)).collect();
        let mut bound: Option<Q> = None;
        for k in 0..n {
            let Some(a) = anchor[k] else { continue };
            let near = self
                .sample
                .nearest_where(self.sample.point(a), |j| j != a && chosen.contains(&j))
                .map(|(d2, _)| d2);
            bound = min_opt(bound, min_opt(near, anchor_clear[k].clone()));
        }
        let d = match bound {
            Some(b) => sqrt_floor(&b) / qi(2),
            None => self.sample.pitch().clone(),
        };
        if !d.is_positive() {
            return Err(Error::SampleTooCoarse("canonization radius underflow".into()));
        }
        let r = &d / qi(2);

        let mut out = self.clone();
        for k in 0..n {
            let balls: Vec<Region> = (0..n)
                .filter(|&j| j != k)
                .filter_map(|j| anchor[j])
                .map(|a| Region::closed_ball(self.sample.point(a).clone(), r.clone()))
                .collect();
            if balls.is_empty() {
                continue;
            }
            let region = Region::difference(self.elements[k].region.clone(), Region::union(balls)).simplified();
            out.set_region(k, region);
        }

        let after = out.memberships();
        for (w, pat) in &witnesses {
            if &after[*w] != pat {
                return Err(Error::SampleTooCoarse(format!(
                    "witness {w} changed its intersection pattern"
                )));
            }
        }
        let bad = out.canonical_violations();
        if !bad.is_empty() {
            return Err(Error::SampleTooCoarse(format!("still not canonical at {bad:?}")));
        }
        Ok(out)
    }
}

impl Cover {
    /// Replaces the named element by the `m` concentric pieces around `g.center`.
    pub fn grate(&self, g: &GratingSpec) -> Result<Cover> {
        let mut out = self.clone();
        out.grate_in_place(g)?;
        Ok(out)
    }

    /// [`Cover::grate`] without copying the cover; unchanged on error.
    pub fn grate_in_place(&mut self, g: &GratingSpec) -> Result<()> {
        if g.m == 0 {
            return Err(Error::Invalid("grating needs m >= 1".into()));
        }
        if !g.epsilon.is_positive() {
            return Err(Error::Invalid("grating radius must be positive".into()));
        }
        let k = self.position(&g.element_id)?;
        let kernel_region = self.kernel_region_at(k);
        if !kernel_region.contains(&g.center) {
            return Err(Error::Precondition(format!(
                "center {:?} is not in the kernel of {:?}",
                g.center, g.element_id
            )));
        }
        let kernel = self.kernel_at(k, self.memberships());
        let ball = Region::open_ball(g.center.clone(), g.epsilon.clone());
        if !realize(&self.sample, &ball).is_subset(&kernel) {
            return Err(Error::Precondition(format!(
                "ball of radius {} around the center leaves the kernel of {:?}",
                to_f64(&g.epsilon),
                g.element_id
            )));
        }
        if let Region::OpenBall { center, radius } = &kernel_region {
            let room = radius - &g.epsilon;
            if room.is_negative() || dist2(center, &g.center) > &room * &room {
                return Err(Error::Precondition("ball not inside the kernel ball".into()));
            }
        }
        let id = &self.elements[k].id;
        let base = &self.elements[k].region;
        let x = &g.center;
        let eps = &g.epsilon;
        let m = g.m as i64;
        let pieces: Vec<Region> = if m == 1 {
            vec![base.clone()]
        } else {
            (1..=m)
                .map(|j| {
                    if j == 1 {
                        Region::difference(base.clone(), Region::closed_ball(x.clone(), eps / qi(2)))
                    } else if j < m {
                        Region::difference(
                            Region::open_ball(x.clone(), eps / qi(j - 1)),
                            Region::closed_ball(x.clone(), eps / qi(j + 1)),
                        )
                    } else {
                        Region::open_ball(x.clone(), eps / qi(m - 1))
                    }
                })
                .collect()
        };
        let inner = realize(&self.sample, &Region::closed_ball(x.clone(), eps / qi(2)));
        let fresh: Vec<CoverElement> = pieces
            .into_iter()
            .enumerate()
            .map(|(j, region)| {
                let realized = if j == 0 && m > 1 {
                    self.elements[k].realized.difference(&inner).copied().collect()
                } else {
                    realize(&self.sample, &region)
                };
                CoverElement::new(piece_id(id, j + 1), region, realized)
            })
            .collect();
        for f in &fresh {
            if self.elements.iter().any(|e| e.id == f.id) {
                return Err(Error::Invalid(format!("grating id {:?} already used", f.id)));
            }
        }
        self.elements.splice(k..=k, fresh);
        self.member = OnceLock::new();
        Ok(())
    }

    /// Shortest chain from `start` to an element meeting `a`, consecutive
    /// elements meeting inside `m`. Intersections are tested on the sample
    /// points in `m` and on the extra `probes` that lie in `m`.
    pub fn chain_to(
        &self,
        start: &str,
        m: &Region,
        a: &BTreeSet<usize>,
        probes: &[Point],
    ) -> Result<Option<Vec<String>>> {
        let s = self.position(start)?;
        let meets = |k: usize| self.elements[k].realized.iter().any(|i| a.contains(i));
        if meets(s) {
            return Ok(Some(vec![start.to_string()]));
        }
        let member = self.memberships();
        let mut groups: Vec<Vec<usize>> = realize(&self.sample, m)
            .into_iter()
            .map(|i| member[i].clone())
            .collect();
        let boxes: Vec<_> = self.elements.iter().map(|e| e.bbox.clone()).collect();
        for p in probes.iter().filter(|p| m.contains(p)) {
            let pf = p.approx();
            let g: Vec<usize> = (0..self.elements.len())
                .filter(|&k| {
                    boxes[k].as_ref().is_some_and(|b| {
                        (0..pf.len()).all(|c| pf[c] >= b.min[c] && pf[c] <= b.max[c])
                    }) && self.elements[k].region.contains(p)
                })
                .collect();
            groups.push(g);
        }
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.elements.len()];
        for g in &groups {
            for &u in g {
                for &v in g {
                    if u != v {
                        adj[u].insert(v);
                    }
                }
            }
        }
        let mut prev: Vec<Option<usize>> = vec![None; self.elements.len()];
        let mut seen = vec![false; self.elements.len()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if seen[v] {
                    continue;
                }
                seen[v] = true;
                prev[v] = Some(u);
                if meets(v) {
                    let mut path = vec![v];
                    let mut cur = v;
                    while let Some(p) = prev[cur] {
                        path.push(p);
                        cur = p;
                    }
                    path.reverse();
                    return Ok(Some(path.into_iter().map(|k| self.elements[k].id.clone()).collect()));
                }
                queue.push_back(v);
            }
        }
        Ok(None)
    }

    /// Enlarges the listed elements by one common ball taken from a kernel.
    pub fn extend(&self, ids: &[String]) -> Result<Cover> {
        let mut out = self.clone();
        out.extend_in_place(ids)?;
        Ok(out)
    }

    /// [`Cover::extend`] without copying the cover; unchanged on error.
    pub fn extend_in_place(&mut self, ids: &[String]) -> Result<()> {
        if ids.is_empty() {
            return Err(Error::Invalid("extension needs at least one element".into()));
        }
        let mut pos = Vec::new();
        for id in ids {
            let k = self.position(id)?;
            if pos.contains(&k) {
                return Err(Error::Invalid(format!("element {id:?} listed twice")));
            }
            pos.push(k);
        }
        let mut common = self.elements[pos[0]].realized.clone();
        for &k in &pos[1..] {
            common.retain(|i| self.elements[k].realized.contains(i));
        }
        if !common.is_empty() {
            return Err(Error::Precondition(format!(
                "elements {ids:?} already intersect; nothing to extend"
            )));
        }
        if let Some(&k) = pos.iter().find(|&&k| !self.meets_a(k)) {
            return Err(Error::Precondition(format!(
                "element {:?} misses A",
                self.elements[k].id
            )));
        }
        let member = self.memberships();
        let mut ball = None;
        for &k in &pos {
            let kernel = self.kernel_at(k, member);
            let kernel_a: BTreeSet<usize> = kernel.iter().copied().filter(|i| self.target_a.contains(i)).collect();
            let a = if kernel_a.len() >= 2 {
                kernel.iter().next().copied()
            } else {
                kernel.iter().copied().find(|i| !kernel_a.contains(i))
            };
            let (Some(a), false) = (a, kernel_a.is_empty()) else { continue };
            let pa = self.sample.point(a);
            let keep = self
                .sample
                .nearest_where(pa, |j| j != a && kernel_a.contains(&j))
                .map(|(d2, _)| d2);
            let bound = min_opt(keep, self.clearance2(pa, &kernel));
            let d = match bound {
                Some(b) => sqrt_floor(&b) / qi(2),
                None => self.sample.pitch().clone(),
            };
            if d.is_positive() {
                ball = Some(Region::open_ball(pa.clone(), d));
                break;
            }
        }
        let Some(ball) = ball else {
            return Err(Error::Precondition(format!(
                "no listed element of {ids:?} has a kernel ball to share"
            )));
        };
        let added = realize(&self.sample, &ball);
        for &k in &pos {
            let e = &mut self.elements[k];
            e.region = match std::mem::replace(&mut e.region, Region::Union { parts: Vec::new() }) {
                Region::Union { mut parts } => {
                    parts.push(ball.clone());
                    Region::Union { parts }
                }
                other => Region::union(vec![other, ball.clone()]),
            };
            e.realized.extend(added.iter().copied());
            e.bbox = match (&e.bbox, ball.bbox()) {
                (Some(a), Some(b)) => Some(a.union(&b)),
                (a, b) => a.clone().or(b),
            };
        }
        if let Some(m) = self.member.get_mut() {
            for &i in &added {
                m[i].extend(pos.iter().copied());
                m[i].sort_unstable();
                m[i].dedup();
            }
        }
        Ok(())
    }

    /// Sample diameters of all elements (a lower bound of the true mesh),
    /// with symbolic upper bounds where the shape allows.
    pub fn mesh(&self) -> MeshReport {
        let elements: Vec<ElementMesh> = self
            .elements
            .iter()
            .map(|e| {
                let diam2 = sample_diameter2(&self.sample, &e.realized);
                ElementMesh {
                    id: e.id.clone(),
                    diam: to_f64(&diam2).sqrt(),
                    diam2,
                    bound2: e.region.diameter2_bound().map(|b| crate::rational::format_q(&b)),
                }
            })
            .collect();
        let diam2 = elements.iter().map(|e| e.diam2.clone()).max().unwrap_or_else(Q::zero);
        MeshReport { diam: to_f64(&diam2).sqrt(), diam2, elements }
    }
}

pub fn piece_id(id: &str, k: usize) -> String {
    format!("{id}/{k}")
}

/// Exact squared diameter of a set of sample points.
pub fn sample_diameter2(s: &PointSample, set: &BTreeSet<usize>) -> Q {
    let pts: Vec<(usize, Vec<f64>)> = set.iter().map(|&i| (i, s.point(i).to_f64())).collect();
    let d2f = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let mut best = 0.0f64;
    for (i, (_, a)) in pts.iter().enumerate() {
        for (_, b) in &pts[i + 1..] {
            best = best.max(d2f(a, b));
        }
    }
    let cut = best * (1.0 - 1e-9) - 1e-300;
    let mut exact = Q::zero();
    for (i, (ia, a)) in pts.iter().enumerate() {
        for (ib, b) in &pts[i + 1..] {
            if d2f(a, b) >= cut {
                exact = exact.max(dist2(s.point(*ia), s.point(*ib)));
            }
        }
    }
    exact
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{triangulate_disk, star_region, ConvexDisk};
    use crate::rational::q;

    fn grid(x0: i64, x1: i64, y0: i64, y1: i64, n: i64) -> Vec<Point> {
        let mut out = Vec::new();
        for i in x0 * n..=x1 * n {
            for j in y0 * n..=y1 * n {
                out.push(Point::xy(q(i, n), q(j, n)));
            }
        }
        out
    }

    fn pt(x: Q, y: Q) -> Point {
        Point::xy(x, y)
    }

    fn ball(x: Q, y: Q, r: Q) -> Region {
        Region::open_ball(pt(x, y), r)
    }

    fn cover(pts: Vec<Point>, n: i64, a: impl Fn(&Point) -> bool, els: Vec<(&str, Region)>) -> Cover {
        let target = pts.iter().enumerate().filter(|(_, p)| a(p)).map(|(i, _)| i).collect();
        let s = PointSample::new(pts, q(1, n)).unwrap();
        Cover::new(s, target, els.into_iter().map(|(i, r)| (i.to_string(), r)).collect()).unwrap()
    }

    /// Nerve faces straight from region membership on every sample point.
    fn brute_nerve(c: &Cover) -> BTreeSet<BTreeSet<String>> {
        let mut faces = BTreeSet::new();
        for p in c.sample().points() {
            let ids: Vec<&String> = c.elements().iter().filter(|e| e.region.contains(p)).map(|e| &e.id).collect();
            for mask in 1u32..(1 << ids.len()) {
                let f: BTreeSet<String> =
                    (0..ids.len()).filter(|b| mask >> b & 1 == 1).map(|b| ids[b].clone()).collect();
                faces.insert(f);
            }
        }
        faces
    }

    fn face(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    fn on_axis(p: &Point) -> bool {
        p.y().is_zero()
    }

    #[test]
    fn realized_matches_membership() {
        let c = cover(grid(-2, 2, -2, 2, 8), 8, |_| true, vec![("u", ball(qi(0), qi(0), qi(1)))]);
        for (i, p) in c.sample().points().iter().enumerate() {
            assert_eq!(c.elements()[0].realized().contains(&i), c.elements()[0].region.contains(p));
        }
    }

    #[test]
    fn kernel_of_disjoint_balls_is_everything() {
        let c = cover(
            grid(-2, 4, -2, 2, 8),
            8,
            |_| true,
            vec![("u", ball(qi(0), qi(0), qi(1))), ("v", ball(qi(3), qi(0), qi(1)))],
        );
        for e in c.elements() {
            assert_eq!(&c.kernel(&e.id).unwrap().0, e.realized());
        }
    }

    #[test]
    fn kernel_excludes_overlap() {
        let c = cover(
            grid(-2, 3, -2, 2, 8),
            8,
            |_| true,
            vec![("u", ball(qi(0), qi(0), qi(1))), ("v", ball(qi(1), qi(0), qi(1)))],
        );
        let v = &c.elements()[1].region;
        let (k, sym) = c.kernel("u").unwrap();
        let expect: BTreeSet<usize> = c.elements()[0]
            .realized()
            .iter()
            .copied()
            .filter(|&i| !v.contains(c.sample().point(i)))
            .collect();
        assert_eq!(k, expect);
        for (i, p) in c.sample().points().iter().enumerate() {
            assert_eq!(sym.contains(p), k.contains(&i));
        }
        assert!(matches!(c.kernel("w"), Err(Error::UnknownId(_))));
    }

    #[test]
    fn kernel_of_swallowed_element_is_empty() {
        let c = cover(
            grid(-2, 2, -2, 2, 8),
            8,
            |_| true,
            vec![("u", ball(qi(0), qi(0), qi(2))), ("v", ball(qi(0), qi(0), q(1, 2)))],
        );
        assert!(c.kernel("v").unwrap().0.is_empty());
    }

    #[test]
    fn canonical_checks() {
        let disjoint = cover(
            grid(-2, 4, -1, 1, 8),
            8,
            on_axis,
            vec![("u", ball(qi(0), qi(0), qi(1))), ("v", ball(qi(3), qi(0), qi(1)))],
        );
        assert!(disjoint.is_canonical());
        let twins = cover(
            grid(-2, 2, -1, 1, 8),
            8,
            on_axis,
            vec![("u", ball(qi(0), qi(0), qi(1))), ("v", ball(qi(0), qi(0), qi(1)))],
        );
        assert_eq!(twins.canonical_violations(), vec!["u".to_string(), "v".to_string()]);
    }

    fn check_canonization(c: &Cover) {
        let out = c.canonize().unwrap();
        assert!(out.is_canonical(), "{:?}", out.canonical_violations());
        assert_eq!(brute_nerve(&out), brute_nerve(c));
        assert_eq!(out.ids(), c.ids());
        for (old, new) in c.elements().iter().zip(out.elements()) {
            assert!(new.realized().is_subset(old.realized()));
        }
        assert!(out.uncovered(c.target_a()).is_empty());
    }

    #[test]
    fn canonize_keeps_canonical_cover_nerve() {
        let c = cover(
            grid(-2, 3, -2, 2, 16),
            16,
            |p| on_axis(p) && p.x() > &qi(-1) && p.x() < &q(5, 2),
            vec![("u", ball(qi(0), qi(0), qi(1))), ("v", ball(q(3, 2), qi(0), qi(1)))],
        );
        assert!(c.is_canonical());
        check_canonization(&c);
    }

    #[test]
    fn canonize_twins_and_swallowed_element() {
        let c = cover(
            grid(-2, 3, -2, 2, 16),
            16,
            |p| on_axis(p) && p.x() > &qi(-1) && p.x() < &q(5, 2),
            vec![
                ("u", ball(qi(0), qi(0), qi(1))),
                ("v", ball(q(3, 2), qi(0), qi(1))),
                ("w", ball(q(3, 4), qi(0), q(1, 8))),
                ("w2", ball(q(3, 4), qi(0), q(1, 8))),
            ],
        );
        assert!(!c.is_canonical());
        check_canonization(&c);
    }

    #[test]
    fn canonize_rejects_isolated_points() {
        let c = cover(
            grid(-2, 2, -2, 2, 4),
            4,
            |p| p == &Point::xy(qi(0), qi(0)) || p == &Point::xy(qi(1), qi(1)),
            vec![("u", ball(qi(0), qi(0), qi(2)))],
        );
        assert!(matches!(c.canonize(), Err(Error::Precondition(_))));
    }

    fn path_nerve(before: &BTreeSet<BTreeSet<String>>, id: &str, m: usize) -> BTreeSet<BTreeSet<String>> {
        let mut out: BTreeSet<BTreeSet<String>> = before
            .iter()
            .map(|f| f.iter().map(|v| if v == id { piece_id(id, 1) } else { v.clone() }).collect())
            .collect();
        for k in 1..=m {
            out.insert(BTreeSet::from([piece_id(id, k)]));
            if k < m {
                out.insert(BTreeSet::from([piece_id(id, k), piece_id(id, k + 1)]));
            }
        }
        out
    }

    #[test]
    fn grating_attaches_path() {
        let c = cover(
            grid(-2, 3, -2, 2, 32),
            32,
            |_| true,
            vec![("u", ball(qi(0), qi(0), qi(1))), ("v", ball(q(3, 2), qi(0), qi(1)))],
        );
        let before = brute_nerve(&c);
        for m in [1, 2, 4, 5] {
            let g = GratingSpec { element_id: "u".into(), center: pt(q(-1, 2), qi(0)), epsilon: q(1, 2), m };
            let out = c.grate(&g).unwrap();
            assert_eq!(brute_nerve(&out), path_nerve(&before, "u", m), "m = {m}");
            assert!(out.uncovered(&c.elements()[0].realized().clone()).is_empty());
        }
    }

    #[test]
    fn grating_single_piece_is_relabel() {
        let c = cover(grid(-2, 2, -2, 2, 8), 8, |_| true, vec![("u", ball(qi(0), qi(0), qi(1)))]);
        let g = GratingSpec { element_id: "u".into(), center: pt(qi(0), qi(0)), epsilon: q(1, 2), m: 1 };
        let out = c.grate(&g).unwrap();
        assert_eq!(out.ids(), vec!["u/1".to_string()]);
        assert_eq!(out.elements()[0].region, c.elements()[0].region);
    }

    #[test]
    fn grating_two_pieces_on_ball() {
        let c = cover(grid(-2, 2, -2, 2, 32), 32, |_| true, vec![("u", ball(qi(0), qi(0), qi(1)))]);
        let g = GratingSpec { element_id: "u".into(), center: pt(qi(0), qi(0)), epsilon: q(1, 2), m: 2 };
        let out = c.grate(&g).unwrap();
        let nerve = brute_nerve(&out);
        assert_eq!(nerve, BTreeSet::from([face(&["u/1"]), face(&["u/2"]), face(&["u/1", "u/2"])]));
        // overlap is the open annulus 1/4 < |p| < 1/2
        let both: BTreeSet<usize> = out.elements()[0].realized().intersection(out.elements()[1].realized()).copied().collect();
        for (i, p) in c.sample().points().iter().enumerate() {
            let r2 = dist2(p, &pt(qi(0), qi(0)));
            assert_eq!(both.contains(&i), r2 > q(1, 16) && r2 < q(1, 4));
        }
    }

    #[test]
    fn grating_preconditions() {
        let c = cover(
            grid(-2, 3, -2, 2, 8),
            8,
            |_| true,
            vec![("u", ball(qi(0), qi(0), qi(1))), ("v", ball(qi(1), qi(0), qi(1)))],
        );
        let off = GratingSpec { element_id: "u".into(), center: pt(q(3, 4), qi(0)), epsilon: q(1, 8), m: 3 };
        assert!(matches!(c.grate(&off), Err(Error::Precondition(_))));
        let wide = GratingSpec { element_id: "u".into(), center: pt(q(-1, 2), qi(0)), epsilon: qi(1), m: 3 };
        assert!(matches!(c.grate(&wide), Err(Error::Precondition(_))));
        let alone = cover(grid(-2, 2, -2, 2, 8), 8, |_| true, vec![("u", ball(qi(0), qi(0), qi(1)))]);
        let g = GratingSpec { element_id: "u".into(), center: pt(q(1, 2), qi(0)), epsilon: q(3, 4), m: 2 };
        assert!(matches!(alone.grate(&g), Err(Error::Precondition(_))));
    }

    fn row_of_balls() -> Cover {
        cover(
            grid(-1, 4, -1, 1, 8),
            8,
            |p| p == &pt(q(5, 2), qi(0)),
            vec![
                ("b0", ball(qi(0), qi(0), q(3, 4))),
                ("b1", ball(qi(1), qi(0), q(3, 4))),
                ("b2", ball(qi(2), qi(0), q(3, 4))),
            ],
        )
    }

    #[test]
    fn chain_along_segment() {
        let c = row_of_balls();
        let m = Region::Arc { points: vec![pt(qi(0), qi(0)), pt(qi(3), qi(0))], open_start: false, open_end: false };
        let chain = c.chain_to("b0", &m, c.target_a(), &[]).unwrap();
        assert_eq!(chain, Some(vec!["b0".to_string(), "b1".into(), "b2".into()]));
        assert_eq!(
            c.chain_to("b2", &m, c.target_a(), &[]).unwrap(),
            Some(vec!["b2".to_string()])
        );
        assert!(matches!(c.chain_to("zz", &m, c.target_a(), &[]), Err(Error::UnknownId(_))));
    }

    #[test]
    fn chain_absent_when_m_avoids_neighbours() {
        let c = row_of_balls();
        let m = Region::Arc { points: vec![pt(q(-1, 2), qi(0)), pt(qi(0), qi(0))], open_start: false, open_end: false };
        assert_eq!(c.chain_to("b0", &m, c.target_a(), &[]).unwrap(), None);
    }

    #[test]
    fn chain_uses_extra_probes() {
        // the sample misses the thin overlap, a probe does not
        let pts = vec![pt(qi(0), qi(0)), pt(qi(2), qi(0))];
        let c = cover(
            pts,
            1,
            |p| p == &pt(qi(2), qi(0)),
            vec![("l", ball(qi(0), qi(0), q(11, 10))), ("r", ball(qi(2), qi(0), q(11, 10)))],
        );
        let m = Region::Arc { points: vec![pt(qi(0), qi(0)), pt(qi(2), qi(0))], open_start: false, open_end: false };
        assert_eq!(c.chain_to("l", &m, c.target_a(), &[]).unwrap(), None);
        let probe = [pt(qi(1), qi(0))];
        assert_eq!(c.chain_to("l", &m, c.target_a(), &probe).unwrap(), Some(vec!["l".to_string(), "r".into()]));
    }

    #[test]
    fn extension_of_disjoint_pair() {
        let c = cover(
            grid(-1, 3, -1, 1, 8),
            8,
            on_axis,
            vec![("u", ball(qi(0), qi(0), q(1, 2))), ("v", ball(qi(2), qi(0), q(1, 2)))],
        );
        let before = brute_nerve(&c);
        let out = c.extend(&["u".into(), "v".into()]).unwrap();
        let mut expect = before.clone();
        expect.insert(face(&["u", "v"]));
        assert_eq!(brute_nerve(&out), expect);
        assert!(out.is_canonical());
    }

    #[test]
    fn extension_of_empty_triple() {
        let r = q(11, 10);
        let c = cover(
            grid(-2, 3, -2, 3, 8),
            8,
            |_| true,
            vec![
                ("a", ball(qi(0), qi(0), r.clone())),
                ("b", ball(qi(2), qi(0), r.clone())),
                ("c", ball(qi(1), q(7, 4), r)),
            ],
        );
        let before = brute_nerve(&c);
        assert!(before.contains(&face(&["a", "b"])) && !before.contains(&face(&["a", "b", "c"])));
        let out = c.extend(&["a".into(), "b".into(), "c".into()]).unwrap();
        let mut expect = before;
        expect.insert(face(&["a", "b", "c"]));
        assert_eq!(brute_nerve(&out), expect);
        assert!(out.is_canonical());
        assert!(matches!(out.extend(&["a".into(), "b".into()]), Err(Error::Precondition(_))));
    }

    #[test]
    fn mesh_of_ball_and_stars() {
        let c = cover(grid(-1, 1, -1, 1, 16), 16, |_| true, vec![("u", ball(qi(0), qi(0), qi(1)))]);
        let m = c.mesh();
        assert!(m.diam2 <= qi(4));
        assert_eq!(m.elements[0].bound2.as_deref(), Some("4"));

        let square = ConvexDisk::Polygon {
            vertices: vec![pt(qi(0), qi(0)), pt(qi(1), qi(0)), pt(qi(1), qi(1)), pt(qi(0), qi(1))],
        };
        let t = triangulate_disk(&square, &qi(3)).unwrap();
        let els: Vec<(String, Region)> =
            (0..4).map(|v| (format!("s{v}"), star_region(&t, v).unwrap())).collect();
        let pts = grid(0, 1, 0, 1, 16);
        let s = PointSample::new(pts, q(1, 16)).unwrap();
        let c = Cover::new(s, BTreeSet::new(), els).unwrap();
        let m = c.mesh();
        let mut oracle = Q::zero();
        for e in c.elements() {
            for &i in e.realized() {
                for &j in e.realized() {
                    oracle = oracle.max(dist2(c.sample().point(i), c.sample().point(j)));
                }
            }
        }
        assert_eq!(m.diam2, oracle);
        assert!(m.diam2 <= qi(2));
    }

    #[test]
    fn mesh_of_empty_element_is_zero() {
        let c = cover(grid(0, 1, 0, 1, 4), 4, |_| true, vec![("far", ball(qi(9), qi(9), qi(1)))]);
        assert_eq!(c.mesh().diam2, Q::zero());
    }

    #[test]
    fn cover_json_roundtrip() {
        let c = row_of_balls();
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("targetA"));
        let back: Cover = serde_json::from_str(&text).unwrap();
        assert_eq!(back.ids(), c.ids());
        for (a, b) in back.elements().iter().zip(c.elements()) {
            assert_eq!(a.realized(), b.realized());
        }
        assert!(serde_json::from_str::<Cover>(&text.replace("\"b1\"", "\"b0\"")).is_err());
    }
}
