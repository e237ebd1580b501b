//! Small covers of a cellular compactum whose nerve is isomorphic to the nerve
//! of a triangulated disk around it.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{ScenarioReport, StageRecord};
use crate::complexes::{is_isomorphism, nerve, SimplicialMap};
use crate::covers::{piece_id, Cover, GratingSpec};
use crate::error::{Error, Result};
use crate::geometry::{
    dist2, star_region, triangulate_disk, BBox, CellularScene, ConvexDisk, Point, PointSample, Region, SpaceModel,
};
use crate::rational::{format_q, parse_q, q, qi, sqrt_floor, to_f64, Q};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Config {
    pub scene: CellularScene,
    #[serde(with = "crate::rational::serde_q")]
    pub epsilon: Q,
    #[serde(rename = "K")]
    pub k: u32,
}

impl Theorem1Config {
    pub fn new(scene: CellularScene, epsilon: Q, k: u32) -> Result<Self> {
        let c = Theorem1Config { scene, epsilon, k };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k <= 16 {
            return Err(Error::Precondition(format!("K = {} must exceed 16", self.k)));
        }
        if !self.epsilon.is_positive() {
            return Err(Error::Precondition("epsilon must be positive".into()));
        }
        self.scene.validate()
    }

    /// `epsilon / (K + 1)`.
    pub fn ball_radius(&self) -> Q {
        &self.epsilon / qi(self.k as i64 + 1)
    }
}

fn square(h: Q) -> ConvexDisk {
    ConvexDisk::Polygon {
        vertices: vec![
            Point::xy(-h.clone(), -h.clone()),
            Point::xy(h.clone(), -h.clone()),
            Point::xy(h.clone(), h.clone()),
            Point::xy(-h.clone(), h),
        ],
    }
}

/// Compressed sinusoid: `y = sin(1/x)` on `[x_min, 1]`, the limit segment
/// `{0} x [-1, 1]` and a horizontal bridge between them, as a polyline tree.
pub fn compressed_sinusoid(x_min: &Q, segments: usize) -> Vec<Vec<Point>> {
    let u_max = qi(1) / x_min;
    let du = (&u_max - qi(1)) / qi(segments as i64);
    let curve: Vec<Point> = (0..=segments)
        .map(|k| {
            let u = qi(1) + &du * qi(k as i64);
            let y = (to_f64(&u).sin() * 1e6).round() as i64;
            Point::xy(qi(1) / u, q(y, 1_000_000))
        })
        .collect();
    let end = curve.last().expect("nonempty").clone();
    let foot = Point::xy(qi(0), end.y().clone());
    vec![
        curve,
        vec![end, foot.clone()],
        vec![Point::xy(qi(0), qi(-1)), foot, Point::xy(qi(0), qi(1))],
    ]
}

/// Built-in scenes inside the squares of half-widths `1/16 > 1/32 > 1/128`:
/// `point` (a disk of radius `1/256`), `segment` and `sinusoid`.
pub fn builtin_scene(name: &str) -> Result<CellularScene> {
    let disks = vec![square(q(1, 16)), square(q(1, 32)), square(q(1, 128))];
    let (space, pitch) = match name {
        "point" => (SpaceModel::Disk { center: Point::xy(qi(0), qi(0)), radius: q(1, 256) }, q(1, 4096)),
        "segment" => (
            SpaceModel::Polylines { paths: vec![vec![Point::xy(q(-1, 160), qi(0)), Point::xy(q(1, 160), qi(0))]] },
            q(1, 8192),
        ),
        "sinusoid" => {
            let scale = |p: &Point| Point::xy(p.x() / qi(160) - q(1, 320), p.y() / qi(160));
            let paths = compressed_sinusoid(&q(1, 16), 128)
                .iter()
                .map(|path| path.iter().map(scale).collect())
                .collect();
            (SpaceModel::Polylines { paths }, q(1, 8192))
        }
        other => return Err(Error::Invalid(format!("unknown scene {other:?}"))),
    };
    let s = CellularScene { disks, space, pitch };
    s.validate()?;
    Ok(s)
}

/// Greedy net: every sample point is within `r / 2` of a chosen one.
fn ball_centers(xs: &[Point], r: &Q) -> Vec<Point> {
    let h2 = r * r / qi(4);
    let mut f: Vec<Point> = Vec::new();
    for x in xs {
        if !f.iter().any(|c| dist2(c, x) < h2) {
            f.push(x.clone());
        }
    }
    f
}

/// First disk certified to lie in the union of the open balls: round disks
/// inside a single ball, polygons through a fine triangulation whose
/// triangles each sit in one ball.
fn capture_index(scene: &CellularScene, f: &[Point], r: &Q) -> Result<usize> {
    let r2 = r * r;
    for (i, d) in scene.disks.iter().enumerate() {
        let ok = match d {
            ConvexDisk::Round { center, radius } => {
                radius < r && {
                    let gap = r - radius;
                    f.iter().any(|x| dist2(x, center) < &gap * &gap)
                }
            }
            ConvexDisk::Polygon { .. } => {
                let t = triangulate_disk(d, &(r / qi(4)))?;
                t.triangles.iter().all(|tr| {
                    f.iter().any(|x| tr.iter().all(|&v| dist2(x, &t.vertices[v]) < r2))
                })
            }
        };
        if ok {
            return Ok(i);
        }
    }
    Err(Error::Precondition("no disk of the scene lies inside the union of the balls".into()))
}

/// Polyline `y -> r(y) -> x` without repeated corners, and probe points along it.
fn fiber_path(pts: [&Point; 3], step: &Q) -> (Vec<Point>, Vec<Point>) {
    let mut path: Vec<Point> = Vec::new();
    for p in pts {
        if path.last() != Some(p) {
            path.push(p.clone());
        }
    }
    let mut probes = vec![path[0].clone()];
    let sf = to_f64(step);
    for w in path.windows(2) {
        let len = to_f64(&dist2(&w[0], &w[1])).sqrt();
        let parts = ((len / sf).ceil() as i64).max(1);
        for s in 1..=parts {
            probes.push(w[0].lerp(&w[1], &(qi(s) / qi(parts))));
        }
    }
    (path, probes)
}

/// Bounding boxes of the elements of a cover, bucketed on a uniform grid.
struct Boxes {
    boxes: Vec<Option<BBox>>,
    cell: f64,
    grid: HashMap<(i64, i64), Vec<usize>>,
    wide: Vec<usize>,
}

impl Boxes {
    const SPREAD: i64 = 16;

    fn of(c: &Cover) -> Self {
        let boxes: Vec<Option<BBox>> = c.elements().iter().map(|e| e.bbox().cloned()).collect();
        let mut sides: Vec<f64> =
            boxes.iter().flatten().map(|b| (b.max[0] - b.min[0]).max(b.max[1] - b.min[1])).filter(|s| *s > 0.0).collect();
        sides.sort_by(f64::total_cmp);
        let cell = sides.get(sides.len() / 2).copied().unwrap_or(1.0);
        let mut out = Boxes { boxes, cell, grid: HashMap::new(), wide: Vec::new() };
        for j in 0..out.boxes.len() {
            let Some(b) = &out.boxes[j] else { continue };
            let (lo, hi) = (out.key(&b.min), out.key(&b.max));
            if hi.0 - lo.0 > Self::SPREAD || hi.1 - lo.1 > Self::SPREAD {
                out.wide.push(j);
                continue;
            }
            for x in lo.0..=hi.0 {
                for y in lo.1..=hi.1 {
                    out.grid.entry((x, y)).or_default().push(j);
                }
            }
        }
        out
    }

    fn key(&self, p: &[f64]) -> (i64, i64) {
        ((p[0] / self.cell).floor() as i64, (p[1] / self.cell).floor() as i64)
    }

    /// Positions of the elements of `c` containing `p`, ascending.
    fn pattern(&self, c: &Cover, p: &Point) -> Vec<usize> {
        let pf = p.approx();
        let held = |b: &BBox| (0..pf.len()).all(|i| pf[i] >= b.min[i] && pf[i] <= b.max[i]);
        let mut out: Vec<usize> = self
            .grid
            .get(&self.key(pf))
            .into_iter()
            .flatten()
            .chain(&self.wide)
            .copied()
            .filter(|&j| self.boxes[j].as_ref().is_some_and(held) && c.elements()[j].region.contains(p))
            .collect();
        out.sort_unstable();
        out
    }

}

/// Element `k` of a cover and the elements whose boxes overlap its box.
struct Neighbours {
    k: usize,
    others: Vec<usize>,
}

impl Neighbours {
    fn of(c: &Cover, k: usize) -> Self {
        let others = match c.elements()[k].bbox() {
            None => Vec::new(),
            Some(b) => (0..c.len())
                .filter(|&j| j != k && c.elements()[j].bbox().is_some_and(|o| o.overlaps(b)))
                .collect(),
        };
        Neighbours { k, others }
    }

    /// `p` lies in element `k` of `c` and in no other one.
    fn only_in(&self, c: &Cover, p: &Point) -> bool {
        let inside = |j: usize| {
            let e = &c.elements()[j];
            e.bbox().is_some_and(|b| b.holds(p)) && e.region.contains(p)
        };
        inside(self.k) && !self.others.iter().any(|&j| inside(j))
    }
}

struct Densifier<'a> {
    space: &'a SpaceModel,
    u: &'a Cover,
    u_boxes: Boxes,
    u_patterns: BTreeSet<Vec<usize>>,
    added: usize,
}

impl Densifier<'_> {
    /// Adds the band points if all of them lie in element `k` of `c` alone,
    /// with an intersection pattern that `U` already realizes.
    fn try_add(&mut self, c: &mut Cover, near: &Neighbours, z: &Point, bands: &[(Q, Q)]) -> bool {
        let known = |p: &Point| self.u_patterns.contains(&self.u_boxes.pattern(self.u, p));
        let mut pts = Vec::new();
        for (lo, hi) in bands {
            let band = self.space.points_in_band(z, lo, hi);
            if !band.iter().all(|p| near.only_in(c, p) && known(p)) {
                return false;
            }
            pts.extend(band);
        }
        let before = c.sample().len();
        c.add_points(pts, true);
        self.added += c.sample().len() - before;
        true
    }

    /// Grating center and radius in the kernel of `id`, with sample points
    /// added in every ring of the `m`-piece grating and just outside it.
    /// Deeper kernel points are tried first.
    fn grating_center(&mut self, c: &mut Cover, id: &str, m: usize) -> Result<(Point, Q)> {
        let near = Neighbours::of(c, c.position(id)?);
        let mq = qi(m as i64);
        let kd = c.kernel_by_depth(id, CANDIDATES)?;
        for (zi, c2) in kd {
            let z = c.sample().point(zi).clone();
            let mut eps = match c2 {
                Some(c2) => sqrt_floor(&c2) / qi(2),
                None => c.sample().pitch() * qi(4),
            };
            for _ in 0..HALVINGS {
                if eps.is_zero() {
                    break;
                }
                let mut bands = vec![(eps.clone(), &eps * qi(2))];
                for k in 1..m {
                    bands.push((&eps / qi(k as i64 + 1), &eps / qi(k as i64)));
                }
                bands.push((&eps / (qi(2) * &mq), &eps / &mq));
                let ok = self.try_add(c, &near, &z, &bands);
                if ok {
                    return Ok((z, eps));
                }
                eps /= qi(2);
            }
        }
        Err(Error::SampleTooCoarse(format!("no grating radius fits the kernel of {id:?}")))
    }

    /// Makes sure the kernel of `id` holds at least two sample points.
    fn ensure_kernel(&mut self, c: &mut Cover, id: &str) -> Result<()> {
        if c.kernel_points(id)?.len() >= 2 {
            return Ok(());
        }
        let near = Neighbours::of(c, c.position(id)?);
        for (zi, c2) in c.kernel_by_depth(id, CANDIDATES)? {
            let z = c.sample().point(zi).clone();
            let mut h = match c2 {
                Some(c2) => sqrt_floor(&c2) / qi(2),
                None => c.sample().pitch().clone(),
            };
            for _ in 0..HALVINGS {
                if h.is_zero() {
                    break;
                }
                if self.try_add(c, &near, &z, &[(&h / qi(2), h.clone())]) && c.kernel_points(id)?.len() >= 2 {
                    return Ok(());
                }
                h /= qi(2);
            }
        }
        Err(Error::SampleTooCoarse(format!("kernel of {id:?} cannot be refined")))
    }
}

const CANDIDATES: usize = 8;
const HALVINGS: usize = 12;

/// Everything the construction produces besides the final cover.
#[derive(Clone, Debug)]
pub struct Theorem1Run {
    pub u0: Cover,
    pub u: Cover,
    pub w: Cover,
    pub w_prime: Cover,
    /// `W'` element to `U` element.
    pub j: SimplicialMap,
    pub capture_disk: usize,
    pub centers: Vec<Point>,
    pub gratings: usize,
    pub extensions: usize,
    pub added_points: usize,
}

pub fn run_theorem1(cfg: &Theorem1Config) -> Result<Theorem1Run> {
    cfg.validate()?;
    let scene = &cfg.scene;
    let r = cfg.ball_radius();
    let xs = scene.sample();
    let centers = ball_centers(&xs, &r);
    if let Some(x) = centers.iter().find(|x| !scene.disks[0].contains_ball(x, &r, false)) {
        return Err(Error::Precondition(format!("ball around {:?} leaves the outer disk", x.to_f64())));
    }
    let i0 = capture_index(scene, &centers, &r)?;

    // triangulation of the outer disk, stars below the ball radius
    let delta = r.clone();
    let tri = triangulate_disk(&scene.disks[0], &(&delta / qi(2)))?;
    let mut pts = xs.clone();
    let nx = pts.len();
    pts.extend(tri.vertices.iter().cloned());
    for [a, b] in tri.edges() {
        pts.push(tri.vertices[a].lerp(&tri.vertices[b], &q(1, 2)));
    }
    for t in &tri.triangles {
        let [a, b, c] = t.map(|i| &tri.vertices[i]);
        let x = (a.x() + b.x() + c.x()) / qi(3);
        let y = (a.y() + b.y() + c.y()) / qi(3);
        pts.push(Point::xy(x, y));
    }
    let mut seen = BTreeSet::new();
    pts.retain(|p| seen.insert(p.clone()));
    let ambient = PointSample::new(pts, scene.pitch.clone())?;
    let a: BTreeSet<usize> = (0..nx).collect();
    let stars = (0..tri.vertices.len())
        .map(|v| Ok((format!("v{v}"), star_region(&tri, v)?)))
        .collect::<Result<Vec<_>>>()?;
    let u0 = Cover::new(ambient, a.clone(), stars)?;
    let u = u0.canonize()?;

    // U restricted to X: elements meeting X, on the X sample only
    let x_sample = PointSample::new(xs.clone(), scene.pitch.clone())?;
    let meets: Vec<usize> = (0..u.len()).filter(|&k| u.meets_a(k)).collect();
    let mut ux = Cover::new(
        x_sample,
        (0..nx).collect(),
        meets.iter().map(|&k| (u.elements()[k].id.clone(), u.elements()[k].region.clone())).collect(),
    )?;
    let mut base: BTreeMap<String, String> = meets.iter().map(|&k| (u.elements()[k].id.clone(), u.elements()[k].id.clone())).collect();
    let mut owner: BTreeMap<String, String> = base.clone();
    let mut dens = Densifier {
        space: &scene.space,
        u: &u,
        u_boxes: Boxes::of(&u),
        u_patterns: u.memberships().iter().filter(|m| !m.is_empty()).cloned().collect(),
        added: 0,
    };

    let step = sqrt_floor(&tri.max_diam2) / qi(64);
    let mut gratings = 0;
    for k in (0..u.len()).filter(|&k| !u.meets_a(k)) {
        let e = &u.elements()[k];
        let Some(&yi) = e.realized().iter().next() else {
            continue;
        };
        let y = u.sample().point(yi).clone();
        let ry = scene.nearest_point_retraction(i0, &y)?;
        let x = centers
            .iter()
            .filter(|c| dist2(c, &ry) < &r * &r)
            .min_by(|p, q| dist2(p, &ry).cmp(&dist2(q, &ry)))
            .ok_or_else(|| Error::Precondition("retracted point is outside every ball".into()))?;
        let (path, probes) = fiber_path([&y, &ry, x], &step);
        let region = Region::union(vec![
            Region::Arc { points: path, open_start: false, open_end: false },
            Region::open_ball(x.clone(), r.clone()),
        ]);
        let chain = u.chain_to(&e.id, &region, u.target_a(), &probes)?.ok_or_else(|| Error::NoChain(e.id.clone()))?;
        let m = chain.len();
        let target = chain.last().expect("nonempty chain");
        let b = base[target].clone();
        let (z, epsilon) = dens.grating_center(&mut ux, &b, m)?;
        ux.grate_in_place(&GratingSpec { element_id: b.clone(), center: z, epsilon, m })?;
        owner.remove(&b);
        for piece in 1..=m {
            owner.insert(piece_id(&b, piece), chain[m - piece].clone());
        }
        base.insert(target.clone(), piece_id(&b, 1));
        gratings += 1;
    }
    // merge the pieces by their image
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (k, e) in ux.elements().iter().enumerate() {
        groups.entry(owner[&e.id].as_str()).or_default().push(k);
    }
    let w_groups: Vec<(String, Vec<usize>)> =
        u.ids().into_iter().filter_map(|id| Some((id.clone(), groups.remove(id.as_str())?))).collect();
    let w = ux.merged((0..ux.sample().len()).collect(), w_groups)?;
    // extensions until every simplex of nerve(U) is realized
    let target = nerve(&u, None);
    let have = nerve(&w, None).label_faces();
    let goal = target.label_faces();
    if let Some(f) = have.difference(&goal).next() {
        return Err(Error::NotSimplicial(format!("merged cover has the extra simplex {f:?}")));
    }
    let mut missing: Vec<Vec<String>> = goal.difference(&have).map(|f| f.iter().cloned().collect()).collect();
    missing.sort_by(|p, q| q.len().cmp(&p.len()).then_with(|| p.cmp(q)));
    let mut wp = w.clone();
    let mut extensions = 0;
    for face in missing {
        let mut common = wp.element(&face[0])?.realized().clone();
        for id in &face[1..] {
            let other = wp.element(id)?.realized();
            common.retain(|i| other.contains(i));
        }
        if !common.is_empty() {
            continue;
        }
        let mut ids = face.clone();
        let sizes = ids.iter().map(|id| wp.kernel_points(id).map(|s| s.len())).collect::<Result<Vec<_>>>()?;
        let best = (0..ids.len()).max_by_key(|&i| (sizes[i], std::cmp::Reverse(i))).expect("nonempty face");
        ids.swap(0, best);
        dens.ensure_kernel(&mut wp, &ids[0])?;
        wp.extend_in_place(&ids)?;
        extensions += 1;
    }
    let j = SimplicialMap { assignment: wp.ids().into_iter().map(|id| (id.clone(), id)).collect() };
    let added_points = dens.added;
    // W on the final sample, which also holds the points added during extension
    let mut w = w;
    let fresh = wp.sample().points()[w.sample().len()..].to_vec();
    w.add_points(fresh, true);
    Ok(Theorem1Run { u0, u, w, w_prime: wp, j, capture_disk: i0, centers, gratings, extensions, added_points })
}

/// Runs the construction and returns the final cover, the correspondence
/// `W' -> U` and the report.
pub fn theorem1_cover(cfg: &Theorem1Config) -> Result<(Cover, SimplicialMap, ScenarioReport)> {
    let run = run_theorem1(cfg)?;
    let report = theorem1_report(cfg, &run)?;
    Ok((run.w_prime, run.j, report))
}

pub fn theorem1_report(cfg: &Theorem1Config, run: &Theorem1Run) -> Result<ScenarioReport> {
    let mut sample = run.u.sample().clone();
    let support = sample.extend(run.w_prime.sample().points().iter().cloned());
    let a: BTreeSet<usize> = support.iter().copied().collect();
    let on_report = |c: &Cover| {
        Cover::new(sample.clone(), a.clone(), c.elements().iter().map(|e| (e.id.clone(), e.region.clone())).collect())
    };
    let stages = vec![
        StageRecord::from_cover("U0", &on_report(&run.u0)?, false),
        StageRecord::from_cover("U", &on_report(&run.u)?, false),
        StageRecord::on_support("W", &run.w, true, support.clone()),
        StageRecord::on_support("W'", &run.w_prime, true, support),
    ];
    let mut params = BTreeMap::new();
    params.insert("epsilon".to_string(), format_q(&cfg.epsilon));
    params.insert("K".to_string(), cfg.k.to_string());
    params.insert("epsilonPrime".to_string(), format_q(&cfg.ball_radius()));
    params.insert("captureDisk".to_string(), run.capture_disk.to_string());
    params.insert("ballCenters".to_string(), run.centers.len().to_string());
    params.insert("gratings".to_string(), run.gratings.to_string());
    params.insert("extensions".to_string(), run.extensions.to_string());
    params.insert("addedPoints".to_string(), run.added_points.to_string());
    let mut r = ScenarioReport {
        scenario: "theorem1".into(),
        params,
        sample,
        stages,
        stage_maps: Vec::new(),
        tower: None,
        eventual_image: None,
        correspondence: Some(run.j.clone()),
        verdicts: BTreeMap::new(),
    };
    r.verdicts = verdicts(&r)?;
    Ok(r)
}

fn param_q(r: &ScenarioReport, key: &str) -> Result<Q> {
    r.params
        .get(key)
        .ok_or_else(|| Error::Parse(format!("report parameter {key:?} missing")))
        .and_then(|v| parse_q(v))
}

fn mesh2(s: &StageRecord) -> Result<Q> {
    s.mesh
        .as_ref()
        .map(|m| m.diam2.clone())
        .ok_or_else(|| Error::Parse(format!("stage {} has no mesh", s.label)))
}

/// The three size bounds: `mesh(W') < epsilon`, `diam W <= 7 epsilon'`, `diam W' <= 16 epsilon'`.
pub fn verify_mesh_bounds(r: &ScenarioReport) -> Result<BTreeMap<String, bool>> {
    let eps = param_q(r, "epsilon")?;
    let k: i64 = r
        .params
        .get("K")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Parse("report parameter \"K\" missing or malformed".into()))?;
    let e1 = &eps / qi(k + 1);
    let w = mesh2(r.stage("W")?)?;
    let wp = mesh2(r.stage("W'")?)?;
    let mut v = BTreeMap::new();
    v.insert("meshBelowEpsilon".to_string(), wp < &eps * &eps);
    v.insert("wWithin7".to_string(), w <= qi(49) * &e1 * &e1);
    v.insert("wPrimeWithin16".to_string(), wp <= qi(256) * &e1 * &e1);
    Ok(v)
}

pub fn verdicts(r: &ScenarioReport) -> Result<BTreeMap<String, bool>> {
    let mut v = verify_mesh_bounds(r)?;
    let u0 = r.stage("U0")?;
    let u = r.stage("U")?;
    let wp = r.stage("W'")?;
    let j = r
        .correspondence
        .as_ref()
        .ok_or_else(|| Error::Parse("report has no correspondence".into()))?;
    let src: BTreeSet<&String> = j.assignment.keys().collect();
    let dst: BTreeSet<&String> = j.assignment.values().collect();
    let bijective = src == wp.nerve.vertices().iter().collect()
        && dst == u.nerve.vertices().iter().collect()
        && dst.len() == src.len();
    v.insert("jBijective".into(), bijective);
    v.insert("nerveIsomorphic".into(), bijective && is_isomorphism(j, &wp.nerve, &u.nerve));
    v.insert("reducedHomologyZero".into(), wp.acyclic);
    v.insert("uAcyclic".into(), u.acyclic);
    v.insert("canonizePreservesNerve".into(), u.nerve.label_faces() == u0.nerve.label_faces());
    v.insert("uCanonical".into(), u.rebuild(&r.sample)?.is_canonical());
    Ok(v)
}
