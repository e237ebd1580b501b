//! Truncated bouquet of tangent circles with small arcs removed next to the base point.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use super::{example_tower, radius_between, ScenarioReport, StageRecord};
use crate::complexes::induced_map;
use crate::covers::Cover;
use crate::error::{Error, Result};
use crate::geometry::{dist2, Point, PointSample, Region};
use crate::rational::{format_q, q, qi, sqrt_ceil, Q};

/// `A + R (2t, 2t^2) / (1 + t^2)`: the circle through `A = (0, 0)` with centre `(0, R)`.
fn circle_point(r: &Q, t: &Q) -> Point {
    let d = qi(1) + t * t;
    Point::xy(qi(2) * r * t / &d, qi(2) * r * t * t / d)
}

fn origin() -> Point {
    Point::xy(qi(0), qi(0))
}

pub const BALL_ID: &str = "A";

/// Polylines of the cut circles together with the shared sample.
#[derive(Clone, Debug)]
pub struct BouquetModel {
    pub circles: usize,
    /// Vertices of each cut circle, from the cut end `A_i` around to `A`.
    pub paths: Vec<Vec<Point>>,
    /// Squared distance from `A` to the cut end of each circle.
    pub cut2: Vec<Q>,
    pub sample: PointSample,
}

pub fn vertex_id(circle: usize, v: usize) -> String {
    format!("c{circle}v{v}")
}

impl BouquetModel {
    /// `n` circles of radii `1 + i/2`; circle `i` loses the arc between
    /// parameters `0` and `1 / 2^(i+2)`.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("bouquet needs at least one circle".into()));
        }
        let mut paths = Vec::new();
        let mut cut2 = Vec::new();
        let mut pts: BTreeSet<Point> = BTreeSet::new();
        pts.insert(origin());
        for i in 1..=n {
            let r = qi(1) + q(i as i64, 2);
            let ti = q(1, 1 << (i + 2));
            let mut ts = Vec::new();
            let mut t = ti.clone();
            while t < qi(1) {
                ts.push(t.clone());
                t *= qi(2);
            }
            for k in 0..4 {
                ts.push(qi(1 << k));
            }
            let mut path: Vec<Point> = ts.iter().map(|t| circle_point(&r, t)).collect();
            path.push(Point::xy(qi(0), qi(2) * &r));
            path.extend(ts.iter().rev().map(|t| circle_point(&r, &-t)));
            path.push(origin());
            cut2.push(dist2(&path[0], &origin()));
            for w in path.windows(2) {
                pts.insert(w[0].clone());
                pts.insert(w[0].lerp(&w[1], &q(1, 2)));
            }
            // points accumulating at A along the last edge
            let last = &path[path.len() - 2];
            for j in 1..=16 {
                pts.insert(origin().lerp(last, &q(1, 1 << j)));
            }
            paths.push(path);
        }
        let max_edge2 = paths
            .iter()
            .flat_map(|p| p.windows(2).map(|w| dist2(&w[0], &w[1])))
            .max()
            .unwrap_or_else(Q::zero);
        let pitch = sqrt_ceil(&max_edge2) / qi(2);
        let sample = PointSample::new(pts.into_iter().collect(), pitch)?;
        Ok(BouquetModel { circles: n, paths, cut2, sample })
    }

    /// Radius of the ball at `A` for stage `n`: it reaches the cut ends of
    /// circles `n+1..` but not those of circles `1..=n`.
    pub fn ball_radius(&self, n: usize) -> Result<Q> {
        if n > self.circles {
            return Err(Error::Invalid(format!("stage {n} beyond the {} circles", self.circles)));
        }
        let hi2 = if n == 0 { &self.cut2[0] * qi(4) } else { self.cut2[n - 1].clone() };
        let lo2 = if n < self.circles { self.cut2[n].clone() } else { &self.cut2[n - 1] / qi(16) };
        radius_between(&lo2, &hi2)
    }

    /// Open stars of the path vertices (all but `A`) plus the ball at `A`.
    pub fn stage_cover(&self, n: usize) -> Result<Cover> {
        let radius = self.ball_radius(n)?;
        let mut els = Vec::new();
        for (c, path) in self.paths.iter().enumerate() {
            for v in 0..path.len() - 1 {
                let mut cells = vec![vec![path[v].clone(), path[v + 1].clone()]];
                if v > 0 {
                    cells.push(vec![path[v].clone(), path[v - 1].clone()]);
                }
                els.push((vertex_id(c + 1, v), Region::Star { vertex: path[v].clone(), cells }));
            }
        }
        els.push((BALL_ID.to_string(), Region::open_ball(origin(), radius)));
        let all = (0..self.sample.len()).collect();
        Cover::new(self.sample.clone(), all, els)
    }
}

/// Stage `n` cover of the `circles`-circle model and its expected first Betti number.
/// Stage `circles` is the terminal stage where every circle is cut open.
pub fn build_bouquet_example(circles: usize, n: usize) -> Result<(Cover, usize)> {
    if n > circles {
        return Err(Error::Invalid(format!("stage {n} outside 0..={circles}")));
    }
    let m = BouquetModel::new(circles)?;
    Ok((m.stage_cover(n)?, circles - n))
}

/// Report over stages `0..=last`; `last == circles` adds the terminal stage
/// where the ball no longer reaches any cut end and the nerve is a tree.
pub fn bouquet_report(circles: usize, last: usize) -> Result<ScenarioReport> {
    if last > circles {
        return Err(Error::Invalid(format!("last stage {last} beyond {circles}")));
    }
    let m = BouquetModel::new(circles)?;
    let covers = (0..=last).map(|n| m.stage_cover(n)).collect::<Result<Vec<_>>>()?;
    let stages: Vec<StageRecord> = covers
        .iter()
        .enumerate()
        .map(|(n, c)| StageRecord::from_cover(&format!("stage{n}"), c, false))
        .collect();
    let mut maps = Vec::new();
    for w in covers.windows(2) {
        let same = w[1].ids().into_iter().map(|id| (id.clone(), id)).collect();
        maps.push(induced_map(&w[1], &w[0], &same, None)?);
    }
    let (tower, image) = example_tower(&stages, &maps)?;
    let mut params = BTreeMap::new();
    params.insert("circles".to_string(), circles.to_string());
    params.insert("lastStage".to_string(), last.to_string());
    for n in 0..=last {
        params.insert(format!("ballRadius{n}"), format_q(&m.ball_radius(n)?));
    }
    let mut r = ScenarioReport {
        scenario: "bouquet".into(),
        params,
        sample: m.sample.clone(),
        stages,
        stage_maps: maps,
        tower: Some(tower),
        eventual_image: Some(image),
        correspondence: None,
        verdicts: BTreeMap::new(),
    };
    r.verdicts = verdicts(&r)?;
    Ok(r)
}

fn param(r: &ScenarioReport, key: &str) -> Result<usize> {
    r.params
        .get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Parse(format!("report parameter {key:?} missing or malformed")))
}

pub fn verdicts(r: &ScenarioReport) -> Result<BTreeMap<String, bool>> {
    let circles = param(r, "circles")?;
    let last = param(r, "lastStage")?;
    let mut v = BTreeMap::new();
    v.insert("stageCount".into(), r.stages.len() == last + 1);
    v.insert(
        "h1Ranks".into(),
        r.stages
            .iter()
            .enumerate()
            .all(|(n, s)| s.h1_rank() == circles - n && s.homology.iter().all(|h| h.torsion.is_empty())),
    );
    v.insert("connected".into(), r.stages.iter().all(|s| s.homology.first().is_some_and(|h| h.rank == 1)));
    v.insert("nonacyclic".into(), r.stages.iter().take(circles).all(|s| !s.acyclic));
    if let Some(t) = &r.tower {
        v.insert("injective".into(), t.injective_maps().iter().all(|&b| b));
    }
    if let Some(e) = &r.eventual_image {
        let key = if last == circles { "eventualImageZero" } else { "eventualImageRank" };
        v.insert(key.into(), e.rank == circles - last);
    }
    Ok(v)
}
