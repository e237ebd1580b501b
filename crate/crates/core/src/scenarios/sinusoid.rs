//! The sinusoid `y = sin(1/x)` over a window `[x_min, 1]` together with the
//! point `(0, -1)`, covered by open stars of dyadic subdivisions and a ball at that point.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use super::{example_tower, radius_between, ScenarioReport, StageRecord};
use crate::complexes::{induced_map, nerve};
use crate::covers::Cover;
use crate::error::{Error, Result};
use crate::geometry::{dist2, Point, PointSample, Region};
use crate::homology::{homology_all, FGAbelianGroup};
use crate::rational::{format_q, q, qi, sqrt_ceil, to_f64, Q};

pub const BALL_ID: &str = "P";

fn base_point() -> Point {
    Point::xy(qi(0), qi(-1))
}

/// Curve vertices at parameters `u = 1/x` spaced evenly, `y` rounded to `1e-9`.
#[derive(Clone, Debug)]
pub struct SinusoidModel {
    pub x_min: Q,
    pub stages: usize,
    /// Vertices of the finest subdivision, from `x = 1` towards `x_min`.
    pub vertices: Vec<Point>,
    /// Ball radius per stage, `0..=stages`.
    pub radii: Vec<Q>,
    pub sample: PointSample,
}

pub fn vertex_id(fine_index: usize) -> String {
    format!("v{fine_index}")
}

impl SinusoidModel {
    /// Stage `s < stages` subdivides the curve into `2^(s+3)` arcs; stage `stages`
    /// is the terminal one. Ball radii shrink from meeting three strands of the curve
    /// near `(0, -1)` to two, and the terminal radius meets one.
    pub fn new(x_min: &Q, stages: usize) -> Result<Self> {
        if !x_min.is_positive() || x_min >= &qi(1) {
            return Err(Error::Invalid("window needs 0 < x_min < 1".into()));
        }
        if stages == 0 || stages > 12 {
            return Err(Error::Invalid("stage count must be in 1..=12".into()));
        }
        let segs = 1usize << (stages + 3);
        let u_max = qi(1) / x_min;
        let du = (&u_max - qi(1)) / qi(segs as i64);
        let vertices: Vec<Point> = (0..=segs)
            .map(|k| {
                let u = qi(1) + &du * qi(k as i64);
                let y = (to_f64(&u).sin() * 1e9).round() as i64;
                Point::xy(qi(1) / u, q(y, 1_000_000_000))
            })
            .collect();
        let mut curve = Vec::with_capacity(2 * segs + 1);
        for w in vertices.windows(2) {
            curve.push(w[0].clone());
            curve.push(w[0].lerp(&w[1], &q(1, 2)));
        }
        curve.push(vertices[segs].clone());

        // local minima of the distance to the base point, one per strand
        let p = base_point();
        let d: Vec<Q> = curve.iter().map(|c| dist2(c, &p)).collect();
        let mut strands: Vec<Q> = (0..d.len())
            .filter(|&i| (i == 0 || d[i] < d[i - 1]) && (i + 1 == d.len() || d[i] <= d[i + 1]))
            .map(|i| d[i].clone())
            .collect();
        strands.sort();
        if strands.len() < 3 {
            return Err(Error::Invalid("window shows fewer than three strands near (0, -1)".into()));
        }
        let lo = radius_between(&strands[1], &strands[2])?;
        let mut top = &strands[2] * q(9, 4);
        if let Some(s3) = strands.get(3) {
            top = top.min(s3.clone());
        }
        let hi = radius_between(&strands[2], &top)?;
        let mut radii: Vec<Q> = (0..stages)
            .map(|s| {
                if stages == 1 {
                    hi.clone()
                } else {
                    &hi - (&hi - &lo) * q(s as i64, stages as i64 - 1)
                }
            })
            .collect();
        radii.push(radius_between(&strands[0], &strands[1])?);

        let max_edge2 = vertices
            .windows(2)
            .map(|w| dist2(&w[0], &w[1]))
            .max()
            .unwrap_or_else(Q::zero);
        let mut pts = curve;
        pts.push(p);
        let sample = PointSample::new(pts, sqrt_ceil(&max_edge2) / qi(2))?;
        Ok(SinusoidModel { x_min: x_min.clone(), stages, vertices, radii, sample })
    }

    /// Fine-index spacing of stage `s`.
    pub fn step(&self, s: usize) -> usize {
        1 << (self.stages - s.min(self.stages))
    }

    pub fn stage_cover(&self, s: usize) -> Result<Cover> {
        if s > self.stages {
            return Err(Error::Invalid(format!("stage {s} beyond {}", self.stages)));
        }
        let step = self.step(s);
        let last = self.vertices.len() - 1;
        let mut els = Vec::new();
        for i in (0..=last).step_by(step) {
            let lo = i.saturating_sub(step);
            let hi = (i + step).min(last);
            let region = Region::Arc {
                points: self.vertices[lo..=hi].to_vec(),
                open_start: i > 0,
                open_end: i < last,
            };
            els.push((vertex_id(i), region));
        }
        els.push((BALL_ID.to_string(), Region::open_ball(base_point(), self.radii[s].clone())));
        let all = (0..self.sample.len()).collect();
        Cover::new(self.sample.clone(), all, els)
    }

    /// Stage `s + 1` to stage `s`: shared vertices fixed, new vertices to the
    /// preceding shared one, ball to ball.
    pub fn bonding_assignment(&self, s: usize) -> BTreeMap<String, String> {
        let fine = self.step(s + 1);
        let coarse = self.step(s);
        let mut m: BTreeMap<String, String> = (0..self.vertices.len())
            .step_by(fine)
            .map(|i| (vertex_id(i), vertex_id(i - i % coarse)))
            .collect();
        m.insert(BALL_ID.into(), BALL_ID.into());
        m
    }
}

/// Stage `s` cover and the `H_1` table of its nerve.
pub fn build_sinusoid_example(x_min: &Q, stages: usize, s: usize) -> Result<(Cover, Vec<FGAbelianGroup>)> {
    let m = SinusoidModel::new(x_min, stages)?;
    let c = m.stage_cover(s)?;
    let h = homology_all(&nerve(&c, None));
    Ok((c, h))
}

pub fn sinusoid_report(x_min: &Q, stages: usize) -> Result<ScenarioReport> {
    let m = SinusoidModel::new(x_min, stages)?;
    let covers = (0..=stages).map(|s| m.stage_cover(s)).collect::<Result<Vec<_>>>()?;
    let records: Vec<StageRecord> = covers
        .iter()
        .enumerate()
        .map(|(s, c)| StageRecord::from_cover(&format!("stage{s}"), c, false))
        .collect();
    let mut maps = Vec::new();
    for (s, w) in covers.windows(2).enumerate() {
        maps.push(induced_map(&w[1], &w[0], &m.bonding_assignment(s), None)?);
    }
    let (tower, image) = example_tower(&records, &maps)?;
    let mut params = BTreeMap::new();
    params.insert("xMin".to_string(), format_q(x_min));
    params.insert("stages".to_string(), stages.to_string());
    for (s, r) in m.radii.iter().enumerate() {
        params.insert(format!("ballRadius{s}"), format_q(r));
    }
    let mut r = ScenarioReport {
        scenario: "sinusoid".into(),
        params,
        sample: m.sample.clone(),
        stages: records,
        stage_maps: maps,
        tower: Some(tower),
        eventual_image: Some(image),
        correspondence: None,
        verdicts: BTreeMap::new(),
    };
    r.verdicts = verdicts(&r)?;
    Ok(r)
}

pub fn verdicts(r: &ScenarioReport) -> Result<BTreeMap<String, bool>> {
    let stages: usize = r
        .params
        .get("stages")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Parse("report parameter \"stages\" missing or malformed".into()))?;
    let (body, terminal) = r.stages.split_at(stages.min(r.stages.len()));
    let mut v = BTreeMap::new();
    v.insert("stageCount".into(), r.stages.len() == stages + 1);
    v.insert("h1Positive".into(), body.iter().all(|s| s.h1_rank() >= 1));
    v.insert("nonacyclic".into(), body.iter().all(|s| !s.acyclic));
    v.insert("terminalAcyclic".into(), terminal.iter().all(|s| s.acyclic));
    v.insert("connected".into(), r.stages.iter().all(|s| s.homology.first().is_some_and(|h| h.rank == 1)));
    v.insert("torsionFree".into(), r.stages.iter().all(|s| s.homology.iter().all(|h| h.torsion.is_empty())));
    if let Some(t) = &r.tower {
        v.insert("injective".into(), t.injective_maps().iter().all(|&b| b));
    }
    if let Some(e) = &r.eventual_image {
        v.insert("eventualImageZero".into(), e.is_zero());
    }
    Ok(v)
}
