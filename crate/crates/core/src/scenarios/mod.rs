//! End-to-end constructions and their JSON reports.

pub mod bouquet;
pub mod sinusoid;
pub mod theorem1;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::complexes::{nerve, SimplicialComplex, SimplicialMap};
use crate::covers::{Cover, MeshReport};
use crate::error::{Error, Result};
use crate::geometry::{PointSample, Region};
use crate::rational::{qi, simple_between, sqrt_ceil, sqrt_floor, Q};
use crate::homology::{homology_all, is_acyclic, FGAbelianGroup};
use crate::towers::{tower_from_nerves, EventualImage, Tower};

pub use bouquet::{build_bouquet_example, BouquetModel};
pub use sinusoid::{build_sinusoid_example, SinusoidModel};
pub use theorem1::{theorem1_cover, verify_mesh_bounds, Theorem1Config};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementRecord {
    pub id: String,
    pub region: Region,
}

/// One cover in a scenario, with everything derived from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StageRecord {
    pub label: String,
    pub target_a: Vec<usize>,
    pub elements: Vec<ElementRecord>,
    pub nerve: SimplicialComplex,
    /// Unreduced `H_0, H_1, ...` of the nerve.
    pub homology: Vec<FGAbelianGroup>,
    pub acyclic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<MeshReport>,
    /// Report sample indices the stage lives on, in order; the whole sample when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<usize>>,
}

impl StageRecord {
    pub fn from_cover(label: &str, c: &Cover, with_mesh: bool) -> Self {
        let k = nerve(c, None);
        StageRecord {
            label: label.to_string(),
            target_a: c.target_a().iter().copied().collect(),
            elements: c
                .elements()
                .iter()
                .map(|e| ElementRecord { id: e.id.clone(), region: e.region.clone() })
                .collect(),
            homology: homology_all(&k),
            acyclic: is_acyclic(&k),
            nerve: k,
            mesh: with_mesh.then(|| c.mesh()),
            support: None,
        }
    }

    /// Record of a cover whose sample point `i` is report sample point `support[i]`.
    pub fn on_support(label: &str, c: &Cover, with_mesh: bool, support: Vec<usize>) -> Self {
        let mut r = Self::from_cover(label, c, with_mesh);
        r.target_a = r.target_a.iter().map(|&i| support[i]).collect();
        r.support = Some(support);
        r
    }

    pub fn rebuild(&self, sample: &PointSample) -> Result<Cover> {
        let els = self.elements.iter().map(|e| (e.id.clone(), e.region.clone())).collect();
        let Some(support) = &self.support else {
            return Cover::new(sample.clone(), self.target_a.iter().copied().collect(), els);
        };
        let mut local = std::collections::BTreeMap::new();
        let mut pts = Vec::with_capacity(support.len());
        for (k, &i) in support.iter().enumerate() {
            if i >= sample.len() {
                return Err(Error::OutOfRange { index: i, len: sample.len() });
            }
            local.insert(i, k);
            pts.push(sample.point(i).clone());
        }
        let target = self
            .target_a
            .iter()
            .map(|i| local.get(i).copied().ok_or_else(|| Error::Invalid(format!("target point {i} outside the support"))))
            .collect::<Result<_>>()?;
        Cover::new(PointSample::new(pts, sample.pitch().clone())?, target, els)
    }

    pub fn h1_rank(&self) -> usize {
        self.homology.get(1).map_or(0, |h| h.rank)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScenarioReport {
    pub scenario: String,
    pub params: BTreeMap<String, String>,
    pub sample: PointSample,
    pub stages: Vec<StageRecord>,
    /// `stageMaps[k]` goes from stage `k + 1` to stage `k`.
    #[serde(default)]
    pub stage_maps: Vec<SimplicialMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tower: Option<Tower>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eventual_image: Option<EventualImage>,
    /// Vertex correspondence between two stages, when the scenario has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correspondence: Option<SimplicialMap>,
    pub verdicts: BTreeMap<String, bool>,
}

impl ScenarioReport {
    pub fn stage(&self, label: &str) -> Result<&StageRecord> {
        self.stages
            .iter()
            .find(|s| s.label == label)
            .ok_or_else(|| Error::UnknownId(label.to_string()))
    }

    pub fn all_verified(&self) -> bool {
        !self.verdicts.is_empty() && self.verdicts.values().all(|&v| v)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// H_1 tower of a sequence of example stages and its eventual image at stage 0.
pub fn example_tower(stages: &[StageRecord], maps: &[SimplicialMap]) -> Result<(Tower, EventualImage)> {
    let nerves: Vec<SimplicialComplex> = stages.iter().map(|s| s.nerve.clone()).collect();
    let t = tower_from_nerves(&nerves, maps, 1)?;
    let e = t.eventual_image(0)?;
    Ok((t, e))
}

/// Outcome of re-checking a report.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Verification {
    pub failures: Vec<String>,
}

impl Verification {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Rebuilds every stage from its serialized elements, recomputes nerves,
/// homology, mesh, tower and verdicts, and compares with what the report states.
pub fn verify_report(r: &ScenarioReport) -> Result<Verification> {
    let mut v = Verification::default();
    let mut rebuilt = Vec::new();
    for s in &r.stages {
        let c = s.rebuild(&r.sample)?;
        let mut fresh = StageRecord::from_cover(&s.label, &c, s.mesh.is_some());
        fresh.target_a = s.target_a.clone();
        fresh.support = s.support.clone();
        if fresh.nerve != s.nerve {
            v.failures.push(format!("{}: nerve differs", s.label));
        }
        if fresh.homology != s.homology || fresh.acyclic != s.acyclic {
            v.failures.push(format!("{}: homology differs", s.label));
        }
        if fresh.mesh != s.mesh {
            v.failures.push(format!("{}: mesh differs", s.label));
        }
        rebuilt.push(fresh);
    }
    if r.tower.is_some() || r.eventual_image.is_some() {
        match example_tower(&rebuilt, &r.stage_maps) {
            Ok((t, e)) => {
                if r.tower.as_ref() != Some(&t) {
                    v.failures.push("tower differs".into());
                }
                if r.eventual_image.as_ref() != Some(&e) {
                    v.failures.push("eventual image differs".into());
                }
            }
            Err(e) => v.failures.push(format!("tower: {e}")),
        }
    }
    let verdicts = match r.scenario.as_str() {
        "bouquet" => bouquet::verdicts(r)?,
        "sinusoid" => sinusoid::verdicts(r)?,
        "theorem1" => theorem1::verdicts(r)?,
        other => return Err(Error::Invalid(format!("unknown scenario {other:?}"))),
    };
    if verdicts != r.verdicts {
        v.failures.push("recorded verdicts differ from recomputed ones".into());
    }
    for (k, &ok) in &verdicts {
        if !ok {
            v.failures.push(format!("verdict {k} fails"));
        }
    }
    if verdicts.is_empty() {
        v.failures.push("no verdicts".into());
    }
    Ok(v)
}

/// A short radius `r` with `lo2 < r^2 < hi2`, away from both ends.
pub(crate) fn radius_between(lo2: &Q, hi2: &Q) -> Result<Q> {
    if lo2 >= hi2 {
        return Err(Error::Invalid("empty radius window".into()));
    }
    let (lo, hi) = (sqrt_ceil(lo2), sqrt_floor(hi2));
    if lo >= hi {
        return Err(Error::Invalid("radius window below arithmetic resolution".into()));
    }
    let gap = (&hi - &lo) / qi(4);
    let r = simple_between(&(&lo + &gap), &(&hi - &gap));
    debug_assert!(&(&r * &r) > lo2 && &(&r * &r) < hi2);
    Ok(r)
}
