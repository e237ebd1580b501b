//! Truncated inverse sequences of free abelian groups and their eventual images.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::complexes::{SimplicialComplex, SimplicialMap};
use crate::error::{Error, Result};
use crate::homology::lattice::{to_sparse, EchelonBasis, SparseCol};
use crate::homology::{
    induced_matrix, is_acyclic, smith_normal_form, FGAbelianGroup, HomologyPresentation, IntegerMatrix,
};

/// `maps[k]` goes from `groups[k + 1]` to `groups[k]`, acting on free coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTower", into = "RawTower")]
pub struct Tower {
    groups: Vec<FGAbelianGroup>,
    maps: Vec<IntegerMatrix>,
}

#[derive(Serialize, Deserialize)]
struct RawTower {
    groups: Vec<FGAbelianGroup>,
    maps: Vec<IntegerMatrix>,
}

impl TryFrom<RawTower> for Tower {
    type Error = Error;
    fn try_from(r: RawTower) -> Result<Self> {
        Tower::new(r.groups, r.maps)
    }
}

impl From<Tower> for RawTower {
    fn from(t: Tower) -> Self {
        RawTower { groups: t.groups, maps: t.maps }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EventualImage {
    pub stage: usize,
    pub depth: usize,
    /// Basis of the image lattice from the deepest stage, as columns.
    pub basis: IntegerMatrix,
    pub rank: usize,
    /// Rank of the image of each deeper stage `stage..=depth`.
    pub image_ranks: Vec<usize>,
    /// First deeper stage from which the image no longer changes; `None`
    /// when it still shrinks at the last stage of the truncation.
    pub stabilized_at: Option<usize>,
}

impl EventualImage {
    pub fn is_zero(&self) -> bool {
        self.rank == 0
    }
}

fn matrix_rank(m: &IntegerMatrix) -> usize {
    if m.rows == 0 || m.cols == 0 {
        return 0;
    }
    smith_normal_form(m).rank()
}

impl Tower {
    pub fn new(groups: Vec<FGAbelianGroup>, maps: Vec<IntegerMatrix>) -> Result<Self> {
        if maps.len() + 1 != groups.len().max(1) {
            return Err(Error::Invalid(format!("{} groups need {} maps", groups.len(), groups.len().saturating_sub(1))));
        }
        for (k, m) in maps.iter().enumerate() {
            if m.rows != groups[k].rank || m.cols != groups[k + 1].rank {
                return Err(Error::Invalid(format!(
                    "map {k} is {}x{}, expected {}x{}",
                    m.rows,
                    m.cols,
                    groups[k].rank,
                    groups[k + 1].rank
                )));
            }
        }
        Ok(Tower { groups, maps })
    }

    pub fn groups(&self) -> &[FGAbelianGroup] {
        &self.groups
    }

    pub fn maps(&self) -> &[IntegerMatrix] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// The bonding map from stage `j` down to stage `k <= j`.
    pub fn composite(&self, k: usize, j: usize) -> Result<IntegerMatrix> {
        if j >= self.groups.len() {
            return Err(Error::OutOfRange { index: j, len: self.groups.len() });
        }
        if k > j {
            return Err(Error::Invalid("composite needs k <= j".into()));
        }
        let mut m = IntegerMatrix::identity(self.groups[k].rank);
        for t in k..j {
            m = m.mul(&self.maps[t]);
        }
        Ok(m)
    }

    pub fn injective_maps(&self) -> Vec<bool> {
        self.maps.iter().map(|m| matrix_rank(m) == m.cols).collect()
    }

    pub fn eventual_image(&self, k: usize) -> Result<EventualImage> {
        let n = self.groups.len();
        if k >= n {
            return Err(Error::OutOfRange { index: k, len: n });
        }
        let rows = self.groups[k].rank;
        let mut lattices: Vec<EchelonBasis> = Vec::new();
        let mut m = IntegerMatrix::identity(rows);
        for j in k..n {
            if j > k {
                m = m.mul(&self.maps[j - 1]);
            }
            let cols: Vec<SparseCol> = (0..m.cols).map(|c| to_sparse(&m.column(c))).collect();
            lattices.push(EchelonBasis::new(cols));
        }
        let last = lattices.last().expect("at least one stage").clone();
        let mut first_equal = lattices.len() - 1;
        while first_equal > 0 && lattices[first_equal - 1] == last {
            first_equal -= 1;
        }
        let depth = n - 1;
        let stabilized_at = if last.rank() == 0 || k + first_equal < depth {
            Some(k + first_equal)
        } else {
            None
        };
        let basis_cols: Vec<Vec<num_bigint::BigInt>> = last
            .cols
            .iter()
            .map(|c| {
                let mut v = vec![num_bigint::BigInt::zero(); rows];
                for (&i, x) in c {
                    v[i] = x.clone();
                }
                v
            })
            .collect();
        Ok(EventualImage {
            stage: k,
            depth,
            basis: IntegerMatrix::from_columns(rows, &basis_cols),
            rank: last.rank(),
            image_ranks: lattices.iter().map(EchelonBasis::rank).collect(),
            stabilized_at,
        })
    }
}

/// Applies `H_d` to a sequence of nerves; `maps[k]` goes from `complexes[k + 1]` to `complexes[k]`.
pub fn tower_from_nerves(complexes: &[SimplicialComplex], maps: &[SimplicialMap], d: usize) -> Result<Tower> {
    if maps.len() + 1 != complexes.len().max(1) {
        return Err(Error::Invalid("need one map between each pair of consecutive stages".into()));
    }
    for (k, f) in maps.iter().enumerate() {
        f.validate(&complexes[k + 1], &complexes[k])
            .map_err(|e| Error::Invalid(format!("stage map {k} does not compose: {e}")))?;
    }
    let pres: Vec<HomologyPresentation> = complexes
        .iter()
        .map(|c| HomologyPresentation::new(c, d))
        .collect::<Result<_>>()?;
    let mats = maps
        .iter()
        .enumerate()
        .map(|(k, f)| induced_matrix(&complexes[k + 1], &pres[k + 1], &complexes[k], &pres[k], f))
        .collect::<Result<Vec<_>>>()?;
    let groups = pres.into_iter().map(|p| FGAbelianGroup::free(p.group.rank)).collect();
    Tower::new(groups, mats)
}

pub fn all_stages_nonacyclic(complexes: &[SimplicialComplex]) -> bool {
    complexes.iter().all(|c| !is_acyclic(c))
}
