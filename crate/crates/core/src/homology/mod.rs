//! Integer simplicial homology through Smith normal forms.

pub mod lattice;
pub mod matrix;

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::complexes::{SimplicialComplex, SimplicialMap};
use crate::error::{Error, Result};
use lattice::{axpy, EchelonBasis, SparseCol};
pub use matrix::{invariant_factors, smith_normal_form, IntegerMatrix, Smith, SparseMatrix};

/// `Z^rank` plus cyclic torsion `Z/d1 + Z/d2 + ...` with `d1 | d2 | ...`, all `>= 2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FGAbelianGroup {
    pub rank: usize,
    #[serde(with = "matrix::serde_int_vec")]
    pub torsion: Vec<BigInt>,
}

impl FGAbelianGroup {
    pub fn free(rank: usize) -> Self {
        FGAbelianGroup { rank, torsion: Vec::new() }
    }

    pub fn new(rank: usize, torsion: Vec<BigInt>) -> Result<Self> {
        if torsion.iter().any(|d| d < &BigInt::from(2)) {
            return Err(Error::Invalid("torsion coefficients must be at least 2".into()));
        }
        if torsion.windows(2).any(|w| !num_integer::Integer::is_multiple_of(&w[1], &w[0])) {
            return Err(Error::Invalid("torsion coefficients must divide each other".into()));
        }
        Ok(FGAbelianGroup { rank, torsion })
    }

    pub fn is_trivial(&self) -> bool {
        self.rank == 0 && self.torsion.is_empty()
    }

    fn from_factors(generators: usize, factors: &[BigInt]) -> Self {
        FGAbelianGroup {
            rank: generators - factors.len(),
            torsion: factors.iter().filter(|d| !d.is_one()).cloned().collect(),
        }
    }
}

impl fmt::Display for FGAbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.rank > 0 {
            parts.push(if self.rank == 1 { "Z".to_string() } else { format!("Z^{}", self.rank) });
        }
        parts.extend(self.torsion.iter().map(|d| format!("Z/{d}")));
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// Matrix of the boundary map from `d`-faces to `(d-1)`-faces, both in
/// lexicographic order; `[v0..vd]` maps to `sum_i (-1)^i [.. v_i omitted ..]`.
pub fn boundary_matrix(k: &SimplicialComplex, d: usize) -> SparseMatrix {
    let cols = k.faces_of_dim(d);
    if d == 0 {
        return SparseMatrix::new(0, cols.len());
    }
    let rows = k.faces_of_dim(d - 1);
    let index: BTreeMap<&[usize], usize> = rows.iter().enumerate().map(|(i, f)| (f.as_slice(), i)).collect();
    let mut m = SparseMatrix::new(rows.len(), cols.len());
    for (j, f) in cols.iter().enumerate() {
        for i in 0..f.len() {
            let mut g = (*f).clone();
            g.remove(i);
            let sign = if i % 2 == 0 { BigInt::one() } else { -BigInt::one() };
            m.set(index[g.as_slice()], j, sign);
        }
    }
    m
}

/// Largest degree whose homology the stored faces determine.
fn reliable_top(k: &SimplicialComplex) -> i64 {
    let dim = k.dimension();
    match k.dim_cap() {
        Some(c) if dim >= c as i64 => c as i64 - 1,
        _ => dim,
    }
}

/// `H_d` for every `d` from 0 to the top reliable degree.
pub fn homology_all(k: &SimplicialComplex) -> Vec<FGAbelianGroup> {
    let top = reliable_top(k);
    if top < 0 {
        return Vec::new();
    }
    let top = top as usize;
    let factors: Vec<Vec<BigInt>> = (0..=top + 1).map(|d| invariant_factors(&boundary_matrix(k, d))).collect();
    (0..=top)
        .map(|d| {
            let n = k.faces_of_dim(d).len();
            FGAbelianGroup::from_factors(n - factors[d].len(), &factors[d + 1])
        })
        .collect()
}

pub fn homology(k: &SimplicialComplex, d: usize) -> FGAbelianGroup {
    let n = k.faces_of_dim(d).len();
    let r = invariant_factors(&boundary_matrix(k, d)).len();
    FGAbelianGroup::from_factors(n - r, &invariant_factors(&boundary_matrix(k, d + 1)))
}

pub fn reduced_homology(k: &SimplicialComplex, d: usize) -> FGAbelianGroup {
    let mut h = homology(k, d);
    if d == 0 {
        h.rank = h.rank.saturating_sub(1);
    }
    h
}

/// Nonempty with vanishing reduced homology in every degree the faces determine.
pub fn is_acyclic(k: &SimplicialComplex) -> bool {
    if k.vertices().is_empty() {
        return false;
    }
    homology_all(k).iter().enumerate().all(|(d, h)| {
        if d == 0 {
            h.rank == 1 && h.torsion.is_empty()
        } else {
            h.is_trivial()
        }
    })
}

/// A chosen basis of `H_d`: cycles in echelon form, and the Smith form of the
/// boundaries written in cycle coordinates. The free generators are the
/// cycle classes of the trailing Smith coordinates.
#[derive(Clone, Debug)]
pub struct HomologyPresentation {
    pub dim: usize,
    pub group: FGAbelianGroup,
    face_index: BTreeMap<Vec<usize>, usize>,
    cycles: EchelonBasis,
    smith: Smith,
    boundary_rank: usize,
}

impl HomologyPresentation {
    pub fn new(k: &SimplicialComplex, d: usize) -> Result<Self> {
        let faces = k.faces_of_dim(d);
        let face_index: BTreeMap<Vec<usize>, usize> =
            faces.iter().enumerate().map(|(i, f)| ((*f).clone(), i)).collect();
        let z = if d == 0 {
            (0..faces.len()).map(|i| SparseCol::from([(i, BigInt::one())])).collect()
        } else {
            lattice::kernel(&boundary_matrix(k, d).columns())
        };
        let cycles = EchelonBasis::new(z);
        let n = cycles.rank();
        let bcols = boundary_matrix(k, d + 1).columns();
        let mut rel = IntegerMatrix::zeros(n, bcols.len());
        for (j, b) in bcols.iter().enumerate() {
            let x = cycles
                .solve(b)
                .ok_or_else(|| Error::Invalid("boundary is not a cycle".into()))?;
            for i in 0..n {
                rel.data[i][j] = x[i].clone();
            }
        }
        let smith = smith_normal_form(&rel);
        let diag = smith.diagonal();
        let group = FGAbelianGroup::from_factors(n, &diag);
        Ok(HomologyPresentation { dim: d, group, face_index, cycles, boundary_rank: diag.len(), smith })
    }

    pub fn face_index(&self, f: &[usize]) -> Option<usize> {
        self.face_index.get(f).copied()
    }

    /// Free-part coordinates of the class of a `d`-cycle.
    pub fn class_of(&self, cycle: &SparseCol) -> Result<Vec<BigInt>> {
        let x = self
            .cycles
            .solve(cycle)
            .ok_or_else(|| Error::Invalid("chain is not a cycle".into()))?;
        let n = x.len();
        Ok((self.boundary_rank..n)
            .map(|i| (0..n).fold(BigInt::zero(), |acc, k| acc + &self.smith.u.data[i][k] * &x[k]))
            .collect())
    }

    /// A cycle representing free generator `j`.
    pub fn generator(&self, j: usize) -> SparseCol {
        let col = self.boundary_rank + j;
        let mut out = SparseCol::new();
        for (k, z) in self.cycles.cols.iter().enumerate() {
            axpy(&mut out, &self.smith.u_inv.data[k][col], z);
        }
        out
    }
}

fn permutation_sign(v: &[usize]) -> i64 {
    let mut inversions = 0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if v[i] > v[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Image of a `d`-chain under the chain map of a simplicial map.
pub fn push_chain(
    src: &SimplicialComplex,
    src_p: &HomologyPresentation,
    dst: &SimplicialComplex,
    dst_p: &HomologyPresentation,
    f: &SimplicialMap,
    chain: &SparseCol,
) -> Result<SparseCol> {
    let faces: Vec<&Vec<usize>> = src.faces_of_dim(src_p.dim);
    let dst_index: BTreeMap<&str, usize> = dst.vertices().iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let mut out = SparseCol::new();
    for (&i, c) in chain {
        let mut img = Vec::new();
        for &v in faces[i] {
            let label = &src.vertices()[v];
            let t = f.assignment.get(label).ok_or_else(|| Error::UnknownId(label.clone()))?;
            img.push(*dst_index.get(t.as_str()).ok_or_else(|| Error::UnknownId(t.clone()))?);
        }
        let sign = permutation_sign(&img);
        img.sort_unstable();
        if img.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        let k = dst_p
            .face_index(&img)
            .ok_or_else(|| Error::NotSimplicial(format!("image {img:?} is not a face")))?;
        axpy(&mut out, &(c * BigInt::from(sign)), &SparseCol::from([(k, BigInt::one())]));
    }
    Ok(out)
}

/// Matrix of the induced map on free parts of `H_d`, in the presentations' bases.
pub fn induced_matrix(
    src: &SimplicialComplex,
    src_p: &HomologyPresentation,
    dst: &SimplicialComplex,
    dst_p: &HomologyPresentation,
    f: &SimplicialMap,
) -> Result<IntegerMatrix> {
    if src_p.dim != dst_p.dim {
        return Err(Error::Invalid("presentations of different degrees".into()));
    }
    let mut m = IntegerMatrix::zeros(dst_p.group.rank, src_p.group.rank);
    for j in 0..src_p.group.rank {
        let img = push_chain(src, src_p, dst, dst_p, f, &src_p.generator(j))?;
        for (i, v) in dst_p.class_of(&img)?.into_iter().enumerate() {
            m.data[i][j] = v;
        }
    }
    Ok(m)
}
