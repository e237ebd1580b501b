//! Labeled abstract simplicial complexes, nerves of covers and simplicial maps.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::covers::Cover;
use crate::error::{Error, Result};
use crate::geometry::Triangulation;

/// Faces are sorted vertex-index lists; the face set is closed under subsets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawComplex", into = "RawComplex")]
pub struct SimplicialComplex {
    vertices: Vec<String>,
    faces: BTreeSet<Vec<usize>>,
    dim_cap: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawComplex {
    vertices: Vec<String>,
    faces: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim_cap: Option<usize>,
}

impl TryFrom<RawComplex> for SimplicialComplex {
    type Error = Error;
    fn try_from(raw: RawComplex) -> Result<Self> {
        SimplicialComplex::new(raw.vertices, raw.faces, raw.dim_cap)
    }
}

impl From<SimplicialComplex> for RawComplex {
    fn from(k: SimplicialComplex) -> Self {
        RawComplex { vertices: k.vertices, faces: k.faces.into_iter().collect(), dim_cap: k.dim_cap }
    }
}

fn subsets_into(face: &[usize], max_len: usize, out: &mut BTreeSet<Vec<usize>>) {
    let n = face.len();
    if n <= 16 {
        for mask in 1u32..(1u32 << n) {
            if mask.count_ones() as usize > max_len {
                continue;
            }
            out.insert((0..n).filter(|b| mask >> b & 1 == 1).map(|b| face[b]).collect());
        }
        return;
    }
    // large faces: enumerate bounded-size subsets directly
    let mut stack: Vec<(usize, Vec<usize>)> = vec![(0, Vec::new())];
    while let Some((start, cur)) = stack.pop() {
        if !cur.is_empty() {
            out.insert(cur.clone());
        }
        if cur.len() == max_len {
            continue;
        }
        for i in start..n {
            let mut next = cur.clone();
            next.push(face[i]);
            stack.push((i + 1, next));
        }
    }
}

impl SimplicialComplex {
    /// Builds the subset closure of `faces`, keeping faces of dimension at most `dim_cap`.
    pub fn new(vertices: Vec<String>, faces: Vec<Vec<usize>>, dim_cap: Option<usize>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for v in &vertices {
            if !seen.insert(v) {
                return Err(Error::Invalid(format!("duplicate vertex label {v:?}")));
            }
        }
        let max_len = dim_cap.map_or(usize::MAX, |d| d + 1);
        let mut closed = BTreeSet::new();
        for (i, _) in vertices.iter().enumerate() {
            closed.insert(vec![i]);
        }
        for mut f in faces {
            f.sort_unstable();
            f.dedup();
            if let Some(&bad) = f.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::UnknownVertex(bad));
            }
            subsets_into(&f, max_len, &mut closed);
        }
        Ok(SimplicialComplex { vertices, faces: closed, dim_cap })
    }

    pub fn from_label_faces(vertices: Vec<String>, faces: &[Vec<String>], dim_cap: Option<usize>) -> Result<Self> {
        let index: BTreeMap<&str, usize> = vertices.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
        let mut idx_faces = Vec::new();
        for f in faces {
            let mut g = Vec::new();
            for l in f {
                g.push(*index.get(l.as_str()).ok_or_else(|| Error::UnknownId(l.clone()))?);
            }
            idx_faces.push(g);
        }
        Self::new(vertices, idx_faces, dim_cap)
    }

    /// The triangulation as a complex on labels `v{i}`.
    pub fn from_triangulation(t: &Triangulation) -> Self {
        let vertices = (0..t.vertices.len()).map(|i| format!("v{i}")).collect();
        let faces = t.triangles.iter().map(|tr| tr.to_vec()).collect();
        Self::new(vertices, faces, None).expect("triangulation indices are valid")
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn faces(&self) -> &BTreeSet<Vec<usize>> {
        &self.faces
    }

    pub fn dim_cap(&self) -> Option<usize> {
        self.dim_cap
    }

    /// Largest face dimension, or -1 when empty.
    pub fn dimension(&self) -> i64 {
        self.faces.iter().map(|f| f.len() as i64 - 1).max().unwrap_or(-1)
    }

    /// Faces of dimension `d` in lexicographic order.
    pub fn faces_of_dim(&self, d: usize) -> Vec<&Vec<usize>> {
        self.faces.iter().filter(|f| f.len() == d + 1).collect()
    }

    pub fn count_by_dim(&self) -> Vec<usize> {
        let mut c = vec![0; (self.dimension() + 1).max(0) as usize];
        for f in &self.faces {
            c[f.len() - 1] += 1;
        }
        c
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.count_by_dim()
            .iter()
            .enumerate()
            .map(|(d, &n)| if d % 2 == 0 { n as i64 } else { -(n as i64) })
            .sum()
    }

    pub fn label_face(&self, f: &[usize]) -> BTreeSet<String> {
        f.iter().map(|&v| self.vertices[v].clone()).collect()
    }

    /// The face set expressed in labels.
    pub fn label_faces(&self) -> BTreeSet<BTreeSet<String>> {
        self.faces.iter().map(|f| self.label_face(f)).collect()
    }

    pub fn vertex_index(&self, label: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == label)
    }

    /// Number of connected components.
    pub fn components(&self) -> usize {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for f in self.faces.iter().filter(|f| f.len() == 2) {
            let (a, b) = (find(&mut parent, f[0]), find(&mut parent, f[1]));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        (0..n).filter(|&v| find(&mut parent, v) == v).count()
    }

    /// OFF-style text: labels, then one line per face as vertex indices.
    pub fn to_off(&self) -> String {
        let mut s = String::from("OFF-COMPLEX\n");
        let _ = writeln!(s, "{} {}", self.vertices.len(), self.faces.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{v}");
        }
        for f in &self.faces {
            let idx: Vec<String> = f.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "{} {}", f.len(), idx.join(" "));
        }
        s
    }

    /// DOT rendering of the 1-skeleton.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph nerve {\n");
        for v in &self.vertices {
            let _ = writeln!(s, "  {v:?};");
        }
        for f in self.faces.iter().filter(|f| f.len() == 2) {
            let _ = writeln!(s, "  {:?} -- {:?};", self.vertices[f[0]], self.vertices[f[1]]);
        }
        s.push_str("}\n");
        s
    }
}

/// Nerve of a cover on its sample: one vertex per element with nonempty
/// realization, one face per set of elements sharing a sample point.
pub fn nerve(c: &Cover, dim_cap: Option<usize>) -> SimplicialComplex {
    let live: Vec<usize> = (0..c.len()).filter(|&k| !c.elements()[k].realized().is_empty()).collect();
    let mut slot = vec![usize::MAX; c.len()];
    for (i, &k) in live.iter().enumerate() {
        slot[k] = i;
    }
    let patterns: BTreeSet<Vec<usize>> = c
        .memberships()
        .iter()
        .filter(|m| m.len() > 1)
        .map(|m| m.iter().map(|&k| slot[k]).collect())
        .collect();
    let vertices = live.iter().map(|&k| c.elements()[k].id.clone()).collect();
    SimplicialComplex::new(vertices, patterns.into_iter().collect(), dim_cap).expect("nerve indices are valid")
}

/// A vertex assignment between labeled complexes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplicialMap {
    pub assignment: BTreeMap<String, String>,
}

impl SimplicialMap {
    pub fn identity(k: &SimplicialComplex) -> Self {
        SimplicialMap { assignment: k.vertices.iter().map(|v| (v.clone(), v.clone())).collect() }
    }

    pub fn image_face(&self, src: &SimplicialComplex, f: &[usize]) -> Result<BTreeSet<String>> {
        f.iter()
            .map(|&v| {
                self.assignment
                    .get(&src.vertices[v])
                    .cloned()
                    .ok_or_else(|| Error::UnknownId(src.vertices[v].clone()))
            })
            .collect()
    }

    /// Every source vertex is assigned and every face lands on a face.
    pub fn validate(&self, src: &SimplicialComplex, dst: &SimplicialComplex) -> Result<()> {
        let dst_faces = dst.label_faces();
        for f in &src.faces {
            let img = self.image_face(src, f)?;
            if !dst_faces.contains(&img) {
                return Err(Error::NotSimplicial(format!(
                    "face {:?} maps to non-face {:?}",
                    src.label_face(f),
                    img
                )));
            }
        }
        Ok(())
    }

    /// `other` after `self`.
    pub fn then(&self, other: &SimplicialMap) -> Result<SimplicialMap> {
        let assignment = self
            .assignment
            .iter()
            .map(|(k, v)| {
                other
                    .assignment
                    .get(v)
                    .map(|w| (k.clone(), w.clone()))
                    .ok_or_else(|| Error::UnknownId(v.clone()))
            })
            .collect::<Result<_>>()?;
        Ok(SimplicialMap { assignment })
    }

    pub fn is_injective_on(&self, src: &SimplicialComplex) -> bool {
        let imgs: BTreeSet<&String> = src.vertices.iter().filter_map(|v| self.assignment.get(v)).collect();
        imgs.len() == src.vertices.len()
    }
}

/// The refinement map from `fine` to `coarse` given by `assignment` (fine id to coarse id).
/// Containment is checked on the shared sample.
pub fn induced_map(
    fine: &Cover,
    coarse: &Cover,
    assignment: &BTreeMap<String, String>,
    dim_cap: Option<usize>,
) -> Result<SimplicialMap> {
    if fine.sample().points() != coarse.sample().points() {
        return Err(Error::Invalid("covers live on different samples".into()));
    }
    for e in fine.elements() {
        let target = assignment.get(&e.id).ok_or_else(|| Error::UnknownId(e.id.clone()))?;
        let t = coarse.element(target)?;
        if !e.realized().is_subset(t.realized()) {
            return Err(Error::Precondition(format!("element {:?} is not inside {:?}", e.id, target)));
        }
    }
    let m = SimplicialMap { assignment: assignment.clone() };
    m.validate(&nerve(fine, dim_cap), &nerve(coarse, dim_cap))?;
    Ok(m)
}

/// Bijective on vertices with face sets corresponding exactly.
pub fn is_isomorphism(m: &SimplicialMap, src: &SimplicialComplex, dst: &SimplicialComplex) -> bool {
    if src.vertices.len() != dst.vertices.len() || !m.is_injective_on(src) {
        return false;
    }
    let Ok(img) = src.faces.iter().map(|f| m.image_face(src, f)).collect::<Result<BTreeSet<_>>>() else {
        return false;
    };
    img == dst.label_faces()
}

/// `after` equals `before` plus the closure of `simplex`, on the same vertices.
pub fn union_with_simplex_check(before: &SimplicialComplex, after: &SimplicialComplex, simplex: &[String]) -> bool {
    let bv: BTreeSet<&String> = before.vertices.iter().collect();
    let av: BTreeSet<&String> = after.vertices.iter().collect();
    if bv != av || simplex.iter().any(|s| !bv.contains(s)) {
        return false;
    }
    let mut expect = before.label_faces();
    let n = simplex.len();
    if n > 20 {
        return false;
    }
    for mask in 1u32..(1u32 << n) {
        expect.insert((0..n).filter(|b| mask >> b & 1 == 1).map(|b| simplex[b].clone()).collect());
    }
    expect == after.label_faces()
}
