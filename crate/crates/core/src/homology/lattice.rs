//! Integer lattices spanned by sparse columns: echelon bases, kernels and
//! coordinates with respect to an echelon basis.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type SparseCol = BTreeMap<usize, BigInt>;

fn low(c: &SparseCol) -> Option<usize> {
    c.keys().next_back().copied()
}

/// `dst += f * src`
pub fn axpy(dst: &mut SparseCol, f: &BigInt, src: &SparseCol) {
    if f.is_zero() {
        return;
    }
    for (&i, v) in src {
        let e = dst.entry(i).or_insert_with(BigInt::zero);
        *e += f * v;
        if e.is_zero() {
            dst.remove(&i);
        }
    }
}

fn combo(a: &BigInt, x: &SparseCol, b: &BigInt, y: &SparseCol) -> SparseCol {
    let mut out = SparseCol::new();
    axpy(&mut out, a, x);
    axpy(&mut out, b, y);
    out
}

/// Unimodular column reduction until the nonzero columns have distinct lowest
/// rows. `track` receives the same operations (it starts as anything, usually the identity).
pub fn reduce(cols: &mut [SparseCol], track: Option<&mut [SparseCol]>) {
    let mut track = track;
    let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
    for j in 0..cols.len() {
        while let Some(r) = low(&cols[j]) {
            let Some(&p) = owner.get(&r) else {
                owner.insert(r, j);
                break;
            };
            let a = cols[p][&r].clone();
            let b = cols[j][&r].clone();
            if b.is_multiple_of(&a) {
                let f = -(&b / &a);
                let src = cols[p].clone();
                axpy(&mut cols[j], &f, &src);
                if let Some(t) = track.as_deref_mut() {
                    let src = t[p].clone();
                    axpy(&mut t[j], &f, &src);
                }
            } else {
                // [p j] <- [p j] * [[s, -b/g], [t, a/g]]
                let e = a.extended_gcd(&b);
                let (g, s, t) = (e.gcd, e.x, e.y);
                let (ag, bg) = (&a / &g, -(&b / &g));
                let np = combo(&s, &cols[p], &t, &cols[j]);
                let nj = combo(&bg, &cols[p], &ag, &cols[j]);
                cols[p] = np;
                cols[j] = nj;
                if let Some(tr) = track.as_deref_mut() {
                    let np = combo(&s, &tr[p], &t, &tr[j]);
                    let nj = combo(&bg, &tr[p], &ag, &tr[j]);
                    tr[p] = np;
                    tr[j] = nj;
                }
            }
        }
    }
}

/// Column-echelon basis of a lattice: distinct lowest rows, positive pivots,
/// entries in other pivot rows reduced into `[0, pivot)`. Unique per lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EchelonBasis {
    pub cols: Vec<SparseCol>,
    by_low: BTreeMap<usize, usize>,
}

impl EchelonBasis {
    pub fn new(mut cols: Vec<SparseCol>) -> Self {
        reduce(&mut cols, None);
        let mut cols: Vec<SparseCol> = cols.into_iter().filter(|c| !c.is_empty()).collect();
        for c in &mut cols {
            if c.values().next_back().is_some_and(|v| v.is_negative()) {
                for v in c.values_mut() {
                    *v = -std::mem::take(v);
                }
            }
        }
        cols.sort_by_key(low);
        let lows: Vec<usize> = cols.iter().map(|c| low(c).expect("nonzero")).collect();
        for i in 0..cols.len() {
            for j in (0..i).rev() {
                let r = lows[j];
                let Some(v) = cols[i].get(&r).cloned() else { continue };
                let p = &cols[j][&r];
                let q = v.div_floor(p);
                if !q.is_zero() {
                    let src = cols[j].clone();
                    axpy(&mut cols[i], &-q, &src);
                }
            }
        }
        let by_low = lows.iter().enumerate().map(|(k, &r)| (r, k)).collect();
        EchelonBasis { cols, by_low }
    }

    pub fn rank(&self) -> usize {
        self.cols.len()
    }

    /// Integer coordinates of `v` in this basis, or `None` if `v` is outside the lattice.
    pub fn solve(&self, v: &SparseCol) -> Option<Vec<BigInt>> {
        let mut rest = v.clone();
        let mut x = vec![BigInt::zero(); self.cols.len()];
        while let Some(r) = low(&rest) {
            let &k = self.by_low.get(&r)?;
            let (q, m) = rest[&r].div_rem(&self.cols[k][&r]);
            if !m.is_zero() {
                return None;
            }
            axpy(&mut rest, &-&q, &self.cols[k]);
            x[k] = q;
        }
        Some(x)
    }

    pub fn contains(&self, v: &SparseCol) -> bool {
        self.solve(v).is_some()
    }
}

/// Basis of `{ x : sum_j x_j cols[j] = 0 }` as sparse vectors indexed by column.
pub fn kernel(cols: &[SparseCol]) -> Vec<SparseCol> {
    let mut work = cols.to_vec();
    let mut track: Vec<SparseCol> = (0..cols.len())
        .map(|j| SparseCol::from([(j, BigInt::one())]))
        .collect();
    reduce(&mut work, Some(&mut track));
    work.iter()
        .zip(track)
        .filter(|(c, _)| c.is_empty())
        .map(|(_, t)| t)
        .collect()
}

pub fn to_sparse(v: &[BigInt]) -> SparseCol {
    v.iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .map(|(i, x)| (i, x.clone()))
        .collect()
}

pub fn to_dense(v: &SparseCol, n: usize) -> Result<Vec<BigInt>> {
    let mut out = vec![BigInt::zero(); n];
    for (&i, x) in v {
        if i >= n {
            return Err(Error::OutOfRange { index: i, len: n });
        }
        out[i] = x.clone();
    }
    Ok(out)
}
