use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Dense integer matrix with arbitrary-precision entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<BigInt>>,
}

impl IntegerMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntegerMatrix { rows, cols, data: vec![vec![BigInt::zero(); cols]; rows] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i][i] = BigInt::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<i64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged matrix");
        IntegerMatrix { rows: r, cols: c, data: rows.into_iter().map(|x| x.into_iter().map(BigInt::from).collect()).collect() }
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i][j]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().flatten().all(Zero::is_zero)
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        self.data.iter().map(|r| r[j].clone()).collect()
    }

    pub fn from_columns(rows: usize, cols: &[Vec<BigInt>]) -> Self {
        let mut m = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for i in 0..rows {
                m.data[i][j] = c[i].clone();
            }
        }
        m
    }

    pub fn mul(&self, o: &IntegerMatrix) -> IntegerMatrix {
        assert_eq!(self.cols, o.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.data[i][k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    if !o.data[k][j].is_zero() {
                        out.data[i][j] += a * &o.data[k][j];
                    }
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> IntegerMatrix {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j][i] = self.data[i][j].clone();
            }
        }
        out
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        self.data.swap(a, b);
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        for r in &mut self.data {
            r.swap(a, b);
        }
    }

    /// row[dst] += f * row[src]
    fn add_row(&mut self, dst: usize, src: usize, f: &BigInt) {
        if f.is_zero() {
            return;
        }
        for j in 0..self.cols {
            if !self.data[src][j].is_zero() {
                let v = f * &self.data[src][j];
                self.data[dst][j] += v;
            }
        }
    }

    /// col[dst] += f * col[src]
    fn add_col(&mut self, dst: usize, src: usize, f: &BigInt) {
        if f.is_zero() {
            return;
        }
        for r in &mut self.data {
            if !r[src].is_zero() {
                let v = f * &r[src];
                r[dst] += v;
            }
        }
    }

    fn negate_row(&mut self, i: usize) {
        for v in &mut self.data[i] {
            *v = -std::mem::take(v);
        }
    }

    fn negate_col(&mut self, j: usize) {
        for r in &mut self.data {
            r[j] = -std::mem::take(&mut r[j]);
        }
    }
}

fn entry_to_json(v: &BigInt) -> serde_json::Value {
    match v.to_i64() {
        Some(x) => serde_json::Value::from(x),
        None => serde_json::Value::String(v.to_string()),
    }
}

fn entry_from_json(v: &serde_json::Value) -> Option<BigInt> {
    match v {
        serde_json::Value::Number(n) => n.as_i64().map(BigInt::from),
        serde_json::Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

/// Integers as JSON numbers when they fit in `i64`, strings otherwise.
pub mod serde_int {
    use super::*;

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        entry_to_json(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        entry_from_json(&v).ok_or_else(|| D::Error::custom("expected an integer"))
    }
}

pub mod serde_int_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(entry_to_json).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        let v = Vec::<serde_json::Value>::deserialize(d)?;
        v.iter()
            .map(|x| entry_from_json(x).ok_or_else(|| D::Error::custom("expected an integer")))
            .collect()
    }
}

/// Serialized as a list of rows; an explicit shape keeps empty matrices unambiguous.
impl Serialize for IntegerMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Raw {
            rows: usize,
            cols: usize,
            entries: Vec<Vec<serde_json::Value>>,
        }
        Raw {
            rows: self.rows,
            cols: self.cols,
            entries: self.data.iter().map(|r| r.iter().map(entry_to_json).collect()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntegerMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            rows: usize,
            cols: usize,
            entries: Vec<Vec<serde_json::Value>>,
        }
        let raw = Raw::deserialize(d)?;
        if raw.entries.len() != raw.rows || raw.entries.iter().any(|r| r.len() != raw.cols) {
            return Err(D::Error::custom("matrix shape does not match its entries"));
        }
        let data = raw
            .entries
            .iter()
            .map(|r| {
                r.iter()
                    .map(|v| entry_from_json(v).ok_or_else(|| D::Error::custom("expected an integer")))
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        Ok(IntegerMatrix { rows: raw.rows, cols: raw.cols, data })
    }
}

/// `s = u * m * v` with `u`, `v` unimodular and `s` diagonal, `d1 | d2 | ...`.
#[derive(Clone, Debug)]
pub struct Smith {
    pub s: IntegerMatrix,
    pub u: IntegerMatrix,
    pub v: IntegerMatrix,
    pub u_inv: IntegerMatrix,
    pub v_inv: IntegerMatrix,
}

impl Smith {
    /// Nonzero diagonal entries.
    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.s.rows.min(self.s.cols))
            .map(|i| self.s.data[i][i].clone())
            .take_while(|d| !d.is_zero())
            .collect()
    }

    pub fn rank(&self) -> usize {
        self.diagonal().len()
    }
}

struct Tracker {
    m: IntegerMatrix,
    u: IntegerMatrix,
    u_inv: IntegerMatrix,
    v: IntegerMatrix,
    v_inv: IntegerMatrix,
    track: bool,
}

impl Tracker {
    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        self.m.swap_rows(a, b);
        if self.track {
            self.u.swap_rows(a, b);
            self.u_inv.swap_cols(a, b);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        self.m.swap_cols(a, b);
        if self.track {
            self.v.swap_cols(a, b);
            self.v_inv.swap_rows(a, b);
        }
    }

    fn add_row(&mut self, dst: usize, src: usize, f: &BigInt) {
        self.m.add_row(dst, src, f);
        if self.track {
            self.u.add_row(dst, src, f);
            self.u_inv.add_col(src, dst, &-f);
        }
    }

    fn add_col(&mut self, dst: usize, src: usize, f: &BigInt) {
        self.m.add_col(dst, src, f);
        if self.track {
            self.v.add_col(dst, src, f);
            self.v_inv.add_row(src, dst, &-f);
        }
    }

    fn negate_row(&mut self, i: usize) {
        self.m.negate_row(i);
        if self.track {
            self.u.negate_row(i);
            self.u_inv.negate_col(i);
        }
    }
}

/// Smallest nonzero |entry| in the trailing block, first in row-major order.
fn min_pivot(m: &IntegerMatrix, t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for i in t..m.rows {
        for j in t..m.cols {
            let v = &m.data[i][j];
            if v.is_zero() {
                continue;
            }
            if best.is_none_or(|(bi, bj)| v.abs() < m.data[bi][bj].abs()) {
                best = Some((i, j));
                if v.abs().is_one() {
                    return best;
                }
            }
        }
    }
    best
}

fn smith_impl(m: &IntegerMatrix, track: bool) -> Tracker {
    let (r, c) = (m.rows, m.cols);
    let mut w = Tracker {
        m: m.clone(),
        u: if track { IntegerMatrix::identity(r) } else { IntegerMatrix::zeros(0, 0) },
        u_inv: if track { IntegerMatrix::identity(r) } else { IntegerMatrix::zeros(0, 0) },
        v: if track { IntegerMatrix::identity(c) } else { IntegerMatrix::zeros(0, 0) },
        v_inv: if track { IntegerMatrix::identity(c) } else { IntegerMatrix::zeros(0, 0) },
        track,
    };
    for t in 0..r.min(c) {
        let Some((pi, pj)) = min_pivot(&w.m, t) else { break };
        w.swap_rows(t, pi);
        w.swap_cols(t, pj);
        loop {
            let mut again = false;
            for i in t + 1..r {
                if w.m.data[i][t].is_zero() {
                    continue;
                }
                let q = w.m.data[i][t].div_floor(&w.m.data[t][t]);
                w.add_row(i, t, &-q);
                if !w.m.data[i][t].is_zero() {
                    again = true;
                }
            }
            for j in t + 1..c {
                if w.m.data[t][j].is_zero() {
                    continue;
                }
                let q = w.m.data[t][j].div_floor(&w.m.data[t][t]);
                w.add_col(j, t, &-q);
                if !w.m.data[t][j].is_zero() {
                    again = true;
                }
            }
            if again {
                // a smaller remainder now sits in row or column t
                let mut best = (t, t);
                for i in t + 1..r {
                    let v = &w.m.data[i][t];
                    if !v.is_zero() && v.abs() < w.m.data[best.0][best.1].abs() {
                        best = (i, t);
                    }
                }
                for j in t + 1..c {
                    let v = &w.m.data[t][j];
                    if !v.is_zero() && v.abs() < w.m.data[best.0][best.1].abs() {
                        best = (t, j);
                    }
                }
                w.swap_rows(t, best.0);
                w.swap_cols(t, best.1);
                continue;
            }
            let p = w.m.data[t][t].clone();
            let bad = (t + 1..r).find(|&i| (t + 1..c).any(|j| !w.m.data[i][j].is_multiple_of(&p)));
            match bad {
                Some(i) => w.add_row(t, i, &BigInt::one()),
                None => break,
            }
        }
        if w.m.data[t][t].is_negative() {
            w.negate_row(t);
        }
    }
    w
}

pub fn smith_normal_form(m: &IntegerMatrix) -> Smith {
    let w = smith_impl(m, true);
    Smith { s: w.m, u: w.u, v: w.v, u_inv: w.u_inv, v_inv: w.v_inv }
}

/// Sparse integer matrix in row form.
#[derive(Clone, Debug, Default)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<BTreeMap<usize, BigInt>>,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        SparseMatrix { rows, cols, entries: vec![BTreeMap::new(); rows] }
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        if v.is_zero() {
            self.entries[i].remove(&j);
        } else {
            self.entries[i].insert(j, v);
        }
    }

    pub fn to_dense(&self) -> IntegerMatrix {
        let mut m = IntegerMatrix::zeros(self.rows, self.cols);
        for (i, row) in self.entries.iter().enumerate() {
            for (&j, v) in row {
                m.data[i][j] = v.clone();
            }
        }
        m
    }

    /// Sparse columns, row-indexed.
    pub fn columns(&self) -> Vec<BTreeMap<usize, BigInt>> {
        let mut cols = vec![BTreeMap::new(); self.cols];
        for (i, row) in self.entries.iter().enumerate() {
            for (&j, v) in row {
                cols[j].insert(i, v.clone());
            }
        }
        cols
    }
}

/// Nonzero invariant factors (ascending, each dividing the next).
/// Unit pivots are eliminated sparsely, first in row-major order; the
/// remaining block goes through the dense Smith form.
pub fn invariant_factors(m: &SparseMatrix) -> Vec<BigInt> {
    let mut rows = m.entries.clone();
    let mut col_rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); m.cols];
    for (i, row) in rows.iter().enumerate() {
        for &j in row.keys() {
            col_rows[j].insert(i);
        }
    }
    let mut units = 0usize;
    let mut start = 0usize;
    loop {
        let mut pivot = None;
        for i in start..rows.len() {
            if let Some((&j, v)) = rows[i].iter().find(|(_, v)| v.abs().is_one()) {
                pivot = Some((i, j, v.clone()));
                break;
            }
        }
        let Some((r, c, pv)) = pivot else { break };
        let prow = std::mem::take(&mut rows[r]);
        for &j in prow.keys() {
            col_rows[j].remove(&r);
        }
        let others: Vec<usize> = col_rows[c].iter().copied().collect();
        // rows before r held no unit entries; only the rows touched below can gain one
        start = others.iter().copied().chain([r]).min().unwrap_or(r);
        for r2 in others {
            let f = -(&rows[r2][&c] * &pv);
            for (&j, v) in &prow {
                let e = rows[r2].entry(j).or_insert_with(BigInt::zero);
                *e += &f * v;
                if e.is_zero() {
                    rows[r2].remove(&j);
                    col_rows[j].remove(&r2);
                } else {
                    col_rows[j].insert(r2);
                }
            }
        }
        units += 1;
    }
    let live_rows: Vec<usize> = (0..rows.len()).filter(|&i| !rows[i].is_empty()).collect();
    let live_cols: Vec<usize> = (0..m.cols).filter(|&j| !col_rows[j].is_empty()).collect();
    let mut out = vec![BigInt::one(); units];
    if !live_rows.is_empty() {
        let col_pos: BTreeMap<usize, usize> = live_cols.iter().enumerate().map(|(k, &j)| (j, k)).collect();
        let mut d = IntegerMatrix::zeros(live_rows.len(), live_cols.len());
        for (k, &i) in live_rows.iter().enumerate() {
            for (j, v) in &rows[i] {
                d.data[k][col_pos[j]] = v.clone();
            }
        }
        let w = smith_impl(&d, false);
        for t in 0..d.rows.min(d.cols) {
            let v = &w.m.data[t][t];
            if v.is_zero() {
                break;
            }
            out.push(v.clone());
        }
    }
    out
}
