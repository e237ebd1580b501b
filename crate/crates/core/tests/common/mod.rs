//! Independent oracles shared by the integration tests and the acceptance harness.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use nervelab::complexes::SimplicialComplex;

pub fn simplices(k: &SimplicialComplex, d: usize) -> Vec<Vec<usize>> {
    k.faces().iter().filter(|f| f.len() == d + 1).cloned().collect()
}

/// Boundary matrix with rows indexed by `lower` and columns by `upper`.
pub fn boundary(lower: &[Vec<usize>], upper: &[Vec<usize>]) -> Vec<Vec<i64>> {
    let index: BTreeMap<&Vec<usize>, usize> = lower.iter().enumerate().map(|(i, f)| (f, i)).collect();
    let mut m = vec![vec![0i64; upper.len()]; lower.len()];
    for (j, s) in upper.iter().enumerate() {
        for i in 0..s.len() {
            let mut face = s.clone();
            face.remove(i);
            if face.is_empty() {
                continue;
            }
            m[index[&face]][j] += if i % 2 == 0 { 1 } else { -1 };
        }
    }
    m
}

fn big(m: &[Vec<i64>]) -> Vec<Vec<BigInt>> {
    m.iter().map(|r| r.iter().map(|&v| BigInt::from(v)).collect()).collect()
}

/// Rank over the rationals by fraction-free elimination.
pub fn rank_q(m: &[Vec<i64>]) -> usize {
    let mut a = big(m);
    let (rows, cols) = (a.len(), a.first().map_or(0, Vec::len));
    let mut rank = 0;
    let mut prev = BigInt::one();
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&r| !a[r][c].is_zero()) else { continue };
        a.swap(rank, p);
        for r in rank + 1..rows {
            for cc in c + 1..cols {
                let v = (&a[rank][c] * &a[r][cc] - &a[r][c] * &a[rank][cc]) / &prev;
                a[r][cc] = v;
            }
            a[r][c] = BigInt::zero();
        }
        prev = a[rank][c].clone();
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// Inverse modulo the prime `p` by Fermat's little theorem.
pub fn inv_mod(a: i64, p: i64) -> i64 {
    let (mut base, mut e, mut acc) = (a as i128, p as i128 - 2, 1i128);
    let m = p as i128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        e >>= 1;
    }
    acc as i64
}

/// Rank over `Z/p`, `p < 2^31` prime.
pub fn rank_mod(m: &[Vec<i64>], p: i64) -> usize {
    let mut a: Vec<Vec<i64>> = m.iter().map(|r| r.iter().map(|v| v.rem_euclid(p)).collect()).collect();
    let (rows, cols) = (a.len(), a.first().map_or(0, Vec::len));
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..rows).find(|&r| a[r][c] != 0) else { continue };
        a.swap(rank, piv);
        let inv = inv_mod(a[rank][c], p);
        for r in 0..rows {
            if r != rank && a[r][c] != 0 {
                let f = a[r][c] * inv % p;
                for cc in c..cols {
                    if a[rank][cc] != 0 {
                        a[r][cc] = (a[r][cc] - f * a[rank][cc] % p).rem_euclid(p);
                    }
                }
            }
        }
        rank += 1;
    }
    rank
}

fn det(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&r| !a[r][k].is_zero()) else { return BigInt::zero() };
        if p != k {
            a.swap(p, k);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (&a[k][k] * &a[i][j] - &a[i][k] * &a[k][j]) / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    go(0, n, k, &mut cur, &mut out);
    out
}

/// Determinantal divisors `d_1, ..., d_rank` (gcd of all `k x k` minors), or
/// `None` when more than `budget` minors would be needed.
pub fn determinant_divisors(m: &[Vec<i64>], rank: usize, budget: usize) -> Option<Vec<BigInt>> {
    let a = big(m);
    let (rows, cols) = (a.len(), a.first().map_or(0, Vec::len));
    let mut used = 0;
    let mut out = Vec::new();
    for k in 1..=rank {
        let mut g = BigInt::zero();
        'all: for rs in combinations(rows, k) {
            for cs in combinations(cols, k) {
                used += 1;
                if used > budget {
                    return None;
                }
                let minor = rs.iter().map(|&r| cs.iter().map(|&c| a[r][c].clone()).collect()).collect();
                g = g.gcd(&det(minor));
                if g.is_one() {
                    break 'all;
                }
            }
        }
        out.push(g.abs());
    }
    Some(out)
}

/// Invariant factors above one from determinantal divisors.
pub fn torsion_from_divisors(dd: &[BigInt]) -> Vec<BigInt> {
    let mut prev = BigInt::one();
    let mut out = Vec::new();
    for d in dd {
        let s = d / &prev;
        if s > BigInt::one() {
            out.push(s);
        }
        prev = d.clone();
    }
    out
}

/// Per degree: Betti number from rational ranks, and the torsion of `H_d`
/// from determinantal divisors of the next boundary when affordable.
pub struct OracleDegree {
    pub betti: usize,
    pub torsion: Option<Vec<BigInt>>,
    pub boundary_in: Vec<Vec<i64>>,
    pub boundary_out: Vec<Vec<i64>>,
    pub chains: usize,
}

pub fn oracle(k: &SimplicialComplex, budget: usize) -> Vec<OracleDegree> {
    let top = k.dimension();
    if top < 0 {
        return Vec::new();
    }
    let top = top as usize;
    let levels: Vec<Vec<Vec<usize>>> = (0..=top + 1).map(|d| simplices(k, d)).collect();
    (0..=top)
        .map(|d| {
            let out = if d == 0 { Vec::new() } else { boundary(&levels[d - 1], &levels[d]) };
            let inn = boundary(&levels[d], &levels[d + 1]);
            let r_out = if d == 0 { 0 } else { rank_q(&out) };
            let r_in = rank_q(&inn);
            let torsion = determinant_divisors(&inn, r_in, budget).map(|dd| torsion_from_divisors(&dd));
            OracleDegree {
                betti: levels[d].len() - r_out - r_in,
                torsion,
                boundary_in: inn,
                boundary_out: out,
                chains: levels[d].len(),
            }
        })
        .collect()
}

pub fn complex(n: usize, facets: &[&[usize]]) -> SimplicialComplex {
    SimplicialComplex::new((0..n).map(|i| format!("v{i}")).collect(), facets.iter().map(|f| f.to_vec()).collect(), None)
        .unwrap()
}

pub fn circle() -> SimplicialComplex {
    complex(3, &[&[0, 1], &[1, 2], &[0, 2]])
}

pub fn tetrahedron_boundary() -> SimplicialComplex {
    complex(4, &[&[0, 1, 2], &[0, 1, 3], &[0, 2, 3], &[1, 2, 3]])
}

/// Seven-vertex torus: triangles `{i, i+1, i+3}` and `{i, i+2, i+3}` mod 7.
pub fn torus7() -> SimplicialComplex {
    let facets: Vec<Vec<usize>> = (0..7)
        .flat_map(|i| [vec![i, (i + 1) % 7, (i + 3) % 7], vec![i, (i + 2) % 7, (i + 3) % 7]])
        .collect();
    let refs: Vec<&[usize]> = facets.iter().map(Vec::as_slice).collect();
    complex(7, &refs)
}

/// Six-vertex projective plane (the hemi-icosahedron).
pub fn rp2_6() -> SimplicialComplex {
    complex(
        6,
        &[
            &[0, 1, 2],
            &[0, 2, 3],
            &[0, 3, 4],
            &[0, 4, 5],
            &[0, 5, 1],
            &[1, 2, 4],
            &[2, 3, 5],
            &[3, 4, 1],
            &[4, 5, 2],
            &[5, 1, 3],
        ],
    )
}

/// Every simplicial complex on the vertex set `0..n`, as facet-free face lists.
pub fn all_complexes(n: usize) -> Vec<SimplicialComplex> {
    let subsets: Vec<Vec<usize>> = {
        let mut s: Vec<Vec<usize>> = (1u32..(1 << n))
            .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect::<Vec<_>>())
            .filter(|f| f.len() >= 2)
            .collect();
        s.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        s
    };
    let mut out = Vec::new();
    let mut chosen: Vec<Vec<usize>> = Vec::new();
    fn go(i: usize, subsets: &[Vec<usize>], chosen: &mut Vec<Vec<usize>>, n: usize, out: &mut Vec<SimplicialComplex>) {
        if i == subsets.len() {
            out.push(
                SimplicialComplex::new((0..n).map(|v| format!("v{v}")).collect(), chosen.clone(), None).unwrap(),
            );
            return;
        }
        go(i + 1, subsets, chosen, n, out);
        let s = &subsets[i];
        let closed = s.len() == 2
            || (0..s.len()).all(|k| {
                let mut f = s.clone();
                f.remove(k);
                chosen.contains(&f)
            });
        if closed {
            chosen.push(s.clone());
            go(i + 1, subsets, chosen, n, out);
            chosen.pop();
        }
    }
    go(0, &subsets, &mut chosen, n, &mut out);
    out
}

// ---- covers ----

use std::collections::BTreeSet;

use nervelab::covers::{piece_id, Cover};
use nervelab::geometry::{Point, PointSample, Region};
use nervelab::rational::{q, qi, Q};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn grid(x0: i64, x1: i64, y0: i64, y1: i64, n: i64) -> Vec<Point> {
    let mut out = Vec::new();
    for i in x0 * n..=x1 * n {
        for j in y0 * n..=y1 * n {
            out.push(Point::xy(q(i, n), q(j, n)));
        }
    }
    out
}

pub fn ball(x: Q, y: Q, r: Q) -> Region {
    Region::open_ball(Point::xy(x, y), r)
}

/// Nerve faces read off region membership at every sample point.
pub fn brute_nerve(c: &Cover) -> BTreeSet<BTreeSet<String>> {
    let mut faces = BTreeSet::new();
    for p in c.sample().points() {
        let ids: Vec<&String> = c.elements().iter().filter(|e| e.region.contains(p)).map(|e| &e.id).collect();
        for mask in 1u32..(1 << ids.len()) {
            faces.insert((0..ids.len()).filter(|b| mask >> b & 1 == 1).map(|b| ids[b].clone()).collect());
        }
    }
    faces
}

/// `before` with `id` renamed to its first piece and a path of `m` pieces attached.
pub fn path_nerve(before: &BTreeSet<BTreeSet<String>>, id: &str, m: usize) -> BTreeSet<BTreeSet<String>> {
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

/// Two overlapping unit balls on a grid; `u` has room for gratings around (-1/2, 0).
pub fn two_ball_cover() -> Cover {
    let pts = grid(-2, 3, -2, 2, 32);
    let all = (0..pts.len()).collect();
    let s = PointSample::new(pts, q(1, 32)).unwrap();
    Cover::new(
        s,
        all,
        vec![("u".into(), ball(qi(0), qi(0), qi(1))), ("v".into(), ball(q(3, 2), qi(0), qi(1)))],
    )
    .unwrap()
}

/// Rational point on the unit circle for parameter t (stereographic).
fn circle_point(t: &Q) -> Point {
    let t2 = t * t;
    let d = qi(1) + &t2;
    Point::xy((qi(1) - &t2) / &d, (t * qi(2)) / d)
}

/// Random open-ball cover of a sampled quarter arc, in an ambient grid:
/// 4 to 10 jittered balls spread along the arc, each wide enough to reach its neighbours.
pub fn random_arc_cover(seed: u64) -> Cover {
    let mut rng = StdRng::seed_from_u64(seed);
    let arc: Vec<Point> = (0..=48).map(|i| circle_point(&q(i, 48))).collect();
    let mut pts: Vec<Point> = grid(-1, 2, -1, 2, 12).into_iter().filter(|p| !arc.contains(p)).collect();
    let first = pts.len();
    pts.extend(arc.iter().cloned());
    let target: BTreeSet<usize> = (first..pts.len()).collect();
    let s = PointSample::new(pts, q(1, 12)).unwrap();
    let k: i64 = rng.gen_range(4..=10);
    let regions = (0..k)
        .map(|i| {
            let t = q(2 * i + 1, 2 * k) + q(rng.gen_range(-1..=1), 8 * k);
            let c = circle_point(&t);
            let x = c.x() + q(rng.gen_range(-2..=2), 64);
            let y = c.y() + q(rng.gen_range(-2..=2), 64);
            let r = q(rng.gen_range(90..=140), 100 * k);
            (format!("b{i}"), Region::open_ball(Point::xy(x, y), r))
        })
        .collect();
    Cover::new(s, target, regions).unwrap()
}

// ---- first homology through explicit cycles ----

use nervelab::complexes::SimplicialMap;

pub const BIG_PRIME: i64 = 2_147_483_647;

/// Oriented edge `x -> y` of `edges` as a chain.
fn push_edge(chain: &mut [i64], index: &BTreeMap<Vec<usize>, usize>, x: usize, y: usize, sign: i64) {
    let (e, s) = if x < y { (vec![x, y], sign) } else { (vec![y, x], -sign) };
    chain[index[&e]] += s;
}

/// Fundamental cycles of a spanning forest of the 1-skeleton, as edge chains.
pub fn cycle_basis(k: &SimplicialComplex) -> Vec<Vec<i64>> {
    let edges = simplices(k, 1);
    let index: BTreeMap<Vec<usize>, usize> = edges.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
    let n = k.vertices().len();
    let mut adj = vec![Vec::new(); n];
    for e in &edges {
        adj[e[0]].push(e[1]);
        adj[e[1]].push(e[0]);
    }
    let mut path: Vec<Option<Vec<i64>>> = vec![None; n];
    let mut tree = std::collections::BTreeSet::new();
    for root in 0..n {
        if path[root].is_some() {
            continue;
        }
        path[root] = Some(vec![0; edges.len()]);
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x] {
                if path[y].is_none() {
                    let mut c = path[x].clone().unwrap();
                    push_edge(&mut c, &index, x, y, 1);
                    path[y] = Some(c);
                    tree.insert(vec![x.min(y), x.max(y)]);
                    queue.push_back(y);
                }
            }
        }
    }
    edges
        .iter()
        .filter(|e| !tree.contains(*e))
        .map(|e| {
            let (pu, pv) = (path[e[0]].as_ref().unwrap(), path[e[1]].as_ref().unwrap());
            let mut c: Vec<i64> = pu.iter().zip(pv).map(|(a, b)| a - b).collect();
            push_edge(&mut c, &index, e[0], e[1], 1);
            c
        })
        .collect()
}

/// Rank over `Z/p` of the matrix with the given sparse columns, by column
/// reduction against the pivots found so far (keyed by their last row).
pub fn rank_mod_sparse(cols: impl IntoIterator<Item = BTreeMap<usize, i64>>, p: i64) -> usize {
    let mut pivots: BTreeMap<usize, BTreeMap<usize, i64>> = BTreeMap::new();
    for mut c in cols {
        c.retain(|_, v| {
            *v = v.rem_euclid(p);
            *v != 0
        });
        while let Some((&low, &v)) = c.last_key_value() {
            let Some(piv) = pivots.get(&low) else {
                let inv = inv_mod(v, p);
                c.values_mut().for_each(|x| *x = *x * inv % p);
                pivots.insert(low, c);
                break;
            };
            for (&r, &x) in piv {
                let e = c.entry(r).or_insert(0);
                *e = (*e - v * x % p).rem_euclid(p);
                if *e == 0 {
                    c.remove(&r);
                }
            }
        }
    }
    pivots.len()
}

fn sparse_boundary(lower: &[Vec<usize>], upper: &[Vec<usize>]) -> Vec<BTreeMap<usize, i64>> {
    let index: BTreeMap<&Vec<usize>, usize> = lower.iter().enumerate().map(|(i, f)| (f, i)).collect();
    upper
        .iter()
        .map(|s| {
            (0..s.len())
                .map(|i| {
                    let mut f = s.clone();
                    f.remove(i);
                    (index[&f], if i % 2 == 0 { 1 } else { -1 })
                })
                .collect()
        })
        .collect()
}

fn sparse(v: &[i64]) -> BTreeMap<usize, i64> {
    v.iter().enumerate().filter(|(_, x)| **x != 0).map(|(i, &x)| (i, x)).collect()
}

/// Rank of `H_1` over a large prime field: cycles minus boundaries.
pub fn h1_rank_oracle(k: &SimplicialComplex) -> usize {
    let b2 = sparse_boundary(&simplices(k, 1), &simplices(k, 2));
    cycle_basis(k).len() - rank_mod_sparse(b2, BIG_PRIME)
}

/// Rank of the map induced on `H_1` by the vertex map `f: src -> dst`.
pub fn h1_map_rank(src: &SimplicialComplex, dst: &SimplicialComplex, f: &SimplicialMap) -> usize {
    let s_edges = simplices(src, 1);
    let d_edges = simplices(dst, 1);
    let d_index: BTreeMap<Vec<usize>, usize> = d_edges.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
    let image = |v: usize| dst.vertex_index(&f.assignment[&src.vertices()[v]]).expect("image vertex");
    let mut cols = sparse_boundary(&d_edges, &simplices(dst, 2));
    let base = rank_mod_sparse(cols.clone(), BIG_PRIME);
    for z in cycle_basis(src) {
        let mut c = vec![0i64; d_edges.len()];
        for (i, &coef) in z.iter().enumerate().filter(|(_, v)| **v != 0) {
            let (x, y) = (image(s_edges[i][0]), image(s_edges[i][1]));
            if x != y {
                push_edge(&mut c, &d_index, x, y, coef);
            }
        }
        cols.push(sparse(&c));
    }
    rank_mod_sparse(cols, BIG_PRIME) - base
}

/// Reduced Betti numbers with coefficients in `Z/p`.
pub fn reduced_betti_mod(k: &SimplicialComplex, p: i64) -> Vec<usize> {
    let top = k.faces().iter().map(Vec::len).max().unwrap_or(0);
    let chains: Vec<Vec<Vec<usize>>> = (0..=top).map(|d| simplices(k, d)).collect();
    let ranks: Vec<usize> = (1..=top)
        .map(|d| rank_mod_sparse(sparse_boundary(&chains[d - 1], &chains[d]), p))
        .collect();
    (0..top)
        .map(|d| {
            let r_in = if d == 0 { 0 } else { ranks[d - 1] };
            let r_out = ranks.get(d).copied().unwrap_or(0);
            chains[d].len() - r_in - r_out - usize::from(d == 0)
        })
        .collect()
}

// ---- homology against the oracle ----

use nervelab::homology::homology_all;

pub const MINOR_BUDGET: usize = 200_000;
/// Simplicial complexes on the labelled vertex set {0, ..., n-1} that use every vertex, n = 1..5.
pub const COUNTS: [usize; 5] = [1, 2, 9, 114, 6894];
const CHECK_PRIMES: [i64; 4] = [2, 3, 5, 7];

/// Compares every degree of the computed homology with the oracle; returns
/// how many torsion groups were settled by determinantal divisors (the rest
/// are checked through ranks mod small primes).
pub fn homology_check(k: &SimplicialComplex) -> Result<usize, String> {
    let got = homology_all(k);
    let want = oracle(k, MINOR_BUDGET);
    if got.len() != want.len() {
        return Err(format!("degrees of {:?}", k.faces()));
    }
    let divisible = |t: &[BigInt], p: i64| t.iter().filter(|x| (*x % p).is_zero()).count();
    let mut exact = 0;
    for (d, (g, w)) in got.iter().zip(&want).enumerate() {
        if g.rank != w.betti {
            return Err(format!("rank of H_{d} for {:?}: {} vs {}", k.faces(), g.rank, w.betti));
        }
        match &w.torsion {
            Some(t) if &g.torsion != t => {
                return Err(format!("torsion of H_{d} for {:?}: {:?} vs {t:?}", k.faces(), g.torsion));
            }
            Some(_) => exact += 1,
            None => {
                for p in CHECK_PRIMES {
                    let r_in = rank_mod(&w.boundary_in, p);
                    let r_out = if d == 0 { 0 } else { rank_mod(&w.boundary_out, p) };
                    let below = if d == 0 { 0 } else { divisible(&got[d - 1].torsion, p) };
                    if w.chains - r_in - r_out != g.rank + divisible(&g.torsion, p) + below {
                        return Err(format!("mod {p} check of H_{d} for {:?}", k.faces()));
                    }
                }
            }
        }
    }
    Ok(exact)
}

/// Up to ten random facets of size 2 to 4 on 3 to `max_n` vertices.
pub fn random_complex(rng: &mut StdRng, max_n: usize) -> SimplicialComplex {
    let n = rng.gen_range(3..=max_n);
    let facets: Vec<Vec<usize>> = (0..rng.gen_range(1..=10))
        .map(|_| {
            let size = rng.gen_range(2..=n.min(4));
            let mut f: Vec<usize> = (0..n).collect();
            for i in 0..size {
                let j = rng.gen_range(i..n);
                f.swap(i, j);
            }
            f.truncate(size);
            f.sort_unstable();
            f
        })
        .collect();
    SimplicialComplex::new((0..n).map(|v| format!("v{v}")).collect(), facets, None).unwrap()
}

// ---- extension fixtures ----

/// Two disjoint balls over an axis segment.
pub fn disjoint_pair_cover() -> Cover {
    let pts = grid(-1, 3, -1, 1, 8);
    let axis = pts.iter().enumerate().filter(|(_, p)| p.y().is_zero()).map(|(i, _)| i).collect();
    let s = PointSample::new(pts, q(1, 8)).unwrap();
    Cover::new(
        s,
        axis,
        vec![("u".into(), ball(qi(0), qi(0), q(1, 2))), ("v".into(), ball(qi(2), qi(0), q(1, 2)))],
    )
    .unwrap()
}

/// Three balls meeting pairwise with no common point.
pub fn empty_triple_cover() -> Cover {
    let r = q(11, 10);
    let pts = grid(-2, 3, -2, 3, 8);
    let all = (0..pts.len()).collect();
    let s = PointSample::new(pts, q(1, 8)).unwrap();
    Cover::new(
        s,
        all,
        vec![
            ("a".into(), ball(qi(0), qi(0), r.clone())),
            ("b".into(), ball(qi(2), qi(0), r.clone())),
            ("c".into(), ball(qi(1), q(7, 4), r)),
        ],
    )
    .unwrap()
}

// ---- thm1 outputs ----

use nervelab::geometry::dist2;
use nervelab::rational::to_f64;
use nervelab::scenarios::ScenarioReport;

/// Every pair of points is closer than `bound` (squared; `strict` for `<`),
/// by brute force, with floating point deciding the clear cases.
pub fn pairs_within(pts: &[&Point], bound: &Q, strict: bool) -> bool {
    let b = to_f64(bound);
    for (i, a) in pts.iter().enumerate() {
        for c in &pts[i + 1..] {
            let (x, y) = (a.approx(), c.approx());
            let d = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
            if d < b * (1.0 - 1e-9) {
                continue;
            }
            let d = dist2(a, c);
            if d > *bound || (strict && d == *bound) {
                return false;
            }
        }
    }
    true
}

fn elements_within(c: &Cover, bound: &Q, strict: bool) -> bool {
    c.elements().iter().all(|e| {
        let pts: Vec<&Point> = e.realized().iter().map(|&i| c.sample().point(i)).collect();
        pairs_within(&pts, bound, strict)
    })
}

/// Independent checks of a thm1 run: sizes by brute force on the
/// realized sample, J face for face, and reduced Betti numbers mod primes.
pub fn theorem1_checks(r: &ScenarioReport, wp: &Cover, j: &SimplicialMap) -> Vec<(&'static str, bool)> {
    let eps = nervelab::rational::parse_q(&r.params["epsilon"]).unwrap();
    let k: i64 = r.params["K"].parse().unwrap();
    let e1 = &eps / qi(k + 1);
    let w = r.stage("W").unwrap().rebuild(&r.sample).unwrap();
    let u = &r.stage("U").unwrap().nerve;
    let wpn = &r.stage("W'").unwrap().nerve;
    let images: BTreeSet<&String> = j.assignment.values().collect();
    let bijective = images.len() == j.assignment.len()
        && images == u.vertices().iter().collect()
        && j.assignment.keys().collect::<BTreeSet<_>>() == wpn.vertices().iter().collect();
    let mapped: BTreeSet<BTreeSet<String>> = wpn
        .label_faces()
        .iter()
        .map(|f| f.iter().map(|v| j.assignment.get(v).cloned().unwrap_or_default()).collect())
        .collect();
    vec![
        ("mesh(W') < eps", elements_within(wp, &(&eps * &eps), true)),
        ("diam(W) <= 7 eps'", elements_within(&w, &(qi(49) * &e1 * &e1), false)),
        ("diam(W') <= 16 eps'", elements_within(wp, &(qi(256) * &e1 * &e1), false)),
        ("J bijective", bijective),
        ("nerve(W') = nerve(U) via J", bijective && mapped == u.label_faces()),
        (
            "reduced homology of nerve(W') zero",
            [2, 3, BIG_PRIME].iter().all(|&p| reduced_betti_mod(wpn, p).iter().all(|&b| b == 0)),
        ),
        ("report verdicts", r.all_verified()),
    ]
}
