//! Exact rational helpers and the `"p/q"` string encoding used by every JSON format.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(n: i64) -> Q {
    BigRational::from_integer(BigInt::from(n))
}

pub fn to_f64(x: &Q) -> f64 {
    if let (Some(n), Some(d)) = (x.numer().to_i64(), x.denom().to_i64()) {
        if n.unsigned_abs() < 1 << 53 && d < 1 << 53 {
            return n as f64 / d as f64;
        }
    }
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn format_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses `"p/q"`, `"p"` or a finite decimal such as `"0.125"`.
pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches('-'), frac);
        let n: BigInt = digits.parse().map_err(|_| bad())?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let v = BigRational::new(n, d);
        return Ok(if neg { -v } else { v });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}

/// Largest dyadic `r` with `r * r <= x`, on a grid fine enough for roughly
/// 40 significant bits. Exact whenever `x` is the square of such a dyadic.
pub fn sqrt_floor(x: &Q) -> Q {
    assert!(!x.is_negative(), "sqrt of negative rational");
    if x.is_zero() {
        return Q::zero();
    }
    let mag = x.numer().bits() as i64 - x.denom().bits() as i64;
    let k = (48 - mag / 2).max(24) as usize;
    let scale = BigInt::one() << (2 * k);
    let scaled = (x * BigRational::from_integer(scale)).floor().to_integer();
    let root = scaled.sqrt();
    BigRational::new(root, BigInt::one() << k)
}

/// Smallest grid value `r` with `r * r >= x` (companion of [`sqrt_floor`]).
pub fn sqrt_ceil(x: &Q) -> Q {
    let lo = sqrt_floor(x);
    if &(&lo * &lo) == x {
        return lo;
    }
    let mag = x.numer().bits() as i64 - x.denom().bits() as i64;
    let k = (48 - mag / 2).max(24) as usize;
    lo + BigRational::new(BigInt::one(), BigInt::one() << k)
}

/// A short rational in `[lo, hi)` preferring small denominators; `lo < hi` required.
pub fn simple_between(lo: &Q, hi: &Q) -> Q {
    debug_assert!(lo < hi);
    let mut den = BigInt::one();
    loop {
        let d = BigRational::from_integer(den.clone());
        let cand = (lo * &d).ceil() / &d;
        if &cand < hi {
            return cand;
        }
        den <<= 1;
    }
}

pub mod serde_q {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_q(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse_q(&s).map_err(serde::de::Error::custom)
    }
}

pub mod serde_q_vec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(xs: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
        xs.iter().map(format_q).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Q>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| parse_q(s).map_err(serde::de::Error::custom))
            .collect()
    }
}
