//! Exact scalars and extended bounds.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn half() -> Rational {
    rat(1, 2)
}

/// Parse "p/q", an integer, or a plain decimal such as "0.43" or "-1.5e-3".
/// Decimal input is converted exactly.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = t.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
        let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    let (mant, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
    if ip.is_empty() && fp.is_empty() {
        return Err(bad());
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{ip}{fp}");
    let num = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| bad())?;
    let scale = exp - fp.len() as i32;
    let ten = BigInt::from(10);
    let mut r = if scale >= 0 {
        Rational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // to_f64 gives up on huge numerators; fall back to a scaled division
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Exact binary value of a finite double.
pub fn from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

pub fn floor(r: &Rational) -> BigInt {
    r.numer().div_floor(r.denom())
}

pub fn abs(r: &Rational) -> Rational {
    r.abs()
}

pub fn min_rat<'a>(a: &'a Rational, b: &'a Rational) -> &'a Rational {
    if a <= b {
        a
    } else {
        b
    }
}

pub fn max_rat<'a>(a: &'a Rational, b: &'a Rational) -> &'a Rational {
    if a >= b {
        a
    } else {
        b
    }
}

/// A rational extended by the two infinities.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ext {
    NegInf,
    Fin(Rational),
    PosInf,
}

impl Ext {
    pub fn fin(r: Rational) -> Ext {
        Ext::Fin(r)
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Ext::Fin(_))
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Ext::Fin(r) => Some(r),
            _ => None,
        }
    }

    /// Multiply by a nonzero rational. Infinities flip with the sign.
    pub fn scale(&self, c: &Rational) -> Ext {
        debug_assert!(!c.is_zero());
        match self {
            Ext::Fin(r) => Ext::Fin(r * c),
            Ext::NegInf if c.is_positive() => Ext::NegInf,
            Ext::NegInf => Ext::PosInf,
            Ext::PosInf if c.is_positive() => Ext::PosInf,
            Ext::PosInf => Ext::NegInf,
        }
    }

    pub fn shift(&self, c: &Rational) -> Ext {
        match self {
            Ext::Fin(r) => Ext::Fin(r + c),
            other => other.clone(),
        }
    }

    pub fn neg(&self) -> Ext {
        self.scale(&-Rational::one())
    }

    /// `self - other`; `None` when both are the same infinity.
    pub fn sub(&self, other: &Ext) -> Option<Ext> {
        match (self, other) {
            (Ext::Fin(a), Ext::Fin(b)) => Some(Ext::Fin(a - b)),
            (Ext::PosInf, Ext::PosInf) | (Ext::NegInf, Ext::NegInf) => None,
            (Ext::PosInf, _) | (_, Ext::NegInf) => Some(Ext::PosInf),
            (Ext::NegInf, _) | (_, Ext::PosInf) => Some(Ext::NegInf),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Ext::NegInf => f64::NEG_INFINITY,
            Ext::PosInf => f64::INFINITY,
            Ext::Fin(r) => to_f64(r),
        }
    }

    pub fn parse(s: &str) -> Result<Ext> {
        match s.trim() {
            "-inf" => Ok(Ext::NegInf),
            "+inf" | "inf" => Ok(Ext::PosInf),
            t => parse_rational(t).map(Ext::Fin),
        }
    }
}

impl From<Rational> for Ext {
    fn from(r: Rational) -> Ext {
        Ext::Fin(r)
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::NegInf => f.write_str("-inf"),
            Ext::PosInf => f.write_str("+inf"),
            Ext::Fin(r) => f.write_str(&format_rational(r)),
        }
    }
}

impl PartialOrd for Ext {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ext {
    fn cmp(&self, other: &Self) -> Ordering {
        use Ext::*;
        match (self, other) {
            (Fin(a), Fin(b)) => a.cmp(b),
            (NegInf, NegInf) | (PosInf, PosInf) => Ordering::Equal,
            (NegInf, _) | (_, PosInf) => Ordering::Less,
            (PosInf, _) | (_, NegInf) => Ordering::Greater,
        }
    }
}

/// serde adapters writing rationals as "p/q" strings.
pub mod serde_rat {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for r in v {
                seq.serialize_element(&format_rational(r))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
            let v = Vec::<String>::deserialize(d)?;
            v.iter()
                .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
                .collect()
        }
    }
}
