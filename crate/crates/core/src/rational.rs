//! Exact rational utilities and their `"p/q"` text form.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `"p/q"`, `"p"`, or a signed integer string.
pub fn parse(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || Error::input(format!("not a rational: {text:?}"));
    match t.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(p, q))
        }
        None => Ok(Rational::from_integer(t.parse().map_err(|_| bad())?)),
    }
}

/// Canonical text form: `"p/q"` in lowest terms, `"p"` when integral.
pub fn format(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Serde adapter storing a rational as its canonical text form.
pub mod text {
    use super::Rational;

    pub fn serialize<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(r))
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let t = <String as serde::Deserialize>::deserialize(d)?;
        super::parse(&t).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for a list of rationals in text form.
pub mod text_vec {
    use super::Rational;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: serde::Serializer>(rs: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(rs.len()))?;
        for r in rs {
            seq.serialize_element(&super::format(r))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let ts = <Vec<String> as serde::Deserialize>::deserialize(d)?;
        ts.iter()
            .map(|t| super::parse(t).map_err(serde::de::Error::custom))
            .collect()
    }
}
