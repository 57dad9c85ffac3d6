//! Exact rationals and their text form.
//!
//! Every rational crossing a file boundary is a string `"p/q"` (or `"p"`).
//! Decimal literals such as `"-0.9"` are accepted on input and converted
//! exactly.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Q = BigRational;

/// `n/d` as a big rational. Panics on `d == 0`.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // Ratio::to_f64 only fails on overflow of both parts; divide in steps.
        let n = x.numer().to_f64().unwrap_or(f64::NAN);
        let d = x.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Rational on the dyadic grid `2^-60` nearest to `x`.
///
/// Keeps denominators small when float samples are stored in exact
/// structures. Absolute error is at most `2^-61`.
pub fn from_f64_grid(x: f64) -> Q {
    const SCALE: f64 = (1u64 << 60) as f64;
    let scaled = (x * SCALE).round();
    let n = BigInt::from_str(&format!("{scaled:.0}")).expect("finite float");
    Q::new(n, BigInt::one() << 60usize)
}

/// Exact rational for `x` (which must be finite).
pub fn from_f64_exact(x: f64) -> Q {
    Q::from_float(x).expect("finite float")
}

pub fn floor_to_i64(x: &Q) -> i64 {
    x.floor().to_integer().to_i64().expect("floor fits i64")
}

/// Parses `"p/q"`, `"p"` or a plain decimal like `"-0.125"` / `"1e-3"`.
pub fn parse_q(s: &str) -> Result<Q, String> {
    let t = s.trim();
    if t.is_empty() {
        return Err("empty rational".into());
    }
    if let Ok(r) = Q::from_str(t) {
        if r.denom().is_zero() {
            return Err(format!("zero denominator in {t:?}"));
        }
        return Ok(r);
    }
    parse_decimal(t).ok_or_else(|| format!("not a rational: {t:?}"))
}

fn parse_decimal(t: &str) -> Option<Q> {
    let (mant, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int, frac) = match mant.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mant, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let n = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).ok()?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut r = Q::from_integer(n);
    if scale >= 0 {
        r *= Q::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= Q::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -r } else { r })
}

pub fn fmt_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Wire form of a rational. Serializes as a `"p/q"` string.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RatStr(pub Q);

impl fmt::Display for RatStr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fmt_q(&self.0))
    }
}

impl Serialize for RatStr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_q(&self.0))
    }
}

impl<'de> Deserialize<'de> for RatStr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            S(String),
            I(i64),
        }
        match Raw::deserialize(d)? {
            Raw::S(s) => parse_q(&s).map(RatStr).map_err(serde::de::Error::custom),
            Raw::I(i) => Ok(RatStr(qi(i))),
        }
    }
}

impl From<Q> for RatStr {
    fn from(x: Q) -> Self {
        RatStr(x)
    }
}

/// Float in the 17-significant-digit text form used by CSV outputs.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn q_abs(x: &Q) -> Q {
    x.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fraction_integer_and_decimal() {
        assert_eq!(parse_q("-1/2").unwrap(), q(-1, 2));
        assert_eq!(parse_q("3").unwrap(), qi(3));
        assert_eq!(parse_q("-0.9").unwrap(), q(-9, 10));
        assert_eq!(parse_q("2.5e-1").unwrap(), q(1, 4));
        assert_eq!(parse_q(".5").unwrap(), q(1, 2));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("abc").is_err());
        assert!(parse_q("").is_err());
    }

    #[test]
    fn text_form_round_trips() {
        for x in [q(-1, 2), qi(0), q(22, 7), qi(-5)] {
            assert_eq!(parse_q(&fmt_q(&x)).unwrap(), x);
        }
        let s = serde_json::to_string(&RatStr(q(3, 4))).unwrap();
        assert_eq!(s, "\"3/4\"");
        let back: RatStr = serde_json::from_str(&s).unwrap();
        assert_eq!(back.0, q(3, 4));
    }

    #[test]
    fn grid_rounding_is_close() {
        for x in [0.1, -0.7, 1e-300, 123.456] {
            assert!((to_f64(&from_f64_grid(x)) - x).abs() <= 2f64.powi(-60));
        }
    }
}
