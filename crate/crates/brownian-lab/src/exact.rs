//! Exact arithmetic helpers: arbitrary-precision rationals plus a point at
//! infinity, as needed for contents and outer measures. Finite f64 inputs
//! embed exactly (every finite double is a dyadic rational), so float interop
//! never introduces rounding into this layer.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

pub type Rat = num_rational::BigRational;

/// Shorthand for small rational literals.
pub fn rat(numer: i64, denom: i64) -> Rat {
    Rat::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact embedding of a finite double.
pub fn rat_from_f64(x: f64) -> Option<Rat> {
    Rat::from_float(x)
}

/// A rational extended with +infinity. Addition is absorbing, comparison
/// places infinity above every finite value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtRat {
    Finite(Rat),
    Infinity,
}

impl ExtRat {
    pub fn zero() -> Self {
        ExtRat::Finite(Rat::zero())
    }

    pub fn from_int(n: i64) -> Self {
        ExtRat::Finite(rat(n, 1))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtRat::Finite(_))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ExtRat::Finite(r) if r.is_zero())
    }

    pub fn is_negative(&self) -> bool {
        matches!(self, ExtRat::Finite(r) if r.is_negative())
    }

    pub fn as_rat(&self) -> Option<&Rat> {
        match self {
            ExtRat::Finite(r) => Some(r),
            ExtRat::Infinity => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtRat::Finite(r) => rat_to_f64(r),
            ExtRat::Infinity => f64::INFINITY,
        }
    }

    /// Exact conversion; `None` for NaN or -infinity.
    pub fn from_f64(x: f64) -> Option<Self> {
        if x == f64::INFINITY {
            Some(ExtRat::Infinity)
        } else {
            rat_from_f64(x).map(ExtRat::Finite)
        }
    }

    pub fn add(&self, other: &ExtRat) -> ExtRat {
        match (self, other) {
            (ExtRat::Finite(a), ExtRat::Finite(b)) => ExtRat::Finite(a + b),
            _ => ExtRat::Infinity,
        }
    }
}

impl PartialOrd for ExtRat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtRat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtRat::Finite(a), ExtRat::Finite(b)) => a.cmp(b),
            (ExtRat::Finite(_), ExtRat::Infinity) => Ordering::Less,
            (ExtRat::Infinity, ExtRat::Finite(_)) => Ordering::Greater,
            (ExtRat::Infinity, ExtRat::Infinity) => Ordering::Equal,
        }
    }
}

impl fmt::Display for ExtRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRat::Finite(r) => write!(f, "{r}"),
            ExtRat::Infinity => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse {0:?} as a rational value")]
pub struct ParseRatError(pub String);

/// Parse `inf`, `p/q`, an integer, or a plain decimal such as `0.25`.
pub fn parse_ext_rat(s: &str) -> Result<ExtRat, ParseRatError> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("inf") {
        return Ok(ExtRat::Infinity);
    }
    parse_rat(t).map(ExtRat::Finite)
}

/// Parse `p/q`, an integer, or a plain decimal (no exponent notation).
pub fn parse_rat(s: &str) -> Result<Rat, ParseRatError> {
    let t = s.trim();
    let err = || ParseRatError(s.to_string());
    if let Some((num, den)) = t.split_once('/') {
        let n = BigInt::from_str(num.trim()).map_err(|_| err())?;
        let d = BigInt::from_str(den.trim()).map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rat::new(n, d));
    }
    if let Some((int_part, frac_part)) = t.split_once('.') {
        let (sign, int_digits) = match int_part.strip_prefix('-') {
            Some(rest) => (-1, rest),
            None => (1, int_part.strip_prefix('+').unwrap_or(int_part)),
        };
        let int_digits = if int_digits.is_empty() { "0" } else { int_digits };
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let whole = BigInt::from_str(int_digits).map_err(|_| err())?;
        let frac = BigInt::from_str(frac_part).map_err(|_| err())?;
        let scale = BigInt::from(10u8).pow(frac_part.len() as u32);
        let numer = (&whole * &scale + frac) * BigInt::from(sign);
        return Ok(Rat::new(numer, scale));
    }
    BigInt::from_str(t).map(|n| Rat::from(n)).map_err(|_| err())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_ext_rat("1/4").unwrap(), ExtRat::Finite(rat(1, 4)));
        assert_eq!(parse_ext_rat("0.25").unwrap(), ExtRat::Finite(rat(1, 4)));
        assert_eq!(parse_ext_rat("-3").unwrap(), ExtRat::from_int(-3));
        assert_eq!(parse_ext_rat("inf").unwrap(), ExtRat::Infinity);
        assert_eq!(parse_ext_rat("2.50").unwrap(), ExtRat::Finite(rat(5, 2)));
        assert!(parse_ext_rat("1/0").is_err());
        assert!(parse_ext_rat("a.b").is_err());
    }

    #[test]
    fn float_embedding_is_exact() {
        assert_eq!(ExtRat::from_f64(0.25).unwrap(), ExtRat::Finite(rat(1, 4)));
        // 0.1 is not exactly 1/10 in binary; the embedding reproduces the
        // actual double, not the decimal it approximates.
        let r = ExtRat::from_f64(0.1).unwrap();
        assert_ne!(r, ExtRat::Finite(rat(1, 10)));
        assert_eq!(r.to_f64(), 0.1);
        assert_eq!(ExtRat::from_f64(f64::INFINITY).unwrap(), ExtRat::Infinity);
        assert!(ExtRat::from_f64(f64::NAN).is_none());
    }

    #[test]
    fn extended_order_and_addition() {
        let half = ExtRat::Finite(rat(1, 2));
        assert!(half < ExtRat::Infinity);
        assert_eq!(half.add(&ExtRat::Infinity), ExtRat::Infinity);
        assert_eq!(half.add(&half), ExtRat::from_int(1));
        assert_eq!(ExtRat::Infinity.add(&ExtRat::Infinity), ExtRat::Infinity);
    }

    #[test]
    fn display_round_trip() {
        for s in ["1/4", "inf", "7", "-2/3"] {
            let v = parse_ext_rat(s).unwrap();
            assert_eq!(parse_ext_rat(&v.to_string()).unwrap(), v);
        }
    }
}
