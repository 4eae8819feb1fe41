//! Exact rational scalars and their text form.
//!
//! Every time, volume, speed and energy in the solvers is a [`Scalar`]. The text
//! form is `"num/den"` (or a bare integer when the denominator is one), which is
//! also what the file formats use.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Scalar = BigRational;

pub fn int(v: i64) -> Scalar {
    Scalar::from_integer(BigInt::from(v))
}

/// `num/den`; panics on a zero denominator.
pub fn ratio(num: i64, den: i64) -> Scalar {
    Scalar::new(BigInt::from(num), BigInt::from(den))
}

pub fn zero() -> Scalar {
    Scalar::zero()
}

pub fn one() -> Scalar {
    Scalar::one()
}

pub fn powi(base: &Scalar, exp: u32) -> Scalar {
    let mut acc = Scalar::one();
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

/// Best rational approximation of a finite float (exact binary expansion).
pub fn from_f64(v: f64) -> Option<Scalar> {
    Scalar::from_float(v)
}

pub fn to_f64(v: &Scalar) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Smallest `k ≥ 0` with `2^k ≥ v`; zero for `v ≤ 1`.
pub fn ceil_log2(v: &Scalar) -> u32 {
    let mut k = 0;
    let mut pow = Scalar::one();
    while &pow < v {
        pow *= int(2);
        k += 1;
    }
    k
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational `{input}`: {reason}")]
pub struct ParseScalarError {
    pub input: String,
    pub reason: &'static str,
}

/// Parses `"7"`, `"-3"`, `"281/100"` or a plain decimal such as `"0.25"`.
pub fn parse(text: &str) -> Result<Scalar, ParseScalarError> {
    let err = |reason| ParseScalarError {
        input: text.to_string(),
        reason,
    };
    let s = text.trim();
    if s.is_empty() {
        return Err(err("empty"));
    }
    if let Some((n, d)) = s.split_once('/') {
        let num = parse_int(n.trim()).ok_or_else(|| err("bad numerator"))?;
        let den = parse_int(d.trim()).ok_or_else(|| err("bad denominator"))?;
        if den.is_zero() {
            return Err(err("zero denominator"));
        }
        return Ok(Scalar::new(num, den));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err("bad decimal"));
        }
        let negative = whole.starts_with('-');
        let whole =
            parse_int(if whole.is_empty() || whole == "-" { "0" } else { whole }).ok_or_else(|| err("bad decimal"))?;
        let digits: BigInt = frac.parse().map_err(|_| err("bad decimal"))?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let frac = Scalar::new(digits, scale);
        let whole = Scalar::from_integer(whole);
        return Ok(if negative { whole - frac } else { whole + frac });
    }
    parse_int(s)
        .map(Scalar::from_integer)
        .ok_or_else(|| err("not a number"))
}

fn parse_int(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

pub fn format(v: &Scalar) -> String {
    if v.is_integer() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

/// Display adapter, `format!("{}", Show(&x))`.
pub struct Show<'a>(pub &'a Scalar);

impl fmt::Display for Show<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format(self.0))
    }
}

/// Serde wrapper: integers serialize as JSON numbers, fractions as `"num/den"`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rat(pub Scalar);

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_integer() {
            if let Some(v) = self.0.numer().to_i64() {
                return s.serialize_i64(v);
            }
        }
        s.serialize_str(&format(&self.0))
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct RatVisitor;
        impl Visitor<'_> for RatVisitor {
            type Value = Rat;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an integer or a \"num/den\" string")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rat, E> {
                Ok(Rat(int(v)))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rat, E> {
                Ok(Rat(Scalar::from_integer(BigInt::from(v))))
            }
            fn visit_f64<E: de::Error>(self, _: f64) -> Result<Rat, E> {
                Err(E::custom(
                    "floating-point literal; write rationals as \"num/den\" strings",
                ))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Rat, E> {
                parse(v).map(Rat).map_err(E::custom)
            }
        }
        d.deserialize_any(RatVisitor)
    }
}

/// Exact scalar that also admits +∞, used for "no schedule exists".
pub type Cost = Option<Scalar>;

pub fn cost_le(a: &Cost, b: &Cost) -> bool {
    match (a, b) {
        (_, None) => true,
        (None, Some(_)) => false,
        (Some(x), Some(y)) => x <= y,
    }
}

/// Lowers `slot` to `candidate` if that is smaller.
pub fn relax(slot: &mut Cost, candidate: Scalar) -> bool {
    match slot {
        Some(v) if *v <= candidate => false,
        _ => {
            *slot = Some(candidate);
            true
        }
    }
}

/// Largest index whose cost is at most `budget`.
pub fn max_within(costs: &[Cost], budget: &Scalar) -> Option<usize> {
    costs.iter().rposition(|c| c.as_ref().is_some_and(|c| c <= budget))
}

pub fn is_nonnegative(v: &Scalar) -> bool {
    !v.is_negative()
}

/// Cost scaled to an integer over a common denominator; `None` is +∞.
pub type IntCost = Option<BigInt>;

pub fn relax_int(slot: &mut IntCost, candidate: BigInt) -> bool {
    match slot {
        Some(v) if *v <= candidate => false,
        _ => {
            *slot = Some(candidate);
            true
        }
    }
}

/// Least common multiple of the denominators.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Scalar>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::from(1), |acc, v| num_integer::Integer::lcm(&acc, v.denom()))
}

/// `v * denominator` as an integer; `denominator` must be a multiple of `v`'s.
pub fn scale_to(v: &Scalar, denominator: &BigInt) -> BigInt {
    v.numer() * (denominator / v.denom())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_forms() {
        assert_eq!(parse("281/100").unwrap(), ratio(281, 100));
        assert_eq!(parse("4/2").unwrap(), int(2));
        assert_eq!(parse("-3").unwrap(), int(-3));
        assert_eq!(parse("0.25").unwrap(), ratio(1, 4));
        assert_eq!(parse("-1.5").unwrap(), ratio(-3, 2));
        assert!(parse("1/0").is_err());
        assert!(parse("").is_err());
        assert!(parse("1.").is_err());
        assert!(parse("a/b").is_err());
        assert!(parse("+-1").is_err());
    }

    #[test]
    fn format_is_lowest_terms() {
        assert_eq!(format(&ratio(6, 4)), "3/2");
        assert_eq!(format(&int(5)), "5");
        assert_eq!(format(&ratio(-1, 3)), "-1/3");
    }

    #[test]
    fn ceil_log2_table() {
        assert_eq!(ceil_log2(&int(1)), 0);
        assert_eq!(ceil_log2(&int(8)), 3);
        assert_eq!(ceil_log2(&int(9)), 4);
        assert_eq!(ceil_log2(&ratio(1, 2)), 0);
        assert_eq!(ceil_log2(&int(1024)), 10);
    }

    #[test]
    fn rat_json() {
        let v: Vec<Rat> = serde_json::from_str(r#"[3, "7/4", "-2"]"#).unwrap();
        assert_eq!(v, vec![Rat(int(3)), Rat(ratio(7, 4)), Rat(int(-2))]);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"[3,"7/4",-2]"#);
        assert!(serde_json::from_str::<Rat>("1.5").is_err());
    }
}
