//! Small helpers around [`rug::Float`] so the numerical code reads close to
//! the formulas it implements.

use rug::Float;

use crate::{Error, Real};

pub fn real(prec: u32, v: f64) -> Real {
    Float::with_val(prec, v)
}

pub fn int(prec: u32, v: i64) -> Real {
    Float::with_val(prec, v)
}

/// `num / den` rounded once at `prec` bits.
pub fn ratio(prec: u32, num: i64, den: i64) -> Real {
    let n = Float::with_val(prec, num);
    n / den
}

pub fn pi(prec: u32) -> Real {
    Float::with_val(prec, rug::float::Constant::Pi)
}

/// Parses a decimal literal directly at `prec` bits, avoiding a detour
/// through `f64` (so `"0.1"` is the correctly rounded 0.1).
pub fn parse(prec: u32, s: &str) -> Result<Real, Error> {
    let parsed = Float::parse(s.trim())
        .map_err(|e| Error::InvalidConfig(format!("cannot parse {s:?} as a number: {e}")))?;
    Ok(Float::with_val(prec, parsed))
}

/// Decimal rendering that parses back to the identical value.
pub fn to_decimal(x: &Real) -> String {
    if x.is_zero() {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    x.to_string_radix(10, None)
}

pub fn abs(x: &Real) -> Real {
    x.clone().abs()
}

pub fn max(a: Real, b: &Real) -> Real {
    if *b > a {
        b.clone()
    } else {
        a
    }
}

pub fn min(a: Real, b: &Real) -> Real {
    if *b < a {
        b.clone()
    } else {
        a
    }
}

/// `|a - b| / (1 + max(|a|, |b|))`.
pub fn normalized_diff(a: &Real, b: &Real) -> Real {
    let scale = max(abs(a), &abs(b));
    let d = Float::with_val(a.prec(), a - b).abs();
    d / (scale + 1u32)
}

/// `|a - b| / |b|`, or `|a - b|` when `b` is zero.
pub fn rel_diff(a: &Real, b: &Real) -> Real {
    let d = Float::with_val(a.prec(), a - b).abs();
    if b.is_zero() {
        d
    } else {
        d / b.clone().abs()
    }
}

pub fn is_finite(x: &Real) -> bool {
    x.is_finite()
}

/// `2^-k` at `prec` bits.
pub fn pow2_neg(prec: u32, k: u32) -> Real {
    Float::with_val(prec, 1u32) >> k
}
