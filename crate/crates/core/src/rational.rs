//! Exact number types and small helpers around them.
//!
//! Two representations are used. [`Rational`] (a ratio of `i128`) carries item
//! sizes, parameter tables and everything the online packers touch, where the
//! denominators stay small. [`Q`] (a ratio of big integers) carries weights and
//! the certifier, where products and sums of many parameters appear.

use alloc::format;
use alloc::string::{String, ToString};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{CheckedDiv, One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

pub type Rational = Ratio<i128>;
pub type Q = num_rational::BigRational;

pub fn rat(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

pub fn to_q(r: &Rational) -> Q {
    Q::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

pub fn q_int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Converts back to the fixed-width type, failing if the value does not fit.
pub fn from_q(q: &Q) -> Result<Rational> {
    let n = q.numer().to_i128().ok_or(Error::Overflow("rational numerator"))?;
    let d = q.denom().to_i128().ok_or(Error::Overflow("rational denominator"))?;
    Ok(Rational::new(n, d))
}

pub fn to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn q_to_f64(q: &Q) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// `⌊r · n⌋` for a non-negative rational `r`.
pub fn floor_mul(r: &Rational, n: u64) -> u64 {
    let v = r.numer() * n as i128 / r.denom();
    v as u64
}

/// Parses `"353/500"`, `"0.706"`, `"7"`, `"-1.5"` or `"1e-4"` into an exact
/// rational. Decimal literals are read as exact base-10 fractions.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let err = || Error::Parse(s.to_string());
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_decimal(n.trim()).ok_or_else(err)?;
        let d = parse_decimal(d.trim()).ok_or_else(err)?;
        if d.is_zero() {
            return Err(err());
        }
        return n.checked_div(&d).ok_or_else(err);
    }
    parse_decimal(s).ok_or_else(err)
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(p) => (&s[..p], s[p + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut numer: i128 = 0;
    for b in int_part.bytes().chain(frac_part.bytes()) {
        numer = numer.checked_mul(10)?.checked_add((b - b'0') as i128)?;
    }
    let scale = exp - frac_part.len() as i32;
    let pow = 10i128.checked_pow(scale.unsigned_abs())?;
    let mut r = if scale >= 0 { Rational::from_integer(numer.checked_mul(pow)?) } else { Rational::new(numer, pow) };
    if neg {
        r = -r;
    }
    Some(r)
}

/// Renders `q` with `places` decimals, rounding half to even.
pub fn render_decimal(q: &Q, places: u32) -> String {
    let scale = BigInt::from(10u32).pow(places);
    let scaled = q * Q::from_integer(scale.clone());
    let floor = scaled.floor();
    let frac = &scaled - &floor;
    let half = Q::new(BigInt::one(), BigInt::from(2));
    let mut units = floor.to_integer();
    if frac > half || (frac == half && units.is_odd()) {
        units += 1;
    }
    let neg = units.is_negative();
    let abs = units.abs();
    let (int_part, frac_part) = abs.div_rem(&scale);
    let sign = if neg { "-" } else { "" };
    if places == 0 {
        return format!("{sign}{int_part}");
    }
    let frac_digits = frac_part.to_string();
    let pad = places as usize - frac_digits.len();
    format!("{sign}{int_part}.{}{frac_digits}", "0".repeat(pad))
}

/// Renders a fixed-width rational as `p/q` (or `p` when integral).
pub fn render_fraction(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
