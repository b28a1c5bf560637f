//! Exact rational helpers.
//!
//! Densities, energies, and error masses are all ratios of counts bounded by
//! the materialization cap (`|X|^n <= 2^30`), so a reduced `i128` rational is
//! wide enough for every quantity the kernels produce. Closed-form density
//! bounds with large exponents (the tribes estimates) use `BigRational`
//! instead; see [`crate::constructions`].

use num::bigint::BigInt;
use num::rational::Ratio;
use num::{BigRational, One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact rational on `i128`.
pub type Rat = Ratio<i128>;

/// Reduced rational from a numerator/denominator pair.
pub fn rat(num: i128, den: i128) -> Rat {
    Ratio::new(num, den)
}

/// Exact ratio of two unsigned counts.
///
/// Errors if either count exceeds `i128`, which under the materialization cap
/// only happens for tuple-space sizes near the `u128` limit.
pub fn rat_from_counts(num: u128, den: u128) -> Result<Rat> {
    let num = i128::try_from(num).map_err(|_| Error::Overflow(format!("count {num}")))?;
    let den = i128::try_from(den).map_err(|_| Error::Overflow(format!("count {den}")))?;
    Ok(Ratio::new(num, den))
}

/// Parses `"3"`, `"2/5"`, `"0.375"`, or `"-1.5"` into an exact rational.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let bad = || Error::Parse(format!("cannot parse rational from {s:?}"));
    if let Some((num, den)) = s.split_once('/') {
        let num: i128 = num.trim().parse().map_err(|_| bad())?;
        let den: i128 = den.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(Error::Parse("zero denominator".into()));
        }
        return Ok(Ratio::new(num, den));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let negative = int.trim_start().starts_with('-');
        let int: i128 = if int.is_empty() || int == "-" { 0 } else { int.parse().map_err(|_| bad())? };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let frac_num: i128 = frac.parse().map_err(|_| bad())?;
        let den = 10i128
            .checked_pow(frac.len() as u32)
            .ok_or_else(|| Error::Overflow("decimal with too many digits".into()))?;
        let frac_part = Ratio::new(frac_num, den);
        let int_part = Ratio::from_integer(int);
        return Ok(if negative { int_part - frac_part } else { int_part + frac_part });
    }
    let n: i128 = s.parse().map_err(|_| bad())?;
    Ok(Ratio::from_integer(n))
}

/// Formats a rational as `num/den` (always with the denominator, reduced).
pub fn fmt_rat(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Widens to a `BigRational`.
pub fn to_big(r: &Rat) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Nearest `f64` to a `BigRational` (for reporting only; all decisions stay exact).
pub fn big_to_f64(r: &BigRational) -> f64 {
    // Scale into f64 range by removing a common power of two when needed.
    let mut num = r.numer().clone();
    let mut den = r.denom().clone();
    let sign = if num.is_negative() { -1.0 } else { 1.0 };
    num = num.abs();
    while num.bits() > 900 || den.bits() > 900 {
        num >>= 64;
        den >>= 64;
        if den.is_zero() {
            return f64::INFINITY * sign;
        }
    }
    let n = num.to_string().parse::<f64>().unwrap_or(f64::NAN);
    let d = den.to_string().parse::<f64>().unwrap_or(f64::NAN);
    sign * n / d
}

/// Nearest `f64` to a `Rat`.
pub fn rat_to_f64(r: &Rat) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `base^exp` as an exact `BigRational`.
pub fn big_pow(base: &BigRational, exp: u32) -> BigRational {
    let mut acc = BigRational::one();
    let mut b = base.clone();
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            acc *= &b;
        }
        e >>= 1;
        if e > 0 {
            b = &b * &b;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_decimals_integers() {
        assert_eq!(parse_rat("2/5").unwrap(), rat(2, 5));
        assert_eq!(parse_rat("0.1").unwrap(), rat(1, 10));
        assert_eq!(parse_rat("-1.5").unwrap(), rat(-3, 2));
        assert_eq!(parse_rat("7").unwrap(), rat(7, 1));
        assert_eq!(parse_rat(".25").unwrap(), rat(1, 4));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
        assert!(parse_rat("1.2e3").is_err());
    }

    #[test]
    fn formats_reduced() {
        assert_eq!(fmt_rat(&rat(2, 4)), "1/2");
        assert_eq!(fmt_rat(&rat(0, 3)), "0/1");
    }

    #[test]
    fn big_pow_matches_small_cases() {
        let b = BigRational::new(BigInt::from(2), BigInt::from(3));
        let p = big_pow(&b, 5);
        assert_eq!(p, BigRational::new(BigInt::from(32), BigInt::from(243)));
        assert_eq!(big_pow(&b, 0), BigRational::one());
    }
}
