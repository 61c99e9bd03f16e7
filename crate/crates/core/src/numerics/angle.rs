use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::{pi, truncate, Ball, Dyadic, ExactReal};
use crate::error::{Error, Result};

/// Fractional bits kept for every input angle.
pub const INPUT_PRECISION: u32 = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AngleKind {
    /// θ ∈ [0, 2π)
    Azimuthal,
    /// φ ∈ [−π/2, π/2]
    Elevation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnit {
    Rad,
    #[default]
    Pi,
}

/// A measurement angle in radians. The angle *is* its dyadic value; all
/// exactness claims downstream are relative to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactAngle {
    value: Dyadic,
    kind: AngleKind,
}

/// `num/den · π` as an exact real.
struct PiMultiple {
    num: BigInt,
    den: BigUint,
}

impl ExactReal for PiMultiple {
    fn enclose(&self, prec: u32) -> Ball {
        let work = prec + 8 + self.num.bits() as u32;
        let base = pi(work);
        let k = u64::try_from(self.num.magnitude()).unwrap_or(u64::MAX);
        let prod = Ball::new(base.mid() * &self.num, base.rad().saturating_mul(k), work);
        divide(&prod, &self.den).with_prec(prec)
    }
}

fn divide(b: &Ball, den: &BigUint) -> Ball {
    match u64::try_from(den) {
        Ok(d) => b.div_u64(d),
        Err(_) => {
            // wide denominators: exact big division with a 1-ulp floor
            let d = BigInt::from(den.clone());
            let q = num_integer::Integer::div_floor(b.mid(), &d);
            Ball::new(q, 2 + b.rad() / 2, b.prec())
        }
    }
}

/// Parses a decimal (`"-0.25"`, `"1e-3"` not supported) or fraction
/// (`"1/3"`) literal into `num/den`.
fn parse_rational(text: &str) -> Result<(BigInt, BigUint)> {
    let s = text.trim();
    let bad = || Error::InvalidAngle(format!("cannot parse {text:?}"));
    if let Some((a, b)) = s.split_once('/') {
        let num: BigInt = a.trim().parse().map_err(|_| bad())?;
        let den: BigUint = b.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok((num, den));
    }
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let mag: BigUint = if digits.is_empty() { BigUint::zero() } else { digits.parse().map_err(|_| bad())? };
    let den = num_traits::pow(BigUint::from(10u32), frac_part.len());
    let num = BigInt::from(mag);
    Ok((if negative { -num } else { num }, den))
}

/// Sign-preserving truncation of `num/den` at `scale` bits.
fn truncate_rational(num: &BigInt, den: &BigUint, scale: u32) -> Dyadic {
    let mag = (num.magnitude() << scale as usize) / den;
    Dyadic::new(num.sign() == num_bigint::Sign::Minus, mag, scale)
}

/// Compares a dyadic value against `num/den · π`. Exact because π is
/// irrational, except for the value zero which is handled directly.
pub fn compare_with_pi_multiple(x: &Dyadic, num: i64, den: u64) -> Ordering {
    if num == 0 {
        return x.signum().cmp(&0);
    }
    let target = PiMultiple { num: BigInt::from(num), den: BigUint::from(den) };
    let mut prec = x.scale().max(64) + 16;
    loop {
        let t = target.enclose(prec);
        let v = Ball::from_dyadic(x, prec);
        if v.hi() < t.lo() {
            return Ordering::Less;
        }
        if t.hi() < v.lo() {
            return Ordering::Greater;
        }
        prec *= 2;
    }
}

impl ExactAngle {
    /// Wraps a dyadic value after checking the range for `kind`. Values finer
    /// than [`INPUT_PRECISION`] are truncated toward zero first.
    pub fn new(value: Dyadic, kind: AngleKind) -> Result<Self> {
        let value = if value.scale() > INPUT_PRECISION { value.truncate(INPUT_PRECISION) } else { value };
        let ok = match kind {
            AngleKind::Azimuthal => {
                !value.is_negative() && compare_with_pi_multiple(&value, 2, 1) == Ordering::Less
            }
            AngleKind::Elevation => {
                compare_with_pi_multiple(&value, -1, 2) != Ordering::Less
                    && compare_with_pi_multiple(&value, 1, 2) != Ordering::Greater
            }
        };
        if !ok {
            return Err(Error::InvalidAngle(format!("{} out of range for {:?}", value.to_f64(), kind)));
        }
        Ok(ExactAngle { value, kind })
    }

    pub fn azimuthal(value: Dyadic) -> Result<Self> {
        Self::new(value, AngleKind::Azimuthal)
    }

    pub fn elevation(value: Dyadic) -> Result<Self> {
        Self::new(value, AngleKind::Elevation)
    }

    pub fn zero(kind: AngleKind) -> Self {
        ExactAngle { value: Dyadic::zero(), kind }
    }

    /// Parses a literal in the given unit. `"pi"` values are multiplied by π
    /// and truncated toward zero at [`INPUT_PRECISION`] bits, which keeps
    /// inputs like `0.5` (π/2) inside the closed elevation range.
    pub fn parse(text: &str, unit: AngleUnit, kind: AngleKind) -> Result<Self> {
        let (num, den) = parse_rational(text)?;
        let value = match unit {
            AngleUnit::Rad => truncate_rational(&num, &den, INPUT_PRECISION),
            AngleUnit::Pi => {
                // range is checked on the literal; truncation would pull 2π
                // back under the open bound
                let twice = BigInt::from(2u32) * &num;
                let den_i = BigInt::from(den.clone());
                let in_range = match kind {
                    AngleKind::Azimuthal => num >= BigInt::zero() && num < BigInt::from(2u32) * &den_i,
                    AngleKind::Elevation => twice.magnitude() <= &den,
                };
                if !in_range {
                    return Err(Error::InvalidAngle(format!("{text}·π out of range for {kind:?}")));
                }
                if num.is_zero() {
                    Dyadic::zero()
                } else {
                    truncate(&PiMultiple { num, den }, INPUT_PRECISION)?
                }
            }
        };
        Self::new(value, kind)
    }

    /// `num/den · π`, truncated toward zero.
    pub fn pi_fraction(num: i64, den: u64, kind: AngleKind) -> Result<Self> {
        Self::parse(&format!("{num}/{den}"), AngleUnit::Pi, kind)
    }

    pub fn value(&self) -> &Dyadic {
        &self.value
    }

    pub fn kind(&self) -> AngleKind {
        self.kind
    }

    /// Exact half angle (one more fractional bit).
    pub fn half(&self) -> Dyadic {
        self.value.half()
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }
}

impl fmt::Display for ExactAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_unit_half_stays_in_elevation_range() {
        let phi = ExactAngle::parse("0.5", AngleUnit::Pi, AngleKind::Elevation).unwrap();
        assert!((phi.to_f64() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(compare_with_pi_multiple(phi.value(), 1, 2), Ordering::Less);
        let neg = ExactAngle::parse("-1/2", AngleUnit::Pi, AngleKind::Elevation).unwrap();
        assert_eq!(neg.value(), &-phi.value());
    }

    #[test]
    fn range_checks() {
        assert!(ExactAngle::parse("2", AngleUnit::Pi, AngleKind::Azimuthal).is_err());
        assert!(ExactAngle::parse("6.3", AngleUnit::Rad, AngleKind::Azimuthal).is_err());
        assert!(ExactAngle::parse("6.28", AngleUnit::Rad, AngleKind::Azimuthal).is_ok());
        assert!(ExactAngle::parse("-0.1", AngleUnit::Rad, AngleKind::Azimuthal).is_err());
        assert!(ExactAngle::parse("1.6", AngleUnit::Rad, AngleKind::Elevation).is_err());
        assert!(ExactAngle::parse("abc", AngleUnit::Rad, AngleKind::Elevation).is_err());
    }

    #[test]
    fn rad_literals_truncate_toward_zero() {
        let a = ExactAngle::parse("0.1", AngleUnit::Rad, AngleKind::Elevation).unwrap();
        assert_eq!(a.value().scale(), INPUT_PRECISION);
        assert!(a.to_f64() <= 0.1 && 0.1 - a.to_f64() < 1e-30);
        let b = ExactAngle::parse("-0.1", AngleUnit::Rad, AngleKind::Elevation).unwrap();
        assert_eq!(b.value(), &-a.value());
        let third = ExactAngle::parse("1/3", AngleUnit::Pi, AngleKind::Azimuthal).unwrap();
        assert!((third.to_f64() - std::f64::consts::FRAC_PI_3).abs() < 1e-15);
    }
}
