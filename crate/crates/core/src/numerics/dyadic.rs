//! Sign-magnitude dyadic rationals `±m / 2^scale`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, ToPrimitive, Zero};

/// A signed fixed-point number `sign · magnitude / 2^scale`.
///
/// The representation is sign-magnitude: truncation floors the magnitude, so
/// refining the scale by one appends exactly one bit to the magnitude while the
/// sign stays put. Zero is always stored as non-negative.
#[derive(Clone, Debug)]
pub struct Dyadic {
    negative: bool,
    magnitude: BigUint,
    scale: u32,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic { negative: false, magnitude: BigUint::zero(), scale: 0 }
    }

    pub fn one() -> Self {
        Dyadic { negative: false, magnitude: BigUint::one(), scale: 0 }
    }

    pub fn new(negative: bool, magnitude: BigUint, scale: u32) -> Self {
        let negative = negative && !magnitude.is_zero();
        Dyadic { negative, magnitude, scale }
    }

    pub fn from_int(v: i64) -> Self {
        Dyadic::new(v < 0, BigUint::from(v.unsigned_abs()), 0)
    }

    /// `mantissa / 2^scale` from a two's-complement integer.
    pub fn from_bigint(mantissa: &BigInt, scale: u32) -> Self {
        let negative = mantissa.sign() == Sign::Minus;
        Dyadic::new(negative, mantissa.magnitude().clone(), scale)
    }

    pub fn from_u128(magnitude: u128, scale: u32) -> Self {
        Dyadic::new(false, BigUint::from(magnitude), scale)
    }

    /// Exact conversion of a finite `f64` (every finite double is dyadic).
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "non-finite value {x}");
        if x == 0.0 {
            return Dyadic::zero();
        }
        let bits = x.abs().to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
        let mag = BigUint::from(mant);
        if e >= 0 {
            Dyadic::new(x < 0.0, mag << e as usize, 0)
        } else {
            Dyadic::new(x < 0.0, mag, (-e) as u32).normalized()
        }
    }

    /// Parses a binary fraction such as `"0.111"`, `"-0.0101"` or `"1"`.
    pub fn from_binary_str(s: &str) -> Option<Self> {
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        let digits: String = format!("{int_part}{frac_part}");
        let mag = if digits.is_empty() {
            BigUint::zero()
        } else {
            BigUint::parse_bytes(digits.as_bytes(), 2)?
        };
        Some(Dyadic::new(negative, mag, frac_part.len() as u32))
    }

    pub fn is_zero(&self) -> bool {
        self.magnitude.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    /// `-1`, `0` or `+1`.
    pub fn signum(&self) -> i32 {
        if self.is_zero() {
            0
        } else if self.negative {
            -1
        } else {
            1
        }
    }

    pub fn magnitude(&self) -> &BigUint {
        &self.magnitude
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn abs(&self) -> Dyadic {
        Dyadic { negative: false, ..self.clone() }
    }

    /// Same value at a finer scale. Panics if `scale` is coarser than the
    /// current one.
    pub fn with_scale(&self, scale: u32) -> Dyadic {
        assert!(scale >= self.scale, "with_scale would lose bits");
        Dyadic {
            negative: self.negative,
            magnitude: &self.magnitude << (scale - self.scale) as usize,
            scale,
        }
    }

    /// Sign-preserving truncation: `sign(x) · ⌊|x| · 2^ℓ⌋ / 2^ℓ`.
    pub fn truncate(&self, scale: u32) -> Dyadic {
        if scale >= self.scale {
            self.with_scale(scale)
        } else {
            Dyadic::new(self.negative, &self.magnitude >> (self.scale - scale) as usize, scale)
        }
    }

    /// Drops trailing zero bits of the magnitude.
    pub fn normalized(&self) -> Dyadic {
        if self.is_zero() {
            return Dyadic::zero();
        }
        let tz = self.magnitude.trailing_zeros().unwrap_or(0).min(self.scale as u64) as u32;
        Dyadic::new(self.negative, &self.magnitude >> tz as usize, self.scale - tz)
    }

    /// Two's-complement mantissa at a scale no coarser than the current one.
    pub fn mantissa_at(&self, scale: u32) -> BigInt {
        let m = BigInt::from_biguint(Sign::Plus, self.magnitude.clone()) << (scale - self.scale) as usize;
        if self.negative {
            -m
        } else {
            m
        }
    }

    pub fn half(&self) -> Dyadic {
        Dyadic::new(self.negative, self.magnitude.clone(), self.scale + 1)
    }

    pub fn square(&self) -> Dyadic {
        Dyadic::new(false, &self.magnitude * &self.magnitude, self.scale * 2)
    }

    pub fn to_f64(&self) -> f64 {
        let bits = self.magnitude.bits();
        let v = if bits > 1000 {
            let shift = bits - 900;
            let top = (&self.magnitude >> shift as usize).to_f64().unwrap_or(f64::INFINITY);
            top * 2f64.powi(shift as i32 - self.scale as i32)
        } else {
            let m = self.magnitude.to_f64().unwrap_or(f64::INFINITY);
            let mut v = m;
            let mut s = self.scale as i32;
            while s > 1000 {
                v *= 2f64.powi(-1000);
                s -= 1000;
            }
            v * 2f64.powi(-s)
        };
        if self.negative {
            -v
        } else {
            v
        }
    }

    /// Binary rendering like `0.011`, padded to the scale.
    pub fn to_binary_string(&self) -> String {
        let digits = self.magnitude.to_str_radix(2);
        let scale = self.scale as usize;
        let padded = if digits.len() <= scale {
            format!("{}{}", "0".repeat(scale + 1 - digits.len()), digits)
        } else {
            digits
        };
        let (int_part, frac_part) = padded.split_at(padded.len() - scale);
        let sign = if self.negative { "-" } else { "" };
        if frac_part.is_empty() {
            format!("{sign}{int_part}")
        } else {
            format!("{sign}{int_part}.{frac_part}")
        }
    }
}

impl PartialEq for Dyadic {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Dyadic {}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.signum(), other.signum()) {
            (a, b) if a != b => return a.cmp(&b),
            (0, 0) => return Ordering::Equal,
            _ => {}
        }
        let scale = self.scale.max(other.scale);
        let a = &self.magnitude << (scale - self.scale) as usize;
        let b = &other.magnitude << (scale - other.scale) as usize;
        if self.negative {
            b.cmp(&a)
        } else {
            a.cmp(&b)
        }
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic::new(!self.negative, self.magnitude.clone(), self.scale)
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        -&self
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        Dyadic::new(self.negative != rhs.negative, &self.magnitude * &rhs.magnitude, self.scale + rhs.scale)
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        let scale = self.scale.max(rhs.scale);
        let a = &self.magnitude << (scale - self.scale) as usize;
        let b = &rhs.magnitude << (scale - rhs.scale) as usize;
        if self.negative == rhs.negative {
            return Dyadic::new(self.negative, a + b, scale);
        }
        match a.cmp(&b) {
            Ordering::Equal => Dyadic { scale, ..Dyadic::zero() },
            Ordering::Greater => Dyadic::new(self.negative, a - b, scale),
            Ordering::Less => Dyadic::new(rhs.negative, b - a, scale),
        }
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        self + &(-rhs)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Dyadic {
            type Output = Dyadic;
            fn $m(self, rhs: Dyadic) -> Dyadic {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let d = Dyadic::from_binary_str("0.111").unwrap();
        assert_eq!(d, Dyadic::from_f64(0.875));
        assert_eq!(d.to_binary_string(), "0.111");
        assert_eq!(Dyadic::from_binary_str("-0.0101").unwrap().to_f64(), -0.3125);
    }

    #[test]
    fn truncation_floors_magnitude() {
        let d = Dyadic::from_f64(-0.8125); // -0.1101
        assert_eq!(d.truncate(2), Dyadic::from_f64(-0.75));
        assert_eq!(d.truncate(1), Dyadic::from_f64(-0.5));
        assert_eq!(d.truncate(0), Dyadic::zero());
        assert!(!d.truncate(0).is_negative());
    }

    #[test]
    fn arithmetic_matches_f64() {
        let a = Dyadic::from_f64(0.375);
        let b = Dyadic::from_f64(-1.25);
        assert_eq!((&a + &b).to_f64(), -0.875);
        assert_eq!((&a - &b).to_f64(), 1.625);
        assert_eq!((&a * &b).to_f64(), -0.46875);
        assert_eq!((&b - &b), Dyadic::zero());
        assert!(b < a);
    }

    #[test]
    fn from_f64_subnormal_and_large() {
        let tiny = Dyadic::from_f64(f64::MIN_POSITIVE / 4.0);
        assert!(tiny.scale() > 1000);
        assert_eq!(Dyadic::from_f64(3.0 * 2f64.powi(70)).to_f64(), 3.0 * 2f64.powi(70));
    }
}
