//! Fixed-precision midpoint-radius enclosures.
//!
//! A [`Ball`] at precision `p` denotes the closed interval
//! `[(mid - rad) / 2^p, (mid + rad) / 2^p]`. Every operation returns a ball
//! that contains the exact result of the same operation applied to any points
//! of the operand balls.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use super::Dyadic;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ball {
    mid: BigInt,
    rad: u64,
    prec: u32,
}

fn sat(v: &BigUint) -> u64 {
    v.to_u64().unwrap_or(u64::MAX)
}

/// `⌊v / 2^s⌋` together with whether bits were discarded.
fn shr_floor(v: &BigInt, s: u32) -> (BigInt, bool) {
    if s == 0 {
        return (v.clone(), false);
    }
    let q = v >> s as usize; // arithmetic shift floors for negatives
    let inexact = (&q << s as usize) != *v;
    (q, inexact)
}

fn ceil_shr(v: &BigUint, s: u32) -> BigUint {
    if s == 0 {
        return v.clone();
    }
    let q: BigUint = v >> s as usize;
    if (&q << s as usize) != *v {
        q + 1u32
    } else {
        q
    }
}

impl Ball {
    pub fn new(mid: BigInt, rad: u64, prec: u32) -> Self {
        Ball { mid, rad, prec }
    }

    pub fn exact_int(v: i64, prec: u32) -> Self {
        Ball { mid: BigInt::from(v) << prec as usize, rad: 0, prec }
    }

    pub fn zero(prec: u32) -> Self {
        Ball { mid: BigInt::zero(), rad: 0, prec }
    }

    /// Encloses a dyadic value; exact when its scale fits in `prec`.
    pub fn from_dyadic(d: &Dyadic, prec: u32) -> Self {
        if d.scale() <= prec {
            Ball { mid: d.mantissa_at(prec), rad: 0, prec }
        } else {
            let full = d.mantissa_at(d.scale());
            let (q, inexact) = shr_floor(&full, d.scale() - prec);
            Ball { mid: q, rad: inexact as u64, prec }
        }
    }

    pub fn mid(&self) -> &BigInt {
        &self.mid
    }

    pub fn rad(&self) -> u64 {
        self.rad
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.rad == 0
    }

    pub fn lo(&self) -> BigInt {
        &self.mid - BigInt::from(self.rad)
    }

    pub fn hi(&self) -> BigInt {
        &self.mid + BigInt::from(self.rad)
    }

    /// Upper bound on the magnitude, in ulps.
    pub fn mag_hi(&self) -> BigUint {
        self.mid.magnitude() + BigUint::from(self.rad)
    }

    pub fn contains_zero(&self) -> bool {
        self.mid.magnitude() <= &BigUint::from(self.rad)
    }

    /// The midpoint as a dyadic number.
    pub fn mid_dyadic(&self) -> Dyadic {
        Dyadic::from_bigint(&self.mid, self.prec)
    }

    pub fn to_f64(&self) -> f64 {
        self.mid_dyadic().to_f64()
    }

    /// Absolute error bound as `f64` (for reporting only).
    pub fn rad_f64(&self) -> f64 {
        self.rad as f64 * 2f64.powi(-(self.prec as i32))
    }

    /// Re-expresses the ball at another precision.
    pub fn with_prec(&self, prec: u32) -> Ball {
        if prec >= self.prec {
            let s = (prec - self.prec) as usize;
            let rad = BigUint::from(self.rad) << s;
            Ball { mid: &self.mid << s, rad: sat(&rad), prec }
        } else {
            let s = self.prec - prec;
            let (q, inexact) = shr_floor(&self.mid, s);
            let rad = sat(&ceil_shr(&BigUint::from(self.rad), s)).saturating_add(inexact as u64);
            Ball { mid: q, rad, prec }
        }
    }

    pub fn neg(&self) -> Ball {
        Ball { mid: -&self.mid, rad: self.rad, prec: self.prec }
    }

    pub fn add(&self, o: &Ball) -> Ball {
        debug_assert_eq!(self.prec, o.prec);
        Ball { mid: &self.mid + &o.mid, rad: self.rad.saturating_add(o.rad), prec: self.prec }
    }

    pub fn sub(&self, o: &Ball) -> Ball {
        debug_assert_eq!(self.prec, o.prec);
        Ball { mid: &self.mid - &o.mid, rad: self.rad.saturating_add(o.rad), prec: self.prec }
    }

    pub fn mul(&self, o: &Ball) -> Ball {
        debug_assert_eq!(self.prec, o.prec);
        let p = self.prec;
        let (mid, inexact) = shr_floor(&(&self.mid * &o.mid), p);
        let r1 = BigUint::from(self.rad);
        let r2 = BigUint::from(o.rad);
        let spread = self.mid.magnitude() * &r2 + o.mid.magnitude() * &r1 + &r1 * &r2;
        let rad = sat(&ceil_shr(&spread, p)).saturating_add(inexact as u64);
        Ball { mid, rad, prec: p }
    }

    pub fn square(&self) -> Ball {
        self.mul(self)
    }

    pub fn mul_int(&self, k: i64) -> Ball {
        Ball {
            mid: &self.mid * k,
            rad: self.rad.saturating_mul(k.unsigned_abs()),
            prec: self.prec,
        }
    }

    /// Division by a positive integer, rounding the midpoint down.
    pub fn div_u64(&self, d: u64) -> Ball {
        assert!(d > 0);
        let (q, r) = self.mid.div_mod_floor(&BigInt::from(d));
        let rad = self.rad.div_ceil(d) + (!r.is_zero()) as u64;
        Ball { mid: q, rad, prec: self.prec }
    }

    /// Exact halving (one more bit of precision is not added; the midpoint is
    /// floored).
    pub fn half(&self) -> Ball {
        self.div_u64(2)
    }

    /// Magnitude interval `[lo, hi]` of `|x|` in ulps, when the sign is known.
    /// Returns `None` if the ball straddles zero (and is not exactly zero).
    pub fn sign_and_magnitude(&self) -> Option<(bool, BigUint, BigUint)> {
        if self.mid.is_zero() && self.rad == 0 {
            return Some((false, BigUint::zero(), BigUint::zero()));
        }
        let lo = self.lo();
        let hi = self.hi();
        if lo.sign() == Sign::Plus {
            Some((false, lo.magnitude().clone(), hi.magnitude().clone()))
        } else if hi.sign() == Sign::Minus {
            Some((true, hi.magnitude().clone(), lo.magnitude().clone()))
        } else {
            None
        }
    }

    /// `true` if every point of the ball is `<= other`'s every point.
    pub fn certainly_le(&self, o: &Ball) -> bool {
        debug_assert_eq!(self.prec, o.prec);
        self.hi() <= o.lo()
    }

    pub fn abs_mid(&self) -> BigInt {
        self.mid.abs()
    }
}
