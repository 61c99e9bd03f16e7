//! π, sine and cosine on [`Ball`]s with rigorous error radii.

use std::sync::RwLock;

use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};

use super::Ball;

static PI_CACHE: RwLock<Option<Ball>> = RwLock::new(None);

const MIN_PI_PREC: u32 = 640;

/// `atan(1/x)` at precision `prec`, with the radius covering all rounding and
/// the series tail.
fn atan_inv(x: u64, prec: u32) -> Ball {
    let x2 = BigUint::from(x) * x;
    // power_k ≈ 2^prec / x^(2k+1); each floor adds < 1 ulp and earlier errors
    // shrink by x², so the power error stays below 2 ulps.
    let mut power = (BigUint::from(1u32) << prec as usize) / x;
    let mut sum = BigInt::zero();
    let mut terms: u64 = 0;
    let mut k: u64 = 0;
    loop {
        let term = &power / (2 * k + 1);
        if term.is_zero() {
            break;
        }
        if k.is_multiple_of(2) {
            sum += BigInt::from(term);
        } else {
            sum -= BigInt::from(term);
        }
        terms += 1;
        power /= &x2;
        k += 1;
    }
    // per term: < 2 ulps from the power, < 1 from the division; tail < 1 ulp.
    Ball::new(sum, 3 * terms + 2, prec)
}

fn compute_pi(prec: u32) -> Ball {
    let work = prec + 32;
    let a = atan_inv(5, work).mul_int(16);
    let b = atan_inv(239, work).mul_int(4);
    a.sub(&b).with_prec(prec)
}

/// π enclosed at precision `prec`. The highest-precision value computed so far
/// is kept in a process-wide cache and only ever replaced by a finer one.
pub fn pi(prec: u32) -> Ball {
    if let Some(cached) = PI_CACHE.read().expect("pi cache poisoned").as_ref() {
        if cached.prec() >= prec {
            return cached.with_prec(prec);
        }
    }
    let mut guard = PI_CACHE.write().expect("pi cache poisoned");
    if let Some(cached) = guard.as_ref() {
        if cached.prec() >= prec {
            return cached.with_prec(prec);
        }
    }
    let target = prec.max(MIN_PI_PREC).max(guard.as_ref().map_or(0, |c| c.prec() * 2));
    let fresh = compute_pi(target);
    let out = fresh.with_prec(prec);
    *guard = Some(fresh);
    out
}

fn approx_f64(b: &Ball) -> f64 {
    let bits = b.mid().bits();
    let shift = bits.saturating_sub(60);
    let top = (b.mid() >> shift as usize).to_f64().unwrap_or(0.0);
    top * 2f64.powi(shift as i32 - b.prec() as i32)
}

/// Taylor sums of sin and cos for a reduced argument `|r| <= 1`.
fn taylor(r: &Ball) -> (Ball, Ball) {
    let p = r.prec();
    let r2 = r.square();
    let tail_bound = |t: &Ball| t.mag_hi().to_u64().unwrap_or(u64::MAX);

    let mut sin = r.clone();
    let mut term = r.clone();
    let mut k: u64 = 1;
    loop {
        term = term.mul(&r2).div_u64((k + 1) * (k + 2)).neg();
        k += 2;
        let bound = tail_bound(&term);
        if bound <= 2 {
            // alternating with decreasing magnitude: the remainder is bounded
            // by its first term
            sin = Ball::new(sin.mid().clone(), sin.rad().saturating_add(bound), p);
            break;
        }
        sin = sin.add(&term);
    }

    let mut cos = Ball::exact_int(1, p);
    let mut term = Ball::exact_int(1, p);
    let mut k: u64 = 0;
    loop {
        term = term.mul(&r2).div_u64((k + 1) * (k + 2)).neg();
        k += 2;
        let bound = tail_bound(&term);
        if bound <= 2 {
            cos = Ball::new(cos.mid().clone(), cos.rad().saturating_add(bound), p);
            break;
        }
        cos = cos.add(&term);
    }
    (sin, cos)
}

/// Encloses `(sin x, cos x)` for every `x` in the ball `arg`, at the ball's
/// precision. An exactly-zero argument gives exact results.
pub fn sin_cos(arg: &Ball) -> (Ball, Ball) {
    let prec = arg.prec();
    if arg.mid().is_zero() && arg.is_exact() {
        return (Ball::zero(prec), Ball::exact_int(1, prec));
    }
    let approx = approx_f64(arg);
    let quadrant = (approx / std::f64::consts::FRAC_PI_2).round() as i64;
    let q_bits = 64 - quadrant.unsigned_abs().leading_zeros();
    let work = prec + 24 + q_bits;
    let x = arg.with_prec(work);
    let r = if quadrant == 0 {
        x
    } else {
        x.sub(&pi(work).half().mul_int(quadrant))
    };
    let (s, c) = taylor(&r);
    let (s, c) = match quadrant.rem_euclid(4) {
        0 => (s, c),
        1 => (c, s.neg()),
        2 => (s.neg(), c.neg()),
        _ => (c.neg(), s),
    };
    (s.with_prec(prec), c.with_prec(prec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Dyadic;

    #[test]
    fn pi_digits() {
        let p = pi(200);
        // 1/π... compare the leading 50 bits against the f64 constant
        assert!((p.to_f64() - std::f64::consts::PI).abs() < 1e-15);
        assert!(p.rad() <= 2);
        // Refining the cache keeps older prefixes consistent.
        let fine = pi(2000).with_prec(200);
        assert!((fine.mid() - p.mid()).magnitude().to_u64().unwrap() <= 4);
    }

    #[test]
    fn sin_cos_matches_f64_across_quadrants() {
        for &x in &[0.1, 1.0, 2.0, -2.5, 3.9, 7.0, -11.0, 40.0] {
            let b = Ball::from_dyadic(&Dyadic::from_f64(x), 120);
            let (s, c) = sin_cos(&b);
            assert!((s.to_f64() - f64::sin(x)).abs() < 1e-14, "sin {x}");
            assert!((c.to_f64() - f64::cos(x)).abs() < 1e-14, "cos {x}");
            assert!(s.rad() < 1 << 16 && c.rad() < 1 << 16);
        }
    }

    #[test]
    fn zero_argument_is_exact() {
        let (s, c) = sin_cos(&Ball::zero(64));
        assert!(s.is_exact() && c.is_exact());
        assert_eq!(c.mid_dyadic(), Dyadic::one());
    }
}
