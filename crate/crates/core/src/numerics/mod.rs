//! Exact dyadic arithmetic, on-demand truncations of transcendental values
//! and the truncated product tree.

mod angle;
mod ball;
mod dyadic;
mod trig;

pub use angle::{compare_with_pi_multiple, AngleKind, AngleUnit, ExactAngle, INPUT_PRECISION};
pub use ball::Ball;
pub use dyadic::Dyadic;
pub use trig::{pi, sin_cos};

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Largest truncation scale accepted by [`eval_cs_truncation`].
pub const L_MAX: u32 = 4096;

/// Guard bits tried first when resolving a truncation.
pub const INITIAL_GUARD: u32 = 16;

/// Guard-bit cap for a truncation at scale `ell`.
pub fn max_guard(ell: u32) -> u32 {
    8 * ell + 256
}

/// `⌈log₂ n⌉`, with `ceil_log2(0) = ceil_log2(1) = 0`.
pub fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

/// A real number that can be enclosed to any precision.
pub trait ExactReal {
    /// A ball at precision `prec` containing the value. Its radius must
    /// shrink as `prec` grows.
    fn enclose(&self, prec: u32) -> Ball;

    /// The value itself, when it is a dyadic rational.
    fn exact(&self) -> Option<Dyadic> {
        None
    }
}

impl ExactReal for Dyadic {
    fn enclose(&self, prec: u32) -> Ball {
        Ball::from_dyadic(self, prec)
    }

    fn exact(&self) -> Option<Dyadic> {
        Some(self.clone())
    }
}

/// Which of the two per-party amplitude factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsFactor {
    /// `cos(½(φ − πx/2))`
    Cos,
    /// `−sin(½(φ − πx/2))`
    NegSin,
}

/// The amplitude factor of one party for a given outcome.
#[derive(Debug, Clone)]
pub struct CsReal {
    pub phi: Dyadic,
    pub x: i8,
    pub factor: CsFactor,
}

/// The reduced argument `½(φ − πx/2) = φ/2 − xπ/4`.
fn cs_argument(phi: &Dyadic, x: i8, prec: u32) -> Ball {
    let half = Ball::from_dyadic(&phi.half(), prec);
    let quarter_pi = pi(prec + 2).div_u64(4).with_prec(prec);
    if x > 0 {
        half.sub(&quarter_pi)
    } else {
        half.add(&quarter_pi)
    }
}

impl ExactReal for CsReal {
    fn enclose(&self, prec: u32) -> Ball {
        let work = prec + 8;
        let (s, c) = sin_cos(&cs_argument(&self.phi, self.x, work));
        match self.factor {
            CsFactor::Cos => c.with_prec(prec),
            CsFactor::NegSin => s.neg().with_prec(prec),
        }
    }
}

/// `(1 + sin φ)/2`, the squared amplitude of the `+1` outcome of an
/// equatorial-plane rotation by `φ`.
#[derive(Debug, Clone)]
pub struct AlphaSquared {
    pub phi: Dyadic,
}

impl ExactReal for AlphaSquared {
    fn enclose(&self, prec: u32) -> Ball {
        let work = prec + 8;
        let (s, _) = sin_cos(&Ball::from_dyadic(&self.phi, work));
        s.add(&Ball::exact_int(1, work)).div_u64(2).with_prec(prec)
    }

    fn exact(&self) -> Option<Dyadic> {
        self.phi.is_zero().then(|| Dyadic::from_u128(1, 1))
    }
}

/// Precision bookkeeping for one approximation step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorBudget {
    /// Target precision in bits.
    pub k: u32,
    /// Working truncation scale.
    pub ell: u32,
    /// Extra evaluation bits.
    pub guard: u32,
}

impl ErrorBudget {
    pub fn new(k: u32, ell: u32, guard: u32) -> Result<Self> {
        if ell < k || guard < 1 {
            return Err(Error::InvalidConfig(format!("bad error budget k={k} ell={ell} guard={guard}")));
        }
        Ok(ErrorBudget { k, ell, guard })
    }

    /// Scale used by the truncated product tree over `n` leaves.
    pub fn for_tree(k: u32, n: usize) -> Self {
        ErrorBudget { k, ell: k + ceil_log2(n) + 1, guard: 1 }
    }

    /// Scale for the half-angle sum when approximating `cos²` of it.
    pub fn for_angle_sum(k: u32, n: usize) -> Self {
        ErrorBudget { k, ell: k + ceil_log2(n) + 1, guard: 1 }
    }
}

/// `sign(x)·⌊|x|·2^ℓ⌋/2^ℓ`.
///
/// Encloses `x` with increasing guard bits until both ends of the enclosure
/// truncate to the same value. Balls that straddle zero resolve when they
/// lie strictly inside `(−2^−ℓ, 2^−ℓ)`.
pub fn truncate<X: ExactReal + ?Sized>(x: &X, ell: u32) -> Result<Dyadic> {
    if let Some(d) = x.exact() {
        return Ok(d.truncate(ell));
    }
    let cap = max_guard(ell);
    let mut guard = INITIAL_GUARD;
    loop {
        let ball = x.enclose(ell + guard);
        if let Some(d) = resolve_truncation(&ball, ell) {
            return Ok(d);
        }
        if guard >= cap {
            return Err(Error::PrecisionExhausted { scale: ell, guard });
        }
        guard = (guard * 2).min(cap);
    }
}

/// The `ℓ`-truncation shared by every point of `ball`, if there is one.
pub fn resolve_truncation(ball: &Ball, ell: u32) -> Option<Dyadic> {
    let guard = ball.prec().checked_sub(ell)? as usize;
    match ball.sign_and_magnitude() {
        Some((negative, lo, hi)) => {
            let a: BigUint = lo >> guard;
            let b: BigUint = hi >> guard;
            (a == b).then(|| Dyadic::new(negative, a, ell))
        }
        None => {
            let unit = BigUint::one() << guard;
            let lo = ball.lo();
            let hi = ball.hi();
            (lo.magnitude() < &unit && hi.magnitude() < &unit).then(|| Dyadic::new(false, BigUint::zero(), ell))
        }
    }
}

/// Exact product of two dyadics, magnitude-floored to scale `ℓ`.
pub fn mul_truncate(a: &Dyadic, b: &Dyadic, ell: u32) -> Dyadic {
    (a * b).truncate(ell)
}

/// Pairs multiplied at each level of the binomial tree over `n` parties
/// (0-based). At level `i` with stride `m = 2^i`, party `j` (a multiple of
/// `2m`) absorbs party `j + m`. Pairs whose partner is a virtual party are
/// omitted: the virtual value is 1 and nothing is sent.
pub fn binomial_tree_levels(n: usize) -> Vec<Vec<(usize, usize)>> {
    let depth = ceil_log2(n);
    (0..depth)
        .map(|level| {
            let m = 1usize << level;
            (0..n).step_by(2 * m).filter(|j| j + m < n).map(|j| (j, j + m)).collect()
        })
        .collect()
}

/// Reduces values already truncated at scale `ℓ` along the binomial tree.
pub fn tree_reduce_truncated(mut values: Vec<Dyadic>, ell: u32) -> Dyadic {
    if values.is_empty() {
        return Dyadic::one();
    }
    for level in binomial_tree_levels(values.len()) {
        for (j, partner) in level {
            values[j] = mul_truncate(&values[j], &values[partner], ell);
        }
    }
    values.swap_remove(0)
}

/// Product of the leaves to within `2^−k`: every leaf and every partial
/// product is truncated at `ℓ = k + ⌈log₂ n⌉ + 1`, so the error after `m`
/// levels is below `2^{m+1−ℓ} ≤ 2^−k`.
pub fn tree_reduce_product<X: ExactReal>(leaves: &[X], k: u32) -> Result<Dyadic> {
    let budget = ErrorBudget::for_tree(k, leaves.len());
    let values = leaves.iter().map(|x| truncate(x, budget.ell)).collect::<Result<Vec<_>>>()?;
    Ok(tree_reduce_truncated(values, budget.ell))
}

/// The `ℓ`-truncations of `cos(½(φ − πx/2))` and `−sin(½(φ − πx/2))`.
pub fn eval_cs_truncation(phi: &ExactAngle, x: i8, ell: u32) -> Result<(Dyadic, Dyadic)> {
    if ell > L_MAX {
        return Err(Error::InvalidConfig(format!("truncation scale {ell} exceeds {L_MAX}")));
    }
    let c = CsReal { phi: phi.value().clone(), x, factor: CsFactor::Cos };
    let s = CsReal { phi: phi.value().clone(), x, factor: CsFactor::NegSin };
    Ok((truncate(&c, ell)?, truncate(&s, ell)?))
}

/// A `k`-bit approximation of `cos²(ϑ)` from truncated half angles.
///
/// The half angles are summed exactly. With inputs at scale
/// `ℓ ≥ k + ⌈log₂ n⌉ + 1` the sum is off by at most `n/2^ℓ ≤ 2^−(k+1)`, and
/// `cos²` has slope at most 1, so evaluating within `2^−(k+1)` suffices.
pub fn approx_cos2_sum(half_angle_truncations: &[Dyadic], k: u32) -> Result<Dyadic> {
    let sum = half_angle_truncations.iter().fold(Dyadic::zero(), |acc, t| &acc + t);
    if sum.is_zero() {
        return Ok(Dyadic::one());
    }
    let prec = k + 16;
    let (_, c) = sin_cos(&Ball::from_dyadic(&sum, prec + 8));
    let c2 = c.square().with_prec(prec);
    // rad < 2^14 keeps the evaluation error under 2^−(k+2)
    if c2.rad() >= 1 << 14 {
        return Err(Error::PrecisionExhausted { scale: k, guard: 16 });
    }
    Ok(c2.mid_dyadic())
}

/// Truncates `x` at `ℓ` given its truncation at a finer scale.
pub fn refine_from(finer: &Dyadic, ell: u32) -> Dyadic {
    debug_assert!(ell <= finer.scale());
    finer.truncate(ell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bin(s: &str) -> Dyadic {
        Dyadic::from_binary_str(s).unwrap()
    }

    #[test]
    fn truncate_examples() {
        assert_eq!(truncate(&bin("0.1111"), 3).unwrap(), bin("0.111"));
        assert_eq!(truncate(&Dyadic::zero(), 17).unwrap(), Dyadic::zero());
        let phi = ExactAngle::zero(AngleKind::Elevation);
        // cos(−π/4) = cos(π/4)
        let (c, s) = eval_cs_truncation(&phi, 1, 8).unwrap();
        assert_eq!(c, Dyadic::from_u128(181, 8));
        assert_eq!(s, Dyadic::from_u128(181, 8));
    }

    #[test]
    fn mul_truncate_examples() {
        assert_eq!(mul_truncate(&bin("0.111"), &bin("0.100"), 3), bin("0.011"));
        assert_eq!(mul_truncate(&bin("0.1111"), &bin("0.1001"), 4), bin("0.1000"));
        let d = bin("-0.1011");
        assert_eq!(mul_truncate(&Dyadic::one(), &d, 4), d);
    }

    #[test]
    fn cs_at_the_poles() {
        let up = ExactAngle::parse("0.5", AngleUnit::Pi, AngleKind::Elevation).unwrap();
        for ell in [1, 8, 40, 100] {
            // φ sits just below π/2, so cos of the tiny negative argument is
            // just below 1
            let (c, s) = eval_cs_truncation(&up, 1, ell).unwrap();
            assert_eq!(c, &Dyadic::one() - &Dyadic::from_u128(1, ell));
            assert!(s.is_zero());
            let (c, s) = eval_cs_truncation(&up, -1, ell).unwrap();
            assert!(c.is_zero());
            assert_eq!(s, -&(&Dyadic::one() - &Dyadic::from_u128(1, ell)));
        }
    }

    #[test]
    fn tree_examples() {
        let ones = vec![Dyadic::one(); 4];
        assert_eq!(tree_reduce_product(&ones, 10).unwrap(), Dyadic::one());
        let nine = Dyadic::from_u128(9, 0);
        let ten = Dyadic::from_u128(10, 0);
        // 0.9 is not dyadic; use its 60-bit truncation as an exact leaf
        let leaf = Dyadic::new(false, (nine.magnitude() << 60usize) / ten.magnitude(), 60);
        let leaves = vec![leaf.clone(); 4];
        let got = tree_reduce_product(&leaves, 20).unwrap();
        let exact = &(&leaf * &leaf) * &(&leaf * &leaf);
        assert!((&got - &exact).abs() <= Dyadic::from_u128(1, 20));
        assert!((got.to_f64() - 0.6561).abs() < 2f64.powi(-20));
        assert_eq!(ErrorBudget::for_tree(7, 4).ell, 10);
    }

    #[test]
    fn tree_levels_skip_virtual_parties() {
        assert_eq!(binomial_tree_levels(1), Vec::<Vec<(usize, usize)>>::new());
        assert_eq!(binomial_tree_levels(5), vec![vec![(0, 1), (2, 3)], vec![(0, 2)], vec![(0, 4)]]);
        for n in 2..40 {
            assert!(binomial_tree_levels(n).iter().all(|l| !l.is_empty()));
        }
    }

    #[test]
    fn cos2_sum_examples() {
        assert_eq!(approx_cos2_sum(&[Dyadic::zero(), Dyadic::zero()], 30).unwrap(), Dyadic::one());
        let quarter = ExactAngle::pi_fraction(1, 4, AngleKind::Azimuthal).unwrap();
        let v = approx_cos2_sum(&[quarter.value().clone()], 10).unwrap();
        assert!((v.to_f64() - 0.5).abs() <= 2f64.powi(-10));
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!([1, 2, 3, 4, 5, 8, 9].map(ceil_log2), [0, 1, 2, 2, 3, 3, 4]);
    }

    #[test]
    fn guard_cap_is_reported() {
        struct Stubborn;
        impl ExactReal for Stubborn {
            // an enclosure that never shrinks below the first truncation bit
            fn enclose(&self, prec: u32) -> Ball {
                Ball::new(num_bigint::BigInt::one() << (prec - 1) as usize, 1, prec)
            }
        }
        assert!(matches!(truncate(&Stubborn, 4), Err(Error::PrecisionExhausted { scale: 4, .. })));
    }

    fn arb_unit_dyadic() -> impl Strategy<Value = Dyadic> {
        (any::<bool>(), any::<u64>(), 1u32..=64).prop_map(|(neg, m, scale)| {
            let mag = BigUint::from(m) >> (64 - scale) as usize;
            Dyadic::new(neg, mag, scale)
        })
    }

    proptest! {
        #[test]
        fn truncation_is_incremental(phi in -1.5f64..1.5, x in prop_oneof![Just(1i8), Just(-1i8)], ell in 0u32..64) {
            let angle = ExactAngle::new(Dyadic::from_f64(phi), AngleKind::Elevation).unwrap();
            let (c0, s0) = eval_cs_truncation(&angle, x, ell).unwrap();
            let (c1, s1) = eval_cs_truncation(&angle, x, ell + 1).unwrap();
            prop_assert_eq!(c1.magnitude() >> 1usize, c0.magnitude().clone());
            prop_assert_eq!(s1.magnitude() >> 1usize, s0.magnitude().clone());
            if !c0.is_zero() { prop_assert_eq!(c0.is_negative(), c1.is_negative()); }
            if !s0.is_zero() { prop_assert_eq!(s0.is_negative(), s1.is_negative()); }
        }

        #[test]
        fn truncation_error_and_c2_s2(phi in -1.5f64..1.5, x in prop_oneof![Just(1i8), Just(-1i8)], ell in 2u32..64) {
            let angle = ExactAngle::new(Dyadic::from_f64(phi), AngleKind::Elevation).unwrap();
            let (c, s) = eval_cs_truncation(&angle, x, ell).unwrap();
            let u = 0.5 * (phi - std::f64::consts::FRAC_PI_2 * x as f64);
            let tol = 2f64.powi(-(ell as i32)) + 1e-15;
            prop_assert!((c.to_f64() - u.cos()).abs() <= tol);
            prop_assert!((s.to_f64() + u.sin()).abs() <= tol);
            prop_assert!(c.to_f64().abs() <= u.cos().abs() + 1e-15);
            let norm = &c.square() + &s.square();
            prop_assert!(norm <= Dyadic::one());
            prop_assert!(norm >= &Dyadic::one() - &Dyadic::from_u128(1, ell - 2));
        }

        #[test]
        fn tree_product_error(leaves in proptest::collection::vec(arb_unit_dyadic(), 1..=64), k in 1u32..=40) {
            let exact = leaves.iter().fold(Dyadic::one(), |acc, d| &acc * d);
            let got = tree_reduce_product(&leaves, k).unwrap();
            prop_assert!((&got - &exact).abs() <= Dyadic::from_u128(1, k));
            prop_assert!(got.abs() <= Dyadic::one());
        }

        #[test]
        fn mul_truncate_stays_in_unit_interval(a in arb_unit_dyadic(), b in arb_unit_dyadic(), ell in 0u32..80) {
            let p = mul_truncate(&a, &b, ell);
            prop_assert!(p.abs() <= Dyadic::one());
            prop_assert!((&p - &(&a * &b)).abs() <= Dyadic::from_u128(1, ell));
        }
    }
}
