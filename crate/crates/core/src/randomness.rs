//! The random-bit model: counted unbiased bit sources and exact Bernoulli
//! samplers driven by truncations or by converging approximations.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::numerics::{truncate, Dyadic, ExactReal};

/// Default depth cap for every sampling loop.
pub const DEFAULT_K_MAX: u32 = 10_000;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the independent stream for `index` (a trial, a party...).
pub fn split_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_add(GOLDEN)))
}

/// A counted stream of i.i.d. unbiased bits.
pub trait BitSource {
    fn next_bit(&mut self) -> Result<u8>;
    fn bits_consumed(&self) -> u64;
}

impl<S: BitSource + ?Sized> BitSource for &mut S {
    fn next_bit(&mut self) -> Result<u8> {
        (**self).next_bit()
    }
    fn bits_consumed(&self) -> u64 {
        (**self).bits_consumed()
    }
}

/// Counter-based generator: word `w` is `mix64(seed + GOLDEN·(w+1))` and its
/// bits are emitted most significant first.
#[derive(Debug, Clone)]
pub struct CounterBits {
    seed: u64,
    word_index: u64,
    word: u64,
    left: u32,
    consumed: u64,
}

impl CounterBits {
    pub fn new(seed: u64) -> Self {
        CounterBits { seed, word_index: 0, word: 0, left: 0, consumed: 0 }
    }

    pub fn word(seed: u64, index: u64) -> u64 {
        mix64(seed.wrapping_add(GOLDEN.wrapping_mul(index.wrapping_add(1))))
    }
}

impl BitSource for CounterBits {
    #[inline]
    fn next_bit(&mut self) -> Result<u8> {
        if self.left == 0 {
            self.word = CounterBits::word(self.seed, self.word_index);
            self.word_index += 1;
            self.left = 64;
        }
        self.left -= 1;
        self.consumed += 1;
        Ok(((self.word >> self.left) & 1) as u8)
    }

    fn bits_consumed(&self) -> u64 {
        self.consumed
    }
}

/// A fixed tape of bits; reading past its end is an error.
#[derive(Debug, Clone, Default)]
pub struct TapeBits {
    bits: Vec<u8>,
    pos: usize,
}

impl TapeBits {
    pub fn new(bits: Vec<u8>) -> Self {
        TapeBits { bits, pos: 0 }
    }

    /// Parses a string of `0`/`1` characters; anything else is skipped.
    pub fn from_str_bits(s: &str) -> Self {
        TapeBits::new(s.bytes().filter_map(|b| match b {
            b'0' => Some(0),
            b'1' => Some(1),
            _ => None,
        }).collect())
    }
}

impl BitSource for TapeBits {
    fn next_bit(&mut self) -> Result<u8> {
        let b = *self.bits.get(self.pos).ok_or(Error::TapeExhausted { consumed: self.pos as u64 })?;
        self.pos += 1;
        Ok(b)
    }

    fn bits_consumed(&self) -> u64 {
        self.pos as u64
    }
}

/// Wraps a source and keeps every bit it hands out, for replay.
#[derive(Debug, Clone)]
pub struct RecordingBits<S> {
    inner: S,
    record: Vec<u8>,
}

impl<S: BitSource> RecordingBits<S> {
    pub fn new(inner: S) -> Self {
        RecordingBits { inner, record: Vec::new() }
    }

    pub fn record(&self) -> &[u8] {
        &self.record
    }

    pub fn into_tape(self) -> TapeBits {
        TapeBits::new(self.record)
    }
}

impl<S: BitSource> BitSource for RecordingBits<S> {
    fn next_bit(&mut self) -> Result<u8> {
        let b = self.inner.next_bit()?;
        self.record.push(b);
        Ok(b)
    }

    fn bits_consumed(&self) -> u64 {
        self.inner.bits_consumed()
    }
}

/// `p(k)` with `|p(k) − p| ≤ 2^−k`.
pub trait ApproxOracle {
    fn approx(&mut self, k: u32) -> Result<Dyadic>;
}

impl<F: FnMut(u32) -> Result<Dyadic>> ApproxOracle for F {
    fn approx(&mut self, k: u32) -> Result<Dyadic> {
        self(k)
    }
}

/// Fractional bits of a number in `[0, 1]`; the value 1 reads as all ones.
pub trait BinaryExpansion {
    /// Bit `i ≥ 1` after the binary point.
    fn bit(&mut self, i: u32) -> Result<u8>;
}

/// Expansion of an exact real, computed in growing blocks of truncations.
pub struct TruncationExpansion<X> {
    value: X,
    known: Option<Dyadic>,
}

impl<X: ExactReal> TruncationExpansion<X> {
    pub fn new(value: X) -> Self {
        TruncationExpansion { value, known: None }
    }

    /// Seeds the expansion with an already-computed truncation.
    pub fn with_prefix(value: X, prefix: Dyadic) -> Self {
        TruncationExpansion { value, known: Some(prefix) }
    }
}

/// Bit `i` after the binary point of a truncation at scale `≥ i`.
pub fn fraction_bit(t: &Dyadic, i: u32) -> u8 {
    // value 1 (or more) truncates to 2^scale; treat as all ones
    if t.magnitude() >= &(BigUint::one() << t.scale() as usize) {
        return 1;
    }
    t.magnitude().bit((t.scale() - i) as u64) as u8
}

impl<X: ExactReal> BinaryExpansion for TruncationExpansion<X> {
    fn bit(&mut self, i: u32) -> Result<u8> {
        let have = self.known.as_ref().map_or(0, Dyadic::scale);
        if have < i {
            let scale = (2 * i).max(64);
            self.known = Some(truncate(&self.value, scale)?);
        }
        Ok(fraction_bit(self.known.as_ref().expect("filled above"), i))
    }
}

impl BinaryExpansion for Dyadic {
    fn bit(&mut self, i: u32) -> Result<u8> {
        Ok(fraction_bit(&self.truncate(i.max(self.scale())), i))
    }
}

/// Returns 1 iff `U < p`, comparing bits of `U` and `p` until they first
/// differ. Uses 2 bits on average.
pub fn bernoulli_from_truncations<P, S>(p: &mut P, src: &mut S, k_max: u32) -> Result<u8>
where
    P: BinaryExpansion + ?Sized,
    S: BitSource + ?Sized,
{
    for i in 1..=k_max {
        let u = src.next_bit()?;
        let b = p.bit(i)?;
        if u != b {
            return Ok((u < b) as u8);
        }
    }
    Err(Error::DepthExceeded { cap: k_max })
}

/// A resolved draw of [`bernoulli_from_approximations`], with the values the
/// decision was made on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BernoulliDraw {
    pub value: u8,
    /// Iteration at which the decision fired (= random bits used).
    pub k: u32,
    /// `U(k) = 0.U₁…U_k`
    pub u: Dyadic,
    /// The approximation `p(k)` used at that iteration.
    pub p: Dyadic,
}

/// Accept/reject thresholds: `Some(1)` if `U(k) ≤ p(k) − 2/2^k`, `Some(0)` if
/// `U(k) ≥ p(k) + 1/2^k`, else undecided.
pub fn approximation_decision(u: &Dyadic, p: &Dyadic, k: u32) -> Option<u8> {
    let ulp = Dyadic::new(false, BigUint::one(), k);
    if u <= &(p - &(&ulp + &ulp)) {
        Some(1)
    } else if u >= &(p + &ulp) {
        Some(0)
    } else {
        None
    }
}

/// Bernoulli(p) from approximations `p(k)` with `|p(k) − p| ≤ 2^−k`. One
/// fresh bit of `U` per iteration; at most 4 iterations on average.
pub fn bernoulli_from_approximations<O, S>(orc: &mut O, src: &mut S, k_max: u32) -> Result<BernoulliDraw>
where
    O: ApproxOracle + ?Sized,
    S: BitSource + ?Sized,
{
    let mut u_mag = BigUint::zero();
    for k in 1..=k_max {
        u_mag = (u_mag << 1usize) + BigUint::from(src.next_bit()?);
        let u = Dyadic::new(false, u_mag.clone(), k);
        let p = orc.approx(k)?;
        if let Some(value) = approximation_decision(&u, &p, k) {
            return Ok(BernoulliDraw { value, k, u, p });
        }
    }
    Err(Error::DepthExceeded { cap: k_max })
}

/// `+1` with probability `α²`, `−1` otherwise, from the binary expansion of
/// `α²`.
pub fn rademacher<P, S>(alpha_squared: &mut P, src: &mut S, k_max: u32) -> Result<i8>
where
    P: BinaryExpansion + ?Sized,
    S: BitSource + ?Sized,
{
    Ok(if bernoulli_from_truncations(alpha_squared, src, k_max)? == 1 { 1 } else { -1 })
}

/// Outcome masses of a sampler over all bit tapes up to a depth.
///
/// Masses are integers in units of `2^−depth`, so sums are exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TapeEnumeration<T: Ord> {
    pub depth: u32,
    pub resolved: BTreeMap<T, u128>,
    /// Mass of tapes that had not finished at `depth`.
    pub unresolved: u128,
}

impl<T: Ord> TapeEnumeration<T> {
    pub fn mass(&self, outcome: &T) -> f64 {
        self.resolved.get(outcome).copied().unwrap_or(0) as f64 / 2f64.powi(self.depth as i32)
    }

    pub fn unresolved_mass(&self) -> f64 {
        self.unresolved as f64 / 2f64.powi(self.depth as i32)
    }
}

/// Runs `f` on every bit tape, extending a tape by one bit whenever `f`
/// runs off its end, up to `depth` bits. Errors other than running off the
/// tape are propagated.
pub fn enumerate_tapes<T, F>(depth: u32, mut f: F) -> Result<TapeEnumeration<T>>
where
    T: Ord,
    F: FnMut(&mut TapeBits) -> Result<T>,
{
    assert!(depth < 128);
    let mut out = TapeEnumeration { depth, resolved: BTreeMap::new(), unresolved: 0 };
    let mut stack: Vec<Vec<u8>> = vec![Vec::new()];
    while let Some(prefix) = stack.pop() {
        let mut tape = TapeBits::new(prefix.clone());
        match f(&mut tape) {
            Ok(t) => {
                *out.resolved.entry(t).or_insert(0) += 1u128 << (depth - prefix.len() as u32);
            }
            Err(Error::TapeExhausted { .. }) => {
                if prefix.len() as u32 == depth {
                    out.unresolved += 1;
                } else {
                    for b in [1u8, 0] {
                        let mut next = prefix.clone();
                        next.push(b);
                        stack.push(next);
                    }
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::AlphaSquared;
    use proptest::prelude::*;

    fn constant(p: Dyadic) -> impl FnMut(u32) -> Result<Dyadic> {
        move |_| Ok(p.clone())
    }

    #[test]
    fn counter_bits_are_deterministic_and_counted() {
        let mut a = CounterBits::new(7);
        let mut b = CounterBits::new(7);
        let xs: Vec<u8> = (0..200).map(|_| a.next_bit().unwrap()).collect();
        let ys: Vec<u8> = (0..200).map(|_| b.next_bit().unwrap()).collect();
        assert_eq!(xs, ys);
        assert_eq!(a.bits_consumed(), 200);
        let w = CounterBits::word(7, 0);
        assert_eq!(xs[0], (w >> 63) as u8);
        assert_eq!(xs[63], (w & 1) as u8);
        assert_ne!(split_seed(7, 0), split_seed(7, 1));
    }

    #[test]
    fn recording_replays() {
        let mut rec = RecordingBits::new(CounterBits::new(3));
        let first: Vec<u8> = (0..50).map(|_| rec.next_bit().unwrap()).collect();
        let mut tape = rec.into_tape();
        let again: Vec<u8> = (0..50).map(|_| tape.next_bit().unwrap()).collect();
        assert_eq!(first, again);
        assert!(matches!(tape.next_bit(), Err(Error::TapeExhausted { consumed: 50 })));
    }

    #[test]
    fn truncation_sampler_examples() {
        let half = Dyadic::from_binary_str("0.1").unwrap();
        let mut t = TapeBits::from_str_bits("0");
        assert_eq!(bernoulli_from_truncations(&mut half.clone(), &mut t, 10).unwrap(), 1);
        assert_eq!(t.bits_consumed(), 1);
        let mut t = TapeBits::from_str_bits("11");
        assert_eq!(bernoulli_from_truncations(&mut half.clone(), &mut t, 10).unwrap(), 0);
        assert_eq!(t.bits_consumed(), 2);
        let mut src = CounterBits::new(1);
        for _ in 0..1000 {
            assert_eq!(bernoulli_from_truncations(&mut Dyadic::one(), &mut src, 10_000).unwrap(), 1);
            assert_eq!(bernoulli_from_truncations(&mut Dyadic::zero(), &mut src, 10_000).unwrap(), 0);
        }
        let mut t = TapeBits::from_str_bits("1000");
        assert!(matches!(
            bernoulli_from_truncations(&mut half.clone(), &mut t, 4),
            Err(Error::DepthExceeded { cap: 4 })
        ));
    }

    #[test]
    fn approximation_sampler_hand_traces() {
        let three_quarters = Dyadic::from_binary_str("0.11").unwrap();
        // U = 0.00…: at k=2, U(2) = 0 ≤ 3/4 − 1/2
        let d = bernoulli_from_approximations(&mut constant(three_quarters.clone()), &mut TapeBits::from_str_bits("000"), 100).unwrap();
        assert_eq!((d.value, d.k), (1, 2));
        // U = 0.100: at k=3, U(3) = 1/2 ≤ 3/4 − 1/4
        let d = bernoulli_from_approximations(&mut constant(three_quarters), &mut TapeBits::from_str_bits("100"), 100).unwrap();
        assert_eq!((d.value, d.k), (1, 3));
        assert_eq!(d.u, Dyadic::from_binary_str("0.100").unwrap());
        // p = 0 with U₁ = 1 rejects at once
        let d = bernoulli_from_approximations(&mut constant(Dyadic::zero()), &mut TapeBits::from_str_bits("1"), 100).unwrap();
        assert_eq!((d.value, d.k), (0, 1));
    }

    #[test]
    fn zero_parameter_never_accepts() {
        let e = enumerate_tapes(20, |t| bernoulli_from_approximations(&mut constant(Dyadic::zero()), t, 100).map(|d| d.value)).unwrap();
        assert_eq!(e.resolved.get(&1), None);
        assert!(e.unresolved_mass() < 1e-5);
    }

    #[test]
    fn exact_on_short_dyadics_by_tape_enumeration() {
        for num in 0..=16u128 {
            let p = Dyadic::from_u128(num, 4);
            // perturbed approximations still satisfy the contract
            let oracle = |k: u32| -> Result<Dyadic> {
                let ulp = Dyadic::from_u128(1, k + 1);
                Ok(if k.is_multiple_of(2) { &p + &ulp } else { &p - &ulp })
            };
            let e = enumerate_tapes(24, |t| {
                let mut o = oracle;
                bernoulli_from_approximations(&mut o, t, 100).map(|d| d.value)
            })
            .unwrap();
            let lo = e.mass(&1);
            let hi = lo + e.unresolved_mass();
            let target = p.to_f64();
            assert!(lo <= target + 1e-12 && target <= hi + 1e-12, "p={target} in [{lo},{hi}]");
            assert!(e.unresolved_mass() <= 2f64.powi(-20));
        }
    }

    #[test]
    fn mean_iterations_at_most_four() {
        let mut src = CounterBits::new(99);
        let runs = 100_000;
        let mut sum = 0f64;
        let mut sq = 0f64;
        for i in 0..runs {
            let p = Dyadic::from_u128((i as u128 * 2654435761) % 1000, 10);
            let d = bernoulli_from_approximations(&mut constant(p), &mut src, DEFAULT_K_MAX).unwrap();
            sum += d.k as f64;
            sq += (d.k as f64).powi(2);
        }
        let mean = sum / runs as f64;
        let stderr = ((sq / runs as f64 - mean * mean) / runs as f64).sqrt();
        assert!(mean <= 4.0 + 3.0 * stderr, "mean {mean}");
    }

    #[test]
    fn rademacher_cases() {
        let mut src = CounterBits::new(5);
        let pole = crate::numerics::ExactAngle::parse("0.5", crate::numerics::AngleUnit::Pi, crate::numerics::AngleKind::Elevation).unwrap();
        let mut up = TruncationExpansion::new(AlphaSquared { phi: pole.value().clone() });
        let mut down = TruncationExpansion::new(AlphaSquared { phi: -pole.value() });
        let mut ones = Dyadic::one();
        let mut zero = Dyadic::zero();
        for _ in 0..200 {
            assert_eq!(rademacher(&mut ones, &mut src, DEFAULT_K_MAX).unwrap(), 1);
            assert_eq!(rademacher(&mut zero, &mut src, DEFAULT_K_MAX).unwrap(), -1);
            // α² sits within 2^−250 of 1 (or 0) here
            assert_eq!(rademacher(&mut up, &mut src, DEFAULT_K_MAX).unwrap(), 1);
            assert_eq!(rademacher(&mut down, &mut src, DEFAULT_K_MAX).unwrap(), -1);
        }
        let mut half = TruncationExpansion::new(AlphaSquared { phi: Dyadic::zero() });
        let draws = 100_000;
        let before = src.bits_consumed();
        let total: i64 = (0..draws).map(|_| rademacher(&mut half, &mut src, DEFAULT_K_MAX).unwrap() as i64).sum();
        assert!((total as f64).abs() <= 4.0 * (draws as f64).sqrt());
        let per_draw = (src.bits_consumed() - before) as f64 / draws as f64;
        assert!((per_draw - 2.0).abs() < 0.05);
    }

    proptest! {
        #[test]
        fn decisions_respect_the_enclosures(num in 0u128..=1024, seed in any::<u64>(), wobble in any::<u64>()) {
            let p = Dyadic::from_u128(num, 10);
            let mut oracle = |k: u32| -> Result<Dyadic> {
                let ulp = Dyadic::from_u128(1, k);
                Ok(match (wobble >> (k % 64)) & 3 { 0 => &p + &ulp, 1 => &p - &ulp, _ => p.clone() })
            };
            let mut src = CounterBits::new(seed);
            let d = bernoulli_from_approximations(&mut oracle, &mut src, DEFAULT_K_MAX).unwrap();
            prop_assert_eq!(src.bits_consumed(), d.k as u64);
            prop_assert!((&d.p - &p).abs() <= Dyadic::from_u128(1, d.k));
            let ulp = Dyadic::from_u128(1, d.k);
            // U ∈ [U(k), U(k) + 2^−k], p ∈ [p(k) − 2^−k, p(k) + 2^−k]
            if d.value == 1 {
                prop_assert!(&d.u + &ulp <= &d.p - &ulp);
            } else {
                prop_assert!(d.u >= &d.p + &ulp);
            }
        }
    }
}
