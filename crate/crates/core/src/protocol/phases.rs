use num_bigint::BigUint;
use num_traits::Zero;

use super::party::{PartyState, PreparedSet};
use super::transcript::{Phase, Transcript};
use super::{ProtocolConfig, Variant};
use crate::error::{Error, Result};
use crate::numerics::{binomial_tree_levels, tree_reduce_truncated, Dyadic, ErrorBudget};
use crate::randomness::{bernoulli_from_approximations, rademacher, BitSource};

/// Extra fractional bit per half angle on top of `k + ⌈log₂ n⌉`, so the
/// evaluation of `cos²` has room for its own error.
pub const BERNOULLI_GUARD_BITS: u64 = 1;

/// Bits for the integer part of each half-angle truncation.
pub const HALF_ANGLE_INTEGER_BITS: u64 = 3;

/// Extra bits per `cⱼ`/`sⱼ` request beyond `2(n−1)(k + 4 + ⌈log₂ n⌉)` in the
/// sequential variant.
pub const CS_GUARD_BITS: u64 = 0;

/// Width of the continue / accept / reject code sent after each
/// acceptance-loop iteration.
pub const LOOP_SYNC_BITS: u64 = 2;

/// How the acceptance loop obtains the products and what it pays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Channel {
    /// Incremental truncations sent straight to the leader.
    Direct,
    /// Partial products along the binomial tree, recomputed per `k`.
    Tree,
    /// The leader knows everything; nothing is sent.
    Local,
}

/// Tree parent of party `i` (1-based) in the binomial tree rooted at the
/// leader.
fn tree_parent(i: usize) -> usize {
    let z = i - 1;
    (z & (z - 1)) + 1
}

/// One bit from the leader to every other party. Sequential channels pay one
/// time step per receiver; the tree pays `⌈log₂ n⌉` steps.
fn broadcast(set: &PreparedSet, cfg: &ProtocolConfig, t: &mut Transcript, phase: Phase, bits: u64) {
    let n = set.n();
    if n == 1 {
        return;
    }
    if cfg.variant == Variant::Parallel {
        for i in 2..=n {
            t.send(phase, tree_parent(i), i, bits);
        }
        t.tick(bits * set.log_n() as u64);
    } else {
        for i in 2..=n {
            t.send(phase, 1, i, bits);
        }
        t.tick(bits * (n as u64 - 1));
    }
}

/// Samples the branch bit `B` with `P{B = 1} = sin²(θ/2)`.
///
/// The leader runs the approximation sampler on `p = cos²(θ/2)` and sets `B`
/// to the complement of its result, so `B = 1` selects the `p₂` branch. At
/// step `k` each other party extends its half-angle truncation to scale
/// `k + ⌈log₂ n⌉ + 1`: three integer bits and the fraction the first time,
/// then one bit per step. Between steps the leader sends a one-bit continue
/// flag, and a final done flag after deciding.
pub fn distributed_bernoulli<S: BitSource + ?Sized>(
    set: &PreparedSet,
    cfg: &ProtocolConfig,
    src: &mut S,
    t: &mut Transcript,
) -> Result<u8> {
    let n = set.n();
    let mut sent = 0u32;
    let draw = {
        let t = &mut *t;
        let mut oracle = |k: u32| -> Result<Dyadic> {
            if k > 1 {
                for i in 2..=n {
                    t.send(Phase::Sync, 1, i, 1);
                }
                t.tick(n as u64 - 1);
            }
            let ell = set.bernoulli_scale(k);
            let bits = if sent == 0 { HALF_ANGLE_INTEGER_BITS + ell as u64 } else { (ell - sent) as u64 };
            for i in 2..=n {
                t.send(Phase::Bernoulli, i, 1, bits);
            }
            t.tick(bits * (n as u64 - 1));
            sent = ell;
            set.bernoulli_approx(k)
        };
        bernoulli_from_approximations(&mut oracle, src, cfg.k_max)?
    };
    for i in 2..=n {
        t.send(Phase::Sync, 1, i, 1);
    }
    t.tick(n as u64 - 1);
    t.bernoulli_k_final = draw.k;
    Ok(1 - draw.value)
}

/// Draws a candidate `X` from `½(q₁ + q₂)`: the leader broadcasts a fair bit
/// `S`, each party draws `Xⱼ = +1` with probability `αⱼ²` and negates it
/// when `S = 1`.
pub fn propose_candidate<S: BitSource + ?Sized>(
    set: &PreparedSet,
    cfg: &ProtocolConfig,
    parties: &mut [PartyState],
    src: &mut S,
    t: &mut Transcript,
) -> Result<Vec<i8>> {
    let s = src.next_bit()?;
    if cfg.variant != Variant::Equatorial {
        broadcast(set, cfg, t, Phase::Broadcast, 1);
    }
    let mut x = Vec::with_capacity(set.n());
    for (j, party) in parties.iter_mut().enumerate() {
        let mut xj = rademacher(&mut set.party(j).alpha_expansion(), src, cfg.k_max)?;
        if s == 1 {
            xj = -xj;
        }
        party.set_candidate(xj);
        x.push(xj);
    }
    Ok(x)
}

/// Brings the leader's copies of every `ĉⱼ`, `ŝⱼ` to scale `ell`, charging
/// only the bits not sent before, and returns the exact products.
fn direct_products(
    set: &PreparedSet,
    parties: &mut [PartyState],
    x: &[i8],
    ell: u32,
    t: &mut Transcript,
    charge: bool,
) -> Result<(Dyadic, Dyadic)> {
    let mut a1 = Dyadic::one();
    let mut a2 = Dyadic::one();
    for (j, party) in parties.iter_mut().enumerate() {
        let (c, s) = set.party(j).cs_truncation(x[j], ell)?;
        if charge && j > 0 {
            let bits = PartyState::signed_increment(party.c_sent, ell) + PartyState::signed_increment(party.s_sent, ell);
            t.send(Phase::CsRequest, j + 1, 1, bits);
            t.tick(bits);
        }
        party.c_sent = ell;
        party.s_sent = ell;
        a1 = &a1 * &c;
        a2 = &a2 * &s;
    }
    Ok((a1, a2))
}

/// `k`-approximations of `a₁(X)` and `a₂(X)` by pairwise truncated products
/// along the binomial tree at scale `ℓ = k + ⌈log₂ n⌉ + 1`.
///
/// At every level each active pair moves `2(ℓ+1)` bits (sign and `ℓ` bits
/// for each of the two partial products) and the level takes `2(ℓ+1)` time
/// steps. Missing partners are virtual parties holding 1.
pub fn parallel_product_phase(set: &PreparedSet, x: &[i8], k: u32, t: &mut Transcript) -> Result<(Dyadic, Dyadic)> {
    let n = set.n();
    let ell = ErrorBudget::for_tree(k, n).ell;
    let mut cs = Vec::with_capacity(n);
    let mut ss = Vec::with_capacity(n);
    for (j, &xj) in x.iter().enumerate() {
        let (c, s) = set.party(j).cs_truncation(xj, ell)?;
        cs.push(c);
        ss.push(s);
    }
    let per_pair = 2 * (ell as u64 + 1);
    for level in binomial_tree_levels(n) {
        for &(j, partner) in &level {
            t.send(Phase::Tree, partner + 1, j + 1, per_pair);
        }
        t.tick(per_pair);
    }
    Ok((tree_reduce_truncated(cs, ell), tree_reduce_truncated(ss, ell)))
}

/// First `k` and its successor for each variant.
pub fn k_schedule(variant: Variant, n: usize) -> (u32, fn(u32) -> u32) {
    fn inc(k: u32) -> u32 {
        k + 1
    }
    fn dbl(k: u32) -> u32 {
        2 * k
    }
    match variant {
        Variant::Sequential | Variant::Equatorial => (1, inc),
        Variant::Doubling | Variant::Parallel => (1, dbl),
        Variant::ConstantRound => (n as u32, dbl),
    }
}

/// Decides whether to accept `X` as a sample of `p_σ`, with `σ = +1`
/// targeting `p₁ = ½(a₁ + a₂)²` and `σ = −1` targeting `p₂ = ½(a₁ − a₂)²`.
///
/// With `(k+2)`-approximations `â₁`, `â₂` (error `δ ≤ 2^−(k+2)` each):
///
/// * `L_k = â₁² + â₂²` is off from `q₁ + q₂` by at most
///   `δ(2(|a₁| + |a₂|) + 2δ) ≤ δ(2√2 + 2δ) < 2^−k`, using
///   `|a₁| + |a₂| ≤ √(2(q₁ + q₂)) ≤ √2`.
/// * `R_k = ½(â₁ + σâ₂)²` is off from `p_σ` by at most
///   `½·2δ·(2√2 + 2δ) < 2^−k`.
///
/// Since `L_k ≤ 2`, `|U(k)L_k − U(q₁ + q₂)| ≤ L_k/2^k + 1/2^k ≤ 3/2^k`, so
/// `U(k)L_k − R_k < −4/2^k` proves `U(q₁ + q₂) < p_σ` (accept) and
/// `> 4/2^k` proves the opposite (reject).
///
/// Each iteration draws the fresh bits of `U` needed to reach `k`. The
/// direct channel asks for scale `k + 3 + ⌈log₂ n⌉` (`(1+2^−ℓ)^n − 1 ≤
/// 2^−(k+2)` there); the tree computes `(k+2)`-approximations afresh.
#[allow(clippy::too_many_arguments)]
pub fn acceptance_loop<S: BitSource + ?Sized>(
    set: &PreparedSet,
    cfg: &ProtocolConfig,
    parties: &mut [PartyState],
    x: &[i8],
    sigma: i8,
    src: &mut S,
    t: &mut Transcript,
) -> Result<bool> {
    let channel = match cfg.variant {
        Variant::Parallel => Channel::Tree,
        Variant::Equatorial => Channel::Local,
        _ => Channel::Direct,
    };
    let lg = set.log_n();
    let (mut k, next) = k_schedule(cfg.variant, set.n());
    let mut u_mag = BigUint::zero();
    let mut u_len = 0u32;
    loop {
        if k > cfg.k_max {
            return Err(Error::DepthExceeded { cap: cfg.k_max });
        }
        while u_len < k {
            u_mag <<= 1usize;
            if src.next_bit()? == 1 {
                u_mag += 1u32;
            }
            u_len += 1;
        }
        let (a1, a2) = match channel {
            Channel::Direct => direct_products(set, parties, x, k + 3 + lg, t, true)?,
            Channel::Local => direct_products(set, parties, x, k + 3 + lg, t, false)?,
            Channel::Tree => parallel_product_phase(set, x, k + 2, t)?,
        };
        let l = &a1.square() + &a2.square();
        let sum = if sigma > 0 { &a1 + &a2 } else { &a1 - &a2 };
        let r = sum.square().half();
        let u = Dyadic::new(false, u_mag.clone(), k);
        let gap = &(&u * &l) - &r;
        let margin = Dyadic::from_u128(4, k);
        t.inner_iterations += 1;
        let verdict = if gap < -&margin {
            Some(true)
        } else if gap > margin {
            Some(false)
        } else {
            None
        };
        if channel != Channel::Local {
            // the accept code doubles as the completion notice
            let phase = if verdict == Some(true) { Phase::Output } else { Phase::Sync };
            broadcast(set, cfg, t, phase, LOOP_SYNC_BITS);
        }
        if let Some(accepted) = verdict {
            t.inner_k_final = k;
            t.round_exit_ks.push(k);
            return Ok(accepted);
        }
        k = next(k);
    }
}

/// Equatorial fast path: after the branch bit, the leader knows every
/// `φⱼ = 0` and runs the whole rejection loop alone, then sends each other
/// party its output bit (one time step each).
pub fn equatorial_path<S: BitSource + ?Sized>(
    set: &PreparedSet,
    cfg: &ProtocolConfig,
    src: &mut S,
) -> Result<(Vec<i8>, Transcript)> {
    if let Some(party) = set.set().first_off_equator() {
        return Err(Error::NotEquatorial { party: party + 1 });
    }
    let n = set.n();
    let start = src.bits_consumed();
    let mut t = Transcript::new(n, cfg.record_messages);
    let b = distributed_bernoulli(set, cfg, src, &mut t)?;
    let sigma = if b == 1 { -1 } else { 1 };
    let mut parties = set.fresh_parties();
    let x = loop {
        t.outer_rounds += 1;
        if t.outer_rounds > cfg.k_max {
            return Err(Error::DepthExceeded { cap: cfg.k_max });
        }
        let x = propose_candidate(set, cfg, &mut parties, src, &mut t)?;
        if acceptance_loop(set, cfg, &mut parties, &x, sigma, src, &mut t)? {
            break x;
        }
    };
    for i in 2..=n {
        t.send(Phase::Output, 1, i, 1);
    }
    t.tick(n as u64 - 1);
    t.random_bits = src.bits_consumed() - start;
    Ok((x, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_parents() {
        assert_eq!((2..=8).map(tree_parent).collect::<Vec<_>>(), vec![1, 1, 3, 1, 5, 5, 7]);
    }
}
