use std::sync::OnceLock;

use crate::error::Result;
use crate::numerics::{
    approx_cos2_sum, ceil_log2, eval_cs_truncation, truncate, AlphaSquared, Dyadic, ErrorBudget, ExactAngle,
};
use crate::oracle::MeasurementSet;
use crate::randomness::{fraction_bit, BinaryExpansion};

/// Scale of the truncations kept per party; coarser ones are derived by
/// dropping bits.
pub const CACHE_SCALE: u32 = 192;

/// Number of branch-bit approximations kept per measurement set.
const BERNOULLI_TABLE: u32 = 64;

/// What each party knows about its own measurement, precomputed once per
/// measurement set.
#[derive(Debug, Clone)]
pub struct PartyCache {
    pub theta: ExactAngle,
    pub phi: ExactAngle,
    /// `θⱼ/2`, exact.
    pub half_theta: Dyadic,
    /// `(ĉ, ŝ)` at [`CACHE_SCALE`] for `x = +1` and `x = −1`.
    cs: [(Dyadic, Dyadic); 2],
    /// `αⱼ²` truncated at [`CACHE_SCALE`].
    alpha_squared: Dyadic,
}

impl PartyCache {
    fn new(theta: &ExactAngle, phi: &ExactAngle) -> Result<Self> {
        Ok(PartyCache {
            theta: theta.clone(),
            phi: phi.clone(),
            half_theta: theta.half(),
            cs: [eval_cs_truncation(phi, 1, CACHE_SCALE)?, eval_cs_truncation(phi, -1, CACHE_SCALE)?],
            alpha_squared: truncate(&AlphaSquared { phi: phi.value().clone() }, CACHE_SCALE)?,
        })
    }

    /// `ℓ`-truncations of `cⱼ` and `sⱼ` for outcome `x`.
    pub fn cs_truncation(&self, x: i8, ell: u32) -> Result<(Dyadic, Dyadic)> {
        if ell <= CACHE_SCALE {
            let (c, s) = &self.cs[(x < 0) as usize];
            Ok((c.truncate(ell), s.truncate(ell)))
        } else {
            eval_cs_truncation(&self.phi, x, ell)
        }
    }

    /// Binary expansion of `αⱼ²`.
    pub fn alpha_expansion(&self) -> AlphaExpansion<'_> {
        AlphaExpansion { party: self, finer: None }
    }
}

/// Bits of `αⱼ²`, read from the cached truncation and extended on demand.
pub struct AlphaExpansion<'a> {
    party: &'a PartyCache,
    finer: Option<Dyadic>,
}

impl BinaryExpansion for AlphaExpansion<'_> {
    fn bit(&mut self, i: u32) -> Result<u8> {
        if i <= CACHE_SCALE {
            return Ok(fraction_bit(&self.party.alpha_squared, i));
        }
        if self.finer.as_ref().is_none_or(|f| f.scale() < i) {
            let scale = (2 * i).max(2 * CACHE_SCALE);
            self.finer = Some(truncate(&AlphaSquared { phi: self.party.phi.value().clone() }, scale)?);
        }
        self.finer.as_mut().expect("filled above").bit(i)
    }
}

/// A measurement set with every per-party quantity the protocol reads
/// precomputed. Values beyond the cached precision are computed on demand.
#[derive(Debug)]
pub struct PreparedSet {
    set: MeasurementSet,
    parties: Vec<PartyCache>,
    bernoulli: Vec<OnceLock<Dyadic>>,
}

impl PreparedSet {
    pub fn new(set: &MeasurementSet) -> Result<Self> {
        let parties = (0..set.n()).map(|j| PartyCache::new(set.theta(j), set.phi(j))).collect::<Result<Vec<_>>>()?;
        Ok(PreparedSet {
            set: set.clone(),
            parties,
            bernoulli: (0..BERNOULLI_TABLE).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn set(&self) -> &MeasurementSet {
        &self.set
    }

    pub fn n(&self) -> usize {
        self.parties.len()
    }

    /// Party `j`, 0-based.
    pub fn party(&self, j: usize) -> &PartyCache {
        &self.parties[j]
    }

    /// Scale of the half-angle truncations used at branch-bit step `k`.
    pub fn bernoulli_scale(&self, k: u32) -> u32 {
        ErrorBudget::for_angle_sum(k, self.n()).ell
    }

    /// `p(k)`: a `k`-approximation of `cos²(Σθⱼ/2)` built from the
    /// truncations the leader holds at step `k`.
    pub fn bernoulli_approx(&self, k: u32) -> Result<Dyadic> {
        let compute = || {
            let ell = self.bernoulli_scale(k);
            let halves: Vec<Dyadic> = self.parties.iter().map(|p| p.half_theta.truncate(ell)).collect();
            approx_cos2_sum(&halves, k)
        };
        match self.bernoulli.get(k as usize - 1) {
            Some(cell) => {
                if let Some(v) = cell.get() {
                    return Ok(v.clone());
                }
                let v = compute()?;
                Ok(cell.get_or_init(|| v).clone())
            }
            None => compute(),
        }
    }

    /// `⌈log₂ n⌉`.
    pub fn log_n(&self) -> u32 {
        ceil_log2(self.n())
    }

    pub fn fresh_parties(&self) -> Vec<PartyState> {
        (1..=self.n()).map(PartyState::new).collect()
    }
}

/// Protocol-time state of one party.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartyState {
    /// 1-based; party 1 is the leader.
    pub index: usize,
    pub x: Option<i8>,
    /// Highest scale of `ĉⱼ` already sent (0 = nothing sent).
    pub c_sent: u32,
    pub s_sent: u32,
    /// Highest scale of the half-angle truncation already sent.
    pub half_theta_sent: u32,
}

impl PartyState {
    pub fn new(index: usize) -> Self {
        PartyState { index, x: None, c_sent: 0, s_sent: 0, half_theta_sent: 0 }
    }

    /// A new candidate invalidates the `cⱼ`, `sⱼ` cursors.
    pub fn set_candidate(&mut self, x: i8) {
        self.x = Some(x);
        self.c_sent = 0;
        self.s_sent = 0;
    }

    /// Bits needed to bring the receiver's copy of a signed truncation to
    /// scale `ell`: sign and `ell` bits the first time, then only new bits.
    pub fn signed_increment(sent: u32, ell: u32) -> u64 {
        if sent == 0 {
            1 + ell as u64
        } else {
            ell.saturating_sub(sent) as u64
        }
    }
}
