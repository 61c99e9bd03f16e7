//! The distributed simulation: the leader (party 1) and `n − 1` parties that
//! only answer requests, with every transmitted bit accounted for.

mod party;
mod phases;
mod transcript;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use party::{AlphaExpansion, PartyCache, PartyState, PreparedSet, CACHE_SCALE};
pub use phases::{
    acceptance_loop, distributed_bernoulli, equatorial_path, k_schedule, parallel_product_phase, propose_candidate,
    BERNOULLI_GUARD_BITS, CS_GUARD_BITS, HALF_ANGLE_INTEGER_BITS, LOOP_SYNC_BITS,
};
pub use transcript::{Message, Phase, Transcript};

use crate::error::{Error, Result};
use crate::oracle::{MeasurementSet, N_ENUM};
use crate::randomness::{split_seed, BitSource, CounterBits, DEFAULT_K_MAX};

/// Protocol flavour, differing in the `k` schedule of the acceptance loop and
/// in how the products reach the leader.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// `k ← k + 1`, incremental truncations sent straight to the leader.
    #[default]
    Sequential,
    /// `k ← 2k`, incremental truncations.
    #[serde(alias = "sequential-doubling")]
    Doubling,
    /// Start at `k = n`, then `k ← 2k`.
    ConstantRound,
    /// Binomial-tree products, `k ← 2k`, fresh truncations every time.
    #[serde(alias = "parallel-tree")]
    Parallel,
    /// All `φⱼ = 0`: the leader runs the rejection loop alone.
    Equatorial,
}

impl Variant {
    pub const ALL: [Variant; 5] =
        [Variant::Sequential, Variant::Doubling, Variant::ConstantRound, Variant::Parallel, Variant::Equatorial];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Sequential => "sequential",
            Variant::Doubling => "doubling",
            Variant::ConstantRound => "constant-round",
            Variant::Parallel => "parallel",
            Variant::Equatorial => "equatorial",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(Variant::Sequential),
            "doubling" | "sequential-doubling" => Ok(Variant::Doubling),
            "constant-round" => Ok(Variant::ConstantRound),
            "parallel" | "parallel-tree" => Ok(Variant::Parallel),
            "equatorial" => Ok(Variant::Equatorial),
            other => Err(Error::InvalidConfig(format!("unknown variant '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub variant: Variant,
    /// Cap on every loop depth and on the number of proposal rounds.
    pub k_max: u32,
    /// Largest `n` for which exact distributions are tabulated.
    pub n_enum: usize,
    pub seed: u64,
    pub trials: u64,
    /// Keep the full message log in each transcript.
    pub record_messages: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            variant: Variant::Sequential,
            k_max: DEFAULT_K_MAX,
            n_enum: N_ENUM,
            seed: 0,
            trials: 1,
            record_messages: false,
        }
    }
}

impl ProtocolConfig {
    pub fn new(variant: Variant, seed: u64, trials: u64) -> Self {
        ProtocolConfig { variant, seed, trials, ..Default::default() }
    }

    pub fn validate(&self, m: &MeasurementSet) -> Result<()> {
        if self.k_max == 0 {
            return Err(Error::InvalidConfig("k_max must be positive".into()));
        }
        if self.variant == Variant::Equatorial {
            if let Some(j) = m.first_off_equator() {
                return Err(Error::NotEquatorial { party: j + 1 });
            }
        }
        Ok(())
    }
}

/// One complete run: branch bit, then proposals until one is accepted.
///
/// Returns the outcome vector and the transcript. `random_bits` counts what
/// this run drew from `src`.
pub fn run_protocol<S: BitSource + ?Sized>(
    set: &PreparedSet,
    cfg: &ProtocolConfig,
    src: &mut S,
) -> Result<(Vec<i8>, Transcript)> {
    cfg.validate(set.set())?;
    if cfg.variant == Variant::Equatorial {
        return equatorial_path(set, cfg, src);
    }
    let start = src.bits_consumed();
    let mut t = Transcript::new(set.n(), cfg.record_messages);
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
    t.random_bits = src.bits_consumed() - start;
    Ok((x, t))
}

/// Seed of trial `i` under a base seed.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    split_seed(seed, trial)
}

/// Runs `trial` on its own counter stream.
pub fn run_trial(set: &PreparedSet, cfg: &ProtocolConfig, trial: u64) -> Result<(Vec<i8>, Transcript)> {
    let mut src = CounterBits::new(trial_seed(cfg.seed, trial));
    run_protocol(set, cfg, &mut src)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialResult {
    pub trial_id: u64,
    pub outcome: Vec<i8>,
    pub transcript: Transcript,
}

/// Runs `cfg.trials` independent trials across the available cores. The
/// result is ordered by trial id and does not depend on the thread count.
pub fn run_trials(m: &MeasurementSet, cfg: &ProtocolConfig) -> Result<Vec<TrialResult>> {
    let set = PreparedSet::new(m)?;
    run_prepared_trials(&set, cfg, 0..cfg.trials)
}

/// Like [`run_trials`] over an explicit id range and a prepared set.
pub fn run_prepared_trials(
    set: &PreparedSet,
    cfg: &ProtocolConfig,
    ids: std::ops::Range<u64>,
) -> Result<Vec<TrialResult>> {
    let workers = std::thread::available_parallelism().map_or(1, |p| p.get());
    run_trials_on(set, cfg, ids, workers)
}

/// Like [`run_prepared_trials`] on a fixed number of worker threads.
pub fn run_trials_on(
    set: &PreparedSet,
    cfg: &ProtocolConfig,
    ids: std::ops::Range<u64>,
    workers: usize,
) -> Result<Vec<TrialResult>> {
    cfg.validate(set.set())?;
    let count = ids.end.saturating_sub(ids.start);
    let workers = workers.max(1).min(count.max(1) as usize);
    let chunks: Vec<Result<Vec<TrialResult>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers as u64)
            .map(|w| {
                let ids = ids.clone();
                scope.spawn(move || {
                    let mut out = Vec::new();
                    let mut id = ids.start + w;
                    while id < ids.end {
                        let (outcome, transcript) = run_trial(set, cfg, id)?;
                        out.push(TrialResult { trial_id: id, outcome, transcript });
                        id += workers as u64;
                    }
                    Ok(out)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("trial worker panicked")).collect()
    });
    let mut all = Vec::with_capacity(count as usize);
    for chunk in chunks {
        all.extend(chunk?);
    }
    all.sort_by_key(|r| r.trial_id);
    Ok(all)
}
