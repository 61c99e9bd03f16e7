use ghzsim::accounting::*;
use ghzsim::oracle::{outcome_from_mask, MeasurementSet, OutcomeDistribution};
use ghzsim::protocol::Variant;
use ghzsim::randomness::CounterBits;
use proptest::prelude::*;

fn trial(id: u64, seed: u64, n: usize) -> TrialSummary {
    let w = |i| CounterBits::word(seed, i);
    TrialSummary {
        trial_id: id,
        outcome: outcome_from_mask(w(0) % (1 << n), n),
        random_bits: w(1) % 200,
        bits_to_leader: w(2) % 5000,
        bits_from_leader: w(3) % 500,
        outer_rounds: 1 + (w(4) % 6) as u32,
        inner_k_final: 1 + (w(5) % 30) as u32,
        bernoulli_k_final: 1 + (w(6) % 8) as u32,
        parallel_time_steps: w(7) % 9000,
        inner_iterations: Some((w(8) % 50) as u32),
    }
}

/// Multinomial draw from `d` by inversion on 53-bit uniforms.
fn multinomial(d: &OutcomeDistribution, trials: u64, seed: u64) -> Vec<u64> {
    let probs = d.probs_f64();
    let mut counts = vec![0u64; probs.len()];
    for i in 0..trials {
        let u = (CounterBits::word(seed, i) >> 11) as f64 / (1u64 << 53) as f64;
        let mut acc = 0.0;
        let mut cell = probs.len() - 1;
        for (j, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                cell = j;
                break;
            }
        }
        counts[cell] += 1;
    }
    counts
}

#[test]
fn calibration_draws_from_the_oracle_pass() {
    let m = MeasurementSet::all_zero(3).unwrap();
    let d = ghzsim::oracle::full_distribution(&m).unwrap();
    let passes = (0..200).filter(|&s| gof_test(&multinomial(&d, 5000, s), &d).unwrap().pass).count();
    assert!(passes >= 198, "{passes}/200");
}

#[test]
fn x_basis_pools_nothing_and_excludes_zero_cells() {
    let m = MeasurementSet::all_zero(3).unwrap();
    let d = ghzsim::oracle::full_distribution(&m).unwrap();
    let g = gof_test(&multinomial(&d, 10_000, 1), &d).unwrap();
    assert!(g.statistic.is_finite());
    assert_eq!(g.cells, 4);
    assert_eq!(g.degrees_of_freedom, 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn aggregate_ignores_order(seed in any::<u64>(), len in 1usize..200, rot in 0usize..200) {
        let trials: Vec<TrialSummary> = (0..len as u64).map(|i| trial(i, seed ^ i, 3)).collect();
        let mut shuffled = trials.clone();
        shuffled.rotate_left(rot % len);
        shuffled.reverse();
        let a = aggregate(3, Variant::Sequential, &trials, 16).unwrap();
        let b = aggregate(3, Variant::Sequential, &shuffled, 16).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn csv_round_trip_preserves_flags(seed in any::<u64>(), len in 1usize..100) {
        let trials: Vec<TrialSummary> = (0..len as u64).map(|i| trial(i, seed ^ i, 4)).collect();
        let mut buf = Vec::new();
        write_trials_csv(&mut buf, &trials).unwrap();
        let back = read_trials_csv(&buf[..]).unwrap();
        let a = aggregate(4, Variant::Doubling, &trials, 16).unwrap();
        let b = aggregate(4, Variant::Doubling, &back, 16).unwrap();
        prop_assert_eq!(a.checks, b.checks);
        prop_assert_eq!(a.all_pass, b.all_pass);
        prop_assert_eq!(a.total_bits, b.total_bits);
        prop_assert!(b.inner_iterations.is_none());
    }
}
