use ghzsim::numerics::{AngleKind, Dyadic, ExactAngle};
use ghzsim::oracle::*;
use proptest::prelude::*;

#[derive(Clone, Copy, Debug)]
struct C(f64, f64);

impl C {
    fn mul(self, o: C) -> C {
        C(self.0 * o.0 - self.1 * o.1, self.0 * o.1 + self.1 * o.0)
    }
    fn add(self, o: C) -> C {
        C(self.0 + o.0, self.1 + o.1)
    }
    fn conj(self) -> C {
        C(self.0, -self.1)
    }
}

/// `⟨ψ|⊗ⱼ Pⱼ|ψ⟩` on the full `2ⁿ` state vector, with
/// `Pⱼ = (I + xⱼ Mⱼ)/2`.
fn brute_force(thetas: &[f64], phis: &[f64], x: &[i8]) -> f64 {
    let n = thetas.len();
    let dim = 1usize << n;
    let amp = 0.5f64.sqrt();
    let mut psi = vec![C(0.0, 0.0); dim];
    psi[0] = C(amp, 0.0);
    psi[dim - 1] = C(amp, 0.0);
    for j in 0..n {
        let (s, c) = (phis[j].sin(), phis[j].cos());
        let e = C(thetas[j].cos(), thetas[j].sin());
        let xs = x[j] as f64;
        // rows of (I + xM)/2 on qubit j
        let p = [
            [C((1.0 + xs * s) / 2.0, 0.0), e.conj().mul(C(xs * c / 2.0, 0.0))],
            [e.mul(C(xs * c / 2.0, 0.0)), C((1.0 - xs * s) / 2.0, 0.0)],
        ];
        let bit = n - 1 - j;
        let mut next = vec![C(0.0, 0.0); dim];
        for (i, v) in psi.iter().enumerate() {
            let b = (i >> bit) & 1;
            for (r, row) in p.iter().enumerate() {
                let target = (i & !(1 << bit)) | (r << bit);
                next[target] = next[target].add(row[b].mul(*v));
            }
        }
        psi = next;
    }
    // ⟨ψ₀|P|ψ₀⟩ with ψ₀ the GHZ vector
    let mut acc = C(0.0, 0.0);
    acc = acc.add(C(amp, 0.0).mul(psi[0]));
    acc = acc.add(C(amp, 0.0).mul(psi[dim - 1]));
    acc.0
}

fn set_from(thetas: &[f64], phis: &[f64]) -> MeasurementSet {
    MeasurementSet::new(
        thetas.iter().map(|&t| ExactAngle::new(Dyadic::from_f64(t), AngleKind::Azimuthal).unwrap()).collect(),
        phis.iter().map(|&p| ExactAngle::new(Dyadic::from_f64(p), AngleKind::Elevation).unwrap()).collect(),
    )
    .unwrap()
}

fn angles(max_n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1..=max_n).prop_flat_map(|n| {
        (
            proptest::collection::vec(0.0f64..6.2, n),
            proptest::collection::vec(-1.57f64..1.57, n),
        )
    })
}

/// The ball's lower end is at most `v + 2^−60`.
fn at_most(b: &ghzsim::numerics::Ball, v: f64) -> bool {
    let lo = b.mid_dyadic().to_f64() - b.rad_f64();
    lo <= v + 2f64.powi(-60)
}

const TOL: f64 = 1.0 / (1u64 << 40) as f64;

#[test]
fn small_cases_match_brute_force() {
    assert!((brute_force(&[0.0; 3], &[0.0; 3], &[1, 1, 1]) - 0.25).abs() < 1e-12);
    assert!(brute_force(&[0.0; 3], &[0.0; 3], &[1, 1, -1]).abs() < 1e-12);
    assert!((brute_force(&[0.0], &[0.0], &[1]) - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn routes_agree((thetas, phis) in angles(8)) {
        let m = set_from(&thetas, &phis);
        let d1 = full_distribution(&m).unwrap();
        let d2 = full_trace_distribution(&m).unwrap();
        for mask in 0..1u64 << m.n() {
            prop_assert!((d1.prob(mask).to_f64() - d2.prob(mask).to_f64()).abs() <= TOL);
        }
        prop_assert!(d1.max_error() <= 2f64.powi(-60));
        prop_assert!(d2.max_error() <= 2f64.powi(-60));
        prop_assert!((d1.total().to_f64() - 1.0).abs() <= TOL);
    }

    #[test]
    fn matches_state_vector((thetas, phis) in angles(6)) {
        let m = set_from(&thetas, &phis);
        let d = full_distribution(&m).unwrap();
        for mask in 0..1u64 << m.n() {
            let x = outcome_from_mask(mask, m.n());
            let want = brute_force(&thetas, &phis, &x);
            prop_assert!((d.prob(mask).to_f64() - want).abs() < 1e-12, "mask {} got {} want {}", mask, d.prob(mask).to_f64(), want);
        }
    }

    #[test]
    fn decomposition_identity_and_envelope((thetas, phis) in angles(8)) {
        let m = set_from(&thetas, &phis);
        let n = m.n();
        let mut sums = [0.0f64; 4];
        for mask in 0..1u64 << n {
            let s = sub_distributions(&m, &outcome_from_mask(mask, n));
            let q = s.q1.add(&s.q2);
            prop_assert!(at_most(&s.p1.add(&s.p2).sub(&q), 0.0) && at_most(&q.sub(&s.p1).sub(&s.p2), 0.0));
            prop_assert!(at_most(&s.p1.sub(&q), 0.0));
            prop_assert!(at_most(&s.p2.sub(&q), 0.0));
            let (p1, p2, q1, q2) = (s.p1.to_f64(), s.p2.to_f64(), s.q1.to_f64(), s.q2.to_f64());
            for (acc, v) in sums.iter_mut().zip([p1, p2, q1, q2]) {
                *acc += v;
            }
        }
        for total in sums {
            prop_assert!((total - 1.0).abs() <= TOL);
        }
    }

    #[test]
    fn equatorial_parity_correlation(thetas in proptest::collection::vec(0.0f64..6.2, 1..=8)) {
        let m = set_from(&thetas, &vec![0.0; thetas.len()]);
        let d = full_distribution(&m).unwrap();
        let c = equatorial_correlation(&m).unwrap().to_f64();
        prop_assert!((d.parity_correlation() - c).abs() <= TOL);
        prop_assert!(entropy(&d) <= m.n() as f64 + 1e-9);
    }
}
