//! Exact outcome probabilities of GHZ measurements, computed two ways: the
//! convex decomposition over the half-angle amplitudes, and the product of
//! per-party trace terms.

use crate::error::{Error, Result};
use crate::numerics::{sin_cos, AlphaSquared, AngleKind, Ball, CsFactor, CsReal, Dyadic, ExactAngle, ExactReal};

/// Working precision of the oracles.
pub const ORACLE_PREC: u32 = 128;
/// Guaranteed accuracy of every oracle value, in bits.
pub const P_OUT: u32 = 60;
/// Largest party count [`full_distribution`] will enumerate.
pub const N_ENUM: usize = 16;

/// The `n` measurement angle pairs `(θⱼ, φⱼ)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementSet {
    thetas: Vec<ExactAngle>,
    phis: Vec<ExactAngle>,
}

impl MeasurementSet {
    pub fn new(thetas: Vec<ExactAngle>, phis: Vec<ExactAngle>) -> Result<Self> {
        if thetas.is_empty() || thetas.len() != phis.len() {
            return Err(Error::InvalidConfig(format!(
                "need n ≥ 1 angle pairs, got {} azimuths and {} elevations",
                thetas.len(),
                phis.len()
            )));
        }
        if thetas.iter().any(|t| t.kind() != AngleKind::Azimuthal) || phis.iter().any(|p| p.kind() != AngleKind::Elevation) {
            return Err(Error::InvalidConfig("angle kinds do not match their roles".into()));
        }
        Ok(MeasurementSet { thetas, phis })
    }

    /// `n` parties all measuring at `(θ, φ)`.
    pub fn uniform(n: usize, theta: ExactAngle, phi: ExactAngle) -> Result<Self> {
        MeasurementSet::new(vec![theta; n], vec![phi; n])
    }

    /// `n` parties measuring in the equatorial plane at `θ = φ = 0`.
    pub fn all_zero(n: usize) -> Result<Self> {
        MeasurementSet::uniform(n, ExactAngle::zero(AngleKind::Azimuthal), ExactAngle::zero(AngleKind::Elevation))
    }

    pub fn n(&self) -> usize {
        self.thetas.len()
    }

    pub fn theta(&self, j: usize) -> &ExactAngle {
        &self.thetas[j]
    }

    pub fn phi(&self, j: usize) -> &ExactAngle {
        &self.phis[j]
    }

    pub fn thetas(&self) -> &[ExactAngle] {
        &self.thetas
    }

    pub fn phis(&self) -> &[ExactAngle] {
        &self.phis
    }

    /// `Σθⱼ`, exactly.
    pub fn total_theta(&self) -> Dyadic {
        self.thetas.iter().fold(Dyadic::zero(), |acc, t| &acc + t.value())
    }

    /// Index of the first party with `φⱼ ≠ 0`, if any.
    pub fn first_off_equator(&self) -> Option<usize> {
        self.phis.iter().position(|p| !p.is_zero())
    }

    pub fn is_equatorial(&self) -> bool {
        self.first_off_equator().is_none()
    }

    /// `αⱼ² = (1 + sin φⱼ)/2`, the probability that party `j` draws `+1`.
    pub fn alpha_squared(&self, j: usize) -> AlphaSquared {
        AlphaSquared { phi: self.phis[j].value().clone() }
    }
}

/// Outcome vector `x ∈ {−1,+1}ⁿ` from a mask whose bit `j` is set iff
/// `xⱼ = −1`.
pub fn outcome_from_mask(mask: u64, n: usize) -> Vec<i8> {
    (0..n).map(|j| if mask >> j & 1 == 1 { -1 } else { 1 }).collect()
}

pub fn mask_from_outcome(x: &[i8]) -> u64 {
    x.iter().enumerate().fold(0, |m, (j, &v)| if v < 0 { m | 1 << j } else { m })
}

/// `"+-+"` style rendering of an outcome, party 1 first.
pub fn outcome_string(x: &[i8]) -> String {
    x.iter().map(|&v| if v < 0 { '-' } else { '+' }).collect()
}

pub fn parse_outcome_string(s: &str) -> Result<Vec<i8>> {
    s.chars()
        .map(|c| match c {
            '+' => Ok(1),
            '-' => Ok(-1),
            _ => Err(Error::InvalidConfig(format!("bad outcome string {s:?}"))),
        })
        .collect()
}

fn check_len(m: &MeasurementSet, x: &[i8]) {
    assert_eq!(m.n(), x.len(), "outcome length must equal the party count");
}

/// `a₁ = Π cos(½(φⱼ − πxⱼ/2))` and `a₂ = Π −sin(½(φⱼ − πxⱼ/2))`.
pub fn amplitudes(m: &MeasurementSet, x: &[i8]) -> (Ball, Ball) {
    check_len(m, x);
    let mut a1 = Ball::exact_int(1, ORACLE_PREC);
    let mut a2 = Ball::exact_int(1, ORACLE_PREC);
    for (phi, &xj) in m.phis.iter().zip(x) {
        let phi = phi.value().clone();
        a1 = a1.mul(&CsReal { phi: phi.clone(), x: xj, factor: CsFactor::Cos }.enclose(ORACLE_PREC));
        a2 = a2.mul(&CsReal { phi, x: xj, factor: CsFactor::NegSin }.enclose(ORACLE_PREC));
    }
    (a1, a2)
}

/// The four sub-distributions at one outcome.
#[derive(Debug, Clone)]
pub struct SubDistributions {
    /// `½(a₁ + a₂)²`
    pub p1: Ball,
    /// `½(a₁ − a₂)²`
    pub p2: Ball,
    /// `a₁²`
    pub q1: Ball,
    /// `a₂²`
    pub q2: Ball,
}

pub fn sub_distributions(m: &MeasurementSet, x: &[i8]) -> SubDistributions {
    let (a1, a2) = amplitudes(m, x);
    SubDistributions {
        p1: a1.add(&a2).square().half(),
        p2: a1.sub(&a2).square().half(),
        q1: a1.square(),
        q2: a2.square(),
    }
}

/// `(cos²(θ/2), sin²(θ/2))` for `θ = Σθⱼ`.
pub fn branch_weights(m: &MeasurementSet) -> (Ball, Ball) {
    let (s, c) = sin_cos(&Ball::from_dyadic(&m.total_theta().half(), ORACLE_PREC));
    (c.square(), s.square())
}

/// `p(x) = cos²(θ/2)·p₁(x) + sin²(θ/2)·p₂(x)`.
pub fn ghz_prob(m: &MeasurementSet, x: &[i8]) -> Ball {
    let (w1, w2) = branch_weights(m);
    let sub = sub_distributions(m, x);
    w1.mul(&sub.p1).add(&w2.mul(&sub.p2))
}

/// `p(x) = ½(f₁ + f₂ + f₃ + f₄)` from the per-party trace terms
/// `cos²u = (1 + x sin φ)/2`, `sin²u = (1 − x sin φ)/2` and
/// `−e^{iθ} sin u cos u = e^{iθ}·x cos φ/2`, with `f₃ = conj(f₂)`.
pub fn trace_prob(m: &MeasurementSet, x: &[i8]) -> Ball {
    check_len(m, x);
    let p = ORACLE_PREC;
    let one = Ball::exact_int(1, p);
    let mut f1 = one.clone();
    let mut f4 = one.clone();
    let mut re = one.clone();
    let mut im = Ball::zero(p);
    for (j, &xj) in x.iter().enumerate().take(m.n()) {
        let (sin_phi, cos_phi) = sin_cos(&Ball::from_dyadic(m.phi(j).value(), p));
        let (sin_theta, cos_theta) = sin_cos(&Ball::from_dyadic(m.theta(j).value(), p));
        let xs = sin_phi.mul_int(xj as i64);
        f1 = f1.mul(&one.add(&xs).half());
        f4 = f4.mul(&one.sub(&xs).half());
        let w = cos_phi.mul_int(xj as i64).half();
        let (zr, zi) = (cos_theta.mul(&w), sin_theta.mul(&w));
        let nr = re.mul(&zr).sub(&im.mul(&zi));
        let ni = re.mul(&zi).add(&im.mul(&zr));
        re = nr;
        im = ni;
    }
    // f₂ + f₃ = 2 Re f₂
    f1.add(&f4).add(&re.mul_int(2)).half()
}

/// Probabilities over all `2ⁿ` outcomes, indexed by outcome mask.
#[derive(Debug, Clone)]
pub struct OutcomeDistribution {
    n: usize,
    table: Vec<Ball>,
}

impl OutcomeDistribution {
    pub fn from_table(n: usize, table: Vec<Ball>) -> Self {
        assert_eq!(table.len(), 1 << n);
        OutcomeDistribution { n, table }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> &[Ball] {
        &self.table
    }

    pub fn prob(&self, mask: u64) -> &Ball {
        &self.table[mask as usize]
    }

    pub fn probs_f64(&self) -> Vec<f64> {
        self.table.iter().map(Ball::to_f64).collect()
    }

    pub fn total(&self) -> Ball {
        self.table.iter().fold(Ball::zero(ORACLE_PREC), |acc, b| acc.add(b))
    }

    /// Largest error radius over the table, as a real number.
    pub fn max_error(&self) -> f64 {
        self.table.iter().map(Ball::rad_f64).fold(0.0, f64::max)
    }

    /// `Σₓ (Πxⱼ)·p(x)`.
    pub fn parity_correlation(&self) -> f64 {
        self.table
            .iter()
            .enumerate()
            .map(|(mask, p)| if (mask as u64).count_ones().is_multiple_of(2) { p.to_f64() } else { -p.to_f64() })
            .sum()
    }
}

/// Tabulates `ghz_prob` over every outcome.
pub fn full_distribution(m: &MeasurementSet) -> Result<OutcomeDistribution> {
    tabulate(m, ghz_prob)
}

/// Tabulates `trace_prob` over every outcome.
pub fn full_trace_distribution(m: &MeasurementSet) -> Result<OutcomeDistribution> {
    tabulate(m, trace_prob)
}

fn tabulate(m: &MeasurementSet, f: fn(&MeasurementSet, &[i8]) -> Ball) -> Result<OutcomeDistribution> {
    let n = m.n();
    if n > N_ENUM {
        return Err(Error::TooLarge { n, cap: N_ENUM });
    }
    let table = (0..1u64 << n).map(|mask| f(m, &outcome_from_mask(mask, n))).collect();
    Ok(OutcomeDistribution { n, table })
}

/// `cos(Σθⱼ)`, the expected product of the outcomes when every `φⱼ = 0`.
pub fn equatorial_correlation(m: &MeasurementSet) -> Result<Ball> {
    if let Some(party) = m.first_off_equator() {
        return Err(Error::NotEquatorial { party: party + 1 });
    }
    let (_, c) = sin_cos(&Ball::from_dyadic(&m.total_theta(), ORACLE_PREC));
    Ok(c)
}

/// Shannon entropy in bits, over entries above `2^−P_OUT`.
pub fn entropy(d: &OutcomeDistribution) -> f64 {
    let floor = 2f64.powi(-(P_OUT as i32));
    d.probs_f64().into_iter().filter(|&p| p > floor).map(|p| -p * p.log2()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::AngleUnit;

    fn angle(s: &str, kind: AngleKind) -> ExactAngle {
        ExactAngle::parse(s, AngleUnit::Pi, kind).unwrap()
    }

    fn close(b: &Ball, v: f64) -> bool {
        (b.to_f64() - v).abs() < 1e-15 && b.rad_f64() < 2f64.powi(-(P_OUT as i32))
    }

    #[test]
    fn amplitude_examples() {
        let m = MeasurementSet::all_zero(1).unwrap();
        let (a1, a2) = amplitudes(&m, &[1]);
        assert!(close(&a1, 0.5f64.sqrt()) && close(&a2, 0.5f64.sqrt()));
        let m3 = MeasurementSet::all_zero(3).unwrap();
        for mask in 0..8 {
            let x = outcome_from_mask(mask, 3);
            let (a1, a2) = amplitudes(&m3, &x);
            let parity = (x[0] * x[1] * x[2]) as f64;
            assert!(close(&a1, 2f64.powf(-1.5)));
            assert!(close(&a2, 2f64.powf(-1.5) * parity));
        }
        let pole = MeasurementSet::uniform(1, ExactAngle::zero(AngleKind::Azimuthal), angle("1/2", AngleKind::Elevation)).unwrap();
        let (a1, a2) = amplitudes(&pole, &[1]);
        assert!(close(&a1, 1.0) && close(&a2, 0.0));
    }

    #[test]
    fn sub_distribution_examples() {
        let s = sub_distributions(&MeasurementSet::all_zero(1).unwrap(), &[1]);
        assert!(close(&s.p1, 1.0) && close(&s.p2, 0.0) && close(&s.q1, 0.5) && close(&s.q2, 0.5));
        let s = sub_distributions(&MeasurementSet::all_zero(3).unwrap(), &[1, 1, -1]);
        assert!(close(&s.p1, 0.0) && close(&s.p2, 0.25));
    }

    #[test]
    fn probability_examples() {
        let m3 = MeasurementSet::all_zero(3).unwrap();
        assert!(close(&ghz_prob(&m3, &[1, 1, 1]), 0.25));
        assert!(close(&ghz_prob(&m3, &[1, 1, -1]), 0.0));
        let m1 = MeasurementSet::all_zero(1).unwrap();
        assert!(close(&ghz_prob(&m1, &[1]), 1.0));
        assert!(close(&trace_prob(&m1, &[1]), 1.0));
        let m2 = MeasurementSet::all_zero(2).unwrap();
        assert!(close(&trace_prob(&m2, &[1, -1]), 0.0));
    }

    #[test]
    fn distribution_examples() {
        let d1 = full_distribution(&MeasurementSet::all_zero(1).unwrap()).unwrap();
        assert!(close(d1.prob(0), 1.0) && close(d1.prob(1), 0.0));
        let d3 = full_distribution(&MeasurementSet::all_zero(3).unwrap()).unwrap();
        for mask in 0..8u64 {
            let want = if mask.count_ones() % 2 == 0 { 0.25 } else { 0.0 };
            assert!(close(d3.prob(mask), want));
        }
        assert!((entropy(&d3) - 2.0).abs() < 1e-12);
        assert!(matches!(full_distribution(&MeasurementSet::all_zero(17).unwrap()), Err(Error::TooLarge { n: 17, cap: 16 })));
    }

    #[test]
    fn entropy_examples() {
        let point = OutcomeDistribution::from_table(2, vec![Ball::exact_int(1, 8), Ball::zero(8), Ball::zero(8), Ball::zero(8)]);
        assert_eq!(entropy(&point), 0.0);
        let quarter = Ball::new(1.into(), 0, 2);
        let uniform = OutcomeDistribution::from_table(2, vec![quarter; 4]);
        assert!((entropy(&uniform) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn equatorial_correlation_examples() {
        let zero = MeasurementSet::all_zero(4).unwrap();
        assert!(close(&equatorial_correlation(&zero).unwrap(), 1.0));
        let third = MeasurementSet::new(
            vec![angle("1/6", AngleKind::Azimuthal), angle("1/6", AngleKind::Azimuthal)],
            vec![ExactAngle::zero(AngleKind::Elevation); 2],
        )
        .unwrap();
        assert!((equatorial_correlation(&third).unwrap().to_f64() - 0.5).abs() < 1e-15);
        let right = MeasurementSet::uniform(1, angle("1/2", AngleKind::Azimuthal), ExactAngle::zero(AngleKind::Elevation)).unwrap();
        assert!(equatorial_correlation(&right).unwrap().to_f64().abs() < 1e-15);
        let tilted = MeasurementSet::new(
            vec![ExactAngle::zero(AngleKind::Azimuthal); 2],
            vec![ExactAngle::zero(AngleKind::Elevation), angle("1/8", AngleKind::Elevation)],
        )
        .unwrap();
        assert!(matches!(equatorial_correlation(&tilted), Err(Error::NotEquatorial { party: 2 })));
    }

    #[test]
    fn outcome_encodings_round_trip() {
        let x = vec![1, -1, -1, 1];
        assert_eq!(mask_from_outcome(&x), 0b0110);
        assert_eq!(outcome_from_mask(0b0110, 4), x);
        assert_eq!(outcome_string(&x), "+--+");
        assert_eq!(parse_outcome_string("+--+").unwrap(), x);
    }
}
