//! Quantum-style descriptions to compare against the vessels.
//!
//! The pre-measurement state of the vessels is a superposition over the 11
//! final splits `p_A(x) ⊗ p_B(10 - x)`, `x = 0..=10` liters, with complex
//! amplitudes whose squared moduli are the Born weights. The source writes the
//! sum over `x = 1..11` while listing the states as `x ∈ {0, 1, ..., 10}`;
//! here index `x` is the liter count, 0 through 10.
//!
//! The spin singlet reference uses the textbook prediction `E(a, b) = -a·b`.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bell::{combination, CoincidenceSource};
use crate::error::{Error, Result};
use crate::streams::{self, Domain};
use crate::vessel::{CoincidencePair, CoincidenceRun, ExperimentKind, Outcome};

/// Number of final product states.
pub const STATE_COUNT: usize = 11;
/// Liters shared between the two reference vessels in the discretized split.
pub const SPLIT_LITERS: u8 = 10;
/// Allowed deviation of the total Born weight from 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;
/// Allowed deviation of a direction's norm from 1.
pub const UNIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VesselSuperpositionState {
    amplitudes: [Complex64; STATE_COUNT],
}

/// Validates (or, with `normalize`, rescales) 11 amplitudes into a state.
pub fn make_state(amplitudes: &[Complex64], normalize: bool) -> Result<VesselSuperpositionState> {
    let mut amps: [Complex64; STATE_COUNT] = amplitudes.try_into().map_err(|_| Error::WrongArity {
        expected: STATE_COUNT,
        found: amplitudes.len(),
    })?;
    let weight: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if !weight.is_finite() {
        return Err(Error::NotNormalized(weight));
    }
    if normalize {
        if weight == 0.0 {
            return Err(Error::NotNormalized(weight));
        }
        let scale = weight.sqrt().recip();
        for a in &mut amps {
            *a *= scale;
        }
    } else if (weight - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized(weight));
    }
    Ok(VesselSuperpositionState { amplitudes: amps })
}

impl VesselSuperpositionState {
    pub fn amplitudes(&self) -> &[Complex64; STATE_COUNT] {
        &self.amplitudes
    }

    pub fn probabilities(&self) -> [f64; STATE_COUNT] {
        self.amplitudes.map(|a| a.norm_sqr())
    }

    /// Only branch `x` present.
    pub fn basis(x: usize) -> Result<Self> {
        if x >= STATE_COUNT {
            return Err(Error::WrongArity { expected: STATE_COUNT, found: x + 1 });
        }
        let mut amplitudes = [Complex64::new(0.0, 0.0); STATE_COUNT];
        amplitudes[x] = Complex64::new(1.0, 0.0);
        Ok(VesselSuperpositionState { amplitudes })
    }

    pub fn uniform() -> Self {
        let a = Complex64::new((STATE_COUNT as f64).sqrt().recip(), 0.0);
        VesselSuperpositionState { amplitudes: [a; STATE_COUNT] }
    }

    /// The 11×11 coefficient matrix `M[x][y]` of the state in the product
    /// basis `p_A(x) ⊗ p_B(y)`; only `y = 10 - x` is populated.
    pub fn coefficient_matrix(&self) -> Vec<Vec<Complex64>> {
        let mut m = vec![vec![Complex64::new(0.0, 0.0); STATE_COUNT]; STATE_COUNT];
        for (x, &a) in self.amplitudes.iter().enumerate() {
            m[x][STATE_COUNT - 1 - x] = a;
        }
        m
    }
}

/// A collapsed split: `x` liters on the left, `10 - x` on the right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalProductState {
    pub x: u8,
}

impl FinalProductState {
    pub fn left_liters(&self) -> u8 {
        self.x
    }

    pub fn right_liters(&self) -> u8 {
        SPLIT_LITERS - self.x
    }
}

fn draw_branch<R: Rng + ?Sized>(probs: &[f64; STATE_COUNT], rng: &mut R) -> FinalProductState {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    let mut last = 0;
    for (x, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        last = x;
        cumulative += p;
        if u < cumulative {
            return FinalProductState { x: x as u8 };
        }
    }
    // rounding left u above the accumulated total
    FinalProductState { x: last as u8 }
}

/// One Born-rule measurement of the split.
pub fn born_sample(state: &VesselSuperpositionState, seed: u64) -> FinalProductState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw_branch(&state.probabilities(), &mut rng)
}

/// `n` independent Born samples from seed-derived streams.
pub fn born_samples(state: &VesselSuperpositionState, seed: u64, n: usize) -> Vec<FinalProductState> {
    let probs = state.probabilities();
    let mut out = Vec::with_capacity(n);
    for (chunk, _, len) in streams::chunks(n) {
        let mut rng = streams::substream(seed, Domain::Born, 0, chunk);
        out.extend((0..len).map(|_| draw_branch(&probs, &mut rng)));
    }
    out
}

pub fn born_histogram(state: &VesselSuperpositionState, seed: u64, n: usize) -> [u64; STATE_COUNT] {
    let mut counts = [0u64; STATE_COUNT];
    for s in born_samples(state, seed, n) {
        counts[s.x as usize] += 1;
    }
    counts
}

/// Singular values of a square complex matrix by one-sided Jacobi rotations,
/// in descending order.
pub fn singular_values(matrix: &[Vec<Complex64>]) -> Vec<f64> {
    let n = matrix.len();
    // work on columns
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|j| matrix.iter().map(|row| row[j]).collect()).collect();
    let dot = |u: &[Complex64], v: &[Complex64]| -> Complex64 { u.iter().zip(v).map(|(a, b)| a.conj() * b).sum() };

    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = dot(&cols[i], &cols[i]).re;
                let beta = dot(&cols[j], &cols[j]).re;
                let gamma = dot(&cols[i], &cols[j]);
                let g = gamma.norm();
                if g <= f64::EPSILON * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                // rotate column j by the phase of gamma so the overlap is real
                let phase = gamma.conj() / g;
                for v in cols[j].iter_mut() {
                    *v *= phase;
                }
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = (1.0 + t * t).sqrt().recip();
                let s = c * t;
                let (head, tail) = cols.split_at_mut(j);
                for (vi, vj) in head[i].iter_mut().zip(tail[0].iter_mut()) {
                    let (ai, aj) = (*vi, *vj);
                    *vi = ai * c - aj * s;
                    *vj = ai * s + aj * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| dot(c, c).re.sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of Schmidt coefficients above `tol`. Rank 2 or more means the
/// state does not factor into a left state times a right state.
pub fn schmidt_rank(state: &VesselSuperpositionState, tol: f64) -> Result<usize> {
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::InvalidTolerance(tol));
    }
    Ok(singular_values(&state.coefficient_matrix())
        .into_iter()
        .filter(|&s| s > tol)
        .count())
}

pub fn is_entangled(state: &VesselSuperpositionState, tol: f64) -> Result<bool> {
    Ok(schmidt_rank(state, tol)? >= 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasurementDirection([f64; 3]);

impl MeasurementDirection {
    pub fn new(v: [f64; 3]) -> Result<Self> {
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm.is_nan() || (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::NotUnit(norm));
        }
        Ok(MeasurementDirection(v))
    }

    /// Direction at `degrees` in the x-y plane.
    pub fn planar(degrees: f64) -> Self {
        let (s, c) = degrees.to_radians().sin_cos();
        MeasurementDirection([c, s, 0.0])
    }

    /// Uniform on the unit sphere.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let z: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let r = (1.0 - z * z).max(0.0).sqrt();
        let v = [r * phi.cos(), r * phi.sin(), z];
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        MeasurementDirection(v.map(|c| c / norm))
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    pub fn dot(&self, other: &MeasurementDirection) -> f64 {
        self.0.iter().zip(other.0).map(|(a, b)| a * b).sum()
    }
}

impl<'de> Deserialize<'de> for MeasurementDirection {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = <[f64; 3]>::deserialize(d)?;
        MeasurementDirection::new(v).map_err(serde::de::Error::custom)
    }
}

pub fn singlet_expectation(a: &MeasurementDirection, b: &MeasurementDirection) -> f64 {
    -a.dot(b)
}

/// Joint ±1 outcomes with `P(same) = (1 - a·b)/2`; each side alone is a fair
/// coin.
pub fn singlet_sample_with<R: Rng + ?Sized>(
    a: &MeasurementDirection,
    b: &MeasurementDirection,
    rng: &mut R,
) -> (Outcome, Outcome) {
    let p_same = ((1.0 - a.dot(b)) / 2.0).clamp(0.0, 1.0);
    let left = Outcome::from_sign(rng.random::<bool>());
    let right = if rng.random::<f64>() < p_same { left } else { left.flip() };
    (left, right)
}

pub fn singlet_sample(a: &MeasurementDirection, b: &MeasurementDirection, seed: u64) -> (Outcome, Outcome) {
    singlet_sample_with(a, b, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Settings for the four experiments on a spin singlet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingletSettings {
    pub a: MeasurementDirection,
    pub a_prime: MeasurementDirection,
    pub b: MeasurementDirection,
    pub b_prime: MeasurementDirection,
}

impl SingletSettings {
    /// Planar angles in degrees, ordered A, A', B, B'.
    pub fn planar(angles: [f64; 4]) -> Self {
        let [a, a_prime, b, b_prime] = angles.map(MeasurementDirection::planar);
        SingletSettings { a, a_prime, b, b_prime }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        SingletSettings {
            a: MeasurementDirection::random(rng),
            a_prime: MeasurementDirection::random(rng),
            b: MeasurementDirection::random(rng),
            b_prime: MeasurementDirection::random(rng),
        }
    }

    pub fn direction(&self, kind: ExperimentKind) -> &MeasurementDirection {
        match kind {
            ExperimentKind::A => &self.a,
            ExperimentKind::APrime => &self.a_prime,
            ExperimentKind::B => &self.b,
            ExperimentKind::BPrime => &self.b_prime,
        }
    }

    pub fn expectation(&self, pair: CoincidencePair) -> f64 {
        singlet_expectation(self.direction(pair.left()), self.direction(pair.right()))
    }

    /// `E(A'B') + E(A'B) + E(AB') - E(AB)` from the exact expectations.
    pub fn analytic_statistic(&self) -> f64 {
        combination(
            self.expectation(CoincidencePair::APRIME_BPRIME),
            self.expectation(CoincidencePair::APRIME_B),
            self.expectation(CoincidencePair::A_BPRIME),
            self.expectation(CoincidencePair::AB),
        )
    }
}

impl CoincidenceSource for SingletSettings {
    fn sample_run(&self, pair: CoincidencePair, rng: &mut ChaCha8Rng) -> Result<CoincidenceRun> {
        let (l, r) = singlet_sample_with(self.direction(pair.left()), self.direction(pair.right()), rng);
        Ok(CoincidenceRun::new(pair, l, r))
    }
}

/// Largest `|statistic|` over `n` random setting quadruples.
pub fn random_settings_max(seed: u64, n: usize) -> f64 {
    let mut best = 0.0f64;
    for (chunk, _, len) in streams::chunks(n) {
        let mut rng = streams::substream(seed, Domain::DirectionSearch, 0, chunk);
        for _ in 0..len {
            best = best.max(SingletSettings::random(&mut rng).analytic_statistic().abs());
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn make_state_validation() {
        let mut amps = vec![c(0.0); 11];
        amps[5] = c(1.0);
        assert!(make_state(&amps, false).is_ok());
        assert!(make_state(&[c(1.0 / 11f64.sqrt()); 11], false).is_ok());
        assert!(matches!(make_state(&[c(1.0); 11], false), Err(Error::NotNormalized(w)) if (w - 11.0).abs() < 1e-12));
        assert_eq!(
            make_state(&[c(0.3); 10], false),
            Err(Error::WrongArity { expected: 11, found: 10 })
        );
        let s = make_state(&[c(1.0); 11], true).unwrap();
        assert!((s.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(make_state(&[c(0.0); 11], true).is_err());
    }

    #[test]
    fn tolerance_edge() {
        let mut amps = vec![c(0.0); 11];
        amps[0] = c((1.0 + 5e-10f64).sqrt());
        assert!(make_state(&amps, false).is_ok());
        amps[0] = c((1.0 + 5e-9f64).sqrt());
        assert!(make_state(&amps, false).is_err());
    }

    #[test]
    fn degenerate_sampling() {
        let s = VesselSuperpositionState::basis(5).unwrap();
        for seed in 0..50 {
            let f = born_sample(&s, seed);
            assert_eq!((f.left_liters(), f.right_liters()), (5, 5));
        }
        let mut amps = vec![c(0.0); 11];
        amps[0] = c(SQRT_2.recip());
        amps[10] = Complex64::new(0.0, SQRT_2.recip());
        let s = make_state(&amps, false).unwrap();
        let h = born_histogram(&s, 1, 10_000);
        assert_eq!(h[0] + h[10], 10_000);
        assert!(h[0] > 4_000 && h[10] > 4_000);
    }

    #[test]
    fn schmidt_ranks() {
        assert_eq!(schmidt_rank(&VesselSuperpositionState::basis(5).unwrap(), 1e-9).unwrap(), 1);
        assert_eq!(schmidt_rank(&VesselSuperpositionState::uniform(), 1e-9).unwrap(), 11);
        let mut amps = vec![c(0.0); 11];
        amps[0] = c(SQRT_2.recip());
        amps[10] = c(SQRT_2.recip());
        let s = make_state(&amps, false).unwrap();
        assert_eq!(schmidt_rank(&s, 1e-9).unwrap(), 2);
        assert!(is_entangled(&s, 1e-9).unwrap());
        assert!(schmidt_rank(&s, -1.0).is_err());
    }

    #[test]
    fn jacobi_on_dense_matrix() {
        // [[3, 0], [4, 5]] has singular values 3√5 and √5
        let m = vec![vec![c(3.0), c(0.0)], vec![c(4.0), c(5.0)]];
        let sv = singular_values(&m);
        assert!((sv[0] - 45f64.sqrt()).abs() < 1e-12);
        assert!((sv[1] - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn singlet_basics() {
        let z = MeasurementDirection::new([0.0, 0.0, 1.0]).unwrap();
        let x = MeasurementDirection::planar(0.0);
        assert_eq!(singlet_expectation(&z, &z), -1.0);
        assert_eq!(singlet_expectation(&x, &z), 0.0);
        assert!(matches!(MeasurementDirection::new([1.0, 1.0, 0.0]), Err(Error::NotUnit(_))));
        for seed in 0..200 {
            let (l, r) = singlet_sample(&z, &z, seed);
            assert_eq!(l, r.flip());
        }
    }

    #[test]
    fn optimal_planar_settings() {
        let s = SingletSettings::planar([0.0, 270.0, 45.0, 135.0]);
        assert!((s.analytic_statistic() - 2.0 * SQRT_2).abs() < 1e-12);
        // textbook CHSH angles in this label order cancel out
        let s = SingletSettings::planar([0.0, 90.0, 45.0, 135.0]);
        assert!(s.analytic_statistic().abs() < 1e-12);
    }

    #[test]
    fn random_search_respects_tsirelson() {
        let best = random_settings_max(5, 20_000);
        assert!(best <= 2.0 * SQRT_2 + 1e-9);
        assert!(best > 2.0);
    }
}
