//! Monte Carlo estimates of the four coincidence expectations and the Bell
//! combination `E(A'B') + E(A'B) + E(AB') - E(AB)`.
//!
//! In the usual CHSH labelling `S = E(a0,b0) - E(a0,b1) + E(a1,b0) + E(a1,b1)`
//! this is `a0 = A`, `a1 = A'`, `b0 = B'`, `b1 = B`. The local bound 2 and
//! the quantum bound 2√2 are textbook values; 4 is the algebraic maximum.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::streams::{self, Domain};
use crate::vessel::{run_coincidence, CoincidencePair, CoincidenceRun, SiphonDiameters, TiePolicy, VesselSystem};

/// Local hidden-variable bound on the combination.
pub const LOCAL_BOUND: f64 = 2.0;
/// Tsirelson bound, 2√2.
pub const QUANTUM_BOUND: f64 = 2.0 * std::f64::consts::SQRT_2;
/// Algebraic maximum.
pub const ALGEBRAIC_BOUND: f64 = 4.0;
/// Slack when comparing against the bounds.
pub const BOUND_TOLERANCE: f64 = 1e-12;

/// Measure over the siphon diameters, in cm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaDistribution {
    /// Independent uniform diameters on `[low, high)`.
    Uniform { low: f64, high: f64 },
}

impl Default for LambdaDistribution {
    fn default() -> Self {
        LambdaDistribution::Uniform { low: 0.5, high: 3.0 }
    }
}

impl LambdaDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LambdaDistribution::Uniform { low, high } => {
                if low.is_finite() && high.is_finite() && low > 0.0 && low < high {
                    Ok(())
                } else {
                    Err(Error::InvalidSampler { low, high })
                }
            }
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> SiphonDiameters {
        match *self {
            LambdaDistribution::Uniform { low, high } => {
                let a = rng.random_range(low..high);
                let b = rng.random_range(low..high);
                SiphonDiameters::new(a, b).expect("validated support is positive")
            }
        }
    }
}

/// A seeded source of hidden variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HiddenVariableSampler {
    distribution: LambdaDistribution,
    seed: u64,
}

impl HiddenVariableSampler {
    pub fn new(distribution: LambdaDistribution, seed: u64) -> Result<Self> {
        distribution.validate()?;
        Ok(HiddenVariableSampler { distribution, seed })
    }

    pub fn uniform(seed: u64) -> Self {
        HiddenVariableSampler {
            distribution: LambdaDistribution::default(),
            seed,
        }
    }

    pub fn distribution(&self) -> LambdaDistribution {
        self.distribution
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `n` diameters from the sampler's own stream, independent of the streams
    /// used for coincidence estimation.
    pub fn samples(&self, n: usize) -> Vec<SiphonDiameters> {
        let mut out = Vec::with_capacity(n);
        for (chunk, _, len) in streams::chunks(n) {
            let mut rng = streams::substream(self.seed, Domain::HiddenVariables, 0, chunk);
            out.extend((0..len).map(|_| self.distribution.draw(&mut rng)));
        }
        out
    }
}

/// Produces one coincidence run per call from a random stream.
pub trait CoincidenceSource: Sync {
    fn sample_run(&self, pair: CoincidencePair, rng: &mut ChaCha8Rng) -> Result<CoincidenceRun>;
}

/// The vessels with diameters redrawn for every run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VesselExperiment {
    pub distribution: LambdaDistribution,
    pub system: VesselSystem,
    pub tie_policy: TiePolicy,
}

impl CoincidenceSource for VesselExperiment {
    fn sample_run(&self, pair: CoincidencePair, rng: &mut ChaCha8Rng) -> Result<CoincidenceRun> {
        let lambda = self.distribution.draw(rng);
        run_coincidence(pair, lambda, self.system, self.tie_policy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectationEstimate {
    pub pair: CoincidencePair,
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
}

/// Running sum of ±1 products. Integer arithmetic keeps merges exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ProductTally {
    pub n: u64,
    pub sum: i64,
}

impl ProductTally {
    pub fn push(&mut self, run: &CoincidenceRun) {
        self.n += 1;
        self.sum += i64::from(run.product.value());
    }

    pub fn merge(self, other: ProductTally) -> ProductTally {
        ProductTally {
            n: self.n + other.n,
            sum: self.sum + other.sum,
        }
    }

    pub fn estimate(&self, pair: CoincidencePair) -> Result<ExpectationEstimate> {
        if self.n == 0 {
            return Err(Error::NoSamples);
        }
        let n = self.n as f64;
        let mean = self.sum as f64 / n;
        // Each product squares to 1, so the sample variance is
        // (n - sum^2 / n) / (n - 1).
        let stderr = if self.n > 1 {
            let spread = (self.n as i128 * self.n as i128 - self.sum as i128 * self.sum as i128) as f64;
            (spread / (n * (n - 1.0)) / n).sqrt()
        } else {
            0.0
        };
        Ok(ExpectationEstimate { pair, mean, stderr, n: self.n })
    }
}

fn tally_chunk<S: CoincidenceSource + ?Sized>(
    source: &S,
    pair: CoincidencePair,
    seed: u64,
    chunk: u64,
    len: usize,
) -> Result<ProductTally> {
    let mut rng = streams::substream(seed, Domain::Coincidence, pair.index() as u8, chunk);
    let mut tally = ProductTally::default();
    for _ in 0..len {
        tally.push(&source.sample_run(pair, &mut rng)?);
    }
    Ok(tally)
}

/// Estimates `E(pair)` from `n` runs, fanning chunks out over `workers`
/// threads (0 = rayon default). The result depends only on the source, seed,
/// pair and `n`.
pub fn estimate_with<S: CoincidenceSource + ?Sized>(
    source: &S,
    pair: CoincidencePair,
    seed: u64,
    n: usize,
    workers: usize,
) -> Result<ExpectationEstimate> {
    if n == 0 {
        return Err(Error::NoSamples);
    }
    let parts: Vec<_> = streams::chunks(n).collect();
    let tallies = streams::with_workers(workers, || {
        parts
            .par_iter()
            .map(|&(chunk, _, len)| tally_chunk(source, pair, seed, chunk, len))
            .collect::<Result<Vec<_>>>()
    })?;
    tallies
        .into_iter()
        .fold(ProductTally::default(), ProductTally::merge)
        .estimate(pair)
}

/// The individual runs behind [`estimate_with`], in stream order.
pub fn sample_runs<S: CoincidenceSource + ?Sized>(
    source: &S,
    pair: CoincidencePair,
    seed: u64,
    n: usize,
) -> Result<Vec<CoincidenceRun>> {
    let mut runs = Vec::with_capacity(n);
    for (chunk, _, len) in streams::chunks(n) {
        let mut rng = streams::substream(seed, Domain::Coincidence, pair.index() as u8, chunk);
        for _ in 0..len {
            runs.push(source.sample_run(pair, &mut rng)?);
        }
    }
    Ok(runs)
}

pub fn estimate_expectation(
    pair: CoincidencePair,
    sampler: &HiddenVariableSampler,
    system: VesselSystem,
    n: usize,
) -> Result<ExpectationEstimate> {
    let experiment = VesselExperiment {
        distribution: sampler.distribution,
        system,
        tie_policy: TiePolicy::Error,
    };
    estimate_with(&experiment, pair, sampler.seed, n, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// |S| ≤ 2
    Local,
    /// 2 < |S| ≤ 2√2
    QuantumAttainable,
    /// 2√2 < |S| ≤ 4
    SuperQuantum,
}

impl Classification {
    pub fn of(value: f64) -> Classification {
        let v = value.abs();
        if v <= LOCAL_BOUND + BOUND_TOLERANCE {
            Classification::Local
        } else if v <= QUANTUM_BOUND + BOUND_TOLERANCE {
            Classification::QuantumAttainable
        } else {
            Classification::SuperQuantum
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellStatistic {
    pub value: f64,
    /// Estimates in the order AB, A'B, AB', A'B'.
    pub components: [ExpectationEstimate; 4],
    pub classification: Classification,
}

/// The raw combination, summed left to right as written.
pub fn combination(e_aprime_bprime: f64, e_aprime_b: f64, e_a_bprime: f64, e_ab: f64) -> f64 {
    e_aprime_bprime + e_aprime_b + e_a_bprime - e_ab
}

pub fn bell_statistic(
    e_aprime_bprime: ExpectationEstimate,
    e_aprime_b: ExpectationEstimate,
    e_a_bprime: ExpectationEstimate,
    e_ab: ExpectationEstimate,
) -> Result<BellStatistic> {
    let expected = [
        (e_aprime_bprime, CoincidencePair::APRIME_BPRIME),
        (e_aprime_b, CoincidencePair::APRIME_B),
        (e_a_bprime, CoincidencePair::A_BPRIME),
        (e_ab, CoincidencePair::AB),
    ];
    for (estimate, pair) in expected {
        if estimate.pair != pair {
            return Err(Error::MismatchedPairs(format!(
                "expected {pair} in this slot, got {}",
                estimate.pair
            )));
        }
    }
    let value = combination(e_aprime_bprime.mean, e_aprime_b.mean, e_a_bprime.mean, e_ab.mean);
    Ok(BellStatistic {
        value,
        components: [e_ab, e_aprime_b, e_a_bprime, e_aprime_bprime],
        classification: Classification::of(value),
    })
}

/// Builds the statistic from estimates given in any order.
pub fn bell_statistic_from(estimates: &[ExpectationEstimate]) -> Result<BellStatistic> {
    let find = |pair: CoincidencePair| -> Result<ExpectationEstimate> {
        let mut hits = estimates.iter().filter(|e| e.pair == pair);
        match (hits.next(), hits.next()) {
            (Some(e), None) => Ok(*e),
            (None, _) => Err(Error::MismatchedPairs(format!("missing {pair}"))),
            (Some(_), Some(_)) => Err(Error::MismatchedPairs(format!("duplicate {pair}"))),
        }
    };
    if estimates.len() != 4 {
        return Err(Error::MismatchedPairs(format!("need 4 estimates, got {}", estimates.len())));
    }
    bell_statistic(
        find(CoincidencePair::APRIME_BPRIME)?,
        find(CoincidencePair::APRIME_B)?,
        find(CoincidencePair::A_BPRIME)?,
        find(CoincidencePair::AB)?,
    )
}

/// Estimates all four pairs with independent substreams and combines them.
pub fn run_experiment_with<S: CoincidenceSource + ?Sized>(
    source: &S,
    seed: u64,
    n_per_pair: usize,
    workers: usize,
) -> Result<BellStatistic> {
    let estimates = CoincidencePair::ALL
        .iter()
        .map(|&pair| estimate_with(source, pair, seed, n_per_pair, workers))
        .collect::<Result<Vec<_>>>()?;
    bell_statistic_from(&estimates)
}

pub fn run_full_experiment(
    sampler: &HiddenVariableSampler,
    system: VesselSystem,
    n_per_pair: usize,
) -> Result<BellStatistic> {
    let experiment = VesselExperiment {
        distribution: sampler.distribution,
        system,
        tie_policy: TiePolicy::Error,
    };
    run_experiment_with(&experiment, sampler.seed, n_per_pair, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(pair: CoincidencePair, mean: f64) -> ExpectationEstimate {
        ExpectationEstimate { pair, mean, stderr: 0.0, n: 1 }
    }

    #[test]
    fn ab_is_perfectly_anticorrelated() {
        let sampler = HiddenVariableSampler::uniform(42);
        let e = estimate_expectation(CoincidencePair::AB, &sampler, VesselSystem::default(), 1000).unwrap();
        assert_eq!((e.mean, e.stderr, e.n), (-1.0, 0.0, 1000));
        let e = estimate_expectation(CoincidencePair::APRIME_BPRIME, &sampler, VesselSystem::default(), 1).unwrap();
        assert_eq!(e.mean, 1.0);
        assert_eq!(
            estimate_expectation(CoincidencePair::AB, &sampler, VesselSystem::default(), 0),
            Err(Error::NoSamples)
        );
    }

    #[test]
    fn statistic_values() {
        let s = bell_statistic(
            est(CoincidencePair::APRIME_BPRIME, 1.0),
            est(CoincidencePair::APRIME_B, 1.0),
            est(CoincidencePair::A_BPRIME, 1.0),
            est(CoincidencePair::AB, -1.0),
        )
        .unwrap();
        assert_eq!(s.value, 4.0);
        assert_eq!(s.classification, Classification::SuperQuantum);

        let zeros: Vec<_> = CoincidencePair::ALL.iter().map(|&p| est(p, 0.0)).collect();
        let s = bell_statistic_from(&zeros).unwrap();
        assert_eq!((s.value, s.classification), (0.0, Classification::Local));
    }

    #[test]
    fn mismatched_pairs() {
        let r = bell_statistic(
            est(CoincidencePair::AB, 1.0),
            est(CoincidencePair::APRIME_B, 1.0),
            est(CoincidencePair::A_BPRIME, 1.0),
            est(CoincidencePair::AB, -1.0),
        );
        assert!(matches!(r, Err(Error::MismatchedPairs(_))));
        let dup = [CoincidencePair::AB; 4].map(|p| est(p, 0.0));
        assert!(bell_statistic_from(&dup).is_err());
        assert!(bell_statistic_from(&dup[..3]).is_err());
    }

    #[test]
    fn classification_boundaries_fall_low() {
        assert_eq!(Classification::of(2.0), Classification::Local);
        assert_eq!(Classification::of(-2.0), Classification::Local);
        assert_eq!(Classification::of(2.0 + 1e-9), Classification::QuantumAttainable);
        assert_eq!(Classification::of(QUANTUM_BOUND), Classification::QuantumAttainable);
        assert_eq!(Classification::of(QUANTUM_BOUND + 1e-9), Classification::SuperQuantum);
        assert_eq!(Classification::of(4.0), Classification::SuperQuantum);
    }

    #[test]
    fn tally_stderr() {
        // 3 of +1 and 1 of -1: mean 0.5, sample variance (3 * 0.25 + 2.25) / 3 = 1
        let t = ProductTally { n: 4, sum: 2 };
        let e = t.estimate(CoincidencePair::AB).unwrap();
        assert_eq!(e.mean, 0.5);
        assert!((e.stderr - 0.5).abs() < 1e-15);
        assert_eq!(ProductTally { n: 1, sum: 1 }.estimate(CoincidencePair::AB).unwrap().stderr, 0.0);
    }

    #[test]
    fn full_experiment_reaches_four() {
        let s = run_full_experiment(&HiddenVariableSampler::uniform(3), VesselSystem::default(), 10_000).unwrap();
        assert_eq!(s.value, 4.0);
        assert!(s.components.iter().all(|c| c.stderr == 0.0));
    }

    #[test]
    fn opaque_water() {
        // opaque table: AB -1, A'B -1, AB' -1, A'B' +1 -> 1 - 1 - 1 + 1 = 0
        let opaque = VesselSystem::new(20.0, false).unwrap();
        let s = run_full_experiment(&HiddenVariableSampler::uniform(3), opaque, 10_000).unwrap();
        assert_eq!(s.value, 0.0);
        assert_eq!(s.classification, Classification::Local);
    }

    #[test]
    fn sampler_rejects_bad_support() {
        assert!(HiddenVariableSampler::new(LambdaDistribution::Uniform { low: 0.0, high: 1.0 }, 1).is_err());
        assert!(HiddenVariableSampler::new(LambdaDistribution::Uniform { low: 2.0, high: 1.0 }, 1).is_err());
        let s = HiddenVariableSampler::uniform(9).samples(20_000);
        assert!(s.iter().all(|l| (0.5..3.0).contains(&l.lambda_a()) && (0.5..3.0).contains(&l.lambda_b())));
    }
}
