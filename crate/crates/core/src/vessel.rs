//! Two vessels of water joined by a tube, emptied by siphons or probed with a
//! spoon.
//!
//! Experiment `A` (`B`) siphons water out of the left (right) vessel into a
//! reference vessel and answers +1 when more than half of the total volume was
//! collected. Experiment `A'` (`B'`) takes a spoonful from the left (right)
//! vessel and answers +1 when the water is transparent. The hidden variable is
//! the pair of siphon diameters.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Absolute tolerance for volume conservation, liters.
pub const VOLUME_TOLERANCE: f64 = 1e-9;

/// Siphon discharge coefficient in L^(1/2) s^-1 cm^-2.
///
/// Each siphon drains at `DRAIN_COEFFICIENT * diameter^2 * sqrt(remaining)`.
/// The common factor cancels in the split, so it only sets the time scale.
pub const DRAIN_COEFFICIENT: f64 = 1.0;

/// Upper bound on integration steps accepted by [`simulate_flow`].
pub const MAX_FLOW_STEPS: f64 = 1e9;

/// A measurement outcome, +1 or -1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn from_sign(positive: bool) -> Self {
        if positive {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

impl std::ops::Mul for Outcome {
    type Output = Outcome;

    fn mul(self, rhs: Outcome) -> Outcome {
        Outcome::from_sign(self == rhs)
    }
}

impl TryFrom<i64> for Outcome {
    type Error = Error;

    fn try_from(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            other => Err(Error::Config(format!("outcome must be +1 or -1, got {other}"))),
        }
    }
}

impl Serialize for Outcome {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.value())
    }
}

impl<'de> Deserialize<'de> for Outcome {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        Outcome::try_from(v).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}", self.value())
    }
}

/// The hidden variable: diameters of the left and right siphons, in cm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SiphonDiameters {
    lambda_a: f64,
    lambda_b: f64,
}

impl SiphonDiameters {
    pub fn new(lambda_a: f64, lambda_b: f64) -> Result<Self> {
        for (name, value) in [("lambda_a", lambda_a), ("lambda_b", lambda_b)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidDiameter { name, value });
            }
        }
        Ok(SiphonDiameters { lambda_a, lambda_b })
    }

    pub fn lambda_a(&self) -> f64 {
        self.lambda_a
    }

    pub fn lambda_b(&self) -> f64 {
        self.lambda_b
    }

    pub fn is_tie(&self) -> bool {
        self.lambda_a == self.lambda_b
    }
}

impl<'de> Deserialize<'de> for SiphonDiameters {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            lambda_a: f64,
            lambda_b: f64,
        }
        let raw = Raw::deserialize(d)?;
        SiphonDiameters::new(raw.lambda_a, raw.lambda_b).map_err(serde::de::Error::custom)
    }
}

/// Pre-measurement configuration of the connected vessels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VesselSystem {
    total_volume: f64,
    transparent: bool,
}

impl Default for VesselSystem {
    /// Two vessels of 10 L transparent water each.
    fn default() -> Self {
        VesselSystem {
            total_volume: 20.0,
            transparent: true,
        }
    }
}

impl VesselSystem {
    pub fn new(total_volume: f64, transparent: bool) -> Result<Self> {
        if !(total_volume.is_finite() && total_volume > 0.0) {
            return Err(Error::InvalidVolume(total_volume));
        }
        Ok(VesselSystem {
            total_volume,
            transparent,
        })
    }

    pub fn total_volume(&self) -> f64 {
        self.total_volume
    }

    pub fn transparent(&self) -> bool {
        self.transparent
    }

    /// Collected volume a siphon experiment must strictly exceed to answer +1.
    pub fn threshold(&self) -> f64 {
        self.total_volume / 2.0
    }
}

impl<'de> Deserialize<'de> for VesselSystem {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            #[serde(default = "default_volume")]
            total_volume: f64,
            #[serde(default = "default_transparent")]
            transparent: bool,
        }
        fn default_volume() -> f64 {
            VesselSystem::default().total_volume
        }
        fn default_transparent() -> bool {
            true
        }
        let raw = Raw::deserialize(d)?;
        VesselSystem::new(raw.total_volume, raw.transparent).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    /// Siphon on the left vessel.
    A,
    /// Siphon on the right vessel.
    B,
    /// Spoon transparency test on the left vessel.
    APrime,
    /// Spoon transparency test on the right vessel.
    BPrime,
}

impl ExperimentKind {
    pub fn is_left(self) -> bool {
        matches!(self, ExperimentKind::A | ExperimentKind::APrime)
    }

    pub fn is_siphon(self) -> bool {
        matches!(self, ExperimentKind::A | ExperimentKind::B)
    }

    pub fn label(self) -> &'static str {
        match self {
            ExperimentKind::A => "A",
            ExperimentKind::B => "B",
            ExperimentKind::APrime => "A'",
            ExperimentKind::BPrime => "B'",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        use ExperimentKind::*;
        [A, B, APrime, BPrime]
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

impl Serialize for ExperimentKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for ExperimentKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A coincidence experiment: one left-side and one right-side experiment run
/// together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CoincidencePair {
    left: ExperimentKind,
    right: ExperimentKind,
}

impl CoincidencePair {
    pub const AB: CoincidencePair = CoincidencePair {
        left: ExperimentKind::A,
        right: ExperimentKind::B,
    };
    pub const APRIME_B: CoincidencePair = CoincidencePair {
        left: ExperimentKind::APrime,
        right: ExperimentKind::B,
    };
    pub const A_BPRIME: CoincidencePair = CoincidencePair {
        left: ExperimentKind::A,
        right: ExperimentKind::BPrime,
    };
    pub const APRIME_BPRIME: CoincidencePair = CoincidencePair {
        left: ExperimentKind::APrime,
        right: ExperimentKind::BPrime,
    };

    /// The four pairs in table order: AB, A'B, AB', A'B'.
    pub const ALL: [CoincidencePair; 4] = [
        CoincidencePair::AB,
        CoincidencePair::APRIME_B,
        CoincidencePair::A_BPRIME,
        CoincidencePair::APRIME_BPRIME,
    ];

    pub fn new(left: ExperimentKind, right: ExperimentKind) -> Result<Self> {
        if !left.is_left() || right.is_left() {
            return Err(Error::Config(format!(
                "invalid coincidence pair {left}{right}: need a left experiment (A, A') and a right experiment (B, B')"
            )));
        }
        Ok(CoincidencePair { left, right })
    }

    pub fn left(&self) -> ExperimentKind {
        self.left
    }

    pub fn right(&self) -> ExperimentKind {
        self.right
    }

    /// Position in [`CoincidencePair::ALL`].
    pub fn index(&self) -> usize {
        let l = usize::from(self.left == ExperimentKind::APrime);
        let r = usize::from(self.right == ExperimentKind::BPrime);
        l + 2 * r
    }
}

impl fmt::Display for CoincidencePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.left, self.right)
    }
}

impl FromStr for CoincidencePair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CoincidencePair::ALL
            .into_iter()
            .find(|p| p.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown coincidence pair {s:?}")))
    }
}

impl Serialize for CoincidencePair {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CoincidencePair {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// How to resolve `lambda_a == lambda_b`, where neither siphon wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    #[default]
    Error,
    /// Left vessel collects the majority: (+1, -1).
    FavorLeft,
    /// Right vessel collects the majority: (-1, +1).
    FavorRight,
    /// Deterministic coin derived from the seed and the diameters.
    SplitCoin(u64),
}

impl TiePolicy {
    fn resolve(self, lambda: SiphonDiameters) -> Result<(Outcome, Outcome)> {
        let left_wins = match self {
            TiePolicy::Error => return Err(Error::DegenerateTie(lambda.lambda_a)),
            TiePolicy::FavorLeft => true,
            TiePolicy::FavorRight => false,
            TiePolicy::SplitCoin(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ lambda.lambda_a.to_bits());
                rng.random::<bool>()
            }
        };
        let left = Outcome::from_sign(left_wins);
        Ok((left, left.flip()))
    }
}

/// Volumes collected in the two reference vessels after an `AB` run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitVolume {
    pub x_left: f64,
    pub x_right: f64,
}

impl SplitVolume {
    /// The exact split of the drainage model: volume divides in the ratio of
    /// the siphon cross-sections.
    pub fn closed_form(lambda: SiphonDiameters, system: VesselSystem) -> SplitVolume {
        let wa = lambda.lambda_a * lambda.lambda_a;
        let wb = lambda.lambda_b * lambda.lambda_b;
        let x_left = system.total_volume * wa / (wa + wb);
        SplitVolume {
            x_left,
            x_right: system.total_volume - x_left,
        }
    }

    pub fn total(&self) -> f64 {
        self.x_left + self.x_right
    }
}

/// Outcomes of the coincidence experiment `AB` for the given diameters.
///
/// The wider siphon collects more than half of the water.
pub fn joint_outcome_ab(lambda: SiphonDiameters, tie_policy: TiePolicy) -> Result<(Outcome, Outcome)> {
    if lambda.lambda_b < lambda.lambda_a {
        Ok((Outcome::Plus, Outcome::Minus))
    } else if lambda.lambda_a < lambda.lambda_b {
        Ok((Outcome::Minus, Outcome::Plus))
    } else {
        tie_policy.resolve(lambda)
    }
}

/// A siphon running while the other side only takes a spoonful drains all the
/// water, so it always collects more than half.
pub fn outcome_solo_siphon() -> Outcome {
    Outcome::Plus
}

pub fn spoon_outcome(system: VesselSystem) -> Outcome {
    Outcome::from_sign(system.transparent)
}

/// Integrates the two-siphon drainage with forward Euler steps of length `dt`.
///
/// The tube keeps both levels equal, so the system behaves as one reservoir
/// whose head is proportional to the remaining volume. Each step drains
/// `DRAIN_COEFFICIENT * (lambda_a^2 + lambda_b^2) * sqrt(remaining) * dt` and
/// shares it between the siphons in proportion to their cross-sections. The
/// last step empties whatever is left.
pub fn simulate_flow(lambda: SiphonDiameters, system: VesselSystem, dt: f64) -> Result<SplitVolume> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidStep(dt));
    }
    let wa = lambda.lambda_a * lambda.lambda_a;
    let wb = lambda.lambda_b * lambda.lambda_b;
    let rate = DRAIN_COEFFICIENT * (wa + wb);
    let share_left = wa / (wa + wb);
    let total = system.total_volume;

    // Continuous drain time is 2 sqrt(V) / rate.
    let expected_steps = 2.0 * total.sqrt() / rate / dt;
    if expected_steps > MAX_FLOW_STEPS {
        return Err(Error::InvalidStep(dt));
    }

    let mut x_left = 0.0;
    let mut x_right = 0.0;
    loop {
        let remaining = total - (x_left + x_right);
        if remaining <= 0.0 {
            break;
        }
        let drained = (rate * remaining.sqrt() * dt).min(remaining);
        let to_left = drained * share_left;
        x_left += to_left;
        x_right += drained - to_left;
        if drained == remaining {
            break;
        }
    }
    Ok(SplitVolume { x_left, x_right })
}

/// One joint measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceRun {
    pub pair: CoincidencePair,
    pub outcome_left: Outcome,
    pub outcome_right: Outcome,
    pub product: Outcome,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub split: Option<SplitVolume>,
}

impl CoincidenceRun {
    pub fn new(pair: CoincidencePair, outcome_left: Outcome, outcome_right: Outcome) -> Self {
        CoincidenceRun {
            pair,
            outcome_left,
            outcome_right,
            product: outcome_left * outcome_right,
            split: None,
        }
    }
}

/// Runs one coincidence experiment on the vessels.
///
/// The `AB` split is taken from [`SplitVolume::closed_form`]; use
/// [`simulate_flow`] for the time-stepped version.
pub fn run_coincidence(
    pair: CoincidencePair,
    lambda: SiphonDiameters,
    system: VesselSystem,
    tie_policy: TiePolicy,
) -> Result<CoincidenceRun> {
    use ExperimentKind::*;
    let run = match (pair.left, pair.right) {
        (A, B) => {
            let (left, right) = joint_outcome_ab(lambda, tie_policy)?;
            let mut run = CoincidenceRun::new(pair, left, right);
            run.split = Some(SplitVolume::closed_form(lambda, system));
            run
        }
        (A, BPrime) => CoincidenceRun::new(pair, outcome_solo_siphon(), spoon_outcome(system)),
        (APrime, B) => CoincidenceRun::new(pair, spoon_outcome(system), outcome_solo_siphon()),
        (APrime, BPrime) => CoincidenceRun::new(pair, spoon_outcome(system), spoon_outcome(system)),
        _ => unreachable!("CoincidencePair constructor enforces sides"),
    };
    Ok(run)
}
