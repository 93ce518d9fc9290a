//! Bell locality for deterministic hidden-variable models.
//!
//! A model is local for a given `lambda` when every joint product factorizes,
//! `E(XY, lambda) = E(X, lambda) * E(Y, lambda)`, with single-side values that
//! do not depend on the partner experiment. With four experiments each taking
//! values in {+1, -1} there are only 16 candidate assignments, so the check is
//! an exhaustive search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vessel::{
    run_coincidence, CoincidencePair, ExperimentKind, Outcome, SiphonDiameters, TiePolicy, VesselSystem,
};

/// Number of context-free sign assignments (e_A, e_A', e_B, e_B').
pub const ASSIGNMENT_COUNT: usize = 16;

/// Anything that answers the four coincidence experiments for a given hidden
/// variable.
pub trait CoincidenceModel: Sync {
    fn outcomes(&self, pair: CoincidencePair, lambda: SiphonDiameters) -> Result<(Outcome, Outcome)>;

    fn table(&self, lambda: SiphonDiameters) -> Result<ContextualOutcomeTable> {
        let mut products = [Outcome::Plus; 4];
        for pair in CoincidencePair::ALL {
            let (l, r) = self.outcomes(pair, lambda)?;
            products[pair.index()] = l * r;
        }
        Ok(ContextualOutcomeTable { products })
    }
}

/// The interconnected vessels as a [`CoincidenceModel`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VesselModel {
    pub system: VesselSystem,
    pub tie_policy: TiePolicy,
}

impl CoincidenceModel for VesselModel {
    fn outcomes(&self, pair: CoincidencePair, lambda: SiphonDiameters) -> Result<(Outcome, Outcome)> {
        let run = run_coincidence(pair, lambda, self.system, self.tie_policy)?;
        Ok((run.outcome_left, run.outcome_right))
    }
}

/// Joint products of the four coincidence experiments at one `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextualOutcomeTable {
    products: [Outcome; 4],
}

impl ContextualOutcomeTable {
    /// Entries in the order AB, A'B, AB', A'B'.
    pub fn new(ab: Outcome, aprime_b: Outcome, a_bprime: Outcome, aprime_bprime: Outcome) -> Self {
        ContextualOutcomeTable {
            products: [ab, aprime_b, a_bprime, aprime_bprime],
        }
    }

    pub fn get(&self, pair: CoincidencePair) -> Outcome {
        self.products[pair.index()]
    }

    pub fn products(&self) -> [Outcome; 4] {
        self.products
    }

    /// Product of all four entries. Any factorizable table has +1 here since
    /// every single-side value appears exactly twice.
    pub fn entry_product(&self) -> Outcome {
        self.products.iter().fold(Outcome::Plus, |acc, &p| acc * p)
    }
}

pub fn contextual_table(lambda: SiphonDiameters, system: VesselSystem) -> Result<ContextualOutcomeTable> {
    VesselModel {
        system,
        tie_policy: TiePolicy::Error,
    }
    .table(lambda)
}

/// Context-free single-side values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub a: Outcome,
    pub a_prime: Outcome,
    pub b: Outcome,
    pub b_prime: Outcome,
}

impl Assignment {
    /// All 16 assignments, bit `i` of the index selecting Minus for the i-th
    /// of (A, A', B, B').
    pub fn enumerate() -> impl Iterator<Item = Assignment> {
        (0..ASSIGNMENT_COUNT).map(|bits| {
            let pick = |i: usize| Outcome::from_sign(bits & (1 << i) == 0);
            Assignment {
                a: pick(0),
                a_prime: pick(1),
                b: pick(2),
                b_prime: pick(3),
            }
        })
    }

    pub fn value(&self, kind: ExperimentKind) -> Outcome {
        match kind {
            ExperimentKind::A => self.a,
            ExperimentKind::APrime => self.a_prime,
            ExperimentKind::B => self.b,
            ExperimentKind::BPrime => self.b_prime,
        }
    }

    pub fn reproduces(&self, table: &ContextualOutcomeTable) -> bool {
        CoincidencePair::ALL
            .iter()
            .all(|p| self.value(p.left()) * self.value(p.right()) == table.get(*p))
    }
}

/// One experiment giving different answers in two contexts at the same
/// `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub lambda: SiphonDiameters,
    pub experiment: ExperimentKind,
    pub first_context: ExperimentKind,
    pub second_context: ExperimentKind,
    pub first_value: Outcome,
    pub second_value: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub satisfiable: bool,
    pub assignment: Option<Assignment>,
    /// How many assignments were tried; 16 when the search was exhausted.
    pub assignments_checked: usize,
    pub witnesses: Vec<Witness>,
}

impl FactorizationReport {
    pub fn exhausted(&self) -> bool {
        !self.satisfiable && self.assignments_checked == ASSIGNMENT_COUNT
    }
}

/// Searches all 16 context-free assignments for one that reproduces `table`.
pub fn search_factorization(table: &ContextualOutcomeTable) -> FactorizationReport {
    let mut checked = 0;
    for assignment in Assignment::enumerate() {
        checked += 1;
        if assignment.reproduces(table) {
            return FactorizationReport {
                satisfiable: true,
                assignment: Some(assignment),
                assignments_checked: checked,
                witnesses: Vec::new(),
            };
        }
    }
    FactorizationReport {
        satisfiable: false,
        assignment: None,
        assignments_checked: checked,
        witnesses: Vec::new(),
    }
}

/// Every experiment whose outcome changes with its partner at `lambda`.
pub fn context_witnesses<M: CoincidenceModel + ?Sized>(model: &M, lambda: SiphonDiameters) -> Result<Vec<Witness>> {
    use ExperimentKind::*;
    let mut outcomes = [(Outcome::Plus, Outcome::Plus); 4];
    for pair in CoincidencePair::ALL {
        outcomes[pair.index()] = model.outcomes(pair, lambda)?;
    }
    let at = |pair: CoincidencePair| outcomes[pair.index()];

    // (experiment, first context, second context, value in first, value in second)
    let comparisons = [
        (A, B, BPrime, at(CoincidencePair::AB).0, at(CoincidencePair::A_BPRIME).0),
        (APrime, B, BPrime, at(CoincidencePair::APRIME_B).0, at(CoincidencePair::APRIME_BPRIME).0),
        (B, A, APrime, at(CoincidencePair::AB).1, at(CoincidencePair::APRIME_B).1),
        (BPrime, A, APrime, at(CoincidencePair::A_BPRIME).1, at(CoincidencePair::APRIME_BPRIME).1),
    ];
    Ok(comparisons
        .into_iter()
        .filter(|c| c.3 != c.4)
        .map(|(experiment, first_context, second_context, first_value, second_value)| Witness {
            lambda,
            experiment,
            first_context,
            second_context,
            first_value,
            second_value,
        })
        .collect())
}

/// Factorization search plus context witnesses for one `lambda`.
pub fn analyze<M: CoincidenceModel + ?Sized>(model: &M, lambda: SiphonDiameters) -> Result<FactorizationReport> {
    let table = model.table(lambda)?;
    let mut report = search_factorization(&table);
    report.witnesses = context_witnesses(model, lambda)?;
    Ok(report)
}

/// Outcome of `A` when run with `B` versus with `B'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextualityWitness {
    pub in_context_b: Outcome,
    pub in_context_b_prime: Outcome,
    pub differs: bool,
}

pub fn contextuality_witness(lambda: SiphonDiameters) -> Result<ContextualityWitness> {
    let model = VesselModel::default();
    let (in_context_b, _) = model.outcomes(CoincidencePair::AB, lambda)?;
    let (in_context_b_prime, _) = model.outcomes(CoincidencePair::A_BPRIME, lambda)?;
    Ok(ContextualityWitness {
        in_context_b,
        in_context_b_prime,
        differs: in_context_b != in_context_b_prime,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationKind {
    /// Correlations carried by pre-existing, context-free values.
    FirstKind,
    /// Correlations created by the joint measurement itself.
    SecondKind,
}

pub fn classify_correlations<M: CoincidenceModel + ?Sized>(
    model: &M,
    lambda_samples: &[SiphonDiameters],
) -> Result<CorrelationKind> {
    if lambda_samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    for &lambda in lambda_samples {
        if !search_factorization(&model.table(lambda)?).satisfiable {
            return Ok(CorrelationKind::SecondKind);
        }
    }
    Ok(CorrelationKind::FirstKind)
}

/// Per-`lambda` verdicts of a locality check, in sample order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityCheck {
    pub reports: Vec<FactorizationReport>,
    pub kind: CorrelationKind,
}

impl LocalityCheck {
    pub fn satisfiable_count(&self) -> usize {
        self.reports.iter().filter(|r| r.satisfiable).count()
    }

    pub fn witness_count(&self) -> usize {
        self.reports.iter().map(|r| r.witnesses.len()).sum()
    }

    /// True when no sampled `lambda` admits a context-free assignment.
    pub fn all_unsatisfiable(&self) -> bool {
        self.reports.iter().all(|r| r.exhausted())
    }
}

/// Runs [`analyze`] over every sample. Evaluation is parallel; results keep
/// the input order.
pub fn locality_check<M: CoincidenceModel + ?Sized>(
    model: &M,
    lambda_samples: &[SiphonDiameters],
) -> Result<LocalityCheck> {
    if lambda_samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let reports = lambda_samples
        .par_iter()
        .map(|&lambda| analyze(model, lambda))
        .collect::<Result<Vec<_>>>()?;
    let kind = if reports.iter().all(|r| r.satisfiable) {
        CorrelationKind::FirstKind
    } else {
        CorrelationKind::SecondKind
    };
    Ok(LocalityCheck { reports, kind })
}
