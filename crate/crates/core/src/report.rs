//! Subcommand execution and report emission.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bell::{
    bell_statistic_from, run_experiment_with, sample_runs, BellStatistic, Classification, CoincidenceSource,
    ExpectationEstimate, HiddenVariableSampler, VesselExperiment, ALGEBRAIC_BOUND, LOCAL_BOUND, QUANTUM_BOUND,
};
use crate::error::{Error, Result};
use crate::locality::{locality_check, CorrelationKind, LocalityCheck, VesselModel};
use crate::quantum::{born_samples, schmidt_rank, STATE_COUNT};
use crate::scenario::{Scenario, SingletMode};
use crate::stats::{chi_square_gof, ChiSquareTest};
use crate::vessel::{joint_outcome_ab, simulate_flow, CoincidencePair, ExperimentKind, Outcome, SiphonDiameters, SplitVolume};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Threshold for counting a Schmidt coefficient as nonzero.
pub const SCHMIDT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VesselChsh,
    LocalityCheck,
    SampleState,
    QuantumChsh,
    Flow,
}

impl Command {
    pub const ALL: [Command; 5] = [
        Command::VesselChsh,
        Command::LocalityCheck,
        Command::SampleState,
        Command::QuantumChsh,
        Command::Flow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::VesselChsh => "vessel-chsh",
            Command::LocalityCheck => "locality-check",
            Command::SampleState => "sample-state",
            Command::QuantumChsh => "quantum-chsh",
            Command::Flow => "flow",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown subcommand {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub local: f64,
    pub quantum: f64,
    pub algebraic: f64,
    pub note: &'static str,
}

const BOUNDS: Bounds = Bounds {
    local: LOCAL_BOUND,
    quantum: QUANTUM_BOUND,
    algebraic: ALGEBRAIC_BOUND,
    note: "textbook CHSH bounds, used for classification only",
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BellSummary {
    pub value: f64,
    pub classification: Classification,
    pub bounds: Bounds,
}

impl BellSummary {
    fn from_value(value: f64) -> Self {
        BellSummary {
            value,
            classification: Classification::of(value),
            bounds: BOUNDS,
        }
    }
}

impl From<&BellStatistic> for BellSummary {
    fn from(s: &BellStatistic) -> Self {
        BellSummary {
            value: s.value,
            classification: s.classification,
            bounds: BOUNDS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FactorizationSummary {
    /// True when any sampled `lambda` admits a context-free assignment.
    pub satisfiable: bool,
    pub witness_count: usize,
    pub samples: usize,
    pub satisfiable_count: usize,
    /// Samples whose 16-assignment search ran to completion without a match.
    pub exhausted_count: usize,
    /// Samples with `lambda_a < lambda_b`, and how many of them show `A`
    /// changing between contexts `B` and `B'`.
    pub left_narrower: usize,
    pub left_witnesses: usize,
}

impl FactorizationSummary {
    fn from_check(check: &LocalityCheck) -> Self {
        let left_narrower = check
            .reports
            .iter()
            .filter(|r| r.witnesses.first().is_some_and(|w| w.lambda.lambda_a() < w.lambda.lambda_b()))
            .count();
        let left_witnesses = check
            .reports
            .iter()
            .flat_map(|r| &r.witnesses)
            .filter(|w| {
                w.experiment == ExperimentKind::A
                    && w.first_context == ExperimentKind::B
                    && w.second_context == ExperimentKind::BPrime
            })
            .count();
        FactorizationSummary {
            satisfiable: check.satisfiable_count() > 0,
            witness_count: check.witness_count(),
            samples: check.reports.len(),
            satisfiable_count: check.satisfiable_count(),
            exhausted_count: check.reports.iter().filter(|r| r.exhausted()).count(),
            left_narrower,
            left_witnesses,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSummary {
    pub counts: [u64; STATE_COUNT],
    pub probabilities: [f64; STATE_COUNT],
    pub chi_square: ChiSquareTest,
    pub schmidt_rank: usize,
    pub entangled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowSummary {
    pub lambda: SiphonDiameters,
    pub dt: f64,
    pub split: SplitVolume,
    pub closed_form: SplitVolume,
    pub outcome_left: Option<Outcome>,
    pub outcome_right: Option<Outcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairValue {
    pub pair: CoincidencePair,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub version: &'static str,
    pub subcommand: Command,
    pub seed: u64,
    pub scenario: Scenario,
    pub estimates: Vec<ExpectationEstimate>,
    pub bell: Option<BellSummary>,
    pub factorization: Option<FactorizationSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlation_kind: Option<CorrelationKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic: Option<Vec<PairValue>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub histogram: Option<StateSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowSummary>,
}

impl Report {
    fn empty(command: Command, scenario: &Scenario) -> Self {
        Report {
            version: VERSION,
            subcommand: command,
            seed: scenario.seed,
            scenario: scenario.clone(),
            estimates: Vec::new(),
            bell: None,
            factorization: None,
            correlation_kind: None,
            analytic: None,
            histogram: None,
            flow: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn vessel_experiment(scenario: &Scenario) -> VesselExperiment {
    VesselExperiment {
        distribution: scenario.sampler,
        system: scenario.system,
        tie_policy: scenario.tie_policy,
    }
}

fn vessel_model(scenario: &Scenario) -> VesselModel {
    VesselModel {
        system: scenario.system,
        tie_policy: scenario.tie_policy,
    }
}

fn lambda_samples(scenario: &Scenario) -> Result<Vec<SiphonDiameters>> {
    let sampler = HiddenVariableSampler::new(scenario.sampler, scenario.seed)?;
    Ok(sampler.samples(scenario.locality_samples))
}

/// Runs `command` on `scenario` with `workers` threads (0 = rayon default).
/// The report does not depend on `workers`.
pub fn run_command(command: Command, scenario: &Scenario, workers: usize) -> Result<Report> {
    let mut report = Report::empty(command, scenario);
    match command {
        Command::VesselChsh => {
            let stat = run_experiment_with(&vessel_experiment(scenario), scenario.seed, scenario.runs_per_pair, workers)?;
            report.estimates = stat.components.to_vec();
            report.bell = Some(BellSummary::from(&stat));
        }
        Command::LocalityCheck => {
            let samples = lambda_samples(scenario)?;
            let check = crate::streams::with_workers(workers, || locality_check(&vessel_model(scenario), &samples))?;
            report.factorization = Some(FactorizationSummary::from_check(&check));
            report.correlation_kind = Some(check.kind);
        }
        Command::SampleState => {
            let state = scenario.state()?;
            let mut counts = [0u64; STATE_COUNT];
            for s in born_samples(&state, scenario.seed, scenario.runs_per_pair) {
                counts[s.x as usize] += 1;
            }
            let probabilities = state.probabilities();
            let rank = schmidt_rank(&state, SCHMIDT_TOLERANCE)?;
            report.histogram = Some(StateSummary {
                counts,
                probabilities,
                chi_square: chi_square_gof(&counts, &probabilities),
                schmidt_rank: rank,
                entangled: rank >= 2,
            });
        }
        Command::QuantumChsh => {
            let settings = scenario.singlet_settings();
            report.analytic = Some(
                CoincidencePair::ALL
                    .iter()
                    .map(|&pair| PairValue { pair, value: settings.expectation(pair) })
                    .collect(),
            );
            match scenario.singlet_mode {
                SingletMode::Analytic => {
                    report.bell = Some(BellSummary::from_value(settings.analytic_statistic()));
                }
                SingletMode::MonteCarlo => {
                    let stat = run_experiment_with(&settings, scenario.seed, scenario.runs_per_pair, workers)?;
                    report.estimates = stat.components.to_vec();
                    report.bell = Some(BellSummary::from(&stat));
                }
            }
        }
        Command::Flow => {
            let cfg = scenario.flow_config();
            let lambda = cfg.lambda()?;
            let split = simulate_flow(lambda, scenario.system, cfg.dt)?;
            let outcomes = if lambda.is_tie() {
                joint_outcome_ab(lambda, scenario.tie_policy).ok()
            } else {
                Some(joint_outcome_ab(lambda, scenario.tie_policy)?)
            };
            report.flow = Some(FlowSummary {
                lambda,
                dt: cfg.dt,
                split,
                closed_form: SplitVolume::closed_form(lambda, scenario.system),
                outcome_left: outcomes.map(|o| o.0),
                outcome_right: outcomes.map(|o| o.1),
            });
        }
    }
    Ok(report)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn write_runs<S: CoincidenceSource + ?Sized, W: Write>(
    out: &mut csv::Writer<W>,
    source: &S,
    scenario: &Scenario,
) -> Result<()> {
    out.write_record(["pair", "run", "outcome_left", "outcome_right", "product", "x_left", "x_right"])
        .map_err(csv_err)?;
    for pair in CoincidencePair::ALL {
        for (i, run) in sample_runs(source, pair, scenario.seed, scenario.runs_per_pair)?.iter().enumerate() {
            let (xl, xr) = run
                .split
                .map(|s| (s.x_left.to_string(), s.x_right.to_string()))
                .unwrap_or_default();
            out.write_record([
                pair.to_string(),
                i.to_string(),
                run.outcome_left.value().to_string(),
                run.outcome_right.value().to_string(),
                run.product.value().to_string(),
                xl,
                xr,
            ])
            .map_err(csv_err)?;
        }
    }
    Ok(())
}

/// Per-run CSV dump for `command`. Rows come from the same random streams as
/// the aggregates in [`run_command`].
pub fn write_csv<W: Write>(command: Command, scenario: &Scenario, writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    match command {
        Command::VesselChsh => write_runs(&mut out, &vessel_experiment(scenario), scenario)?,
        Command::QuantumChsh => match scenario.singlet_mode {
            SingletMode::MonteCarlo => write_runs(&mut out, &scenario.singlet_settings(), scenario)?,
            SingletMode::Analytic => {
                let settings = scenario.singlet_settings();
                out.write_record(["pair", "expectation"]).map_err(csv_err)?;
                for pair in CoincidencePair::ALL {
                    out.write_record([pair.to_string(), settings.expectation(pair).to_string()])
                        .map_err(csv_err)?;
                }
            }
        },
        Command::LocalityCheck => {
            let samples = lambda_samples(scenario)?;
            let check = locality_check(&vessel_model(scenario), &samples)?;
            let model = vessel_model(scenario);
            out.write_record([
                "sample", "lambda_a", "lambda_b", "ab", "aprime_b", "a_bprime", "aprime_bprime", "satisfiable",
                "assignments_checked", "witnesses",
            ])
            .map_err(csv_err)?;
            for (i, (lambda, r)) in samples.iter().zip(&check.reports).enumerate() {
                use crate::locality::CoincidenceModel;
                let table = model.table(*lambda)?.products();
                let mut row = vec![i.to_string(), lambda.lambda_a().to_string(), lambda.lambda_b().to_string()];
                row.extend(table.iter().map(|p| p.value().to_string()));
                row.push(r.satisfiable.to_string());
                row.push(r.assignments_checked.to_string());
                row.push(r.witnesses.len().to_string());
                out.write_record(&row).map_err(csv_err)?;
            }
        }
        Command::SampleState => {
            let state = scenario.state()?;
            out.write_record(["sample", "x_left", "x_right"]).map_err(csv_err)?;
            for (i, s) in born_samples(&state, scenario.seed, scenario.runs_per_pair).iter().enumerate() {
                out.write_record([i.to_string(), s.left_liters().to_string(), s.right_liters().to_string()])
                    .map_err(csv_err)?;
            }
        }
        Command::Flow => {
            let report = run_command(Command::Flow, scenario, 1)?;
            let f = report.flow.expect("flow report");
            out.write_record(["lambda_a", "lambda_b", "dt", "x_left", "x_right", "closed_form_x_left"])
                .map_err(csv_err)?;
            out.write_record([
                f.lambda.lambda_a().to_string(),
                f.lambda.lambda_b().to_string(),
                f.dt.to_string(),
                f.split.x_left.to_string(),
                f.split.x_right.to_string(),
                f.closed_form.x_left.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Recomputes the Bell statistic from per-pair estimates in a report.
pub fn statistic_from_report(report: &Report) -> Result<BellStatistic> {
    bell_statistic_from(&report.estimates)
}
