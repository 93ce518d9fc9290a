//! Simulation and analysis of the interconnected-vessels Bell experiment.
//!
//! Two vessels of water joined by a tube are measured by siphons (`A`, `B`)
//! or by spoonful transparency tests (`A'`, `B'`). The four coincidence
//! experiments reach `E(A'B') + E(A'B) + E(AB') - E(AB) = 4`, and no
//! context-free assignment of single-side outcomes reproduces them.
//!
//! - [`vessel`]: single-run dynamics and the siphon flow model
//! - [`locality`]: factorization search, context witnesses, correlation kind
//! - [`bell`]: Monte Carlo expectations and the Bell combination
//! - [`quantum`]: the superposition state over final splits and a spin singlet
//! - [`scenario`], [`report`]: configuration files and CLI reports

pub mod bell;
pub mod error;
pub mod locality;
pub mod quantum;
pub mod report;
pub mod scenario;
pub mod stats;
pub mod streams;
pub mod vessel;

pub use bell::{
    bell_statistic, estimate_expectation, run_full_experiment, BellStatistic, Classification, ExpectationEstimate,
    HiddenVariableSampler, LambdaDistribution,
};
pub use error::{Error, Result};
pub use locality::{
    classify_correlations, contextual_table, contextuality_witness, search_factorization, CoincidenceModel,
    ContextualOutcomeTable, CorrelationKind, FactorizationReport, VesselModel,
};
pub use quantum::{
    born_sample, make_state, schmidt_rank, singlet_expectation, singlet_sample, FinalProductState,
    MeasurementDirection, SingletSettings, VesselSuperpositionState,
};
pub use report::{run_command, Command, Report};
pub use scenario::{parse_scenario, Scenario};
pub use vessel::{
    joint_outcome_ab, outcome_solo_siphon, run_coincidence, simulate_flow, spoon_outcome, CoincidencePair,
    CoincidenceRun, ExperimentKind, Outcome, SiphonDiameters, SplitVolume, TiePolicy, VesselSystem,
};
