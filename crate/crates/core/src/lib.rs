//! Simulation of flaky tests and their effect on test-based software
//! engineering tools: mutation testing, fault localization and automated
//! program repair.
//!
//! Flakiness is injected into recorded executions (coverage and kill
//! matrices, JUnit reports) under a [`FlakinessModel`]; each tool is then
//! measured either in closed form or by seeded Monte-Carlo simulation.
//!
//! The closed-form models are generic over [`Real`]; the `*F64` aliases name
//! the usual instantiations.

pub mod domain;
pub mod error;
pub mod experiment;
pub mod fl;
pub mod flakiness;
pub mod mutation;
pub mod repair_analytic;
pub mod repair_sim;
pub mod report_io;
pub mod rng;
pub mod scalar;
pub mod stats;

pub use domain::{
    test_group, BitMatrix, CoverageMatrix, Direction, FlakeCounters, FlakeProbability, FlakinessModel, KillCell,
    KillMatrix, MutantId, Outcome, PatchId, PatchRecord, RepairScenario, Scope, SelectionMetrics, StatementId, TestId,
    Validate, Verdict,
};
pub use error::{Error, ErrorKind, Result};
pub use rng::RngStream;
pub use scalar::Real;

pub type FlakyScoreF64 = mutation::FlakyScore<f64>;
pub type AnalyticRepairReportF64 = repair_analytic::AnalyticRepairReport<f64>;
pub type GenuineAdvantageF64 = repair_analytic::GenuineAdvantage<f64>;
pub type SuspiciousnessReportF64 = fl::SuspiciousnessReport<f64>;
pub type SelectionMetricsF64 = SelectionMetrics<f64>;
