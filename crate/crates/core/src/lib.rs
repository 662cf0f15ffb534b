//! Rule conformity of recorded drivers: how closely each driver follows the
//! safety distance and speed limit rules, scored per frame in `[0, 1]` and
//! averaged per driver, scenario and dataset.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregate;
pub mod diagnostics;
pub mod exec;
pub mod geometry;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod rgsf;
pub mod rules;
pub mod synth;

pub use aggregate::{AggregateError, PartialAggregate};
pub use diagnostics::{Diagnostic, Level};
pub use exec::Execution;
pub use ingest::{IngestConfig, IngestError};
pub use model::{
    AggregateReport, DriverScenarioScore, Frame, Histogram, Lane, RcSample, RelativeBins, Rule,
    Scenario, Vec2, VehicleState,
};
pub use pipeline::{aggregate_scenarios, run, AnalysisConfig, RunConfig, RunError, RunOutcome};
pub use rgsf::FormatError;
pub use rules::{SafetyDistanceConfig, SpeedLimitConfig};
