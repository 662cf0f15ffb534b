//! End-to-end analysis: files → scenarios → per-rule samples → partial
//! aggregates → reports on disk.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::aggregate::{AggregateError, PartialAggregate};
use crate::diagnostics::{Diagnostic, Level};
use crate::exec::{map_reduce, Execution};
use crate::ingest::{diagnostic_for, discover_files, load_scenario, IngestConfig, IngestError};
use crate::model::{AggregateReport, RcSample, Rule, Scenario};
use crate::report;
use crate::rules::{score_scenario_dist, score_scenario_speed, SafetyDistanceConfig, SpeedLimitConfig};

/// Rule selection and rule parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub rules: Vec<Rule>,
    pub dist: SafetyDistanceConfig,
    pub speed: SpeedLimitConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            rules: Rule::ALL.to_vec(),
            dist: SafetyDistanceConfig::default(),
            speed: SpeedLimitConfig::default(),
        }
    }
}

pub fn score_rule(s: &Scenario, rule: Rule, cfg: &AnalysisConfig) -> Vec<RcSample> {
    match rule {
        Rule::SafetyDistance => score_scenario_dist(s, &cfg.dist),
        Rule::SpeedLimit => score_scenario_speed(s, &cfg.speed),
    }
}

/// One [`PartialAggregate`] per rule.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RuleAggregates(BTreeMap<Rule, PartialAggregate>);

impl RuleAggregates {
    pub fn empty(rules: &[Rule]) -> Self {
        RuleAggregates(rules.iter().map(|&r| (r, PartialAggregate::empty(r))).collect())
    }

    pub fn get(&self, rule: Rule) -> Option<&PartialAggregate> {
        self.0.get(&rule)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PartialAggregate> {
        self.0.values()
    }

    pub fn merge(mut self, other: RuleAggregates) -> Self {
        for (rule, part) in other.0 {
            let merged = match self.0.remove(&rule) {
                Some(mine) => mine.merge(part).expect("entries are keyed by rule"),
                None => part,
            };
            self.0.insert(rule, merged);
        }
        self
    }
}

pub fn score_scenario(s: &Scenario, cfg: &AnalysisConfig) -> RuleAggregates {
    RuleAggregates(
        cfg.rules
            .iter()
            .map(|&rule| {
                let part = PartialAggregate::from_samples(rule, &score_rule(s, rule, cfg))
                    .expect("samples carry the requested rule");
                (rule, part)
            })
            .collect(),
    )
}

/// Score in-memory scenarios and reduce to one partial per rule.
pub fn aggregate_scenarios(scenarios: &[Scenario], cfg: &AnalysisConfig, exec: Execution) -> RuleAggregates {
    map_reduce(
        scenarios,
        exec,
        || RuleAggregates::empty(&cfg.rules),
        |s| score_scenario(s, cfg),
        RuleAggregates::merge,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub analysis: AnalysisConfig,
    pub ingest: IngestConfig,
    pub histogram_bins: usize,
    pub output_dir: PathBuf,
    pub workers: usize,
    /// Reserved for randomized diagnostics; the analysis itself is
    /// deterministic.
    pub seed: u64,
}

impl RunConfig {
    pub fn new(inputs: Vec<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            analysis: AnalysisConfig::default(),
            ingest: IngestConfig {
                input_paths: inputs,
                ..IngestConfig::default()
            },
            histogram_bins: 20,
            output_dir: output_dir.into(),
            workers: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.analysis.rules.is_empty() {
            return Err("at least one rule must be selected".into());
        }
        if self.histogram_bins == 0 {
            return Err("histogram needs at least one bin".into());
        }
        if self.workers == 0 {
            return Err("workers must be >= 1".into());
        }
        if !(self.ingest.target_rate_hz.is_finite() && self.ingest.target_rate_hz > 0.0) {
            return Err(format!(
                "sample rate must be > 0, got {}",
                self.ingest.target_rate_hz
            ));
        }
        if self.ingest.input_paths.is_empty() {
            return Err("no input paths given".into());
        }
        self.analysis.dist.validate()?;
        self.analysis.speed.validate()?;
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no scenarios found")]
    NoScenarios { diagnostics: Vec<Diagnostic> },
    #[error("strict mode: {source}")]
    StrictParse {
        #[source]
        source: IngestError,
        diagnostics: Vec<Diagnostic>,
    },
    #[error(transparent)]
    Ingest(IngestError),
    #[error("writing {}: {source}", path.display())]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::NoScenarios { .. } => 2,
            RunError::StrictParse { .. } => 3,
            RunError::Ingest(_) | RunError::Output { .. } => 1,
        }
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            RunError::NoScenarios { diagnostics } | RunError::StrictParse { diagnostics, .. } => {
                diagnostics
            }
            _ => &[],
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub reports: Vec<AggregateReport>,
    pub scenario_count: usize,
    pub files_skipped: usize,
    pub written: Vec<PathBuf>,
    pub diagnostics: Vec<Diagnostic>,
}

struct Batch {
    aggregates: RuleAggregates,
    scenarios: usize,
    skipped: usize,
    diagnostics: Vec<Diagnostic>,
    /// First fatal error, by file position.
    failure: Option<(usize, IngestError)>,
}

impl Batch {
    fn empty(rules: &[Rule]) -> Self {
        Batch {
            aggregates: RuleAggregates::empty(rules),
            scenarios: 0,
            skipped: 0,
            diagnostics: Vec::new(),
            failure: None,
        }
    }

    fn merge(mut self, mut other: Batch) -> Batch {
        self.aggregates = self.aggregates.merge(other.aggregates);
        self.scenarios += other.scenarios;
        self.skipped += other.skipped;
        self.diagnostics.append(&mut other.diagnostics);
        self.failure = match (self.failure, other.failure) {
            (Some(a), Some(b)) => Some(if a.0 <= b.0 { a } else { b }),
            (a, b) => a.or(b),
        };
        self
    }
}

fn process_file(index: usize, path: &Path, cfg: &RunConfig) -> Batch {
    let mut batch = Batch::empty(&cfg.analysis.rules);
    match load_scenario(path, cfg.ingest.target_rate_hz) {
        Ok(s) => {
            batch.aggregates = score_scenario(&s, &cfg.analysis);
            batch.scenarios = 1;
        }
        Err(e) if e.is_document_error() && !cfg.ingest.strict => {
            batch.diagnostics.push(diagnostic_for(&e, path));
            batch.skipped = 1;
        }
        Err(e) => batch.failure = Some((index, e)),
    }
    batch
}

/// Analyze every scenario under the configured inputs and write
/// `report_<rule>.json`, `driver_scores_<rule>.csv`, `histogram_<rule>.svg`
/// and `relative_<rule>.svg` into the output directory.
///
/// Output bytes do not depend on `workers`.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    cfg.validate().map_err(RunError::Config)?;
    let files = discover_files(&cfg.ingest.input_paths).map_err(|e| RunError::Config(e.to_string()))?;
    if files.is_empty() {
        return Err(RunError::NoScenarios {
            diagnostics: Vec::new(),
        });
    }

    let indexed: Vec<(usize, PathBuf)> = files.into_iter().enumerate().collect();
    let batch = map_reduce(
        &indexed,
        Execution::from_workers(cfg.workers),
        || Batch::empty(&cfg.analysis.rules),
        |(i, path)| process_file(*i, path, cfg),
        Batch::merge,
    );

    let mut diagnostics = batch.diagnostics;
    if let Some((_, err)) = batch.failure {
        if err.is_document_error() {
            return Err(RunError::StrictParse {
                source: err,
                diagnostics,
            });
        }
        return Err(RunError::Ingest(err));
    }
    if batch.scenarios == 0 {
        return Err(RunError::NoScenarios { diagnostics });
    }

    let mut reports = Vec::new();
    for part in batch.aggregates.iter() {
        match part.finalize(cfg.histogram_bins) {
            Ok(r) => reports.push(r),
            Err(AggregateError::EmptyDataset) => diagnostics.push(Diagnostic::new(
                Level::Warn,
                "no_samples",
                format!("rule '{}' produced no scored samples; no report written", part.rule()),
            )),
            Err(e) => unreachable!("finalize only fails on empty input: {e}"),
        }
    }

    let written = report::write_outputs(&cfg.output_dir, &reports).map_err(|(path, source)| {
        RunError::Output { path, source }
    })?;

    diagnostics.push(Diagnostic::new(
        Level::Info,
        "summary",
        format!(
            "{} scenario(s) analyzed, {} file(s) skipped, {} report(s) written to {}",
            batch.scenarios,
            batch.skipped,
            reports.len(),
            cfg.output_dir.display()
        ),
    ));

    Ok(RunOutcome {
        reports,
        scenario_count: batch.scenarios,
        files_skipped: batch.skipped,
        written,
        diagnostics,
    })
}

/// Create `dir` if missing.
pub(crate) fn ensure_dir(dir: &Path) -> Result<(), (PathBuf, std::io::Error)> {
    fs::create_dir_all(dir).map_err(|e| (dir.to_path_buf(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, Planted, SynthSpec};

    #[test]
    fn sequential_and_parallel_agree() {
        let scenarios = generate(&SynthSpec {
            n_scenarios: 12,
            planted_dist: Planted::Uniform { lo: 0.3, hi: 1.0 },
            planted_speed: Planted::Uniform { lo: 0.6, hi: 1.0 },
            ..SynthSpec::default()
        })
        .unwrap();
        let cfg = AnalysisConfig::default();
        let a = aggregate_scenarios(&scenarios, &cfg, Execution::Sequential);
        let b = aggregate_scenarios(&scenarios, &cfg, Execution::Parallel { workers: 4 });
        assert_eq!(a, b);
        for rule in Rule::ALL {
            assert!(a.get(rule).unwrap().sample_count() > 0);
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = RunConfig::new(vec!["x".into()], "out");
        assert!(cfg.validate().is_ok());
        cfg.analysis.rules.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::new(vec!["x".into()], "out");
        cfg.histogram_bins = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::new(vec![], "out");
        assert!(cfg.validate().is_err());
        cfg.ingest.input_paths.push("x".into());
        cfg.analysis.speed.min_fraction_of_limit = 1.5;
        assert!(cfg.validate().is_err());
    }
}
