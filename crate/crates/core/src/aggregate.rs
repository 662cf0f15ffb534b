//! Frame → driver → scenario → dataset averaging, and the score
//! distributions built from driver means.
//!
//! Every level is an unweighted arithmetic mean. A driver's mean covers only
//! the frames in which it was scored; a scenario counts each driver once; the
//! dataset counts each scenario once.
//!
//! [`PartialAggregate`] holds per-driver running sums and is the unit of
//! parallel work. Partials merge associatively and commutatively, and
//! [`PartialAggregate::finalize`] always walks drivers and scenarios in sorted
//! key order, so the report does not depend on how the input was partitioned.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{AggregateReport, DriverScenarioScore, Histogram, RcSample, RelativeBins, Rule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AggregateError {
    #[error("samples mix rules {0} and {1}")]
    MixedRules(Rule, Rule),
    #[error("scenario has no scored drivers")]
    EmptyScenario,
    #[error("no scenario produced a score")]
    EmptyDataset,
    #[error("no scores to summarize")]
    EmptyInput,
}

fn single_rule<'a>(mut rules: impl Iterator<Item = &'a Rule>) -> Result<Option<Rule>, AggregateError> {
    let Some(&first) = rules.next() else {
        return Ok(None);
    };
    for &r in rules {
        if r != first {
            return Err(AggregateError::MixedRules(first, r));
        }
    }
    Ok(Some(first))
}

/// Per-(scenario, driver) mean over that driver's scored frames, sorted by
/// scenario id then vehicle id.
pub fn driver_scenario_means(samples: &[RcSample]) -> Result<Vec<DriverScenarioScore>, AggregateError> {
    let Some(rule) = single_rule(samples.iter().map(|s| &s.rule))? else {
        return Ok(Vec::new());
    };
    let mut acc: BTreeMap<(&str, &str), (f64, u64)> = BTreeMap::new();
    for s in samples {
        let e = acc.entry((&s.scenario_id, &s.vehicle_id)).or_default();
        e.0 += s.rc;
        e.1 += 1;
    }
    Ok(acc
        .into_iter()
        .map(|((scenario_id, vehicle_id), (sum, n))| DriverScenarioScore {
            rule,
            scenario_id: scenario_id.to_owned(),
            vehicle_id: vehicle_id.to_owned(),
            rc_mean: (sum / n as f64).clamp(0.0, 1.0),
            frame_count: n,
        })
        .collect())
}

/// Mean of the drivers' means; each driver counts once.
pub fn scenario_mean(scores: &[DriverScenarioScore]) -> Result<f64, AggregateError> {
    if scores.is_empty() {
        return Err(AggregateError::EmptyScenario);
    }
    let sum: f64 = scores.iter().map(|d| d.rc_mean).sum();
    Ok((sum / scores.len() as f64).clamp(0.0, 1.0))
}

/// Mean over scenario scores; each scenario counts once.
pub fn dataset_mean(scenario_means: &[f64]) -> Result<f64, AggregateError> {
    if scenario_means.is_empty() {
        return Err(AggregateError::EmptyDataset);
    }
    let sum: f64 = scenario_means.iter().sum();
    Ok((sum / scenario_means.len() as f64).clamp(0.0, 1.0))
}

fn uniform_edges(bins: usize) -> Vec<f64> {
    (0..=bins).map(|i| i as f64 / bins as f64).collect()
}

/// Bin `x` into `[e_i, e_{i+1})`, with the last bin closed at 1.0. The
/// initial guess from `floor(x·B)` is corrected against the stored edges so
/// that binning agrees with the reported edges exactly.
fn bin_of(x: f64, edges: &[f64]) -> usize {
    let bins = edges.len() - 1;
    let mut i = ((x * bins as f64).floor().max(0.0) as usize).min(bins - 1);
    while i > 0 && x < edges[i] {
        i -= 1;
    }
    while i + 1 < bins && x >= edges[i + 1] {
        i += 1;
    }
    i
}

/// Uniform histogram of driver means over `[0, 1]`. Counts are raw; any log
/// scaling happens at render time.
///
/// # Panics
///
/// If `bin_count` is zero.
pub fn build_histogram(scores: &[DriverScenarioScore], bin_count: usize) -> Histogram {
    assert!(bin_count >= 1, "histogram needs at least one bin");
    let bin_edges = uniform_edges(bin_count);
    let mut counts = vec![0u64; bin_count];
    for s in scores {
        counts[bin_of(s.rc_mean, &bin_edges)] += 1;
    }
    Histogram {
        bin_count,
        bin_edges,
        counts,
    }
}

pub fn build_relative_bins(scores: &[DriverScenarioScore]) -> Result<RelativeBins, AggregateError> {
    if scores.is_empty() {
        return Err(AggregateError::EmptyInput);
    }
    let edges = uniform_edges(4);
    let mut counts = [0u64; 4];
    let mut strict = 0u64;
    for s in scores {
        counts[bin_of(s.rc_mean, &edges)] += 1;
        if s.rc_mean == 1.0 {
            strict += 1;
        }
    }
    let n = scores.len() as f64;
    Ok(RelativeBins {
        quarters: counts.map(|c| c as f64 / n),
        strict_share: strict as f64 / n,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct RunningSum {
    sum: f64,
    count: u64,
}

/// Mergeable aggregation state for one rule.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialAggregate {
    rule: Rule,
    drivers: BTreeMap<(String, String), RunningSum>,
    sample_count: u64,
}

impl PartialAggregate {
    /// The identity element for [`merge`](Self::merge).
    pub fn empty(rule: Rule) -> Self {
        PartialAggregate {
            rule,
            drivers: BTreeMap::new(),
            sample_count: 0,
        }
    }

    pub fn rule(&self) -> Rule {
        self.rule
    }

    pub fn sample_count(&self) -> u64 {
        self.sample_count
    }

    pub fn is_empty(&self) -> bool {
        self.sample_count == 0
    }

    pub fn push(&mut self, sample: &RcSample) -> Result<(), AggregateError> {
        if sample.rule != self.rule {
            return Err(AggregateError::MixedRules(self.rule, sample.rule));
        }
        let e = self
            .drivers
            .entry((sample.scenario_id.clone(), sample.vehicle_id.clone()))
            .or_default();
        e.sum += sample.rc;
        e.count += 1;
        self.sample_count += 1;
        Ok(())
    }

    pub fn from_samples(rule: Rule, samples: &[RcSample]) -> Result<Self, AggregateError> {
        let mut p = PartialAggregate::empty(rule);
        for s in samples {
            p.push(s)?;
        }
        Ok(p)
    }

    /// Combine two partials as if their sample streams had been
    /// concatenated.
    pub fn merge(mut self, other: PartialAggregate) -> Result<Self, AggregateError> {
        if self.rule != other.rule {
            return Err(AggregateError::MixedRules(self.rule, other.rule));
        }
        if self.drivers.len() < other.drivers.len() {
            return other.merge(self);
        }
        for (key, rs) in other.drivers {
            let e = self.drivers.entry(key).or_default();
            e.sum += rs.sum;
            e.count += rs.count;
        }
        self.sample_count += other.sample_count;
        Ok(self)
    }

    /// Driver scores in (scenario id, vehicle id) order.
    pub fn driver_scores(&self) -> Vec<DriverScenarioScore> {
        self.drivers
            .iter()
            .map(|((scenario_id, vehicle_id), rs)| DriverScenarioScore {
                rule: self.rule,
                scenario_id: scenario_id.clone(),
                vehicle_id: vehicle_id.clone(),
                rc_mean: (rs.sum / rs.count as f64).clamp(0.0, 1.0),
                frame_count: rs.count,
            })
            .collect()
    }

    pub fn finalize(&self, bin_count: usize) -> Result<AggregateReport, AggregateError> {
        let driver_scores = self.driver_scores();
        if driver_scores.is_empty() {
            return Err(AggregateError::EmptyDataset);
        }

        let mut scenario_scores = BTreeMap::new();
        for group in driver_scores.chunk_by(|a, b| a.scenario_id == b.scenario_id) {
            scenario_scores.insert(group[0].scenario_id.clone(), scenario_mean(group)?);
        }
        let means: Vec<f64> = scenario_scores.values().copied().collect();

        Ok(AggregateReport {
            rule: self.rule,
            dataset_mean: dataset_mean(&means)?,
            scenario_count: scenario_scores.len(),
            driver_count: driver_scores.len(),
            sample_count: self.sample_count,
            histogram: build_histogram(&driver_scores, bin_count),
            relative_bins: build_relative_bins(&driver_scores)?,
            scenario_scores,
            driver_scores,
        })
    }
}
