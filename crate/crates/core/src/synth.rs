//! Synthetic scenarios with planted conformity, plus brute-force oracles.
//!
//! Every generated driver gets its own straight eastbound lane (one driver
//! per lane, lanes stacked north at a fixed spacing) and drives at constant
//! speed `limit / speed_rc`, so the speed rule recovers `speed_rc` exactly.
//! A driver with `dist_rc < 1` is led by a pace vehicle whose rear face
//! sits `dist_rc · horizon · speed` ahead of the driver's front face in every
//! frame; the pace vehicle reports zero velocity, so neither rule scores it,
//! but it still obstructs the driver's projection rays. The safety distance
//! rule therefore recovers `dist_rc` exactly. This is a test fixture, not a
//! traffic simulation.

use std::collections::HashMap;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::aggregate::AggregateError;
use crate::geometry::{OrientedBox, Segment};
use crate::model::{
    AggregateReport, DriverScenarioScore, Frame, Histogram, Lane, RcSample, RelativeBins, Rule,
    Scenario, Vec2, VehicleState,
};

/// Smallest speed-rule value the generator will plant (20× the limit).
pub const MIN_PLANTED_SPEED_RC: f64 = 0.05;

const GOLDEN_CONJUGATE: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("infeasible synthetic spec: {0}")]
    InfeasibleSpec(String),
    #[error("cannot parse planted distribution '{0}': expected const:R, uniform:A,B or mix:P,A,B")]
    BadDistribution(String),
}

/// Distribution of planted per-driver conformity values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Planted {
    Constant(f64),
    /// Uniform on `[lo, hi)`.
    Uniform { lo: f64, hi: f64 },
    /// Exactly 1.0 with probability `strict`, otherwise uniform on `[lo, hi)`.
    Mixture { strict: f64, lo: f64, hi: f64 },
}

impl Planted {
    fn check(&self, floor: f64, what: &str) -> Result<(), SynthError> {
        let in_range = |x: f64| (floor..=1.0).contains(&x);
        let ok = match *self {
            Planted::Constant(r) => in_range(r),
            Planted::Uniform { lo, hi } => in_range(lo) && in_range(hi) && lo < hi,
            Planted::Mixture { strict, lo, hi } => {
                (0.0..=1.0).contains(&strict) && in_range(lo) && in_range(hi) && lo < hi
            }
        };
        if ok {
            Ok(())
        } else {
            Err(SynthError::InfeasibleSpec(format!(
                "{what} distribution {self:?} must lie within [{floor}, 1]"
            )))
        }
    }

    /// Draw one value. `stratum` in `[0, 1)` decides the strict branch of a
    /// mixture; callers feed a low-discrepancy sequence so the strict share
    /// tracks `strict` closely even for modest driver counts.
    fn draw(&self, rng: &mut impl Rng, stratum: f64) -> f64 {
        match *self {
            Planted::Constant(r) => r,
            Planted::Uniform { lo, hi } => rng.random_range(lo..hi),
            Planted::Mixture { strict, lo, hi } => {
                let continuous = rng.random_range(lo..hi);
                if stratum < strict {
                    1.0
                } else {
                    continuous
                }
            }
        }
    }
}

impl FromStr for Planted {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SynthError::BadDistribution(s.to_owned());
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        match (kind.trim(), nums.as_slice()) {
            ("const", &[r]) => Ok(Planted::Constant(r)),
            ("uniform", &[lo, hi]) => Ok(Planted::Uniform { lo, hi }),
            ("mix", &[strict, lo, hi]) => Ok(Planted::Mixture { strict, lo, hi }),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_scenarios: usize,
    /// Scored drivers per scenario (pace vehicles come on top).
    pub n_vehicles: usize,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub planted_dist: Planted,
    pub planted_speed: Planted,
    pub speed_limit_mps: f64,
    pub lane_spacing_m: f64,
    pub vertex_spacing_m: f64,
    /// Must match the horizon the safety distance rule is run with.
    pub horizon_s: f64,
    pub vehicle_length_m: f64,
    pub vehicle_width_m: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 0,
            n_scenarios: 10,
            n_vehicles: 10,
            duration_s: 9.0,
            sample_rate_hz: 10.0,
            planted_dist: Planted::Constant(1.0),
            planted_speed: Planted::Constant(1.0),
            // 30 mph
            speed_limit_mps: 13.4112,
            lane_spacing_m: 6.0,
            vertex_spacing_m: 2.0,
            horizon_s: 3.0,
            vehicle_length_m: 4.5,
            vehicle_width_m: 1.9,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let positive = [
            ("duration_s", self.duration_s),
            ("sample_rate_hz", self.sample_rate_hz),
            ("speed_limit_mps", self.speed_limit_mps),
            ("vertex_spacing_m", self.vertex_spacing_m),
            ("horizon_s", self.horizon_s),
            ("vehicle_length_m", self.vehicle_length_m),
            ("vehicle_width_m", self.vehicle_width_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SynthError::InfeasibleSpec(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.lane_spacing_m > self.vehicle_width_m + 0.4) {
            return Err(SynthError::InfeasibleSpec(
                "lane spacing must exceed vehicle width by at least 0.4 m".into(),
            ));
        }
        if !(self.vertex_spacing_m < self.lane_spacing_m) {
            return Err(SynthError::InfeasibleSpec(
                "vertex spacing must be below lane spacing".into(),
            ));
        }
        if self.speed_limit_mps < 5.0 / 3.6 {
            return Err(SynthError::InfeasibleSpec(
                "speed limit below the 5 km/h scoring floor".into(),
            ));
        }
        self.planted_dist.check(0.0, "safety distance")?;
        self.planted_speed.check(MIN_PLANTED_SPEED_RC, "speed limit")?;
        Ok(())
    }

    pub fn frame_count(&self) -> u64 {
        (self.duration_s * self.sample_rate_hz + 1e-9).floor() as u64 + 1
    }
}

/// Gap from a follower's front face to its leader's rear face that yields
/// safety-distance conformity `rc` at `speed`.
pub fn follower_gap(rc: f64, speed_mps: f64, horizon_s: f64) -> f64 {
    rc * horizon_s * speed_mps
}

/// Ground truth for one generated driver.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedDriver {
    pub vehicle_id: String,
    pub dist_rc: f64,
    pub speed_rc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthScenario {
    pub scenario: Scenario,
    pub planted: Vec<PlantedDriver>,
}

fn unit_offset(seed: u64, salt: u64) -> f64 {
    let mut x = seed ^ salt;
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^= x >> 31;
    (x >> 11) as f64 / (1u64 << 53) as f64
}

fn stratum(offset: f64, global_index: usize) -> f64 {
    (offset + (global_index as f64 + 1.0) * GOLDEN_CONJUGATE).fract()
}

fn one_scenario(spec: &SynthSpec, index: usize) -> SynthScenario {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);
    let dist_offset = unit_offset(spec.seed, 0xd1);
    let speed_offset = unit_offset(spec.seed, 0x5e);

    let scenario_id = format!("synth-{}-{index:05}", spec.seed);
    let half_len = spec.vehicle_length_m / 2.0;
    let pacer_width = spec.vehicle_width_m + 0.2;
    let n_frames = spec.frame_count();
    let end_t = (n_frames - 1) as f64 / spec.sample_rate_hz;

    struct Driver {
        id: String,
        pacer_id: String,
        y: f64,
        x0: f64,
        speed: f64,
        gap: Option<f64>,
    }

    let mut planted = Vec::with_capacity(spec.n_vehicles);
    let mut drivers = Vec::with_capacity(spec.n_vehicles);
    let mut lanes = Vec::with_capacity(spec.n_vehicles);
    for i in 0..spec.n_vehicles {
        let g = index * spec.n_vehicles + i;
        let dist_rc = spec.planted_dist.draw(&mut rng, stratum(dist_offset, g));
        let speed_rc = spec.planted_speed.draw(&mut rng, stratum(speed_offset, g));
        let speed = spec.speed_limit_mps / speed_rc;
        let x0 = rng.random_range(0.0..20.0);
        let y = i as f64 * spec.lane_spacing_m;
        let gap = (dist_rc < 1.0).then(|| follower_gap(dist_rc, speed, spec.horizon_s));

        let reach = x0 + speed * end_t + speed * spec.horizon_s + spec.vehicle_length_m * 2.0;
        let n_vertices = ((reach + 40.0) / spec.vertex_spacing_m).ceil() as usize + 1;
        lanes.push(Lane {
            lane_id: format!("lane-{i:03}"),
            polyline: (0..n_vertices)
                .map(|k| Vec2::new(-20.0 + k as f64 * spec.vertex_spacing_m, y))
                .collect(),
            speed_limit_mps: Some(spec.speed_limit_mps),
        });

        let id = format!("car-{i:03}");
        planted.push(PlantedDriver {
            vehicle_id: id.clone(),
            dist_rc,
            speed_rc,
        });
        drivers.push(Driver {
            id,
            pacer_id: format!("pacer-{i:03}"),
            y,
            x0,
            speed,
            gap,
        });
    }

    let frames = (0..n_frames)
        .map(|f| {
            let t = f as f64 / spec.sample_rate_hz;
            let mut vehicles = Vec::with_capacity(2 * drivers.len());
            for d in &drivers {
                let x = d.x0 + d.speed * t;
                vehicles.push(VehicleState {
                    vehicle_id: d.id.clone(),
                    center: Vec2::new(x, d.y),
                    heading: 0.0,
                    velocity: Vec2::new(d.speed, 0.0),
                    length: spec.vehicle_length_m,
                    width: spec.vehicle_width_m,
                    valid: true,
                });
                if let Some(gap) = d.gap {
                    let rear = x + half_len + gap;
                    vehicles.push(VehicleState {
                        vehicle_id: d.pacer_id.clone(),
                        center: Vec2::new(rear + half_len, d.y),
                        heading: 0.0,
                        velocity: Vec2::ZERO,
                        length: spec.vehicle_length_m,
                        width: pacer_width,
                        valid: true,
                    });
                }
            }
            Frame {
                frame_index: f,
                time_s: t,
                vehicles,
            }
        })
        .collect();

    SynthScenario {
        scenario: Scenario {
            scenario_id,
            sample_rate_hz: spec.sample_rate_hz,
            lanes,
            frames,
        },
        planted,
    }
}

/// Scenarios together with the values planted for each driver.
pub fn generate_with_truth(spec: &SynthSpec) -> Result<Vec<SynthScenario>, SynthError> {
    spec.validate()?;
    Ok((0..spec.n_scenarios).map(|i| one_scenario(spec, i)).collect())
}

pub fn generate(spec: &SynthSpec) -> Result<Vec<Scenario>, SynthError> {
    Ok(generate_with_truth(spec)?
        .into_iter()
        .map(|s| s.scenario)
        .collect())
}

/// A random segment/box pair for oracle checks. Most segments are aimed at a
/// point in or near the box, some start inside it and the rest point
/// anywhere, so hits, misses and zero distances all occur.
pub fn random_segment_box_pair(rng: &mut impl Rng) -> (Segment, OrientedBox) {
    use std::f64::consts::PI;
    let obb = OrientedBox {
        center: Vec2::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)),
        heading: rng.random_range(-PI..PI),
        half_length: rng.random_range(0.5..6.0),
        half_width: rng.random_range(0.3..2.5),
    };
    let (u, w) = obb.axes();
    let local = |rng: &mut dyn rand::RngCore, scale: f64| {
        obb.center
            + u * (obb.half_length * scale * rng.random_range(-1.0..1.0))
            + w * (obb.half_width * scale * rng.random_range(-1.0..1.0))
    };
    let kind = rng.random_range(0..20);
    let origin = if kind == 0 {
        local(rng, 1.0)
    } else {
        obb.center + Vec2::from_angle(rng.random_range(-PI..PI)) * rng.random_range(0.0..30.0)
    };
    let length = rng.random_range(0.5..45.0);
    let dir = if kind < 14 {
        let aim = local(rng, 1.5) - origin;
        if aim.norm() > 0.0 {
            aim * (1.0 / aim.norm())
        } else {
            Vec2::from_angle(0.0)
        }
    } else {
        Vec2::from_angle(rng.random_range(-PI..PI))
    };
    (
        Segment {
            origin,
            tip: origin + dir * length,
        },
        obb,
    )
}

/// Entry distance found by dense sampling: the first of `samples + 1`
/// equally spaced points along the segment that lies inside or on the box.
pub fn brute_force_entry_distance(seg: &Segment, obb: &OrientedBox, samples: usize) -> Option<f64> {
    assert!(samples >= 2);
    let (sin, cos) = obb.heading.sin_cos();
    let dx = seg.tip.x - seg.origin.x;
    let dy = seg.tip.y - seg.origin.y;
    let len = (dx * dx + dy * dy).sqrt();
    let tol = 1e-9;
    (0..=samples).find_map(|i| {
        let t = i as f64 / samples as f64;
        let px = seg.origin.x + t * dx - obb.center.x;
        let py = seg.origin.y + t * dy - obb.center.y;
        let along = px * cos + py * sin;
        let across = -px * sin + py * cos;
        (along.abs() <= obb.half_length + tol && across.abs() <= obb.half_width + tol)
            .then_some(t * len)
    })
}

/// Straight-line evaluation of every aggregation level, independent of
/// [`crate::aggregate`]. Used as the oracle for the mergeable path.
pub fn brute_force_aggregate(samples: &[RcSample], bin_count: usize) -> Result<AggregateReport, AggregateError> {
    let Some(first) = samples.first() else {
        return Err(AggregateError::EmptyDataset);
    };
    let rule: Rule = first.rule;
    if let Some(other) = samples.iter().find(|s| s.rule != rule) {
        return Err(AggregateError::MixedRules(rule, other.rule));
    }

    let mut per_driver: HashMap<(&str, &str), Vec<f64>> = HashMap::new();
    for s in samples {
        per_driver
            .entry((&s.scenario_id, &s.vehicle_id))
            .or_default()
            .push(s.rc);
    }
    let mut driver_scores: Vec<DriverScenarioScore> = per_driver
        .into_iter()
        .map(|((scenario_id, vehicle_id), rcs)| DriverScenarioScore {
            rule,
            scenario_id: scenario_id.to_owned(),
            vehicle_id: vehicle_id.to_owned(),
            rc_mean: rcs.iter().sum::<f64>() / rcs.len() as f64,
            frame_count: rcs.len() as u64,
        })
        .collect();
    driver_scores.sort_by(|a, b| {
        (&a.scenario_id, &a.vehicle_id).cmp(&(&b.scenario_id, &b.vehicle_id))
    });

    let mut per_scenario: HashMap<&str, Vec<f64>> = HashMap::new();
    for d in &driver_scores {
        per_scenario.entry(&d.scenario_id).or_default().push(d.rc_mean);
    }
    let scenario_scores: std::collections::BTreeMap<String, f64> = per_scenario
        .into_iter()
        .map(|(id, means)| (id.to_owned(), means.iter().sum::<f64>() / means.len() as f64))
        .collect();
    let dataset_mean =
        scenario_scores.values().sum::<f64>() / scenario_scores.len() as f64;

    let mut counts = vec![0u64; bin_count];
    let mut quarters = [0u64; 4];
    let mut strict = 0u64;
    for d in &driver_scores {
        // linear scan over the edges i/B; the last bin is closed
        let b = (0..bin_count)
            .rev()
            .find(|&i| d.rc_mean >= i as f64 / bin_count as f64)
            .unwrap_or(0);
        counts[b] += 1;
        let q = if d.rc_mean < 0.25 {
            0
        } else if d.rc_mean < 0.5 {
            1
        } else if d.rc_mean < 0.75 {
            2
        } else {
            3
        };
        quarters[q] += 1;
        if d.rc_mean == 1.0 {
            strict += 1;
        }
    }
    let n = driver_scores.len() as f64;

    Ok(AggregateReport {
        rule,
        dataset_mean,
        scenario_count: scenario_scores.len(),
        driver_count: driver_scores.len(),
        sample_count: samples.len() as u64,
        scenario_scores,
        histogram: Histogram {
            bin_count,
            bin_edges: (0..=bin_count).map(|i| i as f64 / bin_count as f64).collect(),
            counts,
        },
        relative_bins: RelativeBins {
            quarters: quarters.map(|c| c as f64 / n),
            strict_share: strict as f64 / n,
        },
        driver_scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_scenario;
    use crate::rgsf::write_scenario;

    #[test]
    fn worked_example_gap() {
        let rc = 8.5 / 9.0;
        assert!((follower_gap(rc, 3.0, 3.0) - 8.5).abs() < 1e-12);
        assert!((follower_gap(0.9444, 3.0, 3.0) - 8.4996).abs() < 1e-12);
    }

    #[test]
    fn parse_distributions() {
        assert_eq!("const:0.9".parse::<Planted>().unwrap(), Planted::Constant(0.9));
        assert_eq!(
            "uniform:0.8,1.0".parse::<Planted>().unwrap(),
            Planted::Uniform { lo: 0.8, hi: 1.0 }
        );
        assert_eq!(
            "mix:0.55,0.5,1".parse::<Planted>().unwrap(),
            Planted::Mixture { strict: 0.55, lo: 0.5, hi: 1.0 }
        );
        assert!("gauss:0.5".parse::<Planted>().is_err());
        assert!("const:0.5,0.6".parse::<Planted>().is_err());
        assert!("const".parse::<Planted>().is_err());
    }

    #[test]
    fn strict_speed_plant_drives_at_limit() {
        let spec = SynthSpec {
            n_scenarios: 1,
            n_vehicles: 3,
            ..SynthSpec::default()
        };
        let s = &generate(&spec).unwrap()[0];
        for v in &s.frames[0].vehicles {
            assert_eq!(v.velocity.x, spec.speed_limit_mps);
        }
    }

    #[test]
    fn generated_scenarios_are_valid_and_deterministic() {
        let spec = SynthSpec {
            seed: 7,
            n_scenarios: 3,
            planted_dist: Planted::Mixture { strict: 0.5, lo: 0.2, hi: 1.0 },
            planted_speed: Planted::Uniform { lo: 0.7, hi: 1.0 },
            ..SynthSpec::default()
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(validate_scenario(x).is_empty(), "{:?}", validate_scenario(x));
            assert_eq!(write_scenario(x).unwrap(), write_scenario(y).unwrap());
        }
        assert_ne!(a[0], a[1]);
        let other = generate(&SynthSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(other[0], a[0]);
    }

    #[test]
    fn infeasible_specs() {
        let bad = [
            SynthSpec {
                planted_dist: Planted::Constant(1.2),
                ..SynthSpec::default()
            },
            SynthSpec {
                planted_speed: Planted::Constant(0.0),
                ..SynthSpec::default()
            },
            SynthSpec {
                planted_speed: Planted::Uniform { lo: 0.9, hi: 0.8 },
                ..SynthSpec::default()
            },
            SynthSpec {
                lane_spacing_m: 2.0,
                ..SynthSpec::default()
            },
            SynthSpec {
                sample_rate_hz: 0.0,
                ..SynthSpec::default()
            },
        ];
        for spec in bad {
            assert!(matches!(generate(&spec), Err(SynthError::InfeasibleSpec(_))), "{spec:?}");
        }
    }

    #[test]
    fn brute_force_entry_examples() {
        let obb = OrientedBox {
            center: Vec2::new(10.0, 0.0),
            heading: 0.0,
            half_length: 2.0,
            half_width: 1.0,
        };
        let seg = Segment {
            origin: Vec2::ZERO,
            tip: Vec2::new(9.0, 0.0),
        };
        let c = brute_force_entry_distance(&seg, &obb, 100_000).unwrap();
        assert!((c - 8.0).abs() <= 9.0 / 100_000.0 + 1e-9);

        let far = OrientedBox {
            center: Vec2::new(20.0, 0.0),
            ..obb
        };
        assert_eq!(brute_force_entry_distance(&seg, &far, 1000), None);
        let inside = Segment {
            origin: Vec2::new(10.0, 0.5),
            tip: Vec2::new(30.0, 0.5),
        };
        assert_eq!(brute_force_entry_distance(&inside, &obb, 1000), Some(0.0));
    }

    #[test]
    fn brute_force_aggregate_degenerate_and_hand_built() {
        let one = [RcSample::new(Rule::SpeedLimit, "s", "v", 0, 0.7)];
        let r = brute_force_aggregate(&one, 20).unwrap();
        assert_eq!(r.dataset_mean, 0.7);
        assert_eq!(r.scenario_scores["s"], 0.7);
        assert_eq!(r.driver_scores[0].rc_mean, 0.7);

        // 2 scenarios × 2 drivers × 2 frames.
        // s1: a = (1, .5) → .75, b = (.5, .5) → .5; RC_s1 = .625
        // s2: c = (0, 1) → .5,   d = (1, 1) → 1;   RC_s2 = .75
        // total = .6875
        let mk = |s: &str, v: &str, t, rc| RcSample::new(Rule::SafetyDistance, s, v, t, rc);
        let samples = [
            mk("s1", "a", 0, 1.0),
            mk("s1", "a", 1, 0.5),
            mk("s1", "b", 0, 0.5),
            mk("s1", "b", 1, 0.5),
            mk("s2", "c", 0, 0.0),
            mk("s2", "c", 1, 1.0),
            mk("s2", "d", 0, 1.0),
            mk("s2", "d", 1, 1.0),
        ];
        let r = brute_force_aggregate(&samples, 4).unwrap();
        assert_eq!(r.scenario_scores["s1"], 0.625);
        assert_eq!(r.scenario_scores["s2"], 0.75);
        assert_eq!(r.dataset_mean, 0.6875);
        assert_eq!(r.histogram.counts, vec![0, 0, 2, 2]);
        assert_eq!(r.relative_bins.strict_share, 0.25);

        let mut mixed = samples.to_vec();
        mixed.push(RcSample::new(Rule::SpeedLimit, "s", "v", 0, 1.0));
        assert!(matches!(
            brute_force_aggregate(&mixed, 20),
            Err(AggregateError::MixedRules(..))
        ));
    }
}
