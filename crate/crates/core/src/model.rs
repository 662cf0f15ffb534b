//! Domain types shared by every stage of the pipeline.
//!
//! Everything here is plain immutable data in SI units (meters, m/s,
//! seconds, radians). Types are `Send + Sync` and can be handed to parallel
//! workers as-is.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A point or vector in the ground plane (x east, y north).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Unit vector pointing along `angle` (radians, counter-clockwise from +x).
    #[inline]
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Vec2::new(c, s)
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    #[inline]
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Counter-clockwise quarter turn.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    #[inline]
    fn mul(self, rhs: Vec2) -> Vec2 {
        rhs * self
    }
}

/// One road user observed at one frame.
///
/// `heading` orients the footprint only; motion direction always comes from
/// `velocity`. Observations flagged `valid == false` are carried through
/// parsing but never scored.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub vehicle_id: String,
    pub center: Vec2,
    pub heading: f64,
    pub velocity: Vec2,
    pub length: f64,
    pub width: f64,
    pub valid: bool,
}

impl VehicleState {
    #[inline]
    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }
}

/// A single scene: all vehicles at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub frame_index: u64,
    pub time_s: f64,
    pub vehicles: Vec<VehicleState>,
}

/// A lane centerline with its (optional) speed limit.
#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    pub lane_id: String,
    pub polyline: Vec<Vec2>,
    pub speed_limit_mps: Option<f64>,
}

/// A road graph plus an ordered sequence of scenes.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub scenario_id: String,
    pub sample_rate_hz: f64,
    pub lanes: Vec<Lane>,
    pub frames: Vec<Frame>,
}

/// The traffic rules that can be quantified.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum Rule {
    #[serde(rename = "dist")]
    SafetyDistance,
    #[serde(rename = "speed")]
    SpeedLimit,
}

impl Rule {
    pub const ALL: [Rule; 2] = [Rule::SafetyDistance, Rule::SpeedLimit];

    /// Short name used on the command line, in file names and in reports.
    pub fn short_name(self) -> &'static str {
        match self {
            Rule::SafetyDistance => "dist",
            Rule::SpeedLimit => "speed",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl std::str::FromStr for Rule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "dist" | "safety_distance" => Ok(Rule::SafetyDistance),
            "speed" | "speed_limit" => Ok(Rule::SpeedLimit),
            other => Err(format!("unknown rule '{other}' (expected 'dist' or 'speed')")),
        }
    }
}

/// Conformity of one driver with one rule at one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RcSample {
    pub rule: Rule,
    pub scenario_id: String,
    pub vehicle_id: String,
    pub frame_index: u64,
    pub rc: f64,
}

impl RcSample {
    /// # Panics
    ///
    /// If `rc` is outside `[0, 1]` (including NaN). Both rule engines bound
    /// their output analytically, so this only fires on a logic error.
    pub fn new(
        rule: Rule,
        scenario_id: impl Into<String>,
        vehicle_id: impl Into<String>,
        frame_index: u64,
        rc: f64,
    ) -> Self {
        assert!(
            (0.0..=1.0).contains(&rc),
            "rule conformity {rc} outside [0, 1]"
        );
        RcSample {
            rule,
            scenario_id: scenario_id.into(),
            vehicle_id: vehicle_id.into(),
            frame_index,
            rc,
        }
    }
}

/// A driver's mean conformity over the frames in which it was scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverScenarioScore {
    pub rule: Rule,
    pub scenario_id: String,
    pub vehicle_id: String,
    pub rc_mean: f64,
    pub frame_count: u64,
}

/// Raw (linear) counts over uniform bins on `[0, 1]`; the last bin is
/// closed at 1.0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_count: usize,
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Relative shares over the quarter intervals `[0,.25) [.25,.5) [.5,.75)
/// [.75,1]` plus the share of scores exactly equal to 1.0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeBins {
    pub quarters: [f64; 4],
    pub strict_share: f64,
}

/// Everything computed for one rule over a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub rule: Rule,
    pub dataset_mean: f64,
    pub scenario_count: usize,
    pub driver_count: usize,
    pub sample_count: u64,
    pub scenario_scores: BTreeMap<String, f64>,
    pub histogram: Histogram,
    pub relative_bins: RelativeBins,
    pub driver_scores: Vec<DriverScenarioScore>,
}

/// One broken invariant, located by a JSON-pointer style path into the
/// scenario document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn violation(path: String, message: String) -> Violation {
    Violation { path, message }
}

/// Check every structural invariant of a scenario. Returns an empty list when
/// the scenario is well formed. Never aborts early; all problems are listed.
pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();

    if !(s.sample_rate_hz.is_finite() && s.sample_rate_hz > 0.0) {
        out.push(violation(
            "/sample_rate_hz".into(),
            format!("Scenario: sample_rate_hz must be finite and > 0, got {}", s.sample_rate_hz),
        ));
    }

    let mut lane_ids = HashSet::new();
    for (li, lane) in s.lanes.iter().enumerate() {
        let base = format!("/lanes/{li}");
        if !lane_ids.insert(lane.lane_id.as_str()) {
            out.push(violation(
                format!("{base}/lane_id"),
                format!("Lane {li}: duplicate lane_id '{}'", lane.lane_id),
            ));
        }
        if lane.polyline.len() < 2 {
            out.push(violation(
                format!("{base}/polyline"),
                format!(
                    "Lane {li} ('{}'): polyline has {} point(s), at least 2 required",
                    lane.lane_id,
                    lane.polyline.len()
                ),
            ));
        }
        for (pi, p) in lane.polyline.iter().enumerate() {
            if !p.is_finite() {
                out.push(violation(
                    format!("{base}/polyline/{pi}"),
                    format!("Lane {li} ('{}'): point {pi} is not finite", lane.lane_id),
                ));
            }
        }
        for (pi, pair) in lane.polyline.windows(2).enumerate() {
            if pair[0] == pair[1] {
                out.push(violation(
                    format!("{base}/polyline/{}", pi + 1),
                    format!(
                        "Lane {li} ('{}'): points {pi} and {} are identical",
                        lane.lane_id,
                        pi + 1
                    ),
                ));
            }
        }
        if let Some(limit) = lane.speed_limit_mps {
            if !(limit.is_finite() && limit > 0.0) {
                out.push(violation(
                    format!("{base}/speed_limit_mps"),
                    format!("Lane {li} ('{}'): speed limit must be > 0, got {limit}", lane.lane_id),
                ));
            }
        }
    }

    if s.frames.is_empty() {
        out.push(violation("/frames".into(), "Scenario: no frames".into()));
    }

    let mut prev: Option<&Frame> = None;
    for (fi, frame) in s.frames.iter().enumerate() {
        let base = format!("/frames/{fi}");
        if !(frame.time_s.is_finite() && frame.time_s >= 0.0) {
            out.push(violation(
                format!("{base}/time_s"),
                format!("Frame {fi}: time_s must be finite and >= 0, got {}", frame.time_s),
            ));
        }
        if let Some(p) = prev {
            if frame.frame_index <= p.frame_index {
                out.push(violation(
                    format!("{base}/frame_index"),
                    format!(
                        "Frame {fi}: frame_index {} not greater than previous {}",
                        frame.frame_index, p.frame_index
                    ),
                ));
            }
            if frame.time_s <= p.time_s {
                out.push(violation(
                    format!("{base}/time_s"),
                    format!(
                        "Frame {fi}: time_s {} not greater than previous {}",
                        frame.time_s, p.time_s
                    ),
                ));
            }
        }
        prev = Some(frame);

        let mut ids = HashSet::new();
        for (vi, v) in frame.vehicles.iter().enumerate() {
            let vbase = format!("{base}/vehicles/{vi}");
            if !ids.insert(v.vehicle_id.as_str()) {
                out.push(violation(
                    format!("{vbase}/id"),
                    format!("Frame {fi}: duplicate vehicle_id '{}'", v.vehicle_id),
                ));
            }
            let numeric = [
                ("x", v.center.x),
                ("y", v.center.y),
                ("heading_rad", v.heading),
                ("vx", v.velocity.x),
                ("vy", v.velocity.y),
                ("length_m", v.length),
                ("width_m", v.width),
            ];
            for (name, value) in numeric {
                if !value.is_finite() {
                    out.push(violation(
                        format!("{vbase}/{name}"),
                        format!("Frame {fi}: vehicle '{}' has non-finite {name}", v.vehicle_id),
                    ));
                }
            }
            if v.heading.is_finite() && v.heading.abs() > PI + 1e-9 {
                out.push(violation(
                    format!("{vbase}/heading_rad"),
                    format!(
                        "Frame {fi}: vehicle '{}' heading {} outside [-pi, pi]",
                        v.vehicle_id, v.heading
                    ),
                ));
            }
            if v.valid {
                for (name, value) in [("length_m", v.length), ("width_m", v.width)] {
                    if value.is_finite() && value <= 0.0 {
                        out.push(violation(
                            format!("{vbase}/{name}"),
                            format!(
                                "Frame {fi}: valid vehicle '{}' has {name} {value} <= 0",
                                v.vehicle_id
                            ),
                        ));
                    }
                }
            }
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn car(id: &str) -> VehicleState {
        VehicleState {
            vehicle_id: id.into(),
            center: Vec2::ZERO,
            heading: 0.0,
            velocity: Vec2::new(10.0, 0.0),
            length: 4.5,
            width: 1.8,
            valid: true,
        }
    }

    fn one_frame(vehicles: Vec<VehicleState>) -> Scenario {
        Scenario {
            scenario_id: "s".into(),
            sample_rate_hz: 10.0,
            lanes: vec![Lane {
                lane_id: "L".into(),
                polyline: vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)],
                speed_limit_mps: Some(13.4),
            }],
            frames: vec![Frame {
                frame_index: 0,
                time_s: 0.0,
                vehicles,
            }],
        }
    }

    #[test]
    fn well_formed_scenario_has_no_violations() {
        assert!(validate_scenario(&one_frame(vec![car("a"), car("b")])).is_empty());
    }

    #[test]
    fn duplicate_vehicle_is_reported() {
        let v = validate_scenario(&one_frame(vec![car("a"), car("a")]));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].to_string(), "Frame 0: duplicate vehicle_id 'a'");
        assert_eq!(v[0].path, "/frames/0/vehicles/1/id");
    }

    #[test]
    fn single_point_lane_is_reported() {
        let mut s = one_frame(vec![car("a")]);
        s.lanes[0].polyline.truncate(1);
        let v = validate_scenario(&s);
        assert_eq!(v.len(), 1);
        assert!(v[0].message.contains("'L'"), "{}", v[0]);
        assert_eq!(v[0].path, "/lanes/0/polyline");
    }

    #[test]
    fn invalid_states_may_have_placeholder_extents() {
        let mut ghost = car("g");
        ghost.valid = false;
        ghost.length = -1.0;
        ghost.width = -1.0;
        assert!(validate_scenario(&one_frame(vec![ghost])).is_empty());

        let mut bad = car("b");
        bad.length = 0.0;
        assert_eq!(validate_scenario(&one_frame(vec![bad])).len(), 1);
    }

    #[test]
    fn collects_every_problem() {
        let mut s = one_frame(vec![car("a")]);
        s.sample_rate_hz = 0.0;
        s.lanes.push(s.lanes[0].clone());
        s.lanes[1].polyline = vec![Vec2::ZERO, Vec2::ZERO];
        s.frames.push(s.frames[0].clone());
        s.frames[0].vehicles[0].velocity.x = f64::NAN;
        let v = validate_scenario(&s);
        // rate, duplicate lane, repeated point, frame_index, time_s, NaN vx
        assert_eq!(v.len(), 6, "{v:?}");
        assert_eq!(validate_scenario(&s), v);
    }

    #[test]
    #[should_panic]
    fn rc_sample_rejects_out_of_range() {
        RcSample::new(Rule::SpeedLimit, "s", "v", 0, 1.5);
    }

    #[test]
    fn rule_names_round_trip() {
        for r in Rule::ALL {
            assert_eq!(r.short_name().parse::<Rule>().unwrap(), r);
        }
        assert!("lanes".parse::<Rule>().is_err());
    }
}
