//! Three-second safety distance conformity.
//!
//! For every moving vehicle three rays are cast from its front face (center,
//! left and right edge) along `velocity · horizon`. If a ray enters the
//! footprint of another vehicle travelling in a similar direction, the ray's
//! conformity is `c / |z|`, where `c` is the distance to the nearest entry
//! point and `|z|` the ray length. Rays that hit nothing score 1.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{
    footprint, front_points, heading_angle_between, projection_segment,
    segment_box_entry_distance, OrientedBox,
};
use crate::model::{RcSample, Rule, Scenario, Vec2, VehicleState};

/// Below this speed a vehicle's velocity direction is considered unreliable
/// and its box heading is used for the direction gate instead.
pub const STATIONARY_SPEED_MPS: f64 = 0.1;

/// How the three per-ray values are folded into one score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RayCombiner {
    #[default]
    Min,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyDistanceConfig {
    /// Projection horizon in seconds.
    pub horizon_s: f64,
    /// Vehicles slower than this are not scored.
    pub min_speed_mps: f64,
    /// Maximum direction difference for a vehicle to count as a lead.
    pub max_heading_dev_rad: f64,
    pub combiner: RayCombiner,
    /// Also drop slow vehicles as lead candidates (off by default: a parked
    /// car ahead is still an obstruction).
    pub exclude_slow_leads: bool,
}

impl Default for SafetyDistanceConfig {
    fn default() -> Self {
        SafetyDistanceConfig {
            horizon_s: 3.0,
            min_speed_mps: 5.0 / 3.6,
            max_heading_dev_rad: 0.2 * PI,
            combiner: RayCombiner::Min,
            exclude_slow_leads: false,
        }
    }
}

impl SafetyDistanceConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, value) in [
            ("horizon_s", self.horizon_s),
            ("min_speed_mps", self.min_speed_mps),
            ("max_heading_dev_rad", self.max_heading_dev_rad),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(format!("{name} must be finite and > 0, got {value}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ray {
    Center,
    Left,
    Right,
}

/// The worst ray hit behind a score below 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceViolationDetail {
    pub ego_id: String,
    pub lead_id: String,
    pub ray: Ray,
    /// Distance from the ray origin to the lead's footprint.
    pub c: f64,
    pub z_len: f64,
    pub rc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceScore {
    pub rc: f64,
    pub detail: Option<DistanceViolationDetail>,
}

fn travel_direction(v: &VehicleState) -> Vec2 {
    if v.speed() < STATIONARY_SPEED_MPS {
        Vec2::from_angle(v.heading)
    } else {
        v.velocity
    }
}

struct Candidate<'a> {
    id: &'a str,
    footprint: OrientedBox,
}

fn lead_candidates<'a>(
    ego: &VehicleState,
    others: &'a [VehicleState],
    cfg: &SafetyDistanceConfig,
) -> Vec<Candidate<'a>> {
    others
        .iter()
        .filter(|k| k.valid && k.vehicle_id != ego.vehicle_id)
        .filter(|k| !cfg.exclude_slow_leads || k.speed() >= cfg.min_speed_mps)
        .filter(|k| {
            heading_angle_between(ego.velocity, travel_direction(k))
                .is_ok_and(|a| a <= cfg.max_heading_dev_rad)
        })
        .filter_map(|k| {
            footprint(k).ok().map(|footprint| Candidate {
                id: &k.vehicle_id,
                footprint,
            })
        })
        .collect()
}

/// Safety-distance conformity of `ego` against `others` at one frame.
///
/// `None` means the vehicle is not scored (invalid, degenerate or slower than
/// `cfg.min_speed_mps`). `others` may contain `ego` itself; it is skipped by
/// id.
pub fn rc_dist_frame(
    ego: &VehicleState,
    others: &[VehicleState],
    cfg: &SafetyDistanceConfig,
) -> Option<DistanceScore> {
    if !ego.valid {
        return None;
    }
    let speed = ego.speed();
    if !(speed >= cfg.min_speed_mps) {
        return None;
    }
    let front = front_points(ego).ok()?;
    let candidates = lead_candidates(ego, others, cfg);

    let mut per_ray = [1.0_f64; 3];
    let mut worst: Option<DistanceViolationDetail> = None;
    for (slot, (ray, origin)) in [
        (Ray::Center, front.center),
        (Ray::Left, front.left),
        (Ray::Right, front.right),
    ]
    .into_iter()
    .enumerate()
    {
        let seg = projection_segment(origin, ego.velocity, cfg.horizon_s);
        let z_len = seg.length();
        let nearest = candidates
            .iter()
            .filter_map(|k| segment_box_entry_distance(&seg, &k.footprint).map(|c| (c, k.id)))
            .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
        let Some((c, lead_id)) = nearest else {
            continue;
        };
        let rc = (c / z_len).clamp(0.0, 1.0);
        per_ray[slot] = rc;
        if worst.as_ref().is_none_or(|w| rc < w.rc) {
            worst = Some(DistanceViolationDetail {
                ego_id: ego.vehicle_id.clone(),
                lead_id: lead_id.to_owned(),
                ray,
                c: c.min(z_len),
                z_len,
                rc,
            });
        }
    }

    let rc = match cfg.combiner {
        RayCombiner::Min => per_ray.iter().copied().fold(1.0, f64::min),
        RayCombiner::Mean => per_ray.iter().sum::<f64>() / 3.0,
    }
    .clamp(0.0, 1.0);
    Some(DistanceScore { rc, detail: worst })
}

/// One sample per scored (vehicle, frame), frame-major then by vehicle id.
pub fn score_scenario_dist(s: &Scenario, cfg: &SafetyDistanceConfig) -> Vec<RcSample> {
    let mut out = Vec::new();
    for frame in &s.frames {
        let mut order: Vec<&VehicleState> = frame.vehicles.iter().collect();
        order.sort_by(|a, b| a.vehicle_id.cmp(&b.vehicle_id));
        for ego in order {
            if let Some(score) = rc_dist_frame(ego, &frame.vehicles, cfg) {
                out.push(RcSample::new(
                    Rule::SafetyDistance,
                    s.scenario_id.as_str(),
                    ego.vehicle_id.as_str(),
                    frame.frame_index,
                    score.rc,
                ));
            }
        }
    }
    out
}
