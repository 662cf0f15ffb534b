//! Speed limit conformity: `min(1, limit / speed)` against the limit of the
//! nearest lane centerline.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::geometry::point_polyline_distance;
use crate::model::{Lane, RcSample, Rule, Scenario, Vec2, VehicleState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedLimitConfig {
    /// Vehicles farther than this from their nearest centerline vertex are
    /// not scored.
    pub max_lane_dist_m: f64,
    /// Vehicles slower than this fraction of their limit are not scored.
    pub min_fraction_of_limit: f64,
}

impl Default for SpeedLimitConfig {
    fn default() -> Self {
        SpeedLimitConfig {
            max_lane_dist_m: 10.0,
            min_fraction_of_limit: 0.8,
        }
    }
}

impl SpeedLimitConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.max_lane_dist_m.is_finite() && self.max_lane_dist_m > 0.0) {
            return Err(format!(
                "max_lane_dist_m must be finite and > 0, got {}",
                self.max_lane_dist_m
            ));
        }
        if !(self.min_fraction_of_limit > 0.0 && self.min_fraction_of_limit <= 1.0) {
            return Err(format!(
                "min_fraction_of_limit must be in (0, 1], got {}",
                self.min_fraction_of_limit
            ));
        }
        Ok(())
    }
}

fn better(candidate: (f64, &str), incumbent: Option<(f64, &str)>) -> bool {
    match incumbent {
        None => true,
        Some(best) => match candidate.0.total_cmp(&best.0) {
            Ordering::Less => true,
            Ordering::Equal => candidate.1 < best.1,
            Ordering::Greater => false,
        },
    }
}

fn gate(nearest: Option<(f64, &Lane)>, max_dist: f64) -> Option<&Lane> {
    let (dist, lane) = nearest?;
    (dist <= max_dist && lane.speed_limit_mps.is_some()).then_some(lane)
}

/// The lane whose centerline vertices come closest to the vehicle center,
/// provided it is within `cfg.max_lane_dist_m` and carries a speed limit.
///
/// The nearest lane is chosen first and then gated; there is no fallback to
/// the next-nearest lane. Ties go to the lexicographically smallest lane id.
pub fn assign_lane<'a>(
    v: &VehicleState,
    lanes: &'a [Lane],
    cfg: &SpeedLimitConfig,
) -> Option<&'a Lane> {
    let mut best: Option<(f64, &Lane)> = None;
    for lane in lanes {
        let Ok((d, _)) = point_polyline_distance(v.center, &lane.polyline) else {
            continue;
        };
        if better((d, &lane.lane_id), best.map(|(bd, bl)| (bd, bl.lane_id.as_str()))) {
            best = Some((d, lane));
        }
    }
    gate(best, cfg.max_lane_dist_m)
}

/// Conformity of a vehicle with the limit of its assigned lane, or `None`
/// when the lane has no limit or the vehicle is below the slow-traffic floor.
pub fn rc_speed_frame(v: &VehicleState, lane: &Lane, cfg: &SpeedLimitConfig) -> Option<f64> {
    let limit = lane.speed_limit_mps?;
    let speed = v.speed();
    if !(speed >= cfg.min_fraction_of_limit * limit) {
        return None;
    }
    Some((limit / speed).min(1.0))
}

/// Uniform grid over all lane vertices of one scenario, with cell size equal
/// to the lane gate distance. Any vertex within the gate lies in the 3×3
/// block of cells around the query, so a lookup agrees with [`assign_lane`]
/// whenever that returns a lane.
#[derive(Debug)]
pub struct LaneIndex<'a> {
    lanes: &'a [Lane],
    cell: f64,
    grid: HashMap<(i64, i64), Vec<(Vec2, u32)>>,
    max_dist: f64,
}

impl<'a> LaneIndex<'a> {
    pub fn new(lanes: &'a [Lane], cfg: &SpeedLimitConfig) -> Self {
        let cell = cfg.max_lane_dist_m;
        let mut grid: HashMap<(i64, i64), Vec<(Vec2, u32)>> = HashMap::new();
        for (li, lane) in lanes.iter().enumerate() {
            for &p in &lane.polyline {
                grid.entry(Self::key(p, cell)).or_default().push((p, li as u32));
            }
        }
        LaneIndex {
            lanes,
            cell,
            grid,
            max_dist: cfg.max_lane_dist_m,
        }
    }

    fn key(p: Vec2, cell: f64) -> (i64, i64) {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)
    }

    pub fn assign(&self, v: &VehicleState) -> Option<&'a Lane> {
        let (cx, cy) = Self::key(v.center, self.cell);
        let mut best: Option<(f64, &'a Lane)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(bucket) = self.grid.get(&(cx + dx, cy + dy)) else {
                    continue;
                };
                for &(p, li) in bucket {
                    // Compare rooted distances so ties resolve exactly as in
                    // `assign_lane`.
                    let d = (p - v.center).norm_squared().sqrt();
                    let lane = &self.lanes[li as usize];
                    if better(
                        (d, &lane.lane_id),
                        best.map(|(bd, bl)| (bd, bl.lane_id.as_str())),
                    ) {
                        best = Some((d, lane));
                    }
                }
            }
        }
        gate(best, self.max_dist)
    }
}

/// One sample per scored (vehicle, frame), frame-major then by vehicle id.
pub fn score_scenario_speed(s: &Scenario, cfg: &SpeedLimitConfig) -> Vec<RcSample> {
    let index = LaneIndex::new(&s.lanes, cfg);
    let mut out = Vec::new();
    for frame in &s.frames {
        let mut order: Vec<&VehicleState> = frame.vehicles.iter().filter(|v| v.valid).collect();
        order.sort_by(|a, b| a.vehicle_id.cmp(&b.vehicle_id));
        for v in order {
            let Some(lane) = index.assign(v) else {
                continue;
            };
            if let Some(rc) = rc_speed_frame(v, lane, cfg) {
                out.push(RcSample::new(
                    Rule::SpeedLimit,
                    s.scenario_id.as_str(),
                    v.vehicle_id.as_str(),
                    frame.frame_index,
                    rc,
                ));
            }
        }
    }
    out
}
