pub mod safety_distance;
pub mod speed_limit;

pub use safety_distance::{
    rc_dist_frame, score_scenario_dist, DistanceScore, DistanceViolationDetail, Ray, RayCombiner,
    SafetyDistanceConfig,
};
pub use speed_limit::{
    assign_lane, rc_speed_frame, score_scenario_speed, LaneIndex, SpeedLimitConfig,
};
