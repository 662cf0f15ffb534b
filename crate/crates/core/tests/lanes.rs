use proptest::prelude::*;

use rulegauge::rules::{assign_lane, rc_speed_frame, LaneIndex, SpeedLimitConfig};
use rulegauge::{Lane, Vec2, VehicleState};

fn lanes() -> impl Strategy<Value = Vec<Lane>> {
    prop::collection::vec(
        (
            prop::collection::vec((-60.0..60.0f64, -60.0..60.0f64), 2..12),
            prop::option::weighted(0.8, 5.0..40.0f64),
        ),
        0..12,
    )
    .prop_map(|raw| {
        raw.into_iter()
            .enumerate()
            .map(|(i, (pts, limit))| Lane {
                // ids deliberately not in index order
                lane_id: format!("L{:02}", (i * 7) % 13),
                polyline: pts.into_iter().map(|(x, y)| Vec2::new(x, y)).collect(),
                speed_limit_mps: limit,
            })
            .collect()
    })
}

fn vehicle(x: f64, y: f64, speed: f64) -> VehicleState {
    VehicleState {
        vehicle_id: "ego".into(),
        center: Vec2::new(x, y),
        heading: 0.0,
        velocity: Vec2::new(speed, 0.0),
        length: 4.5,
        width: 1.9,
        valid: true,
    }
}

fn id(l: Option<&Lane>) -> Option<&str> {
    l.map(|l| l.lane_id.as_str())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn grid_index_matches_brute_force(
        lanes in lanes(),
        probes in prop::collection::vec((-80.0..80.0f64, -80.0..80.0f64), 1..30),
        gate in 0.5..25.0f64,
    ) {
        let cfg = SpeedLimitConfig { max_lane_dist_m: gate, ..SpeedLimitConfig::default() };
        let index = LaneIndex::new(&lanes, &cfg);
        for (x, y) in probes {
            let v = vehicle(x, y, 10.0);
            prop_assert_eq!(id(index.assign(&v)), id(assign_lane(&v, &lanes, &cfg)));
        }
    }

    #[test]
    fn assignment_ignores_lane_order(
        lanes in lanes(),
        probes in prop::collection::vec((-80.0..80.0f64, -80.0..80.0f64), 1..20),
    ) {
        let cfg = SpeedLimitConfig::default();
        let mut reversed = lanes.clone();
        reversed.reverse();
        for (x, y) in probes {
            let v = vehicle(x, y, 10.0);
            prop_assert_eq!(id(assign_lane(&v, &lanes, &cfg)), id(assign_lane(&v, &reversed, &cfg)));
        }
    }

    #[test]
    fn scaling_speed_and_limit_together_keeps_rc(
        limit in 3.0..40.0f64,
        ratio in 0.5..3.0f64,
        k in 0.1..10.0f64,
    ) {
        let cfg = SpeedLimitConfig::default();
        prop_assume!((ratio - cfg.min_fraction_of_limit).abs() > 1e-9);
        let lane = |limit| Lane {
            lane_id: "a".into(),
            polyline: vec![Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0)],
            speed_limit_mps: Some(limit),
        };
        let base = rc_speed_frame(&vehicle(0.0, 0.0, limit * ratio), &lane(limit), &cfg);
        let scaled = rc_speed_frame(&vehicle(0.0, 0.0, k * limit * ratio), &lane(k * limit), &cfg);
        match (base, scaled) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-12),
            (a, b) => prop_assert_eq!(a, b),
        }
    }
}

#[test]
fn tie_goes_to_smallest_id() {
    let mk = |id: &str, y: f64| Lane {
        lane_id: id.into(),
        polyline: vec![Vec2::new(-5.0, y), Vec2::new(5.0, y)],
        speed_limit_mps: Some(10.0),
    };
    let lanes = vec![mk("b", 2.0), mk("a", -2.0)];
    let cfg = SpeedLimitConfig::default();
    let v = vehicle(5.0, 0.0, 10.0);
    assert_eq!(id(assign_lane(&v, &lanes, &cfg)), Some("a"));
    assert_eq!(id(LaneIndex::new(&lanes, &cfg).assign(&v)), Some("a"));
}

#[test]
fn nearest_lane_without_limit_blocks_fallback() {
    let lanes = vec![
        Lane {
            lane_id: "near".into(),
            polyline: vec![Vec2::new(0.0, 1.0), Vec2::new(10.0, 1.0)],
            speed_limit_mps: None,
        },
        Lane {
            lane_id: "far".into(),
            polyline: vec![Vec2::new(0.0, 4.0), Vec2::new(10.0, 4.0)],
            speed_limit_mps: Some(10.0),
        },
    ];
    let v = vehicle(0.0, 0.0, 10.0);
    assert!(assign_lane(&v, &lanes, &SpeedLimitConfig::default()).is_none());
}
