use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rulegauge::ingest::subsample;
use rulegauge::rgsf::{parse_scenario, write_scenario, FormatError};
use rulegauge::synth::{generate, Planted, SynthSpec};
use rulegauge::{Frame, Lane, Scenario, Vec2, VehicleState};

/// An arbitrary valid scenario with awkward floats.
fn random_scenario(rng: &mut ChaCha8Rng, n: usize) -> Scenario {
    let wild = |rng: &mut ChaCha8Rng| {
        let mag = 10f64.powi(rng.random_range(-12..6));
        rng.random_range(-1.0..1.0) * mag
    };
    let lanes = (0..rng.random_range(0..5))
        .map(|i| Lane {
            lane_id: format!("lane \"{i}\" é"),
            polyline: (0..rng.random_range(2..8))
                .map(|k| Vec2::new(k as f64 + wild(rng).abs() + 0.1, wild(rng)))
                .collect(),
            speed_limit_mps: rng.random_bool(0.7).then(|| rng.random_range(1e-3..60.0)),
        })
        .collect();
    let rate = rng.random_range(0.5..20.0);
    let frames = (0..rng.random_range(1..6u64))
        .map(|f| Frame {
            frame_index: f * rng.random_range(1..4),
            time_s: 0.0,
            vehicles: (0..rng.random_range(0..6))
                .map(|v| VehicleState {
                    vehicle_id: format!("v{v}"),
                    center: Vec2::new(wild(rng), wild(rng)),
                    heading: rng.random_range(-std::f64::consts::PI..=std::f64::consts::PI),
                    velocity: Vec2::new(wild(rng), wild(rng)),
                    length: rng.random_range(0.1..20.0),
                    width: rng.random_range(0.1..5.0),
                    valid: rng.random_bool(0.9),
                })
                .collect(),
        })
        .collect::<Vec<_>>();
    // strictly increasing indices and times
    let mut frames = frames;
    let mut idx = rng.random_range(0..1000u64);
    for (i, f) in frames.iter_mut().enumerate() {
        idx += 1 + f.frame_index;
        f.frame_index = idx;
        f.time_s = 0.1 * i as f64 + wild(rng).abs().min(0.05);
    }
    Scenario {
        scenario_id: format!("random-{n}"),
        sample_rate_hz: rate,
        lanes,
        frames,
    }
}

#[test]
fn random_scenarios_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for n in 0..100 {
        let s = random_scenario(&mut rng, n);
        let bytes = write_scenario(&s).unwrap();
        let back = parse_scenario(&bytes).unwrap();
        assert_eq!(back, s, "scenario {n}");
        assert_eq!(write_scenario(&back).unwrap(), bytes, "canonical bytes for {n}");
    }
}

#[test]
fn synthetic_scenarios_round_trip() {
    let scenarios = generate(&SynthSpec {
        seed: 5,
        n_scenarios: 100,
        n_vehicles: 3,
        duration_s: 2.0,
        planted_dist: Planted::Uniform { lo: 0.1, hi: 1.0 },
        planted_speed: Planted::Mixture { strict: 0.5, lo: 0.5, hi: 1.0 },
        ..SynthSpec::default()
    })
    .unwrap();
    for s in scenarios {
        assert_eq!(parse_scenario(&write_scenario(&s).unwrap()).unwrap(), s);
    }
}

#[test]
fn nan_is_refused() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut s = random_scenario(&mut rng, 0);
    s.frames[0].time_s = f64::NAN;
    assert!(matches!(write_scenario(&s), Err(FormatError::SchemaViolation { .. })));
}

#[test]
fn subsampling_twice_at_an_exact_ratio_is_a_no_op() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in 0..50 {
        let mut s = random_scenario(&mut rng, n);
        s.sample_rate_hz = 10.0;
        for target in [10.0, 5.0, 2.5, 2.0, 1.0] {
            let once = subsample(&s, target).unwrap();
            assert_eq!(subsample(&once, target).unwrap(), once);
        }
    }
}

#[test]
fn rounded_down_step_is_still_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut s = random_scenario(&mut rng, 0);
    s.sample_rate_hz = 10.0;
    // k = round(3.33) = 3, effective rate 3.33 Hz >= 3 Hz
    let once = subsample(&s, 3.0).unwrap();
    assert_eq!(subsample(&once, 3.0).unwrap(), once);
}

#[test]
fn rounded_up_step_lands_below_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut s = random_scenario(&mut rng, 0);
    s.sample_rate_hz = 10.0;
    // k = round(2.5) = 3, effective rate 3.33 Hz < 4 Hz
    let once = subsample(&s, 4.0).unwrap();
    assert!(once.sample_rate_hz < 4.0);
    assert!(subsample(&once, 4.0).is_err());
}
