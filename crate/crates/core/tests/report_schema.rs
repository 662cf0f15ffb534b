use std::fs;
use std::path::PathBuf;

use serde_json::Value;

use rulegauge::pipeline::{run, RunConfig};
use rulegauge::rgsf::write_scenario;
use rulegauge::synth::{generate, Planted, SynthSpec};

fn schema(name: &str) -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs").join(name);
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn reports_validate_against_published_schema() {
    let input = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let spec = SynthSpec {
        n_scenarios: 4,
        planted_dist: Planted::Uniform { lo: 0.0, hi: 1.0 },
        planted_speed: Planted::Mixture { strict: 0.5, lo: 0.5, hi: 1.0 },
        ..SynthSpec::default()
    };
    for s in generate(&spec).unwrap() {
        fs::write(input.path().join(format!("{}.rgsf.json", s.scenario_id)), write_scenario(&s).unwrap())
            .unwrap();
    }
    run(&RunConfig::new(vec![input.path().into()], out.path())).unwrap();

    let validator = jsonschema::validator_for(&schema("report.schema.json")).unwrap();
    for rule in ["dist", "speed"] {
        let doc: Value =
            serde_json::from_slice(&fs::read(out.path().join(format!("report_{rule}.json"))).unwrap()).unwrap();
        let errors: Vec<String> = validator.iter_errors(&doc).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{rule}: {errors:?}");
    }

    let mut broken: Value =
        serde_json::from_slice(&fs::read(out.path().join("report_dist.json")).unwrap()).unwrap();
    broken["dataset_mean"] = 1.5.into();
    assert!(!validator.is_valid(&broken));
}

#[test]
fn written_scenarios_validate_against_format_schema() {
    let validator = jsonschema::validator_for(&schema("rgsf.schema.json")).unwrap();
    let spec = SynthSpec {
        n_scenarios: 2,
        planted_dist: Planted::Constant(0.5),
        ..SynthSpec::default()
    };
    for s in generate(&spec).unwrap() {
        let doc: Value = serde_json::from_slice(&write_scenario(&s).unwrap()).unwrap();
        let errors: Vec<String> = validator.iter_errors(&doc).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{errors:?}");
    }
    let mut doc: Value =
        serde_json::from_slice(&write_scenario(&generate(&spec).unwrap()[0]).unwrap()).unwrap();
    doc["schema_version"] = 2.into();
    assert!(!validator.is_valid(&doc));
}
