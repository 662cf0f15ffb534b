//! RGSF v1: the JSON scenario interchange format.
//!
//! ```text
//! {"schema_version": 1, "scenario_id": str, "sample_rate_hz": number,
//!  "lanes":  [{"lane_id": str, "speed_limit_mps": number|null, "polyline": [[x, y], ...]}],
//!  "frames": [{"frame_index": int, "time_s": number,
//!              "vehicles": [{"id": str, "x": number, "y": number, "heading_rad": number,
//!                            "vx": number, "vy": number, "length_m": number,
//!                            "width_m": number, "valid": bool}]}]}
//! ```
//!
//! Unknown fields are ignored on read. [`write_scenario`] emits the canonical
//! form: keys sorted, no whitespace, every float with 17 significant digits,
//! so `parse_scenario ∘ write_scenario` is the identity.

use std::fmt::Write as _;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::model::{validate_scenario, Frame, Lane, Scenario, Vec2, VehicleState};

pub const SCHEMA_VERSION: u64 = 1;
pub const FILE_EXTENSION: &str = ".rgsf.json";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("schema violation at {path}: {reason}")]
    SchemaViolation { path: String, reason: String },
    #[error("unsupported schema_version {0}")]
    UnsupportedVersion(String),
}

fn schema(path: impl Into<String>, reason: impl Into<String>) -> FormatError {
    FormatError::SchemaViolation {
        path: path.into(),
        reason: reason.into(),
    }
}

struct Obj<'a> {
    map: &'a Map<String, Value>,
    path: String,
}

impl<'a> Obj<'a> {
    fn new(v: &'a Value, path: String) -> Result<Self, FormatError> {
        match v.as_object() {
            Some(map) => Ok(Obj { map, path }),
            None => Err(schema(path, "expected an object")),
        }
    }

    fn at(&self, key: &str) -> String {
        format!("{}/{}", self.path, key)
    }

    fn get(&self, key: &str) -> Result<&'a Value, FormatError> {
        self.map
            .get(key)
            .ok_or_else(|| schema(self.at(key), "missing required field"))
    }

    fn num(&self, key: &str) -> Result<f64, FormatError> {
        let v = self.get(key)?;
        v.as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| schema(self.at(key), "expected a finite number"))
    }

    fn opt_num(&self, key: &str) -> Result<Option<f64>, FormatError> {
        match self.map.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(_) => self.num(key).map(Some),
        }
    }

    fn uint(&self, key: &str) -> Result<u64, FormatError> {
        self.get(key)?
            .as_u64()
            .ok_or_else(|| schema(self.at(key), "expected a non-negative integer"))
    }

    fn string(&self, key: &str) -> Result<String, FormatError> {
        self.get(key)?
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| schema(self.at(key), "expected a string"))
    }

    fn boolean(&self, key: &str) -> Result<bool, FormatError> {
        self.get(key)?
            .as_bool()
            .ok_or_else(|| schema(self.at(key), "expected a boolean"))
    }

    fn array(&self, key: &str) -> Result<&'a Vec<Value>, FormatError> {
        self.get(key)?
            .as_array()
            .ok_or_else(|| schema(self.at(key), "expected an array"))
    }
}

fn point(v: &Value, path: String) -> Result<Vec2, FormatError> {
    match v.as_array().map(Vec::as_slice) {
        Some([x, y]) => match (x.as_f64(), y.as_f64()) {
            (Some(x), Some(y)) if x.is_finite() && y.is_finite() => Ok(Vec2::new(x, y)),
            _ => Err(schema(path, "expected two finite numbers")),
        },
        _ => Err(schema(path, "expected [x, y]")),
    }
}

fn lane(v: &Value, path: String) -> Result<Lane, FormatError> {
    let o = Obj::new(v, path)?;
    let polyline = o
        .array("polyline")?
        .iter()
        .enumerate()
        .map(|(i, p)| point(p, format!("{}/{i}", o.at("polyline"))))
        .collect::<Result<_, _>>()?;
    Ok(Lane {
        lane_id: o.string("lane_id")?,
        polyline,
        speed_limit_mps: o.opt_num("speed_limit_mps")?,
    })
}

fn vehicle(v: &Value, path: String) -> Result<VehicleState, FormatError> {
    let o = Obj::new(v, path)?;
    Ok(VehicleState {
        vehicle_id: o.string("id")?,
        center: Vec2::new(o.num("x")?, o.num("y")?),
        heading: o.num("heading_rad")?,
        velocity: Vec2::new(o.num("vx")?, o.num("vy")?),
        length: o.num("length_m")?,
        width: o.num("width_m")?,
        valid: o.boolean("valid")?,
    })
}

fn frame(v: &Value, path: String) -> Result<Frame, FormatError> {
    let o = Obj::new(v, path)?;
    let vehicles = o
        .array("vehicles")?
        .iter()
        .enumerate()
        .map(|(i, x)| vehicle(x, format!("{}/{i}", o.at("vehicles"))))
        .collect::<Result<_, _>>()?;
    Ok(Frame {
        frame_index: o.uint("frame_index")?,
        time_s: o.num("time_s")?,
        vehicles,
    })
}

/// Decode a document without checking scenario invariants. Used by the
/// `validate` command, which wants to list every violation.
pub fn parse_scenario_unchecked(bytes: &[u8]) -> Result<Scenario, FormatError> {
    let doc: Value =
        serde_json::from_slice(bytes).map_err(|e| FormatError::MalformedDocument(e.to_string()))?;
    let root = Obj::new(&doc, String::new())?;

    let version = root.get("schema_version")?;
    match version.as_u64() {
        Some(SCHEMA_VERSION) => {}
        Some(_) => return Err(FormatError::UnsupportedVersion(version.to_string())),
        None if version.is_number() => {
            return Err(FormatError::UnsupportedVersion(version.to_string()))
        }
        None => return Err(schema("/schema_version", "expected an integer")),
    }

    let lanes = root
        .array("lanes")?
        .iter()
        .enumerate()
        .map(|(i, l)| lane(l, format!("/lanes/{i}")))
        .collect::<Result<_, _>>()?;
    let frames = root
        .array("frames")?
        .iter()
        .enumerate()
        .map(|(i, f)| frame(f, format!("/frames/{i}")))
        .collect::<Result<_, _>>()?;

    Ok(Scenario {
        scenario_id: root.string("scenario_id")?,
        sample_rate_hz: root.num("sample_rate_hz")?,
        lanes,
        frames,
    })
}

/// Decode a document and require every scenario invariant to hold; the first
/// violation is reported as a [`FormatError::SchemaViolation`].
pub fn parse_scenario(bytes: &[u8]) -> Result<Scenario, FormatError> {
    let s = parse_scenario_unchecked(bytes)?;
    match validate_scenario(&s).into_iter().next() {
        None => Ok(s),
        Some(v) => Err(schema(v.path, v.message)),
    }
}

fn push_f64(out: &mut String, x: f64) {
    write!(out, "{x:.16e}").expect("write to String");
}

fn push_str(out: &mut String, s: &str) {
    out.push_str(&serde_json::to_string(s).expect("string serializes"));
}

/// Canonical RGSF bytes for a valid scenario. Refuses scenarios that break
/// an invariant (including non-finite numbers).
pub fn write_scenario(s: &Scenario) -> Result<Vec<u8>, FormatError> {
    if let Some(v) = validate_scenario(s).into_iter().next() {
        return Err(schema(v.path, v.message));
    }

    let mut out = String::with_capacity(256 + 200 * s.frames.len());
    out.push_str("{\"frames\":[");
    for (fi, f) in s.frames.iter().enumerate() {
        if fi > 0 {
            out.push(',');
        }
        write!(out, "{{\"frame_index\":{},\"time_s\":", f.frame_index).unwrap();
        push_f64(&mut out, f.time_s);
        out.push_str(",\"vehicles\":[");
        for (vi, v) in f.vehicles.iter().enumerate() {
            if vi > 0 {
                out.push(',');
            }
            out.push_str("{\"heading_rad\":");
            push_f64(&mut out, v.heading);
            out.push_str(",\"id\":");
            push_str(&mut out, &v.vehicle_id);
            out.push_str(",\"length_m\":");
            push_f64(&mut out, v.length);
            write!(out, ",\"valid\":{},\"vx\":", v.valid).unwrap();
            push_f64(&mut out, v.velocity.x);
            out.push_str(",\"vy\":");
            push_f64(&mut out, v.velocity.y);
            out.push_str(",\"width_m\":");
            push_f64(&mut out, v.width);
            out.push_str(",\"x\":");
            push_f64(&mut out, v.center.x);
            out.push_str(",\"y\":");
            push_f64(&mut out, v.center.y);
            out.push('}');
        }
        out.push_str("]}");
    }
    out.push_str("],\"lanes\":[");
    for (li, lane) in s.lanes.iter().enumerate() {
        if li > 0 {
            out.push(',');
        }
        out.push_str("{\"lane_id\":");
        push_str(&mut out, &lane.lane_id);
        out.push_str(",\"polyline\":[");
        for (pi, p) in lane.polyline.iter().enumerate() {
            if pi > 0 {
                out.push(',');
            }
            out.push('[');
            push_f64(&mut out, p.x);
            out.push(',');
            push_f64(&mut out, p.y);
            out.push(']');
        }
        out.push_str("],\"speed_limit_mps\":");
        match lane.speed_limit_mps {
            Some(limit) => push_f64(&mut out, limit),
            None => out.push_str("null"),
        }
        out.push('}');
    }
    out.push_str("],\"sample_rate_hz\":");
    push_f64(&mut out, s.sample_rate_hz);
    out.push_str(",\"scenario_id\":");
    push_str(&mut out, &s.scenario_id);
    write!(out, ",\"schema_version\":{SCHEMA_VERSION}}}").unwrap();
    out.push('\n');
    Ok(out.into_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "scenario_id": "min",
        "sample_rate_hz": 10,
        "extra": {"ignored": true},
        "lanes": [{"lane_id": "L1", "speed_limit_mps": 11.176, "polyline": [[0, 0], [10, 0]]}],
        "frames": [{"frame_index": 0, "time_s": 0.0, "vehicles": [
            {"id": "a", "x": 1, "y": 0.5, "heading_rad": 0, "vx": 10, "vy": 0,
             "length_m": 4.5, "width_m": 1.9, "valid": true}]}]
    }"#;

    #[test]
    fn minimal_document() {
        let s = parse_scenario(MINIMAL.as_bytes()).unwrap();
        assert_eq!((s.lanes.len(), s.frames.len(), s.frames[0].vehicles.len()), (1, 1, 1));
        assert_eq!(s.lanes[0].speed_limit_mps, Some(11.176));
        assert_eq!(s.frames[0].vehicles[0].velocity, Vec2::new(10.0, 0.0));
    }

    #[test]
    fn missing_rate_names_the_field() {
        let mut v: Value = serde_json::from_str(MINIMAL).unwrap();
        v.as_object_mut().unwrap().remove("sample_rate_hz");
        let err = parse_scenario(v.to_string().as_bytes()).unwrap_err();
        assert!(
            matches!(&err, FormatError::SchemaViolation { path, .. } if path == "/sample_rate_hz"),
            "{err:?}"
        );
    }

    #[test]
    fn nested_paths_are_reported() {
        let mut v: Value = serde_json::from_str(MINIMAL).unwrap();
        v["frames"][0]["vehicles"][0]["vx"] = Value::String("fast".into());
        let err = parse_scenario(v.to_string().as_bytes()).unwrap_err();
        assert_eq!(
            err,
            schema("/frames/0/vehicles/0/vx", "expected a finite number")
        );
    }

    #[test]
    fn version_gate() {
        let mut v: Value = serde_json::from_str(MINIMAL).unwrap();
        v["schema_version"] = 99.into();
        assert_eq!(
            parse_scenario(v.to_string().as_bytes()),
            Err(FormatError::UnsupportedVersion("99".into()))
        );
    }

    #[test]
    fn syntax_errors_are_malformed() {
        assert!(matches!(
            parse_scenario(b"{\"schema_version\": 1,"),
            Err(FormatError::MalformedDocument(_))
        ));
        assert!(matches!(
            parse_scenario(b"[1, 2]"),
            Err(FormatError::SchemaViolation { .. })
        ));
    }

    #[test]
    fn invariant_breaks_are_schema_violations() {
        let mut v: Value = serde_json::from_str(MINIMAL).unwrap();
        let car = v["frames"][0]["vehicles"][0].clone();
        v["frames"][0]["vehicles"].as_array_mut().unwrap().push(car);
        let bytes = v.to_string();
        assert!(parse_scenario_unchecked(bytes.as_bytes()).is_ok());
        assert_eq!(
            parse_scenario(bytes.as_bytes()),
            Err(schema("/frames/0/vehicles/1/id", "Frame 0: duplicate vehicle_id 'a'"))
        );
    }

    #[test]
    fn canonical_form_is_a_fixed_point() {
        let s = parse_scenario(MINIMAL.as_bytes()).unwrap();
        let once = write_scenario(&s).unwrap();
        let back = parse_scenario(&once).unwrap();
        assert_eq!(back, s);
        assert_eq!(write_scenario(&back).unwrap(), once);
        let text = String::from_utf8(once).unwrap();
        assert!(text.starts_with("{\"frames\":"));
        assert!(text.contains("\"speed_limit_mps\":1.1176000000000000e1"));
    }

    #[test]
    fn nan_is_refused() {
        let mut s = parse_scenario(MINIMAL.as_bytes()).unwrap();
        s.frames[0].vehicles[0].center.x = f64::NAN;
        assert!(write_scenario(&s).is_err());
    }
}
