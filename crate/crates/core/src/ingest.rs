//! Reading scenario files from disk and reducing them to the analysis rate.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;
use walkdir::WalkDir;

use crate::diagnostics::{Diagnostic, Level};
use crate::model::Scenario;
use crate::rgsf::{parse_scenario, FormatError, FILE_EXTENSION};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{}: {source}", path.display())]
    Format {
        path: PathBuf,
        #[source]
        source: FormatError,
    },
    #[error("target rate {target_hz} Hz exceeds native rate {native_hz} Hz")]
    InvalidRate { target_hz: f64, native_hz: f64 },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl IngestError {
    /// Errors confined to one document; non-strict runs skip these.
    pub fn is_document_error(&self) -> bool {
        matches!(self, IngestError::Format { .. } | IngestError::InvalidRate { .. })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            IngestError::Format {
                source: FormatError::MalformedDocument(_),
                ..
            } => "malformed_document",
            IngestError::Format {
                source: FormatError::SchemaViolation { .. },
                ..
            } => "schema_violation",
            IngestError::Format {
                source: FormatError::UnsupportedVersion(_),
                ..
            } => "unsupported_version",
            IngestError::InvalidRate { .. } => "invalid_rate",
            IngestError::Io { .. } => "io_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestConfig {
    pub input_paths: Vec<PathBuf>,
    pub target_rate_hz: f64,
    pub strict: bool,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            input_paths: Vec::new(),
            target_rate_hz: 1.0,
            strict: false,
        }
    }
}

/// Keep every k-th frame, `k = round(native / target)` (half away from
/// zero), counting from the first frame's index.
pub fn subsample(s: &Scenario, target_rate_hz: f64) -> Result<Scenario, IngestError> {
    let native = s.sample_rate_hz;
    if !(target_rate_hz > 0.0 && target_rate_hz.is_finite() && target_rate_hz <= native) {
        return Err(IngestError::InvalidRate {
            target_hz: target_rate_hz,
            native_hz: native,
        });
    }
    let k = (native / target_rate_hz).round().max(1.0) as u64;
    let Some(first) = s.frames.first().map(|f| f.frame_index) else {
        return Ok(s.clone());
    };
    Ok(Scenario {
        scenario_id: s.scenario_id.clone(),
        sample_rate_hz: native / k as f64,
        lanes: s.lanes.clone(),
        frames: s
            .frames
            .iter()
            .filter(|f| (f.frame_index - first) % k == 0)
            .cloned()
            .collect(),
    })
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// All scenario files under `paths`, sorted lexicographically and
/// de-duplicated. Directories are searched recursively for `*.rgsf.json`;
/// explicitly named files are taken regardless of extension.
pub fn discover_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>, IngestError> {
    let mut out = Vec::new();
    for root in paths {
        let meta = fs::metadata(root).map_err(io_err(root))?;
        if meta.is_dir() {
            for entry in WalkDir::new(root) {
                let entry = entry.map_err(|e| IngestError::Io {
                    path: e.path().unwrap_or(root).to_path_buf(),
                    source: e.into(),
                })?;
                let is_scenario = entry
                    .file_name()
                    .to_str()
                    .is_some_and(|n| n.ends_with(FILE_EXTENSION));
                if entry.file_type().is_file() && is_scenario {
                    out.push(entry.into_path());
                }
            }
        } else {
            out.push(root.clone());
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

pub fn read_scenario_file(path: &Path) -> Result<Scenario, IngestError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    parse_scenario(&bytes).map_err(|source| IngestError::Format {
        path: path.to_path_buf(),
        source,
    })
}

/// Read, validate and subsample one file.
pub fn load_scenario(path: &Path, target_rate_hz: f64) -> Result<Scenario, IngestError> {
    subsample(&read_scenario_file(path)?, target_rate_hz)
}

pub fn diagnostic_for(err: &IngestError, path: &Path) -> Diagnostic {
    Diagnostic::new(Level::Warn, err.kind(), err.to_string()).with_path(path.display().to_string())
}

/// Scenarios in path order. In non-strict mode document errors are recorded
/// in [`diagnostics`](Self::diagnostics) and skipped; in strict mode the first
/// one is yielded as an error and the stream ends. I/O errors always end the
/// stream.
#[derive(Debug)]
pub struct ScenarioStream {
    files: std::vec::IntoIter<PathBuf>,
    target_rate_hz: f64,
    strict: bool,
    done: bool,
    diagnostics: Vec<Diagnostic>,
}

impl ScenarioStream {
    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.diagnostics
    }
}

impl Iterator for ScenarioStream {
    type Item = Result<Scenario, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        for path in self.files.by_ref() {
            match load_scenario(&path, self.target_rate_hz) {
                Ok(s) => return Some(Ok(s)),
                Err(e) if e.is_document_error() && !self.strict => {
                    self.diagnostics.push(diagnostic_for(&e, &path));
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
            }
        }
        self.done = true;
        None
    }
}

pub fn stream_scenarios(cfg: &IngestConfig) -> Result<ScenarioStream, IngestError> {
    Ok(ScenarioStream {
        files: discover_files(&cfg.input_paths)?.into_iter(),
        target_rate_hz: cfg.target_rate_hz,
        strict: cfg.strict,
        done: false,
        diagnostics: Vec::new(),
    })
}
