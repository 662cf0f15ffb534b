//! Structured diagnostics, emitted one JSON object per line.

use std::io::{self, Write};

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Info,
    Warn,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub level: Level,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub message: String,
}

impl Diagnostic {
    pub fn new(level: Level, kind: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            level,
            kind: kind.into(),
            path: None,
            message: message.into(),
        }
    }

    pub fn with_path(mut self, path: impl Into<String>) -> Self {
        self.path = Some(path.into());
        self
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("diagnostic serializes")
    }

    pub fn emit(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(out, "{}", self.to_json_line())
    }
}
