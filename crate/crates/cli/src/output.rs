//! Rendering of command results as JSON, CSV or text.

use clap::ValueEnum;
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 2;
pub const EXIT_NONCONVERGENT: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

/// Everything a command produces; the format decides which part is printed.
pub struct Outcome {
    pub command: &'static str,
    pub results: Value,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub text: String,
    pub code: i32,
}

impl Outcome {
    pub fn new(command: &'static str) -> Self {
        Outcome {
            command,
            results: Value::Null,
            header: Vec::new(),
            rows: Vec::new(),
            text: String::new(),
            code: EXIT_OK,
        }
    }

    pub fn fail(&mut self, code: i32) {
        if self.code == EXIT_OK {
            self.code = code;
        }
    }

    pub fn render(&self, format: Format) -> Result<String, String> {
        match format {
            Format::Json => {
                let env = json!({
                    "tool": "melnikov",
                    "version": env!("CARGO_PKG_VERSION"),
                    "command": self.command,
                    "results": self.results,
                });
                serde_json::to_string_pretty(&env).map(|s| s + "\n").map_err(|e| e.to_string())
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.header).map_err(|e| e.to_string())?;
                for r in &self.rows {
                    w.write_record(r).map_err(|e| e.to_string())?;
                }
                let bytes = w.into_inner().map_err(|e| e.to_string())?;
                String::from_utf8(bytes).map_err(|e| e.to_string())
            }
            Format::Text => Ok(self.text.clone()),
        }
    }
}

pub fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}
