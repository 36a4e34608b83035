//! Config parsing, report serialization and CSV emission.
//!
//! Reports are JSON objects with every float rounded to 12 significant
//! digits and an embedded [`RunManifest`]. Keys are emitted in sorted order,
//! so a report is a pure function of its payload.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bounds::SweepPoint;
use crate::model::{validate, ChannelConfig, ValidationError};
use crate::sim::SimResult;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Sweep CSV columns, in contract order.
pub const SWEEP_CSV_HEADER: &str = "P,half_log2P,lower,upper,gap";

/// Per-layer simulation CSV columns, in contract order.
pub const SIM_CSV_HEADER: &str = "layer,receiver,errors,trials";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed config at line {line}, column {column} (byte {offset}): {message}")]
    Parse {
        message: String,
        line: usize,
        column: usize,
        offset: usize,
    },
    #[error("invalid config at {ptr}: {0}", ptr = .0.pointer())]
    Validation(#[from] ValidationError),
}

impl ConfigError {
    /// JSON pointer of the offending field, for validation errors.
    pub fn pointer(&self) -> Option<String> {
        match self {
            ConfigError::Validation(v) => Some(v.pointer()),
            _ => None,
        }
    }
}

/// Byte offset of a 1-based `(line, column)` position in `text`.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (start + column.saturating_sub(1)).min(text.len())
}

/// Parses and validates a config document.
pub fn parse_config_str(text: &str) -> Result<ChannelConfig, ConfigError> {
    let config: ChannelConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        message: e.to_string(),
        line: e.line(),
        column: e.column(),
        offset: byte_offset(text, e.line(), e.column()),
    })?;
    validate(&config)?;
    Ok(config)
}

/// Accepts either inline JSON (first non-blank character `{`) or a path.
pub fn parse_config(source: &str) -> Result<ChannelConfig, ConfigError> {
    if source.trim_start().starts_with('{') {
        return parse_config_str(source);
    }
    let text = std::fs::read_to_string(Path::new(source)).map_err(|e| ConfigError::Io {
        path: source.to_string(),
        message: e.to_string(),
    })?;
    parse_config_str(&text)
}

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits. Non-finite values
/// pass through.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

/// Applies [`round_sig`] to every float in a JSON tree. Integers are left
/// alone.
pub fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => n
            .as_f64()
            .and_then(|x| serde_json::Number::from_f64(round_sig(x)))
            .map_or(Value::Number(n), Value::Number),
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => {
            Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect())
        }
        other => other,
    }
}

/// SHA-256 of the compact, key-sorted JSON form of `value`.
pub fn digest<T: Serialize>(value: &T) -> String {
    let canonical = serde_json::to_value(value)
        .map(|v| v.to_string())
        .unwrap_or_default();
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Provenance block embedded in every report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Digest of the config, or of the command parameters when there is no
    /// config.
    pub config_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tool_version: String,
    /// Seconds since the Unix epoch. Only set on request, since it breaks
    /// byte-identical output.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl RunManifest {
    pub fn new<T: Serialize>(command: &str, input: &T, seed: Option<u64>) -> Self {
        RunManifest {
            command: command.to_string(),
            config_digest: digest(input),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: None,
        }
    }

    pub fn stamped(mut self) -> Self {
        self.timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
        self
    }
}

/// Serializes `payload` as a JSON object with `manifest` attached. A
/// non-object payload is wrapped under `result`.
pub fn report_json<T: Serialize>(payload: &T, manifest: &RunManifest) -> String {
    let mut obj = match serde_json::to_value(payload).unwrap_or(Value::Null) {
        Value::Object(o) => o,
        other => {
            let mut o = Map::new();
            o.insert("result".to_string(), other);
            o
        }
    };
    obj.insert(
        "manifest".to_string(),
        serde_json::to_value(manifest).unwrap_or(Value::Null),
    );
    let mut out =
        serde_json::to_string_pretty(&round_value(Value::Object(obj))).unwrap_or_default();
    out.push('\n');
    out
}

fn num(x: f64) -> String {
    format!("{}", round_sig(x))
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            num(p.p),
            num(p.half_log2_p),
            num(p.lower),
            num(p.upper),
            num(p.gap)
        );
    }
    out
}

/// One row per decoded layer per receiver.
pub fn sim_layer_csv(result: &SimResult) -> String {
    let mut out = String::from(SIM_CSV_HEADER);
    out.push('\n');
    for rx in &result.receivers {
        for l in &rx.layers {
            let _ = writeln!(out, "{},{},{},{}", l.layer, rx.receiver, l.errors, l.trials);
        }
    }
    out
}
