//! Deterministic JSON run reports.

use std::collections::BTreeMap;
use std::io;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::{Error, Result};

pub const TOOL: &str = "algconn";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// The envelope shared by every command's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
    pub result: T,
    /// Independently recomputed quantities, keyed by name.
    pub verification: BTreeMap<String, f64>,
}

impl<T> Report<T> {
    pub fn new(command: &str, config: &RunConfig, result: T) -> Self {
        Report {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            seed: config.seed,
            config: config.clone(),
            result,
            verification: BTreeMap::new(),
        }
    }

    pub fn verify(mut self, key: &str, value: f64) -> Self {
        self.verification.insert(key.into(), value);
        self
    }
}

/// Pretty printing with every float written at 17 significant digits.
struct ExactFloats<'a>(PrettyFormatter<'a>);

impl Formatter for ExactFloats<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

/// Serializes any value with exact floats and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFloats(PrettyFormatter::with_indent(b"  ")));
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Io(format!("serialization failed: {e}")))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

/// Renders a report and checks it against the schema before returning it.
pub fn emit_report<T: Serialize>(report: &Report<T>) -> Result<String> {
    let text = to_json(report)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::Io(e.to_string()))?;
    validate_report(&value)?;
    Ok(text)
}

pub fn parse_report<T: DeserializeOwned>(text: &str) -> Result<Report<T>> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Input(format!("report is not JSON: {e}")))?;
    validate_report(&value)?;
    serde_json::from_value(value).map_err(|e| Error::Input(format!("report does not match its type: {e}")))
}

fn schema_error(msg: String) -> Error {
    Error::Input(format!("report schema: {msg}"))
}

fn field<'a>(obj: &'a Value, path: &str, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| schema_error(format!("missing `{path}{key}`")))
}

fn expect(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(schema_error(what.to_string()))
    }
}

/// Checks the envelope and the command-specific result shape.
pub fn validate_report(v: &Value) -> Result<()> {
    expect(v.is_object(), "top level must be an object")?;
    expect(field(v, "", "tool")?.as_str() == Some(TOOL), "`tool` must be \"algconn\"")?;
    expect(field(v, "", "version")?.is_string(), "`version` must be a string")?;
    expect(field(v, "", "seed")?.is_u64(), "`seed` must be an unsigned integer")?;
    expect(field(v, "", "config")?.is_object(), "`config` must be an object")?;
    let verification = field(v, "", "verification")?;
    expect(
        verification.as_object().is_some_and(|m| m.values().all(|x| x.is_number() || x.is_null())),
        "`verification` must map names to numbers",
    )?;
    let command = field(v, "", "command")?
        .as_str()
        .ok_or_else(|| schema_error("`command` must be a string".into()))?;
    let result = field(v, "", "result")?;
    expect(result.is_object(), "`result` must be an object")?;
    match command {
        "augment" => {
            let status = field(result, "result.", "status")?.as_str();
            match status {
                Some("accepted") => {
                    for key in ["added", "lambda2_estimate", "gamma_used", "sdp_rounds", "support_cap", "weight_cap"] {
                        field(result, "result.", key)?;
                    }
                    expect(result["added"].is_array(), "`result.added` must be an array")?;
                }
                Some("reject") => {
                    let reason = field(result, "result.", "reason")?.as_str();
                    expect(
                        matches!(reason, Some("sdp_infeasible_at_gamma0") | Some("lambda2_below_threshold")),
                        "`result.reason` is not a known rejection reason",
                    )?;
                }
                _ => return Err(schema_error("`result.status` must be accepted or reject".into())),
            }
            expect(field(result, "result.", "audit")?.is_array(), "`result.audit` must be an array")?;
        }
        "sdp-check" => {
            let status = field(result, "result.", "status")?.as_str();
            expect(
                matches!(status, Some("feasible") | Some("infeasible")),
                "`result.status` must be feasible or infeasible",
            )?;
            field(result, "result.", "rounds")?;
        }
        "sparsify" | "spectral-sparsify" => {
            for key in ["coefficients", "trace", "certification"] {
                field(result, "result.", key)?;
            }
        }
        "oracle" => {
            field(result, "result.", "lambda")?;
            field(result, "result.", "weights")?;
        }
        "selftest" => {
            field(result, "result.", "checks")?;
        }
        other => return Err(schema_error(format!("unknown command `{other}`"))),
    }
    Ok(())
}
