//! Result files: JSON with every float written to 17 significant digits.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const TOOL: &str = "energy-share";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// SHA-256 of the input file, hex encoded.
    pub input_sha256: String,
    pub result: Value,
}

impl ResultFile {
    pub fn new(command: &str, input_sha256: &str, result: impl Serialize) -> CliResult<Self> {
        let result = serde_json::to_value(result).map_err(|e| CliError::Input(format!("cannot encode result: {e}")))?;
        Ok(Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            input_sha256: input_sha256.into(),
            result,
        })
    }
}

/// Compact formatter that prints floats as `d.dddddddddddddddde±x`; non-finite values become `null`.
struct PreciseFloats;

impl Formatter for PreciseFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> CliResult<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, PreciseFloats);
    value.serialize(&mut ser).map_err(|e| CliError::Input(format!("cannot encode result: {e}")))?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Writes to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, contents: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, contents).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(contents).and_then(|_| out.flush()).map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

pub fn write_result(path: Option<&Path>, file: &ResultFile) -> CliResult<()> {
    let mut text = to_json_string(file)?;
    text.push('\n');
    emit(path, text.as_bytes())
}
