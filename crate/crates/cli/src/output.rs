use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::args::{Format, GlobalArgs};
use crate::CliError;

/// Version of every JSON document this binary writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Top-level JSON document: the resolved configuration next to the result.
#[derive(Serialize)]
pub struct Envelope<'a, C: Serialize, R: Serialize> {
    pub schema_version: u32,
    pub command: &'a str,
    pub seed: u64,
    pub format: Format,
    pub config: &'a C,
    pub result: &'a R,
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(dprh::DprhError::from)?;
    s.push('\n');
    Ok(s)
}

pub fn write_bytes(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|source| CliError::Write {
            path: p.display().to_string(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Write {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

/// Write a result as the JSON envelope or as `text`, to `-o` or stdout.
pub fn emit<C: Serialize, R: Serialize>(
    global: &GlobalArgs,
    command: &str,
    config: &C,
    result: &R,
    text: impl FnOnce() -> String,
) -> Result<(), CliError> {
    let body = match global.format {
        Format::Json => to_json(&Envelope {
            schema_version: SCHEMA_VERSION,
            command,
            seed: global.seed(),
            format: global.format,
            config,
            result,
        })?,
        Format::Text => text(),
    };
    write_bytes(global.output.as_deref(), body.as_bytes())
}
