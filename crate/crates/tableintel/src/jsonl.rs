//! JSON-lines files with a schema header line.
//!
//! The first line of every file written here is
//! `{"schema_version":1,"kind":"..."}`. Readers accept files without a
//! header, reject a header with another version or kind, and skip lines
//! that do not parse, reporting each by line number.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

pub const DETECTIONS: &str = "detections";
pub const HANDS: &str = "hands";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub schema_version: u32,
    pub kind: String,
}

/// A skipped input line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

pub fn header_line(kind: &str) -> String {
    serde_json::to_string(&Header {
        schema_version: SCHEMA_VERSION,
        kind: kind.to_string(),
    })
    .expect("header serializes")
}

pub fn write_to<T: Serialize, W: Write>(out: W, kind: &str, items: &[T]) -> Result<(), CliError> {
    let mut w = BufWriter::new(out);
    let io = |e: std::io::Error| CliError::internal(e);
    writeln!(w, "{}", header_line(kind)).map_err(io)?;
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(CliError::internal)?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_file<T: Serialize>(path: &Path, kind: &str, items: &[T]) -> Result<(), CliError> {
    let f = File::create(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    write_to(f, kind, items)
}

pub fn read_from<T: DeserializeOwned, R: Read>(input: R, kind: &str) -> Result<(Vec<T>, Vec<Diagnostic>), CliError> {
    let reader = BufReader::new(input);
    let mut items = Vec::new();
    let mut diagnostics = Vec::new();
    let mut first = true;
    for (i, line) in reader.lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| CliError::input(format!("line {n}: {e}")))?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if std::mem::take(&mut first) {
            if let Ok(h) = serde_json::from_str::<Header>(text) {
                if h.schema_version != SCHEMA_VERSION {
                    return Err(CliError::input(format!(
                        "line {n}: schema version {} is not supported (expected {SCHEMA_VERSION})",
                        h.schema_version
                    )));
                }
                if h.kind != kind {
                    return Err(CliError::input(format!(
                        "line {n}: file holds {}, expected {kind}",
                        h.kind
                    )));
                }
                continue;
            }
        }
        match serde_json::from_str::<T>(text) {
            Ok(item) => items.push(item),
            Err(e) => diagnostics.push(Diagnostic {
                line: n,
                message: e.to_string(),
            }),
        }
    }
    Ok((items, diagnostics))
}

pub fn read_file<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<(Vec<T>, Vec<Diagnostic>), CliError> {
    let f = File::open(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    read_from(f, kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Row {
        a: u32,
    }

    #[test]
    fn round_trip() {
        let mut buf = Vec::new();
        write_to(&mut buf, HANDS, &[Row { a: 1 }, Row { a: 2 }]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("{\"schema_version\":1,\"kind\":\"hands\"}\n"));
        let (rows, diags) = read_from::<Row, _>(&buf[..], HANDS).unwrap();
        assert_eq!(rows, [Row { a: 1 }, Row { a: 2 }]);
        assert!(diags.is_empty());
    }

    #[test]
    fn malformed_line_is_skipped_with_its_number() {
        let text = "{\"a\":1}\n{\"a\":\n\n{\"a\":3}\n";
        let (rows, diags) = read_from::<Row, _>(text.as_bytes(), HANDS).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].line, 2);
        assert!(diags[0].to_string().starts_with("line 2: "));
    }

    #[test]
    fn version_mismatch_is_fatal() {
        let text = "{\"schema_version\":2,\"kind\":\"hands\"}\n{\"a\":1}\n";
        assert!(matches!(
            read_from::<Row, _>(text.as_bytes(), HANDS),
            Err(CliError::Input(_))
        ));
        let text = "{\"schema_version\":1,\"kind\":\"detections\"}\n";
        assert!(read_from::<Row, _>(text.as_bytes(), HANDS).is_err());
    }

    #[test]
    fn detection_stream_survives_json() {
        use tableintel_core::assimilator::StreamItem;
        use tableintel_core::simulator::{simulate, SimConfig};
        use tableintel_core::synth::{render_session, NoiseProfile, Timing};
        use tableintel_core::{HandRecord, RuleConfig};

        let cfg = SimConfig {
            hands: 5,
            log_hands: true,
            ..SimConfig::default()
        };
        let hands: Vec<HandRecord> = simulate(&cfg).unwrap().per_hand_log;
        let stream = render_session(&hands, &RuleConfig::default(), &Timing::default(), &NoiseProfile::NONE).unwrap();
        let mut buf = Vec::new();
        write_to(&mut buf, DETECTIONS, &stream).unwrap();
        let (back, diags) = read_from::<StreamItem, _>(&buf[..], DETECTIONS).unwrap();
        assert!(diags.is_empty(), "{diags:?}");
        assert_eq!(back, stream);
        let mut buf = Vec::new();
        write_to(&mut buf, HANDS, &hands).unwrap();
        assert_eq!(read_from::<HandRecord, _>(&buf[..], HANDS).unwrap().0, hands);
    }
}
