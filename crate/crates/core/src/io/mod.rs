//! File codecs: configuration, trace and session CSVs, JSON documents,
//! the event log and plot-ready report tables. Every writer goes through
//! [`write_atomic`].

mod config;
mod report;
mod trace_csv;

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mec::MecEvent;

pub use config::{parse_config, parse_config_str, ConfigFile};
pub use report::{bench_tables, comparison_tables, emit_report, round_json, round_sig6, Report, Table};
pub use trace_csv::{
    read_sessions, read_trace, sessions_from_reader, sessions_to_writer, trace_from_reader, trace_to_writer,
    write_sessions, write_trace, SESSIONS_HEADER, TRACE_HEADER,
};

/// Writes to a temporary file in the target directory, then renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, &to_json_bytes(value)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Malformed {
        path: path.display().to_string(),
        line: e.line() as u64,
        reason: e.to_string(),
    })
}

/// One compact JSON object per line.
pub fn events_to_jsonl(events: &[MecEvent]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn events_from_jsonl(text: &str) -> Result<Vec<MecEvent>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Malformed {
                path: "<events>".into(),
                line: i as u64 + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mec::EventKind;
    use crate::ServiceKind;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nested/out.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn event_log_round_trips() {
        let events = vec![
            MecEvent {
                t: 2.0,
                kind: EventKind::Migration,
                ue: 3,
                service: ServiceKind::Mime,
                ec: 1,
                target_ec: Some(4),
                cause: Some("ec_change".into()),
            },
            MecEvent {
                t: 4.5,
                kind: EventKind::Release,
                ue: 3,
                service: ServiceKind::Mime,
                ec: 4,
                target_ec: None,
                cause: None,
            },
        ];
        let bytes = events_to_jsonl(&events).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.starts_with(r#"{"t":2.0,"kind":"Migration","ue":3,"service":"MIME","ec":1,"target_ec":4,"#));
        assert_eq!(events_from_jsonl(&text).unwrap(), events);
    }
}
