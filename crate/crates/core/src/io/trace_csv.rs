use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::service::{ServiceKind, NO_SERVICE};
use crate::tracegen::{ServiceSession, TraceRecord, ZoneLabel};

use super::{read_bytes, write_atomic};

pub const TRACE_HEADER: [&str; 9] = [
    "time",
    "ue_id",
    "service_name",
    "latitude",
    "longitude",
    "enodeb_id",
    "datarate_uplink",
    "datarate_downlink",
    "zone",
];

pub const SESSIONS_HEADER: [&str; 6] = ["ue_id", "service_name", "start", "end", "uplink", "downlink"];

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Iterates data rows after checking the header, yielding 1-based line numbers.
fn rows<R: Read>(
    source: &str,
    input: R,
    header: &[&str],
) -> Result<impl Iterator<Item = Result<(u64, csv::StringRecord)>>> {
    let reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut records = reader.into_records();
    let first = match records.next() {
        Some(r) => r.map_err(csv_err)?,
        None => {
            return Err(Error::Malformed {
                path: source.to_owned(),
                line: 1,
                reason: "missing header".into(),
            })
        }
    };
    if first.iter().ne(header.iter().copied()) {
        return Err(Error::Malformed {
            path: source.to_owned(),
            line: 1,
            reason: format!("header mismatch: expected `{}`", header.join(",")),
        });
    }
    let source = source.to_owned();
    let width = header.len();
    Ok(records.map(move |r| {
        let r = r.map_err(csv_err)?;
        let line = r.position().map_or(0, |p| p.line());
        if r.len() != width {
            return Err(Error::Malformed {
                path: source.clone(),
                line,
                reason: format!("expected {width} fields, found {}", r.len()),
            });
        }
        Ok((line, r))
    }))
}

fn field<T: FromStr>(source: &str, line: u64, r: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    r[i].parse().map_err(|_| Error::Malformed {
        path: source.to_owned(),
        line,
        reason: format!("cannot parse {name} `{}`", &r[i]),
    })
}

fn service_field(source: &str, line: u64, text: &str) -> Result<Option<ServiceKind>> {
    if text == NO_SERVICE {
        return Ok(None);
    }
    text.parse().map(Some).map_err(|_| Error::Malformed {
        path: source.to_owned(),
        line,
        reason: format!("unknown service `{text}`"),
    })
}

pub fn trace_from_reader<R: Read>(source: &str, input: R) -> Result<Vec<TraceRecord>> {
    let mut out = Vec::new();
    for row in rows(source, input, &TRACE_HEADER)? {
        let (line, r) = row?;
        let lat: f64 = field(source, line, &r, 3, "latitude")?;
        let lon: f64 = field(source, line, &r, 4, "longitude")?;
        if !(lat.is_finite() && lon.is_finite() && (-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon)) {
            return Err(Error::Malformed {
                path: source.to_owned(),
                line,
                reason: format!("coordinates ({lat}, {lon}) out of range"),
            });
        }
        out.push(TraceRecord {
            time_s: field(source, line, &r, 0, "time")?,
            ue_id: field(source, line, &r, 1, "ue_id")?,
            service: service_field(source, line, &r[2])?,
            lat,
            lon,
            enodeb_id: field(source, line, &r, 5, "enodeb_id")?,
            uplink_kbps: field(source, line, &r, 6, "datarate_uplink")?,
            downlink_kbps: field(source, line, &r, 7, "datarate_downlink")?,
            zone: field::<ZoneLabel>(source, line, &r, 8, "zone")?,
        });
    }
    Ok(out)
}

pub fn trace_to_writer<W: Write>(records: &[TraceRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.time_s.to_string(),
            r.ue_id.to_string(),
            r.service.map_or(NO_SERVICE.to_owned(), |s| s.to_string()),
            format!("{:.6}", r.lat),
            format!("{:.6}", r.lon),
            r.enodeb_id.to_string(),
            r.uplink_kbps.to_string(),
            r.downlink_kbps.to_string(),
            r.zone.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    trace_from_reader(&path.display().to_string(), read_bytes(path)?.as_slice())
}

pub fn write_trace(path: &Path, records: &[TraceRecord]) -> Result<()> {
    let mut buf = Vec::new();
    trace_to_writer(records, &mut buf)?;
    write_atomic(path, &buf)
}

pub fn sessions_from_reader<R: Read>(source: &str, input: R) -> Result<Vec<ServiceSession>> {
    let mut out = Vec::new();
    for row in rows(source, input, &SESSIONS_HEADER)? {
        let (line, r) = row?;
        let Some(service) = service_field(source, line, &r[1])? else {
            return Err(Error::Malformed {
                path: source.to_owned(),
                line,
                reason: "session without a service".into(),
            });
        };
        let s = ServiceSession {
            ue_id: field(source, line, &r, 0, "ue_id")?,
            service,
            start_s: field(source, line, &r, 2, "start")?,
            end_s: field(source, line, &r, 3, "end")?,
            uplink_kbps: field(source, line, &r, 4, "uplink")?,
            downlink_kbps: field(source, line, &r, 5, "downlink")?,
        };
        if s.end_s <= s.start_s {
            return Err(Error::Malformed {
                path: source.to_owned(),
                line,
                reason: "session must end after it starts".into(),
            });
        }
        out.push(s);
    }
    Ok(out)
}

pub fn sessions_to_writer<W: Write>(sessions: &[ServiceSession], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(SESSIONS_HEADER).map_err(csv_err)?;
    for s in sessions {
        w.write_record([
            s.ue_id.to_string(),
            s.service.to_string(),
            s.start_s.to_string(),
            s.end_s.to_string(),
            s.uplink_kbps.to_string(),
            s.downlink_kbps.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_sessions(path: &Path) -> Result<Vec<ServiceSession>> {
    sessions_from_reader(&path.display().to_string(), read_bytes(path)?.as_slice())
}

pub fn write_sessions(path: &Path, sessions: &[ServiceSession]) -> Result<()> {
    let mut buf = Vec::new();
    sessions_to_writer(sessions, &mut buf)?;
    write_atomic(path, &buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<TraceRecord> {
        vec![
            TraceRecord {
                time_s: 0,
                ue_id: 0,
                service: None,
                lat: 60.170001,
                lon: 24.94,
                enodeb_id: 4,
                uplink_kbps: 0,
                downlink_kbps: 0,
                zone: ZoneLabel::Unlabeled,
            },
            TraceRecord {
                time_s: 17,
                ue_id: 3,
                service: Some(ServiceKind::VideoStreaming),
                lat: -0.5,
                lon: -179.999999,
                enodeb_id: 0,
                uplink_kbps: 120,
                downlink_kbps: 4800,
                zone: ZoneLabel::Zone(2),
            },
            TraceRecord {
                zone: ZoneLabel::Noise,
                ..Default::default()
            },
        ]
    }

    #[test]
    fn trace_round_trip_is_exact() {
        let mut buf = Vec::new();
        trace_to_writer(&sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "time,ue_id,service_name,latitude,longitude,enodeb_id,datarate_uplink,datarate_downlink,zone\n"
        ));
        assert!(text.contains("\n0,0,NONE,60.170001,24.940000,4,0,0,\n"));
        assert!(!text.contains('\r'));
        assert_eq!(trace_from_reader("t", buf.as_slice()).unwrap(), sample());
    }

    #[test]
    fn crlf_input_is_accepted() {
        let mut buf = Vec::new();
        trace_to_writer(&sample(), &mut buf).unwrap();
        let crlf = String::from_utf8(buf).unwrap().replace('\n', "\r\n");
        assert_eq!(trace_from_reader("t", crlf.as_bytes()).unwrap(), sample());
    }

    #[test]
    fn missing_zone_column_is_a_header_error() {
        let text = "time,ue_id,service_name,latitude,longitude,enodeb_id,datarate_uplink,datarate_downlink\n";
        let err = trace_from_reader("t.csv", text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 1, ref reason, .. } if reason.contains("header")));
    }

    #[test]
    fn bad_rows_report_their_line() {
        let text = format!(
            "{}\n0,0,NONE,60,24,0,0,0,\n5,1,NONE,sixty,24,0,0,0,\n",
            TRACE_HEADER.join(",")
        );
        let err = trace_from_reader("t.csv", text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 3, .. }), "{err}");
        let text = format!("{}\n0,0,NONE,60,24,0,0\n", TRACE_HEADER.join(","));
        let err = trace_from_reader("t.csv", text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 2, ref reason, .. } if reason.contains("fields")));
        let text = format!("{}\n0,0,Telepathy,60,24,0,0,0,\n", TRACE_HEADER.join(","));
        assert!(trace_from_reader("t.csv", text.as_bytes()).is_err());
    }

    #[test]
    fn sessions_round_trip() {
        let s = vec![ServiceSession {
            ue_id: 7,
            service: ServiceKind::DroneDelivery,
            start_s: 10,
            end_s: 400,
            uplink_kbps: 210,
            downlink_kbps: 480,
        }];
        let mut buf = Vec::new();
        sessions_to_writer(&s, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "ue_id,service_name,start,end,uplink,downlink\n7,DroneDelivery,10,400,210,480\n"
        );
        assert_eq!(sessions_from_reader("s", buf.as_slice()).unwrap(), s);
        let bad = "ue_id,service_name,start,end,uplink,downlink\n7,MIME,10,10,1,1\n";
        assert!(sessions_from_reader("s", bad.as_bytes()).is_err());
    }
}
