//! Synthetic world and workload: topology, UE mobility, service sessions and
//! the per-UE observation trace.

mod config;
mod mobility;
mod sessions;
mod topology;

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use config::{
    default_service_probabilities, default_service_profiles, IotDeviceCounts, ProfileSpeeds, ServiceProfile, SimConfig,
};
pub use mobility::{step_ue, Area, MobilityProfile, StepOutcome, Ue};
pub use sessions::{DronePool, ServiceMix, ServiceSession, SessionSampler};
pub use topology::{build_topology, EdgeCloudSite, Enb, IotDevice, IotDeviceKind, Topology, TrackingArea};

use crate::error::Result;
use crate::geo::GpsPoint;
use crate::service::ServiceKind;

/// Simulation tick, in seconds.
pub const TICK_S: u64 = 1;

/// Zone column of a trace row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub enum ZoneLabel {
    /// Not yet clustered (empty cell).
    #[default]
    Unlabeled,
    Noise,
    Zone(usize),
}

impl fmt::Display for ZoneLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZoneLabel::Unlabeled => Ok(()),
            ZoneLabel::Noise => f.write_str("NOISE"),
            ZoneLabel::Zone(k) => write!(f, "Z{k}"),
        }
    }
}

impl std::str::FromStr for ZoneLabel {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "" => Ok(ZoneLabel::Unlabeled),
            "NOISE" => Ok(ZoneLabel::Noise),
            _ => s
                .strip_prefix('Z')
                .and_then(|k| k.parse().ok())
                .map(ZoneLabel::Zone)
                .ok_or_else(|| crate::error::Error::Parse(format!("invalid zone label `{s}`"))),
        }
    }
}

/// One observation row of the trace.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceRecord {
    pub time_s: u64,
    pub ue_id: usize,
    /// `None` when the UE is idle.
    pub service: Option<ServiceKind>,
    pub lat: f64,
    pub lon: f64,
    pub enodeb_id: usize,
    pub uplink_kbps: u32,
    pub downlink_kbps: u32,
    pub zone: ZoneLabel,
}

impl TraceRecord {
    pub fn position(&self) -> GpsPoint {
        GpsPoint::new(self.lat, self.lon)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedTrace {
    pub records: Vec<TraceRecord>,
    pub sessions: Vec<ServiceSession>,
    pub topology: Topology,
}

fn emit(
    records: &mut Vec<TraceRecord>,
    topo: &Topology,
    t: u64,
    ue_id: usize,
    at: GpsPoint,
    session: Option<&ServiceSession>,
) {
    records.push(TraceRecord {
        time_s: t,
        ue_id,
        service: session.map(|s| s.service),
        lat: at.lat,
        lon: at.lon,
        enodeb_id: topo.nearest_enodeb(at),
        uplink_kbps: session.map_or(0, |s| s.uplink_kbps),
        downlink_kbps: session.map_or(0, |s| s.downlink_kbps),
        zone: ZoneLabel::Unlabeled,
    });
}

/// Runs the full sweep over `sim_duration_s` in one-second ticks.
///
/// Topology and mobility draw from a generator seeded with `cfg.seed`;
/// sessions draw from an independent stream seeded with the service seed, so
/// changing only the service seed leaves every UE itinerary untouched.
///
/// Each UE gets one record at t = 0, one each time it has covered
/// `update_meters` since its previous record, and one at each session start
/// and end. Rows inside a session carry its service and datarates.
pub fn generate_trace(cfg: &SimConfig) -> Result<GeneratedTrace> {
    cfg.validate()?;
    let mut mobility_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut service_rng = ChaCha8Rng::seed_from_u64(cfg.service_seed());
    service_rng.set_stream(1);

    let topology = build_topology(cfg, &mut mobility_rng);
    let frame = topology.frame();
    let area = Area { half_side: cfg.range_m };
    let mut ues: Vec<Ue> = (0..cfg.num_ues)
        .map(|id| Ue::spawn(id, &area, &cfg.speeds, &mut mobility_rng))
        .collect();
    let mut sampler = SessionSampler::new(cfg, &topology.drone_homes);
    let mut active: Vec<Option<ServiceSession>> = vec![None; cfg.num_ues];

    let mut records = Vec::new();
    let mut sessions = Vec::new();
    for ue in &ues {
        let at = frame.to_gps(ue.position).quantized();
        emit(&mut records, &topology, 0, ue.ue_id, at, None);
    }

    for t in (TICK_S..=cfg.sim_duration_s).step_by(TICK_S as usize) {
        for (ue, slot) in ues.iter_mut().zip(active.iter_mut()) {
            let out = step_ue(ue, TICK_S as f64, cfg.update_meters, &area, &mut mobility_rng);
            let at = frame.to_gps(ue.position).quantized();

            if slot.as_ref().is_some_and(|s| s.end_s <= t) {
                emit(&mut records, &topology, t, ue.ue_id, at, slot.as_ref());
                *slot = None;
                ue.distance_since_record = 0.0;
                continue;
            }
            if slot.is_none() {
                if let Some(s) = sampler.sample(&mut service_rng, cfg, t, ue.ue_id, at) {
                    emit(&mut records, &topology, t, ue.ue_id, at, Some(&s));
                    sessions.push(s.clone());
                    *slot = Some(s);
                    ue.distance_since_record = 0.0;
                    continue;
                }
            }
            if out.record_due {
                emit(&mut records, &topology, t, ue.ue_id, at, slot.as_ref());
            }
        }
    }

    Ok(GeneratedTrace {
        records,
        sessions,
        topology,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::haversine_km;

    fn small() -> SimConfig {
        SimConfig {
            num_ues: 20,
            sim_duration_s: 1800,
            seed: 17,
            ..SimConfig::default()
        }
    }

    #[test]
    fn zone_labels_parse() {
        for z in [ZoneLabel::Unlabeled, ZoneLabel::Noise, ZoneLabel::Zone(12)] {
            assert_eq!(z.to_string().parse::<ZoneLabel>().unwrap(), z);
        }
        assert!("Zx".parse::<ZoneLabel>().is_err());
    }

    #[test]
    fn zero_duration_rejected() {
        let cfg = SimConfig {
            sim_duration_s: 0,
            ..small()
        };
        assert!(generate_trace(&cfg).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_trace(&small()).unwrap();
        let b = generate_trace(&small()).unwrap();
        assert_eq!(a, b);
        let c = generate_trace(&SimConfig { seed: 18, ..small() }).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn service_seed_keeps_mobility() {
        let a = generate_trace(&small()).unwrap();
        let b = generate_trace(&SimConfig {
            service_seed: Some(999),
            ..small()
        })
        .unwrap();
        assert_ne!(a.sessions, b.sessions);
        // Positions of the periodic distance records coincide at shared (time, ue).
        let pos_a: std::collections::BTreeMap<(u64, usize), (f64, f64)> = a
            .records
            .iter()
            .map(|r| ((r.time_s, r.ue_id), (r.lat, r.lon)))
            .collect();
        let mut shared = 0;
        for r in &b.records {
            if let Some(p) = pos_a.get(&(r.time_s, r.ue_id)) {
                assert_eq!(*p, (r.lat, r.lon));
                shared += 1;
            }
        }
        assert!(shared > 100);
    }

    #[test]
    fn records_carry_nearest_enb_and_session_fields() {
        let g = generate_trace(&small()).unwrap();
        for r in &g.records {
            let p = r.position();
            let best = g
                .topology
                .enbs
                .iter()
                .map(|e| haversine_km(p, e.position))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(haversine_km(p, g.topology.enbs[r.enodeb_id].position), best);
            match r.service {
                None => assert_eq!((r.uplink_kbps, r.downlink_kbps), (0, 0)),
                Some(_) => assert!(r.uplink_kbps > 0 && r.downlink_kbps > 0),
            }
            assert_eq!(r.zone, ZoneLabel::Unlabeled);
        }
        for s in &g.sessions {
            assert!(s.end_s > s.start_s);
            let start = g
                .records
                .iter()
                .find(|r| r.ue_id == s.ue_id && r.time_s == s.start_s)
                .expect("start record");
            assert_eq!(start.service, Some(s.service));
            if s.end_s <= small().sim_duration_s {
                assert!(g
                    .records
                    .iter()
                    .any(|r| r.ue_id == s.ue_id && r.time_s == s.end_s && r.service == Some(s.service)));
            }
        }
    }

    #[test]
    fn one_active_session_per_ue() {
        let g = generate_trace(&small()).unwrap();
        for ue in 0..small().num_ues {
            let mut mine: Vec<_> = g.sessions.iter().filter(|s| s.ue_id == ue).collect();
            mine.sort_by_key(|s| s.start_s);
            for w in mine.windows(2) {
                assert!(w[1].start_s > w[0].end_s);
            }
        }
    }
}
