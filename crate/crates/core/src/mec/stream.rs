use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::geo::GpsPoint;
use crate::service::ServiceKind;
use crate::tracegen::{ServiceSession, TraceRecord};

/// What the simulator learns about a UE from one trace row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoveObservation {
    pub ue: usize,
    pub time_s: u64,
    pub position: GpsPoint,
    pub enb: usize,
    pub uplink_kbps: u32,
    pub downlink_kbps: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TriggerKind {
    Move(MoveObservation),
    SessionStart {
        service: ServiceKind,
    },
    SessionEnd,
    /// Scheduled by the simulator; `generation` identifies the migration so
    /// stale finishes of aborted transfers are ignored.
    MigrationFinish {
        generation: u64,
    },
}

impl TriggerKind {
    /// Same-instant order: movement, session start, session end, migration finish.
    pub fn rank(&self) -> u8 {
        match self {
            TriggerKind::Move(_) => 0,
            TriggerKind::SessionStart { .. } => 1,
            TriggerKind::SessionEnd => 2,
            TriggerKind::MigrationFinish { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trigger {
    pub t: f64,
    pub ue: usize,
    pub kind: TriggerKind,
}

impl Trigger {
    pub fn key_cmp(&self, other: &Trigger) -> Ordering {
        self.t
            .total_cmp(&other.t)
            .then(self.kind.rank().cmp(&other.kind.rank()))
            .then(self.ue.cmp(&other.ue))
    }
}

/// Merges trace rows and sessions into one time-ordered trigger stream,
/// dropping anything after `horizon_s`.
pub fn build_stream(records: &[TraceRecord], sessions: &[ServiceSession], horizon_s: u64) -> Vec<Trigger> {
    let mut out = Vec::with_capacity(records.len() + 2 * sessions.len());
    for r in records.iter().filter(|r| r.time_s <= horizon_s) {
        out.push(Trigger {
            t: r.time_s as f64,
            ue: r.ue_id,
            kind: TriggerKind::Move(MoveObservation {
                ue: r.ue_id,
                time_s: r.time_s,
                position: r.position(),
                enb: r.enodeb_id,
                uplink_kbps: r.uplink_kbps,
                downlink_kbps: r.downlink_kbps,
            }),
        });
    }
    for s in sessions {
        if s.start_s <= horizon_s {
            out.push(Trigger {
                t: s.start_s as f64,
                ue: s.ue_id,
                kind: TriggerKind::SessionStart { service: s.service },
            });
        }
        if s.end_s <= horizon_s {
            out.push(Trigger {
                t: s.end_s as f64,
                ue: s.ue_id,
                kind: TriggerKind::SessionEnd,
            });
        }
    }
    out.sort_by(Trigger::key_cmp);
    out
}
