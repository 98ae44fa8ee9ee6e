//! Event-driven model of the edge-cloud infrastructure: fixed VM sets per
//! edge cloud, placement policies, Follow-Me-Cloud migrations and the
//! eight-kind event ledger.

mod placement;
mod sim;
mod stream;

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::service::ServiceKind;

pub use placement::{leftover_score, place};
pub use sim::{run, App, AppRole, MecState, Migration, Prewarm, PrewarmHook, RunOutput, Vm};
pub use stream::{build_stream, MoveObservation, Trigger, TriggerKind};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resources {
    pub ram_gb: f64,
    pub cores: f64,
    pub storage_gb: f64,
}

impl Resources {
    pub const ZERO: Resources = Resources::new(0.0, 0.0, 0.0);

    pub const fn new(ram_gb: f64, cores: f64, storage_gb: f64) -> Self {
        Self {
            ram_gb,
            cores,
            storage_gb,
        }
    }

    pub fn as_array(self) -> [f64; 3] {
        [self.ram_gb, self.cores, self.storage_gb]
    }

    /// Componentwise `self <= other`.
    pub fn fits_in(self, other: Resources) -> bool {
        self.as_array().iter().zip(other.as_array()).all(|(a, b)| *a <= b)
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(self.ram_gb * k, self.cores * k, self.storage_gb * k)
    }

    fn is_valid(self) -> bool {
        self.as_array().iter().all(|v| v.is_finite() && *v >= 0.0)
    }
}

impl Add for Resources {
    type Output = Resources;
    fn add(self, o: Resources) -> Resources {
        Resources::new(
            self.ram_gb + o.ram_gb,
            self.cores + o.cores,
            self.storage_gb + o.storage_gb,
        )
    }
}

impl Sub for Resources {
    type Output = Resources;
    fn sub(self, o: Resources) -> Resources {
        Resources::new(
            self.ram_gb - o.ram_gb,
            self.cores - o.cores,
            self.storage_gb - o.storage_gb,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum PlacementPolicy {
    #[default]
    FirstFit,
    BestFit,
    Random,
}

impl FromStr for PlacementPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "firstfit" => Ok(Self::FirstFit),
            "bestfit" => Ok(Self::BestFit),
            "random" => Ok(Self::Random),
            _ => Err(Error::validation("policy", format!("unknown placement policy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MecConfig {
    /// Transfer rate used for migrations, in GB/s.
    pub bandwidth_gbps: f64,
    pub policy: PlacementPolicy,
    pub vms_per_ec: usize,
    pub host_resources: Resources,
    pub vm_resources: Resources,
    pub app_resources: Resources,
}

impl Default for MecConfig {
    fn default() -> Self {
        Self {
            bandwidth_gbps: 1.0,
            policy: PlacementPolicy::FirstFit,
            vms_per_ec: 2,
            host_resources: Resources::new(16.0, 16.0, 1000.0),
            vm_resources: Resources::new(8.0, 8.0, 500.0),
            app_resources: Resources::new(1.0, 2.0, 2.0),
        }
    }
}

impl MecConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_gbps.is_finite() && self.bandwidth_gbps > 0.0) {
            return Err(Error::validation("bandwidth_gbps", "must be positive"));
        }
        if self.vms_per_ec == 0 {
            return Err(Error::validation("vms_per_ec", "must be at least 1"));
        }
        for (key, r) in [
            ("host_resources", self.host_resources),
            ("vm_resources", self.vm_resources),
            ("app_resources", self.app_resources),
        ] {
            if !r.is_valid() {
                return Err(Error::validation(key, "values must be finite and non-negative"));
            }
        }
        if !self
            .vm_resources
            .scale(self.vms_per_ec as f64)
            .fits_in(self.host_resources)
        {
            return Err(Error::validation(
                "vm_resources",
                format!("{} VMs exceed the host resources", self.vms_per_ec),
            ));
        }
        if !self.app_resources.fits_in(self.vm_resources) {
            return Err(Error::validation("app_resources", "exceeds the VM resources"));
        }
        Ok(())
    }

    /// Seconds needed to move one application image.
    pub fn migration_duration_s(&self) -> f64 {
        self.app_resources.storage_gb / self.bandwidth_gbps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventKind {
    OffloadingRequest,
    OffloadingSuccess,
    OffloadingFailure,
    Migration,
    MigrationSuccess,
    MigrationFailure,
    MigrationAborted,
    Release,
}

impl EventKind {
    pub const ALL: [EventKind; 8] = [
        EventKind::OffloadingRequest,
        EventKind::OffloadingSuccess,
        EventKind::OffloadingFailure,
        EventKind::Migration,
        EventKind::MigrationSuccess,
        EventKind::MigrationFailure,
        EventKind::MigrationAborted,
        EventKind::Release,
    ];
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MecEvent {
    pub t: f64,
    pub kind: EventKind,
    pub ue: usize,
    pub service: ServiceKind,
    pub ec: usize,
    pub target_ec: Option<usize>,
    pub cause: Option<String>,
}

/// Per-kind totals for one run. `ongoing` counts migrations still in
/// flight when the horizon is reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EventCounts {
    pub request: u64,
    pub success: u64,
    pub failure: u64,
    pub migration: u64,
    pub migration_success: u64,
    pub migration_failure: u64,
    pub migration_aborted: u64,
    pub migration_ongoing: u64,
    pub release: u64,
}

impl EventCounts {
    pub fn tally(events: &[MecEvent]) -> Self {
        let mut c = Self::default();
        for e in events {
            *c.slot(e.kind) += 1;
        }
        c
    }

    fn slot(&mut self, kind: EventKind) -> &mut u64 {
        match kind {
            EventKind::OffloadingRequest => &mut self.request,
            EventKind::OffloadingSuccess => &mut self.success,
            EventKind::OffloadingFailure => &mut self.failure,
            EventKind::Migration => &mut self.migration,
            EventKind::MigrationSuccess => &mut self.migration_success,
            EventKind::MigrationFailure => &mut self.migration_failure,
            EventKind::MigrationAborted => &mut self.migration_aborted,
            EventKind::Release => &mut self.release,
        }
    }

    pub fn success_rate(&self) -> f64 {
        if self.request == 0 {
            0.0
        } else {
            self.success as f64 / self.request as f64
        }
    }

    /// Both ledger identities plus `release <= success`.
    pub fn ledger_holds(&self) -> bool {
        self.request == self.success + self.failure
            && self.migration
                == self.migration_success + self.migration_failure + self.migration_aborted + self.migration_ongoing
            && self.release <= self.success
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub counts: EventCounts,
    pub offloading_success_rate: f64,
    pub migration_success_rate: f64,
    pub prewarm_placements: u64,
    pub shared_attachments: u64,
}

impl RunSummary {
    pub fn new(counts: EventCounts, prewarm_placements: u64, shared_attachments: u64) -> Self {
        Self {
            counts,
            offloading_success_rate: counts.success_rate(),
            migration_success_rate: if counts.migration == 0 {
                0.0
            } else {
                counts.migration_success as f64 / counts.migration as f64
            },
            prewarm_placements,
            shared_attachments,
        }
    }
}
