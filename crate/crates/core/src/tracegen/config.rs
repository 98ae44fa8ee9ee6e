use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::GpsPoint;
use crate::service::ServiceKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IotDeviceCounts {
    pub weather: usize,
    pub air_pollution: usize,
    pub parking: usize,
}

impl Default for IotDeviceCounts {
    fn default() -> Self {
        Self {
            weather: 10,
            air_pollution: 10,
            parking: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSpeeds {
    pub walking_mps: f64,
    pub biking_mps: f64,
    pub driving_mps: f64,
}

impl Default for ProfileSpeeds {
    fn default() -> Self {
        Self {
            walking_mps: 1.4,
            biking_mps: 4.0,
            driving_mps: 11.0,
        }
    }
}

/// Per-service session shape: exponential duration mean and nominal datarates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceProfile {
    pub mean_duration_s: f64,
    pub uplink_kbps: f64,
    pub downlink_kbps: f64,
}

impl ServiceProfile {
    const fn new(mean_duration_s: f64, uplink_kbps: f64, downlink_kbps: f64) -> Self {
        Self {
            mean_duration_s,
            uplink_kbps,
            downlink_kbps,
        }
    }
}

pub fn default_service_probabilities() -> BTreeMap<ServiceKind, f64> {
    use ServiceKind::*;
    let iot = 0.10 / 3.0;
    BTreeMap::from([
        (Mime, 0.20),
        (VideoStreaming, 0.30),
        (SocialNetwork, 0.30),
        (DroneDelivery, 0.05),
        (DroneTransportation, 0.05),
        (IotWeather, iot),
        (IotAirPollution, iot),
        (IotParking, iot),
    ])
}

/// Drone sessions use `mean_duration_s` for the on-site part; flight time is added on top.
pub fn default_service_profiles() -> BTreeMap<ServiceKind, ServiceProfile> {
    use ServiceKind::*;
    BTreeMap::from([
        (Mime, ServiceProfile::new(60.0, 50.0, 50.0)),
        (VideoStreaming, ServiceProfile::new(300.0, 100.0, 5000.0)),
        (SocialNetwork, ServiceProfile::new(180.0, 200.0, 1500.0)),
        (DroneDelivery, ServiceProfile::new(120.0, 200.0, 500.0)),
        (DroneTransportation, ServiceProfile::new(120.0, 200.0, 500.0)),
        (IotWeather, ServiceProfile::new(30.0, 20.0, 20.0)),
        (IotAirPollution, ServiceProfile::new(30.0, 20.0, 20.0)),
        (IotParking, ServiceProfile::new(30.0, 20.0, 20.0)),
    ])
}

/// World and workload parameters. Defaults are the 500-UE, 12-hour scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub num_ues: usize,
    pub update_meters: f64,
    pub enbs_per_ec: usize,
    pub enbs_per_ta: usize,
    pub num_ecs: usize,
    pub num_drone_homes: usize,
    pub drones_per_home: usize,
    /// Half-side of the square simulation area.
    pub range_m: f64,
    pub iot_device_counts: IotDeviceCounts,
    pub service_probabilities: BTreeMap<ServiceKind, f64>,
    pub sim_duration_s: u64,
    /// Drives topology and mobility.
    pub seed: u64,
    /// Drives session arrivals and shapes; defaults to `seed`.
    pub service_seed: Option<u64>,
    pub origin: GpsPoint,
    pub speeds: ProfileSpeeds,
    /// Per-tick probability that an idle UE starts a session.
    pub session_arrival_prob: f64,
    pub service_profiles: BTreeMap<ServiceKind, ServiceProfile>,
    pub drone_speed_mps: f64,
    /// Per-session datarates are the nominal rate times a factor in `[1 - j, 1 + j]`.
    pub datarate_jitter: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            num_ues: 500,
            update_meters: 100.0,
            enbs_per_ec: 3,
            enbs_per_ta: 6,
            num_ecs: 10,
            num_drone_homes: 5,
            drones_per_home: 2,
            range_m: 5000.0,
            iot_device_counts: IotDeviceCounts::default(),
            service_probabilities: default_service_probabilities(),
            sim_duration_s: 12 * 3600,
            seed: 1,
            service_seed: None,
            origin: GpsPoint::new(60.17, 24.94),
            speeds: ProfileSpeeds::default(),
            session_arrival_prob: 1.0 / 600.0,
            service_profiles: default_service_profiles(),
            drone_speed_mps: 15.0,
            datarate_jitter: 0.5,
        }
    }
}

impl SimConfig {
    pub fn service_seed(&self) -> u64 {
        self.service_seed.unwrap_or(self.seed)
    }

    pub fn total_enbs(&self) -> usize {
        self.num_ecs * self.enbs_per_ec
    }

    pub fn profile(&self, kind: ServiceKind) -> ServiceProfile {
        self.service_profiles[&kind]
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("num_ues", self.num_ues),
            ("enbs_per_ec", self.enbs_per_ec),
            ("enbs_per_ta", self.enbs_per_ta),
            ("num_ecs", self.num_ecs),
            ("num_drone_homes", self.num_drone_homes),
            ("drones_per_home", self.drones_per_home),
            ("iot_device_counts.weather", self.iot_device_counts.weather),
            ("iot_device_counts.air_pollution", self.iot_device_counts.air_pollution),
            ("iot_device_counts.parking", self.iot_device_counts.parking),
        ];
        for (key, v) in counts {
            if v == 0 {
                return Err(Error::validation(key, "must be at least 1"));
            }
        }
        positive("update_meters", self.update_meters)?;
        positive("range_m", self.range_m)?;
        if self.sim_duration_s == 0 {
            return Err(Error::validation("sim_duration_s", "must be greater than 0"));
        }
        if !self.origin.is_valid() {
            return Err(Error::validation("origin", "latitude/longitude out of range"));
        }
        positive("speeds.walking_mps", self.speeds.walking_mps)?;
        positive("speeds.biking_mps", self.speeds.biking_mps)?;
        positive("speeds.driving_mps", self.speeds.driving_mps)?;
        positive("drone_speed_mps", self.drone_speed_mps)?;
        if !(0.0..=1.0).contains(&self.session_arrival_prob) {
            return Err(Error::validation("session_arrival_prob", "must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.datarate_jitter) {
            return Err(Error::validation("datarate_jitter", "must lie in [0, 1)"));
        }

        let mut sum = 0.0;
        for (kind, &p) in &self.service_probabilities {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::validation(
                    format!("service_probabilities.{kind}"),
                    format!("{p} is not a fraction in [0, 1]"),
                ));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::validation(
                "service_probabilities",
                format!("probabilities sum to {sum}, expected 1"),
            ));
        }
        for kind in ServiceKind::ALL {
            let Some(p) = self.service_profiles.get(&kind) else {
                return Err(Error::validation(format!("service_profiles.{kind}"), "missing profile"));
            };
            positive(&format!("service_profiles.{kind}.mean_duration_s"), p.mean_duration_s)?;
            positive(&format!("service_profiles.{kind}.uplink_kbps"), p.uplink_kbps)?;
            positive(&format!("service_profiles.{kind}.downlink_kbps"), p.downlink_kbps)?;
        }
        Ok(())
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(key, format!("{v} must be positive and finite")))
    }
}
