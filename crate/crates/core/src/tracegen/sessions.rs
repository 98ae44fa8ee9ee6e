use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::geo::{haversine_km, GpsPoint};
use crate::service::ServiceKind;
use crate::tracegen::SimConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceSession {
    pub ue_id: usize,
    pub service: ServiceKind,
    pub start_s: u64,
    pub end_s: u64,
    pub uplink_kbps: u32,
    pub downlink_kbps: u32,
}

/// Categorical distribution over services in canonical order.
#[derive(Debug, Clone)]
pub struct ServiceMix {
    cumulative: Vec<(f64, ServiceKind)>,
}

impl ServiceMix {
    pub fn new(probabilities: &BTreeMap<ServiceKind, f64>) -> Self {
        let mut acc = 0.0;
        let cumulative = ServiceKind::ALL
            .into_iter()
            .filter_map(|k| {
                let p = probabilities.get(&k).copied().unwrap_or(0.0);
                (p > 0.0).then(|| {
                    acc += p;
                    (acc, k)
                })
            })
            .collect();
        Self { cumulative }
    }

    /// Maps `u ∈ [0, 1)` to the service whose cumulative bucket contains it.
    pub fn pick(&self, u: f64) -> ServiceKind {
        self.cumulative
            .iter()
            .find(|(upper, _)| u < *upper)
            .or(self.cumulative.last())
            .map(|(_, k)| *k)
            .expect("service mix has at least one service")
    }
}

/// Drones per home; each one is busy until the end of the session it serves.
#[derive(Debug, Clone)]
pub struct DronePool {
    homes: Vec<GpsPoint>,
    busy_until: Vec<Vec<u64>>,
    speed_mps: f64,
}

impl DronePool {
    pub fn new(homes: &[GpsPoint], drones_per_home: usize, speed_mps: f64) -> Self {
        Self {
            homes: homes.to_vec(),
            busy_until: vec![vec![0; drones_per_home]; homes.len()],
            speed_mps,
        }
    }

    /// Nearest home with an idle drone at `t_s`; returns (home, drone, flight seconds).
    fn find(&self, target: GpsPoint, t_s: u64) -> Option<(usize, usize, f64)> {
        let mut order: Vec<(f64, usize)> = self
            .homes
            .iter()
            .enumerate()
            .map(|(i, h)| (haversine_km(*h, target), i))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        order.into_iter().find_map(|(km, home)| {
            let drone = self.busy_until[home].iter().position(|&until| until <= t_s)?;
            Some((home, drone, km * 1000.0 / self.speed_mps))
        })
    }

    pub fn idle_drones(&self, t_s: u64) -> usize {
        self.busy_until.iter().flatten().filter(|&&u| u <= t_s).count()
    }
}

/// Session-shaping state that persists across ticks.
#[derive(Debug, Clone)]
pub struct SessionSampler {
    mix: ServiceMix,
    drones: DronePool,
}

impl SessionSampler {
    pub fn new(cfg: &SimConfig, drone_homes: &[GpsPoint]) -> Self {
        Self {
            mix: ServiceMix::new(&cfg.service_probabilities),
            drones: DronePool::new(drone_homes, cfg.drones_per_home, cfg.drone_speed_mps),
        }
    }

    pub fn drones(&self) -> &DronePool {
        &self.drones
    }

    /// One arrival trial for an idle UE at tick `t_s`.
    pub fn sample<R: Rng>(
        &mut self,
        rng: &mut R,
        cfg: &SimConfig,
        t_s: u64,
        ue_id: usize,
        position: GpsPoint,
    ) -> Option<ServiceSession> {
        if !rng.random_bool(cfg.session_arrival_prob) {
            return None;
        }
        let service = self.mix.pick(rng.random::<f64>());
        let profile = cfg.profile(service);
        let mean = profile.mean_duration_s;
        let raw = Exp::new(1.0 / mean).expect("positive mean").sample(rng);
        let mut duration = raw.clamp(10.0, 2.0 * mean + 600.0);

        let drone = if service.is_drone() {
            // No idle drone anywhere: degraded session with zero flight time.
            self.drones.find(position, t_s)
        } else {
            None
        };
        if let Some((_, _, flight_s)) = drone {
            duration += flight_s;
        }
        let end_s = t_s + (duration.round() as u64).max(1);
        if let Some((home, idx, _)) = drone {
            self.drones.busy_until[home][idx] = end_s;
        }

        let j = cfg.datarate_jitter;
        let rate = |nominal: f64, rng: &mut R| {
            let factor = if j > 0.0 {
                rng.random_range(1.0 - j..=1.0 + j)
            } else {
                1.0
            };
            ((nominal * factor).round() as u32).max(1)
        };
        let uplink_kbps = rate(profile.uplink_kbps, rng);
        let downlink_kbps = rate(profile.downlink_kbps, rng);

        Some(ServiceSession {
            ue_id,
            service,
            start_s: t_s,
            end_s,
            uplink_kbps,
            downlink_kbps,
        })
    }
}
