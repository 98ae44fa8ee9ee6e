use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geo::{haversine_km, GpsPoint, LocalFrame, LocalPoint};
use crate::tracegen::SimConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Enb {
    pub enb_id: usize,
    pub position: GpsPoint,
    pub ec_id: usize,
    pub ta_id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCloudSite {
    pub ec_id: usize,
    /// Centroid of the member eNBs.
    pub position: GpsPoint,
    pub enb_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingArea {
    pub ta_id: usize,
    pub enb_ids: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IotDeviceKind {
    Weather,
    AirPollution,
    Parking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IotDevice {
    pub kind: IotDeviceKind,
    pub position: GpsPoint,
    /// Daily-cycle phase of the synthetic readings, in radians.
    pub phase: f64,
}

impl IotDevice {
    /// Synthetic periodic reading at `t_s`: temperature (°C), AQI, or free parking fraction.
    pub fn reading(&self, t_s: f64) -> f64 {
        let cycle = (2.0 * std::f64::consts::PI * t_s / 86_400.0 + self.phase).sin();
        match self.kind {
            IotDeviceKind::Weather => 12.0 + 6.0 * cycle,
            IotDeviceKind::AirPollution => 40.0 + 15.0 * cycle,
            IotDeviceKind::Parking => 0.5 + 0.4 * cycle,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub origin: GpsPoint,
    pub range_m: f64,
    pub enbs: Vec<Enb>,
    pub ecs: Vec<EdgeCloudSite>,
    pub tracking_areas: Vec<TrackingArea>,
    pub drone_homes: Vec<GpsPoint>,
    pub iot_devices: Vec<IotDevice>,
}

impl Topology {
    pub fn frame(&self) -> LocalFrame {
        LocalFrame::new(self.origin)
    }

    /// eNB closest to `p` by great-circle distance; ties go to the lowest id.
    pub fn nearest_enodeb(&self, p: GpsPoint) -> usize {
        let mut best = (f64::INFINITY, 0);
        for enb in &self.enbs {
            let d = haversine_km(p, enb.position);
            if d < best.0 {
                best = (d, enb.enb_id);
            }
        }
        best.1
    }

    pub fn ec_of(&self, enb_id: usize) -> usize {
        self.enbs[enb_id].ec_id
    }
}

/// Lays eNBs on a row-major grid of cell centers over the simulation square and
/// groups consecutive ids into edge clouds and tracking areas.
pub fn build_topology<R: Rng>(cfg: &SimConfig, rng: &mut R) -> Topology {
    let frame = LocalFrame::new(cfg.origin);
    let n = cfg.total_enbs();
    let cols = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(cols);
    let (w, h) = (2.0 * cfg.range_m / cols as f64, 2.0 * cfg.range_m / rows as f64);

    let enbs: Vec<Enb> = (0..n)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            let local = LocalPoint::new(-cfg.range_m + (c as f64 + 0.5) * w, -cfg.range_m + (r as f64 + 0.5) * h);
            Enb {
                enb_id: i,
                position: frame.to_gps(local),
                ec_id: i / cfg.enbs_per_ec,
                ta_id: i / cfg.enbs_per_ta,
            }
        })
        .collect();

    let ecs = (0..cfg.num_ecs)
        .map(|ec_id| {
            let members: Vec<&Enb> = enbs.iter().filter(|e| e.ec_id == ec_id).collect();
            let k = members.len() as f64;
            let lat = members.iter().map(|e| e.position.lat).sum::<f64>() / k;
            let lon = members.iter().map(|e| e.position.lon).sum::<f64>() / k;
            EdgeCloudSite {
                ec_id,
                position: GpsPoint::new(lat, lon),
                enb_ids: members.iter().map(|e| e.enb_id).collect(),
            }
        })
        .collect();

    let tracking_areas = (0..n.div_ceil(cfg.enbs_per_ta))
        .map(|ta_id| TrackingArea {
            ta_id,
            enb_ids: enbs.iter().filter(|e| e.ta_id == ta_id).map(|e| e.enb_id).collect(),
        })
        .collect();

    let uniform = |rng: &mut R| {
        frame.to_gps(LocalPoint::new(
            rng.random_range(-cfg.range_m..=cfg.range_m),
            rng.random_range(-cfg.range_m..=cfg.range_m),
        ))
    };
    let drone_homes = (0..cfg.num_drone_homes).map(|_| uniform(rng)).collect();
    let counts = cfg.iot_device_counts;
    let mut iot_devices = Vec::new();
    for (kind, count) in [
        (IotDeviceKind::Weather, counts.weather),
        (IotDeviceKind::AirPollution, counts.air_pollution),
        (IotDeviceKind::Parking, counts.parking),
    ] {
        for _ in 0..count {
            let position = uniform(rng);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            iot_devices.push(IotDevice { kind, position, phase });
        }
    }

    Topology {
        origin: cfg.origin,
        range_m: cfg.range_m,
        enbs,
        ecs,
        tracking_areas,
        drone_homes,
        iot_devices,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn topo(cfg: &SimConfig, seed: u64) -> Topology {
        build_topology(cfg, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn default_counts() {
        let cfg = SimConfig::default();
        let t = topo(&cfg, 7);
        assert_eq!(t.enbs.len(), 30);
        assert_eq!(t.ecs.len(), 10);
        assert!(t.ecs.iter().all(|ec| ec.enb_ids.len() == 3));
        assert_eq!(t.tracking_areas.len(), 5);
        assert!(t.tracking_areas.iter().all(|ta| ta.enb_ids.len() == 6));
        assert_eq!(t.drone_homes.len(), 5);
        assert_eq!(t.iot_devices.len(), 30);
    }

    #[test]
    fn every_enb_in_one_ec_and_ta() {
        let t = topo(&SimConfig::default(), 1);
        for enb in &t.enbs {
            let in_ec = t.ecs.iter().filter(|ec| ec.enb_ids.contains(&enb.enb_id)).count();
            let in_ta = t
                .tracking_areas
                .iter()
                .filter(|ta| ta.enb_ids.contains(&enb.enb_id))
                .count();
            assert_eq!((in_ec, in_ta), (1, 1));
        }
    }

    #[test]
    fn single_enb_sits_at_center() {
        let cfg = SimConfig {
            num_ecs: 1,
            enbs_per_ec: 1,
            ..SimConfig::default()
        };
        let t = topo(&cfg, 3);
        assert_eq!(t.enbs.len(), 1);
        assert!(haversine_km(t.enbs[0].position, cfg.origin) < 1e-9);
    }

    #[test]
    fn same_seed_same_topology() {
        let cfg = SimConfig::default();
        assert_eq!(topo(&cfg, 11), topo(&cfg, 11));
        assert_ne!(topo(&cfg, 11).drone_homes, topo(&cfg, 12).drone_homes);
    }

    #[test]
    fn nearest_at_enb_location() {
        let t = topo(&SimConfig::default(), 5);
        for enb in &t.enbs {
            assert_eq!(t.nearest_enodeb(enb.position), enb.enb_id);
        }
    }

    #[test]
    fn equidistant_tie_goes_to_lower_id() {
        let mut t = topo(&SimConfig::default(), 5);
        let p = GpsPoint::new(60.0, 25.0);
        for enb in t.enbs.iter_mut() {
            enb.position = GpsPoint::new(10.0, 10.0);
        }
        // eNB 3 and 7 mirror each other across the meridian through `p`.
        t.enbs[3].position = GpsPoint::new(60.0, 24.5);
        t.enbs[7].position = GpsPoint::new(60.0, 25.5);
        assert_eq!(haversine_km(p, t.enbs[3].position), haversine_km(p, t.enbs[7].position));
        assert_eq!(t.nearest_enodeb(p), 3);
    }

    #[test]
    fn nearest_matches_linear_scan_oracle() {
        use rand::Rng;
        let cfg = SimConfig::default();
        let t = topo(&cfg, 9);
        let frame = t.frame();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..2000 {
            let p = frame.to_gps(LocalPoint::new(
                rng.random_range(-6000.0..6000.0),
                rng.random_range(-6000.0..6000.0),
            ));
            let mut dists: Vec<(f64, usize)> = t.enbs.iter().map(|e| (haversine_km(p, e.position), e.enb_id)).collect();
            dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            assert_eq!(t.nearest_enodeb(p), dists[0].1);
        }
    }

    #[test]
    fn iot_readings_are_daily_periodic() {
        let t = topo(&SimConfig::default(), 2);
        for dev in &t.iot_devices {
            assert!((dev.reading(100.0) - dev.reading(100.0 + 86_400.0)).abs() < 1e-9);
        }
    }
}
