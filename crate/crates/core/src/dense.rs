//! Highly-dense user areas: DBSCAN over great-circle distance, zone summaries,
//! and zone labeling of trace rows.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{haversine_km, GpsPoint};
use crate::tracegen::{TraceRecord, ZoneLabel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DbscanParams {
    pub eps_km: f64,
    pub min_pts: usize,
}

impl Default for DbscanParams {
    fn default() -> Self {
        Self {
            eps_km: 0.5,
            min_pts: 10,
        }
    }
}

impl DbscanParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_km.is_finite() && self.eps_km > 0.0) {
            return Err(Error::validation("eps_km", "must be positive"));
        }
        if self.min_pts == 0 {
            return Err(Error::validation("min_pts", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PointLabel {
    Cluster(usize),
    Noise,
}

impl PointLabel {
    pub fn cluster(self) -> Option<usize> {
        match self {
            PointLabel::Cluster(c) => Some(c),
            PointLabel::Noise => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseZone {
    pub zone_id: usize,
    pub centroid: GpsPoint,
    pub member_count: usize,
    pub radius_km: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub labels: Vec<PointLabel>,
    pub core_flags: Vec<bool>,
    pub zones: Vec<DenseZone>,
}

impl ClusteringResult {
    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|l| **l == PointLabel::Noise).count()
    }

    pub fn cluster_count(&self) -> usize {
        self.zones.len()
    }
}

/// Indices `j` (including `i`) within `eps_km` of `points[i]`, ascending.
pub fn region_query(points: &[GpsPoint], i: usize, eps_km: f64) -> Vec<usize> {
    let p = points[i];
    (0..points.len())
        .filter(|&j| j == i || haversine_km(p, points[j]) <= eps_km)
        .collect()
}

/// DBSCAN with deterministic labeling.
///
/// Clusters are the connected components of core points (cores within
/// `eps_km` of each other), numbered by their lowest-index core. A non-core
/// point joins the cluster of its lowest-index core neighbor, or is noise.
pub fn dbscan(points: &[GpsPoint], params: DbscanParams) -> ClusteringResult {
    let n = points.len();
    let neighborhoods: Vec<Vec<usize>> = (0..n).map(|i| region_query(points, i, params.eps_km)).collect();
    let core_flags: Vec<bool> = neighborhoods.iter().map(|nb| nb.len() >= params.min_pts).collect();

    let mut labels = vec![PointLabel::Noise; n];
    let mut next_cluster = 0;
    let mut queue = VecDeque::new();
    for seed in 0..n {
        if !core_flags[seed] || labels[seed] != PointLabel::Noise {
            continue;
        }
        let cluster = next_cluster;
        next_cluster += 1;
        labels[seed] = PointLabel::Cluster(cluster);
        queue.push_back(seed);
        while let Some(p) = queue.pop_front() {
            for &q in &neighborhoods[p] {
                if core_flags[q] && labels[q] == PointLabel::Noise {
                    labels[q] = PointLabel::Cluster(cluster);
                    queue.push_back(q);
                }
            }
        }
    }
    for i in 0..n {
        if core_flags[i] {
            continue;
        }
        // Neighborhoods are ascending, so the first core is the lowest-index one.
        if let Some(&c) = neighborhoods[i].iter().find(|&&j| core_flags[j]) {
            labels[i] = labels[c];
        }
    }

    let zones = summarize(points, &labels, next_cluster);
    ClusteringResult {
        labels,
        core_flags,
        zones,
    }
}

fn summarize(points: &[GpsPoint], labels: &[PointLabel], clusters: usize) -> Vec<DenseZone> {
    let mut members: Vec<Vec<GpsPoint>> = vec![Vec::new(); clusters];
    for (p, l) in points.iter().zip(labels) {
        if let PointLabel::Cluster(c) = l {
            members[*c].push(*p);
        }
    }
    members
        .into_iter()
        .enumerate()
        .map(|(zone_id, pts)| {
            let k = pts.len() as f64;
            let centroid = GpsPoint::new(
                pts.iter().map(|p| p.lat).sum::<f64>() / k,
                pts.iter().map(|p| p.lon).sum::<f64>() / k,
            );
            let radius_km = pts.iter().map(|p| haversine_km(centroid, *p)).fold(0.0, f64::max);
            DenseZone {
                zone_id,
                centroid,
                member_count: pts.len(),
                radius_km,
            }
        })
        .collect()
}

/// Zones of one clustering run together with the parameters that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneMap {
    pub eps_km: f64,
    pub min_pts: usize,
    pub zones: Vec<DenseZone>,
}

impl ZoneMap {
    pub fn new(params: DbscanParams, zones: Vec<DenseZone>) -> Self {
        Self {
            eps_km: params.eps_km,
            min_pts: params.min_pts,
            zones,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    /// The zone with the nearest centroid (lowest id on ties), provided `p`
    /// lies within its radius plus `eps_km`.
    pub fn assign(&self, p: GpsPoint) -> Option<usize> {
        let mut best: Option<(f64, &DenseZone)> = None;
        for z in &self.zones {
            let d = haversine_km(p, z.centroid);
            if best.is_none_or(|(bd, bz)| d < bd || (d == bd && z.zone_id < bz.zone_id)) {
                best = Some((d, z));
            }
        }
        best.and_then(|(d, z)| (d <= z.radius_km + self.eps_km).then_some(z.zone_id))
    }

    pub fn label(&self, p: GpsPoint) -> ZoneLabel {
        self.assign(p).map_or(ZoneLabel::Noise, ZoneLabel::Zone)
    }
}

/// Fills the zone column of every record; other columns are untouched.
pub fn label_trace(records: &[TraceRecord], zones: &ZoneMap) -> Vec<TraceRecord> {
    records
        .iter()
        .map(|r| TraceRecord {
            zone: zones.label(r.position()),
            ..r.clone()
        })
        .collect()
}

/// Latest position of each UE at or before `t_s`, considering only records
/// newer than `t_s - window_s` when a window is given. Ordered by UE id.
pub fn snapshot_positions(records: &[TraceRecord], t_s: u64, window_s: Option<u64>) -> Vec<(usize, GpsPoint)> {
    let from = window_s.map_or(0, |w| t_s.saturating_sub(w));
    let mut latest: BTreeMap<usize, (u64, GpsPoint)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.time_s <= t_s && r.time_s >= from) {
        let e = latest.entry(r.ue_id).or_insert((r.time_s, r.position()));
        if r.time_s >= e.0 {
            *e = (r.time_s, r.position());
        }
    }
    latest.into_iter().map(|(ue, (_, p))| (ue, p)).collect()
}

/// Clusters the snapshot positions and returns the resulting zones.
pub fn zones_from_snapshot(
    records: &[TraceRecord],
    snapshot_s: u64,
    window_s: Option<u64>,
    params: DbscanParams,
) -> Result<(ZoneMap, ClusteringResult)> {
    params.validate()?;
    let points: Vec<GpsPoint> = snapshot_positions(records, snapshot_s, window_s)
        .into_iter()
        .map(|(_, p)| p)
        .collect();
    let result = dbscan(&points, params);
    Ok((ZoneMap::new(params, result.zones.clone()), result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{LocalFrame, LocalPoint};
    use proptest::prelude::*;

    const ORIGIN: GpsPoint = GpsPoint::new(60.17, 24.94);

    fn local(points: &[(f64, f64)]) -> Vec<GpsPoint> {
        let f = LocalFrame::new(ORIGIN);
        points.iter().map(|&(x, y)| f.to_gps(LocalPoint::new(x, y))).collect()
    }

    #[test]
    fn single_point_neighborhood_is_itself() {
        let pts = local(&[(0.0, 0.0)]);
        assert_eq!(region_query(&pts, 0, 0.001), vec![0]);
        assert_eq!(region_query(&pts, 0, 100.0), vec![0]);
    }

    #[test]
    fn points_a_kilometer_apart_are_isolated_at_half_km() {
        let pts = local(&[(0.0, 0.0), (0.0, 1000.0)]);
        assert!((haversine_km(pts[0], pts[1]) - 1.0).abs() < 1e-6);
        assert_eq!(region_query(&pts, 0, 0.5), vec![0]);
        assert_eq!(region_query(&pts, 1, 0.5), vec![1]);
        assert_eq!(region_query(&pts, 0, 1.5), vec![0, 1]);
    }

    #[test]
    fn empty_input() {
        let r = dbscan(
            &[],
            DbscanParams {
                eps_km: 0.5,
                min_pts: 3,
            },
        );
        assert_eq!((r.cluster_count(), r.noise_count()), (0, 0));
    }

    #[test]
    fn lone_point_is_noise() {
        let r = dbscan(
            &local(&[(0.0, 0.0)]),
            DbscanParams {
                eps_km: 0.5,
                min_pts: 2,
            },
        );
        assert_eq!(r.labels, vec![PointLabel::Noise]);
        assert!(r.zones.is_empty());
    }

    #[test]
    fn two_separated_groups() {
        let mut raw = Vec::new();
        for (cx, cy) in [(0.0, 0.0), (10_000.0, 0.0)] {
            for (dx, dy) in [(0.0, 0.0), (40.0, 0.0), (0.0, 40.0), (-40.0, 0.0), (0.0, -40.0)] {
                raw.push((cx + dx, cy + dy));
            }
        }
        let r = dbscan(
            &local(&raw),
            DbscanParams {
                eps_km: 0.2,
                min_pts: 3,
            },
        );
        assert_eq!(r.cluster_count(), 2);
        assert_eq!(r.noise_count(), 0);
        assert!(r.labels[..5].iter().all(|l| *l == PointLabel::Cluster(0)));
        assert!(r.labels[5..].iter().all(|l| *l == PointLabel::Cluster(1)));
        assert!(r.zones.iter().all(|z| z.member_count == 5 && z.radius_km < 0.05));
    }

    #[test]
    fn border_attaches_to_lowest_index_core() {
        // Border at x=150 sees cores at x=0 and x=300, each backed by three
        // non-core supporters on its far side.
        let mut raw = vec![(150.0, 0.0), (300.0, 0.0), (0.0, 0.0)];
        raw.extend([(400.0, 0.0); 3]);
        raw.extend([(-100.0, 0.0); 3]);
        let r = dbscan(
            &local(&raw),
            DbscanParams {
                eps_km: 0.16,
                min_pts: 5,
            },
        );
        assert_eq!(r.core_flags.iter().filter(|c| **c).count(), 2);
        assert!(r.core_flags[1] && r.core_flags[2] && !r.core_flags[0]);
        assert_eq!(r.cluster_count(), 2);
        assert_eq!(r.labels[0], r.labels[1]);
        assert_ne!(r.labels[0], r.labels[2]);
    }

    fn zone_map() -> ZoneMap {
        ZoneMap {
            eps_km: 0.5,
            min_pts: 3,
            zones: vec![
                DenseZone {
                    zone_id: 0,
                    centroid: ORIGIN,
                    member_count: 5,
                    radius_km: 0.3,
                },
                DenseZone {
                    zone_id: 1,
                    centroid: local(&[(5000.0, 0.0)])[0],
                    member_count: 4,
                    radius_km: 0.2,
                },
            ],
        }
    }

    #[test]
    fn assign_at_centroid_and_far_away() {
        let zm = zone_map();
        assert_eq!(zm.assign(ORIGIN), Some(0));
        assert_eq!(zm.assign(zm.zones[1].centroid), Some(1));
        assert_eq!(zm.assign(GpsPoint::new(ORIGIN.lat + 9.0, ORIGIN.lon)), None);
    }

    #[test]
    fn boundary_point_is_assigned() {
        let mut zm = zone_map();
        let p = local(&[(0.0, 800.0)])[0];
        let d = haversine_km(p, ORIGIN);
        assert!((0.5..1.0).contains(&d));
        // d - 0.5 is exact here, so radius + eps reproduces d bit for bit.
        zm.zones[0].radius_km = d - zm.eps_km;
        assert_eq!(zm.zones[0].radius_km + zm.eps_km, d);
        assert_eq!(zm.assign(p), Some(0));
        zm.zones[0].radius_km = (d - zm.eps_km).next_down();
        assert_eq!(zm.assign(p), None);
    }

    #[test]
    fn nearest_centroid_tie_goes_to_lower_id() {
        let mut zm = zone_map();
        zm.zones[1].centroid = ORIGIN;
        zm.zones.swap(0, 1);
        assert_eq!(zm.assign(ORIGIN), Some(0));
    }

    fn record(lat: f64, lon: f64) -> TraceRecord {
        TraceRecord {
            time_s: 0,
            ue_id: 3,
            service: None,
            lat,
            lon,
            enodeb_id: 1,
            uplink_kbps: 0,
            downlink_kbps: 0,
            zone: ZoneLabel::Unlabeled,
        }
    }

    #[test]
    fn labeling() {
        let recs = vec![record(ORIGIN.lat, ORIGIN.lon), record(0.0, 0.0)];
        let empty = ZoneMap {
            zones: vec![],
            ..zone_map()
        };
        assert!(label_trace(&recs, &empty).iter().all(|r| r.zone == ZoneLabel::Noise));
        let out = label_trace(&recs, &zone_map());
        assert_eq!(out.len(), recs.len());
        assert_eq!(out[0].zone, ZoneLabel::Zone(0));
        assert_eq!(out[1].zone, ZoneLabel::Noise);
        assert_eq!(
            TraceRecord {
                zone: ZoneLabel::Unlabeled,
                ..out[0].clone()
            },
            recs[0]
        );
    }

    #[test]
    fn snapshot_takes_latest_per_ue() {
        let mut recs = Vec::new();
        for (t, ue, lat) in [(0, 0, 1.0), (10, 0, 2.0), (20, 0, 3.0), (5, 1, 4.0)] {
            recs.push(TraceRecord {
                time_s: t,
                ue_id: ue,
                ..record(lat, 0.0)
            });
        }
        let snap = snapshot_positions(&recs, 15, None);
        assert_eq!(snap, vec![(0, GpsPoint::new(2.0, 0.0)), (1, GpsPoint::new(4.0, 0.0))]);
        let windowed = snapshot_positions(&recs, 15, Some(8));
        assert_eq!(windowed, vec![(0, GpsPoint::new(2.0, 0.0))]);
    }

    fn cloud() -> impl Strategy<Value = (Vec<(f64, f64)>, f64, usize)> {
        (
            prop::collection::vec((-1500.0f64..1500.0, -1500.0f64..1500.0), 0..60),
            0.05f64..0.6,
            1usize..6,
        )
    }

    proptest! {
        #[test]
        fn permutation_preserves_structure((raw, eps, min_pts) in cloud(), rot in 0usize..60) {
            let pts = local(&raw);
            let params = DbscanParams { eps_km: eps, min_pts };
            let a = dbscan(&pts, params);
            let n = pts.len();
            prop_assert_eq!(a.noise_count() + a.labels.iter().filter(|l| l.cluster().is_some()).count(), n);
            if n == 0 { return Ok(()); }
            let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
            let permuted: Vec<GpsPoint> = perm.iter().map(|&i| pts[i]).collect();
            let b = dbscan(&permuted, params);
            // Map b's labels back to original indices.
            let mut back = vec![PointLabel::Noise; n];
            let mut core_back = vec![false; n];
            for (k, &i) in perm.iter().enumerate() {
                back[i] = b.labels[k];
                core_back[i] = b.core_flags[k];
            }
            prop_assert_eq!(&core_back, &a.core_flags);
            let mut relabel = BTreeMap::new();
            for i in 0..n {
                if !a.core_flags[i] { continue; }
                let (PointLabel::Cluster(x), PointLabel::Cluster(y)) = (a.labels[i], back[i]) else {
                    return Err(TestCaseError::fail("core point without cluster"));
                };
                prop_assert_eq!(*relabel.entry(x).or_insert(y), y);
            }
            for i in 0..n {
                prop_assert_eq!(a.labels[i] == PointLabel::Noise, back[i] == PointLabel::Noise);
                // Border points with core neighbors in a single cluster are order independent.
                let clusters: std::collections::BTreeSet<_> = region_query(&pts, i, eps)
                    .into_iter()
                    .filter(|&j| a.core_flags[j])
                    .map(|j| a.labels[j])
                    .collect();
                if clusters.len() == 1 {
                    if let (PointLabel::Cluster(x), PointLabel::Cluster(y)) = (a.labels[i], back[i]) {
                        prop_assert_eq!(relabel[&x], y);
                    }
                }
            }
        }
    }
}
