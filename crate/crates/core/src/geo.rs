//! Great-circle geometry and the local planar frame used by the mobility model.

use serde::{Deserialize, Serialize};

/// Mean Earth radius in kilometers.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Meters spanned by one degree of latitude on the reference sphere.
const METERS_PER_DEGREE: f64 = EARTH_RADIUS_KM * 1000.0 * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpsPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GpsPoint {
    pub const fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }

    /// Rounds both coordinates to the 6 decimal places used by the trace format,
    /// going through the decimal text so the result matches a CSV round trip.
    pub fn quantized(&self) -> Self {
        Self {
            lat: quantize6(self.lat),
            lon: quantize6(self.lon),
        }
    }
}

pub(crate) fn quantize6(v: f64) -> f64 {
    format!("{v:.6}").parse().expect("formatted float parses")
}

/// Great-circle distance between two points, in kilometers.
pub fn haversine_km(a: GpsPoint, b: GpsPoint) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dphi = (b.lat - a.lat).to_radians();
    let dlambda = (b.lon - a.lon).to_radians();

    let (s1, c1) = (dphi / 2.0).sin_cos();
    let s2 = (dlambda / 2.0).sin();
    let across = phi1.cos() * phi2.cos() * s2 * s2;
    // h and 1 - h are formed separately so antipodes give exactly pi * R.
    let h = (s1 * s1 + across).max(0.0);
    let rest = (c1 * c1 - across).max(0.0);
    2.0 * EARTH_RADIUS_KM * h.sqrt().atan2(rest.sqrt())
}

/// A position in meters east (`x`) and north (`y`) of an anchor point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalPoint {
    pub x: f64,
    pub y: f64,
}

impl LocalPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &LocalPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Equirectangular projection around an origin. Accurate to well under a
/// meter over the tens of kilometers a simulation area spans.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    origin: GpsPoint,
    meters_per_degree_lon: f64,
}

impl LocalFrame {
    pub fn new(origin: GpsPoint) -> Self {
        Self {
            origin,
            meters_per_degree_lon: METERS_PER_DEGREE * origin.lat.to_radians().cos(),
        }
    }

    pub fn origin(&self) -> GpsPoint {
        self.origin
    }

    pub fn to_gps(&self, p: LocalPoint) -> GpsPoint {
        GpsPoint {
            lat: self.origin.lat + p.y / METERS_PER_DEGREE,
            lon: self.origin.lon + p.x / self.meters_per_degree_lon,
        }
    }

    pub fn to_local(&self, p: GpsPoint) -> LocalPoint {
        LocalPoint {
            x: (p.lon - self.origin.lon) * self.meters_per_degree_lon,
            y: (p.lat - self.origin.lat) * METERS_PER_DEGREE,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn identical_points_are_zero() {
        let p = GpsPoint::new(0.0, 0.0);
        assert_eq!(haversine_km(p, p), 0.0);
        let q = GpsPoint::new(60.17, 24.94);
        assert_eq!(haversine_km(q, q), 0.0);
    }

    #[test]
    fn quarter_circle() {
        let d = haversine_km(GpsPoint::new(0.0, 0.0), GpsPoint::new(90.0, 0.0));
        assert!((d - PI * EARTH_RADIUS_KM / 2.0).abs() < 1e-9);
        assert!((d - 10007.543).abs() < 1e-3);
    }

    #[test]
    fn antipodal_is_half_circumference() {
        let d = haversine_km(GpsPoint::new(0.0, 0.0), GpsPoint::new(0.0, 180.0));
        assert_eq!(d, PI * EARTH_RADIUS_KM);
    }

    #[test]
    fn helsinki_hundredth_degree() {
        let d = haversine_km(GpsPoint::new(60.17, 24.94), GpsPoint::new(60.18, 24.94));
        assert!((d - 1.11195).abs() < 1e-5, "{d}");
    }

    #[test]
    fn frame_round_trip() {
        let frame = LocalFrame::new(GpsPoint::new(60.17, 24.94));
        let p = LocalPoint::new(-4000.0, 2500.0);
        let back = frame.to_local(frame.to_gps(p));
        assert!((back.x - p.x).abs() < 1e-6 && (back.y - p.y).abs() < 1e-6);
        // 1 km north is ~1 km of great-circle distance.
        let d = haversine_km(frame.origin(), frame.to_gps(LocalPoint::new(0.0, 1000.0)));
        assert!((d - 1.0).abs() < 1e-9);
    }

    fn point() -> impl Strategy<Value = GpsPoint> {
        (-90.0f64..=90.0, -180.0f64..=180.0).prop_map(|(lat, lon)| GpsPoint::new(lat, lon))
    }

    proptest! {
        #[test]
        fn metric_properties(a in point(), b in point(), c in point()) {
            let ab = haversine_km(a, b);
            prop_assert_eq!(ab, haversine_km(b, a));
            prop_assert!((0.0..=PI * EARTH_RADIUS_KM + 1e-9).contains(&ab));
            prop_assert!(ab <= haversine_km(a, c) + haversine_km(c, b) + 1e-7);
        }
    }
}
