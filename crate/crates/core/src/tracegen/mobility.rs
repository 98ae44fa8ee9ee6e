use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geo::LocalPoint;
use crate::tracegen::config::ProfileSpeeds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobilityProfile {
    Walking,
    Biking,
    Driving,
}

impl MobilityProfile {
    pub const ALL: [MobilityProfile; 3] = [
        MobilityProfile::Walking,
        MobilityProfile::Biking,
        MobilityProfile::Driving,
    ];

    pub fn speed(self, speeds: &ProfileSpeeds) -> f64 {
        match self {
            MobilityProfile::Walking => speeds.walking_mps,
            MobilityProfile::Biking => speeds.biking_mps,
            MobilityProfile::Driving => speeds.driving_mps,
        }
    }
}

/// Axis-aligned square `[-half_side, half_side]²` in the local frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Area {
    pub half_side: f64,
}

impl Area {
    pub fn sample<R: Rng>(&self, rng: &mut R) -> LocalPoint {
        LocalPoint::new(
            rng.random_range(-self.half_side..=self.half_side),
            rng.random_range(-self.half_side..=self.half_side),
        )
    }

    pub fn contains(&self, p: LocalPoint) -> bool {
        p.x.abs() <= self.half_side && p.y.abs() <= self.half_side
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ue {
    pub ue_id: usize,
    pub profile: MobilityProfile,
    pub position: LocalPoint,
    pub waypoint: LocalPoint,
    pub speed_mps: f64,
    pub distance_since_record: f64,
}

impl Ue {
    pub fn spawn<R: Rng>(ue_id: usize, area: &Area, speeds: &ProfileSpeeds, rng: &mut R) -> Self {
        let profile = MobilityProfile::ALL[rng.random_range(0..MobilityProfile::ALL.len())];
        let position = area.sample(rng);
        let waypoint = area.sample(rng);
        Self {
            ue_id,
            profile,
            position,
            waypoint,
            speed_mps: profile.speed(speeds),
            distance_since_record: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub traveled_m: f64,
    /// Set when the accumulated distance crossed the update threshold during this step.
    pub record_due: bool,
}

/// Advances a UE by `dt_s` under the random-waypoint model. Reaching a waypoint
/// mid-step draws a new one and spends the remaining distance toward it.
pub fn step_ue<R: Rng>(ue: &mut Ue, dt_s: f64, update_meters: f64, area: &Area, rng: &mut R) -> StepOutcome {
    debug_assert!(dt_s > 0.0);
    let mut remaining = ue.speed_mps * dt_s;
    let mut traveled = 0.0;
    while remaining > 0.0 {
        let d = ue.position.distance(&ue.waypoint);
        if d <= remaining {
            ue.position = ue.waypoint;
            remaining -= d;
            traveled += d;
            ue.waypoint = area.sample(rng);
        } else {
            let f = remaining / d;
            ue.position = LocalPoint::new(
                ue.position.x + (ue.waypoint.x - ue.position.x) * f,
                ue.position.y + (ue.waypoint.y - ue.position.y) * f,
            );
            traveled += remaining;
            remaining = 0.0;
        }
    }
    ue.distance_since_record += traveled;
    let record_due = ue.distance_since_record >= update_meters;
    if record_due {
        ue.distance_since_record = 0.0;
    }
    StepOutcome {
        traveled_m: traveled,
        record_due,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const AREA: Area = Area { half_side: 5000.0 };

    fn walker(position: LocalPoint, waypoint: LocalPoint) -> Ue {
        Ue {
            ue_id: 0,
            profile: MobilityProfile::Walking,
            position,
            waypoint,
            speed_mps: 1.4,
            distance_since_record: 0.0,
        }
    }

    #[test]
    fn walking_ten_seconds_moves_fourteen_meters() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ue = walker(LocalPoint::new(0.0, 0.0), LocalPoint::new(300.0, 400.0));
        let out = step_ue(&mut ue, 10.0, 100.0, &AREA, &mut rng);
        assert!((out.traveled_m - 14.0).abs() < 1e-12);
        assert!((ue.position.x - 8.4).abs() < 1e-12 && (ue.position.y - 11.2).abs() < 1e-12);
        assert!(!out.record_due);
    }

    #[test]
    fn one_trigger_per_hundred_meters() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ue = walker(LocalPoint::new(0.0, 0.0), LocalPoint::new(1000.0, 0.0));
        ue.speed_mps = 10.0;
        let triggers: Vec<bool> = (0..10)
            .map(|_| step_ue(&mut ue, 1.0, 100.0, &AREA, &mut rng).record_due)
            .collect();
        assert_eq!(triggers.iter().filter(|t| **t).count(), 1);
        assert!(triggers[9]);
        assert_eq!(ue.distance_since_record, 0.0);
    }

    #[test]
    fn waypoint_reached_mid_step_continues_toward_next() {
        let seed = 42;
        let mut ue = walker(LocalPoint::new(0.0, 0.0), LocalPoint::new(10.0, 0.0));
        ue.speed_mps = 15.0;
        step_ue(&mut ue, 1.0, 100.0, &AREA, &mut ChaCha8Rng::seed_from_u64(seed));

        // Two-segment oracle: 10 m to the first waypoint, then 5 m toward the
        // freshly drawn one (drawn from the same rng stream).
        let mut oracle_rng = ChaCha8Rng::seed_from_u64(seed);
        let next = AREA.sample(&mut oracle_rng);
        let (a, b) = (LocalPoint::new(10.0, 0.0), next);
        let len = a.distance(&b);
        let expected = LocalPoint::new(a.x + (b.x - a.x) * 5.0 / len, a.y + (b.y - a.y) * 5.0 / len);
        assert!(ue.position.distance(&expected) < 1e-9);
        assert_eq!(ue.waypoint, next);
    }

    proptest! {
        #[test]
        fn stays_in_area_and_cadence_is_bounded(seed in any::<u64>(), speed in 0.5f64..20.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut ue = Ue::spawn(0, &AREA, &ProfileSpeeds::default(), &mut rng);
            ue.speed_mps = speed;
            let mut since = 0.0;
            for _ in 0..500 {
                let out = step_ue(&mut ue, 1.0, 100.0, &AREA, &mut rng);
                prop_assert!(AREA.contains(ue.position));
                since += out.traveled_m;
                if out.record_due {
                    prop_assert!(since >= 100.0 - 1e-9 && since <= 100.0 + speed + 1e-9);
                    since = 0.0;
                }
            }
        }
    }
}
