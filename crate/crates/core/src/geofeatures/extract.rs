use serde::{Deserialize, Serialize};

use super::{haversine, GpsPoint, GpsTrajectory, LatLon, Poi, StayPoint, EARTH_RADIUS_M};
use crate::error::{Error, Result};

/// Fill value for feature slots with nothing to measure.
pub const SENTINEL: f64 = -1.0;

/// Number of POI-nearest points described individually.
pub const NEAREST: usize = 9;

/// Radius ladder in meters for the inside-radius counts.
pub const DEFAULT_RADII: [f64; 17] = [
    500.0, 400.0, 300.0, 200.0, 150.0, 100.0, 90.0, 80.0, 70.0, 60.0, 50.0, 40.0, 30.0, 20.0, 10.0, 5.0, 3.0,
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub radii: Vec<f64>,
    pub outside_radius_m: f64,
    pub stay_distance_m: f64,
    pub stay_time_s: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            radii: DEFAULT_RADII.to_vec(),
            outside_radius_m: 500.0,
            stay_distance_m: 200.0,
            stay_time_s: 300.0,
        }
    }
}

impl FeatureConfig {
    pub fn check(&self) -> Result<()> {
        if self.radii.is_empty() || self.radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidArgument("radii must be positive".into()));
        }
        if !(self.stay_distance_m > 0.0 && self.stay_time_s > 0.0 && self.outside_radius_m > 0.0) {
            return Err(Error::InvalidArgument("stay-point thresholds must be positive".into()));
        }
        Ok(())
    }
}

/// The geo-features of one trajectory around one POI.
#[derive(Clone, Debug, PartialEq)]
pub struct GeoFeatureRow {
    pub radii: Vec<f64>,
    /// Points within each radius, aligned with `radii`.
    pub records_inside: Vec<u64>,
    pub records_outside_500m: u64,
    pub poi_radius: f64,
    pub records_inside_building: u64,
    pub mean_speed: f64,
    pub max_speed: f64,
    pub stay_count: u64,
    pub speed_at_9: [f64; NEAREST],
    pub cosine_at_9: [f64; NEAREST],
}

fn radius_label(r: f64) -> String {
    format!("records_inside_{r}m")
}

impl GeoFeatureRow {
    /// Column names, aligned with [`Self::values`].
    pub fn names(&self) -> Vec<String> {
        let mut out: Vec<String> = self.radii.iter().map(|&r| radius_label(r)).collect();
        out.extend(
            [
                "records_outside_500m",
                "poi_radius",
                "records_inside_building",
                "mean_speed",
                "max_speed",
                "stay_count",
            ]
            .map(String::from),
        );
        out.extend((0..NEAREST).map(|i| format!("speed_at_{i}")));
        out.extend((0..NEAREST).map(|i| format!("cosine_at_{i}")));
        out
    }

    pub fn values(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.records_inside.iter().map(|&c| c as f64).collect();
        out.extend([
            self.records_outside_500m as f64,
            self.poi_radius,
            self.records_inside_building as f64,
            self.mean_speed,
            self.max_speed,
            self.stay_count as f64,
        ]);
        out.extend(self.speed_at_9);
        out.extend(self.cosine_at_9);
        out
    }

    /// Inverse of [`Self::names`] / [`Self::values`].
    pub fn from_columns(names: &[String], values: &[f64]) -> Result<Self> {
        if names.len() != values.len() {
            return Err(Error::Shape("geo-feature names and values differ in length".into()));
        }
        let lookup = |name: &str| {
            names
                .iter()
                .position(|n| n == name)
                .map(|i| values[i])
                .ok_or_else(|| Error::InvalidArgument(format!("missing geo-feature column `{name}`")))
        };
        let count = |v: f64| -> Result<u64> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as u64)
            } else {
                Err(Error::InvalidArgument(format!("count column holds {v}")))
            }
        };
        let mut radii = Vec::new();
        let mut records_inside = Vec::new();
        for (n, &v) in names.iter().zip(values) {
            if let Some(r) = n.strip_prefix("records_inside_").and_then(|s| s.strip_suffix('m')) {
                if r == "building" {
                    continue;
                }
                radii.push(r.parse().map_err(|_| Error::InvalidArgument(format!("bad radius column `{n}`")))?);
                records_inside.push(count(v)?);
            }
        }
        let slots = |prefix: &str| -> Result<[f64; NEAREST]> {
            let mut out = [SENTINEL; NEAREST];
            for (i, slot) in out.iter_mut().enumerate() {
                *slot = lookup(&format!("{prefix}{i}"))?;
            }
            Ok(out)
        };
        Ok(GeoFeatureRow {
            radii,
            records_inside,
            records_outside_500m: count(lookup("records_outside_500m")?)?,
            poi_radius: lookup("poi_radius")?,
            records_inside_building: count(lookup("records_inside_building")?)?,
            mean_speed: lookup("mean_speed")?,
            max_speed: lookup("max_speed")?,
            stay_count: count(lookup("stay_count")?)?,
            speed_at_9: slots("speed_at_")?,
            cosine_at_9: slots("cosine_at_")?,
        })
    }
}

pub fn count_within_radius(trajectory: &GpsTrajectory, poi: &Poi, radius: f64) -> u64 {
    trajectory
        .points()
        .iter()
        .filter(|p| haversine(p.position, poi.location) <= radius)
        .count() as u64
}

/// Anchor-based stay points: starting from an anchor, extend while points
/// stay within `dist_threshold` of it; keep the run if it lasts at least
/// `time_threshold` seconds.
pub fn detect_stay_points(trajectory: &GpsTrajectory, dist_threshold: f64, time_threshold: f64) -> Vec<StayPoint> {
    let pts = trajectory.points();
    let mut out = Vec::new();
    let mut i = 0;
    while i < pts.len() {
        let mut j = i + 1;
        while j < pts.len() && haversine(pts[i].position, pts[j].position) <= dist_threshold {
            j += 1;
        }
        let run = &pts[i..j];
        let duration = (run[run.len() - 1].timestamp - run[0].timestamp).num_milliseconds() as f64 / 1000.0;
        if run.len() > 1 && duration >= time_threshold {
            let n = run.len() as f64;
            out.push(StayPoint {
                centroid: LatLon::new(
                    run.iter().map(|p| p.position.lat).sum::<f64>() / n,
                    run.iter().map(|p| p.position.lon).sum::<f64>() / n,
                ),
                start: run[0].timestamp,
                end: run[run.len() - 1].timestamp,
                count: run.len(),
            });
            i = j;
        } else {
            i += 1;
        }
    }
    out
}

fn segment_speed_kmh(a: &GpsPoint, b: &GpsPoint) -> f64 {
    let seconds = (b.timestamp - a.timestamp).num_milliseconds() as f64 / 1000.0;
    haversine(a.position, b.position) / seconds * 3.6
}

/// Mean and maximum segment speed in km/h.
pub fn speed_profile(trajectory: &GpsTrajectory) -> Result<(f64, f64)> {
    let pts = trajectory.points();
    if pts.len() < 2 {
        return Err(Error::InsufficientHistory(format!(
            "speed needs at least 2 points, user `{}` has {}",
            trajectory.user(),
            pts.len()
        )));
    }
    let speeds: Vec<f64> = pts.windows(2).map(|w| segment_speed_kmh(&w[0], &w[1])).collect();
    let mean = speeds.iter().sum::<f64>() / speeds.len() as f64;
    let max = speeds.iter().copied().fold(0.0, f64::max);
    Ok((mean, max))
}

/// East/north offset in meters from `from` to `to`, in the tangent plane
/// at `from`.
fn planar(from: LatLon, to: LatLon) -> (f64, f64) {
    let mut dlon = to.lon - from.lon;
    if dlon > 180.0 {
        dlon -= 360.0;
    } else if dlon < -180.0 {
        dlon += 360.0;
    }
    let x = dlon.to_radians() * EARTH_RADIUS_M * from.lat.to_radians().cos();
    let y = (to.lat - from.lat).to_radians() * EARTH_RADIUS_M;
    (x, y)
}

/// Speed into, and turning cosine at, each of the nine points nearest
/// the POI, nearest first.
///
/// The cosine is taken at the point, between the vector back to the
/// previous record and the vector to the POI.
pub fn nearest9_features(trajectory: &GpsTrajectory, poi: &Poi) -> ([f64; NEAREST], [f64; NEAREST]) {
    let pts = trajectory.points();
    let mut order: Vec<(f64, usize)> = pts
        .iter()
        .enumerate()
        .map(|(i, p)| (haversine(p.position, poi.location), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut speed = [SENTINEL; NEAREST];
    let mut cosine = [SENTINEL; NEAREST];
    for (slot, &(_, k)) in order.iter().take(NEAREST).enumerate() {
        if k == 0 {
            continue;
        }
        let (here, prev) = (&pts[k], &pts[k - 1]);
        speed[slot] = segment_speed_kmh(prev, here);
        let (ax, ay) = planar(here.position, prev.position);
        let (bx, by) = planar(here.position, poi.location);
        let norm = (ax * ax + ay * ay).sqrt() * (bx * bx + by * by).sqrt();
        if norm > 0.0 {
            cosine[slot] = ((ax * bx + ay * by) / norm).clamp(-1.0, 1.0);
        }
    }
    (speed, cosine)
}

/// Every geo-feature of `trajectory` around `poi`. Trajectories with fewer
/// than two points get sentinel speeds instead of an error.
pub fn extract_features(trajectory: &GpsTrajectory, poi: &Poi, config: &FeatureConfig) -> Result<GeoFeatureRow> {
    config.check()?;
    let distances: Vec<f64> = trajectory
        .points()
        .iter()
        .map(|p| haversine(p.position, poi.location))
        .collect();
    let within = |r: f64| distances.iter().filter(|&&d| d <= r).count() as u64;
    let (mean_speed, max_speed) = speed_profile(trajectory).unwrap_or((SENTINEL, SENTINEL));
    let (speed_at_9, cosine_at_9) = nearest9_features(trajectory, poi);
    Ok(GeoFeatureRow {
        radii: config.radii.clone(),
        records_inside: config.radii.iter().map(|&r| within(r)).collect(),
        records_outside_500m: distances.iter().filter(|&&d| d > config.outside_radius_m).count() as u64,
        poi_radius: poi.radius_m,
        records_inside_building: within(poi.radius_m),
        mean_speed,
        max_speed,
        stay_count: detect_stay_points(trajectory, config.stay_distance_m, config.stay_time_s).len() as u64,
        speed_at_9,
        cosine_at_9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{DateTime, TimeZone, Utc};
    use proptest::prelude::*;

    fn at(s: i64) -> DateTime<Utc> {
        Utc.timestamp_opt(1_600_000_000 + s, 0).unwrap()
    }

    fn traj(points: &[(i64, f64, f64)]) -> GpsTrajectory {
        GpsTrajectory::new("u", points.iter().map(|&(s, la, lo)| GpsPoint::new(at(s), la, lo)).collect()).unwrap()
    }

    fn office() -> Poi {
        Poi::new("O1", 0.0, 0.0, 30.0).unwrap()
    }

    /// Latitude offset of `m` meters north.
    fn north(m: f64) -> f64 {
        (m / EARTH_RADIUS_M).to_degrees()
    }

    #[test]
    fn points_at_the_center_count_for_every_radius() {
        let t = traj(&[(0, 0.0, 0.0), (60, 0.0, 0.0), (120, 0.0, 0.0)]);
        for r in DEFAULT_RADII {
            assert_eq!(count_within_radius(&t, &office(), r), 3);
        }
        assert_eq!(count_within_radius(&traj(&[]), &office(), 100.0), 0);
    }

    #[test]
    fn stationary_trace_is_one_stay() {
        let pts: Vec<_> = (0..10).map(|i| (i * 133, 0.0, 0.0)).collect();
        let stays = detect_stay_points(&traj(&pts), 200.0, 300.0);
        assert_eq!(stays.len(), 1);
        assert_eq!(stays[0].count, 10);
        assert_eq!(speed_profile(&traj(&pts)).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn kilometer_hops_never_stay() {
        let pts: Vec<_> = (0..10).map(|i| (i * 60, north(1000.0 * i as f64), 0.0)).collect();
        assert!(detect_stay_points(&traj(&pts), 200.0, 300.0).is_empty());
    }

    #[test]
    fn two_dwells_in_order() {
        let mut pts = Vec::new();
        for i in 0..6 {
            pts.push((i * 120, 0.0, 0.0));
        }
        // Transit at about 60 km/h.
        for i in 1..5 {
            pts.push((600 + i * 60, north(1000.0 * i as f64), 0.0));
        }
        for i in 0..6 {
            pts.push((1000 + i * 120, north(5000.0), 0.0));
        }
        let stays = detect_stay_points(&traj(&pts), 200.0, 300.0);
        assert_eq!(stays.len(), 2);
        assert!(stays[0].end < stays[1].start);
        assert_eq!((stays[0].count, stays[1].count), (6, 6));
        assert!(stays[0].centroid.lat.abs() < 1e-12);
        assert!((stays[1].centroid.lat - north(5000.0)).abs() < 1e-12);
    }

    #[test]
    fn kilometer_a_minute_is_sixty_kmh() {
        let (mean, max) = speed_profile(&traj(&[(0, 0.0, 0.0), (60, north(1000.0), 0.0)])).unwrap();
        assert!((mean - 60.0).abs() < 1e-9 && (max - 60.0).abs() < 1e-9);
        assert!(speed_profile(&traj(&[(0, 0.0, 0.0)])).is_err());
    }

    #[test]
    fn short_trace_gets_sentinel_slots() {
        let (speed, cosine) = nearest9_features(&traj(&[(0, 0.001, 0.0), (60, 0.002, 0.0), (120, 0.003, 0.0)]), &office());
        assert!(speed[3..].iter().chain(&cosine[3..]).all(|&v| v == SENTINEL));
        // Nearest is the first record, which has no predecessor.
        assert_eq!(speed[0], SENTINEL);
        assert!(speed[1] > 0.0);
    }

    #[test]
    fn straight_approach_has_cosine_minus_one() {
        let poi = Poi::new("O", north(1000.0), 0.0, 30.0).unwrap();
        let t = traj(&[(0, 0.0, 0.0), (60, north(300.0), 0.0), (120, north(600.0), 0.0)]);
        let (_, cosine) = nearest9_features(&t, &poi);
        assert!((cosine[0] + 1.0).abs() < 1e-6);
        assert!((cosine[1] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn empty_and_single_point_rows() {
        let row = extract_features(&traj(&[]), &office(), &FeatureConfig::default()).unwrap();
        assert!(row.records_inside.iter().all(|&c| c == 0));
        assert_eq!(row.records_outside_500m, 0);
        assert_eq!((row.mean_speed, row.max_speed), (SENTINEL, SENTINEL));
        assert!(row.speed_at_9.iter().chain(&row.cosine_at_9).all(|&v| v == SENTINEL));

        let row = extract_features(&traj(&[(0, 0.0, 0.0)]), &office(), &FeatureConfig::default()).unwrap();
        assert!(row.records_inside.iter().all(|&c| c == 1));
        assert_eq!(row.records_inside_building, 1);
        assert_eq!(row.records_outside_500m, 0);
    }

    #[test]
    fn columns_round_trip() {
        let t = traj(&[(0, 0.0, 0.0), (60, north(50.0), 0.0), (700, north(900.0), 0.001)]);
        let row = extract_features(&t, &office(), &FeatureConfig::default()).unwrap();
        assert_eq!(row.names().len(), 17 + 6 + 18);
        assert_eq!(GeoFeatureRow::from_columns(&row.names(), &row.values()).unwrap(), row);
    }

    fn trajectory_strategy() -> impl Strategy<Value = GpsTrajectory> {
        prop::collection::vec((1i64..600, -0.01f64..0.01, -0.01f64..0.01), 0..40).prop_map(|steps| {
            let mut s = 0;
            let pts = steps
                .into_iter()
                .map(|(dt, la, lo)| {
                    s += dt;
                    GpsPoint::new(at(s), la, lo)
                })
                .collect();
            GpsTrajectory::new("u", pts).unwrap()
        })
    }

    proptest! {
        #[test]
        fn radius_counts_are_monotone(t in trajectory_strategy(), r1 in 1.0f64..2000.0, r2 in 1.0f64..2000.0) {
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            prop_assert!(count_within_radius(&t, &office(), lo) <= count_within_radius(&t, &office(), hi));
        }

        #[test]
        fn slot_vectors_have_fixed_length_and_range(t in trajectory_strategy()) {
            let row = extract_features(&t, &office(), &FeatureConfig::default()).unwrap();
            prop_assert_eq!(row.speed_at_9.len(), NEAREST);
            for c in row.cosine_at_9 {
                prop_assert!((-1.0..=1.0).contains(&c));
            }
            for s in row.speed_at_9 {
                prop_assert!(s >= 0.0 || s == SENTINEL);
            }
            if t.len() >= 2 {
                prop_assert!(row.mean_speed <= row.max_speed + 1e-9);
            }
        }
    }
}
