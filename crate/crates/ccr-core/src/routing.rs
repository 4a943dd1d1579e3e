//! Cable routing descriptions and their continuous path interpolants.
//!
//! A routing assigns one hole index per disc. The cable enters the robot
//! through the base plate at `s = 0`, using the same hole as disc 1, and
//! terminates at the tip disc. For the rod model the local path `r_i(s)`
//! is a natural cubic spline through the per-station hole coordinates, so
//! its first and second derivatives exist everywhere on `[0, L]`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::robot::{RobotSpec, STANDARD_GRAVITY};
use crate::spline::CubicSpline;

/// Routing file schema. Tension in grams-force, length reduction in percent.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoutingFile {
    pub name: String,
    pub holes: Vec<usize>,
    pub tension_g: Option<f64>,
    pub length_reduction_pct: Option<f64>,
}

impl RoutingFile {
    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::Parse {
            context: "routing file".to_string(),
            message: e.to_string(),
        })
    }
}

/// One cable's validated hole assignment and actuation inputs (SI units).
#[derive(Debug, Clone, PartialEq)]
pub struct CableRouting {
    pub name: String,
    /// Hole index (1-based) at each disc, base to tip.
    pub hole_index_per_disc: Vec<usize>,
    /// Disc the cable terminates at; always the tip disc.
    pub termination_disc: usize,
    /// Cable tension in N; consumed by the rod model.
    pub tension: Option<f64>,
    /// Fractional reduction of the undeformed in-robot cable length;
    /// consumed by the optimization model.
    pub length_reduction: Option<f64>,
}

impl CableRouting {
    pub fn new(
        spec: &RobotSpec,
        name: impl Into<String>,
        hole_index_per_disc: Vec<usize>,
        tension: Option<f64>,
        length_reduction: Option<f64>,
    ) -> Result<Self> {
        if hole_index_per_disc.len() != spec.num_discs {
            return Err(Error::validation(format!(
                "routing lists {} holes but the robot has {} discs",
                hole_index_per_disc.len(),
                spec.num_discs
            )));
        }
        for (disc, &hole) in hole_index_per_disc.iter().enumerate() {
            if hole < 1 || hole > spec.holes_per_disc {
                return Err(Error::validation(format!(
                    "disc {}: hole index {hole} out of range 1..={}",
                    disc + 1,
                    spec.holes_per_disc
                )));
            }
        }
        if let Some(tau) = tension {
            if !(tau >= 0.0) {
                return Err(Error::validation(format!("tension must be >= 0, got {tau}")));
            }
        }
        if let Some(delta) = length_reduction {
            if !(0.0..1.0).contains(&delta) {
                return Err(Error::validation(format!(
                    "length reduction must lie in [0, 1), got {delta}"
                )));
            }
        }
        Ok(CableRouting {
            name: name.into(),
            termination_disc: hole_index_per_disc.len(),
            hole_index_per_disc,
            tension,
            length_reduction,
        })
    }

    /// Parses a routing file against a robot spec, converting units.
    pub fn from_file(spec: &RobotSpec, file: &RoutingFile) -> Result<Self> {
        CableRouting::new(
            spec,
            file.name.clone(),
            file.holes.clone(),
            file.tension_g.map(|g| g * 1e-3 * STANDARD_GRAVITY),
            file.length_reduction_pct.map(|pct| pct / 100.0),
        )
    }

    /// Same routing with a different total length reduction.
    pub fn with_length_reduction(&self, delta: f64) -> CableRouting {
        CableRouting {
            length_reduction: Some(delta),
            ..self.clone()
        }
    }

    /// Same routing with a different tension (N).
    pub fn with_tension(&self, tension: f64) -> CableRouting {
        CableRouting {
            tension: Some(tension),
            ..self.clone()
        }
    }

    /// Hole index at a station (0 = base plate, which reuses disc 1's hole).
    pub fn hole_at_station(&self, station: usize) -> usize {
        if station == 0 {
            self.hole_index_per_disc[0]
        } else {
            self.hole_index_per_disc[station - 1]
        }
    }

    /// Local hole coordinates at every station, base plate through tip.
    pub fn station_holes(&self, spec: &RobotSpec) -> Vec<Vector3<f64>> {
        (0..=spec.num_discs)
            .map(|k| {
                spec.hole_position(self.hole_at_station(k))
                    .expect("routing was validated against the spec")
            })
            .collect()
    }
}

/// Continuous local cable path `r_i(s)` with first and second derivatives.
#[derive(Debug, Clone)]
pub struct CablePath {
    /// Station arclengths, base plate through tip disc.
    stations: Vec<f64>,
    /// Exact local hole coordinates at the stations.
    knots: Vec<Vector3<f64>>,
    spline_x: CubicSpline,
    spline_y: CubicSpline,
}

impl CablePath {
    pub fn stations(&self) -> &[f64] {
        &self.stations
    }

    pub fn knots(&self) -> &[Vector3<f64>] {
        &self.knots
    }

    /// Local cable position at arclength `s`; the Z-component is zero.
    pub fn position(&self, s: f64) -> Vector3<f64> {
        Vector3::new(self.spline_x.value(s), self.spline_y.value(s), 0.0)
    }

    /// First derivative of the local cable position with respect to `s`.
    pub fn velocity(&self, s: f64) -> Vector3<f64> {
        Vector3::new(self.spline_x.derivative(s), self.spline_y.derivative(s), 0.0)
    }

    /// Second derivative of the local cable position with respect to `s`.
    pub fn acceleration(&self, s: f64) -> Vector3<f64> {
        Vector3::new(
            self.spline_x.second_derivative(s),
            self.spline_y.second_derivative(s),
            0.0,
        )
    }
}

/// Builds the C² local path through the routing's hole coordinates.
pub fn build_cable_path(spec: &RobotSpec, routing: &CableRouting) -> CablePath {
    let stations: Vec<f64> = (0..=spec.num_discs).map(|k| spec.disc_station(k)).collect();
    let knots = routing.station_holes(spec);
    let xs: Vec<f64> = knots.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = knots.iter().map(|p| p.y).collect();
    CablePath {
        spline_x: CubicSpline::natural(&stations, &xs),
        spline_y: CubicSpline::natural(&stations, &ys),
        stations,
        knots,
    }
}

/// Undeformed straight-chord cable length of each backbone segment.
///
/// Segment `i` (1-based) spans stations `i-1` to `i`; the cable inside it is
/// the chord between the two hole points of the straight robot.
pub fn undeformed_segment_chords(spec: &RobotSpec, routing: &CableRouting) -> Vec<f64> {
    let holes = routing.station_holes(spec);
    let l0 = spec.disc_spacing;
    holes
        .windows(2)
        .map(|w| {
            let planar = w[1] - w[0];
            (l0 * l0 + planar.norm_squared()).sqrt()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::{build_spec, RobotConfigFile};
    use approx::assert_relative_eq;

    fn paper_spec() -> RobotSpec {
        build_spec(&RobotConfigFile {
            backbone_length_mm: 180.0,
            backbone_diameter_mm: 3.0,
            num_discs: 10,
            hole_radius_mm: 8.0,
            holes_per_disc: 12,
            youngs_modulus_gpa: 1.1,
            poisson_ratio: 0.3,
        })
        .unwrap()
    }

    fn routing(spec: &RobotSpec, name: &str, holes: &[usize]) -> CableRouting {
        CableRouting::new(spec, name, holes.to_vec(), Some(3.924), None).unwrap()
    }

    #[test]
    fn straight_routing_gives_constant_path() {
        let spec = paper_spec();
        let r = routing(&spec, "I", &[1; 10]);
        let path = build_cable_path(&spec, &r);
        for i in 0..=120 {
            let s = i as f64 * 0.0015;
            assert_relative_eq!(
                path.position(s),
                Vector3::new(0.008, 0.0, 0.0),
                epsilon = 1e-15
            );
            assert_relative_eq!(path.velocity(s), Vector3::zeros(), epsilon = 1e-13);
            assert_relative_eq!(path.acceleration(s), Vector3::zeros(), epsilon = 1e-11);
        }
    }

    #[test]
    fn path_reproduces_station_holes() {
        let spec = paper_spec();
        for holes in [
            vec![4, 3, 2, 1, 12, 11, 10, 9, 8, 7],
            vec![4, 5, 6, 7, 8, 8, 7, 6, 5, 4],
            vec![10, 10, 10, 10, 10, 10, 9, 8, 7, 6],
        ] {
            let r = routing(&spec, "x", &holes);
            let path = build_cable_path(&spec, &r);
            for (s, knot) in path.stations().iter().zip(path.knots()) {
                assert_relative_eq!(path.position(*s), *knot, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn helical_path_stays_near_the_hole_circle() {
        let spec = paper_spec();
        let r = routing(&spec, "II", &[4, 3, 2, 1, 12, 11, 10, 9, 8, 7]);
        let path = build_cable_path(&spec, &r);
        // Between knots the spline bows inward from the hole circle by at
        // most the 30-degree chord sagitta a (1 - cos 15deg).
        let sagitta = spec.hole_radius * (1.0 - (15.0_f64.to_radians()).cos());
        let mut worst: f64 = 0.0;
        for i in 0..=2000 {
            let s = spec.disc_spacing + (spec.backbone_length - spec.disc_spacing) * i as f64
                / 2000.0;
            worst = worst.max((path.position(s).norm() - spec.hole_radius).abs());
        }
        assert!(
            worst < sagitta,
            "radial deviation {worst:.3e} exceeds chord bound {sagitta:.3e}"
        );
    }

    #[test]
    fn routing_vi_maps_table_holes() {
        let spec = paper_spec();
        let holes = [4, 5, 6, 7, 8, 8, 7, 6, 5, 4];
        let r = routing(&spec, "VI", &holes);
        let path = build_cable_path(&spec, &r);
        // Station 0 repeats disc 1's hole; discs follow the table row.
        for (station, knot) in path.knots().iter().enumerate() {
            let hole = if station == 0 {
                holes[0]
            } else {
                holes[station - 1]
            };
            assert_relative_eq!(*knot, spec.hole_position(hole).unwrap(), epsilon = 1e-15);
        }
    }

    #[test]
    fn interpolant_stays_within_the_disc() {
        let spec = paper_spec();
        for holes in [
            vec![1; 10],
            vec![4, 3, 2, 1, 12, 11, 10, 9, 8, 7],
            vec![4, 3, 2, 1, 1, 1, 1, 2, 3, 4],
            vec![10, 10, 10, 10, 10, 10, 9, 8, 7, 6],
            vec![4, 3, 2, 1, 12, 11, 10, 9, 9, 9],
            vec![4, 5, 6, 7, 8, 8, 7, 6, 5, 4],
        ] {
            let r = routing(&spec, "x", &holes);
            let path = build_cable_path(&spec, &r);
            for i in 0..=4000 {
                let s = spec.backbone_length * i as f64 / 4000.0;
                let radius = path.position(s).norm();
                assert!(
                    radius <= spec.hole_radius * (1.0 + 1e-9),
                    "path radius {radius:.9e} leaves the hole circle at s = {s:.4} (holes {holes:?})"
                );
            }
        }
    }

    #[test]
    fn segment_chords_match_hand_geometry() {
        let spec = paper_spec();
        let l0 = spec.disc_spacing;

        let straight = routing(&spec, "I", &[1; 10]);
        for chord in undeformed_segment_chords(&spec, &straight) {
            assert_relative_eq!(chord, l0, max_relative = 1e-12);
        }

        // Helical: adjacent holes 30 degrees apart from disc 1 onward; the
        // base-to-disc-1 segment is straight by the entry convention.
        let helical = routing(&spec, "II", &[4, 3, 2, 1, 12, 11, 10, 9, 8, 7]);
        let chords = undeformed_segment_chords(&spec, &helical);
        assert_relative_eq!(chords[0], l0, max_relative = 1e-12);
        let expected =
            (l0 * l0 + (2.0 * spec.hole_radius * 15.0_f64.to_radians().sin()).powi(2)).sqrt();
        for chord in &chords[1..] {
            assert_relative_eq!(*chord, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn invalid_hole_indices_are_rejected() {
        let spec = paper_spec();
        assert!(CableRouting::new(&spec, "bad", vec![0; 10], None, None).is_err());
        assert!(CableRouting::new(&spec, "bad", vec![13; 10], None, None).is_err());
        assert!(CableRouting::new(&spec, "short", vec![1; 9], None, None).is_err());
        assert!(CableRouting::new(&spec, "neg", vec![1; 10], Some(-1.0), None).is_err());
        assert!(CableRouting::new(&spec, "delta", vec![1; 10], None, Some(1.0)).is_err());
    }
}
