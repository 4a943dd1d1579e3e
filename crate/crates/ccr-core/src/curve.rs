//! Solved backbone poses and cable-length measurement.

use nalgebra::{Matrix3, Vector3};

use crate::robot::RobotSpec;
use crate::routing::CablePath;

/// One sampled cross-section of the backbone.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSample {
    /// Undeformed arclength of the sample.
    pub s: f64,
    /// World position of the backbone centerline.
    pub position: Vector3<f64>,
    /// Rotation from the local cross-section frame to the world frame.
    pub rotation: Matrix3<f64>,
}

/// Strain fields of the rod model at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrainSample {
    /// Linear strain; `[0, 0, 1]` for the undeformed rod.
    pub v: Vector3<f64>,
    /// Curvature and twist (1/m).
    pub u: Vector3<f64>,
}

/// A solved backbone pose: sampled frames plus the disc stations.
///
/// `station_indices` locates the base plate and each disc inside `samples`
/// (base plate first). Strain fields are present only for rod-model
/// solutions; the optimization model is purely kinematic.
#[derive(Debug, Clone, PartialEq)]
pub struct BackboneCurve {
    pub samples: Vec<CurveSample>,
    pub strains: Option<Vec<StrainSample>>,
    pub station_indices: Vec<usize>,
}

impl BackboneCurve {
    /// The undeformed (straight) pose with frames at every station.
    pub fn straight(spec: &RobotSpec) -> BackboneCurve {
        let samples = (0..=spec.num_discs)
            .map(|k| CurveSample {
                s: spec.disc_station(k),
                position: Vector3::new(0.0, 0.0, spec.disc_station(k)),
                rotation: Matrix3::identity(),
            })
            .collect();
        BackboneCurve {
            samples,
            strains: None,
            station_indices: (0..=spec.num_discs).collect(),
        }
    }

    /// Station frames, base plate first.
    pub fn stations(&self) -> impl Iterator<Item = &CurveSample> {
        self.station_indices.iter().map(|&i| &self.samples[i])
    }

    /// Disc centers (excluding the base plate), base to tip.
    pub fn disc_centers(&self) -> Vec<Vector3<f64>> {
        self.stations().skip(1).map(|f| f.position).collect()
    }

    /// The tip sample.
    pub fn tip(&self) -> &CurveSample {
        self.samples.last().expect("curve has samples")
    }

    /// The curve observed from a rigidly displaced world frame.
    pub fn rigid_transformed(&self, rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> Self {
        BackboneCurve {
            samples: self
                .samples
                .iter()
                .map(|f| CurveSample {
                    s: f.s,
                    position: rotation * f.position + translation,
                    rotation: rotation * f.rotation,
                })
                .collect(),
            strains: self.strains.clone(),
            station_indices: self.station_indices.clone(),
        }
    }

    /// Largest deviation of any sample rotation from orthonormality
    /// (Frobenius norm of `R^T R - I`).
    pub fn max_orthonormality_defect(&self) -> f64 {
        self.samples
            .iter()
            .map(|f| (f.rotation.transpose() * f.rotation - Matrix3::identity()).norm())
            .fold(0.0, f64::max)
    }
}

/// Length of the physical cable inside the robot for a solved pose.
///
/// The cable is straight between discs, so this is the polyline length
/// through the world-frame hole points at the stations, base plate to tip.
pub fn cable_length(curve: &BackboneCurve, path: &CablePath, spec: &RobotSpec) -> f64 {
    debug_assert_eq!(curve.station_indices.len(), spec.num_discs + 1);
    debug_assert_eq!(path.knots().len(), spec.num_discs + 1);
    let points: Vec<Vector3<f64>> = curve
        .stations()
        .zip(path.knots())
        .map(|(frame, hole)| frame.position + frame.rotation * hole)
        .collect();
    points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::{build_spec, RobotConfigFile};
    use crate::routing::{build_cable_path, CableRouting};
    use approx::assert_relative_eq;
    use rand::{rngs::StdRng, Rng, SeedableRng};

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

    fn random_rotation(rng: &mut StdRng) -> Matrix3<f64> {
        let axis = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        )
        .normalize();
        let angle = rng.random_range(-3.0..3.0);
        nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle)
            .into_inner()
    }

    #[test]
    fn straight_cable_measures_the_backbone_length() {
        let spec = paper_spec();
        let routing = CableRouting::new(&spec, "I", vec![1; 10], None, None).unwrap();
        let path = build_cable_path(&spec, &routing);
        let curve = BackboneCurve::straight(&spec);
        assert_relative_eq!(cable_length(&curve, &path, &spec), 0.180, epsilon = 1e-12);
    }

    #[test]
    fn non_constant_routings_are_longer_when_straight() {
        let spec = paper_spec();
        let curve = BackboneCurve::straight(&spec);
        for holes in [
            vec![4, 3, 2, 1, 12, 11, 10, 9, 8, 7],
            vec![4, 3, 2, 1, 1, 1, 1, 2, 3, 4],
            vec![10, 10, 10, 10, 10, 10, 9, 8, 7, 6],
            vec![4, 3, 2, 1, 12, 11, 10, 9, 9, 9],
            vec![4, 5, 6, 7, 8, 8, 7, 6, 5, 4],
        ] {
            let routing = CableRouting::new(&spec, "x", holes, None, None).unwrap();
            let path = build_cable_path(&spec, &routing);
            // Brute-force polyline through the undeformed hole points.
            let holes_world = routing.station_holes(&spec);
            let brute: f64 = holes_world
                .windows(2)
                .enumerate()
                .map(|(_, w)| {
                    let dz = spec.disc_spacing;
                    let planar = w[1] - w[0];
                    (dz * dz + planar.norm_squared()).sqrt()
                })
                .sum();
            let measured = cable_length(&curve, &path, &spec);
            assert_relative_eq!(measured, brute, max_relative = 1e-12);
            assert!(measured > spec.backbone_length);
        }
    }

    #[test]
    fn cable_length_is_rigid_invariant() {
        let spec = paper_spec();
        let routing =
            CableRouting::new(&spec, "VI", vec![4, 5, 6, 7, 8, 8, 7, 6, 5, 4], None, None)
                .unwrap();
        let path = build_cable_path(&spec, &routing);
        let curve = BackboneCurve::straight(&spec);
        let base = cable_length(&curve, &path, &spec);
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..10 {
            let q = random_rotation(&mut rng);
            let t = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let moved = curve.rigid_transformed(&q, &t);
            assert_relative_eq!(
                cable_length(&moved, &path, &spec),
                base,
                max_relative = 1e-10
            );
        }
    }
}
