//! Robot geometry and material stiffness.
//!
//! A CCR is a circular elastic backbone of length `L` carrying `num_discs`
//! equally spaced spacer discs. Disc `k` sits at arclength `s = k * l_0`
//! with `l_0 = L / num_discs`; the base plate at `s = 0` is the cable entry
//! and is not counted as a disc. Each disc has `holes_per_disc` equally
//! spaced holes at radius `a` from its center, hole 1 on the local +X axis,
//! numbered counterclockwise viewed from +Z.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard gravity used to convert gram-loads into Newtons.
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Robot configuration file schema. Lengths in millimetres, modulus in GPa.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotConfigFile {
    pub backbone_length_mm: f64,
    pub backbone_diameter_mm: f64,
    pub num_discs: usize,
    pub hole_radius_mm: f64,
    pub holes_per_disc: usize,
    pub youngs_modulus_gpa: f64,
    pub poisson_ratio: f64,
}

impl RobotConfigFile {
    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::Parse {
            context: "robot config".to_string(),
            message: e.to_string(),
        })
    }
}

/// Stiffness matrices of the backbone cross-section.
///
/// `K_se = diag(GA, GA, EA)` resists shear and extension, `K_bt =
/// diag(EI_xx, EI_yy, GI_zz)` resists bending and torsion.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialStiffness {
    pub shear_extension: Matrix3<f64>,
    pub bending_torsion: Matrix3<f64>,
    pub shear_modulus: f64,
    pub area: f64,
    pub second_moment_x: f64,
    pub second_moment_y: f64,
    pub second_moment_z: f64,
}

impl MaterialStiffness {
    /// Derives the stiffness of a solid circular section.
    pub fn circular(diameter: f64, youngs_modulus: f64, poisson_ratio: f64) -> Self {
        let shear_modulus = youngs_modulus / (2.0 * (1.0 + poisson_ratio));
        let area = std::f64::consts::PI * diameter * diameter / 4.0;
        let i_xx = std::f64::consts::PI * diameter.powi(4) / 64.0;
        let i_yy = i_xx;
        let i_zz = i_xx + i_yy;
        MaterialStiffness {
            shear_extension: Matrix3::from_diagonal(&Vector3::new(
                shear_modulus * area,
                shear_modulus * area,
                youngs_modulus * area,
            )),
            bending_torsion: Matrix3::from_diagonal(&Vector3::new(
                youngs_modulus * i_xx,
                youngs_modulus * i_yy,
                shear_modulus * i_zz,
            )),
            shear_modulus,
            area,
            second_moment_x: i_xx,
            second_moment_y: i_yy,
            second_moment_z: i_zz,
        }
    }
}

/// Validated geometry and material constants for one CCR, in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotSpec {
    pub backbone_length: f64,
    pub backbone_diameter: f64,
    pub num_discs: usize,
    pub disc_spacing: f64,
    pub hole_radius: f64,
    pub holes_per_disc: usize,
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub stiffness: MaterialStiffness,
}

impl RobotSpec {
    /// Builds a validated spec from SI quantities.
    pub fn new(
        backbone_length: f64,
        backbone_diameter: f64,
        num_discs: usize,
        hole_radius: f64,
        holes_per_disc: usize,
        youngs_modulus: f64,
        poisson_ratio: f64,
    ) -> Result<Self> {
        if !(backbone_length > 0.0) {
            return Err(Error::validation("backbone_length must be positive"));
        }
        if !(backbone_diameter > 0.0) {
            return Err(Error::validation("backbone_diameter must be positive"));
        }
        if !(hole_radius > 0.0) {
            return Err(Error::validation("hole_radius must be positive"));
        }
        if num_discs < 2 {
            return Err(Error::validation("num_discs must be at least 2"));
        }
        if holes_per_disc < 1 {
            return Err(Error::validation("holes_per_disc must be at least 1"));
        }
        if !(youngs_modulus > 0.0) {
            return Err(Error::validation("youngs_modulus must be positive"));
        }
        if !(poisson_ratio > 0.0 && poisson_ratio < 0.5) {
            return Err(Error::validation(format!(
                "poisson_ratio must lie in (0, 0.5), got {poisson_ratio}"
            )));
        }
        let disc_spacing = backbone_length / num_discs as f64;
        let stiffness =
            MaterialStiffness::circular(backbone_diameter, youngs_modulus, poisson_ratio);
        Ok(RobotSpec {
            backbone_length,
            backbone_diameter,
            num_discs,
            disc_spacing,
            hole_radius,
            holes_per_disc,
            youngs_modulus,
            poisson_ratio,
            stiffness,
        })
    }

    /// Arclength of disc `k` (1-based); `k = 0` is the base plate.
    pub fn disc_station(&self, k: usize) -> f64 {
        k as f64 * self.disc_spacing
    }

    /// Number of backbone segments between consecutive stations
    /// (base plate through tip disc).
    pub fn num_segments(&self) -> usize {
        self.num_discs
    }

    /// Local in-plane position of a hole (1-based index).
    ///
    /// Hole 1 lies on the local +X axis; numbering advances
    /// counterclockwise viewed from +Z. The Z-component is always zero.
    pub fn hole_position(&self, hole_index: usize) -> Result<Vector3<f64>> {
        if hole_index < 1 || hole_index > self.holes_per_disc {
            return Err(Error::validation(format!(
                "hole index {hole_index} out of range 1..={}",
                self.holes_per_disc
            )));
        }
        let angle = self.hole_angle(hole_index);
        Ok(Vector3::new(
            self.hole_radius * angle.cos(),
            self.hole_radius * angle.sin(),
            0.0,
        ))
    }

    /// Angular position of a hole about the disc normal, in radians.
    pub fn hole_angle(&self, hole_index: usize) -> f64 {
        2.0 * std::f64::consts::PI * (hole_index as f64 - 1.0) / self.holes_per_disc as f64
    }
}

/// Parses and validates a robot configuration, converting to SI units.
pub fn build_spec(config: &RobotConfigFile) -> Result<RobotSpec> {
    RobotSpec::new(
        config.backbone_length_mm * 1e-3,
        config.backbone_diameter_mm * 1e-3,
        config.num_discs,
        config.hole_radius_mm * 1e-3,
        config.holes_per_disc,
        config.youngs_modulus_gpa * 1e9,
        config.poisson_ratio,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn paper_config() -> RobotConfigFile {
        RobotConfigFile {
            backbone_length_mm: 180.0,
            backbone_diameter_mm: 3.0,
            num_discs: 10,
            hole_radius_mm: 8.0,
            holes_per_disc: 12,
            youngs_modulus_gpa: 1.1,
            poisson_ratio: 0.3,
        }
    }

    #[test]
    fn paper_geometry_is_valid() {
        let spec = build_spec(&paper_config()).unwrap();
        assert_relative_eq!(spec.backbone_length, 0.180);
        assert_relative_eq!(spec.disc_spacing, 0.018);
        assert_relative_eq!(
            spec.disc_spacing * spec.num_discs as f64,
            spec.backbone_length,
            max_relative = 1e-12
        );
    }

    #[test]
    fn shear_modulus_follows_poisson_ratio() {
        let spec = build_spec(&paper_config()).unwrap();
        // G = E / (2 (1 + nu)) = 1.1e9 / 2.6
        assert_relative_eq!(
            spec.stiffness.shear_modulus,
            1.1e9 / 2.6,
            max_relative = 1e-12
        );
        assert_relative_eq!(spec.stiffness.shear_modulus, 4.2307692e8, max_relative = 1e-6);
    }

    #[test]
    fn stiffness_matrices_are_consistent() {
        let spec = build_spec(&paper_config()).unwrap();
        let st = &spec.stiffness;
        let g = st.shear_modulus;
        let e = spec.youngs_modulus;
        assert_relative_eq!(st.shear_extension[(0, 0)], g * st.area, max_relative = 1e-12);
        assert_relative_eq!(st.shear_extension[(1, 1)], g * st.area, max_relative = 1e-12);
        assert_relative_eq!(st.shear_extension[(2, 2)], e * st.area, max_relative = 1e-12);
        assert_relative_eq!(
            st.bending_torsion[(0, 0)],
            e * st.second_moment_x,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            st.bending_torsion[(2, 2)],
            g * st.second_moment_z,
            max_relative = 1e-12
        );
        // Circular section: I_xx = I_yy, I_zz = I_xx + I_yy.
        assert_relative_eq!(st.second_moment_x, st.second_moment_y, max_relative = 1e-12);
        assert_relative_eq!(
            st.second_moment_z,
            st.second_moment_x + st.second_moment_y,
            max_relative = 1e-12
        );
        for i in 0..3 {
            assert!(st.shear_extension[(i, i)] > 0.0);
            assert!(st.bending_torsion[(i, i)] > 0.0);
        }
    }

    #[test]
    fn invalid_poisson_ratio_is_rejected() {
        let mut config = paper_config();
        config.poisson_ratio = 0.6;
        assert!(matches!(build_spec(&config), Err(Error::Validation(_))));
    }

    #[test]
    fn malformed_config_names_the_field() {
        let err = RobotConfigFile::from_json(r#"{"backbone_length_mm": 180.0}"#).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("backbone_diameter_mm"), "{message}");
    }

    #[test]
    fn hole_positions_match_the_numbering_convention() {
        let spec = build_spec(&paper_config()).unwrap();
        let h1 = spec.hole_position(1).unwrap();
        assert_relative_eq!(h1, Vector3::new(0.008, 0.0, 0.0), epsilon = 1e-15);
        // Hole 4 of 12 is a quarter turn counterclockwise.
        let h4 = spec.hole_position(4).unwrap();
        assert_relative_eq!(h4, Vector3::new(0.0, 0.008, 0.0), epsilon = 1e-12);
        // Hole 7 of 12 is diametrically opposite hole 1.
        let h7 = spec.hole_position(7).unwrap();
        assert_relative_eq!(h7, Vector3::new(-0.008, 0.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn hole_positions_are_injective_with_norm_a() {
        let spec = build_spec(&paper_config()).unwrap();
        let positions: Vec<_> = (1..=spec.holes_per_disc)
            .map(|k| spec.hole_position(k).unwrap())
            .collect();
        for (i, p) in positions.iter().enumerate() {
            assert_relative_eq!(p.norm(), spec.hole_radius, max_relative = 1e-12);
            for q in positions.iter().skip(i + 1) {
                assert!((p - q).norm() > 1e-6);
            }
        }
    }

    #[test]
    fn out_of_range_hole_index_is_rejected() {
        let spec = build_spec(&paper_config()).unwrap();
        assert!(spec.hole_position(0).is_err());
        assert!(spec.hole_position(13).is_err());
    }
}
