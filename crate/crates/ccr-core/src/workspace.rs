//! Cross-model comparison and workspace sampling.
//!
//! The rod model is driven by a cable tension, the optimization model by a
//! total cable-length reduction. The bridge between the two measures the
//! cable length on a solved rod pose and converts it into the fractional
//! shortening the optimizer consumes.

use std::time::Instant;

use nalgebra::Vector3;

use crate::cosserat::{shoot, CosseratSolution, ShootingOptions};
use crate::curve::{cable_length, BackboneCurve};
use crate::error::{Error, Result};
use crate::fourbar::{propagate, FourbarPose};
use crate::optim::AugmentedLagrangianOptions;
use crate::robot::RobotSpec;
use crate::routing::{build_cable_path, CableRouting};

/// Which model produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverId {
    Cosserat,
    Fourbar,
}

impl SolverId {
    pub fn name(&self) -> &'static str {
        match self {
            SolverId::Cosserat => "cosserat",
            SolverId::Fourbar => "fourbar",
        }
    }
}

impl std::fmt::Display for SolverId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Converts a cable tension into the total cable-length reduction it
/// produces, by measuring the solved rod pose.
pub fn tension_to_delta(
    routing: &CableRouting,
    spec: &RobotSpec,
    tension: f64,
    options: &ShootingOptions,
) -> Result<f64> {
    let path = build_cable_path(spec, routing);
    let solution = shoot(&[path.clone()], &[tension], spec, options)?;
    let undeformed = cable_length(&BackboneCurve::straight(spec), &path, spec);
    let deformed = cable_length(&solution.curve, &path, spec);
    Ok(1.0 - deformed / undeformed)
}

/// Inverts the tension–shortening bridge by bisection.
///
/// Finds the tension at which the rod model's cable shortens by
/// `target_delta`, warm-starting successive solves up the bracket.
pub fn tension_for_delta(
    routing: &CableRouting,
    spec: &RobotSpec,
    target_delta: f64,
    options: &ShootingOptions,
) -> Result<f64> {
    if !(0.0..1.0).contains(&target_delta) {
        return Err(Error::validation(format!(
            "target length reduction must lie in [0, 1), got {target_delta}"
        )));
    }
    if target_delta == 0.0 {
        return Ok(0.0);
    }
    let path = build_cable_path(spec, routing);
    let undeformed = cable_length(&BackboneCurve::straight(spec), &path, spec);
    let mut warm = options.clone();
    let delta_at = |tau: f64, warm: &mut ShootingOptions| -> Result<f64> {
        let solution = shoot(&[path.clone()], &[tau], spec, warm)?;
        warm.initial_guess = Some(solution.shooting.guess);
        Ok(1.0 - cable_length(&solution.curve, &path, spec) / undeformed)
    };

    // Bracket the target, then bisect.
    let mut hi = 1.0;
    let mut hi_delta = delta_at(hi, &mut warm)?;
    let mut expansions = 0;
    while hi_delta < target_delta {
        hi *= 2.0;
        hi_delta = delta_at(hi, &mut warm)?;
        expansions += 1;
        if expansions > 24 {
            return Err(Error::validation(format!(
                "could not bracket length reduction {target_delta}"
            )));
        }
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let mid_delta = delta_at(mid, &mut warm)?;
        if mid_delta < target_delta {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Per-disc agreement between the two models at one actuation level.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub routing_name: String,
    /// Cable tension fed to the rod model (N).
    pub tension: f64,
    /// Bridged length reduction fed to the optimizer.
    pub delta: f64,
    /// Euclidean distance between the models' disc centers, base to tip (m).
    pub per_disc_errors: Vec<f64>,
    /// Largest per-disc error (m).
    pub max_error: f64,
    /// Largest error as a percentage of the backbone length.
    pub max_error_pct_of_length: f64,
}

/// A comparison plus both solved poses, for overlay plotting.
#[derive(Debug, Clone)]
pub struct ModelComparison {
    pub report: ComparisonReport,
    pub cosserat: CosseratSolution,
    pub fourbar: FourbarPose,
}

/// Runs both models at one tension and reports per-disc disagreement.
///
/// The rod model runs at `tension`; its solved pose fixes the cable-length
/// reduction the optimizer runs at. Errors are measured at the disc
/// stations only.
pub fn compare_models(
    routing: &CableRouting,
    spec: &RobotSpec,
    tension: f64,
    shooting: &ShootingOptions,
    optimizer: &AugmentedLagrangianOptions,
) -> Result<ModelComparison> {
    let path = build_cable_path(spec, routing);
    let cosserat = shoot(&[path.clone()], &[tension], spec, shooting).map_err(|e| {
        Error::Solver {
            solver: "cosserat",
            source: Box::new(e),
        }
    })?;
    let undeformed = cable_length(&BackboneCurve::straight(spec), &path, spec);
    let delta = 1.0 - cable_length(&cosserat.curve, &path, spec) / undeformed;

    let fourbar = propagate(&routing.with_length_reduction(delta), spec, optimizer).map_err(
        |e| Error::Solver {
            solver: "fourbar",
            source: Box::new(e),
        },
    )?;

    let per_disc_errors: Vec<f64> = cosserat
        .curve
        .disc_centers()
        .iter()
        .zip(fourbar.curve.disc_centers().iter())
        .map(|(a, b)| (a - b).norm())
        .collect();
    let max_error = per_disc_errors.iter().copied().fold(0.0, f64::max);
    let report = ComparisonReport {
        routing_name: routing.name.clone(),
        tension,
        delta,
        max_error,
        max_error_pct_of_length: 100.0 * max_error / spec.backbone_length,
        per_disc_errors,
    };
    Ok(ModelComparison {
        report,
        cosserat,
        fourbar,
    })
}

/// One workspace sample: the pose at a single actuation value.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkspaceSample {
    pub actuation: f64,
    pub tip: Vector3<f64>,
    pub disc_centers: Vec<Vector3<f64>>,
}

/// A grid point the solver could not handle.
#[derive(Debug, Clone, PartialEq)]
pub struct FailedSample {
    pub grid_index: usize,
    pub actuation: f64,
    pub message: String,
}

/// Tip and disc-center cloud over an actuation sweep.
#[derive(Debug, Clone)]
pub struct WorkspaceCloud {
    pub routing_name: String,
    pub solver: SolverId,
    pub samples: Vec<WorkspaceSample>,
    pub failures: Vec<FailedSample>,
    /// Wall-clock generation time; not part of the deterministic payload.
    pub wall_time_s: f64,
}

/// Sweeps one model over an actuation grid.
///
/// Grid values are length reductions for the optimizer and tensions (N)
/// for the rod model. Rod solves warm-start from the previous success.
/// Failed points are recorded and skipped unless they exceed half the grid.
pub fn sample_workspace(
    routing: &CableRouting,
    spec: &RobotSpec,
    solver: SolverId,
    grid: &[f64],
    shooting: &ShootingOptions,
    optimizer: &AugmentedLagrangianOptions,
) -> Result<WorkspaceCloud> {
    if grid.is_empty() {
        return Err(Error::validation("actuation grid is empty"));
    }
    for &value in grid {
        let valid = match solver {
            SolverId::Cosserat => value >= 0.0 && value.is_finite(),
            SolverId::Fourbar => (0.0..1.0).contains(&value),
        };
        if !valid {
            return Err(Error::validation(format!(
                "actuation value {value} is outside the {solver} model's validity"
            )));
        }
    }

    let started = Instant::now();
    let path = build_cable_path(spec, routing);
    let mut samples = Vec::with_capacity(grid.len());
    let mut failures = Vec::new();
    let mut warm = shooting.clone();

    for (grid_index, &actuation) in grid.iter().enumerate() {
        let solved: Result<(Vector3<f64>, Vec<Vector3<f64>>)> = match solver {
            SolverId::Cosserat => shoot(&[path.clone()], &[actuation], spec, &warm).map(|sol| {
                warm.initial_guess = Some(sol.shooting.guess);
                (sol.curve.tip().position, sol.curve.disc_centers())
            }),
            SolverId::Fourbar => {
                propagate(&routing.with_length_reduction(actuation), spec, optimizer)
                    .map(|pose| (pose.curve.tip().position, pose.curve.disc_centers()))
            }
        };
        match solved {
            Ok((tip, disc_centers)) => samples.push(WorkspaceSample {
                actuation,
                tip,
                disc_centers,
            }),
            Err(e) => failures.push(FailedSample {
                grid_index,
                actuation,
                message: e.to_string(),
            }),
        }
    }

    if failures.len() * 2 > grid.len() {
        return Err(Error::WorkspaceFailed {
            failed: failures.len(),
            total: grid.len(),
        });
    }
    Ok(WorkspaceCloud {
        routing_name: routing.name.clone(),
        solver,
        samples,
        failures,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Uniform actuation grid, inclusive of both ends.
pub fn linear_grid(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if count < 1 {
        return Err(Error::validation("grid needs at least one point"));
    }
    if !(min.is_finite() && max.is_finite()) || max < min {
        return Err(Error::validation(format!("invalid grid range {min}..{max}")));
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    Ok((0..count)
        .map(|i| min + (max - min) * i as f64 / (count - 1) as f64)
        .collect())
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

    fn straight_routing(spec: &RobotSpec) -> CableRouting {
        CableRouting::new(spec, "I", vec![1; 10], Some(3.924), Some(0.055)).unwrap()
    }

    #[test]
    fn zero_tension_bridges_to_zero_delta() {
        let spec = paper_spec();
        let routing = straight_routing(&spec);
        let delta =
            tension_to_delta(&routing, &spec, 0.0, &ShootingOptions::default()).unwrap();
        assert_eq!(delta, 0.0);
    }

    #[test]
    fn bridge_is_monotone_in_tension() {
        let spec = paper_spec();
        let routing = straight_routing(&spec);
        let mut options = ShootingOptions::default();
        let mut previous = -1.0;
        for i in 0..6 {
            let tau = 5.0 * i as f64 / 5.0;
            let delta = tension_to_delta(&routing, &spec, tau, &options).unwrap();
            assert!(
                delta >= previous,
                "bridge not monotone at tau = {tau}: {delta} < {previous}"
            );
            previous = delta;
            options.initial_guess = None;
        }
    }

    #[test]
    fn bridge_inversion_recovers_the_tension() {
        let spec = paper_spec();
        let routing = straight_routing(&spec);
        let options = ShootingOptions::default();
        let delta = tension_to_delta(&routing, &spec, 2.0, &options).unwrap();
        let tau = tension_for_delta(&routing, &spec, delta, &options).unwrap();
        assert_relative_eq!(tau, 2.0, epsilon = 1e-4);
    }

    #[test]
    fn comparison_at_zero_tension_is_exact() {
        let spec = paper_spec();
        let routing = straight_routing(&spec);
        let comparison = compare_models(
            &routing,
            &spec,
            0.0,
            &ShootingOptions::default(),
            &AugmentedLagrangianOptions::default(),
        )
        .unwrap();
        assert_eq!(comparison.report.per_disc_errors.len(), 10);
        for error in &comparison.report.per_disc_errors {
            assert!(*error < 1e-9, "disc error {error}");
        }
        assert!(comparison.report.max_error < 1e-9);
        assert_eq!(comparison.report.delta, 0.0);
    }

    #[test]
    fn comparison_report_is_internally_consistent() {
        let spec = paper_spec();
        let routing = straight_routing(&spec);
        let comparison = compare_models(
            &routing,
            &spec,
            3.924,
            &ShootingOptions::default(),
            &AugmentedLagrangianOptions::default(),
        )
        .unwrap();
        let report = &comparison.report;
        let recomputed_max = report.per_disc_errors.iter().copied().fold(0.0, f64::max);
        assert_eq!(report.max_error, recomputed_max);
        assert_relative_eq!(
            report.max_error_pct_of_length,
            100.0 * report.max_error / spec.backbone_length,
            max_relative = 1e-12
        );
        // Distances are symmetric under label swap by construction; check
        // against a manual recomputation with the operands flipped.
        for ((a, b), err) in comparison
            .fourbar
            .curve
            .disc_centers()
            .iter()
            .zip(comparison.cosserat.curve.disc_centers().iter())
            .zip(report.per_disc_errors.iter())
        {
            assert_relative_eq!((a - b).norm(), *err, max_relative = 1e-12);
        }
    }

    #[test]
    fn single_point_grid_samples_the_straight_pose() {
        let spec = paper_spec();
        let routing = straight_routing(&spec);
        let cloud = sample_workspace(
            &routing,
            &spec,
            SolverId::Fourbar,
            &[0.0],
            &ShootingOptions::default(),
            &AugmentedLagrangianOptions::default(),
        )
        .unwrap();
        assert_eq!(cloud.samples.len(), 1);
        assert!(cloud.failures.is_empty());
        assert_relative_eq!(
            cloud.samples[0].tip,
            Vector3::new(0.0, 0.0, spec.backbone_length),
            epsilon = 1e-9
        );
    }

    #[test]
    fn workspace_tips_vary_continuously() {
        let spec = paper_spec();
        let routing = straight_routing(&spec);
        let grid = linear_grid(0.0, 0.08, 40).unwrap();
        let cloud = sample_workspace(
            &routing,
            &spec,
            SolverId::Fourbar,
            &grid,
            &ShootingOptions::default(),
            &AugmentedLagrangianOptions::default(),
        )
        .unwrap();
        assert_eq!(cloud.samples.len(), 40);
        for pair in cloud.samples.windows(2) {
            let jump = (pair[1].tip - pair[0].tip).norm();
            assert!(
                jump < 0.05 * spec.backbone_length,
                "tip jumped {jump:.4e} m between adjacent samples"
            );
        }
    }

    #[test]
    fn invalid_grid_values_fail_fast() {
        let spec = paper_spec();
        let routing = straight_routing(&spec);
        let shooting = ShootingOptions::default();
        let optimizer = AugmentedLagrangianOptions::default();
        assert!(sample_workspace(
            &routing,
            &spec,
            SolverId::Fourbar,
            &[0.0, 1.5],
            &shooting,
            &optimizer
        )
        .is_err());
        assert!(sample_workspace(
            &routing,
            &spec,
            SolverId::Cosserat,
            &[-1.0],
            &shooting,
            &optimizer
        )
        .is_err());
    }

    #[test]
    fn grids_are_inclusive_and_sized() {
        let grid = linear_grid(0.0, 0.08, 5).unwrap();
        assert_eq!(grid.len(), 5);
        assert_relative_eq!(grid[0], 0.0);
        assert_relative_eq!(grid[4], 0.08);
        assert_eq!(linear_grid(0.3, 0.3, 1).unwrap(), vec![0.3]);
        assert!(linear_grid(0.0, 1.0, 0).is_err());
        assert!(linear_grid(1.0, 0.0, 3).is_err());
    }
}
