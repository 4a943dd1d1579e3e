//! Sequential four-bar optimization model of the backbone.
//!
//! Each backbone segment between consecutive stations is discretized as a
//! spatial four-bar linkage: the known disc center and cable hole form the
//! fixed link, the next disc center and hole form the coupler. The next
//! disc's pose minimizes the two squared coupler angles subject to the
//! link-length constraints, and the solved coupler becomes the fixed link
//! of the following segment, base to tip.

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};

use crate::curve::{BackboneCurve, CurveSample};
use crate::error::{Error, Result};
use crate::optim::{
    minimize_equality_constrained, AugmentedLagrangianOptions, EqualityConstrained,
};
use crate::robot::RobotSpec;
use crate::routing::{undeformed_segment_chords, CableRouting};

/// Cross products smaller than this are treated as degenerate when
/// constructing virtual points.
const DEGENERATE_CROSS: f64 = 1e-12;

/// One segment of the discretized backbone, ready to solve.
///
/// Capital quantities are known: the deformed current station and the
/// undeformed placement of the next disc in the current frame.
#[derive(Debug, Clone)]
pub struct SegmentProblem {
    /// Deformed center of the current station.
    pub base_center: Vector3<f64>,
    /// Deformed cable hole of the current station.
    pub base_anchor: Vector3<f64>,
    /// Undeformed placement of the next disc center.
    pub next_center: Vector3<f64>,
    /// Undeformed placement of the next disc's cable hole.
    pub next_anchor: Vector3<f64>,
    /// Backbone length of the segment.
    pub backbone_length: f64,
    /// Deformed cable length inside the segment.
    pub cable_length: f64,
    /// Hole distance from the disc center.
    pub hole_offset: f64,
    /// Angular position of the cable hole on the next disc.
    pub hole_angle: f64,
    /// Backbone tangent at the current station (completes the disc frame).
    pub base_tangent: Vector3<f64>,
}

impl SegmentProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        base_center: Vector3<f64>,
        base_anchor: Vector3<f64>,
        next_center: Vector3<f64>,
        next_anchor: Vector3<f64>,
        backbone_length: f64,
        cable_length: f64,
        hole_offset: f64,
        hole_angle: f64,
        base_tangent: Vector3<f64>,
    ) -> Result<Self> {
        let anchor_offset = (base_center - base_anchor).norm();
        if (anchor_offset - hole_offset).abs() > 1e-10 {
            return Err(Error::validation(format!(
                "base anchor sits {anchor_offset:.12e} m from the center, expected {hole_offset:.12e}"
            )));
        }
        if cable_length > backbone_length + 2.0 * hole_offset {
            return Err(Error::validation(format!(
                "segment cable length {cable_length:.6e} m exceeds the geometric bound"
            )));
        }
        Ok(SegmentProblem {
            base_center,
            base_anchor,
            next_center,
            next_anchor,
            backbone_length,
            cable_length,
            hole_offset,
            hole_angle,
            base_tangent,
        })
    }
}

/// A solved segment: the deformed coupler and the completed disc frame.
#[derive(Debug, Clone)]
pub struct SegmentSolution {
    /// Deformed next disc center.
    pub next_center: Vector3<f64>,
    /// Deformed next cable hole.
    pub next_anchor: Vector3<f64>,
    /// Virtual point of the base station, if non-degenerate.
    pub virtual_point: Option<Vector3<f64>>,
    /// Final value of the squared-angle objective (rad^2).
    pub objective: f64,
    /// Disc frame of the solved next station.
    pub frame: Matrix3<f64>,
    /// Infinity norm of the three link-length residuals (m).
    pub constraint_violation: f64,
    /// First-order stationarity of the constrained minimum.
    pub stationarity: f64,
    /// Inner solver iterations.
    pub iterations: usize,
}

/// Auxiliary four-bar vertex: the disc center offset by `a` along the
/// normal of the plane spanned by the hole direction and the segment
/// direction.
pub fn virtual_point(
    base_center: &Vector3<f64>,
    base_anchor: &Vector3<f64>,
    next_center: &Vector3<f64>,
    hole_offset: f64,
) -> Result<Vector3<f64>> {
    let cross = (base_anchor - base_center).cross(&(next_center - base_center));
    let norm = cross.norm();
    if norm < DEGENERATE_CROSS {
        return Err(Error::DegenerateVirtualPoint);
    }
    Ok(base_center + hole_offset * cross / norm)
}

/// `arccos` of the clamped cosine between two directions, squared, plus the
/// weight needed by its gradient (`2 phi / sin phi`).
struct AngleTerm {
    squared: f64,
    weight: f64,
    cosine: f64,
}

fn angle_term(u: &Vector3<f64>, v: &Vector3<f64>) -> Option<AngleTerm> {
    let nu = u.norm();
    let nv = v.norm();
    if nu < 1e-14 || nv < 1e-14 {
        return None;
    }
    let cosine = (u.dot(v) / (nu * nv)).clamp(-1.0, 1.0);
    let angle = cosine.acos();
    let sine = (1.0 - cosine * cosine).sqrt();
    let weight = if angle < 1e-6 {
        2.0
    } else {
        2.0 * angle / sine.max(1e-9)
    };
    Some(AngleTerm {
        squared: angle * angle,
        weight,
        cosine,
    })
}

/// Sum of the squared coupler angles for a candidate next-disc pose.
///
/// The first angle compares the hole directions of the two stations, the
/// second compares the virtual-point directions. A degenerate virtual
/// point (hole direction parallel to the segment) drops its term: at zero
/// bend that angle is undefined and the constraints already pin the pose.
pub fn coupler_objective(
    next_center: &Vector3<f64>,
    next_anchor: &Vector3<f64>,
    problem: &SegmentProblem,
) -> Result<f64> {
    let base_link = problem.base_center - problem.base_anchor;
    let coupler_link = next_center - next_anchor;
    if base_link.norm() < 1e-14 || coupler_link.norm() < 1e-14 {
        return Err(Error::ZeroLengthLink);
    }
    let first = angle_term(&base_link, &coupler_link).ok_or(Error::ZeroLengthLink)?;

    let mut total = first.squared;
    if let (Ok(base_virtual), Ok(next_virtual)) = (
        virtual_point(
            &problem.base_center,
            &problem.base_anchor,
            &problem.next_center,
            problem.hole_offset,
        ),
        deformed_virtual_point(problem, next_center, next_anchor),
    ) {
        let c = problem.base_center - base_virtual;
        let d = next_center - next_virtual;
        if let Some(second) = angle_term(&c, &d) {
            total += second.squared;
        }
    }
    Ok(total)
}

/// Mirror of the virtual-point construction on the deformed coupler,
/// using the deformed segment direction.
fn deformed_virtual_point(
    problem: &SegmentProblem,
    next_center: &Vector3<f64>,
    next_anchor: &Vector3<f64>,
) -> Result<Vector3<f64>> {
    let cross = (next_anchor - next_center).cross(&(next_center - problem.base_center));
    let norm = cross.norm();
    if norm < DEGENERATE_CROSS {
        return Err(Error::DegenerateVirtualPoint);
    }
    Ok(next_center + problem.hole_offset * cross / norm)
}

/// The segment problem in solver form: six unknowns
/// `(next_center, next_anchor)` with three link-length constraints.
struct SegmentMinimization<'a> {
    problem: &'a SegmentProblem,
    /// Unit direction from the base center to its virtual point, if any.
    base_virtual_direction: Option<Vector3<f64>>,
}

impl<'a> SegmentMinimization<'a> {
    fn new(problem: &'a SegmentProblem) -> Self {
        let base_virtual_direction = virtual_point(
            &problem.base_center,
            &problem.base_anchor,
            &problem.next_center,
            problem.hole_offset,
        )
        .ok()
        .map(|p| (p - problem.base_center) / problem.hole_offset);
        SegmentMinimization {
            problem,
            base_virtual_direction,
        }
    }

    fn split(x: &SVector<f64, 6>) -> (Vector3<f64>, Vector3<f64>) {
        (
            x.fixed_rows::<3>(0).into_owned(),
            x.fixed_rows::<3>(3).into_owned(),
        )
    }

    fn join(center: &Vector3<f64>, anchor: &Vector3<f64>) -> SVector<f64, 6> {
        let mut x = SVector::<f64, 6>::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(center);
        x.fixed_rows_mut::<3>(3).copy_from(anchor);
        x
    }
}

impl EqualityConstrained<6, 3> for SegmentMinimization<'_> {
    fn objective(&self, x: &SVector<f64, 6>) -> f64 {
        let (center, anchor) = Self::split(x);
        let base_link = self.problem.base_center - self.problem.base_anchor;
        let coupler_link = center - anchor;
        let mut total = match angle_term(&base_link, &coupler_link) {
            Some(term) => term.squared,
            None => 0.0,
        };
        if let Some(virtual_dir) = self.base_virtual_direction {
            let normal = (anchor - center).cross(&(center - self.problem.base_center));
            if normal.norm() >= DEGENERATE_CROSS {
                let c = -virtual_dir * self.problem.hole_offset;
                let d = -self.problem.hole_offset * normal / normal.norm();
                if let Some(term) = angle_term(&c, &d) {
                    total += term.squared;
                }
            }
        }
        total
    }

    fn gradient(&self, x: &SVector<f64, 6>) -> SVector<f64, 6> {
        let (center, anchor) = Self::split(x);
        let mut grad_center = Vector3::zeros();
        let mut grad_anchor = Vector3::zeros();

        // First term: angle between the base link A and the coupler B.
        let a = self.problem.base_center - self.problem.base_anchor;
        let b = center - anchor;
        if let Some(term) = angle_term(&a, &b) {
            let b_norm = b.norm();
            let a_unit = a / a.norm();
            let b_unit = b / b_norm;
            // d(phi^2)/dB = -w (A_unit - cos * B_unit) / |B|
            let db = -(term.weight / b_norm) * (a_unit - term.cosine * b_unit);
            grad_center += db;
            grad_anchor -= db;
        }

        // Second term: angle between the virtual-point links C and D, with
        // D = -a * normalize(N), N = (anchor - center) x (center - base).
        if let Some(virtual_dir) = self.base_virtual_direction {
            let normal = (anchor - center).cross(&(center - self.problem.base_center));
            let n_norm = normal.norm();
            if n_norm >= DEGENERATE_CROSS {
                let c = -virtual_dir * self.problem.hole_offset;
                let d = -self.problem.hole_offset * normal / n_norm;
                if let Some(term) = angle_term(&c, &d) {
                    let c_unit = c / self.problem.hole_offset;
                    let d_unit = d / self.problem.hole_offset;
                    let dd = -(term.weight / self.problem.hole_offset)
                        * (c_unit - term.cosine * d_unit);
                    // dD/dN = -(a/|N|) (I - n n^T); dN/d(center) = skew of
                    // (anchor - base), dN/d(anchor) = -skew(center - base).
                    let n_unit = normal / n_norm;
                    let projected = dd - n_unit * n_unit.dot(&dd);
                    let m = -(self.problem.hole_offset / n_norm) * projected;
                    grad_center += m.cross(&(anchor - self.problem.base_center));
                    grad_anchor += (center - self.problem.base_center).cross(&m);
                }
            }
        }

        SegmentMinimization::join(&grad_center, &grad_anchor)
    }

    fn constraints(&self, x: &SVector<f64, 6>) -> SVector<f64, 3> {
        let (center, anchor) = Self::split(x);
        SVector::<f64, 3>::new(
            (center - self.problem.base_center).norm() - self.problem.backbone_length,
            (anchor - self.problem.base_anchor).norm() - self.problem.cable_length,
            (center - anchor).norm() - self.problem.hole_offset,
        )
    }

    fn jacobian(&self, x: &SVector<f64, 6>) -> SMatrix<f64, 3, 6> {
        let (center, anchor) = Self::split(x);
        let mut jac = SMatrix::<f64, 3, 6>::zeros();
        let backbone = center - self.problem.base_center;
        let cable = anchor - self.problem.base_anchor;
        let coupler = center - anchor;
        jac.fixed_view_mut::<1, 3>(0, 0)
            .copy_from(&(backbone / backbone.norm().max(1e-30)).transpose());
        jac.fixed_view_mut::<1, 3>(1, 3)
            .copy_from(&(cable / cable.norm().max(1e-30)).transpose());
        let coupler_dir = (coupler / coupler.norm().max(1e-30)).transpose();
        jac.fixed_view_mut::<1, 3>(2, 0).copy_from(&coupler_dir);
        jac.fixed_view_mut::<1, 3>(2, 3).copy_from(&(-coupler_dir));
        jac
    }
}

/// Completes the disc frame at a solved station.
///
/// The tangent is the previous tangent mirrored across the segment chord
/// (exact for a circular arc); the in-plane direction comes from the cable
/// hole, rotated back by the hole's angular position.
fn disc_frame(
    base_center: &Vector3<f64>,
    base_tangent: &Vector3<f64>,
    next_center: &Vector3<f64>,
    next_anchor: &Vector3<f64>,
    hole_angle: f64,
) -> Matrix3<f64> {
    let chord = (next_center - base_center).normalize();
    let z = (2.0 * base_tangent.dot(&chord) * chord - base_tangent).normalize();
    let radial = next_anchor - next_center;
    let x = (radial - z * z.dot(&radial)).normalize();
    let y = z.cross(&x);
    let hole_frame = Matrix3::from_columns(&[x, y, z]);
    let (sin, cos) = hole_angle.sin_cos();
    let rotate_back = Matrix3::new(cos, -sin, 0.0, sin, cos, 0.0, 0.0, 0.0, 1.0).transpose();
    hole_frame * rotate_back
}

/// Solves one segment with an augmented Lagrangian around BFGS.
pub fn solve_segment(
    problem: &SegmentProblem,
    initial_guess: &(Vector3<f64>, Vector3<f64>),
    options: &AugmentedLagrangianOptions,
) -> Result<SegmentSolution> {
    let minimization = SegmentMinimization::new(problem);
    let x0 = SegmentMinimization::join(&initial_guess.0, &initial_guess.1);
    let minimum = minimize_equality_constrained(&minimization, &x0, options);
    if !minimum.converged {
        return Err(Error::SegmentFailed {
            objective: minimum.objective,
            violation: minimum.constraint_violation,
            stationarity: minimum.stationarity,
        });
    }
    let (next_center, next_anchor) = SegmentMinimization::split(&minimum.x);
    let frame = disc_frame(
        &problem.base_center,
        &problem.base_tangent,
        &next_center,
        &next_anchor,
        problem.hole_angle,
    );
    Ok(SegmentSolution {
        next_center,
        next_anchor,
        virtual_point: minimization
            .base_virtual_direction
            .map(|dir| problem.base_center + problem.hole_offset * dir),
        objective: minimum.objective,
        frame,
        constraint_violation: minimum.constraint_violation,
        stationarity: minimum.stationarity,
        iterations: minimum.inner_iterations,
    })
}

/// Deformed cable length of every segment under a total length reduction.
///
/// The undeformed per-segment lengths are the straight-robot chords; the
/// total reduction is applied as a uniform fractional shortening.
pub fn distribute_actuation(routing: &CableRouting, spec: &RobotSpec) -> Result<Vec<f64>> {
    let delta = routing.length_reduction.ok_or_else(|| {
        Error::validation("routing carries no length reduction; the optimizer needs one")
    })?;
    let chords = undeformed_segment_chords(spec, routing);
    let l0 = spec.disc_spacing;
    let bound = (l0 - 2.0 * spec.hole_radius).max(0.0);
    chords
        .iter()
        .enumerate()
        .map(|(i, chord)| {
            let shortened = chord * (1.0 - delta);
            if shortened < bound || shortened <= 0.0 {
                Err(Error::OverActuation {
                    segment: i + 1,
                    cable_length: shortened,
                    bound,
                })
            } else {
                Ok(shortened)
            }
        })
        .collect()
}

/// A propagated optimization-model pose.
#[derive(Debug, Clone)]
pub struct FourbarPose {
    pub curve: BackboneCurve,
    pub segments: Vec<SegmentSolution>,
}

/// Propagates the four-bar model from an arbitrary base pose.
pub fn propagate_from(
    base_position: &Vector3<f64>,
    base_rotation: &Matrix3<f64>,
    routing: &CableRouting,
    spec: &RobotSpec,
    options: &AugmentedLagrangianOptions,
) -> Result<FourbarPose> {
    let cable_lengths = distribute_actuation(routing, spec)?;
    let l0 = spec.disc_spacing;

    let mut center = *base_position;
    let mut frame = *base_rotation;
    let mut anchor = center + frame * spec.hole_position(routing.hole_at_station(0))?;
    // Previous segment's solution in its own base frame, used to transport
    // the warm start forward.
    let mut previous_relative: Option<(Matrix3<f64>, Vector3<f64>)> = None;

    let mut samples = vec![CurveSample {
        s: 0.0,
        position: center,
        rotation: frame,
    }];
    let mut segments = Vec::with_capacity(spec.num_segments());

    for segment_index in 1..=spec.num_segments() {
        let hole = routing.hole_at_station(segment_index);
        let hole_local = spec.hole_position(hole)?;
        let next_center_undeformed = center + frame * Vector3::new(0.0, 0.0, l0);
        let next_anchor_undeformed = next_center_undeformed + frame * hole_local;

        let problem = SegmentProblem::new(
            center,
            anchor,
            next_center_undeformed,
            next_anchor_undeformed,
            l0,
            cable_lengths[segment_index - 1],
            spec.hole_radius,
            spec.hole_angle(hole),
            frame.column(2).into_owned(),
        )
        .map_err(|e| e.in_segment(segment_index))?;

        let guess = match &previous_relative {
            None => (next_center_undeformed, next_anchor_undeformed),
            Some((rel_rotation, rel_translation)) => {
                let guessed_center = center + frame * rel_translation;
                let guessed_frame = frame * rel_rotation;
                (guessed_center, guessed_center + guessed_frame * hole_local)
            }
        };

        let solution =
            solve_segment(&problem, &guess, options).map_err(|e| e.in_segment(segment_index))?;

        previous_relative = Some((
            frame.transpose() * solution.frame,
            frame.transpose() * (solution.next_center - center),
        ));
        center = solution.next_center;
        anchor = solution.next_anchor;
        frame = solution.frame;

        samples.push(CurveSample {
            s: segment_index as f64 * l0,
            position: center,
            rotation: frame,
        });
        segments.push(solution);
    }

    Ok(FourbarPose {
        curve: BackboneCurve {
            samples,
            strains: None,
            station_indices: (0..=spec.num_segments()).collect(),
        },
        segments,
    })
}

/// Propagates the four-bar model from the clamped base.
pub fn propagate(
    routing: &CableRouting,
    spec: &RobotSpec,
    options: &AugmentedLagrangianOptions,
) -> Result<FourbarPose> {
    propagate_from(
        &Vector3::zeros(),
        &Matrix3::identity(),
        routing,
        spec,
        options,
    )
}
