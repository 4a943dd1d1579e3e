//! Static Cosserat rod model of a cable-actuated backbone.
//!
//! The backbone state is the position `p(s)`, frame `R(s)`, linear strain
//! `v(s)` and curvature/twist `u(s)`. With cable tensions applied, the
//! strain rates solve a 6x6 linear system assembled from the cable
//! geometry; the pose follows from `p' = R v`, `R' = R u^`. The base is
//! clamped (`p(0) = 0`, `R(0) = I`) and the unknown base strains are found
//! by shooting on the tip force/moment balance of the terminating cables.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use crate::curve::{BackboneCurve, CurveSample, StrainSample};
use crate::error::{Error, Result};
use crate::robot::{MaterialStiffness, RobotSpec};
use crate::routing::CablePath;

/// Linear strain and curvature/twist at one cross-section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrainState {
    pub v: Vector3<f64>,
    pub u: Vector3<f64>,
}

impl StrainState {
    /// The undeformed reference state.
    pub fn reference() -> Self {
        StrainState {
            v: Vector3::z(),
            u: Vector3::zeros(),
        }
    }

    fn from_vector(g: &Vector6<f64>) -> Self {
        StrainState {
            v: g.fixed_rows::<3>(0).into_owned(),
            u: g.fixed_rows::<3>(3).into_owned(),
        }
    }

    fn to_vector(self) -> Vector6<f64> {
        let mut g = Vector6::zeros();
        g.fixed_rows_mut::<3>(0).copy_from(&self.v);
        g.fixed_rows_mut::<3>(3).copy_from(&self.u);
        g
    }
}

/// Point force and moment the terminating cables apply at the tip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TipLoads {
    pub force: Vector3<f64>,
    pub moment: Vector3<f64>,
}

/// Shooting diagnostics: the accepted guess and its boundary residual.
#[derive(Debug, Clone, PartialEq)]
pub struct ShootingState {
    pub guess: StrainState,
    pub residual: Vector6<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub step_norm: f64,
    pub converged: bool,
}

/// A converged rod solution.
#[derive(Debug, Clone, PartialEq)]
pub struct CosseratSolution {
    pub curve: BackboneCurve,
    pub shooting: ShootingState,
}

/// Rod solver options.
#[derive(Debug, Clone)]
pub struct ShootingOptions {
    /// Minimum number of integration steps over the full length.
    pub step_count: usize,
    /// Convergence tolerance on the mixed N / N·m residual norm.
    pub tolerance: f64,
    /// Maximum Newton iterations.
    pub max_iterations: usize,
    /// Absolute forward-difference step on each strain unknown.
    pub jacobian_step: f64,
    /// Maximum step halvings per Newton iteration.
    pub max_step_halvings: usize,
    /// Warm-start guess; defaults to the undeformed reference state.
    pub initial_guess: Option<StrainState>,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            step_count: 200,
            tolerance: 1e-8,
            max_iterations: 50,
            jacobian_step: 1e-6,
            max_step_halvings: 8,
            initial_guess: None,
        }
    }
}

fn skew(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Body-frame velocity of a cable point: differentiate `p_i = p + R r_i`
/// and pull back through `R`.
fn cable_tangent_body(state: &StrainState, r: &Vector3<f64>, r_dot: &Vector3<f64>) -> Vector3<f64> {
    state.u.cross(r) + r_dot + state.v
}

const MIN_CABLE_SPEED: f64 = 1e-9;

/// Assembles the 6x6 strain-rate system and its right-hand side at `s`.
pub fn strain_system(
    s: f64,
    state: &StrainState,
    paths: &[CablePath],
    tensions: &[f64],
    stiffness: &MaterialStiffness,
) -> Result<(Matrix6<f64>, Vector6<f64>)> {
    let e3 = Vector3::z();
    let u_hat = skew(&state.u);
    let v_hat = skew(&state.v);

    let mut a_sum = Matrix3::zeros();
    let mut g_sum = Matrix3::zeros();
    let mut h_sum = Matrix3::zeros();
    let mut a_vec = Vector3::zeros();
    let mut b_vec = Vector3::zeros();
    for (path, &tau) in paths.iter().zip(tensions) {
        let r = path.position(s);
        let r_dot = path.velocity(s);
        let r_ddot = path.acceleration(s);
        let tangent = cable_tangent_body(state, &r, &r_dot);
        let speed = tangent.norm();
        if speed < MIN_CABLE_SPEED {
            return Err(Error::SingularSystem {
                arclength: s,
                condition: f64::INFINITY,
            });
        }
        let r_hat = skew(&r);
        let t_hat = skew(&tangent);
        let a_i = (t_hat * t_hat) * (-tau / speed.powi(3));
        let gamma = a_i * (u_hat * tangent + u_hat * r_dot + r_ddot);
        a_sum += a_i;
        g_sum -= a_i * r_hat;
        h_sum -= r_hat * a_i * r_hat;
        a_vec += gamma;
        b_vec += r_hat * gamma;
    }

    let k_se = &stiffness.shear_extension;
    let k_bt = &stiffness.bending_torsion;
    let d = -(u_hat * (k_se * (state.v - e3))) - a_vec;
    let c = -(u_hat * (k_bt * state.u)) - v_hat * (k_se * (state.v - e3)) - b_vec;

    let mut system = Matrix6::zeros();
    system
        .fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&(k_se + a_sum));
    system.fixed_view_mut::<3, 3>(0, 3).copy_from(&g_sum);
    system
        .fixed_view_mut::<3, 3>(3, 0)
        .copy_from(&g_sum.transpose());
    system
        .fixed_view_mut::<3, 3>(3, 3)
        .copy_from(&(k_bt + h_sum));

    let mut rhs = Vector6::zeros();
    rhs.fixed_rows_mut::<3>(0).copy_from(&d);
    rhs.fixed_rows_mut::<3>(3).copy_from(&c);
    Ok((system, rhs))
}

/// Pose and strain derivatives at one arclength.
#[derive(Debug, Clone, Copy)]
pub struct StateDerivative {
    pub p_dot: Vector3<f64>,
    pub r_dot: Matrix3<f64>,
    pub v_dot: Vector3<f64>,
    pub u_dot: Vector3<f64>,
}

/// Right-hand side of the rod equations at arclength `s`.
pub fn ode_rhs(
    s: f64,
    _p: &Vector3<f64>,
    r: &Matrix3<f64>,
    state: &StrainState,
    paths: &[CablePath],
    tensions: &[f64],
    stiffness: &MaterialStiffness,
) -> Result<StateDerivative> {
    let (system, rhs) = strain_system(s, state, paths, tensions, stiffness)?;
    let lu = system.lu();
    let strain_rates = lu.solve(&rhs).ok_or_else(|| {
        let svd = system.svd(false, false);
        let min = svd.singular_values.min();
        let max = svd.singular_values.max();
        Error::SingularSystem {
            arclength: s,
            condition: if min > 0.0 { max / min } else { f64::INFINITY },
        }
    })?;
    Ok(StateDerivative {
        p_dot: r * state.v,
        r_dot: r * skew(&state.u),
        v_dot: strain_rates.fixed_rows::<3>(0).into_owned(),
        u_dot: strain_rates.fixed_rows::<3>(3).into_owned(),
    })
}

#[derive(Clone, Copy)]
struct OdeState {
    p: Vector3<f64>,
    r: Matrix3<f64>,
    v: Vector3<f64>,
    u: Vector3<f64>,
}

impl OdeState {
    fn step(&self, h: f64, d: &StateDerivative) -> OdeState {
        OdeState {
            p: self.p + h * d.p_dot,
            r: self.r + h * d.r_dot,
            v: self.v + h * d.v_dot,
            u: self.u + h * d.u_dot,
        }
    }
}

/// Nearest rotation matrix (polar factor via SVD).
fn reorthonormalize(r: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = r.svd(true, true);
    let u = svd.u.expect("svd of 3x3 requested u");
    let v_t = svd.v_t.expect("svd of 3x3 requested v_t");
    let mut q = u * v_t;
    if q.determinant() < 0.0 {
        // Not reachable for near-rotations; guard against reflections.
        let mut u_flipped = u;
        u_flipped.column_mut(2).neg_mut();
        q = u_flipped * v_t;
    }
    q
}

/// Integrates the rod equations from an arbitrary base pose.
///
/// Fixed-step RK4 with per-step frame re-orthonormalization. The step
/// count is rounded up so every disc station lands exactly on a sample.
pub fn integrate_from(
    base_position: &Vector3<f64>,
    base_rotation: &Matrix3<f64>,
    initial: &StrainState,
    paths: &[CablePath],
    tensions: &[f64],
    spec: &RobotSpec,
    step_count: usize,
) -> Result<BackboneCurve> {
    if step_count < 40 {
        return Err(Error::validation(format!(
            "step_count must be at least 40, got {step_count}"
        )));
    }
    if paths.len() != tensions.len() {
        return Err(Error::validation(format!(
            "{} cable paths but {} tensions",
            paths.len(),
            tensions.len()
        )));
    }
    let segments = spec.num_segments();
    let steps_per_segment = step_count.div_ceil(segments);
    let h = spec.disc_spacing / steps_per_segment as f64;
    let total_steps = steps_per_segment * segments;

    let mut state = OdeState {
        p: *base_position,
        r: *base_rotation,
        v: initial.v,
        u: initial.u,
    };
    let mut samples = Vec::with_capacity(total_steps + 1);
    let mut strains = Vec::with_capacity(total_steps + 1);
    let push = |samples: &mut Vec<CurveSample>, strains: &mut Vec<StrainSample>, s: f64, st: &OdeState| {
        samples.push(CurveSample {
            s,
            position: st.p,
            rotation: st.r,
        });
        strains.push(StrainSample { v: st.v, u: st.u });
    };
    push(&mut samples, &mut strains, 0.0, &state);

    let eval = |s: f64, st: &OdeState| -> Result<StateDerivative> {
        ode_rhs(
            s,
            &st.p,
            &st.r,
            &StrainState { v: st.v, u: st.u },
            paths,
            tensions,
            stiffness_of(spec),
        )
    };

    for step in 0..total_steps {
        let s = step as f64 * h;
        let k1 = eval(s, &state)?;
        let k2 = eval(s + 0.5 * h, &state.step(0.5 * h, &k1))?;
        let k3 = eval(s + 0.5 * h, &state.step(0.5 * h, &k2))?;
        let k4 = eval(s + h, &state.step(h, &k3))?;
        state = OdeState {
            p: state.p + h / 6.0 * (k1.p_dot + 2.0 * k2.p_dot + 2.0 * k3.p_dot + k4.p_dot),
            r: state.r + h / 6.0 * (k1.r_dot + 2.0 * k2.r_dot + 2.0 * k3.r_dot + k4.r_dot),
            v: state.v + h / 6.0 * (k1.v_dot + 2.0 * k2.v_dot + 2.0 * k3.v_dot + k4.v_dot),
            u: state.u + h / 6.0 * (k1.u_dot + 2.0 * k2.u_dot + 2.0 * k3.u_dot + k4.u_dot),
        };
        state.r = reorthonormalize(&state.r);
        push(&mut samples, &mut strains, (step + 1) as f64 * h, &state);
    }

    Ok(BackboneCurve {
        samples,
        strains: Some(strains),
        station_indices: (0..=segments).map(|k| k * steps_per_segment).collect(),
    })
}

fn stiffness_of(spec: &RobotSpec) -> &MaterialStiffness {
    &spec.stiffness
}

/// Integrates from the clamped base (`p(0) = 0`, `R(0) = I`).
pub fn integrate(
    initial: &StrainState,
    paths: &[CablePath],
    tensions: &[f64],
    spec: &RobotSpec,
    step_count: usize,
) -> Result<BackboneCurve> {
    integrate_from(
        &Vector3::zeros(),
        &Matrix3::identity(),
        initial,
        paths,
        tensions,
        spec,
        step_count,
    )
}

/// Force and moment the terminating cables apply to the tip cross-section.
pub fn tip_loads(curve: &BackboneCurve, paths: &[CablePath], tensions: &[f64]) -> TipLoads {
    let tip = curve.tip();
    let strain = curve
        .strains
        .as_ref()
        .and_then(|s| s.last())
        .expect("tip loads need strain fields");
    let state = StrainState {
        v: strain.v,
        u: strain.u,
    };
    let mut force = Vector3::zeros();
    let mut moment = Vector3::zeros();
    for (path, &tau) in paths.iter().zip(tensions) {
        let r = path.position(tip.s);
        let r_dot = path.velocity(tip.s);
        let tangent_world = tip.rotation * cable_tangent_body(&state, &r, &r_dot);
        let direction = tangent_world / tangent_world.norm();
        force -= tau * direction;
        moment -= tau * (tip.rotation * r).cross(&direction);
    }
    TipLoads { force, moment }
}

/// Tip defect: internal loads minus applied cable loads, `(N, N·m)`.
pub fn boundary_residual(
    curve: &BackboneCurve,
    paths: &[CablePath],
    tensions: &[f64],
    stiffness: &MaterialStiffness,
) -> Vector6<f64> {
    let tip = curve.tip();
    let strain = curve
        .strains
        .as_ref()
        .and_then(|s| s.last())
        .expect("boundary residual needs strain fields");
    let internal_force = tip.rotation * (stiffness.shear_extension * (strain.v - Vector3::z()));
    let internal_moment = tip.rotation * (stiffness.bending_torsion * strain.u);
    let loads = tip_loads(curve, paths, tensions);
    let mut residual = Vector6::zeros();
    residual
        .fixed_rows_mut::<3>(0)
        .copy_from(&(internal_force - loads.force));
    residual
        .fixed_rows_mut::<3>(3)
        .copy_from(&(internal_moment - loads.moment));
    residual
}

/// Solves the boundary value problem by damped-Newton shooting on the
/// base strains `(v(0), u(0))`.
pub fn shoot(
    paths: &[CablePath],
    tensions: &[f64],
    spec: &RobotSpec,
    options: &ShootingOptions,
) -> Result<CosseratSolution> {
    for &tau in tensions {
        if !tau.is_finite() || tau < 0.0 {
            return Err(Error::validation(format!(
                "tensions must be finite and non-negative, got {tau}"
            )));
        }
    }
    let stiffness = &spec.stiffness;
    let mut guess = options
        .initial_guess
        .unwrap_or_else(StrainState::reference)
        .to_vector();

    let evaluate = |g: &Vector6<f64>| -> Result<(BackboneCurve, Vector6<f64>)> {
        let state = StrainState::from_vector(g);
        let curve = integrate(&state, paths, tensions, spec, options.step_count)?;
        let residual = boundary_residual(&curve, paths, tensions, stiffness);
        Ok((curve, residual))
    };

    let (mut curve, mut residual) = evaluate(&guess)?;
    let mut step_norm = 0.0;
    for iteration in 1..=options.max_iterations {
        let residual_norm = residual.norm();
        if residual_norm < options.tolerance {
            return Ok(CosseratSolution {
                curve,
                shooting: ShootingState {
                    guess: StrainState::from_vector(&guess),
                    residual,
                    residual_norm,
                    iterations: iteration,
                    step_norm,
                    converged: true,
                },
            });
        }

        // Forward-difference Jacobian of the residual in the 6 unknowns.
        let mut jacobian = Matrix6::zeros();
        for j in 0..6 {
            let mut perturbed = guess;
            perturbed[j] += options.jacobian_step;
            let (_, r) = evaluate(&perturbed)?;
            jacobian
                .column_mut(j)
                .copy_from(&((r - residual) / options.jacobian_step));
        }
        let newton_step = jacobian
            .lu()
            .solve(&(-residual))
            .ok_or(Error::SingularJacobian {
                residual: residual_norm,
            })?;

        // Halve the step until the residual decreases.
        let mut accepted = false;
        let mut scale = 1.0;
        for _ in 0..=options.max_step_halvings {
            let trial = guess + scale * newton_step;
            let (trial_curve, trial_residual) = evaluate(&trial)?;
            if trial_residual.norm() < residual_norm {
                step_norm = (scale * newton_step).norm();
                guess = trial;
                curve = trial_curve;
                residual = trial_residual;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            return Err(Error::ShootingFailed {
                iterations: iteration,
                best_residual: residual_norm,
            });
        }
    }

    let residual_norm = residual.norm();
    if residual_norm < options.tolerance {
        return Ok(CosseratSolution {
            curve,
            shooting: ShootingState {
                guess: StrainState::from_vector(&guess),
                residual,
                residual_norm,
                iterations: options.max_iterations,
                step_norm,
                converged: true,
            },
        });
    }
    Err(Error::ShootingFailed {
        iterations: options.max_iterations,
        best_residual: residual_norm,
    })
}

/// Ramps the tensions linearly from zero, warm-starting each solve.
pub fn continuation_solve(
    paths: &[CablePath],
    target_tensions: &[f64],
    spec: &RobotSpec,
    options: &ShootingOptions,
    ramp_steps: usize,
) -> Result<CosseratSolution> {
    if ramp_steps < 1 {
        return Err(Error::validation("continuation needs at least one ramp step"));
    }
    let mut stage_options = options.clone();
    let mut solution = None;
    for step in 1..=ramp_steps {
        let fraction = step as f64 / ramp_steps as f64;
        let tensions: Vec<f64> = target_tensions.iter().map(|t| t * fraction).collect();
        match shoot(paths, &tensions, spec, &stage_options) {
            Ok(sol) => {
                stage_options.initial_guess = Some(sol.shooting.guess);
                solution = Some(sol);
            }
            Err(source) => {
                return Err(Error::ContinuationFailed {
                    fraction,
                    source: Box::new(source),
                })
            }
        }
    }
    Ok(solution.expect("ramp_steps >= 1"))
}
