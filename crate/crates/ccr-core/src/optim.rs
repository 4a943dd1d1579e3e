//! Augmented Lagrangian minimization for small dense equality-constrained
//! problems, with a damped-Newton inner solve and a Gauss-Newton
//! feasibility polish.

use nalgebra::{SMatrix, SVector};

/// A smooth objective with `M` smooth equality constraints in `N` unknowns.
pub trait EqualityConstrained<const N: usize, const M: usize> {
    fn objective(&self, x: &SVector<f64, N>) -> f64;
    fn gradient(&self, x: &SVector<f64, N>) -> SVector<f64, N>;
    fn constraints(&self, x: &SVector<f64, N>) -> SVector<f64, M>;
    fn jacobian(&self, x: &SVector<f64, N>) -> SMatrix<f64, M, N>;
}

#[derive(Debug, Clone)]
pub struct AugmentedLagrangianOptions {
    pub penalty_start: f64,
    pub penalty_factor: f64,
    pub max_outer: usize,
    pub constraint_tol: f64,
    pub stationarity_tol: f64,
    pub max_inner: usize,
}

impl Default for AugmentedLagrangianOptions {
    fn default() -> Self {
        AugmentedLagrangianOptions {
            penalty_start: 1e3,
            penalty_factor: 10.0,
            max_outer: 6,
            constraint_tol: 1e-8,
            stationarity_tol: 1e-8,
            max_inner: 500,
        }
    }
}

/// Result of a constrained minimization.
#[derive(Debug, Clone)]
pub struct Minimum<const N: usize, const M: usize> {
    pub x: SVector<f64, N>,
    pub multipliers: SVector<f64, M>,
    pub objective: f64,
    /// Infinity norm of the constraint residuals.
    pub constraint_violation: f64,
    /// 2-norm of the projected gradient with least-squares multipliers.
    pub stationarity: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub converged: bool,
}

/// Minimizes the objective subject to the equality constraints.
pub fn minimize_equality_constrained<P, const N: usize, const M: usize>(
    problem: &P,
    x0: &SVector<f64, N>,
    options: &AugmentedLagrangianOptions,
) -> Minimum<N, M>
where
    P: EqualityConstrained<N, M>,
{
    let mut x = *x0;
    let mut multipliers = SVector::<f64, M>::zeros();
    let mut penalty = options.penalty_start;
    let mut inner_tol = 1e-7;
    let mut previous_violation = f64::INFINITY;
    let mut inner_iterations = 0;
    let mut outer_iterations = 0;

    for _ in 0..options.max_outer {
        outer_iterations += 1;
        inner_iterations += newton_minimize(
            |p| augmented_value(problem, p, &multipliers, penalty),
            |p| augmented_gradient(problem, p, &multipliers, penalty),
            &mut x,
            inner_tol,
            options.max_inner,
        );

        let c = problem.constraints(&x);
        let violation = c.amax();
        multipliers -= penalty * c;
        if violation > 0.25 * previous_violation {
            penalty *= options.penalty_factor;
        }
        previous_violation = violation;
        inner_tol = (inner_tol * 0.1).max(1e-12);

        if violation < options.constraint_tol
            && stationarity_of(problem, &x).1 < options.stationarity_tol
        {
            break;
        }
    }

    restore_feasibility(problem, &mut x);
    let c = problem.constraints(&x);
    let (ls_multipliers, stationarity) = stationarity_of(problem, &x);
    let violation = c.amax();
    Minimum {
        x,
        multipliers: ls_multipliers,
        objective: problem.objective(&x),
        constraint_violation: violation,
        stationarity,
        outer_iterations,
        inner_iterations,
        converged: violation < options.constraint_tol
            && stationarity < options.stationarity_tol,
    }
}

fn augmented_value<P, const N: usize, const M: usize>(
    problem: &P,
    x: &SVector<f64, N>,
    multipliers: &SVector<f64, M>,
    penalty: f64,
) -> f64
where
    P: EqualityConstrained<N, M>,
{
    let c = problem.constraints(x);
    problem.objective(x) - multipliers.dot(&c) + 0.5 * penalty * c.norm_squared()
}

fn augmented_gradient<P, const N: usize, const M: usize>(
    problem: &P,
    x: &SVector<f64, N>,
    multipliers: &SVector<f64, M>,
    penalty: f64,
) -> SVector<f64, N>
where
    P: EqualityConstrained<N, M>,
{
    let c = problem.constraints(x);
    let jacobian = problem.jacobian(x);
    problem.gradient(x) + jacobian.transpose() * (penalty * c - multipliers)
}

/// Gaussian elimination with partial pivoting for the small dense systems
/// this module builds (constraint Gram matrices).
fn solve_dense<const M: usize>(
    a: &SMatrix<f64, M, M>,
    b: &SVector<f64, M>,
) -> Option<SVector<f64, M>> {
    let mut a = *a;
    let mut b = *b;
    for col in 0..M {
        let pivot_row = (col..M)
            .max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))
            .unwrap();
        if a[(pivot_row, col)].abs() < 1e-300 {
            return None;
        }
        if pivot_row != col {
            a.swap_rows(pivot_row, col);
            b.swap_rows(pivot_row, col);
        }
        for row in col + 1..M {
            let factor = a[(row, col)] / a[(col, col)];
            for k in col..M {
                a[(row, k)] -= factor * a[(col, k)];
            }
            b[row] -= factor * b[col];
        }
    }
    for col in (0..M).rev() {
        let mut sum = b[col];
        for k in col + 1..M {
            sum -= a[(col, k)] * b[k];
        }
        b[col] = sum / a[(col, col)];
    }
    Some(b)
}

/// Least-squares multipliers and the norm of the projected gradient.
fn stationarity_of<P, const N: usize, const M: usize>(
    problem: &P,
    x: &SVector<f64, N>,
) -> (SVector<f64, M>, f64)
where
    P: EqualityConstrained<N, M>,
{
    let g = problem.gradient(x);
    let jacobian = problem.jacobian(x);
    let gram = jacobian * jacobian.transpose();
    match solve_dense(&gram, &(jacobian * g)) {
        Some(lambda) => {
            let projected = g - jacobian.transpose() * lambda;
            (lambda, projected.norm())
        }
        None => (SVector::zeros(), g.norm()),
    }
}

/// Gauss-Newton steps onto the constraint manifold (minimum-norm updates).
fn restore_feasibility<P, const N: usize, const M: usize>(problem: &P, x: &mut SVector<f64, N>)
where
    P: EqualityConstrained<N, M>,
{
    for _ in 0..8 {
        let c = problem.constraints(x);
        if c.amax() < 1e-13 {
            break;
        }
        let jacobian = problem.jacobian(x);
        let gram = jacobian * jacobian.transpose();
        let Some(step) = solve_dense(&gram, &c) else { break };
        *x -= jacobian.transpose() * step;
    }
}

/// Damped Newton with a finite-difference Hessian of the supplied gradient
/// and Levenberg regularization. Returns the iteration count.
///
/// The augmented Lagrangian develops penalty valleys with condition numbers
/// on the order of the penalty parameter; secant updates crawl there, while
/// a regularized Newton step follows the valley floor.
fn newton_minimize<const N: usize>(
    value: impl Fn(&SVector<f64, N>) -> f64,
    gradient: impl Fn(&SVector<f64, N>) -> SVector<f64, N>,
    x: &mut SVector<f64, N>,
    gradient_tol: f64,
    max_iterations: usize,
) -> usize {
    const ARMIJO_SLOPE: f64 = 1e-4;
    const MAX_BACKTRACKS: usize = 30;
    const HESSIAN_STEP: f64 = 1e-7;

    let mut f = value(x);
    let mut g = gradient(x);
    for iteration in 0..max_iterations {
        if g.amax() <= gradient_tol {
            return iteration;
        }

        let mut hessian = SMatrix::<f64, N, N>::zeros();
        for j in 0..N {
            let mut probe = *x;
            probe[j] += HESSIAN_STEP;
            let column = (gradient(&probe) - g) / HESSIAN_STEP;
            hessian.column_mut(j).copy_from(&column);
        }
        hessian = 0.5 * (hessian + hessian.transpose());
        let hessian_scale = (0..N).map(|i| hessian[(i, i)].abs()).fold(0.0, f64::max);

        // Escalate the Levenberg shift until the step is a decrease.
        let mut shift = 0.0;
        let mut improved = None;
        for _ in 0..24 {
            let mut damped = hessian;
            for i in 0..N {
                damped[(i, i)] += shift;
            }
            if let Some(direction) = solve_dense(&damped, &(-g)) {
                let slope = g.dot(&direction);
                if slope < 0.0 {
                    let mut step = 1.0;
                    for _ in 0..MAX_BACKTRACKS {
                        let trial = *x + step * direction;
                        let f_trial = value(&trial);
                        if f_trial.is_finite() && f_trial <= f + ARMIJO_SLOPE * step * slope {
                            improved = Some((trial, f_trial));
                            break;
                        }
                        step *= 0.5;
                    }
                }
            }
            if improved.is_some() {
                break;
            }
            shift = if shift == 0.0 {
                1e-8 * hessian_scale.max(1.0)
            } else {
                shift * 10.0
            };
        }
        let Some((x_new, f_new)) = improved else {
            return iteration;
        };
        *x = x_new;
        f = f_new;
        g = gradient(x);
    }
    max_iterations
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Matrix1x2, Vector1, Vector2};

    /// Minimize (x-2)^2 + (y-1)^2 on the unit circle.
    struct CircleProblem;

    impl EqualityConstrained<2, 1> for CircleProblem {
        fn objective(&self, x: &Vector2<f64>) -> f64 {
            (x.x - 2.0).powi(2) + (x.y - 1.0).powi(2)
        }
        fn gradient(&self, x: &Vector2<f64>) -> Vector2<f64> {
            Vector2::new(2.0 * (x.x - 2.0), 2.0 * (x.y - 1.0))
        }
        fn constraints(&self, x: &Vector2<f64>) -> Vector1<f64> {
            Vector1::new(x.norm_squared() - 1.0)
        }
        fn jacobian(&self, x: &Vector2<f64>) -> Matrix1x2<f64> {
            Matrix1x2::new(2.0 * x.x, 2.0 * x.y)
        }
    }

    #[test]
    fn projects_onto_the_circle() {
        let result = minimize_equality_constrained(
            &CircleProblem,
            &Vector2::new(0.5, 0.5),
            &AugmentedLagrangianOptions::default(),
        );
        assert!(result.converged, "{result:?}");
        // Closest circle point to (2, 1) is (2, 1)/sqrt(5).
        let expected = Vector2::new(2.0, 1.0) / 5.0_f64.sqrt();
        assert_relative_eq!(result.x, expected, epsilon = 1e-7);
        assert!(result.constraint_violation < 1e-10);
        assert!(result.stationarity < 1e-8);
    }

    #[test]
    fn feasible_stationary_start_converges_immediately() {
        // Start at the optimum itself.
        let expected = Vector2::new(2.0, 1.0) / 5.0_f64.sqrt();
        let result = minimize_equality_constrained(
            &CircleProblem,
            &expected,
            &AugmentedLagrangianOptions::default(),
        );
        assert!(result.converged);
        assert_relative_eq!(result.x, expected, epsilon = 1e-9);
    }

    /// Unconstrained quadratic sanity check for the inner solver.
    #[test]
    fn bfgs_minimizes_a_quadratic() {
        let target = Vector2::new(1.5, -0.3);
        let mut x = Vector2::zeros();
        bfgs_minimize(
            |p: &Vector2<f64>| (p - target).norm_squared(),
            |p: &Vector2<f64>| 2.0 * (p - target),
            &mut x,
            1e-12,
            200,
        );
        assert_relative_eq!(x, target, epsilon = 1e-10);
    }
}
