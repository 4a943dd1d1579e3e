use ccr_core::fourbar::{solve_segment, SegmentProblem};
use ccr_core::optim::AugmentedLagrangianOptions;
use nalgebra::Vector3;

fn main() {
    let a = 0.008;
    let l0 = 0.018;
    for delta in [0.0, 0.001, 0.01, 0.02 * a / l0, 0.055] {
        let la = l0 * (1.0 - delta);
        let problem = SegmentProblem::new(
            Vector3::zeros(),
            Vector3::new(a, 0.0, 0.0),
            Vector3::new(0.0, 0.0, l0),
            Vector3::new(a, 0.0, l0),
            l0,
            la,
            a,
            0.0,
            Vector3::z(),
        )
        .unwrap();
        let result = solve_segment(
            &problem,
            &(problem.next_center, problem.next_anchor),
            &AugmentedLagrangianOptions::default(),
        );
        match result {
            Ok(sol) => {
                let rot = nalgebra::Rotation3::from_matrix(&sol.frame);
                println!(
                    "delta {delta:.4}: objective {:.6e} angle {:.6} viol {:.2e} stat {:.2e} iters {}",
                    sol.objective,
                    rot.angle(),
                    sol.constraint_violation,
                    sol.stationarity,
                    sol.iterations
                );
                println!("   center {:?}", sol.next_center);
            }
            Err(e) => println!("delta {delta:.4}: FAILED {e}"),
        }
    }
}
