// Regularized partial transport: move a fixed amount of mass without
// exceeding either marginal. The marginal constraints are inequalities, so
// their multipliers live in the nonnegative orthant.
//
// ```bash
// cargo run -p fpdgm --example partial_transport
// ```

use fpdgm::bench::{grid_cost_matrix, random_marginals, relative_tolerances};
use fpdgm::{solve, RoptInstance, SolveOptions, SolveReport};

pub fn run_example() -> fpdgm::Result<SolveReport> {
    let p = 9;
    let (a1, a2, _) = random_marginals(p, 5);
    let ropt = RoptInstance::new(p, grid_cost_matrix(p)?, a1.clone(), a2.clone(), 0.6, 0.2)?;

    let tol = relative_tolerances(&ropt, 1e-3, 1e-3)?;
    let report = solve(&ropt, &tol, &SolveOptions::default())?;

    let plan = &report.primal;
    let moved: f64 = plan.iter().sum();
    let worst_row = (0..p)
        .map(|i| plan[i * p..(i + 1) * p].iter().sum::<f64>() - a1[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let worst_col = (0..p)
        .map(|j| (0..p).map(|i| plan[i * p + j]).sum::<f64>() - a2[j])
        .fold(f64::NEG_INFINITY, f64::max);
    println!(
        "status        {} after {} iterations",
        report.status, report.iterations
    );
    println!("moved mass    {moved:.6} of {}", ropt.mass());
    println!("max row slack violation  {worst_row:+.3e}");
    println!("max col slack violation  {worst_col:+.3e}");
    let active = report.dual.ineq.iter().filter(|m| **m > 0.0).count();
    println!("active multipliers {active} / {}", 2 * p);
    Ok(report)
}

fn main() -> fpdgm::Result<()> {
    run_example().map(|_| ())
}
