// All four solvers on one transport instance: iteration counts and
// agreement of the final plans.
//
// ```bash
// cargo run -p fpdgm --example baseline_comparison
// ```

use fpdgm::bench::relative_tolerances;
use fpdgm::{Family, InstanceSpec, SolveOptions, SolverKind};

pub fn run_example() -> fpdgm::Result<Vec<(SolverKind, usize)>> {
    let mut spec = InstanceSpec::new(Family::Rot);
    spec.p = Some(16);
    spec.gamma = 0.1;
    spec.seed = 42;
    let problem = spec.build()?;
    let tol = relative_tolerances(problem.oracle(), 1e-2, 1e-2)?;

    let mut reports = Vec::new();
    for solver in SolverKind::ALL {
        let r = solver.run(&problem, &tol, &SolveOptions::default())?;
        println!(
            "{:<6} {:>14} {:>6} iterations   gap {:.2e}   residual {:.2e}",
            solver.as_str(),
            r.status.as_str(),
            r.iterations,
            r.final_gap,
            r.final_eq_residual
        );
        reports.push((solver, r));
    }

    let reference = &reports[0].1.primal;
    for (solver, r) in &reports[1..] {
        let diff = reference
            .iter()
            .zip(r.primal.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!("max |plan - fpdgm plan| for {solver}: {diff:.2e}");
    }
    Ok(reports
        .into_iter()
        .map(|(s, r)| (s, r.iterations))
        .collect())
}

fn main() -> fpdgm::Result<()> {
    run_example().map(|_| ())
}
