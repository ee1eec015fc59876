// Entropy-regularized optimal transport between two random histograms,
// solved with the primal-dual method and relative stopping tolerances.
//
// ```bash
// cargo run -p fpdgm --example rot_transport
// ```

use fpdgm::bench::relative_tolerances;
use fpdgm::{solve, DualOracle, Family, InstanceSpec, Problem, SolveOptions, SolveReport};

pub fn run_example() -> fpdgm::Result<SolveReport> {
    let mut spec = InstanceSpec::new(Family::Rot);
    spec.p = Some(8);
    spec.gamma = 0.1;
    spec.seed = 42;
    let Problem::Rot(rot) = spec.build()? else {
        unreachable!("family is rot")
    };

    let tol = relative_tolerances(&rot, 1e-3, 1e-3)?;
    let report = solve(&rot, &tol, &SolveOptions::default())?;

    let p = rot.side();
    let plan = &report.primal;
    let row_err = (0..p)
        .map(|i| (plan[i * p..(i + 1) * p].iter().sum::<f64>() - rot.a1()[i]).abs())
        .fold(0.0, f64::max);
    println!("status      {}", report.status);
    println!("iterations  {}", report.iterations);
    println!(
        "gap         {:.3e} (threshold {:.3e})",
        report.final_gap, tol.f
    );
    println!(
        "residual    {:.3e} (threshold {:.3e})",
        report.final_eq_residual, tol.eq
    );
    println!("row error   {row_err:.3e}");
    println!("objective   {:.6}", rot.objective(plan));
    Ok(report)
}

fn main() -> fpdgm::Result<()> {
    run_example().map(|_| ())
}
