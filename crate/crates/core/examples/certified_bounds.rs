// A-priori iteration bounds and the per-iteration certificate
// `|f(x̂_k) + φ(η_k)| ≤ 2L(R₁² + R₂²)/C_k`, checked along a run.
//
// ```bash
// cargo run -p fpdgm --example certified_bounds
// ```

use fpdgm::bench::relative_tolerances;
use fpdgm::{iteration_bounds, solve, BoundParams, Family, InstanceSpec, SolveOptions, Tolerances};

pub fn run_example() -> fpdgm::Result<(u64, usize)> {
    let mut spec = InstanceSpec::new(Family::Rot);
    spec.p = Some(6);
    spec.gamma = 0.5;
    spec.seed = 3;
    let problem = spec.build()?;
    let oracle = problem.oracle();

    // R₁ from a tight reference run
    let reference = solve(
        oracle,
        &Tolerances::new(1e-10, 1e-10, 0.0),
        &SolveOptions::default().with_max_iter(5_000_000),
    )?;
    let r1 = 2.0 * reference.dual.norm();
    let bounds = BoundParams::new(r1, 0.0, oracle.lipschitz())?;
    println!("L = {:.3}, R1 = {r1:.4}", bounds.lipschitz);

    let tol = relative_tolerances(oracle, 1e-3, 1e-3)?;
    let ib = iteration_bounds(&bounds, &tol)?;
    let run = solve(oracle, &tol, &SolveOptions::default().with_bounds(bounds))?;
    let stopped = run.stop_index().unwrap_or(0);
    println!("N_stop = {}, stopped at k = {stopped}", ib.n_stop);
    println!("certificate violations: {}", run.bound_violations.len());

    for row in run.trace.iter().step_by((run.trace.len() / 6).max(1)) {
        let bound = row.cert_bound.unwrap_or(f64::NAN);
        println!(
            "k={:>5}  gap {:.3e}  R1*res {:.3e}  bound {:.3e}",
            row.k,
            row.gap,
            r1 * row.eq_res,
            bound
        );
    }
    Ok((ib.n_stop, stopped))
}

fn main() -> fpdgm::Result<()> {
    run_example().map(|_| ())
}
