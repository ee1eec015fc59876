// Entropy-linear programming: the closest distribution to a prior (in
// Kullback–Leibler divergence) satisfying linear moment constraints.
//
// ```bash
// cargo run -p fpdgm --example entropy_lp
// ```

use fpdgm::oracles::DenseMatrix;
use fpdgm::{solve, DualOracle, ElpInstance, SolveOptions, SolveReport, Tolerances};

pub fn run_example() -> fpdgm::Result<SolveReport> {
    // six outcomes 1..=6 with a uniform prior; require mean 4.5
    let faces: Vec<f64> = (1..=6).map(f64::from).collect();
    let matrix = DenseMatrix::new(1, 6, faces.clone())?;
    let elp = ElpInstance::new(vec![1.0 / 6.0; 6], matrix, vec![4.5])?;

    let report = solve(
        &elp,
        &Tolerances::new(1e-7, 1e-7, 0.0),
        &SolveOptions::default(),
    )?;
    let x = &report.primal;
    let mean: f64 = x.iter().zip(&faces).map(|(p, f)| p * f).sum();
    println!(
        "status     {} after {} iterations",
        report.status, report.iterations
    );
    println!("mean       {mean:.7}");
    println!("distribution");
    for (f, p) in faces.iter().zip(x.iter()) {
        println!("  {f}  {p:.6}");
    }
    // maximum-entropy solutions are exponential in the constraint
    let ratio = x[1] / x[0];
    let geometric = x.windows(2).all(|w| (w[1] / w[0] - ratio).abs() < 1e-4);
    println!("geometric  {geometric}");
    println!("L          {:.3}", elp.lipschitz());

    let random = ElpInstance::random(40, 8, 7)?;
    let r = solve(
        &random,
        &Tolerances::new(1e-6, 1e-6, 0.0),
        &SolveOptions::default(),
    )?;
    println!(
        "random n=40 m=8: {} in {} iterations",
        r.status, r.iterations
    );
    Ok(report)
}

fn main() -> fpdgm::Result<()> {
    run_example().map(|_| ())
}
