// Transport between two grayscale images read as histograms (ASCII PGM).
// Zero pixels get a small mass so the entropic plan stays well defined.
//
// ```bash
// cargo run -p fpdgm --example image_marginals
// ```

use std::fs;

use fpdgm::bench::relative_tolerances;
use fpdgm::oracles::{CostSource, MarginalSource};
use fpdgm::{solve, Family, InstanceSpec, SolveOptions, SolveReport};

fn disc(cx: f64, cy: f64) -> String {
    let mut out = String::from("P2\n# disc\n4 4\n9\n");
    for y in 0..4 {
        let row: Vec<String> = (0..4)
            .map(|x| {
                let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                ((9.0 - 4.0 * d2).max(0.0).round() as u32).to_string()
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn run_example() -> fpdgm::Result<SolveReport> {
    let dir = std::env::temp_dir().join("fpdgm_image_marginals");
    fs::create_dir_all(&dir)?;
    let (left, right) = (dir.join("left.pgm"), dir.join("right.pgm"));
    fs::write(&left, disc(0.5, 0.5))?;
    fs::write(&right, disc(2.5, 2.0))?;

    let mut spec = InstanceSpec::new(Family::Rot);
    spec.gamma = 0.1;
    spec.cost = CostSource::Grid;
    spec.marginals = MarginalSource::Files([left, right]);
    let problem = spec.build()?;
    let rot = problem.as_rot().expect("transport instance");

    let tol = relative_tolerances(rot, 1e-3, 1e-3)?;
    let report = solve(rot, &tol, &SolveOptions::default())?;

    let p = rot.side();
    let cost: f64 = rot
        .cost()
        .iter()
        .zip(report.primal.iter())
        .map(|(c, x)| c * x)
        .sum();
    println!(
        "{p} pixels per image, {} iterations ({})",
        report.iterations, report.status
    );
    println!("transport cost {cost:.4}");
    println!("instance file:\n{}", spec.to_toml());
    Ok(report)
}

fn main() -> fpdgm::Result<()> {
    run_example().map(|_| ())
}
