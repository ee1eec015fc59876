// A small experiment grid over problem size, regularization and accuracy,
// written as a results CSV plus plot-data files.
//
// ```bash
// cargo run -p fpdgm --example gamma_sweep
// ```

use fpdgm::bench::{write_sweep_outputs, SweepConfig};
use fpdgm::{run_sweep, SweepRecord};

pub fn run_example() -> fpdgm::Result<Vec<SweepRecord>> {
    let mut cfg = SweepConfig::new(vec![16, 81], vec![1.0, 0.5, 0.1], vec![1e-2]);
    cfg.seed = 1;
    cfg.jobs = Some(2);
    cfg.timing = false;

    let records = run_sweep(&cfg)?;
    println!(
        "{:<6} {:>4} {:>6} {:>10}",
        "solver", "n", "gamma", "iterations"
    );
    for r in &records {
        println!(
            "{:<6} {:>4} {:>6} {:>10}",
            r.solver.as_str(),
            r.n,
            r.gamma,
            r.iterations
        );
    }

    let dir = std::env::temp_dir().join("fpdgm_gamma_sweep");
    for path in write_sweep_outputs(&cfg, &records, &dir.join("sweep.csv"))? {
        println!("wrote {}", path.display());
    }
    Ok(records)
}

fn main() -> fpdgm::Result<()> {
    run_example().map(|_| ())
}
