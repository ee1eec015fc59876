//! The `fpdgm` command line: `solve`, `sweep`, `validate` and `bounds`.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 iteration cap reached,
//! 3 numerical failure, 4 failed validation check.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::{
    relative_tolerances_or_floor, run_sweep, write_sweep_outputs, SolverKind, SweepConfig,
};
use crate::dual::{BoundParams, TargetAccuracy, Tolerances};
use crate::error::{Error, Result};
use crate::oracles::{Family, InstanceSpec};
use crate::solver::{iteration_bounds, SolveOptions, Status};
use crate::validate::{run_checks, write_check_csv, Check, Fault};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ITERATION_CAP: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "fpdgm",
    version,
    about = "Fast primal-dual gradient method and baselines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one instance and write its trace.
    Solve(SolveArgs),
    /// Run an experiment grid from a config file.
    Sweep(SweepArgs),
    /// Run the oracle and solver self-checks.
    Validate(ValidateArgs),
    /// Print the a-priori iteration bounds.
    Bounds(BoundsArgs),
}

#[derive(Debug, Args)]
struct InstanceArgs {
    #[arg(long, value_enum)]
    family: Option<Family>,
    /// Transport side length (`n = p²`).
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Entropy-LP constraint rows.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Partial-transport mass.
    #[arg(long)]
    mass: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

impl InstanceArgs {
    fn spec(&self, config: Option<&Path>) -> Result<InstanceSpec> {
        let mut spec = match (config, self.family) {
            (Some(path), _) => InstanceSpec::load(path)?,
            (None, Some(family)) => InstanceSpec::new(family),
            (None, None) => {
                return Err(Error::InvalidInstance(
                    "either --family or --config is required".into(),
                ))
            }
        };
        if let Some(f) = self.family {
            spec.family = f;
        }
        if self.p.is_some() {
            spec.p = self.p;
        }
        if self.n.is_some() {
            spec.n = self.n;
        }
        if self.m.is_some() {
            spec.m = self.m;
        }
        if let Some(g) = self.gamma {
            spec.gamma = g;
        }
        if self.mass.is_some() {
            spec.mass = self.mass;
        }
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        Ok(spec)
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Instance description (TOML); flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SolverKind::Fpdgm)]
    solver: SolverKind,
    /// Relative accuracy for the objective (and the residuals unless `--eps-rel-g` is given).
    #[arg(long, default_value_t = 0.01)]
    eps_rel: f64,
    #[arg(long)]
    eps_rel_g: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Trace CSV path.
    #[arg(long, default_value = "trace.csv")]
    out: PathBuf,
    /// Write zeros in the `wall_ns` column.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Results CSV path; plot data is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    no_timing: bool,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Checks to run (default: all).
    #[arg(long, value_enum, value_delimiter = ',')]
    check: Vec<Check>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-check results CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, hide = true)]
    inject_fault: Option<Fault>,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    /// Dual Lipschitz constant; derived from the instance flags when omitted.
    #[arg(long, visible_alias = "l")]
    lipschitz: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    r1: f64,
    #[arg(long, default_value_t = 0.0)]
    r2: f64,
    #[arg(long)]
    eps_f: f64,
    #[arg(long)]
    eps_eq: Option<f64>,
    #[arg(long)]
    eps_in: Option<f64>,
    /// Take the accuracies as stopping thresholds ε̃ instead of target accuracies.
    #[arg(long)]
    thresholds: bool,
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn init_logging() {
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter("FPDGM_LOG"))
        .format_timestamp(None)
        .try_init();
}

/// Parses `args` (program name first) and runs the subcommand; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Validate(a) => cmd_validate(&a),
        Command::Bounds(a) => cmd_bounds(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn cmd_solve(a: &SolveArgs) -> Result<i32> {
    let solver = a.solver;
    let spec = a.instance.spec(a.config.as_deref())?;
    let problem = spec.build()?;
    let tol = relative_tolerances_or_floor(
        problem.oracle(),
        a.eps_rel,
        a.eps_rel_g.unwrap_or(a.eps_rel),
    )?;
    let options = SolveOptions {
        max_iter: a.max_iter,
        record_timing: !a.no_timing,
        ..SolveOptions::default()
    };
    let report = solver.run(&problem, &tol, &options)?;

    create_parent(&a.out)?;
    report.write_trace_csv(fs::File::create(&a.out)?)?;

    let mut out = std::io::stdout().lock();
    writeln!(out, "solver={solver}")?;
    writeln!(out, "family={}", problem.family().as_str())?;
    writeln!(out, "status={}", report.status)?;
    writeln!(out, "iterations={}", report.iterations)?;
    writeln!(
        out,
        "eps_f={:e} eps_eq={:e} eps_in={:e}",
        tol.f, tol.eq, tol.ineq
    )?;
    writeln!(out, "gap={:e}", report.final_gap)?;
    writeln!(out, "eq_res={:e}", report.final_eq_residual)?;
    writeln!(out, "in_res={:e}", report.final_in_residual)?;
    writeln!(out, "trace={}", a.out.display())?;

    Ok(match report.status {
        Status::Converged => EXIT_OK,
        Status::IterationCap => EXIT_ITERATION_CAP,
        Status::NumericalFailure => EXIT_NUMERICAL,
    })
}

fn cmd_sweep(a: &SweepArgs) -> Result<i32> {
    let mut cfg = SweepConfig::load(&a.config)?;
    if a.jobs.is_some() {
        cfg.jobs = a.jobs;
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if a.no_timing {
        cfg.timing = false;
    }
    let output = a
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("sweep.csv"));
    let records = run_sweep(&cfg)?;
    let written = write_sweep_outputs(&cfg, &records, &output)?;
    let failed = records.iter().filter(|r| r.status != "converged").count();
    println!(
        "cells={} records={} not_converged={failed}",
        records.len() / cfg.solvers.len(),
        records.len()
    );
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(EXIT_OK)
}

fn cmd_validate(a: &ValidateArgs) -> Result<i32> {
    let checks: Vec<Check> = if a.check.is_empty() {
        Check::ALL.to_vec()
    } else {
        a.check.clone()
    };
    let results = run_checks(&checks, a.seed, a.inject_fault);
    for r in &results {
        println!(
            "{} {:<9} {:<32} error={:.3e} threshold={:.1e}",
            if r.passed { "PASS" } else { "FAIL" },
            r.check,
            r.case,
            r.error,
            r.threshold
        );
    }
    if let Some(out) = &a.out {
        create_parent(out)?;
        write_check_csv(&results, fs::File::create(out)?)?;
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} checks, {failed} failed", results.len());
    Ok(if failed == 0 {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

fn cmd_bounds(a: &BoundsArgs) -> Result<i32> {
    let lipschitz = match a.lipschitz {
        Some(l) => l,
        None if a.instance.family.is_some() || a.config.is_some() => {
            let problem = a.instance.spec(a.config.as_deref())?.build()?;
            problem.oracle().lipschitz()
        }
        None => {
            return Err(Error::InvalidInstance(
                "--lipschitz or an instance (--family/--config) is required".into(),
            ))
        }
    };
    let bounds = BoundParams::new(a.r1, a.r2, lipschitz)?;
    let eps_eq = a.eps_eq.unwrap_or(0.0);
    let eps_in = a.eps_in.unwrap_or(0.0);
    let tol = if a.thresholds {
        Tolerances::new(a.eps_f, eps_eq, eps_in)
    } else {
        Tolerances::from_target(
            TargetAccuracy {
                f: a.eps_f,
                eq: eps_eq,
                ineq: eps_in,
            },
            &bounds,
        )
    };
    let ib = iteration_bounds(&bounds, &tol)?;

    let names = ["objective", "equality", "inequality"];
    println!("L={lipschitz:e} R1={} R2={}", a.r1, a.r2);
    if let Some(t) = tol.target {
        println!(
            "target eps_f={:e} eps_eq={:e} eps_in={:e}",
            t.f, t.eq, t.ineq
        );
    }
    println!(
        "thresholds eps_f~={:e} eps_eq~={:e} eps_in~={:e}",
        tol.f, tol.eq, tol.ineq
    );
    for (name, term) in names.iter().zip(ib.stop_terms) {
        match term {
            Some(t) => println!("stop term {name}: {t}"),
            None => println!("stop term {name}: omitted"),
        }
    }
    println!("N_stop={}", ib.n_stop);
    if let Some(terms) = ib.solution_terms {
        for (name, term) in names.iter().zip(terms) {
            match term {
                Some(t) => println!("solution term {name}: {t}"),
                None => println!("solution term {name}: omitted"),
            }
        }
    }
    if let Some(n) = ib.n_solution {
        println!("N={n}");
    }
    Ok(EXIT_OK)
}
