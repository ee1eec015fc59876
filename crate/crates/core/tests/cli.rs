use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fpdgm(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpdgm"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn solve_writes_a_trace_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = fpdgm(
        &[
            "solve",
            "--family",
            "rot",
            "--p",
            "8",
            "--gamma",
            "0.1",
            "--solver",
            "fpdgm",
            "--eps-rel",
            "0.01",
            "--out",
            "run/trace.csv",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let trace = fs::read_to_string(dir.path().join("run/trace.csv")).unwrap();
    assert!(trace.starts_with("k,phi_eta,f_xhat,gap,eq_res,in_res,cert_bound,wall_ns\n"));
    assert!(stdout(&out).contains("status=converged"));
}

#[test]
fn solve_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = fpdgm(
        &[
            "solve", "--family", "rot", "--p", "8", "--solver", "simplex",
        ],
        dir.path(),
    );
    assert_eq!(unknown.status.code(), Some(1));
    assert!(!unknown.stderr.is_empty());

    let capped = fpdgm(
        &["solve", "--family", "rot", "--p", "8", "--max-iter", "1"],
        dir.path(),
    );
    assert_eq!(capped.status.code(), Some(2));

    let missing = fpdgm(&["solve", "--p", "8"], dir.path());
    assert_eq!(missing.status.code(), Some(1));

    let wrong = fpdgm(
        &["solve", "--family", "elp", "--n", "12", "--solver", "bal"],
        dir.path(),
    );
    assert_eq!(wrong.status.code(), Some(1));

    let nofile = fpdgm(&["solve", "--config", "absent.toml"], dir.path());
    assert_eq!(nofile.status.code(), Some(1));
}

#[test]
fn solve_reads_instance_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.txt"), "1\n2\n# comment\n3\n4\n").unwrap();
    fs::write(dir.path().join("b.pgm"), "P2\n2 2\n9\n4 3\n2 1\n").unwrap();
    fs::write(
        dir.path().join("inst.toml"),
        "family = \"rot\"\ngamma = 0.5\ncost = \"grid\"\n\n[marginals]\nfiles = [\"a.txt\", \"b.pgm\"]\n",
    )
    .unwrap();
    let out = fpdgm(
        &[
            "solve",
            "--config",
            "inst.toml",
            "--solver",
            "bal",
            "--eps-rel",
            "1e-6",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn other_solvers_and_families() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["solve", "--family", "elp", "--n", "12", "--solver", "cgm"],
        vec!["solve", "--family", "ropt", "--p", "5", "--gamma", "0.5"],
        vec![
            "solve",
            "--family",
            "rot",
            "--p",
            "4",
            "--solver",
            "reg",
            "--eps-rel-g",
            "0.05",
        ],
    ] {
        let out = fpdgm(&args, dir.path());
        assert_eq!(
            out.status.code(),
            Some(0),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn bounds_prints_the_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = fpdgm(
        &[
            "bounds",
            "--l",
            "2",
            "--r1",
            "1",
            "--eps-f",
            "1e-2",
            "--eps-eq",
            "1e-2",
            "--thresholds",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("N_stop=39"), "{text}");
    assert!(text.contains("stop term inequality: omitted"));

    let out = fpdgm(
        &[
            "bounds", "--l", "2", "--r1", "1", "--eps-f", "1e-2", "--eps-eq", "1e-2",
        ],
        dir.path(),
    );
    let text = stdout(&out);
    assert!(text.contains("eps_eq~=5e-3"), "{text}");
    assert!(text.contains("N=56"), "{text}");

    let missing = fpdgm(&["bounds", "--r1", "1", "--eps-f", "1e-2"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
    let from_instance = fpdgm(
        &[
            "bounds", "--family", "rot", "--p", "4", "--gamma", "0.5", "--r1", "2", "--eps-f",
            "1e-3", "--eps-eq", "1e-3",
        ],
        dir.path(),
    );
    assert_eq!(from_instance.status.code(), Some(0));
    assert!(stdout(&from_instance).starts_with("L=4.0"));
}

#[test]
fn validate_selects_suites_and_detects_faults() {
    let dir = tempfile::tempdir().unwrap();
    let out = fpdgm(
        &["validate", "--check", "gradient", "--out", "checks.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("checks.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.starts_with("gradient,")));

    let faulty = fpdgm(
        &[
            "validate",
            "--check",
            "gradient",
            "--inject-fault",
            "wrong-sign-gradient",
        ],
        dir.path(),
    );
    assert_eq!(faulty.status.code(), Some(4));
}

#[test]
fn sweep_writes_results_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("sweep.toml"),
        "solvers = [\"fpdgm\", \"bal\", \"cgm\", \"reg\"]\nn = [16]\ngamma = [1.0, 0.5]\neps_rel = [0.01]\nseed = 4\nplot_reg = true\n",
    )
    .unwrap();
    let out = fpdgm(
        &[
            "sweep",
            "--config",
            "sweep.toml",
            "--out",
            "res/out.csv",
            "--jobs",
            "2",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("res/out.csv")).unwrap();
    assert!(csv.starts_with("solver,n,gamma,eps_rel,iterations,wall_ns,gap,eq_res,in_res,status\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * 4);
    assert!(dir
        .path()
        .join("res/out_iterations_vs_inv_gamma_reg.dat")
        .exists());
}

#[test]
fn help_is_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(fpdgm(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(fpdgm(&[], dir.path()).status.code(), Some(1));
}
