//! Benchmark instances and experiment sweeps over the regularization
//! parameter and the relative accuracy.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{cgm_fletcher_reeves, reg_dual_fgm, sinkhorn_balance, RegDelta};
use crate::dual::{DualPoint, Tolerances};
use crate::error::{Error, Result};
use crate::oracles::{square_side, DualOracle, Problem, RotInstance};
use crate::solver::{solve, SolveOptions, SolveReport};

/// Absolute tolerance used when a relative tolerance collapses to zero.
pub const TOLERANCE_FLOOR: f64 = 1e-12;

/// Squared Euclidean distances between the points of a `√p × √p` integer
/// lattice, enumerated row-major.
pub fn grid_cost_matrix(p: usize) -> Result<Vec<f64>> {
    let side = square_side(p)?;
    let coord = |k: usize| ((k / side) as f64, (k % side) as f64);
    let mut cost = Vec::with_capacity(p * p);
    for i in 0..p {
        let (xi, yi) = coord(i);
        for j in 0..p {
            let (xj, yj) = coord(j);
            cost.push((xi - xj).powi(2) + (yi - yj).powi(2));
        }
    }
    Ok(cost)
}

/// A draw from the uniform distribution on the simplex (flat Dirichlet) by
/// normalizing exponential variates.
pub fn flat_dirichlet<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|_| loop {
            let e: f64 = rng.sample(Exp1);
            if e > 0.0 {
                break e;
            }
        })
        .collect();
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v
}

/// Two independent flat-Dirichlet marginals and their stack `b₁ = (a₁, a₂)`.
pub fn random_marginals(p: usize, seed: u64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a1 = flat_dirichlet(&mut rng, p);
    let a2 = flat_dirichlet(&mut rng, p);
    let mut b1 = a1.clone();
    b1.extend_from_slice(&a2);
    (a1, a2, b1)
}

/// `ε_f = ε_f^rel·|f(x(0))|`, `ε_eq = ε_g^rel·‖A₁x(0) − b₁‖₂`,
/// `ε_in = ε_g^rel·‖(A₂x(0) − b₂)₊‖₂`; absent blocks get zero.
pub fn relative_tolerances<O: DualOracle + ?Sized>(
    oracle: &O,
    eps_rel_f: f64,
    eps_rel_g: f64,
) -> Result<Tolerances> {
    for (name, v) in [("eps_rel_f", eps_rel_f), ("eps_rel_g", eps_rel_g)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidTolerance(format!("{name} = {v}")));
        }
    }
    let dims = oracle.dims();
    let x0 = oracle.inner_solution(&DualPoint::zeros(dims))?;
    let (eq0, in0) = oracle.residual_norms(&x0);
    let tol = Tolerances::new(
        eps_rel_f * oracle.objective(&x0).abs(),
        if dims.m_eq > 0 { eps_rel_g * eq0 } else { 0.0 },
        if dims.m_in > 0 { eps_rel_g * in0 } else { 0.0 },
    );
    if tol.f == 0.0 {
        return Err(Error::ZeroTolerance("objective"));
    }
    if dims.m_eq > 0 && tol.eq == 0.0 {
        return Err(Error::ZeroTolerance("equality residual"));
    }
    if dims.m_in > 0 && tol.ineq == 0.0 {
        return Err(Error::ZeroTolerance("inequality residual"));
    }
    Ok(tol)
}

/// [`relative_tolerances`], replacing any vanishing threshold by [`TOLERANCE_FLOOR`].
pub fn relative_tolerances_or_floor<O: DualOracle + ?Sized>(
    oracle: &O,
    eps_rel_f: f64,
    eps_rel_g: f64,
) -> Result<Tolerances> {
    match relative_tolerances(oracle, eps_rel_f, eps_rel_g) {
        Err(Error::ZeroTolerance(which)) => {
            log::warn!("zero relative tolerance for {which}; using {TOLERANCE_FLOOR}");
            let dims = oracle.dims();
            let x0 = oracle.inner_solution(&DualPoint::zeros(dims))?;
            let (eq0, in0) = oracle.residual_norms(&x0);
            let floor = |v: f64, present: bool| {
                if present {
                    v.max(TOLERANCE_FLOOR)
                } else {
                    0.0
                }
            };
            Ok(Tolerances::new(
                floor(eps_rel_f * oracle.objective(&x0).abs(), true),
                floor(eps_rel_g * eq0, dims.m_eq > 0),
                floor(eps_rel_g * in0, dims.m_in > 0),
            ))
        }
        other => other,
    }
}

#[derive(
    Clone,
    Copy,
    Debug,
    PartialEq,
    Eq,
    Hash,
    PartialOrd,
    Ord,
    Serialize,
    Deserialize,
    clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Fast primal-dual gradient method.
    Fpdgm,
    /// Sinkhorn balancing.
    Bal,
    /// Fletcher–Reeves conjugate gradient on the dual.
    Cgm,
    /// Fast gradient method on the Tikhonov-regularized dual.
    Reg,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [
        SolverKind::Fpdgm,
        SolverKind::Bal,
        SolverKind::Cgm,
        SolverKind::Reg,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SolverKind::Fpdgm => "fpdgm",
            SolverKind::Bal => "bal",
            SolverKind::Cgm => "cgm",
            SolverKind::Reg => "reg",
        }
    }

    pub fn run(
        &self,
        problem: &Problem,
        tol: &Tolerances,
        options: &SolveOptions,
    ) -> Result<SolveReport> {
        let oracle = problem.oracle();
        match self {
            SolverKind::Fpdgm => solve(oracle, tol, options),
            SolverKind::Bal => match problem.as_rot() {
                Some(rot) => sinkhorn_balance(rot, tol, options),
                None => Err(Error::NotApplicable(
                    "balancing (needs a transport instance)".into(),
                )),
            },
            SolverKind::Cgm => cgm_fletcher_reeves(oracle, tol, options),
            SolverKind::Reg => reg_dual_fgm(oracle, tol, options, RegDelta::Adaptive),
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidInstance(format!("unknown solver {s:?}")))
    }
}

fn default_solvers() -> Vec<SolverKind> {
    vec![SolverKind::Fpdgm, SolverKind::Bal, SolverKind::Cgm]
}

fn default_max_iter() -> usize {
    100_000
}

fn default_timing() -> bool {
    true
}

/// Experiment grid. Every `n` must be a perfect square (`n = p²`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(default = "default_solvers", alias = "families")]
    pub solvers: Vec<SolverKind>,
    #[serde(alias = "n_list")]
    pub n: Vec<usize>,
    #[serde(alias = "gamma_list")]
    pub gamma: Vec<f64>,
    #[serde(alias = "eps_rel_list")]
    pub eps_rel: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Worker threads; cells are independent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    /// Record wall-clock time; when off `wall_ns` is zero and outputs are reproducible byte for byte.
    #[serde(default = "default_timing")]
    pub timing: bool,
    /// Include the regularized method in the plot-data files.
    #[serde(default)]
    pub plot_reg: bool,
}

impl SweepConfig {
    pub fn new(n: Vec<usize>, gamma: Vec<f64>, eps_rel: Vec<f64>) -> Self {
        Self {
            solvers: default_solvers(),
            n,
            gamma,
            eps_rel,
            seed: 0,
            max_iter: default_max_iter(),
            output: None,
            jobs: None,
            timing: true,
            plot_reg: false,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let mut cfg: SweepConfig = toml::from_str(&text).map_err(|e| Error::parse(path, e))?;
        if let (Some(out), Some(dir)) = (&mut cfg.output, path.parent()) {
            if out.is_relative() {
                *out = dir.join(&*out);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() || self.n.is_empty() || self.gamma.is_empty() {
            return Err(Error::InvalidInstance(
                "sweep grid has an empty axis".into(),
            ));
        }
        if self.eps_rel.is_empty() {
            return Err(Error::InvalidInstance(
                "sweep grid has an empty axis".into(),
            ));
        }
        for &n in &self.n {
            square_side(n)?;
        }
        if let Some(g) = self.gamma.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(Error::InvalidInstance(format!(
                "gamma must be positive, found {g}"
            )));
        }
        if let Some(e) = self.eps_rel.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(Error::InvalidInstance(format!(
                "relative accuracy must lie in (0, 1), found {e}"
            )));
        }
        Ok(())
    }
}

/// One result row: `solver,n,gamma,eps_rel,iterations,wall_ns,gap,eq_res,in_res,status`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub solver: SolverKind,
    pub n: usize,
    pub gamma: f64,
    pub eps_rel: f64,
    pub iterations: usize,
    pub wall_ns: u64,
    pub gap: f64,
    pub eq_res: f64,
    pub in_res: f64,
    pub status: String,
}

/// Seed of the instance used for every cell sharing the `n_index`-th size.
pub fn instance_seed(seed: u64, n_index: usize) -> u64 {
    seed ^ (n_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// The benchmark transport instance: grid cost and flat-Dirichlet marginals.
pub fn benchmark_instance(n: usize, gamma: f64, seed: u64) -> Result<RotInstance> {
    let p = square_side(n)?;
    let (a1, a2, _) = random_marginals(p, seed);
    RotInstance::new(p, grid_cost_matrix(p)?, a1, a2, gamma)
}

fn run_cell(cfg: &SweepConfig, n_index: usize, gamma: f64, eps_rel: f64) -> Vec<SweepRecord> {
    let n = cfg.n[n_index];
    let failed = |solver: SolverKind, e: &Error| SweepRecord {
        solver,
        n,
        gamma,
        eps_rel,
        iterations: 0,
        wall_ns: 0,
        gap: f64::NAN,
        eq_res: f64::NAN,
        in_res: f64::NAN,
        status: format!("error: {e}"),
    };
    let setup = benchmark_instance(n, gamma, instance_seed(cfg.seed, n_index)).and_then(|rot| {
        let tol = relative_tolerances_or_floor(&rot, eps_rel, eps_rel)?;
        Ok((Problem::Rot(rot), tol))
    });
    let (problem, tol) = match setup {
        Ok(v) => v,
        Err(e) => return cfg.solvers.iter().map(|s| failed(*s, &e)).collect(),
    };
    let options = SolveOptions {
        max_iter: Some(cfg.max_iter),
        ..SolveOptions::default()
    };
    cfg.solvers
        .iter()
        .map(|&solver| {
            let start = Instant::now();
            let outcome = solver.run(&problem, &tol, &options);
            let wall_ns = if cfg.timing {
                start.elapsed().as_nanos() as u64
            } else {
                0
            };
            match outcome {
                Ok(r) => {
                    log::info!(
                        "{solver} n={n} gamma={gamma} eps_rel={eps_rel}: {} iterations ({})",
                        r.iterations,
                        r.status
                    );
                    SweepRecord {
                        solver,
                        n,
                        gamma,
                        eps_rel,
                        iterations: r.iterations,
                        wall_ns,
                        gap: r.final_gap,
                        eq_res: r.final_eq_residual,
                        in_res: r.final_in_residual,
                        status: r.status.to_string(),
                    }
                }
                Err(e) => failed(solver, &e),
            }
        })
        .collect()
}

/// Runs every `(n, γ, ε_rel)` cell and every configured solver. Records come
/// back in canonical order (n, then γ, then ε_rel, then solver) however many
/// workers are used.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    let cells: Vec<(usize, f64, f64)> = (0..cfg.n.len())
        .flat_map(|ni| {
            cfg.gamma
                .iter()
                .flat_map(move |&g| cfg.eps_rel.iter().map(move |&e| (ni, g, e)))
        })
        .collect();
    let jobs = cfg.jobs.unwrap_or(1).max(1);
    let per_cell: Vec<Vec<SweepRecord>> = if jobs == 1 {
        cells
            .iter()
            .map(|&(ni, g, e)| run_cell(cfg, ni, g, e))
            .collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidInstance(format!("thread pool: {e}")))?;
        pool.install(|| {
            cells
                .par_iter()
                .map(|&(ni, g, e)| run_cell(cfg, ni, g, e))
                .collect()
        })
    };
    Ok(per_cell.into_iter().flatten().collect())
}

pub fn write_records_csv<W: std::io::Write>(records: &[SweepRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: std::io::Read>(reader: R) -> Result<Vec<SweepRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize()
        .map(|rec| rec.map_err(Error::from))
        .collect()
}

/// Two-column plot data per solver: iterations against `1/γ`
/// (one block per `(n, ε_rel)`) and against `ε_rel` (one block per `(n, γ)`).
pub fn plot_data(records: &[SweepRecord], include_reg: bool) -> Vec<(String, String)> {
    let mut solvers: Vec<SolverKind> = records.iter().map(|r| r.solver).collect();
    solvers.sort();
    solvers.dedup();
    solvers.retain(|s| include_reg || *s != SolverKind::Reg);

    let mut files = Vec::new();
    for solver in solvers {
        let mine: Vec<&SweepRecord> = records.iter().filter(|r| r.solver == solver).collect();

        let mut by_gamma = String::from("# inv_gamma iterations\n");
        let mut keys: Vec<(usize, f64)> = Vec::new();
        for r in &mine {
            if !keys.contains(&(r.n, r.eps_rel)) {
                keys.push((r.n, r.eps_rel));
            }
        }
        for (n, eps) in keys {
            by_gamma.push_str(&format!("\n# n={n} eps_rel={eps}\n"));
            for r in mine.iter().filter(|r| r.n == n && r.eps_rel == eps) {
                push_point(&mut by_gamma, 1.0 / r.gamma, r);
            }
        }

        let mut by_eps = String::from("# eps_rel iterations\n");
        let mut keys: Vec<(usize, f64)> = Vec::new();
        for r in &mine {
            if !keys.contains(&(r.n, r.gamma)) {
                keys.push((r.n, r.gamma));
            }
        }
        for (n, gamma) in keys {
            by_eps.push_str(&format!("\n# n={n} gamma={gamma}\n"));
            for r in mine.iter().filter(|r| r.n == n && r.gamma == gamma) {
                push_point(&mut by_eps, r.eps_rel, r);
            }
        }
        files.push((format!("iterations_vs_inv_gamma_{solver}.dat"), by_gamma));
        files.push((format!("iterations_vs_eps_rel_{solver}.dat"), by_eps));
    }
    files
}

fn push_point(out: &mut String, x: f64, r: &SweepRecord) {
    if r.status == "converged" {
        out.push_str(&format!("{x} {}\n", r.iterations));
    } else {
        out.push_str(&format!("# {x} {} {}\n", r.iterations, r.status));
    }
}

/// Writes the results CSV to `output` and the plot-data files next to it.
pub fn write_sweep_outputs(
    cfg: &SweepConfig,
    records: &[SweepRecord],
    output: &Path,
) -> Result<Vec<PathBuf>> {
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_records_csv(records, fs::File::create(output)?)?;
    let mut written = vec![output.to_path_buf()];
    let dir = output.parent().unwrap_or_else(|| Path::new("."));
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sweep".into());
    for (name, body) in plot_data(records, cfg.plot_reg) {
        let path = dir.join(format!("{stem}_{name}"));
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_cost_examples() {
        let c = grid_cost_matrix(4).unwrap();
        // points (0,0) (0,1) (1,0) (1,1)
        assert_eq!(c[3], 2.0);
        assert_eq!(c[1], 1.0);
        assert_eq!(c.iter().copied().fold(0.0, f64::max), 2.0);
        for i in 0..4 {
            assert_eq!(c[i * 4 + i], 0.0);
            for j in 0..4 {
                assert_eq!(c[i * 4 + j], c[j * 4 + i]);
            }
        }
        assert!(grid_cost_matrix(8).is_err());
    }

    #[test]
    fn marginals_are_probability_vectors() {
        for p in [1, 4, 49] {
            let (a1, a2, b1) = random_marginals(p, 42);
            for a in [&a1, &a2] {
                assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(a.iter().all(|v| *v > 0.0));
            }
            assert_eq!(b1.len(), 2 * p);
            assert_eq!(&b1[..p], &a1[..]);
        }
    }

    #[test]
    fn marginals_are_seed_deterministic() {
        let a = random_marginals(16, 7);
        let b = random_marginals(16, 7);
        assert_eq!(a, b);
        assert_ne!(a.0, random_marginals(16, 8).0);
    }

    #[test]
    fn dirichlet_first_moment() {
        let p = 5;
        let draws = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut mean = vec![0.0; p];
        for _ in 0..draws {
            for (m, v) in mean.iter_mut().zip(flat_dirichlet(&mut rng, p)) {
                *m += v / draws as f64;
            }
        }
        // Var = (p − 1)/(p²(p + 1)) ≤ 1/p², so the mean is within 3/√(draws·p) of 1/p
        let band = 3.0 / ((draws * p) as f64).sqrt();
        for m in mean {
            assert!((m - 1.0 / p as f64).abs() <= band, "{m}");
        }
    }

    #[test]
    fn symmetric_instance_needs_the_floor() {
        let rot = RotInstance::new(2, vec![0.0; 4], vec![0.5; 2], vec![0.5; 2], 1.0).unwrap();
        assert!(matches!(
            relative_tolerances(&rot, 0.01, 0.01),
            Err(Error::ZeroTolerance("equality residual"))
        ));
        let tol = relative_tolerances_or_floor(&rot, 0.01, 0.01).unwrap();
        assert_eq!(tol.eq, TOLERANCE_FLOOR);
        assert_eq!(tol.ineq, 0.0);
    }

    #[test]
    fn relative_tolerances_are_linear() {
        let rot = benchmark_instance(16, 0.5, 3).unwrap();
        let t1 = relative_tolerances(&rot, 0.01, 0.02).unwrap();
        let t2 = relative_tolerances(&rot, 0.02, 0.04).unwrap();
        assert_eq!(t2.f, 2.0 * t1.f);
        assert_eq!(t2.eq, 2.0 * t1.eq);
        assert!(t1.f > 0.0 && t1.eq > 0.0);
        assert_eq!(t1.ineq, 0.0);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SweepConfig::new(vec![16], vec![0.5], vec![0.01]);
        assert!(cfg.validate().is_ok());
        cfg.n = vec![15];
        assert!(cfg.validate().is_err());
        cfg.n = vec![16];
        cfg.eps_rel = vec![1.5];
        assert!(cfg.validate().is_err());
        cfg.eps_rel = vec![0.01];
        cfg.gamma = vec![0.0];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_parses_field_aliases() {
        let text = r#"
            families = ["fpdgm", "bal"]
            n_list = [16, 25]
            gamma_list = [1.0, 0.5]
            eps_rel_list = [0.01]
            seed = 42
        "#;
        let cfg: SweepConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.solvers, vec![SolverKind::Fpdgm, SolverKind::Bal]);
        assert_eq!(cfg.n, vec![16, 25]);
        assert!(cfg.timing);
        assert!(!cfg.plot_reg);
    }

    #[test]
    fn solver_names_round_trip() {
        for s in SolverKind::ALL {
            assert_eq!(s.as_str().parse::<SolverKind>().unwrap(), s);
        }
        assert!("sinkhorn".parse::<SolverKind>().is_err());
    }
}
