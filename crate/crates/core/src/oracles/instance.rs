//! Instance description files (TOML) and construction of concrete problems.
//!
//! ```toml
//! family = "rot"
//! p = 16
//! gamma = 0.1
//! seed = 42
//! cost = "grid"                            # auto | grid | random | zero | { file = "c.txt" }
//! marginals = "random"                     # random | uniform | { files = ["a.pgm", "b.txt"] }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{load_marginal, square_side, DualOracle, ElpInstance, RoptInstance, RotInstance};
use crate::bench::{grid_cost_matrix, random_marginals};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Elp,
    Rot,
    Ropt,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Elp => "elp",
            Family::Rot => "rot",
            Family::Ropt => "ropt",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostSource {
    /// Grid cost when `p` is a perfect square, otherwise seeded uniform `[0, 1)` costs.
    #[default]
    Auto,
    Grid,
    Random,
    Zero,
    /// Whitespace-separated `p × p` matrix, row-major.
    File(PathBuf),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarginalSource {
    #[default]
    Random,
    Uniform,
    Files([PathBuf; 2]),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// ELP constraint rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// ROPT transported mass; defaults to 0.8 of the smaller marginal total.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub cost: CostSource,
    #[serde(default)]
    pub marginals: MarginalSource,
}

fn default_gamma() -> f64 {
    1.0
}

impl InstanceSpec {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            p: None,
            n: None,
            m: None,
            gamma: default_gamma(),
            mass: None,
            seed: 0,
            cost: CostSource::Auto,
            marginals: MarginalSource::Random,
        }
    }

    /// Parses a TOML instance file; relative paths inside are resolved against
    /// the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let mut spec: InstanceSpec = toml::from_str(&text).map_err(|e| Error::parse(path, e))?;
        if let Some(dir) = path.parent() {
            let fix = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            };
            if let CostSource::File(p) = &mut spec.cost {
                fix(p);
            }
            if let MarginalSource::Files(files) = &mut spec.marginals {
                files.iter_mut().for_each(fix);
            }
        }
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("instance spec serializes")
    }

    fn side(&self, marginals: Option<&(Vec<f64>, Vec<f64>)>) -> Result<usize> {
        if let Some(p) = self.p {
            return Ok(p);
        }
        if let Some(n) = self.n {
            return square_side(n);
        }
        if let Some((a1, _)) = marginals {
            return Ok(a1.len());
        }
        Err(Error::InvalidInstance(
            "transport instance needs p or n".into(),
        ))
    }

    pub fn build(&self) -> Result<Problem> {
        match self.family {
            Family::Elp => {
                let n = self
                    .n
                    .or(self.p)
                    .ok_or_else(|| Error::InvalidInstance("ELP instance needs n".into()))?;
                let m = self.m.unwrap_or((n / 4).max(1));
                Ok(Problem::Elp(ElpInstance::random(n, m, self.seed)?))
            }
            Family::Rot | Family::Ropt => {
                let files = match &self.marginals {
                    MarginalSource::Files([f1, f2]) => {
                        Some((load_marginal(f1)?, load_marginal(f2)?))
                    }
                    _ => None,
                };
                let p = self.side(files.as_ref())?;
                let (a1, a2) = match (&self.marginals, files) {
                    (_, Some(pair)) => pair,
                    (MarginalSource::Uniform, None) => {
                        (vec![1.0 / p as f64; p], vec![1.0 / p as f64; p])
                    }
                    (_, None) => {
                        let (a1, a2, _) = random_marginals(p, self.seed);
                        (a1, a2)
                    }
                };
                let cost = self.cost_matrix(p)?;
                if self.family == Family::Rot {
                    Ok(Problem::Rot(RotInstance::new(p, cost, a1, a2, self.gamma)?))
                } else {
                    let total = a1.iter().sum::<f64>().min(a2.iter().sum());
                    let mass = self.mass.unwrap_or(0.8 * total);
                    Ok(Problem::Ropt(RoptInstance::new(
                        p, cost, a1, a2, mass, self.gamma,
                    )?))
                }
            }
        }
    }

    fn cost_matrix(&self, p: usize) -> Result<Vec<f64>> {
        let random = || {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(1);
            (0..p * p).map(|_| rng.random::<f64>()).collect()
        };
        match &self.cost {
            CostSource::Auto => match square_side(p) {
                Ok(_) => grid_cost_matrix(p),
                Err(_) => Ok(random()),
            },
            CostSource::Grid => grid_cost_matrix(p),
            CostSource::Random => Ok(random()),
            CostSource::Zero => Ok(vec![0.0; p * p]),
            CostSource::File(path) => {
                let text = fs::read_to_string(path)?;
                let values = text
                    .split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|e| Error::parse(path, e)))
                    .collect::<Result<Vec<_>>>()?;
                if values.len() != p * p {
                    return Err(Error::DimensionMismatch {
                        what: "cost file",
                        expected: p * p,
                        found: values.len(),
                    });
                }
                Ok(values)
            }
        }
    }
}

/// A concrete instance of one of the shipped families.
#[derive(Clone, Debug)]
pub enum Problem {
    Elp(ElpInstance),
    Rot(RotInstance),
    Ropt(RoptInstance),
}

impl Problem {
    pub fn oracle(&self) -> &dyn DualOracle {
        match self {
            Problem::Elp(p) => p,
            Problem::Rot(p) => p,
            Problem::Ropt(p) => p,
        }
    }

    pub fn as_rot(&self) -> Option<&RotInstance> {
        match self {
            Problem::Rot(r) => Some(r),
            _ => None,
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Problem::Elp(_) => Family::Elp,
            Problem::Rot(_) => Family::Rot,
            Problem::Ropt(_) => Family::Ropt,
        }
    }
}
