//! Flat `key = value` experiment configs.
//!
//! One dotted key per line; blank lines and lines starting with `#` are
//! ignored. Relative paths (explicit stepsize files, `output_path`) resolve
//! against the directory of the config file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use lyapex::benettin::{InitialBasis, RunConfig};
use lyapex::integrators::{Method, SolverSpec};
use lyapex::schedules::{Rule, StepsizeSchedule};
use lyapex::systems::{make_linear_diagonal, make_lorenz63, make_lorenz96, SystemRef};
use lyapex::weights::WeightScheme;
use lyapex::{DMatrix, DVector};

use crate::CliError;

/// Environment variable that overrides the `seed` key.
pub const SEED_ENV: &str = "LYAPEX_SEED";

#[derive(Debug, Clone, PartialEq)]
pub enum SystemDef {
    LinearDiagonal { diag: Vec<f64> },
    Lorenz63 { sigma: f64, rho: f64, beta: f64 },
    Lorenz96 { d: usize, forcing: f64 },
}

impl SystemDef {
    pub fn dim(&self) -> usize {
        match self {
            SystemDef::LinearDiagonal { diag } => diag.len(),
            SystemDef::Lorenz63 { .. } => 3,
            SystemDef::Lorenz96 { d, .. } => *d,
        }
    }

    pub fn build(&self) -> Result<SystemRef, CliError> {
        let sys: SystemRef = match self {
            SystemDef::LinearDiagonal { diag } => {
                Arc::new(make_linear_diagonal(diag).map_err(config_err)?)
            }
            SystemDef::Lorenz63 { sigma, rho, beta } => {
                Arc::new(make_lorenz63(*sigma, *rho, *beta).map_err(config_err)?)
            }
            SystemDef::Lorenz96 { d, forcing } => {
                Arc::new(make_lorenz96(*d, *forcing).map_err(config_err)?)
            }
        };
        Ok(sys)
    }

    /// The origin for linear systems, `(1, 1, 1)` for Lorenz-63 and the
    /// perturbed equilibrium `F + 0.01 e_1` for Lorenz-96.
    pub fn default_x0(&self) -> Vec<f64> {
        match self {
            SystemDef::LinearDiagonal { diag } => vec![0.0; diag.len()],
            SystemDef::Lorenz63 { .. } => vec![1.0; 3],
            SystemDef::Lorenz96 { d, forcing } => {
                let mut x = vec![*forcing; *d];
                x[0] += 0.01;
                x
            }
        }
    }

    pub fn default_transient(&self) -> (usize, f64) {
        match self {
            SystemDef::LinearDiagonal { .. } => (0, 0.0),
            SystemDef::Lorenz63 { .. } => (100_000, 0.001),
            SystemDef::Lorenz96 { .. } => (100_000, 0.01),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BasisSpec {
    Random,
    /// Column-major `d × k` entries.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemDef,
    pub solver: Method,
    /// Rule text as written, e.g. `power:0.5`.
    pub rule: String,
    pub h: f64,
    pub weights: Vec<WeightScheme>,
    pub k: usize,
    pub steps: usize,
    pub transient_steps: usize,
    pub transient_h: f64,
    pub seed: u64,
    pub record_every: usize,
    pub qr_interval: usize,
    pub x0: Vec<f64>,
    pub v0: BasisSpec,
    pub output_path: Option<PathBuf>,
    /// Directory that relative paths resolve against.
    pub base_dir: PathBuf,
}

const KEYS: &[&str] = &[
    "system.name",
    "system.diag",
    "system.sigma",
    "system.rho",
    "system.beta",
    "system.d",
    "system.F",
    "solver",
    "schedule.rule",
    "schedule.h",
    "weights",
    "k",
    "N",
    "transient_steps",
    "transient_h",
    "seed",
    "record_every",
    "qr_interval",
    "x0",
    "v0",
    "output_path",
];

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

/// Splits text into `key -> value`, rejecting malformed and repeated keys.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!(
                "line {}: expected 'key = value', got '{line}'",
                i + 1
            ))
        })?;
        let key = key.trim().to_string();
        if key.is_empty() {
            return Err(CliError::Config(format!("line {}: empty key", i + 1)));
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::Config(format!(
                "line {}: duplicate key '{key}'",
                i + 1
            )));
        }
    }
    Ok(map)
}

struct Fields {
    map: BTreeMap<String, String>,
}

impl Fields {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Config(format!("{key}: cannot parse '{v}'"))),
        }
    }

    fn require<T: FromStr>(&mut self, key: &str) -> Result<T, CliError> {
        self.parse(key)?
            .ok_or_else(|| CliError::Config(format!("missing required key '{key}'")))
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => parse_list(&v).map(Some).map_err(|_| {
                CliError::Config(format!(
                    "{key}: expected comma-separated numbers, got '{v}'"
                ))
            }),
        }
    }
}

fn parse_list(v: &str) -> Result<Vec<f64>, std::num::ParseFloatError> {
    v.split(',').map(|s| s.trim().parse::<f64>()).collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        Self::from_pairs(parse_pairs(text)?, base_dir)
    }

    pub fn from_pairs(map: BTreeMap<String, String>, base_dir: &Path) -> Result<Self, CliError> {
        if let Some(bad) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(CliError::Config(format!("unknown key '{bad}'")));
        }
        let mut f = Fields { map };
        let name: String = f.require("system.name")?;
        let system = match name.as_str() {
            "linear-diagonal" => SystemDef::LinearDiagonal {
                diag: f
                    .list("system.diag")?
                    .ok_or_else(|| CliError::Config("linear-diagonal needs system.diag".into()))?,
            },
            "lorenz63" => SystemDef::Lorenz63 {
                sigma: f.parse("system.sigma")?.unwrap_or(10.0),
                rho: f.parse("system.rho")?.unwrap_or(28.0),
                beta: f.parse("system.beta")?.unwrap_or(8.0 / 3.0),
            },
            "lorenz96" => SystemDef::Lorenz96 {
                d: f.parse("system.d")?.unwrap_or(40),
                forcing: f.parse("system.F")?.unwrap_or(10.0),
            },
            other => {
                return Err(CliError::Config(format!(
                    "unknown system '{other}' (expected linear-diagonal | lorenz63 | lorenz96)"
                )))
            }
        };
        if let Some(stray) = [
            "system.diag",
            "system.sigma",
            "system.rho",
            "system.beta",
            "system.d",
            "system.F",
        ]
        .iter()
        .find(|k| f.map.contains_key(**k))
        {
            return Err(CliError::Config(format!(
                "key '{stray}' does not apply to system '{name}'"
            )));
        }

        let solver: Method = f.require::<String>("solver")?.parse().map_err(config_err)?;
        let rule: String = f.require("schedule.rule")?;
        let h: f64 = f.require("schedule.h")?;
        let weights = match f.take("weights") {
            None => Vec::new(),
            Some(v) if v.trim().is_empty() || v.trim() == "none" => Vec::new(),
            Some(v) => v
                .split(',')
                .map(|s| s.parse::<WeightScheme>().map_err(config_err))
                .collect::<Result<Vec<_>, _>>()?,
        };
        let steps: usize = f.require("N")?;
        let k: usize = f.parse("k")?.unwrap_or(system.dim());
        let (default_steps, default_h) = system.default_transient();
        let transient_steps = f.parse("transient_steps")?.unwrap_or(default_steps);
        let transient_h = f.parse("transient_h")?.unwrap_or(default_h);
        let seed = f.parse("seed")?.unwrap_or(0);
        let record_every = f.parse("record_every")?.unwrap_or(1);
        let qr_interval = f.parse("qr_interval")?.unwrap_or(1);
        let x0 = f.list("x0")?.unwrap_or_else(|| system.default_x0());
        let v0 = match f.take("v0") {
            None => BasisSpec::Random,
            Some(v) if v == "random" => BasisSpec::Random,
            Some(v) => BasisSpec::Explicit(parse_list(&v).map_err(|_| {
                CliError::Config(format!("v0: expected 'random' or numbers, got '{v}'"))
            })?),
        };
        let output_path = f.take("output_path").map(PathBuf::from);
        Ok(ExperimentConfig {
            system,
            solver,
            rule,
            h,
            weights,
            k,
            steps,
            transient_steps,
            transient_h,
            seed,
            record_every,
            qr_interval,
            x0,
            v0,
            output_path,
            base_dir: base_dir.to_path_buf(),
        })
    }

    /// Applies `LYAPEX_SEED` if set.
    pub fn apply_env_seed(&mut self) -> Result<(), CliError> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v.trim().parse().map_err(|_| {
                CliError::Config(format!("{SEED_ENV}: not an unsigned integer: '{v}'"))
            })?;
        }
        Ok(())
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn resolved_output(&self) -> Option<PathBuf> {
        self.output_path.as_deref().map(|p| self.resolve(p))
    }

    pub fn schedule(&self) -> Result<StepsizeSchedule, CliError> {
        let rule = match self.rule.trim().strip_prefix("explicit:") {
            Some(path) => Rule::load_explicit(&self.resolve(Path::new(path.trim()))),
            None => Rule::parse(&self.rule),
        }
        .map_err(config_err)?;
        StepsizeSchedule::new(self.h, rule).map_err(config_err)
    }

    /// Builds and validates the run configuration; every failure here is a
    /// configuration error.
    pub fn to_run_config(&self) -> Result<RunConfig, CliError> {
        let d = self.system.dim();
        let system = self.system.build()?;
        if self.x0.len() != d {
            return Err(CliError::Config(format!(
                "x0 has {} entries, system dimension is {d}",
                self.x0.len()
            )));
        }
        if self.k == 0 || self.k > d {
            return Err(CliError::Config(format!(
                "number of exponents k={} must satisfy 1 <= k <= d={d}",
                self.k
            )));
        }
        let basis = match &self.v0 {
            BasisSpec::Random => InitialBasis::Random { seed: self.seed },
            BasisSpec::Explicit(v) => {
                if v.len() != d * self.k {
                    return Err(CliError::Config(format!(
                        "v0 has {} entries, expected d*k = {d}*{} = {}",
                        v.len(),
                        self.k,
                        d * self.k
                    )));
                }
                InitialBasis::Explicit(DMatrix::from_column_slice(d, self.k, v))
            }
        };
        let cfg = RunConfig::new(
            system,
            SolverSpec::new(self.solver),
            self.schedule()?,
            self.k,
            self.steps,
            DVector::from_vec(self.x0.clone()),
        )
        .with_transient(self.transient_steps, self.transient_h)
        .with_basis(basis)
        .with_weights(&self.weights)
        .with_qr_interval(self.qr_interval)
        .with_record_every(self.record_every)
        .with_step_records(false);
        cfg.validate().map_err(config_err)?;
        Ok(cfg)
    }

    /// Canonical `key = value` lines, every default spelled out. Omits
    /// `output_path`. Floats print in shortest round-trip form.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut out: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        match &self.system {
            SystemDef::LinearDiagonal { diag } => {
                push("system.name", "linear-diagonal".into());
                push("system.diag", join(diag));
            }
            SystemDef::Lorenz63 { sigma, rho, beta } => {
                push("system.name", "lorenz63".into());
                push("system.sigma", sigma.to_string());
                push("system.rho", rho.to_string());
                push("system.beta", beta.to_string());
            }
            SystemDef::Lorenz96 { d, forcing } => {
                push("system.name", "lorenz96".into());
                push("system.d", d.to_string());
                push("system.F", forcing.to_string());
            }
        }
        push("solver", self.solver.to_string());
        push("schedule.rule", self.rule.clone());
        push("schedule.h", self.h.to_string());
        push(
            "weights",
            if self.weights.is_empty() {
                "none".into()
            } else {
                self.weights
                    .iter()
                    .map(|w| w.name())
                    .collect::<Vec<_>>()
                    .join(",")
            },
        );
        push("k", self.k.to_string());
        push("N", self.steps.to_string());
        push("transient_steps", self.transient_steps.to_string());
        push("transient_h", self.transient_h.to_string());
        push("seed", self.seed.to_string());
        push("record_every", self.record_every.to_string());
        push("qr_interval", self.qr_interval.to_string());
        push("x0", join(&self.x0));
        push(
            "v0",
            match &self.v0 {
                BasisSpec::Random => "random".into(),
                BasisSpec::Explicit(v) => join(v),
            },
        );
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.to_pairs() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}
