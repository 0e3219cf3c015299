//! Figure bundles: one CSV per curve plus a manifest of the exact configs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lyapex::benettin::RunResult;
use lyapex::integrators::Method;
use lyapex::weights::WeightScheme;

use crate::config::{BasisSpec, ExperimentConfig, SystemDef};
use crate::output::{fmt_f64, render_csv, write_atomic};
use crate::{execute, CliError};

pub const FIGURES: [&str; 4] = ["fig1", "fig2", "fig3", "fig4"];
pub const MANIFEST: &str = "manifest.txt";

/// Lorenz-63 reference values: the middle exponent and the trace.
const L63_SUM: f64 = -41.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Full,
}

impl Scale {
    pub fn name(self) -> &'static str {
        match self {
            Scale::Desk => "desk",
            Scale::Full => "full",
        }
    }
}

impl std::str::FromStr for Scale {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            _ => Err(CliError::Config(format!(
                "unknown scale '{s}' (expected desk | full)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub figure: String,
    pub scale: String,
    pub curves: Vec<(String, ExperimentConfig)>,
}

struct Spec<'a> {
    system: &'a SystemDef,
    solver: Method,
    k: usize,
    steps: usize,
    records: usize,
}

impl Spec<'_> {
    fn curve(&self, rule: &str, h: f64, weights: &[WeightScheme]) -> ExperimentConfig {
        let (transient_steps, transient_h) = self.system.default_transient();
        ExperimentConfig {
            system: self.system.clone(),
            solver: self.solver,
            rule: rule.into(),
            h,
            weights: weights.to_vec(),
            k: self.k,
            steps: self.steps,
            transient_steps,
            transient_h,
            seed: 0,
            record_every: (self.steps / self.records).max(1),
            qr_interval: 1,
            x0: self.system.default_x0(),
            v0: BasisSpec::Random,
            output_path: None,
            base_dir: PathBuf::from("."),
        }
    }
}

/// The curves of one figure, in a fixed order.
pub fn figure_curves(
    figure: &str,
    scale: Scale,
) -> Result<Vec<(String, ExperimentConfig)>, CliError> {
    let desk = scale == Scale::Desk;
    let adaptive = [WeightScheme::Adaptive];
    let uniform = [WeightScheme::Uniform];
    let named =
        |v: Vec<(&str, ExperimentConfig)>| v.into_iter().map(|(n, c)| (n.to_string(), c)).collect();
    match figure {
        "fig1" => {
            let system = SystemDef::LinearDiagonal {
                diag: vec![1.0, -2.0],
            };
            let spec = Spec {
                system: &system,
                solver: Method::Euler,
                k: 2,
                steps: if desk { 100_000 } else { 1_000_000 },
                records: 1000,
            };
            Ok(named(vec![
                ("constant-0.05", spec.curve("constant", 0.05, &[])),
                ("constant-0.01", spec.curve("constant", 0.01, &[])),
                ("constant-0.005", spec.curve("constant", 0.005, &[])),
                ("power-adaptive", spec.curve("power:0.5", 0.1, &adaptive)),
                ("power-uniform", spec.curve("power:0.5", 0.1, &uniform)),
            ]))
        }
        "fig2" | "fig3" => {
            let system = SystemDef::Lorenz63 {
                sigma: 10.0,
                rho: 28.0,
                beta: 8.0 / 3.0,
            };
            let spec = Spec {
                system: &system,
                solver: Method::Rk4,
                k: 3,
                steps: if desk { 100_000 } else { 10_000_000 },
                records: 1000,
            };
            Ok(named(vec![
                ("constant-0.001", spec.curve("constant", 0.001, &[])),
                ("constant-0.0005", spec.curve("constant", 0.0005, &[])),
                ("constant-0.00025", spec.curve("constant", 0.00025, &[])),
                ("power-adaptive", spec.curve("power:0.5", 0.1, &adaptive)),
                ("power-uniform", spec.curve("power:0.5", 0.1, &uniform)),
            ]))
        }
        "fig4" => {
            let system = SystemDef::Lorenz96 {
                d: 40,
                forcing: 10.0,
            };
            let steps = if desk { 100_000 } else { 1_000_000 };
            let spec = Spec {
                system: &system,
                solver: Method::Rk4,
                k: 40,
                steps,
                records: 100,
            };
            let reference = Spec {
                steps: steps * 10,
                ..spec
            };
            Ok(named(vec![
                ("a-constant-0.01", spec.curve("constant", 0.01, &[])),
                ("b-power-adaptive", spec.curve("power:0.5", 0.1, &adaptive)),
                ("c-power-uniform", spec.curve("power:0.5", 0.1, &uniform)),
                (
                    "reference-constant-0.001",
                    reference.curve("constant", 0.001, &[]),
                ),
            ]))
        }
        other => Err(CliError::Config(format!(
            "unknown figure '{other}' (expected one of {})",
            FIGURES.join(", ")
        ))),
    }
}

/// The estimate plotted for a curve: the weighted one when a weighting was
/// asked for, the plain one otherwise.
fn plotted(cfg: &ExperimentConfig, mu: &[f64], weighted: &[Vec<f64>]) -> Vec<f64> {
    match cfg.weights.first() {
        Some(_) => weighted[0].clone(),
        None => mu.to_vec(),
    }
}

fn errors_csv(cfg: &ExperimentConfig, result: &RunResult) -> String {
    let mut out = String::from("n,t,le2_error,sum_error\n");
    for r in &result.records {
        let mu = plotted(cfg, &r.mu, &r.mu_weighted);
        let sum: f64 = mu.iter().sum();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.n,
            fmt_f64(r.t),
            fmt_f64(mu[1].abs()),
            fmt_f64((sum - L63_SUM).abs())
        );
    }
    out
}

fn spectra_csv(curves: &[(String, ExperimentConfig)], results: &[RunResult]) -> String {
    let spectra: Vec<Vec<f64>> = curves
        .iter()
        .zip(results)
        .map(|((_, cfg), res)| {
            let last = res.records.last().expect("runs record their final step");
            let mut mu = plotted(cfg, &last.mu, &last.mu_weighted);
            mu.sort_by(|a, b| b.total_cmp(a));
            mu
        })
        .collect();
    let mut out = String::from("i");
    for (name, _) in curves {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..spectra[0].len() {
        out.push_str(&(i + 1).to_string());
        for s in &spectra {
            out.push(',');
            out.push_str(&fmt_f64(s[i]));
        }
        out.push('\n');
    }
    out
}

pub fn manifest_text(figure: &str, scale: Scale, curves: &[(String, ExperimentConfig)]) -> String {
    let mut s = String::new();
    let names: Vec<&str> = curves.iter().map(|(n, _)| n.as_str()).collect();
    let _ = writeln!(s, "figure = {figure}");
    let _ = writeln!(s, "scale = {}", scale.name());
    let _ = writeln!(s, "curves = {}", names.join(","));
    for (name, cfg) in curves {
        s.push('\n');
        let _ = writeln!(s, "{name}.csv = {name}.csv");
        for (k, v) in cfg.to_pairs() {
            let _ = writeln!(s, "{name}.{k} = {v}");
        }
    }
    s
}

/// Reads a manifest back into the configs it lists.
pub fn read_manifest(path: &Path) -> Result<Manifest, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut pairs = crate::config::parse_pairs(&text)?;
    let mut take = |k: &str| {
        pairs
            .remove(k)
            .ok_or_else(|| CliError::Config(format!("manifest is missing '{k}'")))
    };
    let figure = take("figure")?;
    let scale = take("scale")?;
    let names: Vec<String> = take("curves")?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let base = path.parent().unwrap_or(Path::new("."));
    let mut curves = Vec::new();
    for name in names {
        let prefix = format!("{name}.");
        let mut map = BTreeMap::new();
        pairs.retain(|k, v| match k.strip_prefix(&prefix) {
            Some("csv") => false,
            Some(rest) => {
                map.insert(rest.to_string(), v.clone());
                false
            }
            None => true,
        });
        curves.push((name, ExperimentConfig::from_pairs(map, base)?));
    }
    if let Some(k) = pairs.keys().next() {
        return Err(CliError::Config(format!(
            "manifest key '{k}' belongs to no listed curve"
        )));
    }
    Ok(Manifest {
        figure,
        scale,
        curves,
    })
}

/// Runs every curve of a figure concurrently and writes the bundle into
/// `out`. Returns the paths written.
pub fn reproduce(figure: &str, scale: Scale, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let curves = figure_curves(figure, scale)?;
    let results: Vec<Result<RunResult, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = curves
            .iter()
            .map(|(_, cfg)| scope.spawn(move || execute(cfg).map_err(|(e, _)| e)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(CliError::Runtime("curve worker panicked".into())))
            })
            .collect()
    });
    let mut done = Vec::with_capacity(results.len());
    for ((name, _), r) in curves.iter().zip(results) {
        done.push(r.map_err(|e| match e {
            CliError::Runtime(m) => CliError::Runtime(format!("curve {name}: {m}")),
            other => other,
        })?);
    }

    let mut written = Vec::new();
    let mut write = |file: String, body: &str| -> Result<(), CliError> {
        let p = out.join(file);
        write_atomic(&p, body.as_bytes())?;
        written.push(p);
        Ok(())
    };
    for ((name, cfg), res) in curves.iter().zip(&done) {
        write(format!("{name}.csv"), &render_csv(res))?;
        if figure == "fig2" {
            write(format!("{name}.errors.csv"), &errors_csv(cfg, res))?;
        }
    }
    if figure == "fig4" {
        write("spectra.csv".into(), &spectra_csv(&curves, &done))?;
    }
    write(MANIFEST.into(), &manifest_text(figure, scale, &curves))?;
    Ok(written)
}

pub fn cmd_reproduce(figure: &str, scale: Scale, out: Option<&Path>) -> Result<(), CliError> {
    // Reject a bad figure before creating any directory.
    figure_curves(figure, scale)?;
    let dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| Path::new("out").join(figure));
    for p in reproduce(figure, scale, &dir)? {
        println!("{}", p.display());
    }
    Ok(())
}
