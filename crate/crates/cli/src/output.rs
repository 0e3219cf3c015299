use std::io::Write;
use std::path::Path;

use lyapex::benettin::RunResult;
use tempfile::NamedTempFile;

use crate::CliError;

/// Shortest round-trip decimal; exponent form only for very small or very
/// large magnitudes. Never locale dependent.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn csv_header(result: &RunResult) -> String {
    let mut cols = vec!["n".to_string(), "h_n".into(), "t".into()];
    cols.extend((1..=result.k).map(|i| format!("mu_{i}")));
    for scheme in &result.weight_schemes {
        cols.extend((1..=result.k).map(|i| format!("muw_{}_{i}", scheme.name())));
    }
    cols.join(",")
}

/// `n,h_n,t,mu_1..mu_k[,muw_<scheme>_1..k]*`, one row per recorded step, LF
/// line endings.
pub fn render_csv(result: &RunResult) -> String {
    let mut out = csv_header(result);
    out.push('\n');
    for r in &result.records {
        let mut row = vec![r.n.to_string(), fmt_f64(r.h), fmt_f64(r.t)];
        row.extend(r.mu.iter().map(|x| fmt_f64(*x)));
        for per_scheme in &r.mu_weighted {
            row.extend(per_scheme.iter().map(|x| fmt_f64(*x)));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Runtime(format!("writing {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
