//! Output-directory resolution and CSV emission.
//!
//! All data files are CSV with a header row; floats are printed with the
//! shortest representation that round-trips, so byte-identical files mean
//! bit-identical results.

use crate::{CliError, CliResult};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Precedence: `--out` flag > `[output].directory` > `$SHG_OUT_ROOT/<command>`
/// > `./shg-out/<command>`.
pub fn resolve_out_dir(command: &str, flag: Option<&Path>, config: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = config {
        return p.to_path_buf();
    }
    let root = std::env::var_os("SHG_OUT_ROOT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("shg-out"));
    root.join(command)
}

/// Create the directory and verify it is writable.
pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    let probe = dir.join(".write-probe");
    std::fs::write(&probe, b"")
        .map_err(|e| CliError::Config(format!("{} is not writable: {e}", dir.display())))?;
    let _ = std::fs::remove_file(&probe);
    Ok(())
}

pub fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Write a CSV file: header row, then one row per record.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> CliResult<()>
where
    I: IntoIterator,
    I::Item: IntoIterator<Item = String>,
{
    let mut text = String::new();
    let _ = writeln!(text, "{}", header.join(","));
    for row in rows {
        let fields: Vec<String> = row.into_iter().collect();
        let _ = writeln!(text, "{}", fields.join(","));
    }
    std::fs::write(path, text)
        .map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// Standard per-observable estimate table. Non-finite values (estimates the
/// sample volume cannot support) become blank cells.
pub fn write_estimate_csv(
    path: &Path,
    rows: &[(f64, f64, f64)],
    n_effective: f64,
) -> CliResult<()> {
    let opt = |v: f64| if v.is_finite() { fmt(v) } else { String::new() };
    write_csv(
        path,
        &["k", "value", "standard_error", "n_effective"],
        rows.iter()
            .map(|(k, v, se)| vec![fmt(*k), opt(*v), opt(*se), fmt(n_effective)]),
    )
}
