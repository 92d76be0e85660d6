//! Result CSV and JSON sidecar.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::experiment::ResultRow;

pub const CSV_HEADER: &str =
    "family,scheme,rankFraction,leafFraction,samplesPerClass,normStorage,normProjection,meanError,stdError,seed";

/// Shortest representation of `v` rounded to 12 significant digits.
pub fn format_float(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

pub fn write_csv<W: Write>(rows: &[ResultRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.family,
            r.scheme,
            format_float(r.rank_fraction),
            format_float(r.leaf_fraction),
            r.samples_per_class,
            format_float(r.norm_storage),
            format_float(r.norm_projection),
            format_float(r.mean_error),
            format_float(r.std_error),
            r.seed
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Sidecar<'a> {
    command: &'a str,
    config: &'a ExperimentConfig,
    rows: &'a [ResultRow],
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Writes the CSV to `path` (stdout when `None`) and, for files, a JSON
/// sidecar next to it holding the command, config and per-repetition detail.
pub fn emit_results(rows: &[ResultRow], path: Option<&Path>, command: &str, cfg: &ExperimentConfig) -> Result<()> {
    match path {
        None => {
            let stdout = std::io::stdout();
            write_csv(rows, stdout.lock()).map_err(|e| Error::io(Path::new("<stdout>"), e))
        }
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            let mut buf = Vec::new();
            write_csv(rows, &mut buf).map_err(|e| Error::io(p, e))?;
            std::fs::write(p, buf).map_err(|e| Error::io(p, e))?;
            let side = sidecar_path(p);
            let json = serde_json::to_string_pretty(&Sidecar { command, config: cfg, rows })
                .map_err(|e| Error::format(&side, e.to_string()))?;
            std::fs::write(&side, json).map_err(|e| Error::io(&side, e))
        }
    }
}
