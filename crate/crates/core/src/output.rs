//! Atomic CSV/JSON artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::holonomy::FramePath;
use crate::lasso::ScanResult;
use crate::spectral::EnumeratedSpectrum;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "DIRAC_LASSO_OUT";
pub const DEFAULT_OUTPUT_DIR: &str = "dirac-lasso-out";

pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR), PathBuf::from)
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// Writes to a temporary sibling, syncs, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("{}: not a file path", path.display())))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(io_err(path, e));
    }
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Renders a CSV table; the header line is always written, even with no rows.
pub fn csv_string<I, R>(header: &[String], rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(to_err)?;
    for row in rows {
        w.write_record(row).map_err(to_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn headers(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// `j,t,lambda`, one row per eigenvalue per sample.
pub fn spectrum_csv(spectrum: &EnumeratedSpectrum) -> Result<String> {
    csv_string(
        &headers(&["j", "t", "lambda"]),
        spectrum.rows().map(|(j, t, l)| [j.to_string(), t.to_string(), l.to_string()]),
    )
}

/// `r,theta,min_gap` in grid order.
pub fn gap_map_csv(scan: &ScanResult) -> Result<String> {
    csv_string(
        &headers(&["r", "theta", "min_gap"]),
        scan.points
            .iter()
            .map(|p| [p.r.to_string(), p.theta.to_string(), p.min_gap.to_string()]),
    )
}

/// `t,f_0_0,f_1_0,…` with column-major frame entries.
pub fn frames_csv(path: &FramePath) -> Result<String> {
    let mut header = vec!["t".to_string()];
    header.extend(path.entry_names());
    csv_string(
        &header,
        path.rows().map(|(t, entries)| {
            std::iter::once(t.to_string())
                .chain(entries.into_iter().map(|x| x.to_string()))
                .collect::<Vec<_>>()
        }),
    )
}
