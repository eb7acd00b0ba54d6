//! Shared helpers: config echo, output directory handling, endpoint files,
//! degree/radian conversion at the boundary.

use chainpath::angles::deg_to_rad;
use chainpath::{Error, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Write the fully resolved configuration as JSON into the output directory
/// so every run is reproducible from its artifacts.
pub fn echo_config<T: Serialize>(out: &Path, config: &T) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let text = serde_json::to_string_pretty(config)
        .map_err(|e| Error::Format(format!("config serialization: {e}")))?;
    std::fs::write(out.join("config.json"), text + "\n")?;
    Ok(())
}

pub fn out_file(out: &Path, name: &str) -> PathBuf {
    out.join(name)
}

/// Read an endpoints file: a CSV with header `theta_1_deg,...,theta_n_deg`
/// and exactly two rows (conformation A, then conformation B). Angles are
/// degrees at this boundary and radians inside.
pub fn read_endpoints_deg(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Format(format!("{}: empty endpoints file", path.display())))?;
    let width = header.split(',').count();
    if width == 0 || !header.contains("deg") {
        return Err(Error::Format(format!(
            "{}: endpoints header must name *_deg columns",
            path.display()
        )));
    }
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width {
            return Err(Error::CsvRow {
                path: path.display().to_string(),
                line: idx + 1,
                message: format!("expected {width} fields, got {}", fields.len()),
            });
        }
        let row: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| Error::CsvRow {
            path: path.display().to_string(),
            line: idx + 1,
            message: format!("bad angle: {e}"),
        })?;
        rows.push(row.into_iter().map(deg_to_rad).collect::<Vec<f64>>());
    }
    if rows.len() != 2 {
        return Err(Error::Format(format!(
            "{}: endpoints file needs exactly 2 rows, got {}",
            path.display(),
            rows.len()
        )));
    }
    let b = rows.pop().unwrap();
    let a = rows.pop().unwrap();
    Ok((a, b))
}
