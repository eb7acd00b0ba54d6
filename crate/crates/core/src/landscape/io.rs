//! Sample ingestion (CSV) and the binary library container.
//!
//! Sample files carry angles in degrees; everything in memory is radians.
//!
//! Library container layout (little-endian):
//!
//! ```text
//! magic  b"CPLB"
//! u32    format version (1)
//! u32    bins
//! f64    kappa
//! f64    kT
//! u32    view count
//! view record (repeated):
//!   u8   tag: 0 = single, 1 = pair
//!   str  kind (u16 length + utf-8)           [single]
//!   str  kind_a, str kind_b, u8 axis         [pair]
//!   f64  density values   (bins*bins)
//!   f64  energy values    (bins*bins)
//!   f64  energy grad_phi  (bins*bins)
//!   f64  energy grad_psi  (bins*bins)
//! ```
//!
//! A text manifest (`<library>.manifest.txt`) lists header fields and one
//! line per view.

use crate::angles::deg_to_rad;
use crate::error::{Error, Result};
use crate::landscape::grid::AngleGrid;
use crate::landscape::library::{PairAxis, PropensityLibrary, ViewGrids};
use std::collections::BTreeMap;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"CPLB";
const FORMAT_VERSION: u32 = 1;

/// Read a single-residue sample CSV with header `kind,phi_deg,psi_deg`.
pub fn read_single_samples(path: &Path) -> Result<BTreeMap<String, Vec<(f64, f64)>>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_open_err(path))?;
    check_headers(path, &mut reader, &["kind", "phi_deg", "psi_deg"])?;
    let mut out: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2; // header occupies line 1
        let record = record.map_err(|e| csv_row_err(path, line, e.to_string()))?;
        if record.len() != 3 {
            return Err(csv_row_err(
                path,
                line,
                format!("expected 3 fields, got {}", record.len()),
            ));
        }
        let kind = record[0].trim().to_string();
        if kind.is_empty() {
            return Err(csv_row_err(path, line, "empty residue kind".into()));
        }
        let phi = parse_angle_deg(path, line, &record[1])?;
        let psi = parse_angle_deg(path, line, &record[2])?;
        out.entry(kind).or_default().push((phi, psi));
    }
    Ok(out)
}

/// Read a pair-view sample CSV with header
/// `kind_a,kind_b,axis,angle1_deg,angle2_deg`.
pub fn read_pair_samples(
    path: &Path,
) -> Result<BTreeMap<(String, String, PairAxis), Vec<(f64, f64)>>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_open_err(path))?;
    check_headers(
        path,
        &mut reader,
        &["kind_a", "kind_b", "axis", "angle1_deg", "angle2_deg"],
    )?;
    let mut out: BTreeMap<(String, String, PairAxis), Vec<(f64, f64)>> = BTreeMap::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| csv_row_err(path, line, e.to_string()))?;
        if record.len() != 5 {
            return Err(csv_row_err(
                path,
                line,
                format!("expected 5 fields, got {}", record.len()),
            ));
        }
        let kind_a = record[0].trim().to_string();
        let kind_b = record[1].trim().to_string();
        if kind_a.is_empty() || kind_b.is_empty() {
            return Err(csv_row_err(path, line, "empty residue kind".into()));
        }
        let axis: PairAxis = record[2]
            .trim()
            .parse()
            .map_err(|e: Error| csv_row_err(path, line, e.to_string()))?;
        let a1 = parse_angle_deg(path, line, &record[3])?;
        let a2 = parse_angle_deg(path, line, &record[4])?;
        out.entry((kind_a, kind_b, axis)).or_default().push((a1, a2));
    }
    Ok(out)
}

fn parse_angle_deg(path: &Path, line: usize, field: &str) -> Result<f64> {
    let deg: f64 = field
        .trim()
        .parse()
        .map_err(|_| csv_row_err(path, line, format!("bad angle value {field:?}")))?;
    if !deg.is_finite() {
        return Err(csv_row_err(path, line, format!("non-finite angle {field:?}")));
    }
    Ok(deg_to_rad(deg))
}

fn check_headers(path: &Path, reader: &mut csv::Reader<std::fs::File>, want: &[&str]) -> Result<()> {
    let headers = reader
        .headers()
        .map_err(|e| csv_row_err(path, 1, e.to_string()))?;
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != want {
        return Err(csv_row_err(
            path,
            1,
            format!("expected header {want:?}, got {got:?}"),
        ));
    }
    Ok(())
}

fn csv_open_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |e| Error::Format(format!("cannot open {}: {e}", path.display()))
}

fn csv_row_err(path: &Path, line: usize, message: String) -> Error {
    Error::CsvRow {
        path: path.display().to_string(),
        line,
        message,
    }
}

/// Write the library container plus its text manifest
/// (`<path>.manifest.txt`).
pub fn write_library(library: &PropensityLibrary, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(library.bins() as u32).to_le_bytes())?;
    w.write_all(&library.kappa().to_le_bytes())?;
    w.write_all(&library.kt().to_le_bytes())?;
    w.write_all(&(library.view_count() as u32).to_le_bytes())?;

    let mut manifest = String::new();
    manifest.push_str(&format!(
        "format_version {FORMAT_VERSION}\nbins {}\nkappa {}\nkT {}\nviews {}\n",
        library.bins(),
        library.kappa(),
        library.kt(),
        library.view_count()
    ));

    for (kind, grids) in library.single_views() {
        w.write_all(&[0u8])?;
        write_str(&mut w, kind)?;
        write_view_grids(&mut w, grids)?;
        manifest.push_str(&format!("single {kind}\n"));
    }
    for ((a, b, axis), grids) in library.pair_views() {
        w.write_all(&[1u8])?;
        write_str(&mut w, a)?;
        write_str(&mut w, b)?;
        w.write_all(&[*axis as u8])?;
        write_view_grids(&mut w, grids)?;
        manifest.push_str(&format!("pair {a} {b} {axis}\n"));
    }
    w.flush()?;

    let manifest_path = manifest_path_for(path);
    std::fs::write(manifest_path, manifest)?;
    Ok(())
}

pub fn manifest_path_for(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".manifest.txt");
    std::path::PathBuf::from(os)
}

fn write_str(w: &mut impl Write, s: &str) -> Result<()> {
    let bytes = s.as_bytes();
    if bytes.len() > u16::MAX as usize {
        return Err(Error::Format(format!("name too long: {s:?}")));
    }
    w.write_all(&(bytes.len() as u16).to_le_bytes())?;
    w.write_all(bytes)?;
    Ok(())
}

fn write_view_grids(w: &mut impl Write, grids: &ViewGrids) -> Result<()> {
    for arr in [
        grids.density.values(),
        grids.energy.values(),
        grids.energy.grad_phi(),
        grids.energy.grad_psi(),
    ] {
        for v in arr {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Read a library container written by [`write_library`].
pub fn read_library(path: &Path) -> Result<PropensityLibrary> {
    let file = std::fs::File::open(path)?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!(
            "{} is not a propensity library (bad magic)",
            path.display()
        )));
    }
    let version = read_u32(&mut r)?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported library format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let bins = read_u32(&mut r)? as usize;
    let kappa = read_f64(&mut r)?;
    let kt = read_f64(&mut r)?;
    let count = read_u32(&mut r)? as usize;

    let mut library = PropensityLibrary::new(bins, kappa, kt)?;
    for _ in 0..count {
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        match tag[0] {
            0 => {
                let kind = read_str(&mut r)?;
                let grids = read_view_grids(&mut r, bins)?;
                library.insert_single_raw(kind, grids);
            }
            1 => {
                let a = read_str(&mut r)?;
                let b = read_str(&mut r)?;
                let mut axis = [0u8; 1];
                r.read_exact(&mut axis)?;
                let axis = match axis[0] {
                    0 => PairAxis::PhiPsiNext,
                    1 => PairAxis::PsiPhiNext,
                    2 => PairAxis::PhiPhiNext,
                    other => {
                        return Err(Error::Format(format!("bad pair axis tag {other}")));
                    }
                };
                let grids = read_view_grids(&mut r, bins)?;
                library.insert_pair_raw((a, b, axis), grids);
            }
            other => {
                return Err(Error::Format(format!("bad view tag {other}")));
            }
        }
    }
    Ok(library)
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_str(r: &mut impl Read) -> Result<String> {
    let mut lb = [0u8; 2];
    r.read_exact(&mut lb)?;
    let len = u16::from_le_bytes(lb) as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Format(format!("bad name encoding: {e}")))
}

fn read_f64_array(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn read_view_grids(r: &mut impl Read, bins: usize) -> Result<ViewGrids> {
    let n = bins * bins;
    let density_values = read_f64_array(r, n)?;
    let energy_values = read_f64_array(r, n)?;
    let grad_phi = read_f64_array(r, n)?;
    let grad_psi = read_f64_array(r, n)?;
    let density = AngleGrid::from_values(bins, density_values)?;
    let mut energy = AngleGrid::from_values(bins, energy_values)?;
    energy.set_gradients(grad_phi, grad_psi)?;
    Ok(ViewGrids { density, energy })
}
