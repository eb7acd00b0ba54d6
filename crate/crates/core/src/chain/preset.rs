//! Chain geometry presets.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// The twenty standard three-letter residue codes.
pub const STANDARD_RESIDUES: [&str; 20] = [
    "ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU", "GLY", "HIS", "ILE", "LEU", "LYS", "MET",
    "PHE", "PRO", "SER", "THR", "TRP", "TYR", "VAL",
];

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct SpringSpec {
    pub stiffness: f64,
    pub rest_length: f64,
}

/// Versioned per-residue geometry, masses, and spring constants for the
/// coarse-grained chain builders. The reference configuration is a planar
/// zigzag with the given half-angle between bonds and the x axis.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChainPreset {
    pub format_version: u32,
    /// N-C_alpha bond length (angstrom).
    pub bond_n_ca: f64,
    /// C_alpha-C bond length.
    pub bond_ca_c: f64,
    /// Peptide C-N bond length (links consecutive residues).
    pub bond_c_n: f64,
    /// Planar zigzag half-angle between bonds and the chain axis, degrees.
    pub zigzag_half_angle_deg: f64,
    pub mass: f64,
    pub inertia_diag: [f64; 3],
    /// Spring for cylindrical N-C_alpha joints.
    pub spring_n_ca: SpringSpec,
    /// Spring for cylindrical C_alpha-C joints.
    pub spring_ca_c: SpringSpec,
}

impl Default for ChainPreset {
    fn default() -> Self {
        Self {
            format_version: 1,
            bond_n_ca: 1.490,
            bond_ca_c: 1.430,
            bond_c_n: 1.329,
            zigzag_half_angle_deg: 35.0,
            mass: 1.0,
            inertia_diag: [1.0, 1.0, 1.0],
            spring_n_ca: SpringSpec {
                stiffness: 370.0,
                rest_length: 1.490,
            },
            spring_ca_c: SpringSpec {
                stiffness: 320.0,
                rest_length: 1.430,
            },
        }
    }
}

impl ChainPreset {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let preset: ChainPreset = toml::from_str(&text)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        preset.validate()?;
        Ok(preset)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| Error::Format(format!("preset serialization: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != 1 {
            return Err(Error::Format(format!(
                "unsupported preset version {}",
                self.format_version
            )));
        }
        let lengths = [self.bond_n_ca, self.bond_ca_c, self.bond_c_n];
        if lengths.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Config("bond lengths must be positive".into()));
        }
        if !(self.mass > 0.0) || self.inertia_diag.iter().any(|&j| !(j > 0.0)) {
            return Err(Error::Config(
                "preset mass and inertia must be positive".into(),
            ));
        }
        let half = self.zigzag_half_angle_deg;
        if !(half > 0.0 && half < 90.0) {
            return Err(Error::Config(format!(
                "zigzag half-angle must lie in (0, 90) degrees, got {half}"
            )));
        }
        Ok(())
    }
}

/// Parse a dash-separated three-letter-code sequence like `GLY-TYR-ASP`.
pub fn parse_sequence(text: &str) -> Result<Vec<String>> {
    let seq: Vec<String> = text
        .split('-')
        .map(|s| s.trim().to_uppercase())
        .filter(|s| !s.is_empty())
        .collect();
    if seq.is_empty() {
        return Err(Error::InvalidArgument("empty residue sequence".into()));
    }
    for kind in &seq {
        if !STANDARD_RESIDUES.contains(&kind.as_str()) {
            return Err(Error::Config(format!(
                "unknown residue kind {kind:?} (expected a standard three-letter code)"
            )));
        }
    }
    Ok(seq)
}
