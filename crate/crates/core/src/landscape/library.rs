//! Libraries of baked conformational propensity views.

use crate::error::{Error, Result};
use crate::landscape::grid::{bake_grid, AngleGrid};
use crate::landscape::kde::VonMisesKde;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Which pair of dihedral angles in two consecutive residues a pair view
/// correlates. Pair views are directed: the first residue precedes the
/// second in sequence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PairAxis {
    /// (phi_i, psi_{i+1})
    PhiPsiNext,
    /// (psi_i, phi_{i+1})
    PsiPhiNext,
    /// (phi_i, phi_{i+1})
    PhiPhiNext,
}

impl PairAxis {
    pub const ALL: [PairAxis; 3] = [PairAxis::PhiPsiNext, PairAxis::PsiPhiNext, PairAxis::PhiPhiNext];

    pub fn as_str(&self) -> &'static str {
        match self {
            PairAxis::PhiPsiNext => "phi_psi_next",
            PairAxis::PsiPhiNext => "psi_phi_next",
            PairAxis::PhiPhiNext => "phi_phi_next",
        }
    }
}

impl fmt::Display for PairAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PairAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phi_psi_next" => Ok(PairAxis::PhiPsiNext),
            "psi_phi_next" => Ok(PairAxis::PsiPhiNext),
            "phi_phi_next" => Ok(PairAxis::PhiPhiNext),
            other => Err(Error::Format(format!(
                "unknown pair axis {other:?} (expected phi_psi_next, psi_phi_next or phi_phi_next)"
            ))),
        }
    }
}

/// Density and energy grids for one view. The energy grid carries the baked
/// central-difference gradient field.
#[derive(Debug, Clone)]
pub struct ViewGrids {
    pub density: AngleGrid,
    pub energy: AngleGrid,
}

/// Boltzmann inversion `E = -kT log P`.
pub fn boltzmann_energy(p: f64, kt: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::NonpositiveProbability { value: p });
    }
    Ok(-kt * p.ln())
}

/// A set of baked propensity views sharing one resolution, one kernel
/// concentration and one thermal energy.
#[derive(Debug, Clone)]
pub struct PropensityLibrary {
    bins: usize,
    kappa: f64,
    kt: f64,
    single_views: BTreeMap<String, ViewGrids>,
    pair_views: BTreeMap<(String, String, PairAxis), ViewGrids>,
}

impl PropensityLibrary {
    pub fn new(bins: usize, kappa: f64, kt: f64) -> Result<Self> {
        if bins < AngleGrid::MIN_BINS {
            return Err(Error::InvalidArgument(format!(
                "library resolution must be at least {} bins, got {bins}",
                AngleGrid::MIN_BINS
            )));
        }
        if !(kappa > 0.0) || !(kt > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "kappa and kT must be positive (kappa = {kappa}, kT = {kt})"
            )));
        }
        Ok(Self {
            bins,
            kappa,
            kt,
            single_views: BTreeMap::new(),
            pair_views: BTreeMap::new(),
        })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn kt(&self) -> f64 {
        self.kt
    }

    /// Bake and insert the single-residue view for `kind` from its samples.
    pub fn bake_single(&mut self, kind: impl Into<String>, kde: &VonMisesKde) -> Result<()> {
        let (energy, density) = bake_grid(kde, self.bins, self.kt)?;
        self.single_views
            .insert(kind.into(), ViewGrids { density, energy });
        Ok(())
    }

    /// Bake and insert a directed pair view.
    pub fn bake_pair(
        &mut self,
        kind_a: impl Into<String>,
        kind_b: impl Into<String>,
        axis: PairAxis,
        kde: &VonMisesKde,
    ) -> Result<()> {
        let (energy, density) = bake_grid(kde, self.bins, self.kt)?;
        self.pair_views.insert(
            (kind_a.into(), kind_b.into(), axis),
            ViewGrids { density, energy },
        );
        Ok(())
    }

    /// Insert pre-baked grids (used by the file reader).
    pub(crate) fn insert_single_raw(&mut self, kind: String, grids: ViewGrids) {
        self.single_views.insert(kind, grids);
    }

    pub(crate) fn insert_pair_raw(&mut self, key: (String, String, PairAxis), grids: ViewGrids) {
        self.pair_views.insert(key, grids);
    }

    pub fn single_view(&self, kind: &str) -> Result<&ViewGrids> {
        self.single_views
            .get(kind)
            .ok_or_else(|| Error::MissingView(format!("single view for residue kind {kind:?}")))
    }

    pub fn pair_view(&self, kind_a: &str, kind_b: &str, axis: PairAxis) -> Result<&ViewGrids> {
        self.pair_views
            .get(&(kind_a.to_string(), kind_b.to_string(), axis))
            .ok_or_else(|| {
                Error::MissingView(format!(
                    "pair view ({kind_a:?}, {kind_b:?}, {axis}) is not in the library"
                ))
            })
    }

    pub fn single_views(&self) -> impl Iterator<Item = (&String, &ViewGrids)> {
        self.single_views.iter()
    }

    pub fn pair_views(
        &self,
    ) -> impl Iterator<Item = (&(String, String, PairAxis), &ViewGrids)> {
        self.pair_views.iter()
    }

    pub fn view_count(&self) -> usize {
        self.single_views.len() + self.pair_views.len()
    }

    /// Statistical potential of a residue chain at dihedral conformation
    /// `theta = [(phi_1, psi_1), ..., (phi_n, psi_n)]`:
    ///
    /// `E = sum_{i<n} [ E_aa_i(phi_i, psi_i)
    ///      + (E_pair(phi_i, psi_{i+1}) + E_pair(psi_i, phi_{i+1})
    ///         + E_pair(phi_i, phi_{i+1})) / 2 ]
    ///      + E_aa_n(phi_n, psi_n)`
    ///
    /// evaluated through bilinear lookups on the baked energy grids.
    pub fn chain_energy(&self, sequence: &[String], theta: &[(f64, f64)]) -> Result<f64> {
        self.check_chain_args(sequence, theta.len())?;
        let n = sequence.len();
        let mut total = 0.0;
        for i in 0..n {
            if i + 1 < n {
                let (phi_i, psi_i) = theta[i];
                let (phi_n1, psi_n1) = theta[i + 1];
                total += self.single_view(&sequence[i])?.energy.lookup(phi_i, psi_i).0;
                let (a, b) = (&sequence[i], &sequence[i + 1]);
                total += 0.5
                    * (self
                        .pair_view(a, b, PairAxis::PhiPsiNext)?
                        .energy
                        .lookup(phi_i, psi_n1)
                        .0
                        + self
                            .pair_view(a, b, PairAxis::PsiPhiNext)?
                            .energy
                            .lookup(psi_i, phi_n1)
                            .0
                        + self
                            .pair_view(a, b, PairAxis::PhiPhiNext)?
                            .energy
                            .lookup(phi_i, phi_n1)
                            .0);
            } else {
                let (phi, psi) = theta[i];
                total += self.single_view(&sequence[i])?.energy.lookup(phi, psi).0;
            }
        }
        Ok(total)
    }

    /// Gradient of the chain potential with respect to the flat angle vector
    /// `(phi_1, psi_1, ..., phi_n, psi_n)`, accumulated from the baked
    /// per-view gradient fields (so it tracks finite differences of
    /// [`Self::chain_energy`] to the grid's O(spacing^2) accuracy).
    pub fn chain_gradient(&self, sequence: &[String], theta_flat: &[f64]) -> Result<Vec<f64>> {
        let n = sequence.len();
        if theta_flat.len() != 2 * n {
            return Err(Error::InvalidArgument(format!(
                "conformation has {} angles, sequence of {n} residues needs {}",
                theta_flat.len(),
                2 * n
            )));
        }
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| (theta_flat[2 * i], theta_flat[2 * i + 1]))
            .collect();
        self.check_chain_args(sequence, pairs.len())?;

        let mut grad = vec![0.0; 2 * n];
        for i in 0..n {
            let (phi_i, psi_i) = pairs[i];
            let last = i + 1 == n;
            // every residue contributes its single view; interior residues
            // add the three half-weighted pair views
            let (_, (gp, gq)) = self.single_view(&sequence[i])?.energy.lookup(phi_i, psi_i);
            grad[2 * i] += gp;
            grad[2 * i + 1] += gq;
            if !last {
                let (phi_n1, psi_n1) = pairs[i + 1];
                let (a, b) = (&sequence[i], &sequence[i + 1]);
                let (_, (gp, gq)) = self
                    .pair_view(a, b, PairAxis::PhiPsiNext)?
                    .energy
                    .lookup(phi_i, psi_n1);
                grad[2 * i] += 0.5 * gp;
                grad[2 * (i + 1) + 1] += 0.5 * gq;
                let (_, (gp, gq)) = self
                    .pair_view(a, b, PairAxis::PsiPhiNext)?
                    .energy
                    .lookup(psi_i, phi_n1);
                grad[2 * i + 1] += 0.5 * gp;
                grad[2 * (i + 1)] += 0.5 * gq;
                let (_, (gp, gq)) = self
                    .pair_view(a, b, PairAxis::PhiPhiNext)?
                    .energy
                    .lookup(phi_i, phi_n1);
                grad[2 * i] += 0.5 * gp;
                grad[2 * (i + 1)] += 0.5 * gq;
            }
        }
        Ok(grad)
    }

    fn check_chain_args(&self, sequence: &[String], theta_len: usize) -> Result<()> {
        if sequence.is_empty() {
            return Err(Error::InvalidArgument("empty residue sequence".into()));
        }
        if sequence.len() != theta_len {
            return Err(Error::InvalidArgument(format!(
                "sequence has {} residues but conformation has {} angle pairs",
                sequence.len(),
                theta_len
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::grid::bake_from_density;
    use crate::landscape::kde::AngleSampleSet;
    use approx::assert_relative_eq;

    fn constant_grids(bins: usize, kt: f64, energy: f64) -> ViewGrids {
        // Constant-energy view: density chosen so -kT log P = energy.
        let p = (-energy / kt).exp();
        let (e, d) = bake_from_density(bins, kt, |_, _| p).unwrap();
        ViewGrids {
            density: d,
            energy: e,
        }
    }

    fn constant_library(kinds: &[&str], bins: usize, kt: f64, energy: f64) -> PropensityLibrary {
        let mut lib = PropensityLibrary::new(bins, 50.0, kt).unwrap();
        for &k in kinds {
            lib.insert_single_raw(k.to_string(), constant_grids(bins, kt, energy));
        }
        for &a in kinds {
            for &b in kinds {
                for axis in PairAxis::ALL {
                    lib.insert_pair_raw(
                        (a.to_string(), b.to_string(), axis),
                        constant_grids(bins, kt, energy),
                    );
                }
            }
        }
        lib
    }

    #[test]
    fn boltzmann_energy_basics() {
        assert_eq!(boltzmann_energy(1.0, 7.3).unwrap(), 0.0);
        assert_relative_eq!(
            boltzmann_energy((-1.0f64).exp(), 1.0).unwrap(),
            1.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            boltzmann_energy((-2.0f64).exp(), 0.5).unwrap(),
            1.0,
            max_relative = 1e-14
        );
        match boltzmann_energy(0.0, 1.0) {
            Err(Error::NonpositiveProbability { value }) => assert_eq!(value, 0.0),
            other => panic!("expected domain error, got {other:?}"),
        }
        assert!(boltzmann_energy(-0.5, 1.0).is_err());
    }

    #[test]
    fn pair_axis_round_trips_names() {
        for axis in PairAxis::ALL {
            assert_eq!(axis.as_str().parse::<PairAxis>().unwrap(), axis);
        }
        assert!("phi_phi".parse::<PairAxis>().is_err());
    }

    #[test]
    fn single_residue_chain_reduces_to_single_view() {
        let kde = VonMisesKde::new(
            AngleSampleSet::new("ALA", vec![(0.2, -0.4), (1.0, 1.2)]).unwrap(),
            12.0,
        )
        .unwrap();
        let mut lib = PropensityLibrary::new(48, 12.0, 1.5).unwrap();
        lib.bake_single("ALA", &kde).unwrap();
        let theta = [(0.3, 0.7)];
        let e = lib.chain_energy(&["ALA".to_string()], &theta).unwrap();
        let want = lib.single_view("ALA").unwrap().energy.lookup(0.3, 0.7).0;
        assert_eq!(e, want);
    }

    #[test]
    fn two_residue_chain_has_five_terms() {
        let lib = constant_library(&["ALA", "GLY"], 16, 1.0, 0.0);
        // Build a non-constant single view for ALA so the five-term structure
        // is observable.
        let seq = vec!["ALA".to_string(), "GLY".to_string()];
        let theta = [(0.11, -0.43), (1.3, 2.1)];
        let e = lib.chain_energy(&seq, &theta).unwrap();
        // All views constant 0 -> total 0 from 5 terms.
        assert_relative_eq!(e, 0.0, epsilon = 1e-12);

        let lib_c = constant_library(&["ALA", "GLY"], 16, 1.0, 2.0);
        let e_c = lib_c.chain_energy(&seq, &theta).unwrap();
        // single(1) + single(2) + 3 half-weighted pair terms = 2 + 3/2 terms.
        assert_relative_eq!(e_c, 2.0 * (2.0 + 1.5 * 2.0 / 2.0), epsilon = 1e-9);
    }

    #[test]
    fn constant_landscape_scales_with_term_count() {
        for n in 1..=4usize {
            let kinds: Vec<String> = (0..n).map(|_| "ALA".to_string()).collect();
            let lib = constant_library(&["ALA"], 16, 1.0, 3.0);
            let theta: Vec<(f64, f64)> = (0..n).map(|i| (0.1 * i as f64, -0.2)).collect();
            let e = lib.chain_energy(&kinds, &theta).unwrap();
            // terms: n singles + 3*(n-1) pair terms at weight 1/2
            let want = 3.0 * (n as f64 + 1.5 * (n as f64 - 1.0));
            assert_relative_eq!(e, want, epsilon = 1e-9);
        }
    }

    #[test]
    fn missing_view_is_named() {
        let mut lib = PropensityLibrary::new(16, 50.0, 1.0).unwrap();
        let kde = VonMisesKde::new(
            AngleSampleSet::new("ALA", vec![(0.0, 0.0)]).unwrap(),
            5.0,
        )
        .unwrap();
        lib.bake_single("ALA", &kde).unwrap();
        lib.bake_single("GLY", &kde).unwrap();
        let seq = vec!["ALA".to_string(), "GLY".to_string()];
        let err = lib
            .chain_energy(&seq, &[(0.0, 0.0), (0.0, 0.0)])
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("ALA") && msg.contains("GLY") && msg.contains("phi_psi_next"),
            "error should name the absent view: {msg}");
    }

    #[test]
    fn chain_gradient_tracks_the_continuous_source() {
        // the baked gradient field approximates the gradient of the
        // continuous potential -kT sum log P to the grid's O(h^2); finite
        // differences of that continuous source are the oracle here
        // (finite differences of the piecewise-bilinear surface itself are
        // only O(h) away from the derivative at generic points)
        let kappa = 4.0;
        let mut lib = PropensityLibrary::new(180, kappa, 1.0).unwrap();
        let mk = |pts: Vec<(f64, f64)>| {
            VonMisesKde::new(AngleSampleSet::new("X", pts).unwrap(), kappa).unwrap()
        };
        let kde_ala = mk(vec![(0.5, -0.3), (-1.0, 1.0)]);
        let kde_gly = mk(vec![(1.5, 0.3)]);
        let kde_pair = mk(vec![(0.2, 0.8), (-0.7, -0.1)]);
        lib.bake_single("ALA", &kde_ala).unwrap();
        lib.bake_single("GLY", &kde_gly).unwrap();
        for axis in PairAxis::ALL {
            lib.bake_pair("ALA", "GLY", axis, &kde_pair).unwrap();
        }
        let seq = vec!["ALA".to_string(), "GLY".to_string()];
        let theta = vec![0.37, -0.81, 1.02, 0.44];
        let grad = lib.chain_gradient(&seq, &theta).unwrap();

        // continuous counterpart of chain_energy for this two-residue chain
        let continuous = |t: &[f64]| -> f64 {
            let (p1, s1, p2, s2) = (t[0], t[1], t[2], t[3]);
            -(kde_ala.density(p1, s1).ln()
                + 0.5
                    * (kde_pair.density(p1, s2).ln()
                        + kde_pair.density(s1, p2).ln()
                        + kde_pair.density(p1, p2).ln())
                + kde_gly.density(p2, s2).ln())
        };
        let h = 1e-5;
        for k in 0..4 {
            let mut up = theta.clone();
            let mut dn = theta.clone();
            up[k] += h;
            dn[k] -= h;
            let fd = (continuous(&up) - continuous(&dn)) / (2.0 * h);
            // absolute floor at the baked-gradient truncation scale
            // (h^2/6 * |E'''| is about 1e-3 for these concentrations)
            assert_relative_eq!(grad[k], fd, max_relative = 1e-2, epsilon = 2e-3);
        }
    }
}
