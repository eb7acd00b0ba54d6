//! Periodic angle grids with bilinear lookup.

use crate::angles::wrap;
use crate::error::{Error, Result};
use crate::landscape::kde::VonMisesKde;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Densities below this floor are clamped before Boltzmann inversion so that
/// unpopulated bins stay finite instead of producing unbounded forces.
pub const DENSITY_FLOOR: f64 = 1e-12;

/// Fraction of a cell below which a lookup snaps onto the node, so queries
/// placed exactly on grid nodes reproduce stored values bit for bit.
const NODE_SNAP: f64 = 1e-9;

/// A `bins x bins` grid over `[-pi, pi)^2`, periodic on both axes.
///
/// Row-major storage with axis 0 = phi; node `(i, j)` sits at
/// `(-pi + i*h, -pi + j*h)` with `h = 2 pi / bins`. The grid also carries a
/// baked gradient field `(d/dphi, d/dpsi)` per node (zero unless baked).
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    bins: usize,
    values: Vec<f64>,
    grad_phi: Vec<f64>,
    grad_psi: Vec<f64>,
}

impl AngleGrid {
    /// Minimum usable resolution: below this bilinear interpolation has
    /// nothing to work with.
    pub const MIN_BINS: usize = 8;

    pub fn from_values(bins: usize, values: Vec<f64>) -> Result<Self> {
        if bins < Self::MIN_BINS {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least {} bins per axis, got {bins}",
                Self::MIN_BINS
            )));
        }
        if values.len() != bins * bins {
            return Err(Error::InvalidArgument(format!(
                "value array has {} entries, expected {}",
                values.len(),
                bins * bins
            )));
        }
        let n = values.len();
        Ok(Self {
            bins,
            values,
            grad_phi: vec![0.0; n],
            grad_psi: vec![0.0; n],
        })
    }

    /// Evaluate `f` at every node, in parallel. The node order is fixed, so
    /// the result is bit-identical to a sequential fill.
    pub fn from_fn(bins: usize, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        if bins < Self::MIN_BINS {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least {} bins per axis, got {bins}",
                Self::MIN_BINS
            )));
        }
        let h = 2.0 * PI / bins as f64;
        let values: Vec<f64> = (0..bins * bins)
            .into_par_iter()
            .map(|idx| {
                let i = idx / bins;
                let j = idx % bins;
                f(-PI + i as f64 * h, -PI + j as f64 * h)
            })
            .collect();
        Self::from_values(bins, values)
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    /// Grid spacing `2 pi / bins`; derived, never stored.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.bins as f64
    }

    pub fn node_angle(&self, index: usize) -> f64 {
        -PI + index as f64 * self.spacing()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grad_phi(&self) -> &[f64] {
        &self.grad_phi
    }

    pub fn grad_psi(&self) -> &[f64] {
        &self.grad_psi
    }

    pub fn value_at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.bins + j]
    }

    pub fn grad_at(&self, i: usize, j: usize) -> (f64, f64) {
        (self.grad_phi[i * self.bins + j], self.grad_psi[i * self.bins + j])
    }

    /// Node indices of the smallest stored value.
    pub fn argmin(&self) -> (usize, usize) {
        let mut best = 0usize;
        for (k, &v) in self.values.iter().enumerate() {
            if v < self.values[best] {
                best = k;
            }
        }
        (best / self.bins, best % self.bins)
    }

    /// Install a precomputed gradient field (used by the library reader).
    pub(crate) fn set_gradients(&mut self, grad_phi: Vec<f64>, grad_psi: Vec<f64>) -> Result<()> {
        if grad_phi.len() != self.values.len() || grad_psi.len() != self.values.len() {
            return Err(Error::InvalidArgument(
                "gradient arrays must match the value array length".into(),
            ));
        }
        self.grad_phi = grad_phi;
        self.grad_psi = grad_psi;
        Ok(())
    }

    /// Bake the gradient field by periodic central differences of the stored
    /// values, step = spacing.
    pub fn bake_central_gradients(&mut self) {
        let b = self.bins;
        let h = self.spacing();
        let inv2h = 1.0 / (2.0 * h);
        for i in 0..b {
            let ip = (i + 1) % b;
            let im = (i + b - 1) % b;
            for j in 0..b {
                let jp = (j + 1) % b;
                let jm = (j + b - 1) % b;
                self.grad_phi[i * b + j] = (self.values[ip * b + j] - self.values[im * b + j]) * inv2h;
                self.grad_psi[i * b + j] = (self.values[i * b + jp] - self.values[i * b + jm]) * inv2h;
            }
        }
    }

    /// Bilinear lookup with periodic wraparound on both axes. Returns the
    /// interpolated value and gradient pair.
    pub fn lookup(&self, phi: f64, psi: f64) -> (f64, (f64, f64)) {
        let b = self.bins;
        let h = self.spacing();
        let locate = |a: f64| -> (usize, f64) {
            // wrapped angle lies in (-pi, pi]; u in (0, bins]
            let u = (wrap(a) + PI) / h;
            let mut cell = u.floor();
            let mut frac = u - cell;
            if frac > 1.0 - NODE_SNAP {
                cell += 1.0;
                frac = 0.0;
            } else if frac < NODE_SNAP {
                frac = 0.0;
            }
            ((cell as usize) % b, frac)
        };
        let (i0, fphi) = locate(phi);
        let (j0, fpsi) = locate(psi);
        let i1 = (i0 + 1) % b;
        let j1 = (j0 + 1) % b;

        let blend = |arr: &[f64]| -> f64 {
            let v00 = arr[i0 * b + j0];
            let v10 = arr[i1 * b + j0];
            let v01 = arr[i0 * b + j1];
            let v11 = arr[i1 * b + j1];
            v00 * (1.0 - fphi) * (1.0 - fpsi)
                + v10 * fphi * (1.0 - fpsi)
                + v01 * (1.0 - fphi) * fpsi
                + v11 * fphi * fpsi
        };
        (
            blend(&self.values),
            (blend(&self.grad_phi), blend(&self.grad_psi)),
        )
    }
}

/// Bake density and energy grids from an arbitrary positive density
/// function. The energy grid holds `-kT log(max(P, DENSITY_FLOOR))` with
/// central-difference gradients; the density grid has no gradient field.
pub fn bake_from_density(
    bins: usize,
    kt: f64,
    density: impl Fn(f64, f64) -> f64 + Sync,
) -> Result<(AngleGrid, AngleGrid)> {
    if !(kt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "thermal energy kT must be positive, got {kt}"
        )));
    }
    let density_grid = AngleGrid::from_fn(bins, density)?;
    let energy_values: Vec<f64> = density_grid
        .values()
        .iter()
        .map(|&p| -kt * p.max(DENSITY_FLOOR).ln())
        .collect();
    let mut energy_grid = AngleGrid::from_values(bins, energy_values)?;
    energy_grid.bake_central_gradients();
    Ok((energy_grid, density_grid))
}

/// Bake a von Mises KDE onto grids: returns `(energy, density)`.
pub fn bake_grid(kde: &VonMisesKde, bins: usize, kt: f64) -> Result<(AngleGrid, AngleGrid)> {
    bake_from_density(bins, kt, |phi, psi| kde.density(phi, psi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::kde::AngleSampleSet;
    use approx::assert_relative_eq;

    fn single_sample_kde(phi: f64, psi: f64, kappa: f64) -> VonMisesKde {
        VonMisesKde::new(AngleSampleSet::new("X", vec![(phi, psi)]).unwrap(), kappa).unwrap()
    }

    #[test]
    fn rejects_too_coarse_grids() {
        let kde = single_sample_kde(0.0, 0.0, 1.0);
        assert!(bake_grid(&kde, 4, 1.0).is_err());
        assert!(bake_grid(&kde, 7, 1.0).is_err());
        assert!(bake_grid(&kde, 8, 1.0).is_ok());
    }

    #[test]
    fn paper_resolution_is_180_bins() {
        // 2 degrees per bin over 360 degrees.
        let bins = (360.0_f64 / 2.0) as usize;
        assert_eq!(bins, 180);
        let kde = single_sample_kde(0.4, -0.9, 10.0);
        let (energy, density) = bake_grid(&kde, bins, 1.0).unwrap();
        assert_eq!(energy.bins(), 180);
        assert_eq!(density.bins(), 180);
        assert_relative_eq!(energy.spacing() * 180.0, 2.0 * PI, max_relative = 1e-15);
    }

    #[test]
    fn uniform_density_bakes_to_zero_energy() {
        let (energy, _) = bake_from_density(32, 3.7, |_, _| 1.0).unwrap();
        assert!(energy.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn argmin_of_single_sample_energy_is_nearest_node() {
        let (sp, sq) = (0.83, -1.37);
        let kde = single_sample_kde(sp, sq, 8.0);
        let (energy, _) = bake_grid(&kde, 24, 1.0).unwrap();
        // Exhaustive scan (done by argmin) against the analytically nearest
        // node to the sample.
        let h = energy.spacing();
        let nearest = |a: f64| ((a + PI) / h).round() as usize % 24;
        assert_eq!(energy.argmin(), (nearest(sp), nearest(sq)));
    }

    #[test]
    fn lookup_reproduces_node_values_exactly() {
        let kde = single_sample_kde(0.0, 0.0, 5.0);
        let (energy, _) = bake_grid(&kde, 36, 1.0).unwrap();
        for i in [0usize, 1, 17, 35] {
            for j in [0usize, 9, 20, 35] {
                let (v, g) = energy.lookup(energy.node_angle(i), energy.node_angle(j));
                assert_eq!(v, energy.value_at(i, j));
                assert_eq!(g, energy.grad_at(i, j));
            }
        }
    }

    #[test]
    fn lookup_midpoint_is_arithmetic_mean() {
        let grid = AngleGrid::from_fn(16, |phi, psi| phi.sin() + 2.0 * psi.cos()).unwrap();
        let h = grid.spacing();
        let phi_mid = grid.node_angle(3) + 0.5 * h;
        let psi = grid.node_angle(7);
        let (v, _) = grid.lookup(phi_mid, psi);
        let want = 0.5 * (grid.value_at(3, 7) + grid.value_at(4, 7));
        assert_relative_eq!(v, want, max_relative = 1e-14);
    }

    #[test]
    fn lookup_wraps_across_seam() {
        let kde = single_sample_kde(2.9, 0.0, 6.0);
        let (energy, _) = bake_grid(&kde, 64, 1.0).unwrap();
        let a = energy.lookup(-PI - 0.01, 0.0);
        let b = energy.lookup(PI - 0.01, 0.0);
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn baked_lookup_tracks_continuous_density() {
        // Between nodes a bilinear lookup of a baked single-sample KDE sits
        // within O(h^2) of the direct evaluation. The prefactor scales with
        // the peak curvature (roughly peak * kappa / 4), so the absolute
        // bound is checked at kappa = 4 and the quadratic order by halving
        // the spacing at kappa = 20.
        let worst_err = |kappa: f64, bins: usize| -> f64 {
            let kde = single_sample_kde(0.3, 0.6, kappa);
            let (_, density) = bake_grid(&kde, bins, 1.0).unwrap();
            let mut worst = 0.0f64;
            for k in 0..400 {
                let phi = -PI + (k as f64 + 0.31) * (2.0 * PI / 400.0);
                let psi = wrap(0.6 + 0.8 * (k as f64 * 0.17).sin());
                let (v, _) = density.lookup(phi, psi);
                worst = worst.max((v - kde.density(phi, psi)).abs());
            }
            worst
        };
        assert!(worst_err(4.0, 180) < 1e-3);
        let coarse = worst_err(20.0, 90);
        let fine = worst_err(20.0, 180);
        let ratio = coarse / fine;
        assert!(
            (2.5..6.0).contains(&ratio),
            "halving the spacing should quarter the error, got ratio {ratio}"
        );
    }

    #[test]
    fn baked_gradient_matches_value_differences() {
        let kde = single_sample_kde(0.0, 0.0, 4.0);
        let (energy, _) = bake_grid(&kde, 90, 2.0).unwrap();
        let b = energy.bins();
        let h = energy.spacing();
        let (i, j) = (12, 70);
        let want_phi =
            (energy.value_at((i + 1) % b, j) - energy.value_at((i + b - 1) % b, j)) / (2.0 * h);
        assert_relative_eq!(energy.grad_at(i, j).0, want_phi, max_relative = 1e-14);
    }
}
