//! Periodic statistical energy landscapes.

mod grid;
mod kde;
mod library;
mod views;

pub mod io;

pub use grid::{bake_from_density, bake_grid, AngleGrid, DENSITY_FLOOR};
pub use kde::{bessel_i0, AngleSampleSet, VonMisesKde};
pub use library::{boltzmann_energy, PairAxis, PropensityLibrary, ViewGrids};
pub use views::{GridViewFn, ProjectionViewSet, ViewFn};

use crate::error::Result;
use std::sync::Arc;

/// An energy surface over an n-dimensional angle parametrization, the
/// interface the path solvers and the propensity hook consume.
pub trait Landscape: Send + Sync {
    fn dim(&self) -> usize;

    fn energy(&self, theta: &[f64]) -> f64;

    fn gradient_into(&self, theta: &[f64], out: &mut [f64]);

    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.gradient_into(theta, &mut out);
        out
    }
}

/// A two-dimensional landscape backed by one baked energy grid.
#[derive(Clone)]
pub struct GridLandscape {
    grid: Arc<AngleGrid>,
}

impl GridLandscape {
    pub fn new(grid: Arc<AngleGrid>) -> Self {
        Self { grid }
    }

    pub fn grid(&self) -> &AngleGrid {
        &self.grid
    }
}

impl Landscape for GridLandscape {
    fn dim(&self) -> usize {
        2
    }

    fn energy(&self, theta: &[f64]) -> f64 {
        self.grid.lookup(theta[0], theta[1]).0
    }

    fn gradient_into(&self, theta: &[f64], out: &mut [f64]) {
        let (_, (gp, gq)) = self.grid.lookup(theta[0], theta[1]);
        out[0] = gp;
        out[1] = gq;
    }
}

/// The chain statistical potential of a residue sequence as a landscape over
/// the flat dihedral vector `(phi_1, psi_1, ..., phi_n, psi_n)`.
///
/// All required single and pair views are checked at construction, so
/// evaluation never fails mid-relaxation.
#[derive(Clone)]
pub struct ChainLandscape {
    library: Arc<PropensityLibrary>,
    sequence: Vec<String>,
}

impl ChainLandscape {
    pub fn new(library: Arc<PropensityLibrary>, sequence: Vec<String>) -> Result<Self> {
        let theta = vec![(0.0, 0.0); sequence.len()];
        library.chain_energy(&sequence, &theta)?;
        Ok(Self { library, sequence })
    }

    pub fn sequence(&self) -> &[String] {
        &self.sequence
    }

    pub fn library(&self) -> &PropensityLibrary {
        &self.library
    }
}

impl Landscape for ChainLandscape {
    fn dim(&self) -> usize {
        2 * self.sequence.len()
    }

    fn energy(&self, theta: &[f64]) -> f64 {
        let pairs: Vec<(f64, f64)> = (0..self.sequence.len())
            .map(|i| (theta[2 * i], theta[2 * i + 1]))
            .collect();
        self.library
            .chain_energy(&self.sequence, &pairs)
            .expect("views validated at construction")
    }

    fn gradient_into(&self, theta: &[f64], out: &mut [f64]) {
        let g = self
            .library
            .chain_gradient(&self.sequence, theta)
            .expect("views validated at construction");
        out.copy_from_slice(&g);
    }
}

/// A landscape defined by closures; used for synthetic test surfaces and
/// benches.
pub struct FnLandscape {
    dim: usize,
    energy: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    gradient: Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>,
}

impl FnLandscape {
    pub fn new(
        dim: usize,
        energy: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            energy: Box::new(energy),
            gradient: Box::new(gradient),
        }
    }
}

impl Landscape for FnLandscape {
    fn dim(&self) -> usize {
        self.dim
    }

    fn energy(&self, theta: &[f64]) -> f64 {
        (self.energy)(theta)
    }

    fn gradient_into(&self, theta: &[f64], out: &mut [f64]) {
        (self.gradient)(theta, out)
    }
}
