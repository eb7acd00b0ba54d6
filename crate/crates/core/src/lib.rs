//! Statistical energy landscapes on the torus, minimum-energy-path solvers,
//! and constrained open-chain multibody dynamics.
//!
//! The crate is organized in four layers:
//!
//! - [`landscape`]: von Mises kernel density estimation over dihedral-angle
//!   samples, Boltzmann inversion to energies, periodic grid baking with
//!   central-difference gradients, and gradient reconstruction from
//!   projection views.
//! - [`mep`]: minimum-energy-path relaxation between two conformations with
//!   the string method (perpendicular descent + spline reparametrization)
//!   and the nudged-elastic-band method (projected spring forces).
//! - [`multibody`]: rigid bodies with Euler-parameter orientations,
//!   revolute/cylindrical joint constraints, propensity moments, joint
//!   springs, Langevin forcing, and stabilized DAE integration.
//! - [`chain`]: the coarse-grained 2n+1-body open chain built from a residue
//!   sequence, dihedral bookkeeping, and the replica-band extension that
//!   turns path finding into a steady multibody relaxation.

pub mod angles;
pub mod chain;
pub mod error;
pub mod landscape;
pub mod mep;
pub mod multibody;

pub use error::{Error, Result};
pub use landscape::{
    AngleGrid, AngleSampleSet, ChainLandscape, FnLandscape, GridLandscape, Landscape, PairAxis,
    PropensityLibrary, VonMisesKde,
};
pub use mep::{NebConfig, PathMethod, PathState, SolveReport};
pub use multibody::{
    EulerParams, Joint, JointKind, MultibodySystem, RigidBody, Solver, Stabilizer,
};
pub use chain::{ChainModel, ChainPreset, Conformation, ReplicaBand};
