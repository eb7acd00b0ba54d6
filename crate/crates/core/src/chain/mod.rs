//! The coarse-grained open chain and its replica-band extension.

mod band;
mod conformation;
mod model;
mod preset;

pub use band::{
    build_replica_band, write_band_report_csv, BandConfig, BandIteration, BandReport, ReplicaBand,
};
pub use conformation::{four_point_dihedral, Conformation};
pub use model::{
    build_atomic_chain, build_chain_model, build_with_refinement, ChainModel, ChainRefinement,
};
pub use preset::{parse_sequence, ChainPreset, SpringSpec, STANDARD_RESIDUES};
