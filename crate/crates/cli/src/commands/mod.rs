pub mod band_relax;
pub mod dynamics_run;
pub mod library_build;
pub mod mep_run;
