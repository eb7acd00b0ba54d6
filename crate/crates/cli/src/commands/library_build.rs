//! `chainpath library-build`

use crate::config::{echo_config, out_file};
use chainpath::landscape::io::{read_pair_samples, read_single_samples, write_library};
use chainpath::landscape::{AngleSampleSet, PropensityLibrary, VonMisesKde};
use chainpath::{Error, Result};
use serde::Serialize;
use std::path::PathBuf;

#[derive(clap::Args, Serialize)]
pub struct Args {
    /// Single-residue samples CSV (`kind,phi_deg,psi_deg`).
    #[arg(long)]
    pub samples: PathBuf,
    /// Pair-view samples CSV
    /// (`kind_a,kind_b,axis,angle1_deg,angle2_deg`).
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Grid resolution per axis (the reference resolution is 180, i.e. 2
    /// degrees per bin).
    #[arg(long, default_value_t = 180)]
    pub bins: usize,
    /// von Mises concentration used for every view.
    #[arg(long, default_value_t = 50.0)]
    pub kappa: f64,
    /// Thermal energy for the Boltzmann inversion.
    #[arg(long, default_value_t = 1.0)]
    pub kt: f64,
    /// Recorded in the config echo; this command draws no randomness.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &Args) -> Result<i32> {
    echo_config(&args.out, args)?;

    let singles = read_single_samples(&args.samples)?;
    if singles.is_empty() {
        return Err(Error::Config(format!(
            "{}: no sample rows",
            args.samples.display()
        )));
    }

    let mut library = PropensityLibrary::new(args.bins, args.kappa, args.kt)?;
    let cell = library_cell_area(args.bins);

    for (kind, points) in &singles {
        let kde = VonMisesKde::new(AngleSampleSet::new(kind.clone(), points.clone())?, args.kappa)?;
        library.bake_single(kind.clone(), &kde)?;
        let mass: f64 = library
            .single_view(kind)?
            .density
            .values()
            .iter()
            .sum::<f64>()
            * cell;
        println!("view single/{kind}: {} samples, density mass {mass:.6}", points.len());
    }

    if let Some(pairs_path) = &args.pairs {
        let pairs = read_pair_samples(pairs_path)?;
        for ((a, b, axis), points) in &pairs {
            let kde = VonMisesKde::new(
                AngleSampleSet::new(format!("{a}-{b}"), points.clone())?,
                args.kappa,
            )?;
            library.bake_pair(a.clone(), b.clone(), *axis, &kde)?;
            let mass: f64 = library
                .pair_view(a, b, *axis)?
                .density
                .values()
                .iter()
                .sum::<f64>()
                * cell;
            println!(
                "view pair/{a}/{b}/{axis}: {} samples, density mass {mass:.6}",
                points.len()
            );
        }
    }

    let path = out_file(&args.out, "library.cplib");
    write_library(&library, &path)?;
    println!(
        "wrote {} ({} views, {} bins, kappa {}, kT {})",
        path.display(),
        library.view_count(),
        args.bins,
        args.kappa,
        args.kt
    );
    Ok(0)
}

fn library_cell_area(bins: usize) -> f64 {
    let h = 2.0 * std::f64::consts::PI / bins as f64;
    h * h
}
