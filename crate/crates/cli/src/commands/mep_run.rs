//! `chainpath mep-run`

use crate::config::{echo_config, out_file, read_endpoints_deg};
use chainpath::chain::parse_sequence;
use chainpath::landscape::io::read_library;
use chainpath::landscape::{ChainLandscape, Landscape};
use chainpath::mep::{
    init_path_convex, relax, write_iterations_csv, write_node_metrics_csv, write_path_csv,
    NebConfig, PathMethod,
};
use chainpath::{Error, Result};
use serde::Serialize;
use std::io::BufWriter;
use std::path::PathBuf;
use std::sync::Arc;

#[derive(clap::Args, Serialize)]
pub struct Args {
    /// Baked propensity library.
    #[arg(long)]
    pub library: PathBuf,
    /// Residue sequence, e.g. `GLY-TYR-ASP`.
    #[arg(long)]
    pub sequence: String,
    /// CSV with header `theta_1_deg,...` and two rows: conformations A and B.
    #[arg(long)]
    pub endpoints_file: PathBuf,
    #[arg(long, value_parser = ["string", "neb"], default_value = "string")]
    pub method: String,
    /// Node count of the discretized path.
    #[arg(long, default_value_t = 50)]
    pub replicas: usize,
    /// Spring stiffness (NEB).
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    /// Euler pseudo-time step; chosen from the path geometry when omitted.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Convergence threshold on the max perpendicular force norm.
    #[arg(long, default_value_t = 3e-4)]
    pub tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
    /// Recorded in the config echo; this command draws no randomness.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &Args) -> Result<i32> {
    echo_config(&args.out, args)?;

    let library = Arc::new(read_library(&args.library)?);
    let sequence = parse_sequence(&args.sequence)?;
    let landscape = ChainLandscape::new(library, sequence.clone())?;

    let (a, b) = read_endpoints_deg(&args.endpoints_file)?;
    if a.len() != landscape.dim() {
        return Err(Error::InvalidArgument(format!(
            "endpoints have {} angles but the {}-residue sequence needs {}",
            a.len(),
            sequence.len(),
            landscape.dim()
        )));
    }
    let path = init_path_convex(&a, &b, args.replicas)?;

    let mut cfg = NebConfig {
        k: args.k,
        tol: args.tol,
        max_iters: args.max_iters,
        ..NebConfig::default()
    };
    cfg = match args.dt {
        Some(dt) => NebConfig {
            step_size: dt,
            ..cfg
        },
        None => cfg.with_auto_step(&path, &landscape),
    };
    let method = if args.method == "string" {
        PathMethod::String
    } else {
        PathMethod::Neb
    };

    let (final_path, report) = relax(&path, &landscape, &cfg, method)?;

    let mut w = BufWriter::new(std::fs::File::create(out_file(&args.out, "path.csv"))?);
    write_path_csv(&mut w, &final_path, &landscape)?;
    let mut w = BufWriter::new(std::fs::File::create(out_file(&args.out, "iterations.csv"))?);
    write_iterations_csv(&mut w, &report)?;
    let mut w = BufWriter::new(std::fs::File::create(out_file(&args.out, "node_metrics.csv"))?);
    write_node_metrics_csv(&mut w, &report)?;

    println!(
        "{} over {} iterations; final max perpendicular residual {:.3e}",
        if report.converged { "converged" } else { "NOT converged" },
        report.iteration_count(),
        report.final_max_perp()
    );
    Ok(if report.converged { 0 } else { 2 })
}
