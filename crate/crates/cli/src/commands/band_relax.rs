//! `chainpath band-relax`

use crate::config::{echo_config, out_file, read_endpoints_deg};
use chainpath::chain::{
    build_chain_model, build_replica_band, parse_sequence, write_band_report_csv, BandConfig,
    ChainPreset, Conformation,
};
use chainpath::landscape::io::read_library;
use chainpath::landscape::{ChainLandscape, FnLandscape, Landscape};
use chainpath::mep::init_path_convex;
use chainpath::multibody::io::parse_joint_kind;
use chainpath::multibody::{AugLagParams, JointKind, Solver, Stabilizer};
use chainpath::{Error, Result};
use serde::Serialize;
use std::io::BufWriter;
use std::path::PathBuf;
use std::sync::Arc;

#[derive(clap::Args, Serialize)]
pub struct Args {
    /// Baked propensity library; without it the band relaxes on a flat
    /// landscape (spring-only smoke runs).
    #[arg(long)]
    pub library: Option<PathBuf>,
    #[arg(long)]
    pub sequence: String,
    /// CSV (`theta_1_deg,...`, two rows) with the endpoint dihedral vectors.
    #[arg(long)]
    pub endpoints_file: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub replicas: usize,
    #[arg(long, value_parser = ["revolute", "cylindrical"], default_value = "revolute")]
    pub joint: String,
    /// Band spring stiffness.
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    /// DIA step per band iteration.
    #[arg(long, default_value_t = 1e-2)]
    pub dt: f64,
    #[arg(long, default_value_t = 1)]
    pub inner_steps: usize,
    /// Convergence threshold on the max band-force amplitude.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_iters: usize,
    #[arg(long, value_parser = ["none", "baumgarte", "auglag"], default_value = "baumgarte")]
    pub stabilizer: String,
    #[arg(long, default_value_t = 5.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 5.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 10.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub epsilon: f64,
    #[arg(long, value_parser = ["lu", "pinv"], default_value = "lu")]
    pub solver: String,
    /// Chain preset file (geometry, masses, springs).
    #[arg(long)]
    pub preset: Option<PathBuf>,
    /// Recorded in the config echo; band relaxation is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Summary {
    converged: bool,
    iterations: usize,
    final_path_energy: Option<f64>,
    final_max_total_force: Option<f64>,
}

pub fn run(args: &Args) -> Result<i32> {
    echo_config(&args.out, args)?;

    let sequence = parse_sequence(&args.sequence)?;
    let preset = match &args.preset {
        Some(p) => ChainPreset::load(p)?,
        None => ChainPreset::default(),
    };
    let kind = parse_joint_kind(&args.joint)?;
    let model = build_chain_model(&sequence, kind, &preset)?;
    let n_angles = model.joint_count();

    let landscape: Arc<dyn Landscape> = match &args.library {
        Some(path) => Arc::new(ChainLandscape::new(
            Arc::new(read_library(path)?),
            sequence.clone(),
        )?),
        None => Arc::new(FnLandscape::new(n_angles, |_| 0.0, |_, out| out.fill(0.0))),
    };

    let (a, b) = read_endpoints_deg(&args.endpoints_file)?;
    if a.len() != n_angles {
        return Err(Error::InvalidArgument(format!(
            "endpoints have {} angles but the chain has {} joints",
            a.len(),
            n_angles
        )));
    }
    let path = init_path_convex(&a, &b, args.replicas)?;
    let rest_lengths: Vec<f64> = (0..n_angles)
        .map(|k| {
            if k % 2 == 0 {
                preset.spring_n_ca.rest_length
            } else {
                preset.spring_ca_c.rest_length
            }
        })
        .collect();
    let confs: Vec<Conformation> = path
        .nodes()
        .iter()
        .map(|angles| match kind {
            JointKind::Revolute => Ok(Conformation::revolute(angles.clone())),
            JointKind::Cylindrical => {
                Conformation::from_parts(kind, angles, Some(&rest_lengths))
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut band = build_replica_band(&model, &confs, args.k)?;

    let mut w = BufWriter::new(std::fs::File::create(out_file(&args.out, "band_initial.csv"))?);
    band.write_snapshot_csv(&mut w)?;

    let stabilizer = match args.stabilizer.as_str() {
        "none" => Stabilizer::None,
        "baumgarte" => Stabilizer::Baumgarte {
            alpha: args.alpha,
            beta: args.beta,
        },
        _ => Stabilizer::AugmentedLagrangian(AugLagParams {
            alpha: args.alpha,
            omega: args.omega,
            beta: args.beta,
            epsilon: args.epsilon,
            ..AugLagParams::default()
        }),
    };
    let cfg = BandConfig {
        k: args.k,
        dt: args.dt,
        inner_steps: args.inner_steps,
        tol: args.tol,
        max_iters: args.max_iters,
        solver: args.solver.parse::<Solver>()?,
        stabilizer,
    };
    let report = band.relax(landscape.as_ref(), &cfg)?;

    let mut w = BufWriter::new(std::fs::File::create(out_file(&args.out, "band_final.csv"))?);
    band.write_snapshot_csv(&mut w)?;
    let mut w = BufWriter::new(std::fs::File::create(out_file(&args.out, "band_trace.csv"))?);
    write_band_report_csv(&mut w, &report)?;

    let last = report.iterations.last();
    let summary = Summary {
        converged: report.converged,
        iterations: report.iterations.len(),
        final_path_energy: last.map(|r| r.path_energy),
        final_max_total_force: last.map(|r| r.max_total_force),
    };
    let text = serde_json::to_string_pretty(&summary)
        .map_err(|e| Error::Format(format!("summary serialization: {e}")))?;
    std::fs::write(out_file(&args.out, "summary.json"), text + "\n")?;

    println!(
        "band {} after {} iterations",
        if report.converged { "converged" } else { "NOT converged" },
        report.iterations.len()
    );
    Ok(if report.converged { 0 } else { 2 })
}
