//! Relaxation traces and their CSV formats.

use crate::error::{Error, Result};
use crate::landscape::Landscape;
use crate::mep::path::PathState;
use std::io::Write;

/// One row of the per-iteration trace.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub path_energy: f64,
    pub max_grad_norm: f64,
    pub max_perp_force: f64,
}

/// Final per-node diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMetrics {
    pub node: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub grad_dot_tangent: f64,
    pub perp_norm: f64,
}

/// Everything a relaxation run reports: one record per completed iteration,
/// final per-node metrics, and the nodes that were flagged degenerate
/// (both neighbors coincident) at some iteration.
#[derive(Debug, Clone, Default)]
pub struct SolveReport {
    pub iterations: Vec<IterationRecord>,
    pub final_metrics: Vec<NodeMetrics>,
    pub converged: bool,
    pub flagged_nodes: Vec<(usize, usize)>,
}

impl SolveReport {
    pub fn iteration_count(&self) -> usize {
        self.iterations.len()
    }

    pub fn final_max_perp(&self) -> f64 {
        let r = self.final_metrics.len();
        self.final_metrics
            .iter()
            .filter(|m| m.node > 0 && m.node + 1 < r)
            .map(|m| m.perp_norm)
            .fold(0.0f64, f64::max)
    }
}

/// Write a path as CSV: `node_index,theta_1_rad,...,theta_n_rad,energy`.
pub fn write_path_csv(
    w: &mut impl Write,
    path: &PathState,
    landscape: &dyn Landscape,
) -> Result<()> {
    write!(w, "node_index")?;
    for d in 0..path.dim() {
        write!(w, ",theta_{}_rad", d + 1)?;
    }
    writeln!(w, ",energy")?;
    for (j, node) in path.nodes().iter().enumerate() {
        write!(w, "{j}")?;
        for v in node {
            write!(w, ",{v}")?;
        }
        writeln!(w, ",{}", landscape.energy(node))?;
    }
    Ok(())
}

/// Read a path written by [`write_path_csv`]. The trailing energy column is
/// ignored.
pub fn read_path_csv(content: &str, endpoints_pinned: bool) -> Result<PathState> {
    let mut nodes: Vec<Vec<f64>> = Vec::new();
    let mut lines = content.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty path file".into()))?;
    let cols = header.split(',').count();
    if cols < 3 {
        return Err(Error::Format(format!("bad path header: {header:?}")));
    }
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(Error::Format(format!(
                "path row {} has {} fields, expected {cols}",
                idx + 2,
                fields.len()
            )));
        }
        let node: std::result::Result<Vec<f64>, _> = fields[1..cols - 1]
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect();
        nodes.push(node.map_err(|e| {
            Error::Format(format!("path row {}: bad angle ({e})", idx + 2))
        })?);
    }
    PathState::new(nodes, endpoints_pinned)
}

/// Per-iteration trace CSV: `iter,path_energy,max_grad_norm,max_perp_force`.
pub fn write_iterations_csv(w: &mut impl Write, report: &SolveReport) -> Result<()> {
    writeln!(w, "iter,path_energy,max_grad_norm,max_perp_force")?;
    for rec in &report.iterations {
        writeln!(
            w,
            "{},{},{},{}",
            rec.iter, rec.path_energy, rec.max_grad_norm, rec.max_perp_force
        )?;
    }
    Ok(())
}

/// Final-metrics CSV: `node,energy,grad_norm,grad_dot_tangent,perp_norm`.
pub fn write_node_metrics_csv(w: &mut impl Write, report: &SolveReport) -> Result<()> {
    writeln!(w, "node,energy,grad_norm,grad_dot_tangent,perp_norm")?;
    for m in &report.final_metrics {
        writeln!(
            w,
            "{},{},{},{},{}",
            m.node, m.energy, m.grad_norm, m.grad_dot_tangent, m.perp_norm
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::FnLandscape;
    use crate::mep::path::init_path_convex;

    #[test]
    fn path_csv_round_trips() {
        let path = init_path_convex(&[0.25, -0.5, 1.0], &[-1.0, 0.5, 2.0], 6).unwrap();
        let landscape = FnLandscape::new(3, |t| t.iter().sum(), |_, out| out.fill(1.0));
        let mut buf = Vec::new();
        write_path_csv(&mut buf, &path, &landscape).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("node_index,theta_1_rad,theta_2_rad,theta_3_rad,energy\n"));
        let back = read_path_csv(&text, true).unwrap();
        assert_eq!(back.node_count(), 6);
        for (a, b) in back.nodes().iter().zip(path.nodes()) {
            assert_eq!(a, b, "shortest-round-trip floats must survive");
        }
    }

    #[test]
    fn iteration_csv_has_contract_header() {
        let report = SolveReport {
            iterations: vec![IterationRecord {
                iter: 0,
                path_energy: 1.5,
                max_grad_norm: 0.25,
                max_perp_force: 0.125,
            }],
            ..Default::default()
        };
        let mut buf = Vec::new();
        write_iterations_csv(&mut buf, &report).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "iter,path_energy,max_grad_norm,max_perp_force\n0,1.5,0.25,0.125\n"
        );
    }
}
