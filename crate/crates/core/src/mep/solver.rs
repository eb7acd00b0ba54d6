//! String and nudged-elastic-band relaxation.

use crate::angles::{torus_distance, wrap, wrap_diff_vec};
use crate::error::{Error, Result};
use crate::landscape::Landscape;
use crate::mep::path::PathState;
use crate::mep::report::{IterationRecord, NodeMetrics, SolveReport};
use crate::mep::spline::reparametrize;

/// Which relaxation the [`relax`] loop runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathMethod {
    /// Perpendicular-gradient descent with arc-length reparametrization
    /// every iteration.
    String,
    /// Projected true force + parallel spring force, no reparametrization.
    Neb,
}

/// Relaxation parameters shared by both methods.
#[derive(Debug, Clone)]
pub struct NebConfig {
    /// Spring stiffness coupling adjacent nodes (energy / radian^2).
    pub k: f64,
    /// Euler step in dimensionless pseudo-time.
    pub step_size: f64,
    /// Convergence threshold on the max interior residual force norm.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for NebConfig {
    fn default() -> Self {
        Self {
            k: 1.0,
            step_size: 1e-2,
            tol: 3e-4,
            max_iters: 100_000,
        }
    }
}

impl NebConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0) || !(self.step_size > 0.0) || !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "NEB parameters must be positive (k = {}, step = {}, tol = {})",
                self.k, self.step_size, self.tol
            )));
        }
        Ok(())
    }

    /// Pick a conservative step from the path geometry: 1e-2 times the mean
    /// node spacing divided by a max-gradient estimate over the nodes.
    pub fn with_auto_step(mut self, path: &PathState, landscape: &dyn Landscape) -> Self {
        let gaps: f64 = path
            .nodes()
            .windows(2)
            .map(|w| torus_distance(&w[0], &w[1]))
            .sum();
        let mean_gap = gaps / (path.node_count() - 1) as f64;
        let max_grad = path
            .nodes()
            .iter()
            .map(|n| norm(&landscape.gradient(n)))
            .fold(0.0f64, f64::max);
        self.step_size = 1e-2 * mean_gap / max_grad.max(1.0);
        self
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalized(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let n = norm(&v);
    if n < 1e-14 {
        return None;
    }
    for x in v.iter_mut() {
        *x /= n;
    }
    Some(v)
}

/// Wrapped difference `nodes[to] - nodes[from]`.
fn node_diff(path: &PathState, to: usize, from: usize) -> Vec<f64> {
    let mut out = vec![0.0; path.dim()];
    wrap_diff_vec(path.node(to), path.node(from), &mut out);
    out
}

/// Central-difference unit tangent used by the string method. Falls back to
/// a one-sided difference when the neighbors coincide; returns `None` when
/// both neighbors coincide with the node itself.
fn string_tangent(path: &PathState, j: usize) -> Option<Vec<f64>> {
    let central = node_diff(path, j + 1, j - 1);
    if let Some(t) = normalized(central) {
        return Some(t);
    }
    if let Some(t) = normalized(node_diff(path, j + 1, j)) {
        return Some(t);
    }
    normalized(node_diff(path, j, j - 1))
}

/// Improved NEB tangent at interior node `j` given per-node energies:
/// uphill difference on monotone stretches, energy-weighted blend at local
/// extrema (equal weights when the neighbor energies tie exactly).
pub fn neb_tangent(path: &PathState, energies: &[f64], j: usize) -> Result<Vec<f64>> {
    if j == 0 || j + 1 >= path.node_count() {
        return Err(Error::InvalidArgument(format!(
            "tangent index {j} is not interior"
        )));
    }
    let gp = node_diff(path, j + 1, j);
    let gm = node_diff(path, j, j - 1);
    let (e_prev, e_here, e_next) = (energies[j - 1], energies[j], energies[j + 1]);

    let raw: Vec<f64> = if e_next > e_here && e_here > e_prev {
        gp.clone()
    } else if e_next < e_here && e_here < e_prev {
        gm.clone()
    } else {
        let d_up = (e_next - e_here).abs();
        let d_dn = (e_here - e_prev).abs();
        let (de_max, de_min) = (d_up.max(d_dn), d_up.min(d_dn));
        let (wp, wm) = if e_next > e_prev {
            (de_max, de_min)
        } else if e_next < e_prev {
            (de_min, de_max)
        } else {
            (1.0, 1.0)
        };
        gp.iter().zip(&gm).map(|(p, m)| wp * p + wm * m).collect()
    };

    if let Some(t) = normalized(raw) {
        return Ok(t);
    }
    // zero-norm blend: fall back to the summed neighbor directions
    if let Some(t) = normalized(gp.iter().zip(&gm).map(|(p, m)| p + m).collect()) {
        return Ok(t);
    }
    Err(Error::DegeneratePath(format!(
        "node {j} coincides with both neighbors; tangent undefined"
    )))
}

/// NEB force on interior node `j`: perpendicular component of the true force
/// plus the parallel spring component
/// `F_s = k (|d_next| - |d_prev|) g_hat`.
pub fn neb_force(
    path: &PathState,
    landscape: &dyn Landscape,
    cfg: &NebConfig,
    j: usize,
) -> Result<Vec<f64>> {
    let energies: Vec<f64> = path.nodes().iter().map(|n| landscape.energy(n)).collect();
    neb_force_with(path, landscape, cfg, &energies, j)
}

fn neb_force_with(
    path: &PathState,
    landscape: &dyn Landscape,
    cfg: &NebConfig,
    energies: &[f64],
    j: usize,
) -> Result<Vec<f64>> {
    let tangent = neb_tangent(path, energies, j)?;
    let grad = landscape.gradient(path.node(j));
    let g_par = dot(&grad, &tangent);
    let d_next = norm(&node_diff(path, j + 1, j));
    let d_prev = norm(&node_diff(path, j, j - 1));
    let spring = cfg.k * (d_next - d_prev);
    Ok(tangent
        .iter()
        .zip(&grad)
        .map(|(t, g)| -(g - g_par * t) + spring * t)
        .collect())
}

/// One explicit Euler step of the string method: interior nodes move against
/// the perpendicular gradient component, pinned endpoints stay put, unpinned
/// endpoints follow the full gradient downhill. Returns the stepped path and
/// the indices of nodes left unmoved because both neighbors coincided.
pub fn string_step(
    path: &PathState,
    landscape: &dyn Landscape,
    dtau: f64,
) -> Result<(PathState, Vec<usize>)> {
    if !(dtau > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step size must be positive, got {dtau}"
        )));
    }
    let r = path.node_count();
    let mut nodes = path.nodes().to_vec();
    let mut flagged = Vec::new();
    for j in 0..r {
        let interior = j > 0 && j + 1 < r;
        if !interior {
            if path.endpoints_pinned() {
                continue;
            }
            let grad = landscape.gradient(path.node(j));
            for (x, g) in nodes[j].iter_mut().zip(&grad) {
                *x = wrap(*x - dtau * g);
            }
            continue;
        }
        let grad = landscape.gradient(path.node(j));
        match string_tangent(path, j) {
            Some(tangent) => {
                let g_par = dot(&grad, &tangent);
                for ((x, g), t) in nodes[j].iter_mut().zip(&grad).zip(&tangent) {
                    *x = wrap(*x - dtau * (g - g_par * t));
                }
            }
            None => flagged.push(j),
        }
    }
    Ok((path.with_nodes(nodes), flagged))
}

/// Final per-node diagnostics: energy, gradient norm, inner product of the
/// gradient with the unit tangent, and the perpendicular residual norm.
pub fn convergence_metrics(path: &PathState, landscape: &dyn Landscape) -> Vec<NodeMetrics> {
    let r = path.node_count();
    (0..r)
        .map(|j| {
            let grad = landscape.gradient(path.node(j));
            let tangent = if j == 0 {
                normalized(node_diff(path, 1, 0))
            } else if j + 1 == r {
                normalized(node_diff(path, r - 1, r - 2))
            } else {
                string_tangent(path, j)
            };
            let (g_dot_t, perp) = match tangent {
                Some(t) => {
                    let gp = dot(&grad, &t);
                    let perp: f64 = grad
                        .iter()
                        .zip(&t)
                        .map(|(g, tv)| {
                            let p = g - gp * tv;
                            p * p
                        })
                        .sum::<f64>()
                        .sqrt();
                    (gp, perp)
                }
                None => (0.0, norm(&grad)),
            };
            NodeMetrics {
                node: j,
                energy: landscape.energy(path.node(j)),
                grad_norm: norm(&grad),
                grad_dot_tangent: g_dot_t,
                perp_norm: perp,
            }
        })
        .collect()
}

/// Max perpendicular residual over interior nodes (plus full gradient norm
/// at unpinned endpoints); the convergence quantity of both methods.
pub fn max_residual(metrics: &[NodeMetrics], endpoints_pinned: bool) -> f64 {
    let r = metrics.len();
    metrics
        .iter()
        .map(|m| {
            let endpoint = m.node == 0 || m.node + 1 == r;
            if endpoint {
                if endpoints_pinned {
                    0.0
                } else {
                    m.grad_norm
                }
            } else {
                m.perp_norm
            }
        })
        .fold(0.0f64, f64::max)
}

/// Relax a path to a minimum-energy path.
///
/// String: Euler step of the perpendicular velocity followed by spline
/// reparametrization each iteration. NEB: Euler step along the projected
/// band force. Iterates until the max interior residual drops to `cfg.tol`
/// or `cfg.max_iters` is exhausted; the returned report carries one record
/// per completed iteration and the final per-node metrics.
pub fn relax(
    path: &PathState,
    landscape: &dyn Landscape,
    cfg: &NebConfig,
    method: PathMethod,
) -> Result<(PathState, SolveReport)> {
    cfg.validate()?;
    if path.dim() != landscape.dim() {
        return Err(Error::InvalidArgument(format!(
            "path dimension {} does not match landscape dimension {}",
            path.dim(),
            landscape.dim()
        )));
    }

    let mut current = path.clone();
    let mut report = SolveReport::default();

    for iter in 0..cfg.max_iters {
        let energies: Vec<f64> = current.nodes().iter().map(|n| landscape.energy(n)).collect();
        let metrics = convergence_metrics(&current, landscape);
        for (j, m) in metrics.iter().enumerate() {
            if !m.energy.is_finite() || !m.grad_norm.is_finite() {
                return Err(Error::NonFiniteValue { iteration: iter, node: j });
            }
        }
        let path_energy: f64 = energies.iter().sum();
        let max_grad = metrics.iter().map(|m| m.grad_norm).fold(0.0f64, f64::max);
        let residual = method_residual(&current, landscape, cfg, method, &energies, &metrics)?;
        report.iterations.push(IterationRecord {
            iter,
            path_energy,
            max_grad_norm: max_grad,
            max_perp_force: residual,
        });
        if residual <= cfg.tol {
            report.converged = true;
            break;
        }

        match method {
            PathMethod::String => {
                let (stepped, flagged) = string_step(&current, landscape, cfg.step_size)?;
                for j in flagged {
                    report.flagged_nodes.push((iter, j));
                }
                current = reparametrize(&stepped)?;
            }
            PathMethod::Neb => {
                let r = current.node_count();
                let mut nodes = current.nodes().to_vec();
                for j in 1..r - 1 {
                    let f = neb_force_with(&current, landscape, cfg, &energies, j)?;
                    for (x, fv) in nodes[j].iter_mut().zip(&f) {
                        *x = wrap(*x + cfg.step_size * fv);
                    }
                }
                if !current.endpoints_pinned() {
                    for j in [0, r - 1] {
                        let grad = landscape.gradient(current.node(j));
                        for (x, g) in nodes[j].iter_mut().zip(&grad) {
                            *x = wrap(*x - cfg.step_size * g);
                        }
                    }
                }
                current = current.with_nodes(nodes);
            }
        }
    }

    report.final_metrics = convergence_metrics(&current, landscape);
    if !report.converged {
        let energies: Vec<f64> = current.nodes().iter().map(|n| landscape.energy(n)).collect();
        let final_residual =
            method_residual(&current, landscape, cfg, method, &energies, &report.final_metrics)?;
        report.converged = final_residual <= cfg.tol;
    }
    Ok((current, report))
}

/// The convergence residual: perpendicular component for the string method,
/// full projected band force for NEB (whose spring part must also die out
/// before the node positions settle). Unpinned endpoints contribute their
/// full gradient norm either way.
fn method_residual(
    path: &PathState,
    landscape: &dyn Landscape,
    cfg: &NebConfig,
    method: PathMethod,
    energies: &[f64],
    metrics: &[NodeMetrics],
) -> Result<f64> {
    match method {
        PathMethod::String => Ok(max_residual(metrics, path.endpoints_pinned())),
        PathMethod::Neb => {
            let r = path.node_count();
            let mut worst = if path.endpoints_pinned() {
                0.0f64
            } else {
                metrics[0].grad_norm.max(metrics[r - 1].grad_norm)
            };
            for j in 1..r - 1 {
                let f = neb_force_with(path, landscape, cfg, energies, j)?;
                worst = worst.max(norm(&f));
            }
            Ok(worst)
        }
    }
}
