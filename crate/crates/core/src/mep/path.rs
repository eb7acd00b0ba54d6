//! Discretized conformation paths.

use crate::angles::{wrap, wrap_diff};
use crate::error::{Error, Result};

/// An ordered list of conformation nodes in the angle parametrization space,
/// with optional endpoint pinning.
#[derive(Debug, Clone, PartialEq)]
pub struct PathState {
    nodes: Vec<Vec<f64>>,
    endpoints_pinned: bool,
}

impl PathState {
    pub fn new(nodes: Vec<Vec<f64>>, endpoints_pinned: bool) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "a path needs at least 3 nodes, got {}",
                nodes.len()
            )));
        }
        let dim = nodes[0].len();
        if dim == 0 {
            return Err(Error::InvalidArgument("zero-dimensional path".into()));
        }
        if nodes.iter().any(|n| n.len() != dim) {
            return Err(Error::InvalidArgument(
                "all path nodes must share one dimension".into(),
            ));
        }
        Ok(Self {
            nodes,
            endpoints_pinned,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn dim(&self) -> usize {
        self.nodes[0].len()
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn node(&self, j: usize) -> &[f64] {
        &self.nodes[j]
    }

    pub fn endpoints_pinned(&self) -> bool {
        self.endpoints_pinned
    }

    pub fn set_endpoints_pinned(&mut self, pinned: bool) {
        self.endpoints_pinned = pinned;
    }

    #[cfg(test)]
    pub(crate) fn nodes_mut(&mut self) -> &mut Vec<Vec<f64>> {
        &mut self.nodes
    }

    /// Replace the node set, keeping the pinning flag. Node count and
    /// dimension must not change.
    pub(crate) fn with_nodes(&self, nodes: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(nodes.len(), self.nodes.len());
        Self {
            nodes,
            endpoints_pinned: self.endpoints_pinned,
        }
    }
}

/// Initialize a path of `r` nodes by convex combination between two
/// conformations, interpolating along the minimal angular arc in every
/// coordinate (ties at exactly pi break toward +pi).
///
/// Node `j` (1-based) is `alpha_j * a + (1 - alpha_j) * b` with
/// `alpha_j = (j-1)/(r-1)`, so the first node is the image of `b` and the
/// last node the image of `a`. Endpoints start out pinned.
pub fn init_path_convex(a: &[f64], b: &[f64], r: usize) -> Result<PathState> {
    if r < 3 {
        return Err(Error::InvalidArgument(format!(
            "path needs at least 3 nodes, got r = {r}"
        )));
    }
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "endpoint dimensions differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::InvalidArgument("zero-dimensional endpoints".into()));
    }
    let arc: Vec<f64> = a.iter().zip(b).map(|(&x, &y)| wrap_diff(x, y)).collect();
    if arc.iter().all(|&d| d == 0.0) {
        return Err(Error::InvalidArgument(
            "degenerate path: endpoints A and B coincide".into(),
        ));
    }
    let mut nodes = Vec::with_capacity(r);
    for j in 0..r {
        if j == 0 {
            nodes.push(b.iter().map(|&x| wrap(x)).collect());
        } else if j == r - 1 {
            nodes.push(a.iter().map(|&x| wrap(x)).collect());
        } else {
            let alpha = j as f64 / (r - 1) as f64;
            nodes.push(
                b.iter()
                    .zip(&arc)
                    .map(|(&x, &d)| wrap(x + alpha * d))
                    .collect(),
            );
        }
    }
    PathState::new(nodes, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn midpoint_of_three_node_path() {
        let path = init_path_convex(&[0.0, 0.0], &[1.0, 1.0], 3).unwrap();
        assert_relative_eq!(path.node(1)[0], 0.5, max_relative = 1e-15);
        assert_relative_eq!(path.node(1)[1], 0.5, max_relative = 1e-15);
        // formula images: node 1 = B, node r = A
        assert_eq!(path.node(0), &[1.0, 1.0]);
        assert_eq!(path.node(2), &[0.0, 0.0]);
    }

    #[test]
    fn fifty_equidistant_nodes() {
        let a = [0.4, -1.0];
        let b = [-0.8, 1.4];
        let path = init_path_convex(&a, &b, 50).unwrap();
        assert_eq!(path.node_count(), 50);
        let gaps: Vec<f64> = path
            .nodes()
            .windows(2)
            .map(|w| crate::angles::torus_distance(&w[0], &w[1]))
            .collect();
        for g in &gaps {
            assert_relative_eq!(*g, gaps[0], max_relative = 1e-10);
        }
    }

    #[test]
    fn rejects_degenerate_endpoints_and_small_r() {
        assert!(init_path_convex(&[0.5, 0.5], &[0.5, 0.5], 10).is_err());
        assert!(init_path_convex(&[0.0, 0.0], &[1.0, 0.0], 2).is_err());
    }

    #[test]
    fn interpolation_takes_minimal_arc_across_seam() {
        // From 3.0 to -3.0 the minimal arc crosses the +/-pi seam.
        let path = init_path_convex(&[-3.0], &[3.0], 5).unwrap();
        for w in path.nodes().windows(2) {
            let step = wrap_diff(w[1][0], w[0][0]);
            assert!(step.abs() < 0.2, "step {step} should be the short way");
            assert!(step > 0.0);
        }
        assert!((path.node(2)[0].abs() - PI).abs() < 1e-12);
    }
}
