//! Gradient reconstruction from projection views.
//!
//! A view is an orthogonal projection of the full gradient onto a coordinate
//! pair, together with a function that evaluates that projected gradient.
//! For a regular set of views (every axis covered at least once), the full
//! gradient is recovered as `M^-1 sum_i f_i(theta)` where `M` is the diagonal
//! sum of the projections.

use crate::error::{Error, Result};
use crate::landscape::grid::AngleGrid;
use std::sync::Arc;

/// Evaluates the projected 2-d gradient of a view at the projected point.
pub trait ViewFn: Send + Sync {
    fn eval(&self, a: f64, b: f64) -> (f64, f64);
}

impl<F> ViewFn for F
where
    F: Fn(f64, f64) -> (f64, f64) + Send + Sync,
{
    fn eval(&self, a: f64, b: f64) -> (f64, f64) {
        self(a, b)
    }
}

/// A view backed by the baked gradient field of an energy grid.
#[derive(Clone)]
pub struct GridViewFn {
    grid: Arc<AngleGrid>,
}

impl GridViewFn {
    pub fn new(grid: Arc<AngleGrid>) -> Self {
        Self { grid }
    }
}

impl ViewFn for GridViewFn {
    fn eval(&self, a: f64, b: f64) -> (f64, f64) {
        self.grid.lookup(a, b).1
    }
}

struct ProjectionView {
    axes: (usize, usize),
    f: Box<dyn ViewFn>,
}

/// A set of coordinate-pair projection views over an n-dimensional
/// parametrization space.
pub struct ProjectionViewSet {
    dim: usize,
    views: Vec<ProjectionView>,
}

impl ProjectionViewSet {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument(format!(
                "projection views need dimension >= 2, got {dim}"
            )));
        }
        Ok(Self {
            dim,
            views: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    /// Add a view projecting onto coordinate axes `(a, b)`.
    pub fn push(&mut self, axes: (usize, usize), f: impl ViewFn + 'static) -> Result<()> {
        if axes.0 >= self.dim || axes.1 >= self.dim {
            return Err(Error::InvalidArgument(format!(
                "view axes {axes:?} out of range for dimension {}",
                self.dim
            )));
        }
        if axes.0 == axes.1 {
            return Err(Error::InvalidArgument(format!(
                "view axes must select two distinct coordinates, got {axes:?}"
            )));
        }
        self.views.push(ProjectionView {
            axes,
            f: Box::new(f),
        });
        Ok(())
    }

    /// Diagonal of `M = sum_i T_i`: per-axis view coverage counts.
    pub fn mass_diagonal(&self) -> Vec<f64> {
        let mut diag = vec![0.0; self.dim];
        for v in &self.views {
            diag[v.axes.0] += 1.0;
            diag[v.axes.1] += 1.0;
        }
        diag
    }

    /// A set is regular when `M` is invertible, i.e. every axis is covered.
    pub fn check_regular(&self) -> Result<()> {
        for (axis, &m) in self.mass_diagonal().iter().enumerate() {
            if m <= 0.0 {
                return Err(Error::Config(format!(
                    "view set is not regular: axis {axis} is not covered by any view"
                )));
            }
        }
        Ok(())
    }

    /// Reconstruct the full gradient at `theta` as `M^-1 sum_i f_i(theta)`.
    ///
    /// When each view returns the exact projection of one underlying
    /// gradient, the reconstruction equals that gradient.
    pub fn reconstruct_gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if theta.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "point has {} coordinates, views are over dimension {}",
                theta.len(),
                self.dim
            )));
        }
        self.check_regular()?;
        let mut sum = vec![0.0; self.dim];
        for v in &self.views {
            let (ga, gb) = v.f.eval(theta[v.axes.0], theta[v.axes.1]);
            sum[v.axes.0] += ga;
            sum[v.axes.1] += gb;
        }
        for (s, m) in sum.iter_mut().zip(self.mass_diagonal()) {
            *s /= m;
        }
        Ok(sum)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_view_returns_its_gradient() {
        // n = 2, a single view covering both axes, f = g.
        let g = (1.7, -0.4);
        let mut set = ProjectionViewSet::new(2).unwrap();
        set.push((0, 1), move |_a: f64, _b: f64| g).unwrap();
        let out = set.reconstruct_gradient(&[0.1, 0.2]).unwrap();
        assert_eq!(out, vec![1.7, -0.4]);
    }

    #[test]
    fn three_pair_views_recover_vector() {
        // n = 3, views on (0,1), (1,2), (0,2): M = diag(2,2,2).
        let v = [0.3, -1.1, 2.4];
        let mut set = ProjectionViewSet::new(3).unwrap();
        set.push((0, 1), move |_, _| (v[0], v[1])).unwrap();
        set.push((1, 2), move |_, _| (v[1], v[2])).unwrap();
        set.push((0, 2), move |_, _| (v[0], v[2])).unwrap();
        assert_eq!(set.mass_diagonal(), vec![2.0, 2.0, 2.0]);
        let out = set.reconstruct_gradient(&[0.0, 0.0, 0.0]).unwrap();
        for (o, w) in out.iter().zip(v) {
            assert_relative_eq!(*o, w, max_relative = 1e-15);
        }
    }

    #[test]
    fn quadratic_energy_reconstruction() {
        // Synthetic quadratic E = sum c_k theta_k^2 over n = 4; exact
        // projections of its analytic gradient reconstruct the gradient.
        let c = [0.5, 1.0, 2.0, 0.25];
        let mut set = ProjectionViewSet::new(4).unwrap();
        let axes_list = [(0usize, 1usize), (1, 2), (2, 3), (0, 3), (0, 2)];
        for (a, b) in axes_list {
            set.push((a, b), move |x: f64, y: f64| (2.0 * c[a] * x, 2.0 * c[b] * y))
                .unwrap();
        }
        let theta = [0.7, -0.2, 1.3, 0.9];
        let out = set.reconstruct_gradient(&theta).unwrap();
        for k in 0..4 {
            assert_relative_eq!(out[k], 2.0 * c[k] * theta[k], max_relative = 1e-8);
        }
    }

    #[test]
    fn uncovered_axis_is_reported() {
        let mut set = ProjectionViewSet::new(3).unwrap();
        set.push((0, 1), |_, _| (0.0, 0.0)).unwrap();
        let err = set.reconstruct_gradient(&[0.0; 3]).unwrap_err();
        assert!(err.to_string().contains("axis 2"), "got: {err}");
    }

    #[test]
    fn rejects_bad_axes() {
        let mut set = ProjectionViewSet::new(3).unwrap();
        assert!(set.push((0, 0), |_, _| (0.0, 0.0)).is_err());
        assert!(set.push((0, 5), |_, _| (0.0, 0.0)).is_err());
    }
}
