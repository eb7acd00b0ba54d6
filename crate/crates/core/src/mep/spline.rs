//! Cubic-spline arc-length reparametrization.

use crate::angles::{unwrap_path, wrap};
use crate::error::{Error, Result};
use crate::mep::path::PathState;

/// Natural cubic spline through `(t_i, y_i)` knots, vector-valued.
pub(crate) struct CubicSpline {
    t: Vec<f64>,
    y: Vec<Vec<f64>>,
    /// second derivatives at the knots, natural end conditions
    m: Vec<Vec<f64>>,
}

impl CubicSpline {
    pub fn new(t: Vec<f64>, y: Vec<Vec<f64>>) -> Result<Self> {
        let n = t.len();
        if n < 2 || y.len() != n {
            return Err(Error::InvalidArgument(
                "spline needs at least two knots with matching values".into(),
            ));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "spline knots must be strictly increasing".into(),
            ));
        }
        let dim = y[0].len();
        let mut m = vec![vec![0.0; dim]; n];
        if n > 2 {
            // Thomas solve of the tridiagonal natural-spline system, one
            // right-hand side per coordinate.
            let rows = n - 2;
            let mut sub = vec![0.0; rows];
            let mut diag = vec![0.0; rows];
            let mut sup = vec![0.0; rows];
            let mut rhs = vec![vec![0.0; dim]; rows];
            for i in 0..rows {
                let h0 = t[i + 1] - t[i];
                let h1 = t[i + 2] - t[i + 1];
                sub[i] = h0 / 6.0;
                diag[i] = (h0 + h1) / 3.0;
                sup[i] = h1 / 6.0;
                for d in 0..dim {
                    rhs[i][d] =
                        (y[i + 2][d] - y[i + 1][d]) / h1 - (y[i + 1][d] - y[i][d]) / h0;
                }
            }
            // forward sweep
            for i in 1..rows {
                let w = sub[i] / diag[i - 1];
                diag[i] -= w * sup[i - 1];
                for d in 0..dim {
                    let prev = rhs[i - 1][d];
                    rhs[i][d] -= w * prev;
                }
            }
            // back substitution
            for i in (0..rows).rev() {
                for d in 0..dim {
                    let upper = if i + 1 < rows { sup[i] * m[i + 2][d] } else { 0.0 };
                    m[i + 1][d] = (rhs[i][d] - upper) / diag[i];
                }
            }
        }
        Ok(Self { t, y, m })
    }

    fn segment(&self, t: f64) -> usize {
        // clamp outside the knot range onto the end segments
        if t <= self.t[0] {
            return 0;
        }
        let last = self.t.len() - 2;
        if t >= self.t[last + 1] {
            return last;
        }
        match self
            .t
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            Ok(i) => i.min(last),
            Err(i) => i - 1,
        }
    }

    pub fn eval(&self, t: f64, out: &mut [f64]) {
        let i = self.segment(t);
        let h = self.t[i + 1] - self.t[i];
        let a = (self.t[i + 1] - t) / h;
        let b = (t - self.t[i]) / h;
        let h2 = h * h / 6.0;
        for d in 0..out.len() {
            out[d] = a * self.y[i][d]
                + b * self.y[i + 1][d]
                + ((a * a * a - a) * self.m[i][d] + (b * b * b - b) * self.m[i + 1][d]) * h2;
        }
    }

    pub fn deriv(&self, t: f64, out: &mut [f64]) {
        let i = self.segment(t);
        let h = self.t[i + 1] - self.t[i];
        let a = (self.t[i + 1] - t) / h;
        let b = (t - self.t[i]) / h;
        for d in 0..out.len() {
            out[d] = (self.y[i + 1][d] - self.y[i][d]) / h
                + h / 6.0
                    * (-(3.0 * a * a - 1.0) * self.m[i][d]
                        + (3.0 * b * b - 1.0) * self.m[i + 1][d]);
        }
    }

    pub fn speed(&self, t: f64, scratch: &mut [f64]) -> f64 {
        self.deriv(t, scratch);
        scratch.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// 3-point Gauss-Legendre quadrature of the spline speed over `[a, b]`.
fn arc_gl3(spline: &CubicSpline, a: f64, b: f64, scratch: &mut [f64]) -> f64 {
    const X: [f64; 3] = [-0.7745966692414834, 0.0, 0.7745966692414834];
    const W: [f64; 3] = [0.5555555555555556, 0.8888888888888888, 0.5555555555555556];
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for (x, w) in X.iter().zip(W) {
        sum += w * spline.speed(mid + half * x, scratch);
    }
    sum * half
}

const FINE_CELLS_PER_SEGMENT: usize = 32;

/// Redistribute the path nodes along a natural cubic spline through the old
/// nodes so that consecutive arc-length gaps are equal (relative 1e-6 or
/// better, measured along that spline). Endpoints are preserved bit for
/// bit. Angles are lifted to a continuous representative before splining
/// and wrapped back afterwards.
pub fn reparametrize(path: &PathState) -> Result<PathState> {
    Ok(reparametrize_with_diag(path)?.0)
}

/// As [`reparametrize`], additionally returning the worst relative
/// arc-position error of the redistributed nodes along the resampling
/// spline (the achieved gap-equality figure).
pub(crate) fn reparametrize_with_diag(path: &PathState) -> Result<(PathState, f64)> {
    let r = path.node_count();
    let dim = path.dim();
    let lifted = unwrap_path(path.nodes());

    // drop exactly coincident consecutive nodes for the spline knots
    let mut knot_nodes: Vec<Vec<f64>> = vec![lifted[0].clone()];
    for node in lifted.iter().skip(1) {
        if node != knot_nodes.last().unwrap() {
            knot_nodes.push(node.clone());
        }
    }
    let chord = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let total_chord: f64 = knot_nodes.windows(2).map(|w| chord(&w[0], &w[1])).sum();
    if total_chord < 1e-12 {
        return Err(Error::DegeneratePath(format!(
            "total path length {total_chord:.3e} is below 1e-12"
        )));
    }

    let mut knots = Vec::with_capacity(knot_nodes.len());
    let mut acc = 0.0;
    knots.push(0.0);
    for w in knot_nodes.windows(2) {
        acc += chord(&w[0], &w[1]);
        knots.push(acc);
    }
    let spline = CubicSpline::new(knots.clone(), knot_nodes)?;

    // cumulative arc-length table on a fine subdivision aligned with the
    // spline segments (the speed is only C^1 at the knots)
    let segments = knots.len() - 1;
    let cells = FINE_CELLS_PER_SEGMENT * segments;
    let mut scratch = vec![0.0; dim];
    let mut table_t = Vec::with_capacity(cells + 1);
    let mut table_s = Vec::with_capacity(cells + 1);
    table_t.push(0.0);
    table_s.push(0.0);
    let mut s_acc = 0.0;
    for seg in 0..segments {
        let (a, b) = (knots[seg], knots[seg + 1]);
        for c in 0..FINE_CELLS_PER_SEGMENT {
            let t0 = a + (b - a) * c as f64 / FINE_CELLS_PER_SEGMENT as f64;
            let t1 = a + (b - a) * (c + 1) as f64 / FINE_CELLS_PER_SEGMENT as f64;
            s_acc += arc_gl3(&spline, t0, t1, &mut scratch);
            table_t.push(t1);
            table_s.push(s_acc);
        }
    }
    let total_arc = s_acc;

    let mut new_nodes: Vec<Vec<f64>> = Vec::with_capacity(r);
    let mut worst_rel_err = 0.0f64;
    let gap = total_arc / (r - 1) as f64;
    new_nodes.push(path.node(0).to_vec());
    for j in 1..r - 1 {
        let target = total_arc * j as f64 / (r - 1) as f64;
        // locate the fine cell, then refine with Newton on s(t) - target
        let mut lo = match table_s
            .binary_search_by(|probe| probe.partial_cmp(&target).unwrap())
        {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        lo = lo.min(cells - 1);
        let (t_lo, t_hi) = (table_t[lo], table_t[lo + 1]);
        let (s_lo, s_hi) = (table_s[lo], table_s[lo + 1]);
        let mut t = if s_hi > s_lo {
            t_lo + (t_hi - t_lo) * (target - s_lo) / (s_hi - s_lo)
        } else {
            t_lo
        };
        for _ in 0..3 {
            let s_here = s_lo + arc_gl3(&spline, t_lo, t, &mut scratch);
            let speed = spline.speed(t, &mut scratch);
            if speed <= 0.0 {
                break;
            }
            t = (t - (s_here - target) / speed).clamp(t_lo, t_hi);
        }
        let final_err = s_lo + arc_gl3(&spline, t_lo, t, &mut scratch) - target;
        worst_rel_err = worst_rel_err.max(final_err.abs() / gap);
        let mut node = vec![0.0; dim];
        spline.eval(t, &mut node);
        for v in node.iter_mut() {
            *v = wrap(*v);
        }
        new_nodes.push(node);
    }
    new_nodes.push(path.node(r - 1).to_vec());

    Ok((path.with_nodes(new_nodes), worst_rel_err))
}
