//! Joint constraint equations, their Jacobians, and the quadratic-velocity
//! right-hand side.
//!
//! Velocity coordinates are `[rdot_1, w_1, ..., rdot_N, w_N]` with `w` the
//! global-frame angular velocity. Constraints are time-independent, so the
//! velocity constraint is `Phi_q qdot = 0` and the acceleration constraint
//! `Phi_q qddot = gamma` with `gamma` collecting the quadratic terms.
//!
//! Three scalar primitives build every joint:
//! - `dot1`: dot product of two body-fixed unit vectors (parallelism),
//! - `dot2`: dot product of a body-fixed vector with the anchor separation
//!   (collinearity of a cylindrical joint's free axis),
//! - `spherical`: coincidence of two anchor points (three rows).
//!
//! The redundant cross-product forms (`u_i~ u_j = 0`, `u_i~ d = 0`) are kept
//! for fidelity experiments with the pseudoinverse solver.

use crate::multibody::euler::skew;
use crate::multibody::joint::JointKind;
use crate::multibody::system::MultibodySystem;
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

/// Snapshot of one body's kinematic state used during assembly.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FrameView {
    pub a: Matrix3<f64>,
    pub r: Vector3<f64>,
    pub v: Vector3<f64>,
    pub w: Vector3<f64>,
}

/// One scalar constraint row: value, Jacobian blocks for the two incident
/// bodies, and its quadratic-velocity term.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RowBlock {
    pub value: f64,
    pub j_ri: Vector3<f64>,
    pub j_wi: Vector3<f64>,
    pub j_rj: Vector3<f64>,
    pub j_wj: Vector3<f64>,
    pub gamma: f64,
}

fn dot1_row(fi: &FrameView, fj: &FrameView, a_local: &Vector3<f64>, b_local: &Vector3<f64>) -> RowBlock {
    let a = fi.a * a_local;
    let b = fj.a * b_local;
    let axb = a.cross(&b);
    let adot = fi.w.cross(&a);
    let bdot = fj.w.cross(&b);
    RowBlock {
        value: a.dot(&b),
        j_ri: Vector3::zeros(),
        j_wi: axb,
        j_rj: Vector3::zeros(),
        j_wj: -axb,
        gamma: -(fi.w.cross(&adot).dot(&b) + 2.0 * adot.dot(&bdot) + a.dot(&fj.w.cross(&bdot))),
    }
}

fn dot2_row(
    fi: &FrameView,
    fj: &FrameView,
    a_local: &Vector3<f64>,
    anchor_i: &Vector3<f64>,
    anchor_j: &Vector3<f64>,
) -> RowBlock {
    let a = fi.a * a_local;
    let s_i = fi.a * anchor_i;
    let s_j = fj.a * anchor_j;
    let d = (fj.r + s_j) - (fi.r + s_i);
    let adot = fi.w.cross(&a);
    let si_dot = fi.w.cross(&s_i);
    let sj_dot = fj.w.cross(&s_j);
    let ddot = (fj.v + sj_dot) - (fi.v + si_dot);
    RowBlock {
        value: a.dot(&d),
        j_ri: -a,
        j_wi: a.cross(&(d + s_i)),
        j_rj: a,
        j_wj: -a.cross(&s_j),
        gamma: -(fi.w.cross(&adot).dot(&d)
            + 2.0 * adot.dot(&ddot)
            + a.dot(&(fj.w.cross(&sj_dot) - fi.w.cross(&si_dot)))),
    }
}

fn spherical_rows(
    fi: &FrameView,
    fj: &FrameView,
    anchor_i: &Vector3<f64>,
    anchor_j: &Vector3<f64>,
) -> [RowBlock; 3] {
    let s_i = fi.a * anchor_i;
    let s_j = fj.a * anchor_j;
    let value = (fi.r + s_i) - (fj.r + s_j);
    let j_wi = -skew(&s_i);
    let j_wj = skew(&s_j);
    let gamma = -(fi.w.cross(&fi.w.cross(&s_i)) - fj.w.cross(&fj.w.cross(&s_j)));
    std::array::from_fn(|k| RowBlock {
        value: value[k],
        j_ri: unit(k),
        j_wi: j_wi.row(k).transpose(),
        j_rj: -unit(k),
        j_wj: j_wj.row(k).transpose(),
        gamma: gamma[k],
    })
}

fn cross_axes_rows(
    fi: &FrameView,
    fj: &FrameView,
    a_local: &Vector3<f64>,
    b_local: &Vector3<f64>,
) -> [RowBlock; 3] {
    let a = fi.a * a_local;
    let b = fj.a * b_local;
    let adot = fi.w.cross(&a);
    let bdot = fj.w.cross(&b);
    let value = a.cross(&b);
    let j_wi = skew(&b) * skew(&a);
    let j_wj = -(skew(&a) * skew(&b));
    let gamma = -(fi.w.cross(&adot).cross(&b) + 2.0 * adot.cross(&bdot) + a.cross(&fj.w.cross(&bdot)));
    std::array::from_fn(|k| RowBlock {
        value: value[k],
        j_ri: Vector3::zeros(),
        j_wi: j_wi.row(k).transpose(),
        j_rj: Vector3::zeros(),
        j_wj: j_wj.row(k).transpose(),
        gamma: gamma[k],
    })
}

fn cross_sep_rows(
    fi: &FrameView,
    fj: &FrameView,
    a_local: &Vector3<f64>,
    anchor_i: &Vector3<f64>,
    anchor_j: &Vector3<f64>,
) -> [RowBlock; 3] {
    let a = fi.a * a_local;
    let s_i = fi.a * anchor_i;
    let s_j = fj.a * anchor_j;
    let d = (fj.r + s_j) - (fi.r + s_i);
    let adot = fi.w.cross(&a);
    let si_dot = fi.w.cross(&s_i);
    let sj_dot = fj.w.cross(&s_j);
    let ddot = (fj.v + sj_dot) - (fi.v + si_dot);
    let value = a.cross(&d);
    let j_ri = -skew(&a);
    let j_rj = skew(&a);
    let j_wi = skew(&d) * skew(&a) + skew(&a) * skew(&s_i);
    let j_wj = -(skew(&a) * skew(&s_j));
    let gamma = -(fi.w.cross(&adot).cross(&d)
        + 2.0 * adot.cross(&ddot)
        + a.cross(&(fj.w.cross(&sj_dot) - fi.w.cross(&si_dot))));
    std::array::from_fn(|k| RowBlock {
        value: value[k],
        j_ri: j_ri.row(k).transpose(),
        j_wi: j_wi.row(k).transpose(),
        j_rj: j_rj.row(k).transpose(),
        j_wj: j_wj.row(k).transpose(),
        gamma: gamma[k],
    })
}

fn unit(k: usize) -> Vector3<f64> {
    let mut v = Vector3::zeros();
    v[k] = 1.0;
    v
}

/// The assembled constraint set at one system state.
#[derive(Debug, Clone)]
pub struct ConstraintAssembly {
    pub phi: DVector<f64>,
    pub jac: DMatrix<f64>,
    pub gamma: DVector<f64>,
    /// (joint index, first row, row count) per joint, for diagnostics.
    pub joint_spans: Vec<(usize, usize, usize)>,
}

impl ConstraintAssembly {
    pub fn rows(&self) -> usize {
        self.phi.len()
    }

    /// `Phi_dot = Phi_q qdot` (constraints are time-independent).
    pub fn phidot(&self, qdot: &DVector<f64>) -> DVector<f64> {
        &self.jac * qdot
    }

    pub fn phi_inf(&self) -> f64 {
        self.phi.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Evaluate every joint's constraint rows at the current state.
pub(crate) fn assemble_constraints(sys: &MultibodySystem) -> ConstraintAssembly {
    let frames: Vec<FrameView> = sys.bodies().iter().map(|b| FrameView {
        a: b.rotation(),
        r: b.position,
        v: b.velocity,
        w: b.angular_velocity,
    }).collect();

    let redundant = sys.redundant_constraints();
    let total_rows: usize = sys
        .joints()
        .iter()
        .map(|j| {
            if redundant {
                j.kind.redundant_rows()
            } else {
                j.kind.constraint_rows()
            }
        })
        .sum();
    let dof = 6 * sys.bodies().len();

    let mut phi = DVector::zeros(total_rows);
    let mut jac = DMatrix::zeros(total_rows, dof);
    let mut gamma = DVector::zeros(total_rows);
    let mut joint_spans = Vec::with_capacity(sys.joints().len());

    let mut row = 0usize;
    for (jidx, joint) in sys.joints().iter().enumerate() {
        let frame = sys.joint_frame(jidx);
        let (bi, bj) = (joint.body_i, joint.body_j);
        let (fi, fj) = (&frames[bi], &frames[bj]);
        let start = row;

        let mut push = |blocks: &[RowBlock], row: &mut usize| {
            for b in blocks {
                phi[*row] = b.value;
                gamma[*row] = b.gamma;
                for k in 0..3 {
                    jac[(*row, 6 * bi + k)] = b.j_ri[k];
                    jac[(*row, 6 * bi + 3 + k)] = b.j_wi[k];
                    jac[(*row, 6 * bj + k)] = b.j_rj[k];
                    jac[(*row, 6 * bj + 3 + k)] = b.j_wj[k];
                }
                *row += 1;
            }
        };

        if redundant {
            push(&cross_axes_rows(fi, fj, &frame.unit_axis_i, &frame.unit_axis_j), &mut row);
            match joint.kind {
                JointKind::Revolute => {
                    push(&spherical_rows(fi, fj, &joint.anchor_i, &joint.anchor_j), &mut row);
                }
                JointKind::Cylindrical => {
                    push(
                        &cross_sep_rows(fi, fj, &frame.unit_axis_i, &joint.anchor_i, &joint.anchor_j),
                        &mut row,
                    );
                }
            }
        } else {
            push(&[dot1_row(fi, fj, &frame.perp_m_i, &frame.unit_axis_j)], &mut row);
            push(&[dot1_row(fi, fj, &frame.perp_n_i, &frame.unit_axis_j)], &mut row);
            match joint.kind {
                JointKind::Revolute => {
                    push(&spherical_rows(fi, fj, &joint.anchor_i, &joint.anchor_j), &mut row);
                }
                JointKind::Cylindrical => {
                    push(
                        &[
                            dot2_row(fi, fj, &frame.perp_m_i, &joint.anchor_i, &joint.anchor_j),
                            dot2_row(fi, fj, &frame.perp_n_i, &joint.anchor_i, &joint.anchor_j),
                        ],
                        &mut row,
                    );
                }
            }
        }
        joint_spans.push((jidx, start, row - start));
    }

    ConstraintAssembly {
        phi,
        jac,
        gamma,
        joint_spans,
    }
}

/// Indices of rows that are linearly dependent on earlier rows
/// (modified Gram-Schmidt scan with a relative tolerance).
pub fn dependent_rows(jac: &DMatrix<f64>, rel_tol: f64) -> Vec<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut dependent = Vec::new();
    for r in 0..jac.nrows() {
        let mut v: DVector<f64> = jac.row(r).transpose();
        let scale = v.norm().max(1e-300);
        for b in &basis {
            let c = v.dot(b);
            v -= b * c;
        }
        if v.norm() < rel_tol * scale {
            dependent.push(r);
        } else {
            let n = v.norm();
            basis.push(v / n);
        }
    }
    dependent
}

#[cfg(test)]
mod tests {
    // Finite-difference verification of the Jacobians and gamma lives in the
    // system-level tests, where admissible states are easy to construct.
}
