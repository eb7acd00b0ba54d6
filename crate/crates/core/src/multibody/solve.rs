//! Acceleration solvers for the constrained equations of motion.
//!
//! The saddle system
//!
//! ```text
//! [ M   Phi_q^T ] [ qddot  ]   [ g     ]
//! [ Phi_q   0   ] [ lambda ] = [ gamma ]
//! ```
//!
//! is solved directly (LU or Moore-Penrose pseudoinverse), optionally with
//! Baumgarte feedback `gamma - 2 alpha Phi_dot - beta^2 Phi`, or iteratively
//! with the penalty (augmented Lagrangian) scheme.

use crate::error::{Error, Result};
use crate::multibody::forces::assemble_applied_forces;
use crate::multibody::system::MultibodySystem;
use nalgebra::{DMatrix, DVector};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Lu,
    Pseudoinverse,
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lu" => Ok(Solver::Lu),
            "pinv" | "pseudoinverse" => Ok(Solver::Pseudoinverse),
            other => Err(Error::InvalidArgument(format!(
                "unknown solver {other:?} (expected lu or pinv)"
            ))),
        }
    }
}

/// Penalty parameters of the augmented Lagrangian iteration. `beta` here is
/// the velocity-feedback gain (a penalty constant, not the inverse
/// temperature). Convergence accepts when the update norm drops below
/// `epsilon * (1 + ||qddot||)`: with `alpha = 1e7` the LU noise floor of the
/// penalized system sits near `1e-9 * ||qddot||`, so a purely absolute test
/// would stall on fast systems.
#[derive(Debug, Clone, Copy)]
pub struct AugLagParams {
    pub alpha: f64,
    pub omega: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub max_inner: usize,
}

impl Default for AugLagParams {
    fn default() -> Self {
        Self {
            alpha: 1e7,
            omega: 10.0,
            beta: 1.0,
            epsilon: 1e-9,
            max_inner: 200,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Stabilizer {
    None,
    Baumgarte { alpha: f64, beta: f64 },
    AugmentedLagrangian(AugLagParams),
}

impl Stabilizer {
    /// The paper's working Baumgarte gains.
    pub fn baumgarte_default() -> Self {
        Stabilizer::Baumgarte {
            alpha: 5.0,
            beta: 5.0,
        }
    }
}

/// The assembled saddle-point system at one state.
pub struct AssembledSaddleSystem {
    pub mass: DMatrix<f64>,
    pub jac: DMatrix<f64>,
    pub rhs_top: DVector<f64>,
    pub gamma: DVector<f64>,
    pub phi: DVector<f64>,
    pub phidot: DVector<f64>,
}

impl AssembledSaddleSystem {
    pub fn dof(&self) -> usize {
        self.mass.nrows()
    }

    pub fn constraint_rows(&self) -> usize {
        self.jac.nrows()
    }

    /// `gamma` with the stabilizer's feedback applied (identity for `None`
    /// and for the augmented Lagrangian, which applies its own feedback).
    pub fn stabilized_gamma(&self, stabilizer: &Stabilizer) -> DVector<f64> {
        match stabilizer {
            Stabilizer::Baumgarte { alpha, beta } => {
                &self.gamma - &self.phidot * (2.0 * alpha) - &self.phi * (beta * beta)
            }
            _ => self.gamma.clone(),
        }
    }
}

/// Block-diagonal mass matrix: `m I` and the global-frame inertia per body.
pub fn mass_matrix(sys: &MultibodySystem) -> DMatrix<f64> {
    let dof = sys.dof();
    let mut m = DMatrix::zeros(dof, dof);
    for (i, b) in sys.bodies().iter().enumerate() {
        for c in 0..3 {
            m[(6 * i + c, 6 * i + c)] = b.mass();
        }
        let jg = b.inertia_global();
        for r in 0..3 {
            for c in 0..3 {
                m[(6 * i + 3 + r, 6 * i + 3 + c)] = jg[(r, c)];
            }
        }
    }
    m
}

/// Assemble mass, constraints, and the applied-force vector at the current
/// state. `held_noise` is the per-step Langevin draw (if any); `extra` adds
/// caller-supplied generalized forces (the replica band uses this).
pub fn build_saddle(
    sys: &MultibodySystem,
    held_noise: Option<&DVector<f64>>,
    extra: Option<&DVector<f64>>,
) -> Result<AssembledSaddleSystem> {
    let asm = sys.assemble();
    let qdot = sys.velocities();
    let phidot = if asm.rows() > 0 {
        asm.phidot(&qdot)
    } else {
        DVector::zeros(0)
    };
    Ok(AssembledSaddleSystem {
        mass: mass_matrix(sys),
        rhs_top: assemble_applied_forces(sys, held_noise, extra)?,
        gamma: asm.gamma,
        phi: asm.phi,
        phidot,
        jac: asm.jac,
    })
}

/// A direct solution of the saddle system.
pub struct SaddleSolution {
    pub qddot: DVector<f64>,
    pub lambda: DVector<f64>,
    /// `||A x - b|| / (1 + ||b||)` of the assembled block system.
    pub residual: f64,
}

/// Solve the block system for accelerations and multipliers. `stabilizer`
/// may be `None` or `Baumgarte`; the augmented Lagrangian has its own entry
/// point.
pub fn solve_accelerations(
    asm: &AssembledSaddleSystem,
    solver: Solver,
    stabilizer: &Stabilizer,
) -> Result<SaddleSolution> {
    if matches!(stabilizer, Stabilizer::AugmentedLagrangian(_)) {
        return Err(Error::InvalidArgument(
            "augmented Lagrangian accelerations come from augmented_lagrangian_accels".into(),
        ));
    }
    let dof = asm.dof();
    let m = asm.constraint_rows();
    let n = dof + m;
    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (dof, dof)).copy_from(&asm.mass);
    if m > 0 {
        a.view_mut((0, dof), (dof, m)).copy_from(&asm.jac.transpose());
        a.view_mut((dof, 0), (m, dof)).copy_from(&asm.jac);
    }
    let mut b = DVector::zeros(n);
    b.rows_mut(0, dof).copy_from(&asm.rhs_top);
    if m > 0 {
        b.rows_mut(dof, m).copy_from(&asm.stabilized_gamma(stabilizer));
    }

    let x = match solver {
        Solver::Lu => a.clone().lu().solve(&b).ok_or_else(|| {
            Error::SingularSystem(
                "LU factorization failed; redundant constraints need the pseudoinverse solver"
                    .into(),
            )
        })?,
        Solver::Pseudoinverse => {
            let svd = a.clone().svd(true, true);
            let smax = svd.singular_values.iter().fold(0.0f64, |acc, &s| acc.max(s));
            let pinv = svd
                .pseudo_inverse(1e-12 * smax.max(1.0))
                .map_err(|e| Error::SingularSystem(e.to_string()))?;
            pinv * &b
        }
    };
    let residual = (&a * &x - &b).norm() / (1.0 + b.norm());
    Ok(SaddleSolution {
        qddot: x.rows(0, dof).into(),
        lambda: x.rows(dof, m).into(),
        residual,
    })
}

/// Penalty iteration for the accelerations:
///
/// ```text
/// M qddot_0 = g
/// (M + alpha Phi_q^T Phi_q) qddot_{i+1}
///     = M qddot_i + Phi_q^T alpha (gamma - 2 omega beta Phi_dot - omega^2 Phi)
/// ```
///
/// stopped when `||qddot_{i+1} - qddot_i|| < epsilon`. Returns the converged
/// accelerations and the inner-iteration count.
pub fn augmented_lagrangian_accels(
    asm: &AssembledSaddleSystem,
    params: &AugLagParams,
) -> Result<(DVector<f64>, usize)> {
    let m_lu = asm.mass.clone().lu();
    let mut qddot = m_lu
        .solve(&asm.rhs_top)
        .ok_or_else(|| Error::SingularSystem("mass matrix is singular".into()))?;
    if asm.constraint_rows() == 0 {
        return Ok((qddot, 1));
    }

    let feedback = &asm.gamma
        - &asm.phidot * (2.0 * params.omega * params.beta)
        - &asm.phi * (params.omega * params.omega);
    let jt = asm.jac.transpose();
    let m_bar = &asm.mass + params.alpha * (&jt * &asm.jac);
    let m_bar_lu = m_bar.lu();
    let forcing = &jt * (params.alpha * &feedback);

    for inner in 1..=params.max_inner {
        let rhs = &asm.mass * &qddot + &forcing;
        let next = m_bar_lu
            .solve(&rhs)
            .ok_or_else(|| Error::SingularSystem("penalized mass matrix is singular".into()))?;
        let delta = (&next - &qddot).norm();
        qddot = next;
        if delta < params.epsilon * (1.0 + qddot.norm()) {
            return Ok((qddot, inner));
        }
    }
    let residual = (&asm.jac * &qddot - &feedback).norm();
    Err(Error::NoConvergence {
        iterations: params.max_inner,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multibody::body::RigidBody;
    use crate::multibody::system::tests::two_body_revolute;
    use nalgebra::Vector3;

    fn free_body_system(force: Vector3<f64>) -> (MultibodySystem, AssembledSaddleSystem) {
        let mut body = RigidBody::with_diagonal_inertia(2.0, Vector3::new(1.0, 1.0, 1.0)).unwrap();
        body.position = Vector3::zeros();
        let mut sys = MultibodySystem::new(vec![body], vec![]).unwrap();
        sys.gravity = force / 2.0; // mass 2 -> applied force = force
        let asm = build_saddle(&sys, None, None).unwrap();
        (sys, asm)
    }

    #[test]
    fn unconstrained_newton() {
        let f = Vector3::new(1.0, -2.0, 0.5);
        let (_, asm) = free_body_system(f);
        let sol = solve_accelerations(&asm, Solver::Lu, &Stabilizer::None).unwrap();
        // qddot = M^-1 f with mass 2
        approx::assert_relative_eq!(sol.qddot[0], 0.5, epsilon = 1e-14);
        approx::assert_relative_eq!(sol.qddot[1], -1.0, epsilon = 1e-14);
        approx::assert_relative_eq!(sol.qddot[2], 0.25, epsilon = 1e-14);
        assert!(sol.residual < 1e-12);
        assert_eq!(sol.lambda.len(), 0);
    }

    #[test]
    fn baumgarte_coincides_with_plain_on_admissible_states() {
        let mut sys = two_body_revolute();
        sys.gravity = Vector3::new(0.0, -1.0, 0.0);
        let asm = build_saddle(&sys, None, None).unwrap();
        assert!(asm.phi.amax() < 1e-12 && asm.phidot.amax() < 1e-12);
        let plain = solve_accelerations(&asm, Solver::Lu, &Stabilizer::None).unwrap();
        let stab =
            solve_accelerations(&asm, Solver::Lu, &Stabilizer::baumgarte_default()).unwrap();
        assert!((plain.qddot - stab.qddot).norm() < 1e-12);
    }

    #[test]
    fn baumgarte_default_gains_echo() {
        match Stabilizer::baumgarte_default() {
            Stabilizer::Baumgarte { alpha, beta } => {
                assert_eq!(alpha, 5.0);
                assert_eq!(beta, 5.0);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn lu_and_pseudoinverse_agree_when_nonsingular() {
        let mut sys = two_body_revolute();
        sys.gravity = Vector3::new(0.3, -0.9, 0.1);
        let asm = build_saddle(&sys, None, None).unwrap();
        let lu = solve_accelerations(&asm, Solver::Lu, &Stabilizer::None).unwrap();
        let pinv = solve_accelerations(&asm, Solver::Pseudoinverse, &Stabilizer::None).unwrap();
        assert!(
            (lu.qddot - pinv.qddot).norm() < 1e-8,
            "solver mismatch"
        );
    }

    #[test]
    fn redundant_rows_need_pseudoinverse() {
        let mut sys = two_body_revolute();
        sys.set_redundant_constraints(true);
        sys.gravity = Vector3::new(0.0, -1.0, 0.0);
        let asm = build_saddle(&sys, None, None).unwrap();
        assert_eq!(asm.constraint_rows(), 6);
        // the LU route may or may not be exactly singular in floating point;
        // the pseudoinverse must produce a small-residual solution
        let sol = solve_accelerations(&asm, Solver::Pseudoinverse, &Stabilizer::None).unwrap();
        assert!(sol.residual < 1e-8, "residual {}", sol.residual);

        // and it must match the non-redundant accelerations
        let mut plain_sys = two_body_revolute();
        plain_sys.gravity = Vector3::new(0.0, -1.0, 0.0);
        let plain_asm = build_saddle(&plain_sys, None, None).unwrap();
        let plain = solve_accelerations(&plain_asm, Solver::Lu, &Stabilizer::None).unwrap();
        assert!((plain.qddot - sol.qddot).norm() < 1e-7);
    }

    #[test]
    fn auglag_unconstrained_converges_first_iteration() {
        let (_, asm) = free_body_system(Vector3::new(0.0, 0.0, 4.0));
        let (qddot, inner) = augmented_lagrangian_accels(&asm, &AugLagParams::default()).unwrap();
        assert_eq!(inner, 1);
        approx::assert_relative_eq!(qddot[2], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn auglag_fixed_point_satisfies_saddle_system() {
        let mut sys = two_body_revolute();
        sys.gravity = Vector3::new(0.2, -0.7, 0.4);
        let asm = build_saddle(&sys, None, None).unwrap();
        let saddle = solve_accelerations(&asm, Solver::Lu, &Stabilizer::None).unwrap();
        let (qddot, inner) = augmented_lagrangian_accels(&asm, &AugLagParams::default()).unwrap();
        assert!(inner <= 50, "inner iterations {inner}");
        assert!(
            (qddot - saddle.qddot).norm() < 1e-6,
            "fixed point disagrees with the saddle solve"
        );
    }
}
