//! The direct integration loop: evaluate constraints and forces, solve for
//! accelerations, advance positions and velocities with an embedded 2(3)
//! Runge-Kutta pair (Bogacki-Shampine), renormalizing the Euler parameters
//! after every stage.

use crate::error::{Error, Result};
use crate::multibody::forces::langevin_force;
use crate::multibody::solve::{
    augmented_lagrangian_accels, build_saddle, solve_accelerations, Solver, Stabilizer,
};
use crate::multibody::system::MultibodySystem;
use nalgebra::DVector;

#[derive(Debug, Clone, Copy)]
pub struct StepOptions {
    pub solver: Solver,
    pub stabilizer: Stabilizer,
    /// Absolute/relative tolerance of the embedded error estimate.
    pub rk_tol: f64,
    /// Disable error-based subdivision (one stage sweep per step).
    pub fixed_step: bool,
    /// Abort when `||Phi||_inf` exceeds this after a step.
    pub violation_ceiling: f64,
    pub max_subdivisions: u32,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            solver: Solver::Lu,
            stabilizer: Stabilizer::None,
            rk_tol: 1e-6,
            fixed_step: false,
            violation_ceiling: 1e-2,
            max_subdivisions: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StepReport {
    /// Scaled embedded error estimate of the last accepted sub-step.
    pub error_estimate: f64,
    /// Number of accepted sub-steps covering the macro step.
    pub substeps: usize,
    /// Orientation renormalizations that exceeded the drift tolerance.
    pub renorm_events: usize,
    /// Total augmented-Lagrangian inner iterations (zero otherwise).
    pub auglag_inner_total: usize,
}

struct EvalStats {
    renorm_events: usize,
    auglag_inner: usize,
}

/// Time derivative of the packed state at `y`: positions from velocities,
/// Euler-parameter kinematics from the angular velocities, accelerations
/// from the saddle solve.
fn derivative(
    sys: &mut MultibodySystem,
    y: &[f64],
    opts: &StepOptions,
    held_noise: Option<&DVector<f64>>,
    extra: Option<&DVector<f64>>,
    stats: &mut EvalStats,
) -> Result<Vec<f64>> {
    sys.unpack_state(y);
    stats.renorm_events += sys.renormalize_orientations();

    let asm = build_saddle(sys, held_noise, extra)?;
    let qddot = match &opts.stabilizer {
        Stabilizer::AugmentedLagrangian(params) => {
            let (qddot, inner) = augmented_lagrangian_accels(&asm, params)?;
            stats.auglag_inner += inner;
            qddot
        }
        stab => solve_accelerations(&asm, opts.solver, stab)?.qddot,
    };

    let n_bodies = sys.bodies().len();
    let mut dy = vec![0.0; y.len()];
    for i in 0..n_bodies {
        let o = 13 * i;
        let body = &sys.bodies()[i];
        dy[o] = body.velocity.x;
        dy[o + 1] = body.velocity.y;
        dy[o + 2] = body.velocity.z;
        let pdot = body.orientation.derivative(&body.angular_velocity);
        dy[o + 3..o + 7].copy_from_slice(&pdot);
        for c in 0..3 {
            dy[o + 7 + c] = qddot[6 * i + c];
            dy[o + 10 + c] = qddot[6 * i + 3 + c];
        }
    }
    Ok(dy)
}

fn renormalized(mut y: Vec<f64>, n_bodies: usize) -> Vec<f64> {
    for i in 0..n_bodies {
        let o = 13 * i + 3;
        let norm = (y[o] * y[o] + y[o + 1] * y[o + 1] + y[o + 2] * y[o + 2] + y[o + 3] * y[o + 3])
            .sqrt();
        if norm > 0.0 {
            for k in 0..4 {
                y[o + k] /= norm;
            }
        }
    }
    y
}

fn combine(y: &[f64], terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (c, v) in terms {
        for (o, x) in out.iter_mut().zip(v.iter()) {
            *o += c * x;
        }
    }
    out
}

/// One Bogacki-Shampine 2(3) attempt over `h`. Returns the new state and the
/// scaled error estimate (`<= 1` means acceptable).
fn bs23_attempt(
    sys: &mut MultibodySystem,
    y0: &[f64],
    h: f64,
    opts: &StepOptions,
    held_noise: Option<&DVector<f64>>,
    extra: Option<&DVector<f64>>,
    stats: &mut EvalStats,
) -> Result<(Vec<f64>, f64)> {
    let n_bodies = y0.len() / 13;
    let k1 = derivative(sys, y0, opts, held_noise, extra, stats)?;
    let y2 = renormalized(combine(y0, &[(0.5 * h, &k1)]), n_bodies);
    let k2 = derivative(sys, &y2, opts, held_noise, extra, stats)?;
    let y3 = renormalized(combine(y0, &[(0.75 * h, &k2)]), n_bodies);
    let k3 = derivative(sys, &y3, opts, held_noise, extra, stats)?;
    let ynew = renormalized(
        combine(
            y0,
            &[
                (2.0 * h / 9.0, &k1),
                (h / 3.0, &k2),
                (4.0 * h / 9.0, &k3),
            ],
        ),
        n_bodies,
    );
    let k4 = derivative(sys, &ynew, opts, held_noise, extra, stats)?;

    let mut scaled_err = 0.0f64;
    for idx in 0..y0.len() {
        let err = h
            * (-5.0 / 72.0 * k1[idx] + 1.0 / 12.0 * k2[idx] + 1.0 / 9.0 * k3[idx]
                - 1.0 / 8.0 * k4[idx]);
        let scale = opts.rk_tol * (1.0 + y0[idx].abs().max(ynew[idx].abs()));
        let e = (err / scale).abs();
        if !e.is_finite() {
            return Ok((ynew, f64::INFINITY));
        }
        scaled_err = scaled_err.max(e);
    }
    Ok((ynew, scaled_err))
}

fn step_over(
    sys: &mut MultibodySystem,
    y0: &[f64],
    h: f64,
    depth: u32,
    opts: &StepOptions,
    held_noise: Option<&DVector<f64>>,
    extra: Option<&DVector<f64>>,
    stats: &mut EvalStats,
    substeps: &mut usize,
    last_err: &mut f64,
) -> Result<Vec<f64>> {
    let (ynew, err) = bs23_attempt(sys, y0, h, opts, held_noise, extra, stats)?;
    let finite = ynew.iter().all(|v| v.is_finite()) && err.is_finite();
    if (err <= 1.0 || opts.fixed_step) && finite {
        *substeps += 1;
        *last_err = err;
        return Ok(ynew);
    }
    if depth >= opts.max_subdivisions {
        return Err(Error::IntegrationAborted {
            step: *substeps,
            time: sys.time(),
            reason: format!(
                "embedded error {err:.3e} above tolerance after {} subdivisions",
                opts.max_subdivisions
            ),
        });
    }
    let half = 0.5 * h;
    let mid = step_over(sys, y0, half, depth + 1, opts, held_noise, extra, stats, substeps, last_err)?;
    step_over(sys, &mid, half, depth + 1, opts, held_noise, extra, stats, substeps, last_err)
}

/// Advance the system from `t` to `t + dt`.
///
/// The Langevin draw (when a bath is configured) is sampled once per call,
/// scaled by `1/sqrt(dt)`, and held constant across stages and error-control
/// sub-steps. `extra_forces` are caller-supplied generalized forces, also
/// held for the whole step.
pub fn dia_step(
    sys: &mut MultibodySystem,
    dt: f64,
    opts: &StepOptions,
    extra_forces: Option<&DVector<f64>>,
) -> Result<StepReport> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "step size must be positive and finite, got {dt}"
        )));
    }
    let dof = sys.dof();
    let noise = sys
        .langevin_rng_mut()
        .map(|(bath, rng)| langevin_force(dof, &bath.clone(), dt, rng));

    let mut y0 = vec![0.0; sys.state_len()];
    sys.pack_state(&mut y0);

    let mut stats = EvalStats {
        renorm_events: 0,
        auglag_inner: 0,
    };
    let mut substeps = 0usize;
    let mut last_err = 0.0f64;
    let result = step_over(
        sys,
        &y0,
        dt,
        0,
        opts,
        noise.as_ref(),
        extra_forces,
        &mut stats,
        &mut substeps,
        &mut last_err,
    );
    let yfinal = match result {
        Ok(y) => y,
        Err(e) => {
            sys.unpack_state(&y0);
            sys.renormalize_orientations();
            return Err(e);
        }
    };

    sys.unpack_state(&yfinal);
    let renorm = sys.renormalize_orientations();
    sys.advance_time(dt);

    let (phi_inf, _) = sys.constraint_violation();
    if phi_inf > opts.violation_ceiling {
        return Err(Error::IntegrationAborted {
            step: substeps,
            time: sys.time(),
            reason: format!(
                "constraint violation {phi_inf:.3e} above ceiling {:.3e}",
                opts.violation_ceiling
            ),
        });
    }

    Ok(StepReport {
        error_estimate: last_err,
        substeps,
        renorm_events: stats.renorm_events + renorm,
        auglag_inner_total: stats.auglag_inner,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multibody::body::RigidBody;
    use crate::multibody::joint::Joint;
    use crate::multibody::system::tests::two_body_revolute;
    use nalgebra::Vector3;

    #[test]
    fn equilibrium_state_stays_put() {
        let mut sys = two_body_revolute();
        let before: Vec<_> = sys.bodies().iter().map(|b| b.position).collect();
        for _ in 0..10 {
            dia_step(&mut sys, 1e-2, &StepOptions::default(), None).unwrap();
        }
        for (b, want) in sys.bodies().iter().zip(before) {
            assert!((b.position - want).norm() < 1e-12);
            assert!(b.velocity.norm() < 1e-12);
        }
        assert!((sys.time() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn ballistic_motion_matches_closed_form() {
        let body = RigidBody::with_diagonal_inertia(1.5, Vector3::new(1.0, 1.0, 1.0)).unwrap();
        let mut sys = MultibodySystem::new(vec![body], vec![]).unwrap();
        sys.gravity = Vector3::new(0.0, 0.0, -2.0);
        let dt = 1e-2;
        for _ in 0..100 {
            dia_step(&mut sys, dt, &StepOptions::default(), None).unwrap();
        }
        let t = sys.time();
        let want = -0.5 * 2.0 * t * t;
        approx::assert_relative_eq!(sys.bodies()[0].position.z, want, max_relative = 1e-9);
    }

    #[test]
    fn propensity_descends_energy_from_rest() {
        use crate::landscape::FnLandscape;
        use std::sync::Arc;

        // E(theta) = theta: gradient 1 everywhere, so the moment must drive
        // theta negative (finite-difference sign oracle for dE/dtheta > 0)
        let mut sys = two_body_revolute();
        sys.set_propensity(Some(Arc::new(FnLandscape::new(
            1,
            |t| t[0],
            |_, out| out.fill(1.0),
        ))))
        .unwrap();
        let e0 = sys.propensity_energy();
        assert_eq!(e0, 0.0);
        for _ in 0..20 {
            dia_step(&mut sys, 1e-2, &StepOptions::default(), None).unwrap();
        }
        let theta = sys.joint_angle(0);
        assert!(theta < -1e-6, "joint angle should slide downhill, got {theta}");
        assert!(sys.propensity_energy() < e0);
    }

    /// A swinging pair: admissible initial velocities that drive relative
    /// joint motion (uniform gravity alone would free-fall the assembly
    /// without stressing the joint).
    fn swinging_pair() -> MultibodySystem {
        let mut sys = two_body_revolute();
        sys.gravity = Vector3::new(0.0, -1.0, 0.0);
        sys.bodies_mut()[1].angular_velocity = Vector3::new(0.0, 0.0, 2.0);
        sys.bodies_mut()[0].angular_velocity = Vector3::new(0.0, 0.0, -1.0);
        sys.bodies_mut()[0].velocity = Vector3::new(0.1, 0.0, 0.0);
        sys.project_velocities_admissible();
        sys
    }

    #[test]
    fn baumgarte_keeps_swinging_constraints_tight() {
        let mut sys = swinging_pair();
        let opts = StepOptions {
            stabilizer: Stabilizer::baumgarte_default(),
            fixed_step: true,
            ..StepOptions::default()
        };
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            dia_step(&mut sys, 5e-3, &opts, None).unwrap();
            worst = worst.max(sys.constraint_violation().0);
        }
        assert!(worst < 1e-5, "max violation {worst}");
    }

    #[test]
    fn unstabilized_drift_grows() {
        let mut sys = swinging_pair();
        let opts = StepOptions {
            fixed_step: true,
            violation_ceiling: 1.0,
            ..StepOptions::default()
        };
        let mut at_10 = 0.0;
        let mut at_1000 = 0.0;
        for step in 1..=1000 {
            dia_step(&mut sys, 5e-3, &opts, None).unwrap();
            if step == 10 {
                at_10 = sys.constraint_violation().0;
            }
            if step == 1000 {
                at_1000 = sys.constraint_violation().0;
            }
        }
        assert!(
            at_1000 > 10.0 * at_10 && at_1000 > 0.0,
            "violation should grow without stabilization: {at_10} -> {at_1000}"
        );
    }

    #[test]
    fn determinism_under_fixed_seed() {
        use crate::multibody::system::LangevinBath;
        let run = || {
            let mut sys = two_body_revolute();
            sys.set_langevin(Some(LangevinBath {
                rho: 0.5,
                beta_thermo: 1.0,
                seed: 4242,
            }));
            let opts = StepOptions {
                stabilizer: Stabilizer::baumgarte_default(),
                ..StepOptions::default()
            };
            for _ in 0..50 {
                dia_step(&mut sys, 1e-3, &opts, None).unwrap();
            }
            let mut y = vec![0.0; sys.state_len()];
            sys.pack_state(&mut y);
            y
        };
        let a = run();
        let b = run();
        assert_eq!(a, b, "identical seeds must give bitwise-identical trajectories");
    }

    #[test]
    fn violation_ceiling_aborts_with_diagnostics() {
        // an inadmissible start: shift the second body off the joint
        let mut sys = two_body_revolute();
        sys.bodies_mut()[1].position += Vector3::new(0.5, 0.5, 0.0);
        let opts = StepOptions {
            violation_ceiling: 1e-3,
            fixed_step: true,
            ..StepOptions::default()
        };
        match dia_step(&mut sys, 1e-3, &opts, None) {
            Err(Error::IntegrationAborted { reason, .. }) => {
                assert!(reason.contains("ceiling"), "reason: {reason}");
            }
            other => panic!("expected abort, got {other:?}"),
        }
    }

    #[test]
    fn free_spin_about_joint_axis_preserves_phidot() {
        let mut sys = two_body_revolute();
        // spin body 1 about the joint axis (its free DOF)
        let anchor = Vector3::new(0.5, 0.0, 0.0);
        let w = Vector3::new(0.0, 0.0, 0.8);
        let b1 = &mut sys.bodies_mut()[1];
        b1.angular_velocity = w;
        b1.velocity = w.cross(&(b1.position - anchor));
        let (phi0, phidot0) = sys.constraint_violation();
        assert!(phi0 < 1e-12 && phidot0 < 1e-12, "free motion must be admissible");
        for _ in 0..200 {
            dia_step(&mut sys, 1e-3, &StepOptions::default(), None).unwrap();
        }
        let (phi, _) = sys.constraint_violation();
        assert!(phi < 1e-6, "drift {phi}");
        // the joint keeps spinning at a steady rate
        assert!((sys.joint_angle(0) - 0.8 * sys.time()).abs() < 1e-3);
    }
}
