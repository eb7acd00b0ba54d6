//! Generalized force generators: propensity moments, gyroscopic terms,
//! joint springs, Langevin noise, gravity, friction.
//!
//! Generalized forces are laid out like the velocities: per body a linear
//! force slot (3) followed by a moment slot (3).

use crate::error::{Error, Result};
use crate::multibody::system::{LangevinBath, MultibodySystem};
use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

/// Apply a generalized torque `tau_k` on every joint coordinate: the moment
/// `+tau l` goes to body j and `-tau l` to body i, so the power is
/// `tau * thetadot` for the relative joint rate.
pub fn joint_moments(sys: &MultibodySystem, tau: &[f64]) -> DVector<f64> {
    let mut g = DVector::zeros(sys.dof());
    for (k, joint) in sys.joints().iter().enumerate() {
        let axis = sys.joint_axis_world(k);
        let m = axis * tau[k];
        for c in 0..3 {
            g[6 * joint.body_i + 3 + c] -= m[c];
            g[6 * joint.body_j + 3 + c] += m[c];
        }
    }
    g
}

/// Gyroscopic moment `-w x (J_g w)` per body.
pub fn gyroscopic_forces(sys: &MultibodySystem) -> DVector<f64> {
    let mut g = DVector::zeros(sys.dof());
    for (i, b) in sys.bodies().iter().enumerate() {
        let n = -b.angular_velocity.cross(&(b.inertia_global() * b.angular_velocity));
        for c in 0..3 {
            g[6 * i + 3 + c] = n[c];
        }
    }
    g
}

/// Propensity force vector `g^(p)`: equal-and-opposite pure moments about
/// each joint axis scaled by the per-joint energy gradient, plus the
/// gyroscopic term. The sign drives the joint angles downhill: a positive
/// `grad[k] = dE/dtheta_k` torques joint `k` toward smaller energy.
pub fn propensity_moments(sys: &MultibodySystem, grad: &[f64]) -> Result<DVector<f64>> {
    if grad.len() != sys.joints().len() {
        return Err(Error::InvalidArgument(format!(
            "gradient has {} entries for {} joints",
            grad.len(),
            sys.joints().len()
        )));
    }
    let descent: Vec<f64> = grad.iter().map(|&v| -v).collect();
    Ok(joint_moments(sys, &descent) + gyroscopic_forces(sys))
}

/// Axial spring forces of the cylindrical joints: magnitude `k (l - l0)`
/// along the anchor separation, applied at the anchors with their moment-arm
/// torques. Equal and opposite by construction.
pub fn joint_spring_forces(sys: &MultibodySystem) -> Result<DVector<f64>> {
    let mut g = DVector::zeros(sys.dof());
    for (k, joint) in sys.joints().iter().enumerate() {
        let Some(spring) = joint.spring else { continue };
        let body_i = &sys.bodies()[joint.body_i];
        let body_j = &sys.bodies()[joint.body_j];
        let s_i = body_i.rotation() * joint.anchor_i;
        let s_j = body_j.rotation() * joint.anchor_j;
        let p_b = body_i.position + s_i;
        let p_a = body_j.position + s_j;
        let sep = p_a - p_b;
        let l = sep.norm();
        if l < 1e-12 {
            return Err(Error::DegenerateGeometry(format!(
                "joint {k}: spring anchors coincide, force direction undefined"
            )));
        }
        let dir = sep / l;
        let f_on_i = dir * (spring.stiffness * (l - spring.rest_length));
        let f_on_j = -f_on_i;
        let n_i = s_i.cross(&f_on_i);
        let n_j = s_j.cross(&f_on_j);
        for c in 0..3 {
            g[6 * joint.body_i + c] += f_on_i[c];
            g[6 * joint.body_i + 3 + c] += n_i[c];
            g[6 * joint.body_j + c] += f_on_j[c];
            g[6 * joint.body_j + 3 + c] += n_j[c];
        }
    }
    Ok(g)
}

/// White-noise force for one step of size `dt`: independent per-DOF Gaussian
/// draws scaled by `sqrt(2 rho / (beta dt))`. Deterministic under a fixed
/// RNG state.
pub fn langevin_force(
    dof: usize,
    bath: &LangevinBath,
    dt: f64,
    rng: &mut impl Rng,
) -> DVector<f64> {
    if bath.rho == 0.0 {
        return DVector::zeros(dof);
    }
    let scale = (2.0 * bath.rho / (bath.beta_thermo * dt)).sqrt();
    DVector::from_iterator(dof, (0..dof).map(|_| {
        let z: f64 = rng.sample(StandardNormal);
        scale * z
    }))
}

/// Uniform constant acceleration field (`m g` on every body's linear slot).
pub fn gravity_forces(sys: &MultibodySystem) -> DVector<f64> {
    let mut g = DVector::zeros(sys.dof());
    for (i, b) in sys.bodies().iter().enumerate() {
        for c in 0..3 {
            g[6 * i + c] = b.mass() * sys.gravity[c];
        }
    }
    g
}

/// Everything applied at the current state: gravity, propensity moments (or
/// the bare gyroscopic term when no hook is installed), joint springs,
/// optional held noise, friction `-rho qdot`, and optional caller-supplied
/// generalized forces.
pub(crate) fn assemble_applied_forces(
    sys: &MultibodySystem,
    held_noise: Option<&DVector<f64>>,
    extra: Option<&DVector<f64>>,
) -> Result<DVector<f64>> {
    let mut g = gravity_forces(sys);
    match sys.propensity() {
        Some(hook) => {
            let angles = sys.joint_angles();
            let grad = hook.gradient(&angles);
            g += propensity_moments(sys, &grad)?;
        }
        None => {
            g += gyroscopic_forces(sys);
        }
    }
    g += joint_spring_forces(sys)?;
    if let Some(w) = held_noise {
        g += w;
    }
    if let Some(bath) = sys.langevin() {
        if bath.rho != 0.0 {
            g -= sys.velocities() * bath.rho;
        }
    }
    if let Some(e) = extra {
        g += e;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multibody::body::RigidBody;
    use crate::multibody::joint::{Joint, JointSpring};
    use nalgebra::Vector3;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spring_pair(stretch: f64) -> MultibodySystem {
        let mut b0 = RigidBody::with_diagonal_inertia(1.0, Vector3::new(1.0, 1.0, 1.0)).unwrap();
        b0.position = Vector3::zeros();
        let mut b1 = b0.clone();
        b1.position = Vector3::new(0.0, 0.0, 1.49 + stretch);
        let joint = Joint::cylindrical(
            0,
            1,
            Vector3::z(),
            Vector3::z(),
            Vector3::zeros(),
            Vector3::zeros(),
            Some(JointSpring {
                stiffness: 370.0,
                rest_length: 1.49,
            }),
        );
        MultibodySystem::new(vec![b0, b1], vec![joint]).unwrap()
    }

    #[test]
    fn spring_at_rest_length_is_silent() {
        let sys = spring_pair(0.0);
        let g = joint_spring_forces(&sys).unwrap();
        assert!(g.amax() < 1e-12);
    }

    #[test]
    fn stiffness_table_magnitude() {
        // k = 370, l - l0 = 0.01 -> |f| = 3.7 on each body
        let sys = spring_pair(0.01);
        let g = joint_spring_forces(&sys).unwrap();
        let f0 = Vector3::new(g[0], g[1], g[2]);
        let f1 = Vector3::new(g[6], g[7], g[8]);
        approx::assert_relative_eq!(f0.norm(), 3.7, max_relative = 1e-10);
        approx::assert_relative_eq!((f0 + f1).norm(), 0.0, epsilon = 1e-12);
        // stretched spring pulls body 0 up toward body 1
        assert!(f0.z > 0.0);
    }

    #[test]
    fn spring_net_force_and_moment_vanish() {
        // give the pair an arbitrary misalignment (not admissible; the force
        // generator does not care) and check Newton's third law plus zero
        // net moment about the world origin
        let mut sys = spring_pair(0.2);
        sys.bodies_mut()[1].position += Vector3::new(0.3, -0.1, 0.0);
        let g = joint_spring_forces(&sys).unwrap();
        let f0 = Vector3::new(g[0], g[1], g[2]);
        let n0 = Vector3::new(g[3], g[4], g[5]);
        let f1 = Vector3::new(g[6], g[7], g[8]);
        let n1 = Vector3::new(g[9], g[10], g[11]);
        assert!((f0 + f1).norm() < 1e-12);
        // total moment about origin: n_i + r_i x f_i sums to zero
        let total = n0
            + sys.bodies()[0].position.cross(&f0)
            + n1
            + sys.bodies()[1].position.cross(&f1);
        assert!(total.norm() < 1e-12, "net moment {total:?}");
    }

    #[test]
    fn coincident_anchors_error_names_joint() {
        let mut sys = spring_pair(0.0);
        sys.bodies_mut()[1].position = Vector3::zeros();
        let err = joint_spring_forces(&sys).unwrap_err();
        assert!(err.to_string().contains("joint 0"), "got {err}");
    }

    #[test]
    fn propensity_moments_are_equal_and_opposite() {
        let sys = super::super::system::tests::two_body_revolute();
        let g = propensity_moments(&sys, &[1.0]).unwrap();
        let n0 = Vector3::new(g[3], g[4], g[5]);
        let n1 = Vector3::new(g[9], g[10], g[11]);
        assert!((n0 + n1).norm() < 1e-14);
        assert!(n0.cross(&Vector3::z()).norm() < 1e-14, "moment about the joint axis");
        // bodies at rest: no gyroscopic part, no linear force
        assert_eq!(g[0], 0.0);
        assert_eq!(g[6], 0.0);
    }

    #[test]
    fn zero_gradient_zero_velocity_gives_zero_propensity() {
        let sys = super::super::system::tests::two_body_revolute();
        let g = propensity_moments(&sys, &[0.0]).unwrap();
        assert!(g.amax() == 0.0);
    }

    #[test]
    fn langevin_is_deterministic_and_scales() {
        let bath = LangevinBath {
            rho: 2.0,
            beta_thermo: 0.5,
            seed: 99,
        };
        let mut rng1 = ChaCha8Rng::seed_from_u64(bath.seed);
        let mut rng2 = ChaCha8Rng::seed_from_u64(bath.seed);
        let a = langevin_force(12, &bath, 1e-3, &mut rng1);
        let b = langevin_force(12, &bath, 1e-3, &mut rng2);
        assert_eq!(a, b);

        let none = LangevinBath {
            rho: 0.0,
            ..bath
        };
        let w = langevin_force(12, &none, 1e-3, &mut rng1);
        assert!(w.amax() == 0.0);
    }

    #[test]
    fn langevin_variance_matches_fluctuation_dissipation() {
        let bath = LangevinBath {
            rho: 1.5,
            beta_thermo: 2.0,
            seed: 1234,
        };
        let dt = 1e-2;
        let mut rng = ChaCha8Rng::seed_from_u64(bath.seed);
        let n = 100_000;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let w = langevin_force(1, &bath, dt, &mut rng);
            sum_sq += w[0] * w[0];
        }
        let var = sum_sq / n as f64;
        let want = 2.0 * bath.rho / (bath.beta_thermo * dt);
        assert!(
            (var - want).abs() / want < 0.02,
            "variance {var} vs expected {want}"
        );
    }
}
