//! System assembly, state layout, and joint measurement.

use crate::error::{Error, Result};
use crate::landscape::Landscape;
use crate::multibody::body::RigidBody;
use crate::multibody::constraint::{assemble_constraints, dependent_rows, ConstraintAssembly};
use crate::multibody::euler::EulerParams;
use crate::multibody::joint::Joint;
use nalgebra::{DVector, Vector3};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Langevin bath parameters: friction `rho`, inverse temperature
/// `beta_thermo` (the Baumgarte gain is a different beta), and the RNG seed.
#[derive(Debug, Clone, Copy)]
pub struct LangevinBath {
    pub rho: f64,
    pub beta_thermo: f64,
    pub seed: u64,
}

/// Per-joint reference data derived at assembly: unit axes, a body-fixed
/// perpendicular pair on body i, the reference image of the first
/// perpendicular on body j (for angle measurement), and the reference axial
/// offset of the anchors.
#[derive(Debug, Clone)]
pub(crate) struct JointFrame {
    pub unit_axis_i: Vector3<f64>,
    pub unit_axis_j: Vector3<f64>,
    pub perp_m_i: Vector3<f64>,
    pub perp_n_i: Vector3<f64>,
    pub ref_m_j: Vector3<f64>,
    pub ref_length: f64,
}

/// An open chain of rigid bodies with revolute/cylindrical joints, optional
/// propensity hook over the joint angles, optional Langevin bath, and a
/// uniform constant acceleration field (zero by default).
#[derive(Clone)]
pub struct MultibodySystem {
    bodies: Vec<RigidBody>,
    joints: Vec<Joint>,
    frames: Vec<JointFrame>,
    pub gravity: Vector3<f64>,
    langevin: Option<LangevinBath>,
    langevin_rng: Option<ChaCha8Rng>,
    propensity: Option<Arc<dyn Landscape>>,
    redundant_constraints: bool,
    time: f64,
}

impl MultibodySystem {
    /// Assemble a system, derive the joint frames, and verify that the
    /// constraint Jacobian has full row rank at the initial configuration.
    pub fn new(bodies: Vec<RigidBody>, joints: Vec<Joint>) -> Result<Self> {
        if bodies.is_empty() {
            return Err(Error::Config("system needs at least one body".into()));
        }
        for (idx, joint) in joints.iter().enumerate() {
            joint.validate(idx, bodies.len())?;
        }
        check_open_chain(bodies.len(), &joints)?;

        let frames = joints
            .iter()
            .map(|j| derive_joint_frame(&bodies, j))
            .collect::<Result<Vec<_>>>()?;

        let sys = Self {
            bodies,
            joints,
            frames,
            gravity: Vector3::zeros(),
            langevin: None,
            langevin_rng: None,
            propensity: None,
            redundant_constraints: false,
            time: 0.0,
        };
        sys.check_jacobian_rank()?;
        Ok(sys)
    }

    pub fn bodies(&self) -> &[RigidBody] {
        &self.bodies
    }

    pub fn bodies_mut(&mut self) -> &mut [RigidBody] {
        &mut self.bodies
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub(crate) fn joint_frame(&self, k: usize) -> &JointFrame {
        &self.frames[k]
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub(crate) fn advance_time(&mut self, dt: f64) {
        self.time += dt;
    }

    pub fn dof(&self) -> usize {
        6 * self.bodies.len()
    }

    pub fn redundant_constraints(&self) -> bool {
        self.redundant_constraints
    }

    /// Switch to the redundant cross-product constraint rows (rank-deficient
    /// by construction; pair with the pseudoinverse solver).
    pub fn set_redundant_constraints(&mut self, redundant: bool) {
        self.redundant_constraints = redundant;
    }

    pub fn langevin(&self) -> Option<&LangevinBath> {
        self.langevin.as_ref()
    }

    pub fn set_langevin(&mut self, bath: Option<LangevinBath>) {
        self.langevin_rng = bath.map(|b| ChaCha8Rng::seed_from_u64(b.seed));
        self.langevin = bath;
    }

    pub(crate) fn langevin_rng_mut(&mut self) -> Option<(&LangevinBath, &mut ChaCha8Rng)> {
        match (&self.langevin, &mut self.langevin_rng) {
            (Some(bath), Some(rng)) => Some((bath, rng)),
            _ => None,
        }
    }

    pub fn propensity(&self) -> Option<&Arc<dyn Landscape>> {
        self.propensity.as_ref()
    }

    /// Install a gradient supplier over the joint angles. Its dimension must
    /// equal the joint count.
    pub fn set_propensity(&mut self, landscape: Option<Arc<dyn Landscape>>) -> Result<()> {
        if let Some(l) = &landscape {
            if l.dim() != self.joints.len() {
                return Err(Error::Config(format!(
                    "propensity landscape has dimension {} but the system has {} joints",
                    l.dim(),
                    self.joints.len()
                )));
            }
        }
        self.propensity = landscape;
        Ok(())
    }

    pub fn assemble(&self) -> ConstraintAssembly {
        assemble_constraints(self)
    }

    fn check_jacobian_rank(&self) -> Result<()> {
        if self.joints.is_empty() || self.redundant_constraints {
            return Ok(());
        }
        let asm = self.assemble();
        let svd = asm.jac.clone().svd(false, false);
        let smax = svd.singular_values.iter().fold(0.0f64, |m, &s| m.max(s));
        let smin = svd
            .singular_values
            .iter()
            .fold(f64::INFINITY, |m, &s| m.min(s));
        if smin < 1e-8 * smax {
            let deps = dependent_rows(&asm.jac, 1e-8);
            return Err(Error::RankDeficient(format!(
                "smallest singular value {smin:.3e} vs largest {smax:.3e}; dependent rows {deps:?}"
            )));
        }
        Ok(())
    }

    // ---- state vector (13 per body: r, p, v, w) ----

    pub fn state_len(&self) -> usize {
        13 * self.bodies.len()
    }

    pub fn pack_state(&self, out: &mut [f64]) {
        for (i, b) in self.bodies.iter().enumerate() {
            let o = 13 * i;
            out[o..o + 3].copy_from_slice(b.position.as_slice());
            out[o + 3..o + 7].copy_from_slice(&b.orientation.as_array());
            out[o + 7..o + 10].copy_from_slice(b.velocity.as_slice());
            out[o + 10..o + 13].copy_from_slice(b.angular_velocity.as_slice());
        }
    }

    pub fn unpack_state(&mut self, y: &[f64]) {
        for (i, b) in self.bodies.iter_mut().enumerate() {
            let o = 13 * i;
            b.position = Vector3::from_column_slice(&y[o..o + 3]);
            b.orientation = EulerParams::from_array([y[o + 3], y[o + 4], y[o + 5], y[o + 6]]);
            b.velocity = Vector3::from_column_slice(&y[o + 7..o + 10]);
            b.angular_velocity = Vector3::from_column_slice(&y[o + 10..o + 13]);
        }
    }

    /// Renormalize every orientation; returns how many drifted beyond 1e-9.
    pub fn renormalize_orientations(&mut self) -> usize {
        let mut events = 0;
        for b in self.bodies.iter_mut() {
            if (b.orientation.norm() - 1.0).abs() > 1e-9 {
                events += 1;
            }
            b.orientation = b.orientation.normalized();
        }
        events
    }

    pub fn velocities(&self) -> DVector<f64> {
        let mut qdot = DVector::zeros(self.dof());
        for (i, b) in self.bodies.iter().enumerate() {
            qdot.rows_mut(6 * i, 3).copy_from(&b.velocity);
            qdot.rows_mut(6 * i + 3, 3).copy_from(&b.angular_velocity);
        }
        qdot
    }

    pub fn set_velocities(&mut self, qdot: &DVector<f64>) {
        for (i, b) in self.bodies.iter_mut().enumerate() {
            b.velocity = qdot.fixed_rows::<3>(6 * i).into();
            b.angular_velocity = qdot.fixed_rows::<3>(6 * i + 3).into();
        }
    }

    pub fn zero_velocities(&mut self) {
        for b in self.bodies.iter_mut() {
            b.velocity = Vector3::zeros();
            b.angular_velocity = Vector3::zeros();
        }
    }

    /// Project the velocities onto the constraint tangent space
    /// (`Phi_q qdot = 0`) in the least-squares sense.
    pub fn project_velocities_admissible(&mut self) {
        let asm = self.assemble();
        if asm.rows() == 0 {
            return;
        }
        let qdot = self.velocities();
        let violation = &asm.jac * &qdot;
        let pinv = asm
            .jac
            .clone()
            .svd(true, true)
            .pseudo_inverse(1e-12)
            .expect("svd pseudo-inverse");
        let corrected = qdot - pinv * violation;
        self.set_velocities(&corrected);
    }

    // ---- joint measurement ----

    /// Current world-frame unit axis of joint `k` (from body i's side).
    pub fn joint_axis_world(&self, k: usize) -> Vector3<f64> {
        let joint = &self.joints[k];
        self.bodies[joint.body_i].direction_to_world(&self.frames[k].unit_axis_i)
    }

    /// Signed rotation angle of joint `k` about its axis, zero at the
    /// assembly reference.
    pub fn joint_angle(&self, k: usize) -> f64 {
        let joint = &self.joints[k];
        let frame = &self.frames[k];
        let m_i = self.bodies[joint.body_i].direction_to_world(&frame.perp_m_i);
        let m_j = self.bodies[joint.body_j].direction_to_world(&frame.ref_m_j);
        let axis = self.joint_axis_world(k);
        (m_i.cross(&m_j).dot(&axis)).atan2(m_i.dot(&m_j))
    }

    pub fn joint_angles(&self) -> Vec<f64> {
        (0..self.joints.len()).map(|k| self.joint_angle(k)).collect()
    }

    /// Signed axial offset between the joint anchors along the axis.
    pub fn joint_length(&self, k: usize) -> f64 {
        let joint = &self.joints[k];
        let pi = self.bodies[joint.body_i].point_to_world(&joint.anchor_i);
        let pj = self.bodies[joint.body_j].point_to_world(&joint.anchor_j);
        (pj - pi).dot(&self.joint_axis_world(k))
    }

    pub fn joint_lengths(&self) -> Vec<f64> {
        (0..self.joints.len()).map(|k| self.joint_length(k)).collect()
    }

    pub(crate) fn joint_ref_length(&self, k: usize) -> f64 {
        self.frames[k].ref_length
    }

    // ---- energies ----

    pub fn kinetic_energy(&self) -> f64 {
        self.bodies
            .iter()
            .map(|b| {
                0.5 * b.mass() * b.velocity.norm_squared()
                    + 0.5 * b.angular_velocity.dot(&(b.inertia_global() * b.angular_velocity))
            })
            .sum()
    }

    pub fn spring_energy(&self) -> f64 {
        self.joints
            .iter()
            .enumerate()
            .filter_map(|(k, j)| j.spring.map(|s| (k, j, s)))
            .map(|(k, j, s)| {
                let pi = self.bodies[j.body_i].point_to_world(&j.anchor_i);
                let pj = self.bodies[j.body_j].point_to_world(&j.anchor_j);
                let l = (pj - pi).norm();
                let _ = k;
                0.5 * s.stiffness * (l - s.rest_length).powi(2)
            })
            .sum()
    }

    pub fn propensity_energy(&self) -> f64 {
        match &self.propensity {
            Some(l) => l.energy(&self.joint_angles()),
            None => 0.0,
        }
    }

    /// Max absolute position- and velocity-constraint violations.
    pub fn constraint_violation(&self) -> (f64, f64) {
        let asm = self.assemble();
        if asm.rows() == 0 {
            return (0.0, 0.0);
        }
        let phidot = asm.phidot(&self.velocities());
        (
            asm.phi_inf(),
            phidot.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        )
    }
}

fn check_open_chain(body_count: usize, joints: &[Joint]) -> Result<()> {
    let mut degree = vec![0usize; body_count];
    let mut parent: Vec<usize> = (0..body_count).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (idx, j) in joints.iter().enumerate() {
        degree[j.body_i] += 1;
        degree[j.body_j] += 1;
        if degree[j.body_i] > 2 || degree[j.body_j] > 2 {
            return Err(Error::Config(format!(
                "joint {idx}: a body participates in more than two joints; only open chains are supported"
            )));
        }
        let (ri, rj) = (find(&mut parent, j.body_i), find(&mut parent, j.body_j));
        if ri == rj {
            return Err(Error::Config(format!(
                "joint {idx} closes a kinematic loop; only open chains are supported"
            )));
        }
        parent[ri] = rj;
    }
    Ok(())
}

fn derive_joint_frame(bodies: &[RigidBody], joint: &Joint) -> Result<JointFrame> {
    let unit_axis_i = joint.axis_i.normalize();
    let unit_axis_j = joint.axis_j.normalize();

    // body-fixed perpendicular pair on body i
    let pick = if unit_axis_i.x.abs() <= unit_axis_i.y.abs()
        && unit_axis_i.x.abs() <= unit_axis_i.z.abs()
    {
        Vector3::x()
    } else if unit_axis_i.y.abs() <= unit_axis_i.z.abs() {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let perp_m_i = unit_axis_i.cross(&pick).normalize();
    let perp_n_i = unit_axis_i.cross(&perp_m_i);

    let body_i = &bodies[joint.body_i];
    let body_j = &bodies[joint.body_j];
    let m_world = body_i.direction_to_world(&perp_m_i);
    let ref_m_j = body_j.rotation().transpose() * m_world;

    let axis_world = body_i.direction_to_world(&unit_axis_i);
    let d0 = body_j.point_to_world(&joint.anchor_j) - body_i.point_to_world(&joint.anchor_i);
    let ref_length = d0.dot(&axis_world);

    Ok(JointFrame {
        unit_axis_i,
        unit_axis_j,
        perp_m_i,
        perp_n_i,
        ref_m_j,
        ref_length,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::multibody::joint::JointSpring;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_3;

    fn unit_body(at: Vector3<f64>) -> RigidBody {
        let mut b = RigidBody::with_diagonal_inertia(1.0, Vector3::new(1.0, 1.0, 1.0)).unwrap();
        b.position = at;
        b
    }

    /// Two bodies sharing a z-axis revolute joint at the origin of body 0.
    pub(crate) fn two_body_revolute() -> MultibodySystem {
        let b0 = unit_body(Vector3::zeros());
        let b1 = unit_body(Vector3::new(1.0, 0.0, 0.0));
        let joint = Joint::revolute(
            0,
            1,
            Vector3::z(),
            Vector3::z(),
            Vector3::new(0.5, 0.0, 0.0),
            Vector3::new(-0.5, 0.0, 0.0),
        );
        MultibodySystem::new(vec![b0, b1], vec![joint]).unwrap()
    }

    #[test]
    fn admissible_assembly_has_zero_phi() {
        let sys = two_body_revolute();
        let asm = sys.assemble();
        assert_eq!(asm.rows(), 5);
        assert!(asm.phi_inf() < 1e-14, "phi = {:?}", asm.phi);
    }

    #[test]
    fn rotation_about_joint_axis_keeps_phi_zero_and_measures_angle() {
        let mut sys = two_body_revolute();
        let angle = FRAC_PI_3;
        // rotate body 1 about the joint axis (z through the shared anchor)
        let anchor = Vector3::new(0.5, 0.0, 0.0);
        let rot = EulerParams::from_axis_angle(&Vector3::z(), angle);
        let a = rot.rotation_matrix();
        let b1 = &mut sys.bodies_mut()[1];
        b1.position = anchor + a * (b1.position - anchor);
        b1.orientation = rot.mul(&b1.orientation);

        let asm = sys.assemble();
        assert!(asm.phi_inf() < 1e-12, "phi = {:?}", asm.phi);
        assert_relative_eq!(sys.joint_angle(0), angle, epsilon = 1e-12);
    }

    #[test]
    fn off_axis_rotation_breaks_parallelism_like_sine() {
        let mut sys = two_body_revolute();
        let theta = 0.05f64;
        let rot = EulerParams::from_axis_angle(&Vector3::x(), theta);
        sys.bodies_mut()[1].orientation = rot;
        let asm = sys.assemble();
        // parallelism rows are the first two; their norm is |sin theta| for a
        // rotation perpendicular to the axis
        let p = (asm.phi[0].powi(2) + asm.phi[1].powi(2)).sqrt();
        assert_relative_eq!(p, theta.sin().abs(), epsilon = 1e-12);
    }

    #[test]
    fn cylindrical_translation_along_axis_is_free() {
        let b0 = unit_body(Vector3::zeros());
        let b1 = unit_body(Vector3::new(0.0, 0.0, 1.0));
        let joint = Joint::cylindrical(
            0,
            1,
            Vector3::z(),
            Vector3::z(),
            Vector3::zeros(),
            Vector3::zeros(),
            Some(JointSpring {
                stiffness: 10.0,
                rest_length: 1.0,
            }),
        );
        let mut sys = MultibodySystem::new(vec![b0, b1], vec![joint]).unwrap();
        let asm = sys.assemble();
        assert_eq!(asm.rows(), 4);
        assert!(asm.phi_inf() < 1e-14);
        assert_relative_eq!(sys.joint_length(0), 1.0, epsilon = 1e-15);

        sys.bodies_mut()[1].position.z += 0.37;
        let asm = sys.assemble();
        assert!(asm.phi_inf() < 1e-14, "translation along the axis must stay admissible");
        assert_relative_eq!(sys.joint_length(0), 1.37, epsilon = 1e-15);
    }

    #[test]
    fn loops_and_overloaded_bodies_are_rejected() {
        let b = || unit_body(Vector3::zeros());
        let j = |i: usize, jj: usize| {
            Joint::revolute(i, jj, Vector3::z(), Vector3::z(), Vector3::zeros(), Vector3::zeros())
        };
        // loop: 0-1, 1-2, 2-0
        let err = MultibodySystem::new(vec![b(), b(), b()], vec![j(0, 1), j(1, 2), j(2, 0)]);
        assert!(err.is_err());
        // degree 3 on body 0
        let err = MultibodySystem::new(
            vec![b(), b(), b(), b()],
            vec![j(0, 1), j(0, 2), j(0, 3)],
        );
        assert!(err.is_err());
    }

    #[test]
    fn state_round_trip() {
        let mut sys = two_body_revolute();
        sys.bodies_mut()[0].velocity = Vector3::new(0.1, 0.2, 0.3);
        sys.bodies_mut()[1].angular_velocity = Vector3::new(-0.4, 0.0, 1.0);
        let mut y = vec![0.0; sys.state_len()];
        sys.pack_state(&mut y);
        let snapshot = y.clone();
        sys.bodies_mut()[0].velocity = Vector3::zeros();
        sys.unpack_state(&snapshot);
        assert_eq!(sys.bodies()[0].velocity, Vector3::new(0.1, 0.2, 0.3));
    }

    #[test]
    fn velocity_projection_enforces_phidot_zero() {
        let mut sys = two_body_revolute();
        sys.bodies_mut()[0].velocity = Vector3::new(0.3, -0.2, 0.5);
        sys.bodies_mut()[1].velocity = Vector3::new(-1.0, 0.4, 0.1);
        sys.bodies_mut()[1].angular_velocity = Vector3::new(0.2, 0.8, -0.3);
        sys.project_velocities_admissible();
        let (_, phidot_inf) = sys.constraint_violation();
        assert!(phidot_inf < 1e-10, "phidot_inf = {phidot_inf}");
    }
}
