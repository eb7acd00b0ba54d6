//! Rigid bodies.

use crate::error::{Error, Result};
use crate::multibody::euler::EulerParams;
use nalgebra::{Matrix3, Vector3};
use std::collections::BTreeMap;

/// A rigid body: global position, Euler-parameter orientation, velocities,
/// mass properties, and named points fixed in the body frame.
#[derive(Debug, Clone)]
pub struct RigidBody {
    pub position: Vector3<f64>,
    pub orientation: EulerParams,
    pub velocity: Vector3<f64>,
    /// Angular velocity in the global frame.
    pub angular_velocity: Vector3<f64>,
    mass: f64,
    /// Body-frame rotational inertia, symmetric positive definite.
    inertia: Matrix3<f64>,
    attached_points: BTreeMap<String, Vector3<f64>>,
}

impl RigidBody {
    pub fn new(mass: f64, inertia: Matrix3<f64>) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "body mass must be positive, got {mass}"
            )));
        }
        if (inertia - inertia.transpose()).norm() > 1e-9 * inertia.norm().max(1.0) {
            return Err(Error::InvalidArgument(
                "inertia matrix must be symmetric".into(),
            ));
        }
        let eigen = inertia.symmetric_eigen();
        if eigen.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(Error::InvalidArgument(
                "inertia matrix must be positive definite".into(),
            ));
        }
        Ok(Self {
            position: Vector3::zeros(),
            orientation: EulerParams::identity(),
            velocity: Vector3::zeros(),
            angular_velocity: Vector3::zeros(),
            mass,
            inertia,
            attached_points: BTreeMap::new(),
        })
    }

    pub fn with_diagonal_inertia(mass: f64, diag: Vector3<f64>) -> Result<Self> {
        Self::new(mass, Matrix3::from_diagonal(&diag))
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn inertia_body(&self) -> &Matrix3<f64> {
        &self.inertia
    }

    /// Inertia expressed in the global frame, `A J A^T`.
    pub fn inertia_global(&self) -> Matrix3<f64> {
        let a = self.orientation.rotation_matrix();
        a * self.inertia * a.transpose()
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.orientation.rotation_matrix()
    }

    /// Global coordinates of a body-frame vector (direction, no offset).
    pub fn direction_to_world(&self, local: &Vector3<f64>) -> Vector3<f64> {
        self.rotation() * local
    }

    /// Global coordinates of a body-frame point.
    pub fn point_to_world(&self, local: &Vector3<f64>) -> Vector3<f64> {
        self.position + self.rotation() * local
    }

    pub fn attach_point(&mut self, name: impl Into<String>, local: Vector3<f64>) {
        self.attached_points.insert(name.into(), local);
    }

    pub fn attached_point_local(&self, name: &str) -> Option<&Vector3<f64>> {
        self.attached_points.get(name)
    }

    pub fn attached_point_world(&self, name: &str) -> Option<Vector3<f64>> {
        self.attached_points
            .get(name)
            .map(|local| self.point_to_world(local))
    }

    pub fn attached_points(&self) -> &BTreeMap<String, Vector3<f64>> {
        &self.attached_points
    }
}
