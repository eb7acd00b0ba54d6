//! Euler-parameter (unit quaternion) orientation algebra.

use nalgebra::{Matrix3, Vector3};

/// Orientation as Euler parameters `(e0, e1, e2, e3)`, `e0` the scalar part.
/// Unit norm maps body-frame vectors to the global frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerParams {
    pub e0: f64,
    pub e: Vector3<f64>,
}

impl EulerParams {
    pub fn identity() -> Self {
        Self {
            e0: 1.0,
            e: Vector3::zeros(),
        }
    }

    pub fn new(e0: f64, e1: f64, e2: f64, e3: f64) -> Self {
        Self {
            e0,
            e: Vector3::new(e1, e2, e3),
        }
    }

    /// Rotation of `angle` radians about `axis` (normalized internally).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let u = axis.normalize();
        let half = 0.5 * angle;
        Self {
            e0: half.cos(),
            e: u * half.sin(),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.e0 * self.e0 + self.e.norm_squared()).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self {
            e0: self.e0 / n,
            e: self.e / n,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.e0, self.e.x, self.e.y, self.e.z]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    /// Hamilton product `self * other` (compose rotations: apply `other`
    /// first, then `self`).
    pub fn mul(&self, other: &EulerParams) -> Self {
        Self {
            e0: self.e0 * other.e0 - self.e.dot(&other.e),
            e: self.e0 * other.e + other.e0 * self.e + self.e.cross(&other.e),
        }
    }

    /// Time derivative of the Euler parameters for a global-frame angular
    /// velocity `w`: `pdot = 1/2 (0, w) * p`.
    pub fn derivative(&self, w: &Vector3<f64>) -> [f64; 4] {
        let e0dot = -0.5 * w.dot(&self.e);
        let edot = 0.5 * (self.e0 * w + w.cross(&self.e));
        [e0dot, edot.x, edot.y, edot.z]
    }

    /// The 3x3 rotation matrix `A(p)`; orthogonal with determinant +1 for a
    /// unit `p`. Components more than 1e-9 off the unit norm are normalized
    /// before use.
    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        let p = if (self.norm() - 1.0).abs() > 1e-9 {
            self.normalized()
        } else {
            *self
        };
        let (e0, e1, e2, e3) = (p.e0, p.e.x, p.e.y, p.e.z);
        Matrix3::new(
            e0 * e0 + e1 * e1 - e2 * e2 - e3 * e3,
            2.0 * (e1 * e2 - e0 * e3),
            2.0 * (e1 * e3 + e0 * e2),
            2.0 * (e1 * e2 + e0 * e3),
            e0 * e0 - e1 * e1 + e2 * e2 - e3 * e3,
            2.0 * (e2 * e3 - e0 * e1),
            2.0 * (e1 * e3 - e0 * e2),
            2.0 * (e2 * e3 + e0 * e1),
            e0 * e0 - e1 * e1 - e2 * e2 + e3 * e3,
        )
    }
}

/// Skew-symmetric cross-product matrix `a~` with `a~ b = a x b`.
pub fn skew(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}
