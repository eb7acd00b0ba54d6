//! Joint-parameter vectors and dihedral geometry.

use crate::error::{Error, Result};
use crate::multibody::JointKind;
use nalgebra::Vector3;

/// Joint parameters of a chain. Revolute chains carry one angle per joint
/// (phi, psi alternating); cylindrical chains interleave a length and an
/// angle per joint: `(d_1, theta_1, d_2, theta_2, ...)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conformation {
    values: Vec<f64>,
    joint_kind: JointKind,
}

impl Conformation {
    pub fn revolute(angles: Vec<f64>) -> Self {
        Self {
            values: angles,
            joint_kind: JointKind::Revolute,
        }
    }

    pub fn cylindrical(interleaved: Vec<f64>) -> Result<Self> {
        if interleaved.len() % 2 != 0 {
            return Err(Error::InvalidArgument(
                "cylindrical conformation needs (length, angle) pairs".into(),
            ));
        }
        Ok(Self {
            values: interleaved,
            joint_kind: JointKind::Cylindrical,
        })
    }

    pub fn joint_kind(&self) -> JointKind {
        self.joint_kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn joint_count(&self) -> usize {
        match self.joint_kind {
            JointKind::Revolute => self.values.len(),
            JointKind::Cylindrical => self.values.len() / 2,
        }
    }

    pub fn angle(&self, joint: usize) -> f64 {
        match self.joint_kind {
            JointKind::Revolute => self.values[joint],
            JointKind::Cylindrical => self.values[2 * joint + 1],
        }
    }

    pub fn length(&self, joint: usize) -> Option<f64> {
        match self.joint_kind {
            JointKind::Revolute => None,
            JointKind::Cylindrical => Some(self.values[2 * joint]),
        }
    }

    /// Just the angles, in joint order (the band-coupling coordinates).
    pub fn angles(&self) -> Vec<f64> {
        (0..self.joint_count()).map(|k| self.angle(k)).collect()
    }

    /// Build from separate angle and optional length vectors.
    pub fn from_parts(kind: JointKind, angles: &[f64], lengths: Option<&[f64]>) -> Result<Self> {
        match kind {
            JointKind::Revolute => Ok(Self::revolute(angles.to_vec())),
            JointKind::Cylindrical => {
                let lengths = lengths.ok_or_else(|| {
                    Error::InvalidArgument("cylindrical conformation needs lengths".into())
                })?;
                if lengths.len() != angles.len() {
                    return Err(Error::InvalidArgument(
                        "length and angle vectors must match".into(),
                    ));
                }
                let mut v = Vec::with_capacity(2 * angles.len());
                for (l, a) in lengths.iter().zip(angles) {
                    v.push(*l);
                    v.push(*a);
                }
                Self::cylindrical(v)
            }
        }
    }
}

/// Signed four-point dihedral: the angle between the plane of (p1, p2, p3)
/// and the plane of (p2, p3, p4), measured about the p2->p3 axis, sign by
/// the scalar triple product (`atan2((n1 x n2) . b2_hat, n1 . n2)`).
///
/// A planar trans zigzag measures pi; a cis arrangement measures 0.
pub fn four_point_dihedral(
    p1: &Vector3<f64>,
    p2: &Vector3<f64>,
    p3: &Vector3<f64>,
    p4: &Vector3<f64>,
) -> Result<f64> {
    let b1 = p2 - p1;
    let b2 = p3 - p2;
    let b3 = p4 - p3;
    let n1 = b1.cross(&b2);
    let n2 = b2.cross(&b3);
    let scale = b1.norm() * b2.norm() * b3.norm();
    if scale == 0.0 || n1.norm() < 1e-10 * scale || n2.norm() < 1e-10 * scale {
        return Err(Error::DegenerateGeometry(
            "collinear points leave the dihedral angle undefined".into(),
        ));
    }
    let b2n = b2.normalize();
    Ok(n1.cross(&n2).dot(&b2n).atan2(n1.dot(&n2)))
}
