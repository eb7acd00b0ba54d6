//! Kinematic joints.

use crate::error::{Error, Result};
use nalgebra::Vector3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointKind {
    /// One relative rotation about the shared axis.
    Revolute,
    /// Rotation about plus translation along the shared axis.
    Cylindrical,
}

impl JointKind {
    /// Independent scalar constraints contributed in the non-redundant
    /// formulation: 5 for revolute, 4 for cylindrical.
    pub fn constraint_rows(&self) -> usize {
        match self {
            JointKind::Revolute => 5,
            JointKind::Cylindrical => 4,
        }
    }

    /// Rows in the redundant cross-product formulation (6 for both kinds).
    pub fn redundant_rows(&self) -> usize {
        6
    }
}

/// Axial spring of a cylindrical joint: `f = k (l - l0)` between the two
/// anchor points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointSpring {
    pub stiffness: f64,
    pub rest_length: f64,
}

/// A joint between `body_i` and `body_j`. Axis vectors and anchor points are
/// body-frame coordinates; axes are normalized at assembly.
#[derive(Debug, Clone)]
pub struct Joint {
    pub kind: JointKind,
    pub body_i: usize,
    pub body_j: usize,
    pub axis_i: Vector3<f64>,
    pub axis_j: Vector3<f64>,
    pub anchor_i: Vector3<f64>,
    pub anchor_j: Vector3<f64>,
    pub spring: Option<JointSpring>,
}

impl Joint {
    pub fn revolute(
        body_i: usize,
        body_j: usize,
        axis_i: Vector3<f64>,
        axis_j: Vector3<f64>,
        anchor_i: Vector3<f64>,
        anchor_j: Vector3<f64>,
    ) -> Self {
        Self {
            kind: JointKind::Revolute,
            body_i,
            body_j,
            axis_i,
            axis_j,
            anchor_i,
            anchor_j,
            spring: None,
        }
    }

    pub fn cylindrical(
        body_i: usize,
        body_j: usize,
        axis_i: Vector3<f64>,
        axis_j: Vector3<f64>,
        anchor_i: Vector3<f64>,
        anchor_j: Vector3<f64>,
        spring: Option<JointSpring>,
    ) -> Self {
        Self {
            kind: JointKind::Cylindrical,
            body_i,
            body_j,
            axis_i,
            axis_j,
            anchor_i,
            anchor_j,
            spring,
        }
    }

    pub fn validate(&self, index: usize, body_count: usize) -> Result<()> {
        if self.body_i >= body_count || self.body_j >= body_count {
            return Err(Error::Config(format!(
                "joint {index} references body {} or {} outside 0..{body_count}",
                self.body_i, self.body_j
            )));
        }
        if self.body_i == self.body_j {
            return Err(Error::Config(format!(
                "joint {index} connects body {} to itself",
                self.body_i
            )));
        }
        if self.axis_i.norm() == 0.0 || self.axis_j.norm() == 0.0 {
            return Err(Error::Config(format!("joint {index} has a zero axis vector")));
        }
        if self.spring.is_some() && self.kind != JointKind::Cylindrical {
            return Err(Error::Config(format!(
                "joint {index} carries a spring but is not cylindrical"
            )));
        }
        if let Some(s) = &self.spring {
            if !(s.stiffness > 0.0) || !(s.rest_length > 0.0) {
                return Err(Error::Config(format!(
                    "joint {index} spring needs positive stiffness and rest length"
                )));
            }
        }
        Ok(())
    }
}
