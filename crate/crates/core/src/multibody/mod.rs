//! Constrained rigid-body systems: revolute/cylindrical joints, propensity
//! moments, joint springs, Langevin forcing, and stabilized DAE integration.

mod body;
mod constraint;
mod euler;
mod forces;
mod integrate;
mod joint;
mod solve;
mod system;

pub mod io;

pub use body::RigidBody;
pub use constraint::{dependent_rows, ConstraintAssembly};
pub use euler::{skew, EulerParams};
pub use forces::{
    gravity_forces, gyroscopic_forces, joint_moments, joint_spring_forces, langevin_force,
    propensity_moments,
};
pub use integrate::{dia_step, StepOptions, StepReport};
pub use joint::{Joint, JointKind, JointSpring};
pub use solve::{
    augmented_lagrangian_accels, build_saddle, mass_matrix, solve_accelerations,
    AssembledSaddleSystem, AugLagParams, SaddleSolution, Solver, Stabilizer,
};
pub use system::{LangevinBath, MultibodySystem};
